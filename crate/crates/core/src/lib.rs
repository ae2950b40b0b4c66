//! Simulation and verification of addressable quantum circuits.
//!
//! A circuit is a set of sectors, one per address. Each sector holds a
//! target address and an input and output register of address words and
//! data words. One time step scatters every gate and then transports outputs
//! to the inputs their sectors point at.

pub mod circuits;
pub mod document;
pub mod composition;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod landmark;
pub mod model;
pub mod nameblind;
pub mod operator;
pub mod qcgd;
pub mod renaming;

pub use error::{AqcError, Result};
pub use model::{Address, AddressWord, BasisState, DataWord, Register, Sector, SparseState, Symbol};
