use thiserror::Error;

use crate::model::Address;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AqcError {
    #[error("address {0} occurs more than once")]
    DuplicateAddress(Address),
    #[error("address {0} is not part of the circuit")]
    UnknownAddress(Address),
    #[error("address word repeats letter {0}")]
    RepeatedLetter(Address),
    #[error("data error: {0}")]
    Data(String),
    #[error("invalid gate partition: {0}")]
    Partition(String),
    #[error("rule {rule} of gate {gate} maps to a superposition of norm {norm}")]
    NonUnitaryRule { gate: String, rule: usize, norm: f64 },
    #[error("overlapping rules {first} and {second} disagree on a basis state")]
    OverlappingRules { first: usize, second: usize },
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("invalid renaming: {0}")]
    InvalidRenaming(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("address {0} is not a buffer of the required kind")]
    NotABuffer(Address),
    #[error("size mismatch: {0} ingoing vs {1} outgoing")]
    SizeMismatch(usize, usize),
    #[error("ingoing and outgoing sets overlap at {0}")]
    OverlapError(Address),
    #[error("address {0} is used by more than one circuit")]
    AddressClash(Address),
    #[error("entry in sector {sector} carries {photons} photons, limit is {limit}")]
    PhotonOverflow { sector: Address, photons: usize, limit: usize },
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("empty block: {0}")]
    EmptyBlock(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, AqcError>;
