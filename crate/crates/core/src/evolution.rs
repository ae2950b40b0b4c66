//! Circuit skeletons and the evolution G = T ∘ S.
//!
//! `scatter` (S) applies every gate operator; gates are disjoint so the
//! order does not matter. `transport` (T) swaps, for every sector `i` with
//! target `j`, the output register of `i` with the input register of `j`.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::error::{AqcError, Result};
use crate::exec::Exec;
use crate::landmark::Landmark;
use crate::model::{check_data, Address, BasisState, Sector, SparseState, Symbol};
use crate::operator::{GateOperator, Local};

/// Static description of a circuit: addresses, gate partition with one
/// operator per gate, data alphabet and maximum data-word length.
#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    addresses: BTreeSet<Address>,
    operators: Vec<GateOperator>,
    alphabet: BTreeSet<Symbol>,
    max_data_len: usize,
}

impl Skeleton {
    /// Validates that the operators' gates partition `addresses`.
    pub fn new(
        addresses: impl IntoIterator<Item = Address>,
        mut operators: Vec<GateOperator>,
        alphabet: impl IntoIterator<Item = Symbol>,
        max_data_len: usize,
    ) -> Result<Self> {
        let addresses: BTreeSet<Address> = addresses.into_iter().collect();
        let mut covered = BTreeSet::new();
        for op in &operators {
            op.validate()?;
            for &a in &op.gate {
                if !addresses.contains(&a) {
                    return Err(AqcError::UnknownAddress(a));
                }
                if !covered.insert(a) {
                    return Err(AqcError::Partition(format!("address {a} belongs to two gates")));
                }
            }
        }
        if let Some(a) = addresses.difference(&covered).next() {
            return Err(AqcError::Partition(format!("address {a} has no gate")));
        }
        operators.sort_by_key(|op| op.gate.iter().min().copied());
        Ok(Skeleton { addresses, operators, alphabet: alphabet.into_iter().collect(), max_data_len })
    }

    pub fn addresses(&self) -> &BTreeSet<Address> {
        &self.addresses
    }

    pub fn operators(&self) -> &[GateOperator] {
        &self.operators
    }

    pub fn alphabet(&self) -> &BTreeSet<Symbol> {
        &self.alphabet
    }

    pub fn max_data_len(&self) -> usize {
        self.max_data_len
    }

    /// Gates as sorted address sets, ordered by least member.
    pub fn gates(&self) -> Vec<Vec<Address>> {
        self.operators
            .iter()
            .map(|op| {
                let mut g = op.gate.clone();
                g.sort();
                g
            })
            .collect()
    }

    pub fn operator_of(&self, a: Address) -> Option<&GateOperator> {
        self.operators.iter().find(|op| op.gate.contains(&a))
    }

    /// Builds a basis state from a per-sector assignment. Sectors missing
    /// from the assignment are rejected, as are sectors outside the circuit.
    pub fn make_state(&self, assignment: BTreeMap<Address, Sector>) -> Result<BasisState> {
        if let Some(a) = assignment.keys().find(|a| !self.addresses.contains(a)) {
            return Err(AqcError::UnknownAddress(*a));
        }
        if let Some(a) = self.addresses.iter().find(|a| !assignment.contains_key(a)) {
            return Err(AqcError::Invariant(format!("sector {a} is not assigned")));
        }
        let b = BasisState::new(assignment);
        self.validate_basis(&b)?;
        Ok(b)
    }

    pub fn validate_basis(&self, b: &BasisState) -> Result<()> {
        if !b.addresses().eq(self.addresses.iter().copied()) {
            return Err(AqcError::Invariant("basis state sectors differ from the circuit addresses".into()));
        }
        b.check_unique()?;
        for s in b.sectors().values() {
            check_data(&s.input.data, &self.alphabet, self.max_data_len)?;
            check_data(&s.output.data, &self.alphabet, self.max_data_len)?;
        }
        Ok(())
    }

    pub fn validate_state(&self, s: &SparseState) -> Result<()> {
        s.terms().keys().try_for_each(|b| self.validate_basis(b))
    }

    /// Renames sector positions, register contents and operator literals.
    pub fn relabel(&self, f: &impl Fn(Address) -> Address) -> Result<Skeleton> {
        Skeleton::new(
            self.addresses.iter().map(|&a| f(a)),
            self.operators.iter().map(|op| op.relabel(f)).collect(),
            self.alphabet.iter().cloned(),
            self.max_data_len,
        )
    }
}

/// A skeleton with an initial state and optional checkpoints.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub name: String,
    pub skeleton: Skeleton,
    pub initial: SparseState,
    pub landmarks: Vec<Landmark>,
}

impl Circuit {
    pub fn new(name: &str, skeleton: Skeleton, initial: SparseState) -> Result<Self> {
        skeleton.validate_state(&initial)?;
        Ok(Circuit { name: name.to_string(), skeleton, initial, landmarks: Vec::new() })
    }

    pub fn run(&self, k: usize) -> Result<SparseState> {
        run(&self.skeleton, &self.initial, k)
    }
}

/// Transport on one basis state. Every register takes part in at most one
/// swap because each address is targeted at most once.
pub fn transport_basis(b: &BasisState) -> BasisState {
    let pairs: Vec<(Address, Address)> =
        b.sectors().iter().filter_map(|(&i, s)| s.target.map(|j| (i, j))).collect();
    let mut next = b.clone();
    for (i, j) in pairs {
        if i == j {
            let s = next.sector_mut(i).expect("sector present");
            std::mem::swap(&mut s.input, &mut s.output);
            continue;
        }
        let out_i = next.sector(i).expect("sector present").output.clone();
        let in_j = match next.sector_mut(j) {
            Some(t) => std::mem::replace(&mut t.input, out_i),
            None => continue,
        };
        next.sector_mut(i).expect("sector present").output = in_j;
    }
    next
}

pub fn transport(state: &SparseState) -> SparseState {
    transport_with(state, Exec::default())
}

pub fn transport_with(state: &SparseState, exec: Exec) -> SparseState {
    let terms: Vec<(&BasisState, &Complex64)> = state.iter().collect();
    let out = exec.map(&terms, |(b, c)| (transport_basis(b), **c));
    SparseState::from_terms(out)
}

fn extract(b: &BasisState, gate: &[Address]) -> Result<Local> {
    gate.iter()
        .map(|&a| b.sector(a).cloned().ok_or(AqcError::UnknownAddress(a)))
        .collect()
}

fn write_back(b: &BasisState, gate: &[Address], local: Local) -> BasisState {
    let mut next = b.clone();
    for (&a, s) in gate.iter().zip(local) {
        next.insert(a, s);
    }
    next
}

/// Applies one gate operator to every term of `state`.
pub fn apply_gate_operator(op: &GateOperator, state: &SparseState) -> Result<SparseState> {
    let mut out = SparseState::new();
    for (b, c) in state.iter() {
        for (d, l) in op.apply(&extract(b, &op.gate)?)? {
            out.add(write_back(b, &op.gate, l), c * d);
        }
    }
    out.prune();
    Ok(out)
}

/// Scatter on one basis state, all gates in turn.
pub fn scatter_basis(skel: &Skeleton, b: &BasisState) -> Result<Vec<(Complex64, BasisState)>> {
    let mut cur = vec![(Complex64::new(1.0, 0.0), b.clone())];
    for op in skel.operators() {
        let mut next = Vec::with_capacity(cur.len());
        for (c, x) in &cur {
            for (d, l) in op.apply(&extract(x, &op.gate)?)? {
                next.push((c * d, write_back(x, &op.gate, l)));
            }
        }
        cur = next;
    }
    Ok(cur)
}

pub fn scatter(skel: &Skeleton, state: &SparseState) -> Result<SparseState> {
    scatter_with(skel, state, Exec::default())
}

pub fn scatter_with(skel: &Skeleton, state: &SparseState, exec: Exec) -> Result<SparseState> {
    let terms: Vec<(&BasisState, &Complex64)> = state.iter().collect();
    let parts = exec.try_map(&terms, |(b, c)| {
        Ok(scatter_basis(skel, b)?.into_iter().map(|(d, x)| (x, **c * d)).collect::<Vec<_>>())
    })?;
    let out = SparseState::from_terms(parts.into_iter().flatten());
    skel.validate_state(&out)?;
    Ok(out)
}

pub fn step(skel: &Skeleton, state: &SparseState) -> Result<SparseState> {
    step_with(skel, state, Exec::default())
}

pub fn step_with(skel: &Skeleton, state: &SparseState, exec: Exec) -> Result<SparseState> {
    Ok(transport_with(&scatter_with(skel, state, exec)?, exec))
}

/// k applications of G.
pub fn run(skel: &Skeleton, state: &SparseState, k: usize) -> Result<SparseState> {
    run_with(skel, state, k, Exec::default())
}

pub fn run_with(skel: &Skeleton, state: &SparseState, k: usize, exec: Exec) -> Result<SparseState> {
    let mut cur = state.clone();
    for _ in 0..k {
        cur = step_with(skel, &cur, exec)?;
    }
    Ok(cur)
}

/// States after 0, 1, ..., k applications of G.
pub fn trajectory(skel: &Skeleton, state: &SparseState, k: usize) -> Result<Vec<SparseState>> {
    let mut out = vec![state.clone()];
    for _ in 0..k {
        let next = step(skel, out.last().expect("non-empty"))?;
        out.push(next);
    }
    Ok(out)
}

/// Swaps the whole input and output registers of sector `a`.
pub fn flip_full(b: &BasisState, a: Address) -> Result<BasisState> {
    let mut next = b.clone();
    let s = next.sector_mut(a).ok_or(AqcError::UnknownAddress(a))?;
    std::mem::swap(&mut s.input, &mut s.output);
    Ok(next)
}

/// Swaps only the data words of sector `a`.
pub fn flip_data(b: &BasisState, a: Address) -> Result<BasisState> {
    let mut next = b.clone();
    let s = next.sector_mut(a).ok_or(AqcError::UnknownAddress(a))?;
    std::mem::swap(&mut s.input.data, &mut s.output.data);
    Ok(next)
}
