//! Parallel composition, buffer sectors, connection and concatenation.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{AqcError, Result};
use crate::evolution::{Circuit, Skeleton};
use crate::model::{Address, BasisState, SparseState};
use crate::operator::OpKind;

/// Buffer sectors of a circuit. Ingoing: a singleton F gate whose address
/// occurs in no register of the initial state. Outgoing: a singleton F gate
/// whose sector is all-ε in every initial term.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BufferReport {
    pub ingoing: BTreeSet<Address>,
    pub outgoing: BTreeSet<Address>,
}

pub fn detect_buffers(c: &Circuit) -> BufferReport {
    let mut report = BufferReport::default();
    let mentioned: BTreeSet<Address> = c.initial.terms().keys().flat_map(|b| b.stored_addresses()).collect();
    for op in c.skeleton.operators() {
        let [a] = op.gate[..] else { continue };
        if !matches!(op.kind, OpKind::Flip) {
            continue;
        }
        if !mentioned.contains(&a) {
            report.ingoing.insert(a);
        }
        if c.initial.terms().keys().all(|b| b.sector(a).is_some_and(|s| s.is_empty())) {
            report.outgoing.insert(a);
        }
    }
    report
}

/// Renames every address of the circuit. Landmarks are dropped since they
/// refer to the old names.
pub fn relabel(c: &Circuit, f: &impl Fn(Address) -> Address) -> Result<Circuit> {
    let skeleton = c.skeleton.relabel(f)?;
    let initial = c.initial.map_basis(|b| b.relabel(f));
    Circuit::new(&c.name, skeleton, initial)
}

fn tensor(states: &[&SparseState]) -> SparseState {
    let mut acc = SparseState::basis(BasisState::new(BTreeMap::new()));
    for s in states {
        let mut next = SparseState::new();
        for (x, cx) in acc.iter() {
            for (y, cy) in s.iter() {
                let mut m = x.sectors().clone();
                m.extend(y.sectors().iter().map(|(a, s)| (*a, s.clone())));
                next.add(BasisState::new(m), cx * cy);
            }
        }
        next.prune();
        acc = next;
    }
    acc
}

/// Connects the circuits along the pairs (ins[j], outs[j]): the ingoing
/// buffer ins[j] is removed and the outgoing buffer outs[j] takes over its
/// register contents.
pub fn connect(ins: &[Address], outs: &[Address], circuits: &[&Circuit]) -> Result<Circuit> {
    if ins.len() != outs.len() {
        return Err(AqcError::SizeMismatch(ins.len(), outs.len()));
    }
    let mut all: BTreeSet<Address> = BTreeSet::new();
    for c in circuits {
        for &a in c.skeleton.addresses() {
            if !all.insert(a) {
                return Err(AqcError::AddressClash(a));
            }
        }
    }
    let ins_set: BTreeSet<Address> = ins.iter().copied().collect();
    let outs_set: BTreeSet<Address> = outs.iter().copied().collect();
    if let Some(a) = ins_set.intersection(&outs_set).next() {
        return Err(AqcError::OverlapError(*a));
    }
    for list in [ins, outs] {
        let mut seen = BTreeSet::new();
        if let Some(a) = list.iter().find(|a| !seen.insert(**a)) {
            return Err(AqcError::DuplicateAddress(*a));
        }
    }
    let mut buffers = BufferReport::default();
    for c in circuits {
        let r = detect_buffers(c);
        buffers.ingoing.extend(r.ingoing);
        buffers.outgoing.extend(r.outgoing);
    }
    if let Some(a) = ins.iter().find(|a| !buffers.ingoing.contains(a)) {
        return Err(AqcError::NotABuffer(*a));
    }
    if let Some(a) = outs.iter().find(|a| !buffers.outgoing.contains(a)) {
        return Err(AqcError::NotABuffer(*a));
    }

    let operators = circuits
        .iter()
        .flat_map(|c| c.skeleton.operators().iter())
        .filter(|op| !(op.gate.len() == 1 && ins_set.contains(&op.gate[0])))
        .cloned()
        .collect();
    let alphabet: BTreeSet<_> = circuits.iter().flat_map(|c| c.skeleton.alphabet().iter().cloned()).collect();
    let max_len = circuits.iter().map(|c| c.skeleton.max_data_len()).sum();
    let skeleton = Skeleton::new(all.difference(&ins_set).copied(), operators, alphabet, max_len)?;

    let remap: BTreeMap<Address, Address> = ins.iter().copied().zip(outs.iter().copied()).collect();
    let rename = |a: Address| remap.get(&a).copied().unwrap_or(a);
    let joint = tensor(&circuits.iter().map(|c| &c.initial).collect::<Vec<_>>());
    let initial = joint.map_basis(|b| {
        let mut m = b.sectors().clone();
        for (&i, &o) in &remap {
            let moved = m.remove(&i).unwrap_or_default();
            m.insert(o, moved);
        }
        BasisState::new(m).map_registers(&rename)
    });
    let name = circuits.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join("+");
    Circuit::new(&name, skeleton, initial)
}

pub fn parallel(a: &Circuit, b: &Circuit) -> Result<Circuit> {
    connect(&[], &[], &[a, b])
}

/// Feeds outgoing buffers of `a` into ingoing buffers of `b`.
pub fn concatenate(a: &Circuit, b: &Circuit, ins: &[Address], outs: &[Address]) -> Result<Circuit> {
    let (ra, rb) = (detect_buffers(a), detect_buffers(b));
    if let Some(x) = ins.iter().find(|x| !rb.ingoing.contains(x)) {
        return Err(AqcError::NotABuffer(*x));
    }
    if let Some(x) = outs.iter().find(|x| !ra.outgoing.contains(x)) {
        return Err(AqcError::NotABuffer(*x));
    }
    connect(ins, outs, &[a, b])
}

/// Equal skeletons and initial states within `tol`.
pub fn same_circuit(a: &Circuit, b: &Circuit, tol: f64) -> bool {
    a.skeleton == b.skeleton && a.initial.distance(&b.initial) <= tol
}
