//! Ready-made circuits: Bell-state preparation, the quantum switch, the
//! polarizing beam splitter, and two small fixtures.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{AqcError, Result};
use crate::evolution::{Circuit, Skeleton};
use crate::landmark::{Landmark, Predicate};
use crate::model::{Address, AddressWord, BasisState, DataWord, Register, Sector, SparseState, Symbol};
use crate::operator::{photon_symbol, DataUnitary, GateOperator, OpKind, Rule, SectorPat, Side};

pub type CMatrix = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn a(x: u32) -> Address {
    Address(x)
}

/// Standard single- and two-qubit gates. Two-qubit gates take the first
/// symbol of a data word as the most significant qubit.
pub mod gates {
    use super::*;

    pub fn hadamard() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
    }

    pub fn identity(n: usize) -> CMatrix {
        CMatrix::identity(n, n)
    }

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn pauli_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }

    pub fn cnot() -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        for (r, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            m[(r, col)] = c(1.0, 0.0);
        }
        m
    }

    pub fn kron(x: &CMatrix, y: &CMatrix) -> CMatrix {
        x.kronecker(y)
    }

    /// Haar-random unitary: QR of a complex Gaussian matrix with the phases
    /// of R's diagonal moved into Q.
    pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
        let z = CMatrix::from_fn(dim, dim, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c(re, im)
        });
        let qr = z.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for j in 0..dim {
            let d = r[(j, j)];
            let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
            for i in 0..dim {
                q[(i, j)] *= ph;
            }
        }
        q
    }

    /// Uniformly random unit vector.
    pub fn random_state(dim: usize, rng: &mut impl Rng) -> Vec<Complex64> {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    pub fn rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }
}

/// Bit string of `x` with `m` symbols, most significant first.
pub fn bits(x: usize, m: usize) -> DataWord {
    DataWord::new((0..m).rev().map(|k| Symbol::new(if x >> k & 1 == 1 { "1" } else { "0" })).collect())
}

fn binary() -> [Symbol; 2] {
    [Symbol::new("0"), Symbol::new("1")]
}

fn flip(x: u32) -> GateOperator {
    GateOperator { gate: vec![a(x)], name: "F".into(), kind: OpKind::Flip }
}

fn sector(target: Option<u32>, in_addr: &[u32], in_data: DataWord, out_addr: &[u32], out_data: DataWord) -> Sector {
    Sector {
        target: target.map(Address),
        input: Register::new(AddressWord::from_u32s(in_addr).expect("distinct"), in_data),
        output: Register::new(AddressWord::from_u32s(out_addr).expect("distinct"), out_data),
    }
}

fn assemble(addresses: &[u32], filled: Vec<(u32, Sector)>) -> BasisState {
    let mut m: BTreeMap<Address, Sector> = addresses.iter().map(|&x| (a(x), Sector::empty())).collect();
    for (x, s) in filled {
        m.insert(a(x), s);
    }
    BasisState::new(m)
}

fn register_landmark(name: &str, steps: usize, sector: u32, side: Side, expected: Vec<(Complex64, DataWord)>, tol: f64) -> Landmark {
    Landmark {
        name: name.into(),
        steps,
        scattered: false,
        check: Predicate::RegisterData { sector: a(sector), side, expected, up_to_phase: false, tol },
    }
}

/// Bell-state preparation on four singleton gates: F, F·(H⊗I), F·CNOT, F.
/// Data "00" starts in sector 1 and ends as (|00⟩ + |11⟩)/√2 in the
/// output of sector 4 after four applications of G.
pub fn bell_circuit() -> Circuit {
    let h_i = gates::kron(&gates::hadamard(), &gates::identity(2));
    let on_input = |m: CMatrix| OpKind::DataUnitary(DataUnitary::qubits(0, Side::Input, 2, gates::rows(&m)));
    let ops = vec![
        flip(1),
        GateOperator { gate: vec![a(2)], name: "F.H".into(), kind: OpKind::Sequence { ops: vec![on_input(h_i), OpKind::Flip] } },
        GateOperator { gate: vec![a(3)], name: "F.CNOT".into(), kind: OpKind::Sequence { ops: vec![on_input(gates::cnot()), OpKind::Flip] } },
        flip(4),
    ];
    let skel = Skeleton::new([1, 2, 3, 4].map(a), ops, binary(), 2).expect("valid bell skeleton");
    let e = DataWord::empty;
    let init = assemble(
        &[1, 2, 3, 4],
        vec![
            (1, sector(Some(2), &[], DataWord::from_chars("00"), &[], e())),
            (2, sector(Some(3), &[], e(), &[], e())),
            (3, sector(Some(4), &[], e(), &[], e())),
        ],
    );
    let mut circ = Circuit::new("bell", skel, SparseState::basis(init)).expect("valid bell state");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let w = DataWord::from_chars;
    let bell = vec![(c(s, 0.0), w("00")), (c(s, 0.0), w("11"))];
    circ.landmarks = vec![
        register_landmark("label 2: data in sector 2", 1, 2, Side::Input, vec![(c(1.0, 0.0), w("00"))], 1e-12),
        register_landmark("label 3: after H", 2, 3, Side::Input, vec![(c(s, 0.0), w("00")), (c(s, 0.0), w("10"))], 1e-12),
        register_landmark("label 4: after CNOT", 3, 4, Side::Input, bell.clone(), 1e-12),
        register_landmark("label 5: Bell state in output of sector 4", 4, 4, Side::Output, bell.clone(), 1e-12),
        register_landmark("label 6: handed back to output of sector 3", 5, 3, Side::Output, bell, 1e-12),
    ];
    circ
}

fn pat(t: &str, ia: &str, id: &str, oa: &str, od: &str) -> SectorPat {
    SectorPat::parse(t, ia, id, oa, od).expect("static pattern")
}

/// Fold/unfold swap of the middle sectors: (T = t, O = (ā, q̄)) with empty
/// input exchanges with (T = ε, I = (tā, q̄)) with empty output. Fires only
/// for non-empty data.
pub fn fold_rules() -> Vec<Rule> {
    let folded = pat("", "$t *a", "$x *q", "", "");
    let open = pat("$t", "", "", "*a", "$x *q");
    vec![Rule::map(vec![open.clone()], vec![folded.clone()]), Rule::map(vec![folded], vec![open])]
}

/// Rules of the two-sector gate {2, 5} of the switch, in operator order
/// (sector 2, sector 5). `m` is the number of data qubits before the
/// control symbol.
pub fn switch_rules(m: usize) -> Vec<Rule> {
    let q = format!("*q{{{m}}}");
    let qc = |c: &str| format!("{q} {c}");
    let mut rules = Vec::new();
    // Route on the control: 0 sends data to the first listed sector, 1 to the second.
    for (cbit, target, rest_head) in [("0", "$t", "$a *r"), ("1", "$a", "$t *r")] {
        let entry = vec![pat("", "", &qc(cbit), "$t $a *r", ""), pat("$b", "", "", "", "")];
        let routed = vec![pat(target, "", "", rest_head, &qc(cbit)), pat("$b", "", "", "", "")];
        rules.push((entry, routed));
    }
    // Sector 5 keeps the data, sends the control back, remembers its target.
    let arrive = vec![pat("$b", "", "", "", ""), pat("$t", "", &qc("$c"), "", "")];
    let parked = vec![pat("$b", "", "", "", ""), pat("", "", "$c", "$t", &q)];
    rules.push((arrive, parked));
    // Control returns: restore the address word of sector 2 and release the data.
    for (cbit, word) in [("0", "$t $b *r"), ("1", "$b $t *r")] {
        let back = vec![pat("$t", "", "", "$b *r", cbit), pat("", "", "", "$a", &q)];
        let merged = vec![pat("", "", "", word, ""), pat("$a", "", "", "", &qc(cbit))];
        rules.push((back, merged));
    }
    let mut ordered = Vec::new();
    for (x, y) in rules {
        ordered.push(Rule::map(x.clone(), y.clone()));
        ordered.push(Rule::map(y, x));
    }
    ordered
}

/// Quantum switch on addresses 1..6. The control is the last data symbol:
/// 0 applies U then V, 1 applies V then U.
pub fn quantum_switch(u: &CMatrix, v: &CMatrix, m: usize, control: (Complex64, Complex64), psi: &[Complex64]) -> Result<Circuit> {
    let dim = 1usize << m;
    if u.nrows() != dim || v.nrows() != dim || psi.len() != dim {
        return Err(AqcError::DimensionMismatch { expected: dim, got: psi.len() });
    }
    let mut circ = switch_skeleton_only(u, v, m)?;
    let addrs = [1, 2, 3, 4, 5, 6];
    let mut init = SparseState::new();
    for (cbit, amp) in [(0usize, control.0), (1, control.1)] {
        for (x, p) in psi.iter().enumerate() {
            let mut word = bits(x, m).symbols().to_vec();
            word.push(Symbol::new(if cbit == 1 { "1" } else { "0" }));
            let b = assemble(
                &addrs,
                vec![
                    (1, sector(Some(2), &[], DataWord::new(word), &[], DataWord::empty())),
                    (2, sector(None, &[], DataWord::empty(), &[3, 4, 5], DataWord::empty())),
                    (5, sector(Some(6), &[], DataWord::empty(), &[], DataWord::empty())),
                ],
            );
            init.add(b, amp * p);
        }
    }
    init.prune();
    circ.skeleton.validate_state(&init)?;
    circ.initial = init;
    let expected = switch_output(u, v, m, control, psi);
    let s2 = sector(None, &[], DataWord::empty(), &[3, 4, 5], DataWord::empty());
    let s5 = sector(Some(6), &[], DataWord::empty(), &[], DataWord::empty());
    circ.landmarks = vec![
        register_landmark("label 9: data in input of sector 6", 8, 6, Side::Input, expected.clone(), 1e-9),
        Landmark { name: "label 9: sector 2 restored".into(), steps: 8, scattered: false, check: Predicate::SectorConfig { sector: a(2), expected: s2, tol: 1e-9 } },
        Landmark { name: "label 9: sector 5 restored".into(), steps: 8, scattered: false, check: Predicate::SectorConfig { sector: a(5), expected: s5, tol: 1e-9 } },
        register_landmark("label 10: data in output of sector 6", 9, 6, Side::Output, expected, 1e-9),
    ];
    Ok(circ)
}

fn switch_skeleton_only(u: &CMatrix, v: &CMatrix, m: usize) -> Result<Circuit> {
    let lift = |g: &CMatrix| OpKind::DataUnitary(DataUnitary::qubits(0, Side::Input, m + 1, gates::rows(g)));
    let fold = OpKind::Rules { rules: fold_rules() };
    let ops = vec![
        flip(1),
        GateOperator::new(vec![a(2), a(5)], "S25", OpKind::Rules { rules: switch_rules(m) })?,
        GateOperator::new(vec![a(3)], "M34.LU", OpKind::Sequence { ops: vec![lift(u), fold.clone()] })?,
        GateOperator::new(vec![a(4)], "M34.LV", OpKind::Sequence { ops: vec![lift(v), fold] })?,
        flip(6),
    ];
    let skel = Skeleton::new([1, 2, 3, 4, 5, 6].map(a), ops, binary(), m + 1)?;
    Ok(Circuit { name: "switch".into(), skeleton: skel, initial: SparseState::new(), landmarks: Vec::new() })
}

/// Switch with the initial sector-1 data left empty, ready to be fed by
/// another circuit. Sector 1 still points at sector 2.
pub fn switch_skeleton(u: &CMatrix, v: &CMatrix, m: usize) -> Result<Circuit> {
    let mut circ = switch_skeleton_only(u, v, m)?;
    let b = assemble(
        &[1, 2, 3, 4, 5, 6],
        vec![
            (1, sector(Some(2), &[], DataWord::empty(), &[], DataWord::empty())),
            (2, sector(None, &[], DataWord::empty(), &[3, 4, 5], DataWord::empty())),
            (5, sector(Some(6), &[], DataWord::empty(), &[], DataWord::empty())),
        ],
    );
    circ.initial = SparseState::basis(b);
    circ.skeleton.validate_state(&circ.initial)?;
    Ok(circ)
}

/// α·VU|ψ⟩|0⟩ + β·UV|ψ⟩|1⟩ as data words.
pub fn switch_output(u: &CMatrix, v: &CMatrix, m: usize, control: (Complex64, Complex64), psi: &[Complex64]) -> Vec<(Complex64, DataWord)> {
    let p = CMatrix::from_column_slice(psi.len(), 1, psi);
    let mut out = Vec::new();
    for (cbit, amp, w) in [("0", control.0, v * u * &p), ("1", control.1, u * v * &p)] {
        for x in 0..psi.len() {
            let mut word = bits(x, m).symbols().to_vec();
            word.push(Symbol::new(cbit));
            out.push((amp * w[(x, 0)], DataWord::new(word)));
        }
    }
    out
}

/// One input of the beam splitter: superposition of photon counts (V, H).
pub type PhotonEntry = Vec<(Complex64, (usize, usize))>;

pub const PBS_V: [usize; 4] = [1, 0, 3, 2];
pub const PBS_H: [usize; 4] = [2, 3, 0, 1];

/// Beam splitter on gate {1,2,3,4} with buffers 5..8. Entry `i` is placed in
/// the input of sector `i + 5`; vertical photons leave through the partner
/// given by {1↔2, 3↔4}, horizontal ones through {1↔3, 2↔4}.
pub fn pbs_circuit(max_photons: usize, entries: &[PhotonEntry; 4]) -> Result<Circuit> {
    for (i, e) in entries.iter().enumerate() {
        for (_, (v, h)) in e {
            if v + h > max_photons {
                return Err(AqcError::PhotonOverflow { sector: a(i as u32 + 5), photons: v + h, limit: max_photons });
            }
        }
    }
    let mut ops = vec![GateOperator::new(
        vec![a(1), a(2), a(3), a(4)],
        "PBS",
        OpKind::Pbs { v: PBS_V.to_vec(), h: PBS_H.to_vec() },
    )?];
    ops.extend((5..=8).map(flip));
    let mut alphabet = Vec::new();
    for v in 0..=max_photons {
        for h in 0..=max_photons - v {
            if v + h > 0 {
                alphabet.push(photon_symbol(v, h));
            }
        }
    }
    let skel = Skeleton::new((1..=8).map(a), ops, alphabet, 1)?;
    let word = |(v, h): (usize, usize)| if v + h == 0 { DataWord::empty() } else { DataWord::new(vec![photon_symbol(v, h)]) };
    let mut terms = vec![(c(1.0, 0.0), Vec::new())];
    for e in entries {
        let mut next = Vec::new();
        for (amp, words) in &terms {
            let options: PhotonEntry = if e.is_empty() { vec![(c(1.0, 0.0), (0, 0))] } else { e.clone() };
            for (d, vh) in options {
                let mut w: Vec<DataWord> = words.clone();
                w.push(word(vh));
                next.push((amp * d, w));
            }
        }
        terms = next;
    }
    let init = SparseState::from_terms(terms.into_iter().map(|(amp, words)| {
        let mut filled = Vec::new();
        for i in 1..=4u32 {
            filled.push((i, sector(Some(i + 4), &[], DataWord::empty(), &[], DataWord::empty())));
            filled.push((i + 4, sector(Some(i), &[], words[i as usize - 1].clone(), &[], DataWord::empty())));
        }
        (assemble(&[1, 2, 3, 4, 5, 6, 7, 8], filled), amp)
    }));
    Circuit::new("pbs", skel, init)
}

/// A circuit whose gate {1} multiplies by −1 whenever its target is 4:
/// unitary, but not nameblind.
pub fn phase_breaking_circuit() -> Circuit {
    let any = pat("4", "*a", "*b", "*c", "*d");
    let rule = Rule::new(vec![any.clone()], vec![(c(-1.0, 0.0), vec![any])]);
    let ops = vec![
        GateOperator { gate: vec![a(1)], name: "phase".into(), kind: OpKind::Rules { rules: vec![rule] } },
        flip(2),
        flip(3),
        flip(4),
    ];
    let skel = Skeleton::new([1, 2, 3, 4].map(a), ops, [Symbol::new("0")], 1).expect("valid fixture");
    let init = assemble(&[1, 2, 3, 4], vec![(1, sector(Some(3), &[], DataWord::from_chars("0"), &[], DataWord::empty()))]);
    Circuit::new("phase-breaking", skel, SparseState::basis(init)).expect("valid fixture")
}

/// One idle sector.
pub fn empty_circuit() -> Circuit {
    let skel = Skeleton::new([a(1)], vec![GateOperator { gate: vec![a(1)], name: "I".into(), kind: OpKind::Identity }], [], 0)
        .expect("valid fixture");
    Circuit::new("empty", skel, SparseState::basis(BasisState::vacuum([a(1)]))).expect("valid fixture")
}
