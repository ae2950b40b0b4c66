//! Seeded random small circuits: at most five addresses, at most two data
//! symbols, operators drawn from address-preserving primitives.

use std::collections::BTreeMap;

use aqc::circuits::{fold_rules, gates};
use aqc::evolution::{Circuit, Skeleton};
use aqc::model::{Address, AddressWord, BasisState, DataWord, Register, Sector, SparseState, Symbol};
use aqc::operator::{DataUnitary, GateOperator, OpKind, Rule, SectorPat, Side};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn swap_rule() -> Rule {
    let p = |t: &str, s: &str| SectorPat::parse(t, &format!("*{s}a"), &format!("*{s}b"), &format!("*{s}c"), &format!("*{s}d")).unwrap();
    Rule::map(vec![p("?t", "x"), p("?u", "y")], vec![p("?u", "y"), p("?t", "x")])
}

fn random_op(rng: &mut ChaCha8Rng, gate: Vec<Address>, max_len: usize, binary: bool) -> GateOperator {
    let unitary = |rng: &mut ChaCha8Rng| {
        let k = rng.gen_range(1..=max_len);
        let u = gates::random_unitary(1 << k, rng);
        let side = if rng.gen_bool(0.5) { Side::Input } else { Side::Output };
        OpKind::DataUnitary(DataUnitary::qubits(rng.gen_range(0..gate.len()), side, rng.gen_range(k..=max_len), gates::rows(&u)))
    };
    let mut choices = vec![0, 1, 2];
    if binary && max_len > 0 {
        choices.extend([3, 4]);
    }
    if gate.len() == 1 {
        choices.push(5);
    }
    if gate.len() == 2 {
        choices.push(6);
    }
    let kind = match *choices.choose(rng).unwrap() {
        0 => OpKind::Identity,
        1 => OpKind::Flip,
        2 => OpKind::FlipData,
        3 => unitary(rng),
        4 => OpKind::Sequence { ops: vec![unitary(rng), OpKind::Flip] },
        5 => OpKind::Rules { rules: fold_rules() },
        _ => OpKind::Rules { rules: vec![swap_rule()] },
    };
    GateOperator::new(gate, "g", kind).unwrap()
}

fn random_word(rng: &mut ChaCha8Rng, alphabet: &[Symbol], max_len: usize) -> DataWord {
    let len = rng.gen_range(0..=max_len);
    DataWord::new((0..len).map(|_| alphabet.choose(rng).unwrap().clone()).collect())
}

fn random_basis(rng: &mut ChaCha8Rng, n: u32, alphabet: &[Symbol], max_len: usize) -> BasisState {
    let mut targets: Vec<Option<Address>> = vec![None; n as usize];
    let mut words: Vec<[Vec<Address>; 2]> = vec![[Vec::new(), Vec::new()]; n as usize];
    for x in 1..=n {
        let s = rng.gen_range(0..n as usize);
        match rng.gen_range(0..4) {
            0 => {}
            1 if targets[s].is_none() => targets[s] = Some(Address(x)),
            1 => {}
            k => words[s][k - 2].push(Address(x)),
        }
    }
    let mut m = BTreeMap::new();
    for i in 0..n as usize {
        let [wi, wo] = words[i].clone();
        m.insert(
            Address(i as u32 + 1),
            Sector {
                target: targets[i],
                input: Register::new(AddressWord::new(wi).unwrap(), random_word(rng, alphabet, max_len)),
                output: Register::new(AddressWord::new(wo).unwrap(), random_word(rng, alphabet, max_len)),
            },
        );
    }
    BasisState::new(m)
}

pub fn random_circuit(seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=5u32);
    let binary = rng.gen_bool(0.7);
    let alphabet: Vec<Symbol> = if binary { vec![Symbol::new("0"), Symbol::new("1")] } else { vec![Symbol::new("0")] };
    let max_len = rng.gen_range(0..=2);
    let mut addrs: Vec<Address> = (1..=n).map(Address).collect();
    addrs.shuffle(&mut rng);
    let mut ops = Vec::new();
    let mut rest = &addrs[..];
    while !rest.is_empty() {
        let k = rng.gen_range(1..=rest.len().min(3));
        ops.push(random_op(&mut rng, rest[..k].to_vec(), max_len, binary));
        rest = &rest[k..];
    }
    let skel = Skeleton::new(addrs.iter().copied(), ops, alphabet.clone(), max_len).unwrap();
    let terms = rng.gen_range(1..=3);
    let mut st = SparseState::new();
    for _ in 0..terms {
        let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        st.add(random_basis(&mut rng, n, &alphabet, max_len), amp);
    }
    let norm = st.norm();
    let st = if norm < 1e-6 { SparseState::basis(BasisState::vacuum(addrs.iter().copied())) } else { st.scale(Complex64::new(1.0 / norm, 0.0)) };
    Circuit::new("random", skel, st).unwrap()
}
