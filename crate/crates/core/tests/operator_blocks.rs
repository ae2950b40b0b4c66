use aqc::circuits::{gates, phase_breaking_circuit, quantum_switch};
use aqc::exec::Exec;
use aqc::model::Address;
use aqc::nameblind::*;
use aqc::operator::{GateOperator, OpKind};
use aqc::renaming::reachable_probes;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn switch(m: usize) -> aqc::evolution::Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let u = gates::random_unitary(1 << m, &mut rng);
    let v = gates::random_unitary(1 << m, &mut rng);
    let psi = gates::random_state(1 << m, &mut rng);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    quantum_switch(&u, &v, m, (Complex64::new(s, 0.0), Complex64::new(0.0, s)), &psi).unwrap()
}

#[test]
fn switch_blocks_are_mm_nameblind_with_equal_diagonals() {
    let c = switch(1);
    let idx = c.skeleton.operators().iter().position(|o| o.name == "S25").unwrap();
    let op = &c.skeleton.operators()[idx];
    let probes = &reachable_probes(&c, 10).unwrap()[idx];
    let family = block_family(op, probes).unwrap();
    assert!(family.len() >= 6, "{}", family.len());
    let pool: Vec<Address> = [1, 3, 4, 6].map(Address).to_vec();
    let mut nontrivial = 0;
    for blk in &family {
        let (mat, basis) = operator_mn_matrix(op, &pool, &blk.from, &blk.to).unwrap();
        let rep = is_nameblind(&mat, &basis, CheckMode::Full, Exec::Sequential).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let s = factorial(blk.m);
        let first = mat.view((0, 0), (s, s)).into_owned();
        let (ext, _) = extend_mn_nameblind(&first, blk.m, &pool).unwrap();
        assert!((ext - &mat).camax() < 1e-12);
        // Each column holds exactly one unit entry.
        for j in 0..first.ncols() {
            let nz: Vec<_> = first.column(j).iter().filter(|z| z.norm() > 1e-12).copied().collect();
            assert_eq!(nz.len(), 1);
            assert!((nz[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        if blk.m >= 2 {
            nontrivial += 1;
        }
    }
    assert!(nontrivial > 0);
}

#[test]
fn identity_gives_identity_block() {
    let c = switch(1);
    let probes = &reachable_probes(&c, 2).unwrap()[1];
    let id = GateOperator::new(vec![Address(2), Address(5)], "I", OpKind::Identity).unwrap();
    let fam = block_family(&id, probes).unwrap();
    for b in fam {
        assert_eq!(b.from, b.to);
        let basis = WordBasis::new(b.m, [1, 3, 4, 6].map(Address), WordOrder::Lex).unwrap();
        let m = operator_block(&id, &basis, &b.from, &b.to).unwrap();
        assert_eq!(m, CMatrix::identity(basis.dim(), basis.dim()));
    }
}

#[test]
fn phase_breaking_block_is_not_nameblind() {
    let c = phase_breaking_circuit();
    let op = &c.skeleton.operators()[0];
    let probes = &reachable_probes(&c, 1).unwrap()[0];
    let fam = block_family(op, probes).unwrap();
    let blk = &fam[0];
    let pool = [2, 3, 4].map(Address);
    let (mat, basis) = operator_mn_matrix(op, &pool, &blk.from, &blk.to).unwrap();
    let rep = is_nameblind(&mat, &basis, CheckMode::Full, Exec::Sequential).unwrap();
    assert!(!rep.passed());
    assert!((rep.max_defect - 2.0).abs() < 1e-12);
}
