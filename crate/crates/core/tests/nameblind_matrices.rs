use aqc::model::Address;
use aqc::nameblind::*;
use aqc::renaming::{adjacent_transposition, permutations, Renaming};
use aqc::exec::Exec;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn letters(n: usize) -> BTreeSet<Address> {
    (1..=n as u32).map(Address).collect()
}

#[test]
fn recursion_matches_direct_action() {
    for n in 2..=6 {
        let basis = WordBasis::full(n);
        for k in 1..n {
            let direct = renaming_permutation_matrix(&adjacent_transposition(k, &letters(n)).unwrap(), &basis);
            assert_eq!(transposition_matrix(n, k).unwrap(), direct, "n={n} k={k}");
        }
    }
}

#[test]
fn builders_land_in_their_class() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 2..=5 {
        for p in 0..n {
            let m = random_partially_nameblind(n, p, &mut rng);
            assert!(partial_defect(&m, n, p).unwrap() < 1e-10, "n={n} p={p}");
            if p + 1 < n {
                // Generic samples break the next transposition down.
                assert!(partial_defect(&m, n, p.saturating_sub(1)).unwrap() > 1e-3 || p == 0);
            }
        }
    }
}

fn sample_rank(n: usize, p: usize, rng: &mut ChaCha8Rng) -> usize {
    let count = param_count(n, p) + 4;
    let dim = factorial(n);
    let rows: Vec<_> = (0..count).map(|_| random_partially_nameblind(n, p, rng)).collect();
    let mat = DMatrix::<Complex64>::from_fn(count, dim * dim, |r, c| rows[r][(c / dim, c % dim)]);
    mat.rank(1e-8)
}

#[test]
fn layout_spans_the_whole_class() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 2..=4 {
        for p in 0..n {
            let orbits = commutant_dimension_partial(n, p).unwrap();
            assert_eq!(orbits, closed_form_dim(n, p), "n={n} p={p}");
            assert_eq!(param_count(n, p), orbits);
            assert_eq!(sample_rank(n, p, &mut rng), orbits, "n={n} p={p}");
        }
    }
}

#[test]
fn commutant_dimension_oracles_agree() {
    for n in 1..=3 {
        assert_eq!(commutant_dimension(n).unwrap(), commutant_dimension_dense(n).unwrap());
    }
    // Frozen from the dense rank and the orbit count: n! for each n.
    let expected = [1, 2, 6, 24, 120];
    for n in 1..=5 {
        assert_eq!(commutant_dimension(n).unwrap(), expected[n - 1]);
    }
    assert!(commutant_dimension(6).is_err());
}

fn block(m: &CMatrix, n: usize, i: usize, j: usize) -> CMatrix {
    let s = factorial(n - 1);
    m.view(((i - 1) * s, (j - 1) * s), (s, s)).into_owned()
}

#[test]
fn commutant_elements_follow_the_block_relations() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for n in 2..=4 {
        let m = random_commutant_element(n, &mut rng).unwrap();
        let rebuilt = build_nameblind(n, &block(&m, n, 1, 1), &block(&m, n, 1, 2)).unwrap();
        assert!((rebuilt - &m).camax() < 1e-10);
    }
}

#[test]
fn pure_layouts_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for n in 2..=5 {
        let d = random_pure_nameblind(n - 1, &mut rng);
        let b = random_pure_nameblind(n - 1, &mut rng);
        let a = pure_from_blocks(n, &d, &b).unwrap();
        let t = build_nameblind(n, &d, &b).unwrap();
        assert!((a - t).camax() < 1e-12, "n={n}");
    }
}

#[test]
fn pure_samples_commute_with_every_renaming() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for n in 2..=4 {
        let basis = WordBasis::full(n);
        let m = random_pure_nameblind(n, &mut rng);
        let addrs: Vec<Address> = letters(n).into_iter().collect();
        for img in permutations(&addrs) {
            let r = Renaming::new(addrs.iter().copied().zip(img).collect()).unwrap();
            let p = renaming_permutation_matrix(&r, &basis);
            assert!((&m * &p - &p * &m).camax() < 1e-12);
        }
        let rep = is_nameblind(&m, &basis, CheckMode::Full, Exec::Sequential).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.renamings, factorial(n) - 1);
    }
}

#[test]
fn two_by_two_nameblind_unitaries() {
    // Every 2×2 nameblind matrix is [[a, b], [b, a]]; unitary ones are the
    // u(φ, θ, ±) family.
    let basis = WordBasis::full(2);
    for &(phi, theta, plus) in &[(0.0, 0.0, true), (1.0, 0.4, true), (2.5, 1.3, false)] {
        let u = u_pm(phi, theta, plus);
        assert!(is_nameblind(&u, &basis, CheckMode::Full, Exec::Sequential).unwrap().passed());
        assert_eq!(u[(0, 0)], u[(1, 1)]);
        assert_eq!(u[(0, 1)], u[(1, 0)]);
    }
}

#[test]
fn mn_extension() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let d = random_pure_nameblind(2, &mut rng);
    let pool: Vec<Address> = (1..=4).map(Address).collect();
    let (m, basis) = extend_mn_nameblind(&d, 2, &pool).unwrap();
    assert_eq!(basis.dim(), 12);
    let rep = is_nameblind(&m, &basis, CheckMode::Full, Exec::Sequential).unwrap();
    assert!(rep.passed(), "{rep:?}");
    // A block that is not nameblind on its own subset is rejected.
    let bad = CMatrix::from_row_slice(2, 2, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)]);
    assert!(extend_mn_nameblind(&bad, 2, &pool).is_err());
}

#[test]
fn a_transposition_is_not_nameblind() {
    let r1 = transposition_matrix(3, 1).unwrap();
    let rep = is_nameblind(&r1, &WordBasis::full(3), CheckMode::Generators, Exec::Sequential).unwrap();
    assert!(!rep.passed());
    assert!(transposition_matrix(3, 3).is_err());
}

#[test]
fn u_pm_quarter_turn_is_i_swap() {
    let u = u_pm(0.0, std::f64::consts::FRAC_PI_2, true);
    let i = Complex64::new(0.0, 1.0);
    let expect = CMatrix::from_row_slice(2, 2, &[Complex64::new(0.0, 0.0), i, i, Complex64::new(0.0, 0.0)]);
    assert!((u - expect).camax() < 1e-15);
}

#[test]
fn mn_extension_edge_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let d = random_pure_nameblind(3, &mut rng);
    let (m, _) = extend_mn_nameblind(&d, 3, &[1, 2, 3].map(Address)).unwrap();
    assert_eq!(m, d);
    let z = CMatrix::from_element(1, 1, Complex64::new(0.5, -2.0));
    let (m, _) = extend_mn_nameblind(&z, 1, &[1, 2, 3].map(Address)).unwrap();
    assert_eq!(m, CMatrix::from_diagonal_element(3, 3, Complex64::new(0.5, -2.0)));
    for n in 2..=5 {
        for k in 1..=n {
            let d = random_pure_nameblind(k, &mut rng);
            let pool: Vec<Address> = (1..=n as u32).map(Address).collect();
            let (m, basis) = extend_mn_nameblind(&d, k, &pool).unwrap();
            let mode = if n <= 4 { CheckMode::Full } else { CheckMode::Generators };
            assert!(is_nameblind(&m, &basis, mode, Exec::Parallel).unwrap().passed(), "m={k} n={n}");
        }
    }
}

#[test]
fn closed_under_products_and_adjoints() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for n in 2..=4 {
        let basis = WordBasis::full(n);
        let a = random_commutant_element(n, &mut rng).unwrap();
        let b = random_partially_nameblind(n, 0, &mut rng);
        for m in [&a * &b, a.adjoint(), b.adjoint()] {
            let rep = is_nameblind(&m, &basis, CheckMode::Full, Exec::Sequential).unwrap();
            assert!(rep.max_defect < 1e-11, "n={n} {rep:?}");
        }
        assert!(is_nameblind(&b, &basis, CheckMode::Full, Exec::Sequential).unwrap().passed());
    }
}

#[test]
fn unconstrained_and_three_one_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let any = random_partially_nameblind(3, 3, &mut rng);
    assert!(partial_defect(&any, 3, 3).unwrap() == 0.0);
    let m = random_partially_nameblind(3, 1, &mut rng);
    let r2 = transposition_matrix(3, 2).unwrap();
    assert!((&m * &r2 - &r2 * &m).camax() < 1e-12);
    let r1 = transposition_matrix(3, 1).unwrap();
    assert!((&m * &r1 - &r1 * &m).camax() > 1e-3);
}
