//! Nameblind matrices.
//!
//! Matrices here act on the span of injective words of length m over a
//! sorted address set, in lexicographic order or grouped by letter set.
//! A matrix is nameblind when it commutes with every renaming of the
//! addresses; (n, p)-partially nameblind when it commutes with the adjacent
//! transpositions R_k for k > p.
//!
//! Block formulas use 1-based block indices: block (i, j) of an n!×n!
//! matrix over words of length n collects the rows whose first letter is the
//! i-th address and the columns whose first letter is the j-th.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{AqcError, Result};
use crate::exec::Exec;
use crate::model::{Address, DataWord, Sector};
use crate::operator::{GateOperator, Local};
use crate::renaming::{permutations, Renaming};

pub type CMatrix = DMatrix<Complex64>;

/// Defect below which a matrix counts as nameblind.
pub const NAMEBLIND_TOL: f64 = 1e-12;

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WordOrder {
    Lex,
    /// Grouped by letter set, sets ordered by their indicator integer
    /// (bit k set when the k-th smallest address is present), then lex.
    BySubset,
}

impl WordOrder {
    pub fn tag(self) -> &'static str {
        match self {
            WordOrder::Lex => "lex",
            WordOrder::BySubset => "subset",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        match s {
            "lex" => Ok(WordOrder::Lex),
            "subset" => Ok(WordOrder::BySubset),
            _ => Err(AqcError::Parse(format!("unknown word order {s:?}"))),
        }
    }
}

/// Ordered basis of injective words of length m.
#[derive(Clone, Debug)]
pub struct WordBasis {
    pub m: usize,
    pub addresses: Vec<Address>,
    pub order: WordOrder,
    words: Vec<Vec<Address>>,
    index: HashMap<Vec<Address>, usize>,
}

fn lex_words(letters: &[Address], m: usize) -> Vec<Vec<Address>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in letters.iter().enumerate() {
        let mut rest = letters.to_vec();
        rest.remove(i);
        for mut w in lex_words(&rest, m - 1) {
            w.insert(0, x);
            out.push(w);
        }
    }
    out
}

/// m-subsets of `letters` (sorted) in indicator order.
pub fn subsets_by_indicator(letters: &[Address], m: usize) -> Vec<Vec<Address>> {
    let n = letters.len();
    let mut masks: Vec<u64> = (0u64..1 << n).filter(|x| x.count_ones() as usize == m).collect();
    masks.sort();
    masks
        .into_iter()
        .map(|mask| (0..n).filter(|k| mask >> k & 1 == 1).map(|k| letters[k]).collect())
        .collect()
}

impl WordBasis {
    pub fn new(m: usize, addresses: impl IntoIterator<Item = Address>, order: WordOrder) -> Result<Self> {
        let set: BTreeSet<Address> = addresses.into_iter().collect();
        let addresses: Vec<Address> = set.into_iter().collect();
        if m > addresses.len() {
            return Err(AqcError::DimensionMismatch { expected: addresses.len(), got: m });
        }
        if addresses.len() > 10 {
            return Err(AqcError::ResourceLimit(format!("{} addresses", addresses.len())));
        }
        let words = match order {
            WordOrder::Lex => lex_words(&addresses, m),
            WordOrder::BySubset => subsets_by_indicator(&addresses, m).iter().flat_map(|s| lex_words(s, m)).collect(),
        };
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(WordBasis { m, addresses, order, words, index })
    }

    /// Words of length n over 1..n.
    pub fn full(n: usize) -> Self {
        WordBasis::new(n, (1..=n as u32).map(Address), WordOrder::Lex).expect("small basis")
    }

    pub fn dim(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[Vec<Address>] {
        &self.words
    }

    pub fn index_of(&self, w: &[Address]) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Index permutation induced by a renaming: word i goes to word σ(i).
    pub fn permutation(&self, r: &Renaming) -> Vec<usize> {
        self.words
            .iter()
            .map(|w| {
                let img: Vec<Address> = w.iter().map(|&a| r.apply(a)).collect();
                self.index[&img]
            })
            .collect()
    }
}

/// Permutation matrix of `r` on the basis: P|w⟩ = |r(w)⟩.
pub fn renaming_permutation_matrix(r: &Renaming, basis: &WordBasis) -> CMatrix {
    let sigma = basis.permutation(r);
    let mut p = CMatrix::zeros(basis.dim(), basis.dim());
    for (i, &s) in sigma.iter().enumerate() {
        p[(s, i)] = Complex64::new(1.0, 0.0);
    }
    p
}

fn swap_renaming(addresses: &[Address], k: usize) -> Renaming {
    let dom: BTreeSet<Address> = addresses.iter().copied().collect();
    Renaming::swap(&dom, addresses[k - 1], addresses[k]).expect("in domain")
}

/// R_k on words of length n over 1..n, built from the block recursion:
/// M_{k−1} on diagonal blocks before k, identity blocks exchanging k and
/// k+1, M_k on diagonal blocks after k+1.
pub fn transposition_matrix(n: usize, k: usize) -> Result<CMatrix> {
    if k == 0 || k >= n {
        return Err(AqcError::OutOfRange(format!("R_{k} on {n} letters")));
    }
    let size = factorial(n);
    let b = factorial(n - 1);
    let mut out = CMatrix::zeros(size, size);
    let one = CMatrix::identity(b, b);
    for i in 1..=n {
        let (row, col, blk) = if i < k {
            (i, i, transposition_matrix(n - 1, k - 1)?)
        } else if i == k {
            (k + 1, k, one.clone())
        } else if i == k + 1 {
            (k, k + 1, one.clone())
        } else {
            (i, i, transposition_matrix(n - 1, k)?)
        };
        out.view_mut(((row - 1) * b, (col - 1) * b), (b, b)).copy_from(&blk);
    }
    Ok(out)
}

/// Products M_a M_{a−1} … M_b (descending, empty when a < b) of
/// transposition matrices on n letters.
fn desc(ms: &[CMatrix], a: isize, b: isize, dim: usize) -> CMatrix {
    let mut out = CMatrix::identity(dim, dim);
    let mut k = a;
    while k >= b && k >= 1 {
        out *= &ms[k as usize - 1];
        k -= 1;
    }
    out
}

/// M_a M_{a+1} … M_b (ascending, empty when a > b).
fn asc(ms: &[CMatrix], a: isize, b: isize, dim: usize) -> CMatrix {
    let mut out = CMatrix::identity(dim, dim);
    let mut k = a.max(1);
    while k <= b {
        out *= &ms[k as usize - 1];
        k += 1;
    }
    out
}

fn transpositions(n: usize) -> Vec<CMatrix> {
    (1..n).map(|k| transposition_matrix(n, k).expect("valid k")).collect()
}

fn check_square(m: &CMatrix, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(AqcError::DimensionMismatch { expected: dim, got: m.nrows() });
    }
    Ok(())
}

/// max over k > p of max |M R_k − R_k M|, with R_k on n letters.
pub fn partial_defect(m: &CMatrix, n: usize, p: usize) -> Result<f64> {
    check_square(m, factorial(n))?;
    let basis = WordBasis::full(n);
    let mut worst: f64 = 0.0;
    for k in p + 1..n {
        let sigma = basis.permutation(&swap_renaming(&basis.addresses, k));
        worst = worst.max(permutation_defect(m, &sigma));
    }
    Ok(worst)
}

pub fn is_partially_nameblind(m: &CMatrix, n: usize, p: usize) -> Result<bool> {
    Ok(partial_defect(m, n, p)? <= NAMEBLIND_TOL)
}

/// max |M[σ(i)][σ(j)] − M[i][j]|, which is max |P M − M P| for the
/// permutation matrix of σ.
fn permutation_defect(m: &CMatrix, sigma: &[usize]) -> f64 {
    let n = sigma.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(sigma[i], sigma[j])] - m[(i, j)]).norm());
        }
    }
    worst
}

fn require(m: &CMatrix, n: usize, p: usize, what: &str) -> Result<()> {
    if n <= 1 || p + 1 >= n {
        return check_square(m, factorial(n));
    }
    let d = partial_defect(m, n, p)?;
    if d > NAMEBLIND_TOL {
        return Err(AqcError::PreconditionFailed(format!("{what} is not ({n},{p})-partially nameblind (defect {d:.3e})")));
    }
    Ok(())
}

/// Nameblind matrix on words of length n from a nameblind diagonal block D
/// and a block B commuting with R_k for k ≥ 2 (both on n−1 letters):
/// A_{i,j} = M_{j−2}…M_1 B M_1…M_{i−1} and A_{j,i} = M_{i−1}…M_1 B M_1…M_{j−2}
/// for i < j, D on the diagonal.
pub fn build_nameblind(n: usize, d: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if n < 2 {
        return Err(AqcError::PreconditionFailed("need at least two letters".into()));
    }
    require(d, n - 1, 0, "D")?;
    require(b, n - 1, 1, "B")?;
    build_partially_nameblind(n, 0, &PartialBlocks { a: vec![], row_seeds: vec![], col_seeds: vec![], d: Some(d.clone()), b: Some(b.clone()) })
}

/// Layout when D and B are themselves pure: A_{i,j} = M_{j−2}…M_i B and
/// A_{j,i} = M_i…M_{j−2} B for i < j.
pub fn pure_from_blocks(n: usize, d: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let s = factorial(n - 1);
    check_square(d, s)?;
    check_square(b, s)?;
    let ms = transpositions(n - 1);
    let mut out = CMatrix::zeros(s * n, s * n);
    for i in 1..=n {
        for j in 1..=n {
            let blk = if i == j {
                d.clone()
            } else if i < j {
                desc(&ms, j as isize - 2, i as isize, s) * b
            } else {
                asc(&ms, j as isize, i as isize - 2, s) * b
            };
            out.view_mut(((i - 1) * s, (j - 1) * s), (s, s)).copy_from(&blk);
        }
    }
    Ok(out)
}

/// Pure nameblind matrix from 2^{n−1} parameters: D from the first half,
/// B from the second, recursively.
pub fn build_pure_nameblind(n: usize, params: &[Complex64]) -> Result<CMatrix> {
    let need = 1usize << (n.max(1) - 1);
    if params.len() != need {
        return Err(AqcError::DimensionMismatch { expected: need, got: params.len() });
    }
    if n <= 1 {
        return Ok(CMatrix::from_element(1, 1, params[0]));
    }
    let (pd, pb) = params.split_at(need / 2);
    pure_from_blocks(n, &build_pure_nameblind(n - 1, pd)?, &build_pure_nameblind(n - 1, pb)?)
}

pub fn random_pure_nameblind(n: usize, rng: &mut impl Rng) -> CMatrix {
    let params: Vec<Complex64> = (0..1usize << (n.max(1) - 1)).map(|_| gaussian(rng)).collect();
    build_pure_nameblind(n, &params).expect("parameter count matches")
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Blocks of an (n, p)-partially nameblind matrix, all on n−1 letters.
/// `a` is p×p with entries in ℬ_{p−1}; `row_seeds[i]` starts the right part
/// of block row i and `col_seeds[j]` the lower part of block column j, both
/// in ℬ_p; `d` in ℬ_p is the repeated diagonal of the lower-right region and
/// `b` in ℬ_{p+1} its first off-diagonal block.
#[derive(Clone, Debug)]
pub struct PartialBlocks {
    pub a: Vec<Vec<CMatrix>>,
    pub row_seeds: Vec<CMatrix>,
    pub col_seeds: Vec<CMatrix>,
    pub d: Option<CMatrix>,
    pub b: Option<CMatrix>,
}

/// Assembles an (n, p)-partially nameblind matrix. With p = 0 this is the
/// nameblind layout of [`build_nameblind`].
pub fn build_partially_nameblind(n: usize, p: usize, blocks: &PartialBlocks) -> Result<CMatrix> {
    if n < 2 || p > n {
        return Err(AqcError::PreconditionFailed(format!("no block layout for n={n}, p={p}")));
    }
    let s = factorial(n - 1);
    let tail = n - p;
    if blocks.a.len() != p || blocks.a.iter().any(|r| r.len() != p) {
        return Err(AqcError::DimensionMismatch { expected: p, got: blocks.a.len() });
    }
    for row in &blocks.a {
        for blk in row {
            require(blk, n - 1, p.saturating_sub(1), "A")?;
        }
    }
    if tail > 0 {
        if blocks.row_seeds.len() != p || blocks.col_seeds.len() != p {
            return Err(AqcError::DimensionMismatch { expected: p, got: blocks.row_seeds.len() });
        }
        for x in blocks.row_seeds.iter().chain(&blocks.col_seeds) {
            require(x, n - 1, p, "row/column seed")?;
        }
        require(blocks.d.as_ref().ok_or_else(|| AqcError::PreconditionFailed("missing D".into()))?, n - 1, p, "D")?;
    }
    if tail > 1 {
        require(blocks.b.as_ref().ok_or_else(|| AqcError::PreconditionFailed("missing B".into()))?, n - 1, p + 1, "B")?;
    }
    let ms = transpositions(n - 1);
    let p_i = p as isize;
    let mut out = CMatrix::zeros(s * n, s * n);
    for r in 1..=n {
        for c in 1..=n {
            let (ri, ci) = (r as isize, c as isize);
            let blk = if r <= p && c <= p {
                blocks.a[r - 1][c - 1].clone()
            } else if r <= p {
                desc(&ms, ci - 2, p_i, s) * &blocks.row_seeds[r - 1]
            } else if c <= p {
                &blocks.col_seeds[c - 1] * asc(&ms, p_i, ri - 2, s)
            } else if r == c {
                blocks.d.clone().expect("checked")
            } else {
                let b = blocks.b.as_ref().expect("checked");
                let (i, j) = (ri - p_i, ci - p_i);
                if i < j {
                    desc(&ms, j - 2 + p_i, 1 + p_i, s) * b * asc(&ms, 1 + p_i, i - 1 + p_i, s)
                } else {
                    desc(&ms, j - 1 + p_i, 1 + p_i, s) * b * asc(&ms, 1 + p_i, i - 2 + p_i, s)
                }
            };
            out.view_mut(((r - 1) * s, (c - 1) * s), (s, s)).copy_from(&blk);
        }
    }
    Ok(out)
}

/// Random element of ℬ^n_p assembled through the block layout.
pub fn random_partially_nameblind(n: usize, p: usize, rng: &mut impl Rng) -> CMatrix {
    let size = factorial(n);
    if n <= 1 || p + 1 >= n {
        return CMatrix::from_fn(size, size, |_, _| gaussian(rng));
    }
    let a = (0..p).map(|_| (0..p).map(|_| random_partially_nameblind(n - 1, p - 1, rng)).collect()).collect();
    let row_seeds = (0..p).map(|_| random_partially_nameblind(n - 1, p, rng)).collect();
    let col_seeds = (0..p).map(|_| random_partially_nameblind(n - 1, p, rng)).collect();
    let d = Some(random_partially_nameblind(n - 1, p, rng));
    let b = Some(random_partially_nameblind(n - 1, p + 1, rng));
    build_partially_nameblind(n, p, &PartialBlocks { a, row_seeds, col_seeds, d, b }).expect("blocks drawn from their classes")
}

/// Free parameters of the block layout for ℬ^n_p.
pub fn param_count(n: usize, p: usize) -> usize {
    if n <= 1 || p + 1 >= n {
        return factorial(n).pow(2);
    }
    let a = if p > 0 { p * p * param_count(n - 1, p - 1) } else { 0 };
    a + 2 * p * param_count(n - 1, p) + param_count(n - 1, p) + param_count(n - 1, p + 1)
}

/// (n!)² / (n−p)!.
pub fn closed_form_dim(n: usize, p: usize) -> usize {
    factorial(n).pow(2) / factorial(n - p.min(n))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Orbits of matrix entries under the adjacent transpositions of (n, p):
/// one free parameter per orbit.
fn entry_orbits(n: usize, p: usize) -> Result<(usize, Vec<usize>)> {
    if n > 5 {
        return Err(AqcError::ResourceLimit(format!("commutant of n={n} exceeds the n ≤ 5 limit")));
    }
    let basis = WordBasis::full(n);
    let dim = basis.dim();
    let mut uf = UnionFind::new(dim * dim);
    for k in p + 1..n {
        let sigma = basis.permutation(&swap_renaming(&basis.addresses, k));
        for i in 0..dim {
            for j in 0..dim {
                uf.union(i * dim + j, sigma[i] * dim + sigma[j]);
            }
        }
    }
    let mut label: BTreeMap<usize, usize> = BTreeMap::new();
    let mut of = vec![0; dim * dim];
    for (e, slot) in of.iter_mut().enumerate() {
        let r = uf.find(e);
        let next = label.len();
        *slot = *label.entry(r).or_insert(next);
    }
    Ok((label.len(), of))
}

/// Dimension of {M : M R_k = R_k M for all k > p} on words of length n,
/// counted exactly as the number of entry orbits.
pub fn commutant_dimension_partial(n: usize, p: usize) -> Result<usize> {
    Ok(entry_orbits(n, p)?.0)
}

pub fn commutant_dimension(n: usize) -> Result<usize> {
    commutant_dimension_partial(n, 0)
}

/// Random element of the commutant: an independent Gaussian per orbit.
pub fn random_commutant_element(n: usize, rng: &mut impl Rng) -> Result<CMatrix> {
    let (count, of) = entry_orbits(n, 0)?;
    let vals: Vec<Complex64> = (0..count).map(|_| gaussian(rng)).collect();
    let dim = factorial(n);
    Ok(CMatrix::from_fn(dim, dim, |i, j| vals[of[i * dim + j]]))
}

/// Commutant dimension from the rank of the dense constraint system
/// vec(M R_k − R_k M) = 0. Only for small n.
pub fn commutant_dimension_dense(n: usize) -> Result<usize> {
    if n > 3 {
        return Err(AqcError::ResourceLimit("dense constraint rank limited to n ≤ 3".into()));
    }
    let dim = factorial(n);
    let gens = transpositions(n);
    if gens.is_empty() {
        return Ok(dim * dim);
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for r in &gens {
        // (M R − R M)[i][j] = Σ_l M[i][l] R[l][j] − R[i][l] M[l][j].
        for i in 0..dim {
            for j in 0..dim {
                let mut row = vec![0.0; dim * dim];
                for l in 0..dim {
                    row[i * dim + l] += r[(l, j)].re;
                    row[l * dim + j] -= r[(i, l)].re;
                }
                rows.push(row);
            }
        }
    }
    let mat = DMatrix::from_fn(rows.len(), dim * dim, |i, j| rows[i][j]);
    Ok(dim * dim - mat.rank(1e-9))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    /// Adjacent transpositions of the basis addresses.
    Generators,
    /// Every renaming of the basis addresses.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixReport {
    pub max_defect: f64,
    pub renamings: usize,
}

impl MatrixReport {
    pub fn passed(&self) -> bool {
        self.max_defect <= NAMEBLIND_TOL
    }
}

/// max |M P − P M| over the renaming matrices P of the chosen mode.
pub fn is_nameblind(m: &CMatrix, basis: &WordBasis, mode: CheckMode, exec: Exec) -> Result<MatrixReport> {
    check_square(m, basis.dim())?;
    let addrs = &basis.addresses;
    let renamings: Vec<Renaming> = match mode {
        CheckMode::Generators => (1..addrs.len()).map(|k| swap_renaming(addrs, k)).collect(),
        CheckMode::Full => {
            if addrs.len() > 6 {
                return Err(AqcError::ResourceLimit("full renaming group limited to 6 addresses".into()));
            }
            let dom: BTreeSet<Address> = addrs.iter().copied().collect();
            permutations(addrs)
                .into_iter()
                .map(|img| Renaming::new(addrs.iter().copied().zip(img).collect()).expect("permutation"))
                .filter(|r| !r.is_identity())
                .inspect(|r| debug_assert!(r.domain().eq(dom.iter().copied())))
                .collect()
        }
    };
    let defects = exec.map(&renamings, |r| permutation_defect(m, &basis.permutation(r)));
    Ok(MatrixReport { max_defect: defects.into_iter().fold(0.0, f64::max), renamings: renamings.len() })
}

/// Block-diagonal (m, n)-nameblind matrix: one copy of D per m-subset of
/// `addresses`, subsets in indicator order. D acts on words of length m
/// over m letters and must be nameblind.
pub fn extend_mn_nameblind(d: &CMatrix, m: usize, addresses: &[Address]) -> Result<(CMatrix, WordBasis)> {
    let s = factorial(m);
    check_square(d, s)?;
    let def = partial_defect(d, m, 0)?;
    if m >= 2 && def > NAMEBLIND_TOL {
        return Err(AqcError::PreconditionFailed(format!("D is not nameblind (defect {def:.3e})")));
    }
    let basis = WordBasis::new(m, addresses.iter().copied(), WordOrder::BySubset)?;
    let blocks = basis.dim() / s;
    let mut out = CMatrix::zeros(basis.dim(), basis.dim());
    for k in 0..blocks {
        out.view_mut((k * s, k * s), (s, s)).copy_from(d);
    }
    Ok((out, basis))
}

/// u(φ, θ, ±) = e^{iφ} [[cos θ, ±i sin θ], [±i sin θ, cos θ]], the 2×2
/// nameblind unitaries.
pub fn u_pm(phi: f64, theta: f64, plus: bool) -> CMatrix {
    let g = Complex64::from_polar(1.0, phi);
    let s = if plus { 1.0 } else { -1.0 };
    let off = Complex64::new(0.0, s * theta.sin());
    let cth = Complex64::new(theta.cos(), 0.0);
    CMatrix::from_row_slice(2, 2, &[g * cth, g * off, g * off, g * cth])
}

/// Text form: a header `n m order` followed by one line per row of
/// space-separated `re im` pairs. Floats use shortest round-trip notation.
pub fn write_matrix(m: &CMatrix, n: usize, words: usize, order: WordOrder) -> String {
    let mut s = format!("{n} {words} {}\n", order.tag());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?} {:?}", m[(i, j)].re, m[(i, j)].im)).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

/// Parses [`write_matrix`] output into (matrix, basis).
pub fn read_matrix(text: &str) -> Result<(CMatrix, WordBasis)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| AqcError::Parse("empty matrix file".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let [n, m, order] = h.as_slice() else {
        return Err(AqcError::Parse(format!("bad header {header:?}")));
    };
    let n: usize = n.parse().map_err(|_| AqcError::Parse("bad n".into()))?;
    let m: usize = m.parse().map_err(|_| AqcError::Parse("bad m".into()))?;
    let basis = WordBasis::new(m, (1..=n as u32).map(Address), WordOrder::from_tag(order)?)?;
    let dim = basis.dim();
    let mut vals = Vec::with_capacity(dim * dim);
    for line in lines {
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| AqcError::Parse(format!("bad number {t:?}"))))
            .collect::<Result<_>>()?;
        if nums.len() != 2 * dim {
            return Err(AqcError::DimensionMismatch { expected: dim, got: nums.len() / 2 });
        }
        vals.extend(nums.chunks(2).map(|c| Complex64::new(c[0], c[1])));
    }
    if vals.len() != dim * dim {
        return Err(AqcError::DimensionMismatch { expected: dim, got: vals.len() / dim.max(1) });
    }
    Ok((CMatrix::from_row_slice(dim, dim, &vals), basis))
}

/// Address position in a template: a fixed gate address or the k-th slot
/// of the external word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Internal(Address),
    External(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SectorTemplate {
    pub target: Option<Slot>,
    pub in_addr: Vec<Slot>,
    pub in_data: DataWord,
    pub out_addr: Vec<Slot>,
    pub out_data: DataWord,
}

/// Gate-local state with external addresses replaced by numbered slots.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Template(pub Vec<SectorTemplate>);

impl Template {
    /// Abstracts `local`: addresses outside `gate` become slots numbered in
    /// register order. Returns the template and the external word.
    pub fn abstract_local(local: &[Sector], gate: &[Address]) -> (Template, Vec<Address>) {
        let mut ext: Vec<Address> = Vec::new();
        let mut slot = |a: Address| {
            if gate.contains(&a) {
                Slot::Internal(a)
            } else {
                ext.push(a);
                Slot::External(ext.len() - 1)
            }
        };
        let mut secs = Vec::new();
        for s in local {
            let target = s.target.map(&mut slot);
            let in_addr = s.input.addr.letters().iter().map(|&a| slot(a)).collect();
            let out_addr = s.output.addr.letters().iter().map(|&a| slot(a)).collect();
            secs.push(SectorTemplate { target, in_addr, in_data: s.input.data.clone(), out_addr, out_data: s.output.data.clone() });
        }
        (Template(secs), ext)
    }

    pub fn slots(&self) -> usize {
        self.0
            .iter()
            .flat_map(|s| s.target.iter().chain(&s.in_addr).chain(&s.out_addr))
            .filter(|x| matches!(x, Slot::External(_)))
            .count()
    }

    pub fn fill(&self, word: &[Address]) -> Local {
        let get = |x: &Slot| match *x {
            Slot::Internal(a) => a,
            Slot::External(k) => word[k],
        };
        self.0
            .iter()
            .map(|s| Sector {
                target: s.target.as_ref().map(get),
                input: crate::model::Register::new(
                    crate::model::AddressWord::from_vec(s.in_addr.iter().map(get).collect()),
                    s.in_data.clone(),
                ),
                output: crate::model::Register::new(
                    crate::model::AddressWord::from_vec(s.out_addr.iter().map(get).collect()),
                    s.out_data.clone(),
                ),
            })
            .collect()
    }
}

/// ⟨fill(to, w')| S |fill(from, w)⟩ for words w, w' over `a_ex` in lex
/// order of the basis given by `basis`.
pub fn operator_block(op: &GateOperator, basis: &WordBasis, from: &Template, to: &Template) -> Result<CMatrix> {
    if from.slots() != basis.m || to.slots() != basis.m {
        return Err(AqcError::DimensionMismatch { expected: basis.m, got: from.slots() });
    }
    let mut out = CMatrix::zeros(basis.dim(), basis.dim());
    for (col, w) in basis.words().iter().enumerate() {
        for (amp, y) in op.apply(&from.fill(w))? {
            let (t, ext) = Template::abstract_local(&y, &op.gate);
            if &t != to {
                continue;
            }
            if let Some(row) = basis.index_of(&ext) {
                out[(row, col)] += amp;
            }
        }
    }
    if out.iter().all(|c| c.norm() == 0.0) {
        return Err(AqcError::EmptyBlock(format!("no transition into the target template on {} words", basis.dim())));
    }
    Ok(out)
}

/// One block of a gate operator between two templates.
#[derive(Clone, Debug)]
pub struct OperatorBlock {
    pub from: Template,
    pub to: Template,
    pub m: usize,
}

/// Template pairs (from, to) reached by the operator from the given probes.
pub fn block_family(op: &GateOperator, probes: &[Local]) -> Result<Vec<OperatorBlock>> {
    let mut seen: BTreeSet<(Template, Template)> = BTreeSet::new();
    for x in probes {
        let (from, _) = Template::abstract_local(x, &op.gate);
        for (_, y) in op.apply(x)? {
            let (to, _) = Template::abstract_local(&y, &op.gate);
            seen.insert((from.clone(), to));
        }
    }
    Ok(seen
        .into_iter()
        .map(|(from, to)| {
            let m = from.slots();
            OperatorBlock { from, to, m }
        })
        .collect())
}

/// The block of `op` between two templates over all words of length m in
/// `pool`, grouped by letter set. For a nameblind operator this equals
/// [`extend_mn_nameblind`] of any one diagonal block.
pub fn operator_mn_matrix(op: &GateOperator, pool: &[Address], from: &Template, to: &Template) -> Result<(CMatrix, WordBasis)> {
    let basis = WordBasis::new(from.slots(), pool.iter().copied(), WordOrder::BySubset)?;
    Ok((operator_block(op, &basis, from, to)?, basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lex_and_subset_orders() {
        let b = WordBasis::new(2, [1, 2, 3].map(Address), WordOrder::Lex).unwrap();
        let w: Vec<Vec<u32>> = b.words().iter().map(|w| w.iter().map(|a| a.0).collect()).collect();
        assert_eq!(w, vec![vec![1, 2], vec![1, 3], vec![2, 1], vec![2, 3], vec![3, 1], vec![3, 2]]);
        let b = WordBasis::new(2, [1, 2, 3].map(Address), WordOrder::BySubset).unwrap();
        let w: Vec<Vec<u32>> = b.words().iter().map(|w| w.iter().map(|a| a.0).collect()).collect();
        // Indicators: {1,2}=3, {1,3}=5, {2,3}=6.
        assert_eq!(w, vec![vec![1, 2], vec![2, 1], vec![1, 3], vec![3, 1], vec![2, 3], vec![3, 2]]);
    }

    #[test]
    fn r1_on_two_letters() {
        let r = transposition_matrix(2, 1).unwrap();
        assert_eq!(r[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(r[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn counts_match_closed_form() {
        for n in 1..=5 {
            for p in 0..=n {
                assert_eq!(param_count(n, p), closed_form_dim(n, p), "n={n} p={p}");
            }
        }
        assert_eq!(param_count(3, 1), 18);
    }

    #[test]
    fn build_rejects_bad_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = CMatrix::from_fn(2, 2, |_, _| gaussian(&mut rng));
        let b = CMatrix::identity(2, 2);
        assert!(matches!(build_nameblind(3, &d, &b), Err(AqcError::PreconditionFailed(_))));
    }

    #[test]
    fn u_pm_is_unitary_and_nameblind() {
        let u = u_pm(0.3, 1.1, false);
        let prod = u.adjoint() * &u;
        assert!((prod - CMatrix::identity(2, 2)).norm() < 1e-14);
        assert!(partial_defect(&u, 2, 0).unwrap() < 1e-15);
    }

    #[test]
    fn matrix_text_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_pure_nameblind(3, &mut rng);
        let text = write_matrix(&m, 3, 3, WordOrder::Lex);
        let (back, basis) = read_matrix(&text).unwrap();
        assert_eq!(basis.dim(), 6);
        assert_eq!(back, m);
    }
}
