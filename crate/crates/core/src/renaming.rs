//! Renamings: bijections of the address set acting on register contents.
//!
//! A renaming never moves sectors; it rewrites targets and address words.
//! A renaming is external to a gate when it fixes every address of the gate.
//! A gate operator is nameblind when it commutes with all renamings external
//! to its gate.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_complex::Complex64;

use crate::error::{AqcError, Result};
use crate::evolution::{trajectory, Circuit};
use crate::exec::Exec;
use crate::model::{Address, AddressWord, BasisState, Sector, SparseState};
use crate::operator::{GateOperator, Local, LocalTerm};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Renaming {
    map: BTreeMap<Address, Address>,
}

impl Renaming {
    /// `map` must be a bijection of its key set onto itself.
    pub fn new(map: BTreeMap<Address, Address>) -> Result<Self> {
        let keys: BTreeSet<Address> = map.keys().copied().collect();
        let vals: BTreeSet<Address> = map.values().copied().collect();
        if keys != vals || vals.len() != map.len() {
            return Err(AqcError::InvalidRenaming("not a permutation of its domain".into()));
        }
        Ok(Renaming { map })
    }

    pub fn identity(domain: &BTreeSet<Address>) -> Self {
        Renaming { map: domain.iter().map(|&a| (a, a)).collect() }
    }

    /// Product of disjoint cycles over `domain`; `(2 9 8)` sends 2 to 9.
    pub fn from_cycles(domain: &BTreeSet<Address>, cycles: &[&[u32]]) -> Result<Self> {
        let mut map: BTreeMap<Address, Address> = domain.iter().map(|&a| (a, a)).collect();
        let mut touched = BTreeSet::new();
        for cyc in cycles {
            for (i, &x) in cyc.iter().enumerate() {
                let from = Address(x);
                let to = Address(cyc[(i + 1) % cyc.len()]);
                if !domain.contains(&from) {
                    return Err(AqcError::UnknownAddress(from));
                }
                if !touched.insert(from) {
                    return Err(AqcError::InvalidRenaming(format!("{from} appears in two cycles")));
                }
                map.insert(from, to);
            }
        }
        Renaming::new(map)
    }

    /// Swaps two addresses of `domain`.
    pub fn swap(domain: &BTreeSet<Address>, x: Address, y: Address) -> Result<Self> {
        let mut map: BTreeMap<Address, Address> = domain.iter().map(|&a| (a, a)).collect();
        if !domain.contains(&x) || !domain.contains(&y) {
            return Err(AqcError::InvalidRenaming(format!("{x} or {y} outside the domain")));
        }
        map.insert(x, y);
        map.insert(y, x);
        Ok(Renaming { map })
    }

    pub fn domain(&self) -> impl Iterator<Item = Address> + '_ {
        self.map.keys().copied()
    }

    /// Identity outside the domain.
    pub fn apply(&self, a: Address) -> Address {
        self.map.get(&a).copied().unwrap_or(a)
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(a, b)| a == b)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Renaming) -> Renaming {
        let keys: BTreeSet<Address> = self.domain().chain(other.domain()).collect();
        Renaming { map: keys.into_iter().map(|a| (a, self.apply(other.apply(a)))).collect() }
    }

    pub fn inverse(&self) -> Renaming {
        Renaming { map: self.map.iter().map(|(&a, &b)| (b, a)).collect() }
    }

    pub fn word(&self, w: &AddressWord) -> AddressWord {
        w.map(|a| self.apply(a))
    }

    pub fn sector(&self, s: &Sector) -> Sector {
        s.map_addresses(&|a| self.apply(a))
    }

    pub fn basis(&self, b: &BasisState) -> BasisState {
        b.map_registers(&|a| self.apply(a))
    }

    pub fn state(&self, s: &SparseState) -> SparseState {
        s.map_basis(|b| self.basis(b))
    }

    pub fn local(&self, l: &[Sector]) -> Local {
        l.iter().map(|s| self.sector(s)).collect()
    }

    /// True when every address of `gate` is fixed.
    pub fn is_external(&self, gate: &[Address]) -> bool {
        gate.iter().all(|&a| self.apply(a) == a)
    }
}

/// Swap of the k-th and (k+1)-th smallest addresses (k counted from 1).
pub fn adjacent_transposition(k: usize, addresses: &BTreeSet<Address>) -> Result<Renaming> {
    let sorted: Vec<Address> = addresses.iter().copied().collect();
    if k == 0 || k >= sorted.len() {
        return Err(AqcError::InvalidRenaming(format!("no adjacent transposition {k} on {} addresses", sorted.len())));
    }
    Renaming::swap(addresses, sorted[k - 1], sorted[k])
}

/// Swaps of consecutive external addresses; they generate every renaming
/// external to `gate`.
pub fn external_generators(addresses: &BTreeSet<Address>, gate: &[Address]) -> Vec<Renaming> {
    let ext: Vec<Address> = addresses.iter().copied().filter(|a| !gate.contains(a)).collect();
    ext.windows(2)
        .map(|w| Renaming::swap(addresses, w[0], w[1]).expect("both in domain"))
        .collect()
}

/// Every renaming external to `gate`, identity excluded. Limited to at most
/// six external addresses.
pub fn all_external(addresses: &BTreeSet<Address>, gate: &[Address]) -> Result<Vec<Renaming>> {
    let ext: Vec<Address> = addresses.iter().copied().filter(|a| !gate.contains(a)).collect();
    if ext.len() > 6 {
        return Err(AqcError::ResourceLimit(format!("{} external addresses, full enumeration capped at 6", ext.len())));
    }
    Ok(permutations(&ext)
        .into_iter()
        .map(|p| {
            let mut map: BTreeMap<Address, Address> = addresses.iter().map(|&a| (a, a)).collect();
            for (x, y) in ext.iter().zip(p) {
                map.insert(*x, y);
            }
            Renaming { map }
        })
        .filter(|r| !r.is_identity())
        .collect())
}

/// All orderings of `xs`, in lexicographic order of positions.
pub fn permutations<T: Clone>(xs: &[T]) -> Vec<Vec<T>> {
    if xs.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..xs.len() {
        let mut rest = xs.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

/// Splits `r` as E ∘ I ∘ M relative to the word `mu`:
/// M swaps, in sorted order, the letters of μ not in r(μ) with the letters
/// of r(μ) not in μ; I permutes the letters of r(μ) so that I(M(μ)) = r(μ);
/// E = r ∘ M⁻¹ ∘ I⁻¹ fixes every letter of r(μ). Returns (E, I, M).
pub fn decompose_renaming(r: &Renaming, mu: &AddressWord) -> Result<(Renaming, Renaming, Renaming)> {
    let domain: BTreeSet<Address> = r.domain().collect();
    if let Some(a) = mu.letters().iter().find(|a| !domain.contains(a)) {
        return Err(AqcError::UnknownAddress(*a));
    }
    let rmu = r.word(mu);
    let set_mu: BTreeSet<Address> = mu.letters().iter().copied().collect();
    let set_rmu: BTreeSet<Address> = rmu.letters().iter().copied().collect();
    let leaving: Vec<Address> = set_mu.difference(&set_rmu).copied().collect();
    let arriving: Vec<Address> = set_rmu.difference(&set_mu).copied().collect();
    let mut m = Renaming::identity(&domain);
    for (&x, &y) in leaving.iter().zip(&arriving) {
        m.map.insert(x, y);
        m.map.insert(y, x);
    }
    let m_mu = m.word(mu);
    let mut i = Renaming::identity(&domain);
    for (&x, &y) in m_mu.letters().iter().zip(rmu.letters()) {
        i.map.insert(x, y);
    }
    let i = Renaming::new(i.map)?;
    let e = r.compose(&m.inverse()).compose(&i.inverse());
    Ok((e, i, m))
}

#[derive(Clone, Debug, PartialEq)]
pub enum NameblindMode {
    /// Swaps of consecutive external addresses, on probes closed under them.
    Generators,
    /// Every external renaming (at most six external addresses).
    Full,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NameblindReport {
    pub gate: String,
    /// max ‖S E x − E S x‖ over the checked pairs.
    pub max_defect: f64,
    pub probes: usize,
    pub renamings: usize,
    pub worst: Option<String>,
}

impl NameblindReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_defect <= tol
    }
}

fn local_distance(x: &[LocalTerm], y: &[LocalTerm]) -> f64 {
    let mut acc: BTreeMap<&Local, Complex64> = BTreeMap::new();
    for (c, l) in x {
        *acc.entry(l).or_default() += c;
    }
    for (c, l) in y {
        *acc.entry(l).or_default() -= c;
    }
    acc.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Probes closed under the given renamings, at most `cap` states.
fn orbit_closure(probes: &[Local], gens: &[Renaming], cap: usize) -> Vec<Local> {
    let mut seen: BTreeSet<Local> = BTreeSet::new();
    let mut queue: VecDeque<Local> = VecDeque::new();
    for p in probes {
        if seen.insert(p.clone()) {
            queue.push_back(p.clone());
        }
    }
    while let Some(x) = queue.pop_front() {
        if seen.len() >= cap {
            break;
        }
        for g in gens {
            let y = g.local(&x);
            if seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    seen.into_iter().collect()
}

/// max over probes x and checked renamings E of ‖S E|x⟩ − E S|x⟩‖.
pub fn check_nameblind_gate(
    addresses: &BTreeSet<Address>,
    op: &GateOperator,
    probes: &[Local],
    mode: &NameblindMode,
    exec: Exec,
) -> Result<NameblindReport> {
    let renamings = match mode {
        NameblindMode::Generators => external_generators(addresses, &op.gate),
        NameblindMode::Full => all_external(addresses, &op.gate)?,
    };
    let probes = match mode {
        NameblindMode::Generators => orbit_closure(probes, &renamings, 200_000),
        NameblindMode::Full => probes.to_vec(),
    };
    let pairs: Vec<(&Local, &Renaming)> = probes.iter().flat_map(|p| renamings.iter().map(move |r| (p, r))).collect();
    let defects = exec.try_map(&pairs, |(x, r)| {
        let se: Vec<LocalTerm> = op.apply(&r.local(x))?;
        let es: Vec<LocalTerm> = op.apply(x)?.into_iter().map(|(c, l)| (c, r.local(&l))).collect();
        Ok(local_distance(&se, &es))
    })?;
    let mut report = NameblindReport { gate: op.name.clone(), probes: probes.len(), renamings: renamings.len(), ..Default::default() };
    for ((x, r), d) in pairs.iter().zip(defects) {
        if d > report.max_defect {
            report.max_defect = d;
            let moved: Vec<String> = r.map.iter().filter(|(a, b)| a != b).map(|(a, b)| format!("{a}->{b}")).collect();
            report.worst = Some(format!("renaming {} on {}", moved.join(","), x.iter().map(|s| format!("[{s}]")).collect::<String>()));
        }
    }
    Ok(report)
}

/// Gate-local states met by each gate during the first `depth` steps.
pub fn reachable_probes(c: &Circuit, depth: usize) -> Result<Vec<Vec<Local>>> {
    let states = trajectory(&c.skeleton, &c.initial, depth)?;
    let mut per_gate: Vec<BTreeSet<Local>> = vec![BTreeSet::new(); c.skeleton.operators().len()];
    for s in &states {
        for b in s.terms().keys() {
            for (i, op) in c.skeleton.operators().iter().enumerate() {
                let l: Local = op.gate.iter().map(|a| b.sector(*a).cloned().unwrap_or_default()).collect();
                per_gate[i].insert(l);
            }
        }
    }
    Ok(per_gate.into_iter().map(|s| s.into_iter().collect()).collect())
}

/// Nameblindness of every gate on the states reachable within `depth` steps.
pub fn check_nameblind_circuit(c: &Circuit, depth: usize, mode: &NameblindMode, exec: Exec) -> Result<Vec<NameblindReport>> {
    let probes = reachable_probes(c, depth)?;
    c.skeleton
        .operators()
        .iter()
        .zip(&probes)
        .map(|(op, p)| check_nameblind_gate(c.skeleton.addresses(), op, p, mode, exec))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(n: u32) -> BTreeSet<Address> {
        (1..=n).map(Address).collect()
    }

    #[test]
    fn rejects_non_bijection() {
        let mut m = BTreeMap::new();
        m.insert(Address(1), Address(2));
        m.insert(Address(2), Address(2));
        assert!(Renaming::new(m).is_err());
    }

    #[test]
    fn adjacent_transposition_swaps_sorted_neighbours() {
        let d: BTreeSet<Address> = [3, 7, 9].map(Address).into_iter().collect();
        let r = adjacent_transposition(2, &d).unwrap();
        assert_eq!(r.apply(Address(7)), Address(9));
        assert_eq!(r.apply(Address(3)), Address(3));
        assert!(adjacent_transposition(3, &d).is_err());
    }

    #[test]
    fn decomposition_of_worked_example() {
        // r = (2 9 8)(4 5), μ = 25: M = (2 4)(5 9), I = (4 9), E = (2 5 8).
        let d = dom(9);
        let r = Renaming::from_cycles(&d, &[&[2, 9, 8], &[4, 5]]).unwrap();
        let (e, i, m) = decompose_renaming(&r, &AddressWord::from_u32s(&[2, 5]).unwrap()).unwrap();
        assert_eq!(m, Renaming::from_cycles(&d, &[&[2, 4], &[5, 9]]).unwrap());
        assert_eq!(i, Renaming::from_cycles(&d, &[&[4, 9]]).unwrap());
        assert_eq!(e, Renaming::from_cycles(&d, &[&[2, 5, 8]]).unwrap());
        assert_eq!(e.compose(&i).compose(&m), r);
    }

    #[test]
    fn external_generators_skip_gate() {
        let g = external_generators(&dom(4), &[Address(2)]);
        assert_eq!(g.len(), 2);
        assert!(g.iter().all(|r| r.is_external(&[Address(2)])));
        assert_eq!(all_external(&dom(4), &[Address(2)]).unwrap().len(), 5);
    }
}
