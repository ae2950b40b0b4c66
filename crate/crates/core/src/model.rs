//! Addresses, words, sectors and sparse superpositions of circuit basis states.
//!
//! Every register holds an explicit value; the empty word and the empty
//! target are ordinary values, never a missing entry. Basis states order
//! canonically: sectors by address, then target, input address word, input
//! data, output address word, output data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AqcError, Result};

/// Amplitudes below this modulus are dropped from sparse states.
pub const PRUNE_EPS: f64 = 1e-12;
/// Default tolerance for state equality.
pub const EQ_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Address(pub u32);

impl std::str::FromStr for Address {
    type Err = AqcError;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse::<u32>()
            .map(Address)
            .map_err(|_| AqcError::Parse(format!("bad address {s:?}")))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for Address {
    fn from(v: u32) -> Self {
        Address(v)
    }
}

/// A data symbol. Symbols are opaque strings such as `"0"` or `"2V1H"`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct Symbol(Arc<str>);

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol(Arc::from(s))
    }
}

impl From<Symbol> for String {
    fn from(s: Symbol) -> Self {
        s.0.to_string()
    }
}

impl std::str::FromStr for Symbol {
    type Err = AqcError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Symbol::new(s))
    }
}

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Non-repeating word over addresses. Serialized as space-separated
/// letters, the empty string being ε.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AddressWord(Vec<Address>);

impl TryFrom<String> for AddressWord {
    type Error = AqcError;

    fn try_from(s: String) -> Result<Self> {
        let letters = s.split_whitespace().map(|t| t.parse()).collect::<Result<Vec<Address>>>()?;
        AddressWord::new(letters)
    }
}

impl From<AddressWord> for String {
    fn from(w: AddressWord) -> Self {
        w.0.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
    }
}

impl AddressWord {
    pub fn new(letters: Vec<Address>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for a in &letters {
            if !seen.insert(*a) {
                return Err(AqcError::RepeatedLetter(*a));
            }
        }
        Ok(AddressWord(letters))
    }

    /// Builds a word without the repetition check. Callers re-validate the
    /// surrounding basis state.
    pub(crate) fn from_vec(letters: Vec<Address>) -> Self {
        AddressWord(letters)
    }

    pub fn empty() -> Self {
        AddressWord(Vec::new())
    }

    pub fn from_u32s(letters: &[u32]) -> Result<Self> {
        Self::new(letters.iter().map(|&a| Address(a)).collect())
    }

    pub fn letters(&self) -> &[Address] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map(&self, f: impl Fn(Address) -> Address) -> Self {
        AddressWord(self.0.iter().map(|&a| f(a)).collect())
    }
}

/// Serialized as space-separated symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct DataWord(Vec<Symbol>);

impl From<String> for DataWord {
    fn from(s: String) -> Self {
        DataWord(s.split_whitespace().map(Symbol::new).collect())
    }
}

impl From<DataWord> for String {
    fn from(w: DataWord) -> Self {
        w.0.iter().map(|a| a.as_str()).collect::<Vec<_>>().join(" ")
    }
}

impl DataWord {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        DataWord(symbols)
    }

    pub fn empty() -> Self {
        DataWord(Vec::new())
    }

    /// One symbol per character, so `"01"` is the two-symbol word 0·1.
    pub fn from_chars(s: &str) -> Self {
        DataWord(s.chars().map(|c| Symbol::new(&c.to_string())).collect())
    }

    pub fn from_strs(symbols: &[&str]) -> Self {
        DataWord(symbols.iter().map(|s| Symbol::new(s)).collect())
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for DataWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        let single = self.0.iter().all(|s| s.as_str().chars().count() == 1);
        let sep = if single { "" } else { "," };
        let parts: Vec<&str> = self.0.iter().map(|s| s.as_str()).collect();
        f.write_str(&parts.join(sep))
    }
}

impl fmt::Display for AddressWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// An input or output space: one address word plus one data word.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Register {
    pub addr: AddressWord,
    pub data: DataWord,
}

impl Register {
    pub fn new(addr: AddressWord, data: DataWord) -> Self {
        Register { addr, data }
    }

    pub fn is_empty(&self) -> bool {
        self.addr.is_empty() && self.data.is_empty()
    }
}

/// Field order is the canonical register order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "SectorDoc", into = "SectorDoc")]
pub struct Sector {
    pub target: Option<Address>,
    pub input: Register,
    pub output: Register,
}

impl Sector {
    pub fn empty() -> Self {
        Sector::default()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_none() && self.input.is_empty() && self.output.is_empty()
    }

    /// Every address stored in the sector's registers, with multiplicity.
    pub fn stored_addresses(&self) -> impl Iterator<Item = Address> + '_ {
        self.target
            .iter()
            .copied()
            .chain(self.input.addr.letters().iter().copied())
            .chain(self.output.addr.letters().iter().copied())
    }

    pub fn map_addresses(&self, f: &impl Fn(Address) -> Address) -> Sector {
        Sector {
            target: self.target.map(f),
            input: Register::new(self.input.addr.map(f), self.input.data.clone()),
            output: Register::new(self.output.addr.map(f), self.output.data.clone()),
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.target.map_or("ε".to_string(), |a| a.to_string());
        write!(
            f,
            "T={} I=({};{}) O=({};{})",
            t, self.input.addr, self.input.data, self.output.addr, self.output.data
        )
    }
}

/// Flat, string-valued form of a sector used in documents.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectorDoc {
    pub target: String,
    pub in_addr: String,
    pub in_data: String,
    pub out_addr: String,
    pub out_data: String,
}

impl TryFrom<SectorDoc> for Sector {
    type Error = AqcError;

    fn try_from(d: SectorDoc) -> Result<Self> {
        let target = if d.target.trim().is_empty() { None } else { Some(d.target.parse()?) };
        Ok(Sector {
            target,
            input: Register::new(AddressWord::try_from(d.in_addr)?, DataWord::from(d.in_data)),
            output: Register::new(AddressWord::try_from(d.out_addr)?, DataWord::from(d.out_data)),
        })
    }
}

impl From<Sector> for SectorDoc {
    fn from(s: Sector) -> Self {
        SectorDoc {
            target: s.target.map(|a| a.to_string()).unwrap_or_default(),
            in_addr: s.input.addr.into(),
            in_data: s.input.data.into(),
            out_addr: s.output.addr.into(),
            out_data: s.output.data.into(),
        }
    }
}

/// A circuit basis state: one sector per address.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    sectors: BTreeMap<Address, Sector>,
}

impl BasisState {
    pub fn new(sectors: BTreeMap<Address, Sector>) -> Self {
        BasisState { sectors }
    }

    /// All-empty basis state over the given addresses.
    pub fn vacuum(addresses: impl IntoIterator<Item = Address>) -> Self {
        BasisState {
            sectors: addresses.into_iter().map(|a| (a, Sector::empty())).collect(),
        }
    }

    pub fn sectors(&self) -> &BTreeMap<Address, Sector> {
        &self.sectors
    }

    pub fn sector(&self, a: Address) -> Option<&Sector> {
        self.sectors.get(&a)
    }

    pub fn sector_mut(&mut self, a: Address) -> Option<&mut Sector> {
        self.sectors.get_mut(&a)
    }

    pub fn insert(&mut self, a: Address, s: Sector) {
        self.sectors.insert(a, s);
    }

    pub fn remove(&mut self, a: Address) -> Option<Sector> {
        self.sectors.remove(&a)
    }

    pub fn addresses(&self) -> impl Iterator<Item = Address> + '_ {
        self.sectors.keys().copied()
    }

    /// Multiset of stored addresses in canonical order.
    pub fn stored_addresses(&self) -> Vec<Address> {
        let mut out: Vec<Address> = self.sectors.values().flat_map(|s| s.stored_addresses()).collect();
        out.sort();
        out
    }

    /// Global uniqueness plus membership of every stored address.
    pub fn check_unique(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for a in self.sectors.values().flat_map(|s| s.stored_addresses()) {
            if !self.sectors.contains_key(&a) {
                return Err(AqcError::UnknownAddress(a));
            }
            if !seen.insert(a) {
                return Err(AqcError::DuplicateAddress(a));
            }
        }
        Ok(())
    }

    /// Applies `f` to every stored address, leaving sector positions fixed.
    pub fn map_registers(&self, f: &impl Fn(Address) -> Address) -> BasisState {
        BasisState {
            sectors: self.sectors.iter().map(|(&a, s)| (a, s.map_addresses(f))).collect(),
        }
    }

    /// Applies `f` to positions and stored addresses alike.
    pub fn relabel(&self, f: &impl Fn(Address) -> Address) -> BasisState {
        BasisState {
            sectors: self.sectors.iter().map(|(&a, s)| (f(a), s.map_addresses(f))).collect(),
        }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (a, s) in &self.sectors {
            if s.is_empty() {
                continue;
            }
            if !first {
                f.write_str(" | ")?;
            }
            first = false;
            write!(f, "{a}: {s}")?;
        }
        if first {
            f.write_str("vacuum")?;
        }
        Ok(())
    }
}

/// Finite superposition of basis states with canonical term order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseState {
    terms: BTreeMap<BasisState, Complex64>,
}

impl SparseState {
    pub fn new() -> Self {
        SparseState::default()
    }

    pub fn basis(b: BasisState) -> Self {
        let mut s = SparseState::new();
        s.terms.insert(b, Complex64::new(1.0, 0.0));
        s
    }

    /// Sums duplicate basis states and prunes tiny amplitudes.
    pub fn from_terms(terms: impl IntoIterator<Item = (BasisState, Complex64)>) -> Self {
        let mut s = SparseState::new();
        for (b, c) in terms {
            s.add(b, c);
        }
        s.prune();
        s
    }

    pub fn add(&mut self, b: BasisState, c: Complex64) {
        *self.terms.entry(b).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    pub fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= PRUNE_EPS);
    }

    pub fn terms(&self) -> &BTreeMap<BasisState, Complex64> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisState, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, b: &BasisState) -> Complex64 {
        self.terms.get(b).copied().unwrap_or_default()
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, k: Complex64) -> SparseState {
        SparseState::from_terms(self.terms.iter().map(|(b, c)| (b.clone(), c * k)))
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &SparseState) -> Complex64 {
        self.terms
            .iter()
            .filter_map(|(b, c)| other.terms.get(b).map(|d| c.conj() * d))
            .sum()
    }

    /// Euclidean distance ‖self − other‖.
    pub fn distance(&self, other: &SparseState) -> f64 {
        let mut acc = 0.0;
        for (b, c) in &self.terms {
            acc += (c - other.amplitude(b)).norm_sqr();
        }
        for (b, d) in &other.terms {
            if !self.terms.contains_key(b) {
                acc += d.norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn approx_eq(&self, other: &SparseState, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    /// min over φ of ‖e^{iφ}·self − other‖.
    pub fn distance_up_to_phase(&self, other: &SparseState) -> f64 {
        let ip = self.inner(other);
        let phase = if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) };
        self.scale(phase).distance(other)
    }

    pub fn map_basis(&self, f: impl Fn(&BasisState) -> BasisState) -> SparseState {
        SparseState::from_terms(self.terms.iter().map(|(b, c)| (f(b), *c)))
    }

    pub fn check_unique(&self) -> Result<()> {
        self.terms.keys().try_for_each(|b| b.check_unique())
    }
}

impl fmt::Display for SparseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (b, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "({:+.6}{:+.6}i) [{}]", c.re, c.im, b)?;
        }
        Ok(())
    }
}

/// Checks a data word against an alphabet and a length cap.
pub fn check_data(word: &DataWord, alphabet: &BTreeSet<Symbol>, max_len: usize) -> Result<()> {
    if word.len() > max_len {
        return Err(AqcError::Data(format!("word {word} longer than {max_len}")));
    }
    if let Some(s) = word.symbols().iter().find(|s| !alphabet.contains(*s)) {
        return Err(AqcError::Data(format!("symbol {s} not in alphabet")));
    }
    Ok(())
}

/// Ways to place n distinct addresses in one sector (optional target,
/// input word, output word), all addresses used: (2n+1)·n!.
pub fn count_address_configs(n: u64) -> u64 {
    (2 * n + 1) * (1..=n).product::<u64>()
}

/// Those placements up to renaming: the shapes (target?, |in|, |out|).
pub fn count_config_shapes(n: u64) -> u64 {
    2 * n + 1
}
