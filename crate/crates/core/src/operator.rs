//! Gate operators.
//!
//! A gate operator acts on the sectors of one gate, listed in the order the
//! operator refers to them. Operators are built from a few primitives:
//! register flips, unitaries on data words, the polarizing beam splitter,
//! explicit local matrices and pattern rules. Anything a primitive does not
//! recognise is left unchanged.
//!
//! Rule patterns are written as space-separated tokens:
//! `$x` binds one letter, `*x` binds a (possibly empty) subword, `*x{3}`
//! binds exactly three letters, anything else is a literal. Target patterns
//! are `""` (ε), `$t`, `?t` (ε or one address, bound as a word) or a literal
//! address.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{AqcError, Result};
use crate::model::{Address, AddressWord, DataWord, Register, Sector, Symbol, PRUNE_EPS};

/// Gate-local basis state, one sector per gate address in operator order.
pub type Local = Vec<Sector>;

/// One term of a gate-local superposition.
pub type LocalTerm = (Complex64, Local);

const NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item<T> {
    Var(String),
    Lit(T),
    Rest { name: String, len: Option<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordPat<T>(pub Vec<Item<T>>);

impl<T> Default for WordPat<T> {
    fn default() -> Self {
        WordPat(Vec::new())
    }
}

pub type AddrPat = WordPat<Address>;
pub type DataPat = WordPat<Symbol>;

impl<T: fmt::Display> fmt::Display for WordPat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let toks: Vec<String> = self
            .0
            .iter()
            .map(|it| match it {
                Item::Var(n) => format!("${n}"),
                Item::Lit(x) => x.to_string(),
                Item::Rest { name, len: None } => format!("*{name}"),
                Item::Rest { name, len: Some(l) } => format!("*{name}{{{l}}}"),
            })
            .collect();
        f.write_str(&toks.join(" "))
    }
}

impl<T: FromStr<Err = AqcError>> FromStr for WordPat<T> {
    type Err = AqcError;

    fn from_str(s: &str) -> Result<Self> {
        let mut items = Vec::new();
        for tok in s.split_whitespace() {
            if let Some(n) = tok.strip_prefix('$') {
                items.push(Item::Var(check_name(n)?));
            } else if let Some(rest) = tok.strip_prefix('*') {
                match rest.split_once('{') {
                    Some((n, l)) => {
                        let l = l
                            .strip_suffix('}')
                            .and_then(|l| l.parse().ok())
                            .ok_or_else(|| AqcError::Parse(format!("bad length in {tok}")))?;
                        items.push(Item::Rest { name: check_name(n)?, len: Some(l) });
                    }
                    None => items.push(Item::Rest { name: check_name(rest)?, len: None }),
                }
            } else {
                items.push(Item::Lit(tok.parse()?));
            }
        }
        Ok(WordPat(items))
    }
}

fn check_name(n: &str) -> Result<String> {
    if n.is_empty() || !n.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'') {
        return Err(AqcError::Parse(format!("bad variable name {n:?}")));
    }
    Ok(n.to_string())
}

impl<T: fmt::Display> Serialize for WordPat<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de, T: FromStr<Err = AqcError>> Deserialize<'de> for WordPat<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum TargetPat {
    #[default]
    Empty,
    Var(String),
    Lit(Address),
    /// ε or one address, bound in the address namespace as a word.
    Any(String),
}

impl fmt::Display for TargetPat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetPat::Empty => Ok(()),
            TargetPat::Var(n) => write!(f, "${n}"),
            TargetPat::Lit(a) => write!(f, "{a}"),
            TargetPat::Any(n) => write!(f, "?{n}"),
        }
    }
}

impl FromStr for TargetPat {
    type Err = AqcError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            Ok(TargetPat::Empty)
        } else if let Some(n) = s.strip_prefix('$') {
            Ok(TargetPat::Var(check_name(n)?))
        } else if let Some(n) = s.strip_prefix('?') {
            Ok(TargetPat::Any(check_name(n)?))
        } else {
            Ok(TargetPat::Lit(s.parse()?))
        }
    }
}

impl Serialize for TargetPat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TargetPat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

/// Pattern for one sector. Unlisted registers default to ε.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectorPat {
    pub target: TargetPat,
    pub in_addr: AddrPat,
    pub in_data: DataPat,
    pub out_addr: AddrPat,
    pub out_data: DataPat,
}

impl SectorPat {
    /// Parses the five registers from pattern strings.
    pub fn parse(target: &str, in_addr: &str, in_data: &str, out_addr: &str, out_data: &str) -> Result<Self> {
        Ok(SectorPat {
            target: target.parse()?,
            in_addr: in_addr.parse()?,
            in_data: in_data.parse()?,
            out_addr: out_addr.parse()?,
            out_data: out_data.parse()?,
        })
    }
}

#[derive(Clone, Debug, Default)]
struct Env {
    addr: BTreeMap<String, Vec<Address>>,
    data: BTreeMap<String, Vec<Symbol>>,
}

fn bind<T: Clone + PartialEq>(map: &mut BTreeMap<String, Vec<T>>, name: &str, val: &[T]) -> bool {
    match map.get(name) {
        Some(v) => v.as_slice() == val,
        None => {
            map.insert(name.to_string(), val.to_vec());
            true
        }
    }
}

fn match_word<T: Clone + PartialEq>(items: &[Item<T>], word: &[T], map: &mut BTreeMap<String, Vec<T>>) -> bool {
    let mut fixed = 0;
    let mut free = 0;
    for it in items {
        match it {
            Item::Rest { len: None, .. } => free += 1,
            Item::Rest { len: Some(l), .. } => fixed += l,
            _ => fixed += 1,
        }
    }
    if free > 1 || word.len() < fixed || (free == 0 && word.len() != fixed) {
        return false;
    }
    let slack = word.len() - fixed;
    let mut pos = 0;
    for it in items {
        let ok = match it {
            Item::Var(n) => {
                pos += 1;
                bind(map, n, &word[pos - 1..pos])
            }
            Item::Lit(x) => {
                pos += 1;
                word[pos - 1] == *x
            }
            Item::Rest { name, len } => {
                let l = len.unwrap_or(slack);
                pos += l;
                bind(map, name, &word[pos - l..pos])
            }
        };
        if !ok {
            return false;
        }
    }
    true
}

fn build_word<T: Clone>(items: &[Item<T>], map: &BTreeMap<String, Vec<T>>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for it in items {
        match it {
            Item::Lit(x) => out.push(x.clone()),
            Item::Var(n) => match map.get(n).map(|v| v.as_slice()) {
                Some([x]) => out.push(x.clone()),
                _ => return Err(AqcError::InvalidRule(format!("${n} is not bound to one letter"))),
            },
            Item::Rest { name, len } => {
                let v = map
                    .get(name)
                    .ok_or_else(|| AqcError::InvalidRule(format!("*{name} is unbound")))?;
                if len.is_some_and(|l| l != v.len()) {
                    return Err(AqcError::InvalidRule(format!("*{name} has the wrong length")));
                }
                out.extend(v.iter().cloned());
            }
        }
    }
    Ok(out)
}

fn match_target(p: &TargetPat, t: Option<Address>, env: &mut Env) -> bool {
    match (p, t) {
        (TargetPat::Empty, None) => true,
        (TargetPat::Var(n), Some(a)) => bind(&mut env.addr, n, &[a]),
        (TargetPat::Lit(x), Some(a)) => *x == a,
        (TargetPat::Any(n), t) => bind(&mut env.addr, n, t.as_slice()),
        _ => false,
    }
}

fn build_target(p: &TargetPat, env: &Env) -> Result<Option<Address>> {
    match p {
        TargetPat::Empty => Ok(None),
        TargetPat::Lit(a) => Ok(Some(*a)),
        TargetPat::Var(n) | TargetPat::Any(n) => match env.addr.get(n).map(|v| v.as_slice()) {
            Some([a]) => Ok(Some(*a)),
            Some([]) if matches!(p, TargetPat::Any(_)) => Ok(None),
            _ => Err(AqcError::InvalidRule(format!("target variable {n} does not hold one address"))),
        },
    }
}

impl SectorPat {
    fn matches(&self, s: &Sector, env: &mut Env) -> bool {
        match_target(&self.target, s.target, env)
            && match_word(&self.in_addr.0, s.input.addr.letters(), &mut env.addr)
            && match_word(&self.in_data.0, s.input.data.symbols(), &mut env.data)
            && match_word(&self.out_addr.0, s.output.addr.letters(), &mut env.addr)
            && match_word(&self.out_data.0, s.output.data.symbols(), &mut env.data)
    }

    fn build(&self, env: &Env) -> Result<Sector> {
        Ok(Sector {
            target: build_target(&self.target, env)?,
            input: Register::new(
                AddressWord::from_vec(build_word(&self.in_addr.0, &env.addr)?),
                DataWord::new(build_word(&self.in_data.0, &env.data)?),
            ),
            output: Register::new(
                AddressWord::from_vec(build_word(&self.out_addr.0, &env.addr)?),
                DataWord::new(build_word(&self.out_data.0, &env.data)?),
            ),
        })
    }

    fn map_literals(&self, f: &impl Fn(Address) -> Address) -> SectorPat {
        let word = |w: &AddrPat| {
            WordPat(
                w.0.iter()
                    .map(|it| match it {
                        Item::Lit(a) => Item::Lit(f(*a)),
                        other => other.clone(),
                    })
                    .collect(),
            )
        };
        SectorPat {
            target: match &self.target {
                TargetPat::Lit(a) => TargetPat::Lit(f(*a)),
                other => other.clone(),
            },
            in_addr: word(&self.in_addr),
            in_data: self.in_data.clone(),
            out_addr: word(&self.out_addr),
            out_data: self.out_data.clone(),
        }
    }

    fn collect_vars(&self, addr: &mut Vec<String>, data: &mut Vec<String>) {
        match &self.target {
            TargetPat::Var(n) | TargetPat::Any(n) => addr.push(n.clone()),
            _ => {}
        }
        for w in [&self.in_addr, &self.out_addr] {
            for it in &w.0 {
                if let Item::Var(n) | Item::Rest { name: n, .. } = it {
                    addr.push(n.clone());
                }
            }
        }
        for w in [&self.in_data, &self.out_data] {
            for it in &w.0 {
                if let Item::Var(n) | Item::Rest { name: n, .. } = it {
                    data.push(n.clone());
                }
            }
        }
    }

    fn free_rests_ok(&self) -> bool {
        let free = |v: &[Item<Address>]| v.iter().filter(|i| matches!(i, Item::Rest { len: None, .. })).count();
        let free_d = |v: &[Item<Symbol>]| v.iter().filter(|i| matches!(i, Item::Rest { len: None, .. })).count();
        free(&self.in_addr.0) <= 1
            && free(&self.out_addr.0) <= 1
            && free_d(&self.in_data.0) <= 1
            && free_d(&self.out_data.0) <= 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleTerm {
    pub amp: Complex64,
    pub sectors: Vec<SectorPat>,
}

/// `lhs` maps to the superposition `rhs`; variables bound by `lhs` are
/// substituted into every output pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub lhs: Vec<SectorPat>,
    pub rhs: Vec<RuleTerm>,
}

impl Rule {
    pub fn new(lhs: Vec<SectorPat>, rhs: Vec<(Complex64, Vec<SectorPat>)>) -> Self {
        Rule { lhs, rhs: rhs.into_iter().map(|(amp, sectors)| RuleTerm { amp, sectors }).collect() }
    }

    /// Single-output rule with amplitude one.
    pub fn map(lhs: Vec<SectorPat>, rhs: Vec<SectorPat>) -> Self {
        Rule::new(lhs, vec![(Complex64::new(1.0, 0.0), rhs)])
    }

    fn matches(&self, local: &[Sector]) -> Option<Env> {
        let mut env = Env::default();
        self.lhs.iter().zip(local).all(|(p, s)| p.matches(s, &mut env)).then_some(env)
    }

    fn fire(&self, env: &Env) -> Result<Vec<LocalTerm>> {
        self.rhs
            .iter()
            .map(|t| Ok((t.amp, t.sectors.iter().map(|p| p.build(env)).collect::<Result<Local>>()?)))
            .collect()
    }

    fn validate(&self, arity: usize) -> Result<()> {
        if self.lhs.len() != arity || self.rhs.iter().any(|t| t.sectors.len() != arity) {
            return Err(AqcError::InvalidRule(format!("pattern arity differs from gate size {arity}")));
        }
        if self.rhs.is_empty() {
            return Err(AqcError::InvalidRule("rule without outputs".into()));
        }
        let (mut la, mut ld) = (Vec::new(), Vec::new());
        for p in &self.lhs {
            if !p.free_rests_ok() {
                return Err(AqcError::InvalidRule("more than one open subword in a register".into()));
            }
            p.collect_vars(&mut la, &mut ld);
        }
        for t in &self.rhs {
            let (mut ra, mut rd) = (Vec::new(), Vec::new());
            for p in &t.sectors {
                p.collect_vars(&mut ra, &mut rd);
            }
            if let Some(n) = ra.iter().find(|n| !la.contains(n)).or_else(|| rd.iter().find(|n| !ld.contains(n))) {
                return Err(AqcError::InvalidRule(format!("output variable {n} is not bound by the input pattern")));
            }
        }
        Ok(())
    }
}

/// Which register of a sector a primitive acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Input,
    Output,
}

/// Unitary on selected positions of a data word of one exact length.
/// Symbols outside `levels`, or words of another length, are left alone.
/// The first listed position is the most significant digit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataUnitary {
    pub sector: usize,
    pub side: Side,
    pub word_len: usize,
    pub positions: Vec<usize>,
    pub levels: Vec<Symbol>,
    pub matrix: Vec<Vec<Complex64>>,
}

impl DataUnitary {
    /// Qubit unitary on the first `positions.len()` symbols.
    pub fn qubits(sector: usize, side: Side, word_len: usize, matrix: Vec<Vec<Complex64>>) -> Self {
        let k = matrix.len().trailing_zeros() as usize;
        DataUnitary {
            sector,
            side,
            word_len,
            positions: (0..k).collect(),
            levels: vec![Symbol::new("0"), Symbol::new("1")],
            matrix,
        }
    }

    fn apply(&self, local: &[Sector]) -> Vec<LocalTerm> {
        let identity = || vec![(Complex64::new(1.0, 0.0), local.to_vec())];
        let Some(sec) = local.get(self.sector) else { return identity() };
        let word = match self.side {
            Side::Input => &sec.input.data,
            Side::Output => &sec.output.data,
        };
        if word.len() != self.word_len {
            return identity();
        }
        let d = self.levels.len();
        let mut col = 0;
        for &p in &self.positions {
            match self.levels.iter().position(|l| *l == word.symbols()[p]) {
                Some(digit) => col = col * d + digit,
                None => return identity(),
            }
        }
        let mut out = Vec::new();
        for (row, r) in self.matrix.iter().enumerate() {
            let amp = r[col];
            if amp.norm() < PRUNE_EPS {
                continue;
            }
            let mut syms = word.symbols().to_vec();
            let mut rem = row;
            for &p in self.positions.iter().rev() {
                syms[p] = self.levels[rem % d].clone();
                rem /= d;
            }
            let mut next = local.to_vec();
            let reg = match self.side {
                Side::Input => &mut next[self.sector].input,
                Side::Output => &mut next[self.sector].output,
            };
            reg.data = DataWord::new(syms);
            out.push((amp, next));
        }
        out
    }

    fn validate(&self, arity: usize) -> Result<()> {
        let dim = self.levels.len().pow(self.positions.len() as u32);
        if self.sector >= arity || self.positions.iter().any(|&p| p >= self.word_len) {
            return Err(AqcError::InvalidRule("data unitary position out of range".into()));
        }
        if self.matrix.len() != dim || self.matrix.iter().any(|r| r.len() != dim) {
            return Err(AqcError::DimensionMismatch { expected: dim, got: self.matrix.len() });
        }
        let defect = isometry_defect(&self.matrix);
        if defect > NORM_TOL {
            return Err(AqcError::PreconditionFailed(format!("data matrix is not unitary (defect {defect:.3e})")));
        }
        Ok(())
    }
}

fn isometry_defect(m: &[Vec<Complex64>]) -> f64 {
    let n = m.first().map_or(0, |r| r.len());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s: Complex64 = m.iter().map(|r| r[i].conj() * r[j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - target).norm());
        }
    }
    worst
}

/// Explicit matrix over an enumerated local basis; identity elsewhere.
/// Entries are `(row, col, amplitude)` indices into `basis`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalMatrix {
    pub basis: Vec<Local>,
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl LocalMatrix {
    fn apply(&self, local: &[Sector]) -> Vec<LocalTerm> {
        match self.basis.iter().position(|b| b.as_slice() == local) {
            Some(col) => self
                .entries
                .iter()
                .filter(|e| e.1 == col)
                .map(|e| (e.2, self.basis[e.0].clone()))
                .collect(),
            None => vec![(Complex64::new(1.0, 0.0), local.to_vec())],
        }
    }

    fn validate(&self, arity: usize) -> Result<()> {
        let n = self.basis.len();
        if self.basis.iter().any(|b| b.len() != arity) {
            return Err(AqcError::DimensionMismatch { expected: arity, got: 0 });
        }
        if self.entries.iter().any(|e| e.0 >= n || e.1 >= n) {
            return Err(AqcError::InvalidRule("matrix entry outside the local basis".into()));
        }
        let mut dense = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for &(r, c, a) in &self.entries {
            dense[r][c] += a;
        }
        let defect = isometry_defect(&dense);
        if defect > NORM_TOL {
            return Err(AqcError::PreconditionFailed(format!("local matrix is not unitary (defect {defect:.3e})")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpKind {
    Identity,
    /// Swaps the whole input and output registers of every gate sector.
    Flip,
    /// Swaps only the data words of input and output.
    FlipData,
    DataUnitary(DataUnitary),
    /// Polarizing beam splitter on a four-sector gate. `v[i]` and `h[i]` give
    /// the gate position a vertical or horizontal photon entering at `i`
    /// leaves from.
    Pbs { v: Vec<usize>, h: Vec<usize> },
    /// First matching rule wins; unmatched states are left unchanged.
    Rules { rules: Vec<Rule> },
    Matrix(LocalMatrix),
    /// Applied in listed order.
    Sequence { ops: Vec<OpKind> },
}

impl OpKind {
    fn apply(&self, local: &[Sector], gate: &str, checked: bool) -> Result<Vec<LocalTerm>> {
        let one = Complex64::new(1.0, 0.0);
        Ok(match self {
            OpKind::Identity => vec![(one, local.to_vec())],
            OpKind::Flip => {
                let next = local
                    .iter()
                    .map(|s| Sector { target: s.target, input: s.output.clone(), output: s.input.clone() })
                    .collect();
                vec![(one, next)]
            }
            OpKind::FlipData => {
                let next = local
                    .iter()
                    .map(|s| {
                        let mut t = s.clone();
                        std::mem::swap(&mut t.input.data, &mut t.output.data);
                        t
                    })
                    .collect();
                vec![(one, next)]
            }
            OpKind::DataUnitary(u) => u.apply(local),
            OpKind::Pbs { v, h } => vec![(one, pbs_apply(v, h, local))],
            OpKind::Rules { rules } => {
                let hit = rules.iter().enumerate().find_map(|(i, r)| r.matches(local).map(|env| (i, r, env)));
                match hit {
                    None => vec![(one, local.to_vec())],
                    Some((i, r, env)) => {
                        let out = merge(r.fire(&env)?);
                        if checked {
                            let norm = out.iter().map(|(c, _)| c.norm_sqr()).sum::<f64>().sqrt();
                            if (norm - 1.0).abs() > NORM_TOL {
                                return Err(AqcError::NonUnitaryRule { gate: gate.to_string(), rule: i, norm });
                            }
                        }
                        out
                    }
                }
            }
            OpKind::Matrix(m) => m.apply(local),
            OpKind::Sequence { ops } => {
                let mut cur = vec![(one, local.to_vec())];
                for op in ops {
                    let mut next = Vec::new();
                    for (c, l) in cur {
                        for (d, m) in op.apply(&l, gate, checked)? {
                            next.push((c * d, m));
                        }
                    }
                    cur = merge(next);
                }
                cur
            }
        })
    }

    fn validate(&self, arity: usize) -> Result<()> {
        match self {
            OpKind::Identity | OpKind::Flip | OpKind::FlipData => Ok(()),
            OpKind::DataUnitary(u) => u.validate(arity),
            OpKind::Pbs { v, h } => {
                let perm = |p: &Vec<usize>| {
                    let mut s = p.clone();
                    s.sort();
                    s == (0..arity).collect::<Vec<_>>() && (0..arity).all(|i| p[p[i]] == i)
                };
                if arity != 4 || !perm(v) || !perm(h) {
                    return Err(AqcError::InvalidRule("beam splitter needs two involutions of four positions".into()));
                }
                Ok(())
            }
            OpKind::Rules { rules } => rules.iter().try_for_each(|r| r.validate(arity)),
            OpKind::Matrix(m) => m.validate(arity),
            OpKind::Sequence { ops } => ops.iter().try_for_each(|o| o.validate(arity)),
        }
    }

    fn map_literals(&self, f: &impl Fn(Address) -> Address) -> OpKind {
        match self {
            OpKind::Rules { rules } => OpKind::Rules {
                rules: rules
                    .iter()
                    .map(|r| Rule {
                        lhs: r.lhs.iter().map(|p| p.map_literals(f)).collect(),
                        rhs: r
                            .rhs
                            .iter()
                            .map(|t| RuleTerm { amp: t.amp, sectors: t.sectors.iter().map(|p| p.map_literals(f)).collect() })
                            .collect(),
                    })
                    .collect(),
            },
            OpKind::Matrix(m) => OpKind::Matrix(LocalMatrix {
                basis: m.basis.iter().map(|l| l.iter().map(|s| s.map_addresses(f)).collect()).collect(),
                entries: m.entries.clone(),
            }),
            OpKind::Sequence { ops } => OpKind::Sequence { ops: ops.iter().map(|o| o.map_literals(f)).collect() },
            other => other.clone(),
        }
    }

    fn rule_sets(&self) -> Vec<&[Rule]> {
        match self {
            OpKind::Rules { rules } => vec![rules.as_slice()],
            OpKind::Sequence { ops } => ops.iter().flat_map(|o| o.rule_sets()).collect(),
            _ => Vec::new(),
        }
    }
}

/// Sums duplicate outputs and drops negligible amplitudes; order follows the
/// canonical order of local states.
fn merge(terms: Vec<LocalTerm>) -> Vec<LocalTerm> {
    let mut acc: BTreeMap<Local, Complex64> = BTreeMap::new();
    for (c, l) in terms {
        *acc.entry(l).or_default() += c;
    }
    acc.into_iter().filter(|(_, c)| c.norm() >= PRUNE_EPS).map(|(l, c)| (c, l)).collect()
}

/// Parses a photon-count symbol `nVmH`.
pub fn parse_photons(s: &Symbol) -> Option<(usize, usize)> {
    let (v, rest) = s.as_str().split_once('V')?;
    let h = rest.strip_suffix('H')?;
    Some((v.parse().ok()?, h.parse().ok()?))
}

pub fn photon_symbol(v: usize, h: usize) -> Symbol {
    Symbol::new(&format!("{v}V{h}H"))
}

fn photon_word(v: usize, h: usize) -> DataWord {
    if v == 0 && h == 0 {
        DataWord::empty()
    } else {
        DataWord::new(vec![photon_symbol(v, h)])
    }
}

fn counts(w: &DataWord) -> Option<(usize, usize)> {
    match w.symbols() {
        [] => Some((0, 0)),
        [s] => parse_photons(s).filter(|&c| c != (0, 0)),
        _ => None,
    }
}

/// (V, H) photon counts of the input and output register.
type PortCounts = ((usize, usize), (usize, usize));

fn pbs_apply(v: &[usize], h: &[usize], local: &[Sector]) -> Local {
    let parsed: Option<Vec<PortCounts>> =
        local.iter().map(|s| Some((counts(&s.input.data)?, counts(&s.output.data)?))).collect();
    let Some(c) = parsed else { return local.to_vec() };
    local
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut t = s.clone();
            t.output.data = photon_word(c[v[i]].0 .0, c[h[i]].0 .1);
            t.input.data = photon_word(c[v[i]].1 .0, c[h[i]].1 .1);
            t
        })
        .collect()
}

/// An operator bound to the sectors of one gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOperator {
    /// Gate addresses in the order the operator refers to them.
    pub gate: Vec<Address>,
    /// Tag used in reports and as the gate-vertex label of graph encodings.
    pub name: String,
    pub kind: OpKind,
}

impl GateOperator {
    pub fn new(gate: Vec<Address>, name: &str, kind: OpKind) -> Result<Self> {
        let op = GateOperator { gate, name: name.to_string(), kind };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gate.is_empty() {
            return Err(AqcError::Partition("empty gate".into()));
        }
        self.kind.validate(self.gate.len())
    }

    /// Applies the operator, rejecting rules whose output is not normalized.
    pub fn apply(&self, local: &[Sector]) -> Result<Vec<LocalTerm>> {
        self.kind.apply(local, &self.name, true)
    }

    /// Applies the operator without the per-rule norm check.
    pub fn apply_unchecked(&self, local: &[Sector]) -> Result<Vec<LocalTerm>> {
        self.kind.apply(local, &self.name, false)
    }

    /// Renames gate addresses and address literals inside patterns.
    pub fn relabel(&self, f: &impl Fn(Address) -> Address) -> GateOperator {
        GateOperator { gate: self.gate.iter().map(|&a| f(a)).collect(), name: self.name.clone(), kind: self.kind.map_literals(f) }
    }

    /// Pairs of rules that both match `local` but disagree on its image.
    pub fn overlaps(&self, local: &[Sector]) -> Result<Vec<(usize, usize)>> {
        let mut found = Vec::new();
        for rules in self.kind.rule_sets() {
            let hits: Vec<(usize, Vec<LocalTerm>)> = rules
                .iter()
                .enumerate()
                .filter_map(|(i, r)| r.matches(local).map(|env| (i, env, r)))
                .map(|(i, env, r)| Ok((i, merge(r.fire(&env)?))))
                .collect::<Result<_>>()?;
            for (a, (i, x)) in hits.iter().enumerate() {
                for (j, y) in &hits[a + 1..] {
                    if !same_terms(x, y) {
                        found.push((*i, *j));
                    }
                }
            }
        }
        Ok(found)
    }
}

fn same_terms(x: &[LocalTerm], y: &[LocalTerm]) -> bool {
    x.len() == y.len() && x.iter().zip(y).all(|(a, b)| a.1 == b.1 && (a.0 - b.0).norm() < 1e-12)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UnitarityReport {
    pub closure_size: usize,
    pub truncated: bool,
    /// max |G†G − I| over the closure.
    pub max_defect: f64,
    pub address_violations: Vec<String>,
    pub overlaps: Vec<(usize, usize)>,
}

impl UnitarityReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_defect <= tol && self.address_violations.is_empty() && self.overlaps.is_empty()
    }
}

/// Closes `probes` under the operator (breadth first, at most `max_states`
/// expanded states), then measures the isometry defect of the operator's
/// matrix on that closure and checks that every output stores the same
/// address multiset as its input.
pub fn check_gate_operator(op: &GateOperator, probes: &[Local], max_states: usize) -> Result<UnitarityReport> {
    let mut index: HashMap<Local, usize> = HashMap::new();
    let mut queue: VecDeque<Local> = VecDeque::new();
    for p in probes {
        if !index.contains_key(p) {
            index.insert(p.clone(), index.len());
            queue.push_back(p.clone());
        }
    }
    let mut report = UnitarityReport::default();
    // rows[z] lists (x, ⟨z|G|x⟩) for expanded columns x.
    let mut rows: HashMap<usize, Vec<(usize, Complex64)>> = HashMap::new();
    let mut expanded = Vec::new();
    while let Some(x) = queue.pop_front() {
        if expanded.len() >= max_states {
            report.truncated = true;
            break;
        }
        let xi = index[&x];
        expanded.push(xi);
        let before = stored(&x);
        for (c, y) in merge(op.apply_unchecked(&x)?) {
            if stored(&y) != before && report.address_violations.len() < 16 {
                report.address_violations.push(format!("{} -> {}", show(&x), show(&y)));
            }
            let yi = match index.get(&y) {
                Some(&i) => i,
                None => {
                    let i = index.len();
                    index.insert(y.clone(), i);
                    queue.push_back(y);
                    i
                }
            };
            rows.entry(yi).or_default().push((xi, c));
        }
        for ov in op.overlaps(&x)? {
            if !report.overlaps.contains(&ov) {
                report.overlaps.push(ov);
            }
        }
    }
    let mut gram: HashMap<(usize, usize), Complex64> = HashMap::new();
    for entries in rows.values() {
        for &(x, a) in entries {
            for &(y, b) in entries {
                *gram.entry((x, y)).or_default() += a.conj() * b;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for &x in &expanded {
        worst = worst.max((gram.get(&(x, x)).copied().unwrap_or_default() - 1.0).norm());
    }
    for (&(x, y), v) in &gram {
        if x != y {
            worst = worst.max(v.norm());
        }
    }
    report.closure_size = expanded.len();
    report.max_defect = worst;
    Ok(report)
}

fn stored(l: &[Sector]) -> Vec<Address> {
    let mut v: Vec<Address> = l.iter().flat_map(|s| s.stored_addresses()).collect();
    v.sort();
    v
}

fn show(l: &[Sector]) -> String {
    l.iter().map(|s| format!("[{s}]")).collect::<Vec<_>>().join(" ")
}
