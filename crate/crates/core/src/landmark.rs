//! Named checkpoints along a run, and the bipartition analysis they use.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::evolution::{run, scatter, Circuit};
use crate::model::{Address, BasisState, DataWord, Sector, SparseState};
use crate::operator::Side;

/// Schmidt coefficients of `state` for the bipartition given by `split`,
/// in decreasing order.
pub fn schmidt_coefficients<A, B>(state: &SparseState, split: impl Fn(&BasisState) -> (A, B)) -> Vec<f64>
where
    A: Ord,
    B: Ord,
{
    let mut rows: BTreeMap<A, usize> = BTreeMap::new();
    let mut cols: BTreeMap<B, usize> = BTreeMap::new();
    let mut entries = Vec::new();
    for (b, c) in state.iter() {
        let (x, y) = split(b);
        let n = rows.len();
        let r = *rows.entry(x).or_insert(n);
        let n = cols.len();
        let k = *cols.entry(y).or_insert(n);
        entries.push((r, k, *c));
    }
    if entries.is_empty() {
        return Vec::new();
    }
    let mut m = DMatrix::<Complex64>::zeros(rows.len(), cols.len());
    for (r, k, c) in entries {
        m[(r, k)] += c;
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Weight outside the leading Schmidt term, relative to the norm:
/// zero exactly when the state is a product across the split.
pub fn schmidt_residual(sv: &[f64]) -> f64 {
    let total: f64 = sv.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 0.0;
    }
    (sv.iter().skip(1).map(|s| s * s).sum::<f64>() / total).sqrt()
}

/// Splits off whole sectors from the rest of the circuit.
pub fn split_sectors(sectors: &[Address]) -> impl Fn(&BasisState) -> (Vec<Sector>, BasisState) + '_ {
    move |b| {
        let mut rest = b.clone();
        let part = sectors.iter().map(|&a| rest.remove(a).unwrap_or_default()).collect();
        (part, rest)
    }
}

/// Splits one data register from everything else.
pub fn split_register(sector: Address, side: Side) -> impl Fn(&BasisState) -> (DataWord, BasisState) {
    move |b| {
        let mut rest = b.clone();
        let word = match rest.sector_mut(sector) {
            Some(s) => {
                let reg = match side {
                    Side::Input => &mut s.input,
                    Side::Output => &mut s.output,
                };
                std::mem::take(&mut reg.data)
            }
            None => DataWord::empty(),
        };
        (word, rest)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    /// The state is |rest⟩ ⊗ Σ amp |word⟩ with that register holding the
    /// words, everything else in one fixed configuration.
    RegisterData {
        sector: Address,
        side: Side,
        expected: Vec<(Complex64, DataWord)>,
        #[serde(default)]
        up_to_phase: bool,
        tol: f64,
    },
    /// Every term has the sector in exactly this configuration.
    SectorConfig { sector: Address, expected: Sector, tol: f64 },
    /// The listed sectors factor out of the state.
    Factorizes { sectors: Vec<Address>, tol: f64 },
    Norm { tol: f64 },
}

/// `steps` applications of G, followed by one more scatter when
/// `scattered` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub name: String,
    pub steps: usize,
    #[serde(default)]
    pub scattered: bool,
    pub check: Predicate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkResult {
    pub name: String,
    pub passed: bool,
    /// Distance, residual or weight defect, depending on the predicate.
    pub error: f64,
}

impl Predicate {
    /// Returns the deviation and whether it is within tolerance.
    pub fn evaluate(&self, state: &SparseState) -> (f64, bool) {
        match self {
            Predicate::RegisterData { sector, side, expected, up_to_phase, tol } => {
                let Some((first, _)) = state.iter().next() else { return (f64::INFINITY, false) };
                let (_, rest) = split_register(*sector, *side)(first);
                let target = SparseState::from_terms(expected.iter().map(|(c, w)| {
                    let mut b = rest.clone();
                    if let Some(s) = b.sector_mut(*sector) {
                        match side {
                            Side::Input => s.input.data = w.clone(),
                            Side::Output => s.output.data = w.clone(),
                        }
                    }
                    (b, *c)
                }));
                let d = if *up_to_phase { state.distance_up_to_phase(&target) } else { state.distance(&target) };
                (d, d <= *tol)
            }
            Predicate::SectorConfig { sector, expected, tol } => {
                let w: f64 = state
                    .iter()
                    .filter(|(b, _)| b.sector(*sector) == Some(expected))
                    .map(|(_, c)| c.norm_sqr())
                    .sum();
                let d = (state.norm().powi(2) - w).abs().max((w - 1.0).abs());
                (d, d <= *tol)
            }
            Predicate::Factorizes { sectors, tol } => {
                let r = schmidt_residual(&schmidt_coefficients(state, split_sectors(sectors)));
                (r, r <= *tol)
            }
            Predicate::Norm { tol } => {
                let d = (state.norm() - 1.0).abs();
                (d, d <= *tol)
            }
        }
    }
}

/// Evaluates every landmark of the circuit.
pub fn check_landmarks(c: &Circuit) -> Result<Vec<LandmarkResult>> {
    let mut out = Vec::new();
    let mut cache: BTreeMap<usize, SparseState> = BTreeMap::new();
    for lm in &c.landmarks {
        let at = match cache.range(..=lm.steps).next_back() {
            Some((&k, s)) => run(&c.skeleton, s, lm.steps - k)?,
            None => run(&c.skeleton, &c.initial, lm.steps)?,
        };
        cache.insert(lm.steps, at.clone());
        let state = if lm.scattered { scatter(&c.skeleton, &at)? } else { at };
        let (error, passed) = lm.check.evaluate(&state);
        out.push(LandmarkResult { name: lm.name.clone(), passed, error });
    }
    Ok(out)
}
