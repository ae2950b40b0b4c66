//! JSON circuit documents.
//!
//! ```json
//! {
//!   "name": "bell",
//!   "addresses": [1, 2, 3, 4],
//!   "gates": [[1], [2], [3], [4]],
//!   "data_alphabet": ["0", "1"],
//!   "max_data_len": 2,
//!   "operators": [{"name": "F", "kind": "flip"}, ...],
//!   "initial_state": [{"amplitude": [1.0, 0.0], "sectors": {"1": {"target": "2", "in_data": "0 0"}}}],
//!   "landmarks": []
//! }
//! ```
//!
//! `operators[i]` acts on `gates[i]`, sectors in the listed order. Words are
//! space-separated symbols and ε is the empty string. Sectors missing from a
//! term of `initial_state` are empty.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AqcError, Result};
use crate::evolution::{Circuit, Skeleton};
use crate::landmark::Landmark;
use crate::model::{Address, BasisState, Sector, SparseState, Symbol};
use crate::operator::{GateOperator, OpKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorDoc {
    pub name: String,
    #[serde(flatten)]
    pub op: OpKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub amplitude: Complex64,
    pub sectors: BTreeMap<Address, Sector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDocument {
    #[serde(default)]
    pub name: String,
    pub addresses: Vec<Address>,
    pub gates: Vec<Vec<Address>>,
    pub data_alphabet: Vec<Symbol>,
    pub max_data_len: usize,
    pub operators: Vec<OperatorDoc>,
    pub initial_state: Vec<TermDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub landmarks: Vec<Landmark>,
}

fn located(place: &str, e: AqcError) -> AqcError {
    AqcError::Parse(format!("{place}: {e}"))
}

impl CircuitDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| AqcError::Parse(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn from_circuit(c: &Circuit) -> Self {
        let skel = &c.skeleton;
        CircuitDocument {
            name: c.name.clone(),
            addresses: skel.addresses().iter().copied().collect(),
            gates: skel.operators().iter().map(|op| op.gate.clone()).collect(),
            data_alphabet: skel.alphabet().iter().cloned().collect(),
            max_data_len: skel.max_data_len(),
            operators: skel.operators().iter().map(|op| OperatorDoc { name: op.name.clone(), op: op.kind.clone() }).collect(),
            initial_state: c
                .initial
                .iter()
                .map(|(b, amp)| TermDoc {
                    amplitude: *amp,
                    sectors: b.sectors().iter().filter(|(_, s)| !s.is_empty()).map(|(a, s)| (*a, s.clone())).collect(),
                })
                .collect(),
            landmarks: c.landmarks.clone(),
        }
    }

    pub fn to_circuit(&self) -> Result<Circuit> {
        if self.gates.len() != self.operators.len() {
            return Err(AqcError::Parse(format!("{} gates but {} operators", self.gates.len(), self.operators.len())));
        }
        let ops = self
            .gates
            .iter()
            .zip(&self.operators)
            .enumerate()
            .map(|(i, (g, d))| GateOperator::new(g.clone(), &d.name, d.op.clone()).map_err(|e| located(&format!("operators[{i}]"), e)))
            .collect::<Result<Vec<_>>>()?;
        let skel = Skeleton::new(self.addresses.iter().copied(), ops, self.data_alphabet.iter().cloned(), self.max_data_len)
            .map_err(|e| located("gates", e))?;
        let mut initial = SparseState::new();
        for (i, t) in self.initial_state.iter().enumerate() {
            let mut m: BTreeMap<Address, Sector> = skel.addresses().iter().map(|&a| (a, Sector::empty())).collect();
            for (&a, s) in &t.sectors {
                if !skel.addresses().contains(&a) {
                    return Err(located(&format!("initial_state[{i}]"), AqcError::UnknownAddress(a)));
                }
                m.insert(a, s.clone());
            }
            let b = BasisState::new(m);
            skel.validate_basis(&b).map_err(|e| located(&format!("initial_state[{i}]"), e))?;
            initial.add(b, t.amplitude);
        }
        initial.prune();
        let norm = initial.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(AqcError::Parse(format!("initial_state has norm {norm}")));
        }
        let mut c = Circuit::new(&self.name, skel, initial)?;
        c.landmarks = self.landmarks.clone();
        Ok(c)
    }
}

pub fn load_circuit(path: &Path) -> Result<Circuit> {
    let text = std::fs::read_to_string(path).map_err(|e| AqcError::Parse(format!("{}: {e}", path.display())))?;
    CircuitDocument::from_json(&text)
        .and_then(|d| d.to_circuit())
        .map_err(|e| AqcError::Parse(format!("{}: {e}", path.display())))
}

pub fn circuit_to_json(c: &Circuit) -> String {
    CircuitDocument::from_circuit(c).to_json()
}
