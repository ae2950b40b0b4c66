//! Encoding of circuit states into port graphs and the graph evolution
//! E = E_T ∘ E_S.
//!
//! Every address a becomes a sector vertex s_a and every gate g a gate
//! vertex r_g (named by its least address). Sector vertices carry the ports
//! p_g (to their gate vertex), e (the single slot through which another
//! sector may point at it), τ (target), in_i and out_i (the i-th letter of
//! the stored address words). Data words become vertex labels.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use num_complex::Complex64;

use crate::error::{AqcError, Result};
use crate::evolution::{run_with, Circuit, Skeleton};
use crate::exec::Exec;
use crate::model::{Address, AddressWord, BasisState, DataWord, Register, Sector, SparseState, PRUNE_EPS};
use crate::operator::Local;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    Sector(Address),
    Gate(Address),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    P(Address),
    E,
    Tau,
    In(usize),
    Out(usize),
}

pub type Endpoint = (Vertex, Port);

/// Unordered edge, stored with the smaller endpoint first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(Endpoint, Endpoint);

impl Edge {
    pub fn new(x: Endpoint, y: Endpoint) -> Self {
        if x <= y {
            Edge(x, y)
        } else {
            Edge(y, x)
        }
    }

    pub fn ends(&self) -> (Endpoint, Endpoint) {
        (self.0, self.1)
    }
}

/// One graph configuration: edges plus the (input, output) data labels of
/// the sector vertices. Gate-vertex labels live in [`GraphState`] since they
/// never change.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortGraph {
    pub edges: Vec<Edge>,
    pub labels: BTreeMap<Address, (DataWord, DataWord)>,
}

/// Superposition of port graphs over a fixed vertex set.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphState {
    pub gate_labels: BTreeMap<Address, String>,
    pub terms: BTreeMap<PortGraph, Complex64>,
}

fn gate_vertex(gate: &[Address]) -> Vertex {
    Vertex::Gate(*gate.iter().min().expect("gates are non-empty"))
}

fn gate_key(gate: &[Address]) -> Address {
    *gate.iter().min().expect("gates are non-empty")
}

fn sector_edges(a: Address, s: &Sector, out: &mut Vec<Edge>) {
    let me = Vertex::Sector(a);
    if let Some(t) = s.target {
        out.push(Edge::new((me, Port::Tau), (Vertex::Sector(t), Port::E)));
    }
    for (i, &x) in s.input.addr.letters().iter().enumerate() {
        out.push(Edge::new((me, Port::In(i + 1)), (Vertex::Sector(x), Port::E)));
    }
    for (i, &x) in s.output.addr.letters().iter().enumerate() {
        out.push(Edge::new((me, Port::Out(i + 1)), (Vertex::Sector(x), Port::E)));
    }
}

fn gate_edges(skel: &Skeleton, out: &mut Vec<Edge>) {
    for op in skel.operators() {
        let g = gate_vertex(&op.gate);
        for &a in &op.gate {
            out.push(Edge::new((Vertex::Sector(a), Port::P(a)), (g, Port::P(a))));
        }
    }
}

/// Graph of one basis state.
pub fn encode_basis(skel: &Skeleton, b: &BasisState) -> PortGraph {
    let mut edges = Vec::new();
    gate_edges(skel, &mut edges);
    let mut labels = BTreeMap::new();
    for (&a, s) in b.sectors() {
        sector_edges(a, s, &mut edges);
        labels.insert(a, (s.input.data.clone(), s.output.data.clone()));
    }
    edges.sort();
    PortGraph { edges, labels }
}

pub fn encode(skel: &Skeleton, state: &SparseState) -> GraphState {
    let gate_labels = skel.operators().iter().map(|op| (gate_key(&op.gate), op.name.clone())).collect();
    let terms = state.iter().map(|(b, c)| (encode_basis(skel, b), *c)).collect();
    GraphState { gate_labels, terms }
}

struct Adjacency(HashMap<Endpoint, Endpoint>);

impl Adjacency {
    fn of(g: &PortGraph) -> Result<Self> {
        let mut m = HashMap::new();
        for e in &g.edges {
            let (x, y) = e.ends();
            for (p, q) in [(x, y), (y, x)] {
                if m.insert(p, q).is_some() {
                    return Err(AqcError::Invariant(format!("port {:?} used twice", p)));
                }
            }
        }
        Ok(Adjacency(m))
    }

    fn sector_at(&self, v: Vertex, p: Port) -> Result<Option<Address>> {
        match self.0.get(&(v, p)) {
            None => Ok(None),
            Some(&(Vertex::Sector(x), Port::E)) => Ok(Some(x)),
            Some(other) => Err(AqcError::Invariant(format!("port {p:?} of {v:?} ends at {other:?}"))),
        }
    }

    fn word(&self, a: Address, port: fn(usize) -> Port) -> Result<AddressWord> {
        let mut letters = Vec::new();
        while let Some(x) = self.sector_at(Vertex::Sector(a), port(letters.len() + 1))? {
            letters.push(x);
        }
        AddressWord::new(letters)
    }

    /// Steps 1–3 of the scatter: reads sector a back from its edges.
    fn sector(&self, g: &PortGraph, a: Address) -> Result<Sector> {
        let (din, dout) = g.labels.get(&a).cloned().ok_or(AqcError::UnknownAddress(a))?;
        Ok(Sector {
            target: self.sector_at(Vertex::Sector(a), Port::Tau)?,
            input: Register::new(self.word(a, Port::In)?, din),
            output: Register::new(self.word(a, Port::Out)?, dout),
        })
    }
}

/// Inverse of [`encode_basis`].
pub fn decode_basis(g: &PortGraph) -> Result<BasisState> {
    let adj = Adjacency::of(g)?;
    let mut m = BTreeMap::new();
    for &a in g.labels.keys() {
        m.insert(a, adj.sector(g, a)?);
    }
    Ok(BasisState::new(m))
}

fn is_register_edge(e: &Edge, a: Address) -> bool {
    let (x, y) = e.ends();
    [x, y].iter().any(|&(v, p)| v == Vertex::Sector(a) && matches!(p, Port::Tau | Port::In(_) | Port::Out(_)))
}

/// E_T on one graph: along every τ-edge {s_a:τ, s_t:e}, the out-edges of
/// s_a and the in-edges of s_t trade places, as do the output label of s_a
/// and the input label of s_t.
pub fn graph_transport_basis(g: &PortGraph) -> PortGraph {
    let mut pairs: HashMap<Address, Address> = HashMap::new();
    for e in &g.edges {
        let (x, y) = e.ends();
        for ((v, p), (w, q)) in [(x, y), (y, x)] {
            if let (Vertex::Sector(a), Port::Tau, Vertex::Sector(t), Port::E) = (v, p, w, q) {
                pairs.insert(a, t);
            }
        }
    }
    let receivers: HashMap<Address, Address> = pairs.iter().map(|(&a, &t)| (t, a)).collect();
    let moved = |(v, p): Endpoint| -> Endpoint {
        match (v, p) {
            (Vertex::Sector(a), Port::Out(j)) if pairs.contains_key(&a) => (Vertex::Sector(pairs[&a]), Port::In(j)),
            (Vertex::Sector(t), Port::In(j)) if receivers.contains_key(&t) => (Vertex::Sector(receivers[&t]), Port::Out(j)),
            _ => (v, p),
        }
    };
    let mut edges: Vec<Edge> = g.edges.iter().map(|e| {
        let (x, y) = e.ends();
        Edge::new(moved(x), moved(y))
    }).collect();
    edges.sort();
    let mut labels = g.labels.clone();
    for (&a, &t) in &pairs {
        let out_a = g.labels[&a].1.clone();
        let in_t = g.labels[&t].0.clone();
        labels.get_mut(&a).expect("labelled").1 = in_t;
        labels.get_mut(&t).expect("labelled").0 = out_a;
    }
    PortGraph { edges, labels }
}

pub fn graph_transport(g: &GraphState) -> GraphState {
    GraphState { gate_labels: g.gate_labels.clone(), terms: g.terms.iter().map(|(x, c)| (graph_transport_basis(x), *c)).collect() }
}

/// E_S on one graph: each gate vertex rebuilds its gate-local state from
/// the incident sectors, applies its operator and rewrites edges and labels.
pub fn graph_scatter_basis(skel: &Skeleton, g: &PortGraph) -> Result<Vec<(Complex64, PortGraph)>> {
    let mut acc = vec![(Complex64::new(1.0, 0.0), g.clone())];
    for op in skel.operators() {
        let mut next = Vec::new();
        for (c, h) in acc {
            let adj = Adjacency::of(&h)?;
            // The gate vertex's p-ports name its sectors.
            let members: Vec<Address> = op
                .gate
                .iter()
                .map(|&a| match adj.0.get(&(gate_vertex(&op.gate), Port::P(a))) {
                    Some(&(Vertex::Sector(x), Port::P(_))) => Ok(x),
                    _ => Err(AqcError::Invariant(format!("gate vertex lacks port p_{a}"))),
                })
                .collect::<Result<_>>()?;
            let local: Local = members.iter().map(|&a| adj.sector(&h, a)).collect::<Result<_>>()?;
            for (amp, out) in op.apply(&local)? {
                let mut edges: Vec<Edge> = h.edges.iter().filter(|e| !members.iter().any(|&a| is_register_edge(e, a))).copied().collect();
                let mut labels = h.labels.clone();
                for (&a, s) in members.iter().zip(&out) {
                    sector_edges(a, s, &mut edges);
                    labels.insert(a, (s.input.data.clone(), s.output.data.clone()));
                }
                edges.sort();
                next.push((c * amp, PortGraph { edges, labels }));
            }
        }
        acc = next;
    }
    Ok(acc)
}

pub fn graph_scatter(skel: &Skeleton, g: &GraphState, exec: Exec) -> Result<GraphState> {
    let items: Vec<(&PortGraph, &Complex64)> = g.terms.iter().collect();
    let parts = exec.try_map(&items, |(h, c)| Ok(graph_scatter_basis(skel, h)?.into_iter().map(|(a, x)| (*c * a, x)).collect::<Vec<_>>()))?;
    let mut terms: BTreeMap<PortGraph, Complex64> = BTreeMap::new();
    for (c, h) in parts.into_iter().flatten() {
        *terms.entry(h).or_insert(Complex64::new(0.0, 0.0)) += c;
    }
    terms.retain(|_, c| c.norm() > PRUNE_EPS);
    Ok(GraphState { gate_labels: g.gate_labels.clone(), terms })
}

pub fn graph_step(skel: &Skeleton, g: &GraphState, exec: Exec) -> Result<GraphState> {
    Ok(graph_transport(&graph_scatter(skel, g, exec)?))
}

pub fn graph_distance(x: &GraphState, y: &GraphState) -> f64 {
    let mut s = 0.0;
    for (k, a) in &x.terms {
        s += (a - y.terms.get(k).copied().unwrap_or_default()).norm_sqr();
    }
    for (k, b) in &y.terms {
        if !x.terms.contains_key(k) {
            s += b.norm_sqr();
        }
    }
    s.sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub steps: usize,
    /// Distance between e(G^j C) and E^j e(C) for j = 1..=steps.
    pub distances: Vec<f64>,
    pub max_distance: f64,
}

impl EquivalenceReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_distance < tol
    }
}

/// Runs the circuit and the encoded graph side by side for `k` steps.
pub fn check_equivalence(c: &Circuit, k: usize, exec: Exec) -> Result<EquivalenceReport> {
    let mut state = c.initial.clone();
    let mut graph = encode(&c.skeleton, &state);
    let mut distances = Vec::with_capacity(k);
    for _ in 0..k {
        state = run_with(&c.skeleton, &state, 1, exec)?;
        graph = graph_step(&c.skeleton, &graph, exec)?;
        distances.push(graph_distance(&encode(&c.skeleton, &state), &graph));
    }
    let max_distance = distances.iter().copied().fold(0.0, f64::max);
    Ok(EquivalenceReport { steps: k, distances, max_distance })
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Sector(a) => write!(f, "s{a}"),
            Vertex::Gate(a) => write!(f, "r{a}"),
        }
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Port::P(a) => write!(f, "p{a}"),
            Port::E => write!(f, "e"),
            Port::Tau => write!(f, "tau"),
            Port::In(i) => write!(f, "in{i}"),
            Port::Out(i) => write!(f, "out{i}"),
        }
    }
}

/// Line-based edge list: one `term` header per graph with its amplitude,
/// then `label`, `gate` and `edge` lines.
pub fn to_edge_list(g: &GraphState) -> String {
    let mut s = String::new();
    for (h, c) in &g.terms {
        let _ = writeln!(s, "term {:?} {:?}", c.re, c.im);
        for (a, name) in &g.gate_labels {
            let _ = writeln!(s, "gate r{a} {name}");
        }
        for (a, (i, o)) in &h.labels {
            let _ = writeln!(s, "label s{a} {i} | {o}");
        }
        for e in &h.edges {
            let ((v, p), (w, q)) = e.ends();
            let _ = writeln!(s, "edge {v}:{p} {w}:{q}");
        }
    }
    s
}

/// DOT rendering, one cluster per term.
pub fn to_dot(g: &GraphState) -> String {
    let mut s = String::from("graph qcgd {\n  node [fontname=\"monospace\"];\n");
    for (k, (h, c)) in g.terms.iter().enumerate() {
        let _ = writeln!(s, "  subgraph cluster_{k} {{\n    label=\"{:.6}{:+.6}i\";", c.re, c.im);
        for (a, name) in &g.gate_labels {
            let _ = writeln!(s, "    t{k}_r{a} [shape=box, color=red, label=\"{name}\"];");
        }
        for (a, (i, o)) in &h.labels {
            let _ = writeln!(s, "    t{k}_s{a} [label=\"s{a}\\n{i} | {o}\"];");
        }
        for e in &h.edges {
            let ((v, p), (w, q)) = e.ends();
            let color = match (p, q) {
                (Port::P(_), _) | (_, Port::P(_)) => "red",
                (Port::Tau, _) | (_, Port::Tau) => "black",
                _ => "blue",
            };
            let _ = writeln!(s, "    t{k}_{v} -- t{k}_{w} [taillabel=\"{p}\", headlabel=\"{q}\", color={color}];");
        }
        s.push_str("  }\n");
    }
    s.push_str("}\n");
    s
}
