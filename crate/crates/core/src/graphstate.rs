//! Qubit graph states: preparation, stabilizer check, σz cut and two-vertex merge.

use crate::engine::{merge_kraus, MeasurementRecord, Policy, PureState, Register};
use crate::error::{Error, Result};
use crate::linalg::{c, gates, C64, ZERO};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Undirected simple graph over labeled registers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct Graph {
    vertices: Vec<Register>,
    edges: BTreeSet<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    vertices: Vec<Register>,
    edges: Vec<(String, String)>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = Error;
    fn try_from(j: GraphJson) -> Result<Graph> {
        let mut g = Graph::new(j.vertices)?;
        for (a, b) in j.edges {
            g.add_edge(&a, &b)?;
        }
        Ok(g)
    }
}

impl From<Graph> for GraphJson {
    fn from(g: Graph) -> GraphJson {
        GraphJson {
            edges: g.edges.iter().cloned().collect(),
            vertices: g.vertices,
        }
    }
}

fn key(a: &str, b: &str) -> (String, String) {
    if a < b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl Graph {
    pub fn new(vertices: Vec<Register>) -> Result<Graph> {
        let mut seen = BTreeSet::new();
        for v in &vertices {
            if !seen.insert(v.label.clone()) {
                return Err(Error::DuplicateRegister(v.label.clone()));
            }
        }
        Ok(Graph {
            vertices,
            edges: BTreeSet::new(),
        })
    }

    /// Qubit vertices with the given labels.
    pub fn with_qubits<S: AsRef<str>>(labels: &[S]) -> Result<Graph> {
        Graph::new(labels.iter().map(|l| Register::qubit(l.as_ref())).collect())
    }

    pub fn from_edges<S: AsRef<str>>(labels: &[S], edges: &[(S, S)]) -> Result<Graph> {
        let mut g = Graph::with_qubits(labels)?;
        for (a, b) in edges {
            g.add_edge(a.as_ref(), b.as_ref())?;
        }
        Ok(g)
    }

    pub fn star<S: AsRef<str>>(center: &str, leaves: &[S]) -> Result<Graph> {
        let mut labels = vec![center.to_string()];
        labels.extend(leaves.iter().map(|l| l.as_ref().to_string()));
        let mut g = Graph::with_qubits(&labels)?;
        for l in leaves {
            g.add_edge(center, l.as_ref())?;
        }
        Ok(g)
    }

    pub fn path<S: AsRef<str>>(labels: &[S]) -> Result<Graph> {
        let mut g = Graph::with_qubits(labels)?;
        for w in labels.windows(2) {
            g.add_edge(w[0].as_ref(), w[1].as_ref())?;
        }
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Graph> {
        serde_json::from_str(text).map_err(|e| Error::Graph(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    pub fn vertices(&self) -> &[Register] {
        &self.vertices
    }

    pub fn labels(&self) -> Vec<&str> {
        self.vertices.iter().map(|v| v.label.as_str()).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn contains(&self, v: &str) -> bool {
        self.vertices.iter().any(|r| r.label == v)
    }

    fn require(&self, v: &str) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::Graph(format!("vertex `{v}` absent")))
        }
    }

    pub fn add_vertex(&mut self, reg: Register) -> Result<()> {
        if self.contains(&reg.label) {
            return Err(Error::DuplicateRegister(reg.label));
        }
        self.vertices.push(reg);
        Ok(())
    }

    pub fn add_edge(&mut self, a: &str, b: &str) -> Result<()> {
        if a == b {
            return Err(Error::Graph(format!("self-loop on `{a}`")));
        }
        self.require(a)?;
        self.require(b)?;
        self.edges.insert(key(a, b));
        Ok(())
    }

    pub fn toggle_edge(&mut self, a: &str, b: &str) -> Result<()> {
        let k = key(a, b);
        if !self.edges.remove(&k) {
            self.add_edge(a, b)?;
        }
        Ok(())
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.edges.contains(&key(a, b))
    }

    /// Neighbours of `v` in vertex order.
    pub fn neighbors(&self, v: &str) -> Vec<String> {
        self.vertices
            .iter()
            .filter(|r| r.label != v && self.has_edge(v, &r.label))
            .map(|r| r.label.clone())
            .collect()
    }

    /// G/a: the graph with `v` and its edges removed.
    pub fn without(&self, v: &str) -> Result<Graph> {
        self.require(v)?;
        Ok(Graph {
            vertices: self.vertices.iter().filter(|r| r.label != v).cloned().collect(),
            edges: self
                .edges
                .iter()
                .filter(|(a, b)| a != v && b != v)
                .cloned()
                .collect(),
        })
    }

    /// Disjoint union.
    pub fn union(&self, other: &Graph) -> Result<Graph> {
        let mut vs = self.vertices.clone();
        vs.extend(other.vertices.iter().cloned());
        let mut g = Graph::new(vs)?;
        g.edges = self.edges.union(&other.edges).cloned().collect();
        Ok(g)
    }

    /// Graph after merging `a2` into `a1`: `a1` takes `N(a1) Δ N(a2)`, `a2` is removed.
    pub fn merged(&self, a1: &str, a2: &str) -> Result<Graph> {
        self.require(a1)?;
        let n2 = self.neighbors(a2);
        let mut g = self.without(a2)?;
        for n in n2 {
            if n != a1 {
                g.toggle_edge(a1, &n)?;
            }
        }
        Ok(g)
    }

    pub fn relabel(&mut self, old: &str, new: &str) -> Result<()> {
        self.require(old)?;
        if old != new && self.contains(new) {
            return Err(Error::DuplicateRegister(new.to_string()));
        }
        for v in &mut self.vertices {
            if v.label == old {
                v.label = new.to_string();
            }
        }
        self.edges = self
            .edges
            .iter()
            .map(|(a, b)| {
                let r = |x: &String| if x == old { new.to_string() } else { x.clone() };
                key(&r(a), &r(b))
            })
            .collect();
        Ok(())
    }

    fn require_qubits(&self) -> Result<()> {
        match self.vertices.iter().find(|v| v.dim != 2) {
            Some(v) => Err(Error::DimMismatch {
                label: v.label.clone(),
                dim: v.dim,
                expected: 2,
            }),
            None => Ok(()),
        }
    }
}

/// A graph together with the state vector that realizes it.
#[derive(Clone, Debug)]
pub struct GraphStateHandle {
    pub graph: Graph,
    pub state: PureState,
}

/// `∏ CZ |+⟩^{⊗V}`.
pub fn prepare_graph_state(graph: &Graph) -> Result<GraphStateHandle> {
    graph.require_qubits()?;
    let mut state = PureState::scalar();
    for v in graph.vertices() {
        state.attach(&PureState::plus(&v.label))?;
    }
    for (a, b) in graph.edges() {
        state.apply_unitary(&[a, b], &gates::cz())?;
    }
    Ok(GraphStateHandle {
        graph: graph.clone(),
        state,
    })
}

/// Checks `K_a |ψ⟩ = |ψ⟩` for every vertex, `K_a = σx_a ∏ σz_{N(a)}`.
pub fn stabilizers_hold(state: &PureState, graph: &Graph) -> bool {
    graph.vertices().iter().all(|v| {
        let mut k = state.clone();
        let ok = k.apply_unitary(&[&v.label], &gates::sx()).is_ok()
            && graph
                .neighbors(&v.label)
                .iter()
                .all(|n| k.apply_unitary(&[n], &gates::sz()).is_ok());
        ok && k
            .amplitudes()
            .iter()
            .zip(state.amplitudes())
            .all(|(a, b)| (a - b).norm() <= 1e-10)
    })
}

pub fn stabilizer_check(h: &GraphStateHandle) -> bool {
    stabilizers_hold(&h.state, &h.graph)
}

/// Applies σz to every listed register.
pub fn apply_z_on(state: &mut PureState, labels: &[String]) -> Result<()> {
    for n in labels {
        state.apply_unitary(&[n], &gates::sz())?;
    }
    Ok(())
}

/// σz measurement of `a`, with the outcome-1 branch corrected by `∏σz^{N(a)}`.
pub fn cut_vertex(
    h: &GraphStateHandle,
    a: &str,
    policy: &mut dyn Policy,
) -> Result<(GraphStateHandle, MeasurementRecord)> {
    h.graph.require(a)?;
    let mut state = h.state.clone();
    let o = state.measure_computational(a, false, policy)?;
    if o.index == 1 {
        apply_z_on(&mut state, &h.graph.neighbors(a))?;
    }
    let graph = h.graph.without(a)?;
    Ok((
        GraphStateHandle {
            graph,
            state: state.clone(),
        },
        MeasurementRecord {
            outcome: o.index,
            probability: o.probability,
            post_state: state,
        },
    ))
}

/// Merges `a2` of `h2` into `a1` of `h1` with the `{P0, P1}` measurement.
pub fn merge_vertices(
    h1: &GraphStateHandle,
    h2: &GraphStateHandle,
    a1: &str,
    a2: &str,
    policy: &mut dyn Policy,
) -> Result<(GraphStateHandle, MeasurementRecord)> {
    h1.graph.require(a1)?;
    h2.graph.require(a2)?;
    if h1.state.labels().iter().any(|l| h2.state.has(l)) {
        return Err(Error::Graph("graph states share registers".into()));
    }
    let union = h1.graph.union(&h2.graph)?;
    let mut state = h1.state.tensor(&h2.state)?;
    let o = state.measure_kraus(&[a1, a2], &merge_kraus(), &[Register::qubit(a1)], policy)?;
    if o.index == 1 {
        apply_z_on(&mut state, &h2.graph.neighbors(a2))?;
    }
    let graph = union.merged(a1, a2)?;
    Ok((
        GraphStateHandle {
            graph,
            state: state.clone(),
        },
        MeasurementRecord {
            outcome: o.index,
            probability: o.probability,
            post_state: state,
        },
    ))
}

/// `d^{-1/2} Σ_i |i⟩^{⊗n}` on registers `q0 … q{n-1}`.
pub fn ghz_state(n: usize, d: usize) -> Result<PureState> {
    let labels: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    ghz_state_on(&labels, d)
}

/// GHZ state on the given labels.
pub fn ghz_state_on<S: AsRef<str>>(labels: &[S], d: usize) -> Result<PureState> {
    if labels.len() < 2 {
        return Err(Error::Config("GHZ state needs at least two parties".into()));
    }
    if d < 2 {
        return Err(Error::Config("GHZ state needs d >= 2".into()));
    }
    let regs: Vec<Register> = labels.iter().map(|l| Register::new(l.as_ref(), d)).collect();
    let total = d.checked_pow(labels.len() as u32).unwrap_or(usize::MAX);
    if total > crate::engine::MAX_DIM {
        return Err(Error::TooLarge(total));
    }
    let mut amps = vec![ZERO; total];
    let step: usize = (0..labels.len()).map(|k| d.pow(k as u32)).sum();
    let a: C64 = c(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        amps[i * step] = a;
    }
    PureState::from_amplitudes(regs, amps)
}
