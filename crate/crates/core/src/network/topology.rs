//! JSON network descriptions: devices with their local registers, a shared resource,
//! per-branch programs and the request weights.
//!
//! ```json
//! {
//!   "devices": [{"id": "A", "registers": [{"label": "A.t", "dim": 2, "init": "zero"}]}],
//!   "resource": "bell_mesh",
//!   "initiator": "A",
//!   "weights": [[0.7071067811865476, 0.0], [0.7071067811865476, 0.0]],
//!   "branches": [{"branch": 0, "steps": []}, {"branch": 1, "steps": []}]
//! }
//! ```
//!
//! `resource` is one of `"none"`, `"bell_mesh"` (a `|Φ+⟩` on `"{a}.{b}"`/`"{b}.{a}"` for
//! every device pair), `"ghz"` (one leg `"{id}.g"` per device), `"cluster_grid"` (graph
//! state on `"{id}.v"` over a `grid: [rows, cols]` layout filled row-major), or an explicit
//! graph `{"vertices": [...], "edges": [...]}` whose vertices belong to the device named
//! by the label prefix before the first `.` (or by the whole label).

use super::{
    apply_branch_programs, collapse_to_single_control, distribute_request, prepare_weight_state,
    BranchProgram, Init, NetworkState, Role,
};
use crate::engine::{Policy, PureState, Register};
use crate::error::{Error, Result};
use crate::graphstate::{ghz_state_on, prepare_graph_state, Graph};
use crate::linalg::{c, C64};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalRegister {
    pub label: String,
    #[serde(default = "two")]
    pub dim: usize,
    #[serde(default = "zero")]
    pub init: Init,
    #[serde(default = "resource_role")]
    pub role: Role,
}

fn two() -> usize {
    2
}

fn zero() -> Init {
    Init::Zero
}

fn resource_role() -> Role {
    Role::Resource
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub id: String,
    #[serde(default)]
    pub registers: Vec<LocalRegister>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ResourceSpec {
    Named(String),
    Graph(Graph),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub devices: Vec<DeviceSpec>,
    pub resource: ResourceSpec,
    pub branches: Vec<BranchProgram>,
    pub initiator: String,
    #[serde(default)]
    pub weights: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub grid: Option<[usize; 2]>,
}

impl TopologySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: TopologySpec =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("topology: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.devices.iter().map(|d| d.id.as_str()).collect()
    }

    fn validate(&self) -> Result<()> {
        let ids = self.ids();
        if ids.is_empty() {
            return Err(Error::Config("topology has no devices".into()));
        }
        for (i, id) in ids.iter().enumerate() {
            if id.is_empty() || ids[..i].contains(id) {
                return Err(Error::Config(format!("bad or repeated device id `{id}`")));
            }
        }
        if !ids.contains(&self.initiator.as_str()) {
            return Err(Error::Config(format!("initiator `{}` is not a device", self.initiator)));
        }
        if self.branches.len() < 2 {
            return Err(Error::Config("at least two branches required".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.branches.len() {
                return Err(Error::Config("one weight per branch required".into()));
            }
        }
        Ok(())
    }

    /// Request amplitudes; uniform when absent. Must be normalized.
    pub fn alphas(&self) -> Result<Vec<C64>> {
        let m = self.branches.len();
        let a: Vec<C64> = match &self.weights {
            Some(w) => w.iter().map(|[re, im]| c(*re, *im)).collect(),
            None => vec![c(1.0 / (m as f64).sqrt(), 0.0); m],
        };
        let n: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("weights have squared norm {n}")));
        }
        Ok(a)
    }

    fn resource(&self) -> Result<(PureState, Vec<String>, Graph)> {
        let ids = self.ids();
        match &self.resource {
            ResourceSpec::Named(name) => match name.as_str() {
                "none" => Ok((PureState::scalar(), vec![], complete(&ids)?)),
                "bell_mesh" => {
                    let mut s = PureState::scalar();
                    let mut owners = Vec::new();
                    for (i, a) in ids.iter().enumerate() {
                        for b in &ids[i + 1..] {
                            let pair = super::PairKind::Bell.state(&format!("{a}.{b}"), &format!("{b}.{a}"));
                            s.attach(&pair)?;
                            owners.push(a.to_string());
                            owners.push(b.to_string());
                        }
                    }
                    Ok((s, owners, complete(&ids)?))
                }
                "ghz" => {
                    let labels: Vec<String> = ids.iter().map(|id| format!("{id}.g")).collect();
                    let s = ghz_state_on(&labels, 2)?;
                    Ok((s, ids.iter().map(|s| s.to_string()).collect(), complete(&ids)?))
                }
                "cluster_grid" => {
                    let [rows, cols] = self
                        .grid
                        .ok_or_else(|| Error::Config("cluster_grid needs `grid`".into()))?;
                    if rows * cols != ids.len() {
                        return Err(Error::Config(format!(
                            "grid {rows}x{cols} does not match {} devices",
                            ids.len()
                        )));
                    }
                    let labels: Vec<String> = ids.iter().map(|id| format!("{id}.v")).collect();
                    let mut g = Graph::with_qubits(&labels)?;
                    let mut topo = Graph::with_qubits(&ids)?;
                    for r in 0..rows {
                        for col in 0..cols {
                            let k = r * cols + col;
                            if col + 1 < cols {
                                g.add_edge(&labels[k], &labels[k + 1])?;
                                topo.add_edge(ids[k], ids[k + 1])?;
                            }
                            if r + 1 < rows {
                                g.add_edge(&labels[k], &labels[k + cols])?;
                                topo.add_edge(ids[k], ids[k + cols])?;
                            }
                        }
                    }
                    let h = prepare_graph_state(&g)?;
                    Ok((h.state, ids.iter().map(|s| s.to_string()).collect(), topo))
                }
                other => Err(Error::Config(format!("unknown resource `{other}`"))),
            },
            ResourceSpec::Graph(g) => {
                let mut owners = Vec::new();
                for v in g.labels() {
                    owners.push(owner_of(v, &ids)?);
                }
                let mut topo = Graph::with_qubits(&ids)?;
                for (a, b) in g.edges() {
                    let (oa, ob) = (owner_of(a, &ids)?, owner_of(b, &ids)?);
                    if oa != ob && !topo.has_edge(&oa, &ob) {
                        topo.add_edge(&oa, &ob)?;
                    }
                }
                let h = prepare_graph_state(g)?;
                Ok((h.state, owners, topo))
            }
        }
    }

    /// Network with local registers and the resource attached, before any request.
    pub fn build(&self) -> Result<NetworkState> {
        let ids = self.ids();
        let (resource, owners, topo) = self.resource()?;
        let mut net = NetworkState::new(&ids, topo)?;
        for d in &self.devices {
            for r in &d.registers {
                let s = init_state(r)?;
                net.attach(&s, &[(&d.id, r.role)])?;
            }
        }
        let pairs: Vec<(&str, Role)> = owners.iter().map(|o| (o.as_str(), Role::Resource)).collect();
        net.attach(&resource, &pairs)?;
        Ok(net)
    }

    /// Builds the network, distributes the request, runs the programs and collapses the
    /// control onto the initiator.
    pub fn run(&self, policy: &mut dyn Policy) -> Result<NetworkState> {
        let alphas = self.alphas()?;
        let mut net = self.build()?;
        net.attach_request_resource(alphas.len(), &self.initiator)?;
        let w = prepare_weight_state(&alphas)?;
        let net = distribute_request(net, &self.initiator, &w, policy)?;
        let net = apply_branch_programs(net, &self.branches, policy)?;
        collapse_to_single_control(net, &self.initiator, policy)
    }
}

fn complete(ids: &[&str]) -> Result<Graph> {
    let mut g = Graph::with_qubits(ids)?;
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            g.add_edge(a, b)?;
        }
    }
    Ok(g)
}

fn owner_of(label: &str, ids: &[&str]) -> Result<String> {
    let prefix = label.split('.').next().unwrap_or(label);
    ids.iter()
        .find(|id| **id == prefix || **id == label)
        .map(|s| s.to_string())
        .ok_or_else(|| Error::Config(format!("no device owns vertex `{label}`")))
}

fn init_state(r: &LocalRegister) -> Result<PureState> {
    let reg = Register::new(&r.label, r.dim);
    let mut s = PureState::scalar();
    let k = match r.init {
        Init::Zero => 0,
        Init::Basis(k) if k < r.dim => k,
        Init::Basis(k) => return Err(Error::OutcomeOutOfRange(k)),
        Init::Plus => {
            let a = c(1.0 / (r.dim as f64).sqrt(), 0.0);
            return PureState::single(reg, vec![a; r.dim]);
        }
    };
    s.attach(&PureState::basis(&[reg], &[k])?)?;
    Ok(s)
}
