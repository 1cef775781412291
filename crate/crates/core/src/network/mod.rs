//! Network orchestration: devices owning registers of one global state, request
//! distribution from a GHZ resource, branch programs executed coherently on the
//! request registers, control collapse and detachment, addressing and program tables.

mod gate;
pub mod topology;

pub use gate::{phase_gate, GateSpec};

use crate::engine::{bell_basis, merge_kraus, destructive_kraus, Policy, PureState, Register};
use crate::error::{Error, Result};
use crate::graphstate::{ghz_state_on, Graph};
use crate::linalg::{c, gates, tol, CMatrix, C64, ZERO};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A network party and the registers of the global state it may act on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Device {
    pub id: String,
    pub resource_regs: Vec<String>,
    pub aux_regs: Vec<String>,
    pub request_reg: Option<Register>,
    pub addressing_reg: Option<Register>,
    pub activation_reg: Option<Register>,
}

impl Device {
    pub fn new(id: impl Into<String>) -> Self {
        Device {
            id: id.into(),
            resource_regs: Vec::new(),
            aux_regs: Vec::new(),
            request_reg: None,
            addressing_reg: None,
            activation_reg: None,
        }
    }

    pub fn owns(&self, label: &str) -> bool {
        self.resource_regs.iter().any(|r| r == label)
            || self.aux_regs.iter().any(|r| r == label)
            || [&self.request_reg, &self.addressing_reg, &self.activation_reg]
                .iter()
                .any(|r| r.as_ref().is_some_and(|r| r.label == label))
    }

    fn forget(&mut self, label: &str) {
        self.resource_regs.retain(|r| r != label);
        self.aux_regs.retain(|r| r != label);
    }

    fn rename(&mut self, old: &str, new: &str) {
        for r in self.resource_regs.iter_mut().chain(self.aux_regs.iter_mut()) {
            if r == old {
                *r = new.to_string();
            }
        }
    }
}

/// Whether a register joins a device's resource or auxiliary list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Resource,
    Aux,
}

/// Initial state of a freshly attached register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Zero,
    Plus,
    Basis(usize),
}

impl Init {
    fn state(&self, label: &str, dim: usize) -> Result<PureState> {
        match self {
            Init::Zero => Ok(PureState::ket(label, dim, 0)),
            Init::Basis(k) if *k < dim => Ok(PureState::ket(label, dim, *k)),
            Init::Basis(k) => Err(Error::OutcomeOutOfRange(*k)),
            Init::Plus => {
                let a = c(1.0 / (dim as f64).sqrt(), 0.0);
                PureState::single(Register::new(label, dim), vec![a; dim])
            }
        }
    }
}

/// Two-qubit resource shared by two devices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    /// |Φ+⟩.
    Bell,
    /// Two-vertex graph state (|0+⟩ + |1−⟩)/√2.
    Edge,
}

impl PairKind {
    pub fn state(&self, a: &str, b: &str) -> PureState {
        let regs = vec![Register::qubit(a), Register::qubit(b)];
        let amps = match self {
            PairKind::Bell => bell_basis(2)[0].clone(),
            PairKind::Edge => vec![c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(-0.5, 0.0)],
        };
        PureState::from_amplitudes(regs, amps).expect("normalized pair")
    }
}

/// Measurement performed identically on every branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// Computational basis; the register is discarded.
    Z,
    /// Fourier basis; the register is discarded.
    X,
    /// Generalized Bell measurement of two registers, both discarded.
    Bell,
    /// Merging measurement `{P0, P1}`; the first target survives.
    Merge,
}

/// One step of a branch program.
///
/// `Unitary` and `IfOutcome` are branch-specific and run controlled on the acting
/// device's request register. The remaining steps are shared: they must appear in the
/// same order with identical parameters in every program and are executed once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    Unitary {
        device: String,
        targets: Vec<String>,
        gate: GateSpec,
    },
    /// Correction applied when the most recent shared measurement gave `outcome`.
    IfOutcome {
        device: String,
        outcome: usize,
        targets: Vec<String>,
        gate: GateSpec,
    },
    Prepare {
        device: String,
        label: String,
        #[serde(default = "qubit_dim")]
        dim: usize,
        init: Init,
    },
    Pair {
        devices: [String; 2],
        labels: [String; 2],
        kind: PairKind,
    },
    Measure {
        device: String,
        kind: MeasureKind,
        targets: Vec<String>,
    },
    Embed {
        device: String,
        high: String,
        low: String,
        label: String,
    },
}

fn qubit_dim() -> usize {
    2
}

impl Step {
    pub fn unitary(device: &str, targets: &[&str], gate: GateSpec) -> Step {
        Step::Unitary {
            device: device.into(),
            targets: targets.iter().map(|t| t.to_string()).collect(),
            gate,
        }
    }

    pub fn if_outcome(device: &str, outcome: usize, targets: &[&str], gate: GateSpec) -> Step {
        Step::IfOutcome {
            device: device.into(),
            outcome,
            targets: targets.iter().map(|t| t.to_string()).collect(),
            gate,
        }
    }

    pub fn measure(device: &str, kind: MeasureKind, targets: &[&str]) -> Step {
        Step::Measure {
            device: device.into(),
            kind,
            targets: targets.iter().map(|t| t.to_string()).collect(),
        }
    }

    pub fn prepare(device: &str, label: &str, dim: usize, init: Init) -> Step {
        Step::Prepare {
            device: device.into(),
            label: label.into(),
            dim,
            init,
        }
    }

    pub fn pair(d1: &str, l1: &str, d2: &str, l2: &str, kind: PairKind) -> Step {
        Step::Pair {
            devices: [d1.into(), d2.into()],
            labels: [l1.into(), l2.into()],
            kind,
        }
    }

    pub fn is_shared(&self) -> bool {
        !matches!(self, Step::Unitary { .. } | Step::IfOutcome { .. })
    }
}

/// The classical description of what every device does in one branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchProgram {
    pub branch: usize,
    pub steps: Vec<Step>,
}

/// Finite table of unitaries selected by a program register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramTable {
    pub targets: Vec<String>,
    pub entries: BTreeMap<usize, GateSpec>,
}

/// One logged measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogEntry {
    pub device: String,
    pub what: String,
    pub outcome: usize,
    pub probability: f64,
}

/// How the initiator's control is measured during detachment.
#[derive(Clone, Debug, PartialEq)]
pub enum ControlBasis {
    /// `|x̃_k⟩ = d^{-1/2} Σ_j ω^{jk}|j⟩`.
    Fourier,
    /// Hadamard on every qubit of a `2^q`-level control.
    QubitwiseHadamard,
    Custom(Vec<Vec<C64>>),
}

impl ControlBasis {
    pub fn vectors(&self, d: usize) -> Result<Vec<Vec<C64>>> {
        let m = match self {
            ControlBasis::Fourier => gates::fourier(d),
            ControlBasis::QubitwiseHadamard => {
                if !d.is_power_of_two() {
                    return Err(Error::Config(format!("control dimension {d} is not a power of two")));
                }
                let q = d.trailing_zeros() as usize;
                crate::linalg::kron_all(&vec![gates::h(); q])
            }
            ControlBasis::Custom(v) => {
                crate::ctrltask::validate_basis(v, d)?;
                return Ok(v.clone());
            }
        };
        Ok((0..d).map(|k| m.column(k).iter().copied().collect()).collect())
    }
}

/// Outcome-dependent repair after the control has been measured.
#[derive(Clone, Debug, PartialEq)]
pub enum Detachment {
    /// Branch `i` is marked by level 2 of register `markers[i]`; the owning device
    /// applies the phase on that level.
    ExtraLevel { markers: Vec<String> },
    /// Local gates per outcome: `(device, targets, gate)`.
    Local(BTreeMap<usize, Vec<(String, Vec<String>, GateSpec)>>),
    /// No correction expected.
    None,
}

#[derive(Clone, Debug)]
pub struct NetworkState {
    pub devices: Vec<Device>,
    pub global: PureState,
    pub topology: Graph,
    pub log: Vec<LogEntry>,
}

/// Label of the request register of device `id`.
pub fn request_label(id: &str) -> String {
    format!("{id}.rq")
}

/// Label of the initiator's extra GHZ leg.
pub fn leg_label(id: &str) -> String {
    format!("{id}.leg")
}

impl NetworkState {
    /// Devices with no registers yet; `topology` is a graph over device ids.
    pub fn new<S: AsRef<str>>(ids: &[S], topology: Graph) -> Result<Self> {
        let mut devices: Vec<Device> = Vec::new();
        for id in ids {
            if devices.iter().any(|d| d.id == id.as_ref()) {
                return Err(Error::DuplicateRegister(id.as_ref().to_string()));
            }
            devices.push(Device::new(id.as_ref()));
        }
        Ok(NetworkState {
            devices,
            global: PureState::scalar(),
            topology,
            log: Vec::new(),
        })
    }

    /// Devices with no registers and a complete topology.
    pub fn fully_connected<S: AsRef<str>>(ids: &[S]) -> Result<Self> {
        let mut g = Graph::with_qubits(ids)?;
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                g.add_edge(a.as_ref(), b.as_ref())?;
            }
        }
        NetworkState::new(ids, g)
    }

    pub fn device(&self, id: &str) -> Result<&Device> {
        self.devices
            .iter()
            .find(|d| d.id == id)
            .ok_or_else(|| Error::UnknownDevice(id.to_string()))
    }

    pub(crate) fn device_mut(&mut self, id: &str) -> Result<&mut Device> {
        self.devices
            .iter_mut()
            .find(|d| d.id == id)
            .ok_or_else(|| Error::UnknownDevice(id.to_string()))
    }

    /// The device owning `label`, if any.
    pub fn owner(&self, label: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.owns(label))
    }

    fn require_owned(&self, device: &str, label: &str) -> Result<()> {
        if self.device(device)?.owns(label) {
            Ok(())
        } else {
            Err(Error::ForeignRegister {
                device: device.to_string(),
                register: label.to_string(),
            })
        }
    }

    /// Attaches `state`, assigning each of its registers to the paired device.
    pub fn attach(&mut self, state: &PureState, owners: &[(&str, Role)]) -> Result<()> {
        if owners.len() != state.registers().len() {
            return Err(Error::Config("one owner per register required".into()));
        }
        for (dev, _) in owners {
            self.device(dev)?;
        }
        self.global.attach(state)?;
        for (reg, (dev, role)) in state.registers().iter().zip(owners) {
            let d = self.device_mut(dev)?;
            match role {
                Role::Resource => d.resource_regs.push(reg.label.clone()),
                Role::Aux => d.aux_regs.push(reg.label.clone()),
            }
        }
        Ok(())
    }

    /// Attaches the `(n+1)`-party, `m`-level GHZ state used to distribute a request:
    /// one leg per device as its request register plus one extra leg at the initiator.
    pub fn attach_request_resource(&mut self, m: usize, initiator: &str) -> Result<()> {
        let ids: Vec<String> = self.devices.iter().map(|d| d.id.clone()).collect();
        self.attach_request_resource_among(m, initiator, &ids)
    }

    /// As [`attach_request_resource`](Self::attach_request_resource), restricted to the
    /// devices that act in some branch; the initiator must be among them.
    pub fn attach_request_resource_among<S: AsRef<str>>(
        &mut self,
        m: usize,
        initiator: &str,
        participants: &[S],
    ) -> Result<()> {
        self.device(initiator)?;
        if !participants.iter().any(|p| p.as_ref() == initiator) {
            return Err(Error::Config("initiator must take part in the request".into()));
        }
        for p in participants {
            self.device(p.as_ref())?;
        }
        let mut labels: Vec<String> = participants.iter().map(|p| request_label(p.as_ref())).collect();
        labels.push(leg_label(initiator));
        let ghz = ghz_state_on(&labels, m)?;
        self.global.attach(&ghz)?;
        for p in participants {
            self.device_mut(p.as_ref())?.request_reg = Some(Register::new(request_label(p.as_ref()), m));
        }
        self.device_mut(initiator)?.aux_regs.push(leg_label(initiator));
        Ok(())
    }

    pub fn branch_count(&self) -> Option<usize> {
        self.devices
            .iter()
            .find_map(|d| d.request_reg.as_ref().map(|r| r.dim))
    }

    fn any_request(&self) -> Option<String> {
        self.devices
            .iter()
            .find_map(|d| d.request_reg.as_ref().map(|r| r.label.clone()))
    }

    fn remove_registers(&mut self, labels: &[&str]) {
        for d in &mut self.devices {
            for l in labels {
                d.forget(l);
            }
        }
    }

    fn log(&mut self, device: &str, what: String, o: crate::engine::Outcome) {
        self.log.push(LogEntry {
            device: device.to_string(),
            what,
            outcome: o.index,
            probability: o.probability,
        });
    }
}

/// `Σ α_i |i⟩` on a single `m`-level register named `weight`.
pub fn prepare_weight_state(alphas: &[C64]) -> Result<PureState> {
    if alphas.len() < 2 {
        return Err(Error::Config("weight state needs at least two levels".into()));
    }
    PureState::from_amplitudes(vec![Register::new("weight", alphas.len())], alphas.to_vec())
}

/// Teleports the weight state into the request registers: the initiator Bell-measures
/// the weight register with its extra GHZ leg, and generalized Pauli corrections
/// restore `Σ α_i |i⟩^{⊗n}`.
pub fn distribute_request(
    mut net: NetworkState,
    initiator: &str,
    weight: &PureState,
    policy: &mut dyn Policy,
) -> Result<NetworkState> {
    let leg = leg_label(initiator);
    if !net.global.has(&leg) {
        return Err(Error::Config("request resource missing".into()));
    }
    let m = net.global.register_dim(&leg)?;
    let w = match weight.registers() {
        [r] if r.dim == m => r.label.clone(),
        _ => return Err(Error::Config(format!("weight state must be one register of dimension {m}"))),
    };
    net.global.attach(weight)?;
    let o = net.global.bell_measure(&w, &leg, policy)?;
    let (a, b) = (o.index / m, o.index % m);
    // Post-measurement: Σ_i α_i ω^{-a i} |i - b⟩^{⊗n}.
    let shift = gates::x_pow(m, b);
    let labels: Vec<String> = net
        .devices
        .iter()
        .filter_map(|d| d.request_reg.as_ref().map(|r| r.label.clone()))
        .collect();
    for l in &labels {
        net.global.apply_unitary(&[l], &shift)?;
    }
    net.global
        .apply_unitary(&[&request_label(initiator)], &gates::z_pow(m, a))?;
    net.remove_registers(&[&leg]);
    net.log(initiator, "request".into(), o);
    Ok(net)
}

fn validate_programs(net: &NetworkState, programs: &[BranchProgram]) -> Result<Vec<Step>> {
    if programs.is_empty() {
        return Err(Error::Config("no branch programs".into()));
    }
    let m = net.branch_count();
    for (i, p) in programs.iter().enumerate() {
        if p.branch != i {
            return Err(Error::Config(format!("program {i} declares branch {}", p.branch)));
        }
    }
    match m {
        Some(m) if m != programs.len() => {
            return Err(Error::Config(format!(
                "{} programs for {m} request levels",
                programs.len()
            )))
        }
        None if programs.len() > 1 => {
            return Err(Error::Config("branch programs need request registers".into()))
        }
        _ => {}
    }
    let shared: Vec<Step> = programs[0].steps.iter().filter(|s| s.is_shared()).cloned().collect();
    for p in &programs[1..] {
        let other: Vec<&Step> = p.steps.iter().filter(|s| s.is_shared()).collect();
        if other.len() != shared.len() || other.iter().zip(&shared).any(|(a, b)| *a != b) {
            return Err(Error::Config(format!(
                "shared steps of branch {} differ from branch 0",
                p.branch
            )));
        }
    }
    Ok(shared)
}

fn run_local(
    net: &mut NetworkState,
    branch: usize,
    step: &Step,
    last: Option<usize>,
    single: bool,
) -> Result<()> {
    let (device, targets, gate) = match step {
        Step::Unitary { device, targets, gate } => (device, targets, gate),
        Step::IfOutcome {
            device,
            outcome,
            targets,
            gate,
        } => match last {
            None => return Err(Error::Config("correction before any measurement".into())),
            Some(k) if k != *outcome => return Ok(()),
            Some(_) => (device, targets, gate),
        },
        _ => unreachable!("shared step in local segment"),
    };
    for t in targets {
        net.require_owned(device, t)?;
    }
    let t: Vec<&str> = targets.iter().map(|s| s.as_str()).collect();
    let dims: Vec<usize> = t
        .iter()
        .map(|l| net.global.register_dim(l))
        .collect::<Result<_>>()?;
    let u = gate.resolve(&dims)?;
    match net.device(device)?.request_reg.clone() {
        Some(rq) => net.global.apply_controlled(&rq.label, branch, &t, &u),
        None if single => net.global.apply_unitary(&t, &u),
        None => Err(Error::Config(format!("device `{device}` has no request register"))),
    }
}

fn run_shared(net: &mut NetworkState, step: &Step, policy: &mut dyn Policy) -> Result<Option<usize>> {
    match step {
        Step::Prepare {
            device,
            label,
            dim,
            init,
        } => {
            let s = init.state(label, *dim)?;
            net.attach(&s, &[(device, Role::Aux)])?;
            Ok(None)
        }
        Step::Pair {
            devices,
            labels,
            kind,
        } => {
            let s = kind.state(&labels[0], &labels[1]);
            net.attach(&s, &[(&devices[0], Role::Resource), (&devices[1], Role::Resource)])?;
            Ok(None)
        }
        Step::Embed {
            device,
            high,
            low,
            label,
        } => {
            net.require_owned(device, high)?;
            net.require_owned(device, low)?;
            net.global.embed_pair_as_qudit(high, low, label)?;
            net.remove_registers(&[high, low]);
            net.device_mut(device)?.resource_regs.push(label.clone());
            Ok(None)
        }
        Step::Measure {
            device,
            kind,
            targets,
        } => {
            for t in targets {
                net.require_owned(device, t)?;
            }
            let t: Vec<&str> = targets.iter().map(|s| s.as_str()).collect();
            let (kraus, output) = match (kind, t.as_slice()) {
                (MeasureKind::Z, [x]) => {
                    let d = net.global.register_dim(x)?;
                    let basis: Vec<Vec<C64>> =
                        (0..d).map(|k| crate::linalg::basis_vector(d, k)).collect();
                    (destructive_kraus(&basis), vec![])
                }
                (MeasureKind::X, [x]) => {
                    let d = net.global.register_dim(x)?;
                    let f = gates::fourier(d);
                    let basis: Vec<Vec<C64>> =
                        (0..d).map(|k| f.column(k).iter().copied().collect()).collect();
                    (destructive_kraus(&basis), vec![])
                }
                (MeasureKind::Bell, [a, b]) => {
                    let d = net.global.register_dim(a)?;
                    if net.global.register_dim(b)? != d {
                        return Err(Error::Config("Bell measurement needs equal dimensions".into()));
                    }
                    (destructive_kraus(&bell_basis(d)), vec![])
                }
                (MeasureKind::Merge, [a, _]) => (merge_kraus(), vec![Register::qubit(*a)]),
                _ => return Err(Error::Config(format!("bad targets for {kind:?} measurement"))),
            };
            let ctrl = net
                .device(device)?
                .request_reg
                .as_ref()
                .map(|r| r.label.clone())
                .or_else(|| net.any_request());
            if let Some(c) = ctrl {
                net.global.check_branch_agreement(&c, &t, &kraus, &output)?;
            }
            let o = net.global.measure_kraus(&t, &kraus, &output, policy)?;
            let consumed: Vec<&str> = match kind {
                MeasureKind::Merge => t[1..].to_vec(),
                _ => t.clone(),
            };
            net.remove_registers(&consumed);
            net.log(device, format!("{kind:?} {}", targets.join(",")), o);
            Ok(Some(o.index))
        }
        _ => unreachable!("local step in shared slot"),
    }
}

/// Executes one program per branch.
///
/// Branch-specific steps run controlled on the acting device's request register at the
/// branch index; shared steps run once, after checking that every branch would see the
/// same outcome distribution.
pub fn apply_branch_programs(
    mut net: NetworkState,
    programs: &[BranchProgram],
    policy: &mut dyn Policy,
) -> Result<NetworkState> {
    let shared = validate_programs(&net, programs)?;
    let single = programs.len() == 1;
    // segments[p][s]: branch-specific steps of program p after shared step s-1
    let segments: Vec<Vec<Vec<&Step>>> = programs
        .iter()
        .map(|p| {
            let mut segs = vec![Vec::new()];
            for s in &p.steps {
                if s.is_shared() {
                    segs.push(Vec::new());
                } else {
                    segs.last_mut().expect("non-empty").push(s);
                }
            }
            segs
        })
        .collect();
    let mut last = None;
    for s in 0..=shared.len() {
        for (p, prog) in programs.iter().enumerate() {
            for step in &segments[p][s] {
                run_local(&mut net, prog.branch, step, last, single)?;
            }
        }
        if s < shared.len() {
            if let Some(k) = run_shared(&mut net, &shared[s], policy)? {
                last = Some(k);
            }
        }
    }
    Ok(net)
}

/// Fourier-measures every non-initiator request register and compensates the phases
/// with `Z^s` on the initiator's register.
pub fn collapse_to_single_control(
    mut net: NetworkState,
    initiator: &str,
    policy: &mut dyn Policy,
) -> Result<NetworkState> {
    let keep = net
        .device(initiator)?
        .request_reg
        .clone()
        .ok_or_else(|| Error::Config("initiator has no request register".into()))?;
    let m = keep.dim;
    let mut s = 0;
    let others: Vec<(String, String)> = net
        .devices
        .iter()
        .filter(|d| d.id != initiator)
        .filter_map(|d| d.request_reg.as_ref().map(|r| (d.id.clone(), r.label.clone())))
        .collect();
    for (id, label) in others {
        let o = net.global.generalized_x_measure(&label, policy)?;
        s = (s + o.index) % m;
        net.device_mut(&id)?.request_reg = None;
        net.log(&id, "collapse".into(), o);
    }
    net.global.apply_unitary(&[&keep.label], &gates::z_pow(m, s))?;
    Ok(net)
}

/// Measures the initiator's control and repairs the branch phases.
///
/// Refuses non-orthogonal branch states. The repaired state is checked against the
/// uncontrolled superposition `Σ_i ⟨i|_c Ψ`, and a mismatch is reported as an
/// uncorrectable phase.
pub fn detach_control(
    mut net: NetworkState,
    initiator: &str,
    basis: &ControlBasis,
    detachment: &Detachment,
    policy: &mut dyn Policy,
) -> Result<NetworkState> {
    let ctrl = net
        .device(initiator)?
        .request_reg
        .clone()
        .ok_or_else(|| Error::Config("initiator has no request register".into()))?;
    let d = ctrl.dim;
    let branches: Vec<PureState> = (0..d)
        .map(|i| net.global.branch(&ctrl.label, i))
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = branches.iter().map(|b| b.norm_sqr().sqrt()).collect();
    for i in 0..d {
        for j in i + 1..d {
            if norms[i] <= 1e-12 || norms[j] <= 1e-12 {
                continue;
            }
            let ov = branches[i].overlap(&branches[j])?.norm() / (norms[i] * norms[j]);
            if ov > tol::PSD_FLOOR {
                return Err(Error::NonOrthogonal { i, j, overlap: ov });
            }
        }
    }
    let mut reference_amps = vec![ZERO; branches[0].dim()];
    for b in &branches {
        for (r, a) in reference_amps.iter_mut().zip(b.amplitudes()) {
            *r += a;
        }
    }
    let reference = PureState::from_unnormalized(branches[0].registers().to_vec(), reference_amps)?;
    let vecs = basis.vectors(d)?;
    if let Detachment::ExtraLevel { markers } = detachment {
        check_markers(&net, &ctrl.label, markers, &norms)?;
    }
    let o = net
        .global
        .measure_basis(&[&ctrl.label], &vecs, false, policy)?;
    let k = o.index;
    match detachment {
        Detachment::ExtraLevel { markers } => {
            for (i, marker) in markers.iter().enumerate() {
                if norms[i] <= 1e-12 {
                    continue;
                }
                let b = vecs[k][i].conj();
                if (b.norm() * (d as f64).sqrt() - 1.0).abs() > tol::ALGEBRAIC {
                    return Err(Error::PhaseUncorrectable(k));
                }
                let phase = b.norm() / b;
                let dim = net.global.register_dim(marker)?;
                let u = gates::level_phase(dim, 2, phase);
                net.global.apply_unitary(&[marker], &u)?;
            }
        }
        Detachment::Local(table) => {
            for (device, targets, gate) in table.get(&k).into_iter().flatten() {
                for t in targets {
                    net.require_owned(device, t)?;
                }
                let t: Vec<&str> = targets.iter().map(|s| s.as_str()).collect();
                let dims: Vec<usize> = t
                    .iter()
                    .map(|l| net.global.register_dim(l))
                    .collect::<Result<_>>()?;
                net.global.apply_unitary(&t, &gate.resolve(&dims)?)?;
            }
        }
        Detachment::None => {}
    }
    let f = reference.overlap(&net.global)?.norm_sqr();
    if f < 1.0 - tol::PSD_FLOOR {
        return Err(Error::PhaseUncorrectable(k));
    }
    net.device_mut(initiator)?.request_reg = None;
    net.log(initiator, "detach".into(), o);
    Ok(net)
}

fn check_markers(net: &NetworkState, ctrl: &str, markers: &[String], norms: &[f64]) -> Result<()> {
    if markers.len() != norms.len() {
        return Err(Error::Config("one marker per branch required".into()));
    }
    for (i, marker) in markers.iter().enumerate() {
        if net.owner(marker).is_none() {
            return Err(Error::UnknownRegister(marker.clone()));
        }
        for (j, n) in norms.iter().enumerate() {
            if *n <= 1e-12 {
                continue;
            }
            let w = net.global.projected(ctrl, j)?.level_weights(marker)?;
            let on2 = w.get(2).copied().unwrap_or(0.0) / (n * n);
            let want = if i == j { 1.0 } else { 0.0 };
            if (on2 - want).abs() > tol::PSD_FLOOR {
                return Err(Error::Config(format!(
                    "marker `{marker}` does not single out branch {i}"
                )));
            }
        }
    }
    Ok(())
}

/// Toffoli-style activation `Σ_s P_s^{ad} ⊗ P_s^{ac} ⊗ X^s` on the device's
/// (addressing, activation, request) registers, identity where `ad ≠ ac`.
pub fn addressing_operator(d: usize) -> CMatrix {
    let mut t = CMatrix::zeros(d * d * d, d * d * d);
    for p in 0..d {
        for s in 0..d {
            let block = if p == s { gates::x_pow(d, s) } else { gates::identity(d) };
            let off = (p * d + s) * d;
            t.view_mut((off, off), (d, d)).copy_from(&block);
        }
    }
    t
}

pub fn addressing_activate(mut net: NetworkState, device: &str) -> Result<NetworkState> {
    let dev = net.device(device)?;
    let (ad, ac, rq) = match (&dev.addressing_reg, &dev.activation_reg, &dev.request_reg) {
        (Some(a), Some(b), Some(c)) => (a.clone(), b.clone(), c.clone()),
        _ => return Err(Error::Config(format!("device `{device}` lacks addressing registers"))),
    };
    if ad.dim != ac.dim || ac.dim != rq.dim {
        return Err(Error::DimMismatch {
            label: rq.label.clone(),
            dim: rq.dim,
            expected: ad.dim,
        });
    }
    net.global
        .apply_unitary(&[&ad.label, &ac.label, &rq.label], &addressing_operator(ad.dim))?;
    Ok(net)
}

/// Applies `Σ_k |k⟩⟨k|_prog ⊗ U_k`; the program register stays in the state.
pub fn program_gate(
    mut net: NetworkState,
    device: &str,
    table: &ProgramTable,
    program_reg: &str,
) -> Result<NetworkState> {
    net.require_owned(device, program_reg)?;
    for t in &table.targets {
        net.require_owned(device, t)?;
    }
    let t: Vec<&str> = table.targets.iter().map(|s| s.as_str()).collect();
    let dims: Vec<usize> = t
        .iter()
        .map(|l| net.global.register_dim(l))
        .collect::<Result<_>>()?;
    let w = net.global.level_weights(program_reg)?;
    for (k, wk) in w.iter().enumerate() {
        match table.entries.get(&k) {
            Some(g) => net.global.apply_controlled(program_reg, k, &t, &g.resolve(&dims)?)?,
            None if *wk > 1e-12 => return Err(Error::MissingProgram(k)),
            None => {}
        }
    }
    Ok(net)
}

/// Convenience for tests and scenarios: request registers in `Σ α_i |i⟩^{⊗n}` directly.
pub fn direct_request_state(net: &mut NetworkState, alphas: &[C64]) -> Result<()> {
    let m = alphas.len();
    let labels: Vec<String> = net.devices.iter().map(|d| request_label(&d.id)).collect();
    let regs: Vec<Register> = labels.iter().map(|l| Register::new(l, m)).collect();
    let mut amps = vec![ZERO; m.pow(labels.len() as u32)];
    let step: usize = (0..labels.len()).map(|k| m.pow(k as u32)).sum();
    for (i, a) in alphas.iter().enumerate() {
        amps[i * step] = *a;
    }
    net.global.attach(&PureState::from_amplitudes(regs, amps)?)?;
    for d in &mut net.devices {
        d.request_reg = Some(Register::new(request_label(&d.id), m));
    }
    Ok(())
}

/// Renames a register in the state and in its owner's lists.
pub fn rename_register(net: &mut NetworkState, old: &str, new: &str) -> Result<()> {
    net.global.relabel(old, new)?;
    for d in &mut net.devices {
        d.rename(old, new);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::PostSelect;

    fn equal(m: usize) -> Vec<C64> {
        vec![c(1.0 / (m as f64).sqrt(), 0.0); m]
    }

    #[test]
    fn weight_state_examples() {
        assert!(prepare_weight_state(&[c(1.0, 0.0), ZERO]).is_ok());
        assert!(prepare_weight_state(&[c(1.0, 0.0), c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn request_distribution_uniform_qubits() {
        let mut net = NetworkState::fully_connected(&["A", "B"]).unwrap();
        net.attach_request_resource(2, "A").unwrap();
        let w = prepare_weight_state(&equal(2)).unwrap();
        for k in 0..4 {
            let n = distribute_request(net.clone(), "A", &w, &mut PostSelect(k)).unwrap();
            let want = ghz_state_on(&["A.rq", "B.rq"], 2).unwrap();
            assert!((n.global.overlap(&want).unwrap().norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn addressing_operator_is_unitary() {
        for d in 2..=5 {
            assert!(crate::linalg::is_unitary(&addressing_operator(d)));
        }
    }

    #[test]
    fn foreign_register_is_rejected() {
        let mut net = NetworkState::fully_connected(&["A", "B"]).unwrap();
        direct_request_state(&mut net, &equal(2)).unwrap();
        net.attach(&PureState::ket("b", 2, 0), &[("B", Role::Resource)]).unwrap();
        let prog = |i| BranchProgram {
            branch: i,
            steps: vec![Step::unitary("A", &["b"], GateSpec::named("x"))],
        };
        let err = apply_branch_programs(net, &[prog(0), prog(1)], &mut PostSelect(0)).unwrap_err();
        assert!(matches!(err, Error::ForeignRegister { .. }));
    }

    #[test]
    fn non_orthogonal_branches_refused() {
        let mut net = NetworkState::fully_connected(&["A", "B"]).unwrap();
        direct_request_state(&mut net, &equal(2)).unwrap();
        net.attach(&PureState::ket("t", 2, 0), &[("B", Role::Resource)]).unwrap();
        net.global.apply_controlled("A.rq", 1, &["t"], &gates::h()).unwrap();
        let net = collapse_to_single_control(net, "A", &mut PostSelect(0)).unwrap();
        let err = detach_control(net, "A", &ControlBasis::Fourier, &Detachment::None, &mut PostSelect(0))
            .unwrap_err();
        match err {
            Error::NonOrthogonal { overlap, .. } => {
                assert!((overlap - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12)
            }
            e => panic!("unexpected {e:?}"),
        }
    }
}
