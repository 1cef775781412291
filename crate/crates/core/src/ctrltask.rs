//! Classical tasks (measurement, teleportation, cutting, merging) made to act "as if"
//! quantum-controlled: the measurement is always performed, and a controlled swap decides
//! whether it hits the real system or a dummy auxiliary prepared so that both branches
//! see identical outcome statistics.

use crate::engine::{
    bell_basis, destructive_kraus, merge_kraus, projective_kraus, DensityState, MeasurementRecord,
    Policy, PureState, Register,
};
use crate::error::{Error, Result};
use crate::graphstate::Graph;
use crate::linalg::{c, gates, inner, tol, CMatrix, C64};
use nalgebra::DVector;

/// A projective measurement on `target` that should only take effect when `control` is |1⟩.
#[derive(Clone, Debug)]
pub struct ControlledMeasureSpec {
    pub control: String,
    pub target: String,
    pub aux: String,
    pub basis: Vec<Vec<C64>>,
}

/// Checks that `basis` is an orthonormal basis of dimension `d`.
pub fn validate_basis(basis: &[Vec<C64>], d: usize) -> Result<()> {
    if basis.len() != d || basis.iter().any(|b| b.len() != d) {
        return Err(Error::IncompleteKraus(1.0));
    }
    let mut dev = 0.0f64;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((inner(a, b) - c(want, 0.0)).norm());
        }
    }
    if dev > tol::ALGEBRAIC {
        return Err(Error::IncompleteKraus(dev));
    }
    Ok(())
}

/// Auxiliary state `Σ_i √tr(P_i ρ) |ψ_i⟩` whose outcome statistics match those of `rho_a`.
pub fn prepare_aux_for_measurement(
    rho_a: &DensityState,
    basis: &[Vec<C64>],
    aux_label: &str,
) -> Result<PureState> {
    if rho_a.registers().len() != 1 {
        return Err(Error::Config("auxiliary reference must be a single register".into()));
    }
    let d = rho_a.dim();
    validate_basis(basis, d)?;
    let mut amps = vec![c(0.0, 0.0); d];
    for b in basis {
        let v = DVector::from_column_slice(b);
        let p = (v.adjoint() * rho_a.matrix() * &v)[(0, 0)].re.max(0.0);
        for (a, x) in amps.iter_mut().zip(b) {
            *a += x * p.sqrt();
        }
    }
    PureState::from_unnormalized(vec![Register::new(aux_label, d)], amps)
}

/// Fidelity of the reduced state of `labels` with the pure vector `v`.
pub fn reduced_fidelity(state: &PureState, labels: &[&str], v: &[C64]) -> Result<f64> {
    let rho = state.partial_trace(labels)?;
    if rho.dim() != v.len() {
        return Err(Error::ShapeMismatch {
            rows: v.len(),
            cols: 1,
            target: rho.dim(),
        });
    }
    let regs = rho.registers().to_vec();
    rho.expectation(&PureState::from_unnormalized(regs, v.to_vec())?)
}

fn require_state(state: &PureState, label: &str, v: &[C64]) -> Result<()> {
    if reduced_fidelity(state, &[label], v)? < 1.0 - tol::PSD_FLOOR {
        return Err(Error::BadAuxiliary(label.to_string()));
    }
    Ok(())
}

fn plus() -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![c(s, 0.0), c(s, 0.0)]
}

fn require_qubit(state: &PureState, label: &str) -> Result<()> {
    let d = state.register_dim(label)?;
    if d != 2 {
        return Err(Error::DimMismatch {
            label: label.to_string(),
            dim: d,
            expected: 2,
        });
    }
    Ok(())
}

fn record(state: PureState, o: crate::engine::Outcome) -> MeasurementRecord {
    MeasurementRecord {
        outcome: o.index,
        probability: o.probability,
        post_state: state,
    }
}

/// Swaps target and aux on control |1⟩, then measures aux projectively in `spec.basis`.
///
/// The measured register stays in the state, collapsed onto the observed basis vector.
pub fn controlled_measure(
    mut state: PureState,
    spec: &ControlledMeasureSpec,
    policy: &mut dyn Policy,
) -> Result<MeasurementRecord> {
    let d = state.register_dim(&spec.target)?;
    validate_basis(&spec.basis, d)?;
    state.fredkin(&spec.control, 1, &spec.target, &spec.aux)?;
    let kraus = projective_kraus(&spec.basis);
    let out = [Register::new(spec.aux.clone(), d)];
    state.check_branch_agreement(&spec.control, &[&spec.aux], &kraus, &out)?;
    let o = state.measure_kraus(&[&spec.aux], &kraus, &out, policy)?;
    Ok(record(state, o))
}

/// Teleports `a1` to `b` on control |1⟩ while leaving `a1` and the `(a2, b)` pair untouched on |0⟩.
///
/// `ax1` must be |0⟩ and `ax2` |+⟩; both are consumed by the Bell measurement.
#[allow(clippy::too_many_arguments)]
pub fn controlled_send(
    mut state: PureState,
    control: &str,
    a1: &str,
    a2: &str,
    b: &str,
    ax1: &str,
    ax2: &str,
    policy: &mut dyn Policy,
) -> Result<MeasurementRecord> {
    for q in [a1, a2, b, ax1, ax2] {
        require_qubit(&state, q)?;
    }
    let phi = &bell_basis(2)[0];
    if reduced_fidelity(&state, &[a2, b], phi)? < 1.0 - tol::PSD_FLOOR {
        return Err(Error::ResourceNotBell(a2.to_string(), b.to_string()));
    }
    require_state(&state, ax1, &[c(1.0, 0.0), c(0.0, 0.0)])?;
    require_state(&state, ax2, &plus())?;
    state.fredkin(control, 1, a1, ax1)?;
    state.fredkin(control, 1, a2, ax2)?;
    let kraus = destructive_kraus(&bell_basis(2));
    state.check_branch_agreement(control, &[ax1, ax2], &kraus, &[])?;
    let o = state.measure_kraus(&[ax1, ax2], &kraus, &[], policy)?;
    let (i, j) = (o.index / 2, o.index % 2);
    // b holds σx^j σz^i |ψ⟩ on the active branch; undo it unconditionally ...
    let corr_b = gates::z_pow(2, i) * gates::x_pow(2, j);
    state.apply_unitary(&[b], &corr_b)?;
    // ... and compensate on a2 where the pair was never consumed.
    let corr_a2 = corr_b
        .transpose()
        .try_inverse()
        .ok_or(Error::NonUnitary(f64::INFINITY))?;
    state.apply_controlled(control, 0, &[a2], &corr_a2)?;
    Ok(record(state, o))
}

/// Cuts vertex `a` from the graph state on control |1⟩; the graph is untouched on |0⟩.
///
/// `aux` must be |+⟩ and is removed by the σz measurement; on the active branch the
/// dummy |+⟩ ends up in `a`.
pub fn controlled_cut(
    mut state: PureState,
    graph: &Graph,
    control: &str,
    a: &str,
    aux: &str,
    policy: &mut dyn Policy,
) -> Result<MeasurementRecord> {
    if !graph.contains(a) {
        return Err(Error::Graph(format!("vertex `{a}` absent")));
    }
    require_qubit(&state, aux)?;
    require_state(&state, aux, &plus())?;
    state.fredkin(control, 1, a, aux)?;
    let kraus = destructive_kraus(&[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]);
    state.check_branch_agreement(control, &[aux], &kraus, &[])?;
    let o = state.measure_kraus(&[aux], &kraus, &[], policy)?;
    if o.index == 1 {
        for n in graph.neighbors(a) {
            state.apply_controlled(control, 1, &[&n], &gates::sz())?;
        }
    }
    Ok(record(state, o))
}

/// Merges `a2` (of `g2`) into `a1` (of `g1`) on control |1⟩.
///
/// The swap with the |+⟩ auxiliary is active on control |0⟩, so there the merge only
/// absorbs the dummy. Afterwards `aux` is renamed to `a2`.
#[allow(clippy::too_many_arguments)]
pub fn controlled_merge(
    mut state: PureState,
    control: &str,
    g1: &Graph,
    g2: &Graph,
    a1: &str,
    a2: &str,
    aux: &str,
    policy: &mut dyn Policy,
) -> Result<MeasurementRecord> {
    for q in [a1, a2, aux] {
        require_qubit(&state, q)?;
    }
    if !g1.contains(a1) || !g2.contains(a2) {
        return Err(Error::Graph("merge vertices absent".into()));
    }
    require_state(&state, aux, &plus())?;
    state.fredkin(control, 0, a2, aux)?;
    let kraus = merge_kraus();
    let out = [Register::qubit(a1)];
    state.check_branch_agreement(control, &[a1, a2], &kraus, &out)?;
    let o = state.measure_kraus(&[a1, a2], &kraus, &out, policy)?;
    if o.index == 1 {
        for n in g2.neighbors(a2) {
            state.apply_controlled(control, 1, &[&n], &gates::sz())?;
        }
    }
    state.relabel(aux, a2)?;
    Ok(record(state, o))
}

/// Applies X² on `target` where `control` is at `level`, lifting {|0⟩,|1⟩} to {|2⟩,|3⟩}.
pub fn apply_extra_level(
    mut state: PureState,
    control: &str,
    level: usize,
    target: &str,
) -> Result<PureState> {
    let d = state.register_dim(target)?;
    if d < 4 {
        return Err(Error::DimMismatch {
            label: target.to_string(),
            dim: d,
            expected: 4,
        });
    }
    let w = state.projected(control, level)?.level_weights(target)?;
    if w[2..].iter().sum::<f64>() > 1e-12 {
        return Err(Error::LevelOccupied {
            label: target.to_string(),
        });
    }
    state.apply_controlled(control, level, &[target], &gates::x_pow(d, 2))?;
    Ok(state)
}

/// The two mixtures a linear controlled measurement would have to agree on.
#[derive(Clone, Debug)]
pub struct NonlinearityReport {
    pub rho_decomp_zx: DensityState,
    pub rho_decomp_pm: DensityState,
    pub trace_distance: f64,
}

/// Compares the hypothetical controlled-measurement outputs for the maximally mixed
/// target decomposed in the σz and in the σx eigenbasis.
pub fn demonstrate_measurement_nonlinearity() -> Result<NonlinearityReport> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let k0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
    let k1 = vec![c(0.0, 0.0), c(1.0, 0.0)];
    let kp = vec![c(s, 0.0), c(s, 0.0)];
    let km = vec![c(s, 0.0), c(-s, 0.0)];
    let regs = vec![Register::qubit("c"), Register::qubit("t"), Register::qubit("m")];
    // (|0⟩_c|x⟩_t ± |1⟩_c|y⟩_t)/√2 ⊗ |y⟩_m: target untouched vs. measured into y.
    // The sign is inherited from the amplitude ⟨y|x⟩.
    let phi = |x: &[C64], y: &[C64], sign: f64| -> Result<PureState> {
        let a = crate::linalg::kron_vec(&k0, x);
        let b = crate::linalg::kron_vec(&k1, y);
        let ct: Vec<C64> = a.iter().zip(&b).map(|(p, q)| (p + q * sign) * s).collect();
        PureState::from_unnormalized(regs.clone(), crate::linalg::kron_vec(&ct, y))
    };
    let zx = DensityState::mixture(&[
        (0.5, &phi(&k0, &k0, 1.0)?),
        (0.5, &phi(&k1, &k1, 1.0)?),
    ])?;
    let pm = DensityState::mixture(&[
        (0.25, &phi(&kp, &k0, 1.0)?),
        (0.25, &phi(&kp, &k1, 1.0)?),
        (0.25, &phi(&km, &k0, 1.0)?),
        (0.25, &phi(&km, &k1, -1.0)?),
    ])?;
    let diff: CMatrix = zx.matrix() - pm.matrix();
    let trace_distance = 0.5 * crate::linalg::trace_norm(&diff);
    Ok(NonlinearityReport {
        rho_decomp_zx: zx,
        rho_decomp_pm: pm,
        trace_distance,
    })
}
