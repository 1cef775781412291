//! The basis in which the retained control is measured decides whether two devices end
//! up with a Bell pair or a product state.

use super::{fid, Ctx, Origin, RunConfig, ScenarioReport};
use crate::engine::{bell_basis, Policy, PureState, Register};
use crate::entmetrics::{negativity, Bipartition};
use crate::error::Result;
use crate::graphstate::ghz_state_on;
use crate::linalg::{c, gates};
use crate::network::{
    apply_branch_programs, collapse_to_single_control, detach_control, distribute_request,
    prepare_weight_state, request_label, BranchProgram, ControlBasis, Detachment, GateSpec,
    NetworkState, Role, Step,
};
use std::collections::BTreeMap;

const INITIATOR: &str = "c";

/// `(|0⟩_c|00⟩ + |1⟩_c|11⟩)/√2` built through the network protocol.
fn build(policy: &mut dyn Policy) -> Result<NetworkState> {
    let mut net = NetworkState::fully_connected(&[INITIATOR, "1", "2"])?;
    net.attach(&PureState::ket("q1", 2, 0), &[("1", Role::Resource)])?;
    net.attach(&PureState::ket("q2", 2, 0), &[("2", Role::Resource)])?;
    net.attach_request_resource(2, INITIATOR)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let w = prepare_weight_state(&[c(s, 0.0), c(s, 0.0)])?;
    let net = distribute_request(net, INITIATOR, &w, policy)?;
    let programs = [
        BranchProgram {
            branch: 0,
            steps: vec![],
        },
        BranchProgram {
            branch: 1,
            steps: vec![
                Step::unitary("1", &["q1"], GateSpec::named("x")),
                Step::unitary("2", &["q2"], GateSpec::named("x")),
            ],
        },
    ];
    let net = apply_branch_programs(net, &programs, policy)?;
    collapse_to_single_control(net, INITIATOR, policy)
}

fn phi_plus() -> PureState {
    PureState::from_amplitudes(vec![Register::qubit("q1"), Register::qubit("q2")], bell_basis(2)[0].clone())
        .expect("normalized")
}

fn x_branch(policy: &mut dyn Policy) -> Result<PureState> {
    let net = build(policy)?;
    let mut table = BTreeMap::new();
    table.insert(1, vec![("1".to_string(), vec!["q1".to_string()], GateSpec::named("z"))]);
    let net = detach_control(net, INITIATOR, &ControlBasis::Fourier, &Detachment::Local(table), policy)?;
    Ok(net.global)
}

fn z_branch(policy: &mut dyn Policy) -> Result<(usize, PureState)> {
    let mut net = build(policy)?;
    let o = net
        .global
        .measure_computational(&request_label(INITIATOR), false, policy)?;
    if o.index == 1 {
        net.global.apply_unitary(&["q1"], &gates::sx())?;
        net.global.apply_unitary(&["q2"], &gates::sx())?;
    }
    Ok((o.index, net.global))
}

pub fn scenario_entanglement_decision(cfg: &RunConfig) -> ScenarioReport {
    let mut ctx = Ctx::new("entanglement_decision", cfg);
    let q12 = Bipartition::new(&["q1"], &["q2"]).expect("disjoint");
    let rq = request_label(INITIATOR);

    let mut p = ctx.policy();
    let pre = build(&mut p);
    ctx.absorb("build", p);
    if let Some(net) = ctx.guard("controlled state built", pre) {
        let want = ghz_state_on(&[rq.as_str(), "q1", "q2"], 2).expect("ghz");
        if let Some(f) = ctx.guard("pre-measurement fidelity", fid(&net.global, &want)) {
            ctx.report.approx("pre-measurement state is GHZ3 (fidelity)", 1.0, f, 1e-9, Origin::Derived);
        }
        let cut = Bipartition::new(&[rq.as_str()], &["q1", "q2"]).expect("disjoint");
        let n = negativity(&net.global.partial_trace(&[rq.as_str(), "q1", "q2"]).expect("labels"), &cut);
        if let Some(n) = ctx.guard("pre-measurement negativity", n) {
            ctx.report.approx("pre-measurement negativity c:12", 0.5, n, 1e-9, Origin::Exact);
        }
    }

    let mut p = ctx.policy();
    let x = x_branch(&mut p);
    ctx.absorb("x", p);
    if let Some(state) = ctx.guard("sigma-x control measurement", x) {
        let f = fid(&state, &phi_plus()).unwrap_or(f64::NAN);
        ctx.report.approx("sigma-x control: Bell pair fidelity", 1.0, f, 1e-9, Origin::Reported);
        let n = negativity(&crate::DensityState::from_pure(&state), &q12).unwrap_or(f64::NAN);
        ctx.report.approx("sigma-x control: negativity", 0.5, n, 1e-9, Origin::Exact);
    }
    if let Some(worst) = ctx.exhaustive_min("sigma-x sweep", |p| fid(&x_branch(p)?, &phi_plus())) {
        ctx.report
            .approx("sigma-x control: worst fidelity over all outcomes", 1.0, worst, 1e-9, Origin::Reported);
    }

    let mut p = ctx.policy();
    let z = z_branch(&mut p);
    ctx.absorb("z", p);
    if let Some((_, state)) = ctx.guard("sigma-z control measurement", z) {
        let n = negativity(&crate::DensityState::from_pure(&state), &q12).unwrap_or(f64::NAN);
        ctx.report.approx("sigma-z control: negativity (product state)", 0.0, n, 1e-9, Origin::Reported);
    }
    let zero = PureState::basis(&[Register::qubit("q1"), Register::qubit("q2")], &[0, 0]).expect("basis");
    let worst = ctx.exhaustive_min("sigma-z sweep", |p| {
        let (_, s) = z_branch(p)?;
        let n = negativity(&crate::DensityState::from_pure(&s), &q12)?;
        Ok(fid(&s, &zero)? - n)
    });
    if let Some(worst) = worst {
        ctx.report.approx(
            "sigma-z control: corrected product |00> over all outcomes",
            1.0,
            worst,
            1e-9,
            Origin::Derived,
        );
    }
    ctx.finish()
}
