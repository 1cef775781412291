//! Devices switched into a protocol by comparing an addressing register with an activation
//! register; an activated request register then selects an entry of a program table.

use super::{Ctx, Origin, RunConfig, ScenarioReport};
use crate::engine::{PureState, Register};
use crate::entmetrics::{fidelity, negativity, Bipartition};
use crate::error::Result;
use crate::linalg::{c, gates, is_unitary, max_abs, CMatrix, C64, ZERO};
use crate::network::{
    addressing_activate, addressing_operator, program_gate, request_label, GateSpec, NetworkState,
    ProgramTable, Role,
};
use crate::random::haar_state;
use std::collections::BTreeMap;

fn ad(id: &str) -> String {
    format!("{id}.ad")
}

fn ac(id: &str) -> String {
    format!("{id}.ac")
}

fn res(id: &str) -> String {
    format!("{id}.q")
}

/// Gives device `id` an addressing register `|address⟩`, an activation register in
/// `activation`, a request register `|0⟩` and one resource qubit in `q`.
fn equip(net: &mut NetworkState, id: &str, address: usize, activation: &[C64], q: &[C64]) -> Result<()> {
    net.global.attach(&PureState::ket(&ad(id), 2, address))?;
    net.global
        .attach(&PureState::single(Register::qubit(ac(id)), activation.to_vec())?)?;
    net.global.attach(&PureState::ket(&request_label(id), 2, 0))?;
    net.attach(&PureState::single(Register::qubit(res(id)), q.to_vec())?, &[(id, Role::Resource)])?;
    let d = net.device_mut(id)?;
    d.addressing_reg = Some(Register::qubit(ad(id)));
    d.activation_reg = Some(Register::qubit(ac(id)));
    d.request_reg = Some(Register::qubit(request_label(id)));
    Ok(())
}

fn table(id: &str) -> ProgramTable {
    ProgramTable {
        targets: vec![res(id)],
        entries: BTreeMap::from([(0, GateSpec::named("id")), (1, GateSpec::named("x"))]),
    }
}

/// Toffoli activation followed by the program table, on every device.
fn activate_all(mut net: NetworkState) -> Result<NetworkState> {
    let ids: Vec<String> = net.devices.iter().map(|d| d.id.clone()).collect();
    for id in &ids {
        net = addressing_activate(net, id)?;
        let t = table(id);
        net = program_gate(net, id, &t, &request_label(id))?;
    }
    Ok(net)
}

fn apply(u: &CMatrix, v: &[C64]) -> Vec<C64> {
    (0..v.len()).map(|i| (0..v.len()).map(|j| u[(i, j)] * v[j]).sum()).collect()
}

/// `|1⟩_ad (|0⟩_ac|0⟩_rq|φ⟩ + |1⟩_ac|1⟩_rq X|φ⟩)/√2`, written down directly.
fn superposed_reference(id: &str, phi: &[C64]) -> Result<PureState> {
    let xphi = apply(&gates::sx(), phi);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![ZERO; 16];
    for v in 0..2 {
        // (ad, ac, rq, q) big-endian
        amps[0b1000 | v] = c(s, 0.0) * phi[v];
        amps[0b1110 | v] = c(s, 0.0) * xphi[v];
    }
    let regs = [ad(id), ac(id), request_label(id), res(id)].map(Register::qubit).to_vec();
    PureState::from_amplitudes(regs, amps)
}

pub fn scenario_addressing(cfg: &RunConfig) -> ScenarioReport {
    let mut ctx = Ctx::new("addressing", cfg);

    let mut worst_dev = 0.0f64;
    let mut off_diag = 0.0f64;
    for d in 2..=5 {
        let t = addressing_operator(d);
        worst_dev = worst_dev.max(crate::linalg::unitarity_deviation(&t));
        if !is_unitary(&t) {
            worst_dev = worst_dev.max(1.0);
        }
        for p in 0..d {
            for s in (0..d).filter(|&s| s != p) {
                let off = (p * d + s) * d;
                let block = t.view((off, off), (d, d)).clone_owned();
                off_diag = off_diag.max(max_abs(&(block - gates::identity(d))));
            }
        }
    }
    ctx.report
        .approx("activation operator unitary for d = 2..5 (deviation)", 0.0, worst_dev, 1e-10, Origin::Exact);
    ctx.report
        .approx("activation operator is identity where ad != ac (deviation)", 0.0, off_diag, 1e-12, Origin::Exact);

    let phi = haar_state(2, ctx.rng());
    let psi = haar_state(2, ctx.rng());
    let one = [ZERO, c(1.0, 0.0)];
    let zero = [c(1.0, 0.0), ZERO];

    let run = (|| {
        let mut net = NetworkState::fully_connected(&["1", "2"])?;
        equip(&mut net, "1", 1, &one, &phi)?;
        equip(&mut net, "2", 1, &zero, &psi)?;
        activate_all(net)
    })();
    if let Some(net) = ctx.guard("matched and mismatched devices", run) {
        let x_phi = PureState::single(Register::qubit(res("1")), apply(&gates::sx(), &phi)).expect("normalized");
        let untouched = PureState::single(Register::qubit(res("2")), psi.clone()).expect("normalized");
        let f1 = net
            .global
            .partial_trace(&[&res("1")])
            .and_then(|r| fidelity(&r, &x_phi))
            .unwrap_or(f64::NAN);
        let f2 = net
            .global
            .partial_trace(&[&res("2")])
            .and_then(|r| fidelity(&r, &untouched))
            .unwrap_or(f64::NAN);
        let w1 = net.global.level_weights(&request_label("1")).map(|w| w[1]).unwrap_or(f64::NAN);
        let w2 = net.global.level_weights(&request_label("2")).map(|w| w[0]).unwrap_or(f64::NAN);
        ctx.report.approx("matched device: request register shifted", 1.0, w1, 1e-12, Origin::Derived);
        ctx.report
            .approx("matched device: program entry 1 (sigma-x) applied", 1.0, f1, 1e-10, Origin::Derived);
        ctx.report.approx("mismatched device: request register idle", 1.0, w2, 1e-12, Origin::Exact);
        ctx.report
            .approx("mismatched device: resources untouched", 1.0, f2, 1e-10, Origin::Exact);
    }

    let plus = [c(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2];
    let run = (|| {
        let mut net = NetworkState::fully_connected(&["1"])?;
        equip(&mut net, "1", 1, &plus, &phi)?;
        activate_all(net)
    })();
    if let Some(net) = ctx.guard("superposed activation", run) {
        let f = superposed_reference("1", &phi)
            .and_then(|r| fidelity(&net.global, &r))
            .unwrap_or(f64::NAN);
        ctx.report
            .approx("superposed activation matches direct construction", 1.0, f, 1e-10, Origin::Derived);
        let cut = Bipartition::new(&[ac("1")], &[request_label("1"), res("1")]);
        let n = cut
            .and_then(|cut| Ok((net.global.partial_trace(&[&ac("1"), &request_label("1"), &res("1")])?, cut)))
            .and_then(|(rho, cut)| negativity(&rho, &cut))
            .unwrap_or(f64::NAN);
        ctx.report.param("activation entanglement (negativity)", n);
        ctx.report
            .greater("activation register entangled with the device", 1e-6, n, Origin::Derived);
    }
    ctx.finish()
}
