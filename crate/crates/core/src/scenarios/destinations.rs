//! A source sends one qubit to a coherent superposition of `n` receivers. Each round
//! is a controlled teleportation: the Bell measurement always happens, but outside the
//! active branch it hits a dummy `|0⟩|+⟩` pair swapped in beforehand.

use super::{fid, Ctx, Origin, RunConfig, ScenarioReport};
use crate::engine::{Policy, PureState, Register};
use crate::error::{Error, Result};
use crate::linalg::{c, gates, C64, ZERO};
use crate::network::{
    apply_branch_programs, collapse_to_single_control, detach_control, distribute_request,
    prepare_weight_state, BranchProgram, ControlBasis, Detachment, GateSpec, Init, MeasureKind,
    NetworkState, PairKind, Role, Step,
};
use crate::random::haar_state;

const SOURCE: &str = "s";
const CARRIER: &str = "s.phi";

fn dev(k: usize) -> String {
    format!("{}", k + 1)
}

fn b(k: usize) -> String {
    format!("{}.b", k + 1)
}

fn sys(k: usize) -> String {
    format!("{}.sys", k + 1)
}

/// Programs for all `n` branches: one controlled teleportation round per receiver,
/// cleanup of the unused pairs, then the level-2 marker on receiver `i ⊕ 1`.
fn programs(n: usize) -> Vec<BranchProgram> {
    (0..n)
        .map(|i| {
            let mut steps = Vec::new();
            let mut carrier = CARRIER.to_string();
            for k in 0..n {
                let (x, y, a) = (format!("s.x{k}"), format!("s.y{k}"), format!("s.a{k}"));
                let (dk, bk) = (dev(k), b(k));
                steps.push(Step::prepare(SOURCE, &x, 2, Init::Zero));
                steps.push(Step::prepare(SOURCE, &y, 2, Init::Plus));
                if i != k {
                    steps.push(Step::unitary(SOURCE, &[&carrier, &x], GateSpec::named("swap")));
                    steps.push(Step::unitary(SOURCE, &[&a, &y], GateSpec::named("swap")));
                }
                steps.push(Step::measure(SOURCE, MeasureKind::Bell, &[&carrier, &a]));
                if i == k {
                    for o in 1..4 {
                        let u = gates::z_pow(2, o / 2) * gates::x_pow(2, o % 2);
                        steps.push(Step::if_outcome(&dk, o, &[&bk], GateSpec::from_matrix(&u)));
                    }
                }
                steps.push(Step::measure(SOURCE, MeasureKind::Z, &[&y]));
                if i != k {
                    steps.push(Step::if_outcome(&dk, 1, &[&bk], GateSpec::named("x")));
                }
                carrier = x;
            }
            steps.push(Step::measure(SOURCE, MeasureKind::Z, &[&carrier]));
            for k in 0..n {
                let e = format!("{}.e", k + 1);
                steps.push(Step::prepare(&dev(k), &e, 2, Init::Zero));
                steps.push(Step::Embed {
                    device: dev(k),
                    high: e,
                    low: b(k),
                    label: sys(k),
                });
            }
            let m = (i + 1) % n;
            steps.push(Step::unitary(&dev(m), &[&sys(m)], GateSpec::named("x^2")));
            BranchProgram { branch: i, steps }
        })
        .collect()
}

fn collapsed(n: usize, alphas: &[C64], phi: &[C64], policy: &mut dyn Policy) -> Result<NetworkState> {
    if n < 2 || alphas.len() != n {
        return Err(Error::Config(format!("need n >= 2 receivers and n weights (n = {n})")));
    }
    let mut ids = vec![SOURCE.to_string()];
    ids.extend((0..n).map(dev));
    let mut net = NetworkState::fully_connected(&ids)?;
    net.attach(&PureState::single(Register::qubit(CARRIER), phi.to_vec())?, &[(SOURCE, Role::Resource)])?;
    for k in 0..n {
        let pair = PairKind::Bell.state(&format!("s.a{k}"), &b(k));
        net.attach(&pair, &[(SOURCE, Role::Resource), (&dev(k), Role::Resource)])?;
    }
    net.attach_request_resource(n, SOURCE)?;
    let net = distribute_request(net, SOURCE, &prepare_weight_state(alphas)?, policy)?;
    let net = apply_branch_programs(net, &programs(n), policy)?;
    collapse_to_single_control(net, SOURCE, policy)
}

/// Largest normalized overlap between distinct control branches.
fn max_branch_overlap(net: &NetworkState) -> Result<f64> {
    let rq = crate::network::request_label(SOURCE);
    let d = net.global.register_dim(&rq)?;
    let br: Vec<PureState> = (0..d).map(|i| net.global.branch(&rq, i)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i + 1..d {
            let (ni, nj) = (br[i].norm_sqr().sqrt(), br[j].norm_sqr().sqrt());
            worst = worst.max(br[i].overlap(&br[j])?.norm() / (ni * nj));
        }
    }
    Ok(worst)
}

/// Full protocol; returns the receivers' four-level registers.
pub fn destinations_pipeline(n: usize, alphas: &[C64], phi: &[C64], policy: &mut dyn Policy) -> Result<PureState> {
    let net = collapsed(n, alphas, phi, policy)?;
    let markers = (0..n).map(|i| sys((i + 1) % n)).collect();
    let net = detach_control(net, SOURCE, &ControlBasis::Fourier, &Detachment::ExtraLevel { markers }, policy)?;
    Ok(net.global)
}

/// `Σ_i α_i |φ⟩_i |2⟩_{i⊕1} |0⟩_rest` on four-level receiver registers.
pub fn destinations_reference(n: usize, alphas: &[C64], phi: &[C64]) -> Result<PureState> {
    let regs: Vec<Register> = (0..n).map(|k| Register::new(sys(k), 4)).collect();
    let mut amps = vec![ZERO; 4usize.pow(n as u32)];
    for (i, a) in alphas.iter().enumerate() {
        for (v, amp) in phi.iter().enumerate() {
            let mut levels = vec![0usize; n];
            levels[i] = v;
            levels[(i + 1) % n] = 2;
            let idx = levels.iter().fold(0, |acc, l| acc * 4 + l);
            amps[idx] += a * amp;
        }
    }
    PureState::from_amplitudes(regs, amps)
}

pub fn scenario_destinations(cfg: &RunConfig) -> ScenarioReport {
    let n = cfg.destinations;
    let mut ctx = Ctx::new("destinations", cfg);
    ctx.report.param("n", n);
    let uniform = vec![c(1.0 / (n as f64).sqrt(), 0.0); n.max(1)];

    let phi = haar_state(2, ctx.rng());
    let mut p = ctx.policy();
    let run = collapsed(n, &uniform, &phi, &mut p).and_then(|net| {
        let ov = max_branch_overlap(&net)?;
        let markers = (0..n).map(|i| sys((i + 1) % n)).collect();
        let net = detach_control(net, SOURCE, &ControlBasis::Fourier, &Detachment::ExtraLevel { markers }, &mut p)?;
        Ok((ov, net.global))
    });
    ctx.absorb("main", p);
    if let Some((ov, state)) = ctx.guard("protocol run", run) {
        ctx.report
            .approx("marked branches are pairwise orthogonal", 0.0, ov, 1e-10, Origin::Reported);
        let f = destinations_reference(n, &uniform, &phi).and_then(|r| fid(&state, &r));
        let f = f.unwrap_or(f64::NAN);
        ctx.report
            .approx("Haar-random qubit: matches direct construction", 1.0, f, 1e-9, Origin::Derived);
    }

    let zero = [c(1.0, 0.0), ZERO];
    let basis = destinations_pipeline(n, &uniform, &zero, &mut ctx.policy())
        .and_then(|s| fid(&s, &destinations_reference(n, &uniform, &zero)?));
    if let Some(f) = ctx.guard("basis input", basis) {
        ctx.report.approx("input |0>: matches direct construction", 1.0, f, 1e-9, Origin::Derived);
    }

    let draws = ctx.cfg.draws;
    let worst = ctx.sampled_min("random inputs, weights and outcomes", draws, |p, rng| {
        let phi = haar_state(2, rng);
        let a = haar_state(n, rng);
        fid(&destinations_pipeline(n, &a, &phi, p)?, &destinations_reference(n, &a, &phi)?)
    });
    if let Some(w) = worst {
        ctx.report
            .approx("random inputs, weights and outcomes (worst fidelity)", 1.0, w, 1e-9, Origin::Derived);
    }
    ctx.finish()
}
