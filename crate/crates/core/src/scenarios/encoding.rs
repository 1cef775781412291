//! The retained control register entangled with two codewords spread over `n` devices;
//! a Bell measurement of the control against an unknown qubit encodes that qubit into the
//! network.

use super::{fid, Ctx, Origin, RunConfig, ScenarioReport};
use crate::engine::{bell_basis, destructive_kraus, Policy, PureState, Register};
use crate::error::{Error, Result};
use crate::linalg::{c, gates, C64, ZERO};
use crate::network::{
    apply_branch_programs, collapse_to_single_control, distribute_request, prepare_weight_state,
    request_label, BranchProgram, GateSpec, NetworkState, Role, Step,
};
use crate::random::haar_state;
use serde::{Deserialize, Serialize};

const INITIATOR: &str = "c";
const INPUT: &str = "c.phi";

/// Two computational-basis codewords of equal length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codewords {
    pub zero: Vec<u8>,
    pub one: Vec<u8>,
}

impl Codewords {
    /// `|000⟩` and `|111⟩`.
    pub fn repetition() -> Self {
        Codewords {
            zero: vec![0, 0, 0],
            one: vec![1, 1, 1],
        }
    }

    /// Parses `"000,111"`.
    pub fn parse(text: &str) -> Result<Self> {
        let (a, b) = text
            .split_once(',')
            .ok_or_else(|| Error::Config("codewords must look like 000,111".into()))?;
        let bits = |s: &str| -> Result<Vec<u8>> {
            s.trim()
                .chars()
                .map(|ch| match ch {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(Error::Config(format!("bad codeword character `{ch}`"))),
                })
                .collect()
        };
        let cw = Codewords {
            zero: bits(a)?,
            one: bits(b)?,
        };
        cw.validate()?;
        Ok(cw)
    }

    pub fn validate(&self) -> Result<()> {
        if self.zero.is_empty() || self.zero.len() != self.one.len() {
            return Err(Error::Config("codewords must be non-empty and of equal length".into()));
        }
        if self.zero == self.one {
            return Err(Error::Config("codewords must be orthogonal".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.zero.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zero.is_empty()
    }

    fn word(&self, k: usize) -> &[u8] {
        if k == 0 {
            &self.zero
        } else {
            &self.one
        }
    }

    fn index(&self, k: usize) -> usize {
        self.word(k).iter().fold(0, |acc, b| acc * 2 + *b as usize)
    }

    fn differing(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.zero[j] != self.one[j]).collect()
    }
}

fn qubit(j: usize) -> String {
    format!("q{}", j + 1)
}

fn device(j: usize) -> String {
    format!("{}", j + 1)
}

/// `(|0⟩_c|0_L⟩ + |1⟩_c|1_L⟩)/√2` through request, branch programs and collapse.
fn controlled_codewords(cw: &Codewords, policy: &mut dyn Policy) -> Result<NetworkState> {
    cw.validate()?;
    let n = cw.len();
    let mut ids = vec![INITIATOR.to_string()];
    ids.extend((0..n).map(device));
    let mut net = NetworkState::fully_connected(&ids)?;
    for j in 0..n {
        net.attach(&PureState::ket(&qubit(j), 2, 0), &[(&device(j), Role::Resource)])?;
    }
    net.attach_request_resource(2, INITIATOR)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let net = distribute_request(net, INITIATOR, &prepare_weight_state(&[c(s, 0.0), c(s, 0.0)])?, policy)?;
    let programs: Vec<BranchProgram> = (0..2)
        .map(|k| BranchProgram {
            branch: k,
            steps: (0..n)
                .filter(|&j| cw.word(k)[j] == 1)
                .map(|j| Step::unitary(&device(j), &[&qubit(j)], GateSpec::named("x")))
                .collect(),
        })
        .collect();
    let net = apply_branch_programs(net, &programs, policy)?;
    collapse_to_single_control(net, INITIATOR, policy)
}

fn code_regs(n: usize) -> Vec<Register> {
    (0..n).map(|j| Register::qubit(qubit(j))).collect()
}

/// `α|0_L⟩ + β|1_L⟩`, written down directly.
pub fn encoding_reference(cw: &Codewords, phi: &[C64]) -> Result<PureState> {
    let mut amps = vec![ZERO; 1 << cw.len()];
    amps[cw.index(0)] += phi[0];
    amps[cw.index(1)] += phi[1];
    PureState::from_amplitudes(code_regs(cw.len()), amps)
}

fn controlled_reference(cw: &Codewords) -> Result<PureState> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let n = cw.len();
    let mut amps = vec![ZERO; 2 << n];
    amps[cw.index(0)] = c(s, 0.0);
    amps[(1 << n) + cw.index(1)] = c(s, 0.0);
    let mut regs = vec![Register::qubit(request_label(INITIATOR))];
    regs.extend(code_regs(n));
    PureState::from_amplitudes(regs, amps)
}

/// Bell measurement of `(φ, control)`; outcome `2a + b` leaves `X_L^b Z_L^a` on the code,
/// undone by `X_L^b` followed by `Z_L^a`.
fn encode(mut net: NetworkState, cw: &Codewords, phi: &[C64], policy: &mut dyn Policy) -> Result<(usize, f64, PureState)> {
    let input = PureState::single(Register::qubit(INPUT), phi.to_vec())?;
    net.attach(&input, &[(INITIATOR, Role::Aux)])?;
    let o = net.global.bell_measure(INPUT, &request_label(INITIATOR), policy)?;
    let (a, b) = (o.index / 2, o.index % 2);
    let diff = cw.differing();
    if b == 1 {
        for &j in &diff {
            net.global.apply_unitary(&[&qubit(j)], &gates::sx())?;
        }
    }
    if a == 1 {
        net.global.apply_unitary(&[&qubit(diff[0])], &gates::sz())?;
    }
    Ok((o.index, o.probability, net.global))
}

/// Full protocol; returns the code registers.
pub fn encoding_pipeline(cw: &Codewords, phi: &[C64], policy: &mut dyn Policy) -> Result<PureState> {
    let net = controlled_codewords(cw, policy)?;
    Ok(encode(net, cw, phi, policy)?.2)
}

pub fn scenario_encoding(cfg: &RunConfig) -> ScenarioReport {
    let cw = cfg.codewords.clone();
    let mut ctx = Ctx::new("encoding", cfg);
    ctx.report.param("codewords", &cw);
    let phi = haar_state(2, ctx.rng());
    ctx.report.param("input populations", [phi[0].norm_sqr(), phi[1].norm_sqr()]);

    let mut p = ctx.policy();
    let built = controlled_codewords(&cw, &mut p);
    ctx.absorb("build", p);
    let Some(net) = ctx.guard("controlled codewords", built) else {
        return ctx.finish();
    };
    let f = controlled_reference(&cw).and_then(|r| fid(&net.global, &r)).unwrap_or(f64::NAN);
    ctx.report
        .approx("control entangled with the codewords (fidelity)", 1.0, f, 1e-9, Origin::Derived);

    let kraus = destructive_kraus(&bell_basis(2));
    let mut with_input = net.clone();
    let probs = with_input
        .attach(&PureState::single(Register::qubit(INPUT), phi.clone()).expect("normalized"), &[(INITIATOR, Role::Aux)])
        .and_then(|_| with_input.global.outcome_probabilities(&[INPUT, &request_label(INITIATOR)], &kraus, &[]));
    if let Some(probs) = ctx.guard("Bell outcome distribution", probs) {
        for (k, pk) in probs.iter().enumerate() {
            ctx.report
                .approx(&format!("Bell outcome {k} probability"), 0.25, *pk, 1e-10, Origin::Derived);
        }
    }

    let mut p = ctx.policy();
    let enc = encode(net.clone(), &cw, &phi, &mut p);
    ctx.absorb("encode", p);
    if let Some((k, _, state)) = ctx.guard("encoding", enc) {
        ctx.report.param("Bell outcome", k);
        let f = encoding_reference(&cw, &phi).and_then(|r| fid(&state, &r)).unwrap_or(f64::NAN);
        ctx.report
            .approx("encoded state matches the logical superposition", 1.0, f, 1e-9, Origin::Reported);
        for lost in 0..cw.len() {
            let keep: Vec<String> = (0..cw.len()).filter(|&j| j != lost).map(qubit).collect();
            let keep_ref: Vec<&str> = keep.iter().map(|s| s.as_str()).collect();
            let Some(rho) = ctx.guard("reduced state", state.partial_trace(&keep_ref)) else {
                continue;
            };
            let sub = |k: usize| {
                (0..cw.len())
                    .filter(|&j| j != lost)
                    .fold(0, |acc, j| acc * 2 + cw.word(k)[j] as usize)
            };
            let (p0, p1) = (rho.matrix()[(sub(0), sub(0))].re, rho.matrix()[(sub(1), sub(1))].re);
            let ok = sub(0) != sub(1)
                && (p0 - phi[0].norm_sqr()).abs() <= 1e-9
                && (p1 - phi[1].norm_sqr()).abs() <= 1e-9;
            ctx.report.equal(
                &format!("loss of {}: remaining qubits carry the input populations", qubit(lost)),
                true,
                ok,
                Origin::Derived,
            );
        }
    }

    let basis_in = encoding_pipeline(&cw, &[c(1.0, 0.0), ZERO], &mut ctx.policy())
        .and_then(|s| fid(&s, &encoding_reference(&cw, &[c(1.0, 0.0), ZERO])?));
    if let Some(f) = ctx.guard("basis input", basis_in) {
        ctx.report.approx("input |0> encodes to the zero codeword", 1.0, f, 1e-9, Origin::Exact);
    }
    let phi_sweep = phi.clone();
    let worst = ctx.exhaustive_min("outcome sweep", |p| {
        fid(&encoding_pipeline(&cw, &phi_sweep, p)?, &encoding_reference(&cw, &phi_sweep)?)
    });
    if let Some(w) = worst {
        ctx.report
            .approx("every outcome tuple corrected (worst fidelity)", 1.0, w, 1e-9, Origin::Reported);
    }
    let draws = ctx.cfg.draws;
    let worst = ctx.sampled_min("random inputs", draws, |p, rng| {
        let phi = haar_state(2, rng);
        fid(&encoding_pipeline(&cw, &phi, p)?, &encoding_reference(&cw, &phi)?)
    });
    if let Some(w) = worst {
        ctx.report
            .approx("random inputs and outcomes (worst fidelity)", 1.0, w, 1e-9, Origin::Reported);
    }
    ctx.finish()
}
