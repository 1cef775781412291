//! Four devices pairwise sharing two-qubit graph states are driven into a superposition of
//! all four three-party GHZ states, one per excluded device. Every device merges its
//! resource qubits into a designated one; in branch `b` the pairs touching device `b` are
//! swapped into an auxiliary `|+⟩` before the merge and measured out afterwards. The
//! excluded device is then marked on level 2 of an embedded four-level register, which
//! makes the control removable.

use super::{fid, Ctx, Origin, RunConfig, ScenarioReport};
use crate::engine::{Policy, PureState, Register, Scripted};
use crate::entmetrics::{is_ppt, negativity, Bipartition};
use crate::error::Result;
use crate::graphstate::Graph;
use crate::linalg::{c, gates, CMatrix, C64, ZERO};
use crate::network::{
    apply_branch_programs, collapse_to_single_control, detach_control, distribute_request,
    prepare_weight_state, request_label, BranchProgram, ControlBasis, Detachment, GateSpec, Init,
    MeasureKind, NetworkState, PairKind, Step,
};
use crate::random::haar_state;
use crate::DensityState;
use std::f64::consts::FRAC_PI_4;

const N: usize = 4;
const INITIATOR: &str = "1";

fn id(j: usize) -> String {
    format!("{}", j + 1)
}

/// Device `j`'s half of the pair it shares with `k`.
fn r(j: usize, k: usize) -> String {
    format!("{}.r{}", j + 1, k + 1)
}

/// The qubit device `j` keeps: its half of the pair with `j + 1`.
fn v(j: usize) -> String {
    r(j, (j + 1) % N)
}

fn ax(j: usize) -> String {
    format!("{}.ax", j + 1)
}

fn ext(j: usize) -> String {
    format!("{}.ext", j + 1)
}

fn sys(j: usize) -> String {
    format!("{}.sys", j + 1)
}

fn owner(label: &str) -> &str {
    label.split('.').next().unwrap_or(label)
}

#[derive(Clone, Copy)]
enum Op {
    Pair(usize, usize),
    /// Device `j` merges `r(j, k)` into `v(j)`.
    Merge(usize, usize),
}

/// Pairs are created just before their first merge so that at most six resource qubits
/// are alive at any time.
const SCHEDULE: [Op; 14] = [
    Op::Pair(0, 1),
    Op::Pair(1, 2),
    Op::Merge(1, 0),
    Op::Pair(2, 3),
    Op::Merge(2, 1),
    Op::Pair(3, 0),
    Op::Merge(3, 2),
    Op::Merge(0, 3),
    Op::Pair(0, 2),
    Op::Merge(0, 2),
    Op::Merge(2, 0),
    Op::Pair(1, 3),
    Op::Merge(1, 3),
    Op::Merge(3, 1),
];

/// Branch `b` keeps the pair `(j, k)` out of the merge when it touches device `b`. The
/// pair `(b - 1, b)` has to be cut from `b`'s side since `b - 1` keeps its half.
fn cut_here(b: usize, j: usize, k: usize) -> bool {
    k == b || (j == b && k == (b + N - 1) % N)
}

fn z_fixes(steps: &mut Vec<Step>, g: &Graph, vertex: &str, skip: &str) {
    for n in g.neighbors(vertex) {
        if n != skip {
            steps.push(Step::if_outcome(owner(&n), 1, &[&n], GateSpec::named("z")));
        }
    }
}

fn swap_labels(g: &mut Graph, a: &str, b: &str) -> Result<()> {
    g.relabel(a, "~")?;
    g.relabel(b, a)?;
    g.relabel("~", b)
}

/// `e^{-iπ/4} exp(-iπ/4 X)` on the star centre and `H exp(iπ/4 Z)` on the leaves map the
/// triangle graph state exactly onto GHZ.
fn triangle_to_ghz() -> (CMatrix, CMatrix) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let e = C64::from_polar(1.0, -FRAC_PI_4);
    let rx = CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(0.0, -s), c(0.0, -s), c(s, 0.0)]);
    let rz = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::from_polar(1.0, FRAC_PI_4),
        C64::from_polar(1.0, -FRAC_PI_4),
    ]));
    (rx * e, gates::h() * rz)
}

/// Merge rounds with controlled cutting, per-branch graph bookkeeping for the Pauli
/// corrections, then the local Cliffords turning each triangle into GHZ.
fn round_programs() -> Result<Vec<BranchProgram>> {
    let mut steps: Vec<Vec<Step>> = vec![Vec::new(); N];
    let mut graphs: Vec<Graph> = (0..N).map(|_| Graph::with_qubits::<&str>(&[])).collect::<Result<_>>()?;
    for op in SCHEDULE {
        match op {
            Op::Pair(j, k) => {
                for b in 0..N {
                    steps[b].push(Step::pair(&id(j), &r(j, k), &id(k), &r(k, j), PairKind::Edge));
                    graphs[b].add_vertex(Register::qubit(r(j, k)))?;
                    graphs[b].add_vertex(Register::qubit(r(k, j)))?;
                    graphs[b].add_edge(&r(j, k), &r(k, j))?;
                }
            }
            Op::Merge(j, k) => {
                let (keep, gone, aux) = (v(j), r(j, k), ax(j));
                for b in 0..N {
                    let (st, g) = (&mut steps[b], &mut graphs[b]);
                    st.push(Step::prepare(&id(j), &aux, 2, Init::Plus));
                    g.add_vertex(Register::qubit(&aux))?;
                    if cut_here(b, j, k) {
                        st.push(Step::unitary(&id(j), &[&gone, &aux], GateSpec::named("swap")));
                        swap_labels(g, &gone, &aux)?;
                    }
                    st.push(Step::measure(&id(j), MeasureKind::Merge, &[&keep, &gone]));
                    z_fixes(st, g, &gone, &keep);
                    *g = g.merged(&keep, &gone)?;
                    st.push(Step::measure(&id(j), MeasureKind::Z, &[&aux]));
                    z_fixes(st, g, &aux, "");
                    *g = g.without(&aux)?;
                }
            }
        }
    }
    let (centre, leaf) = triangle_to_ghz();
    for (b, st) in steps.iter_mut().enumerate() {
        st.push(Step::unitary(&id(b), &[&v(b)], GateSpec::named("h")));
        let rest: Vec<usize> = (0..N).filter(|&j| j != b).collect();
        st.push(Step::unitary(&id(rest[0]), &[&v(rest[0])], GateSpec::from_matrix(&centre)));
        for &j in &rest[1..] {
            st.push(Step::unitary(&id(j), &[&v(j)], GateSpec::from_matrix(&leaf)));
        }
    }
    Ok(steps
        .into_iter()
        .enumerate()
        .map(|(branch, steps)| BranchProgram { branch, steps })
        .collect())
}

/// Embeds every kept qubit into a four-level register; branch `b` lifts device `b`'s
/// register to level 2.
fn marking_programs() -> Vec<BranchProgram> {
    (0..N)
        .map(|b| {
            let mut steps = Vec::new();
            for j in 0..N {
                steps.push(Step::prepare(&id(j), &ext(j), 2, Init::Zero));
                steps.push(Step::Embed {
                    device: id(j),
                    high: ext(j),
                    low: v(j),
                    label: sys(j),
                });
            }
            steps.push(Step::unitary(&id(b), &[&sys(b)], GateSpec::named("x^2")));
            BranchProgram { branch: b, steps }
        })
        .collect()
}

/// Intermediate and final states of the protocol.
#[derive(Clone, Debug)]
pub struct GhzSuperposition {
    /// After the merge rounds, control collapsed onto the initiator (no extra levels).
    pub unmarked: PureState,
    /// Marked and collapsed, control still attached.
    pub controlled: NetworkState,
    /// Control removed.
    pub detached: PureState,
}

fn markers() -> Vec<String> {
    (0..N).map(sys).collect()
}

pub fn ghz_superposition_pipeline(alphas: &[C64], policy: &mut dyn Policy) -> Result<GhzSuperposition> {
    let ids: Vec<String> = (0..N).map(id).collect();
    let mut net = NetworkState::fully_connected(&ids)?;
    net.attach_request_resource(N, INITIATOR)?;
    let net = distribute_request(net, INITIATOR, &prepare_weight_state(alphas)?, policy)?;
    let net = apply_branch_programs(net, &round_programs()?, policy)?;
    let unmarked = collapse_to_single_control(net.clone(), INITIATOR, policy)?.global;
    let net = apply_branch_programs(net, &marking_programs(), policy)?;
    let controlled = collapse_to_single_control(net, INITIATOR, policy)?;
    let detached = detach_control(
        controlled.clone(),
        INITIATOR,
        &ControlBasis::Fourier,
        &Detachment::ExtraLevel { markers: markers() },
        policy,
    )?
    .global;
    Ok(GhzSuperposition {
        unmarked,
        controlled,
        detached,
    })
}

fn ghz_without(i: usize, levels: usize, excluded: usize) -> Vec<usize> {
    // Indices (base `levels`) of |0..0⟩ and |1..1⟩ on N/i with `excluded` on register i.
    (0..2)
        .map(|x| (0..N).fold(0, |acc, j| acc * levels + if j == i { excluded } else { x }))
        .collect()
}

/// `Σ_i α_i |i⟩_c |0⟩_i |GHZ⟩_{N/i}` on the kept qubits.
fn unmarked_reference(alphas: &[C64]) -> Result<PureState> {
    let mut regs = vec![Register::new(request_label(INITIATOR), N)];
    regs.extend((0..N).map(|j| Register::qubit(v(j))));
    let mut amps = vec![ZERO; N << N];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for (i, a) in alphas.iter().enumerate() {
        for k in ghz_without(i, 2, 0) {
            amps[(i << N) + k] += a * s;
        }
    }
    PureState::from_amplitudes(regs, amps)
}

/// `Σ_i α_i |2⟩_i |GHZ⟩_{N/i}` on four-level registers.
pub fn extra_level_reference(alphas: &[C64]) -> Result<PureState> {
    let regs: Vec<Register> = (0..N).map(|j| Register::new(sys(j), 4)).collect();
    let mut amps = vec![ZERO; 4usize.pow(N as u32)];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for (i, a) in alphas.iter().enumerate() {
        for k in ghz_without(i, 4, 2) {
            amps[k] += a * s;
        }
    }
    PureState::from_amplitudes(regs, amps)
}

fn basis_weights(i: usize) -> Vec<C64> {
    (0..N).map(|k| if k == i { c(1.0, 0.0) } else { ZERO }).collect()
}

/// Measures the retained control computationally.
fn sigma_z(net: &NetworkState, policy: &mut dyn Policy) -> Result<(usize, PureState)> {
    let mut s = net.global.clone();
    let o = s.measure_computational(&request_label(INITIATOR), false, policy)?;
    Ok((o.index, s))
}

pub fn scenario_ghz_superposition(cfg: &RunConfig) -> ScenarioReport {
    let mut ctx = Ctx::new("ghz_superposition", cfg);
    let uniform = vec![c(0.5, 0.0); N];
    let mut p = ctx.policy();
    let run = ghz_superposition_pipeline(&uniform, &mut p);
    ctx.absorb("main", p);
    let Some(out) = ctx.guard("protocol run", run) else {
        return ctx.finish();
    };
    let f = unmarked_reference(&uniform)
        .and_then(|r| fid(&out.unmarked, &r))
        .unwrap_or(f64::NAN);
    ctx.report
        .approx("controlled superposition of the four GHZ states", 1.0, f, 1e-9, Origin::Reported);
    let reference = extra_level_reference(&uniform).expect("normalized");
    let f = fid(&out.detached, &reference).unwrap_or(f64::NAN);
    ctx.report
        .approx("detached state matches the extra-level superposition", 1.0, f, 1e-9, Origin::Reported);

    for i in 0..N {
        let z = sigma_z(&out.controlled, &mut Scripted::new([i])).and_then(|(_, s)| {
            fid(&s, &extra_level_reference(&basis_weights(i))?)
        });
        if let Some(f) = ctx.guard("sigma-z control", z) {
            ctx.report.approx(
                &format!("sigma-z control outcome {i}: GHZ on the other three"),
                1.0,
                f,
                1e-9,
                Origin::Reported,
            );
        }
    }

    let sup = DensityState::from_pure(&reference);
    let parts: Vec<PureState> = (0..N)
        .map(|i| extra_level_reference(&basis_weights(i)).expect("normalized"))
        .collect();
    let comps: Vec<(f64, &PureState)> = parts.iter().map(|p| (0.25, p)).collect();
    let mixture = DensityState::mixture(&comps).expect("mixture");
    let labels: Vec<String> = (0..N).map(sys).collect();
    for a in 0..N {
        for b in a + 1..N {
            let keep: Vec<&str> = (0..N).filter(|&j| j != a && j != b).map(|j| labels[j].as_str()).collect();
            let cut = Bipartition::new(&[keep[0]], &[keep[1]]).expect("disjoint");
            let lost = format!("{},{}", labels[a], labels[b]);
            let ns = sup.partial_trace(&keep).and_then(|r| negativity(&r, &cut)).unwrap_or(f64::NAN);
            ctx.report
                .approx(&format!("lost {lost}: superposition negativity"), 0.1, ns, 0.005, Origin::Reported);
            let rm = mixture.partial_trace(&keep);
            let nm = rm.as_ref().map_err(Clone::clone).and_then(|r| negativity(r, &cut)).unwrap_or(f64::NAN);
            ctx.report
                .approx(&format!("lost {lost}: mixture negativity"), 0.0, nm, 1e-9, Origin::Reported);
            let ppt = rm.and_then(|r| is_ppt(&r, &cut, None)).unwrap_or(false);
            ctx.report.equal(&format!("lost {lost}: mixture is PPT"), true, ppt, Origin::Reported);
        }
    }
    for lost in 0..N {
        let keep: Vec<&str> = (0..N).filter(|&j| j != lost).map(|j| labels[j].as_str()).collect();
        let (rs, rm) = match (sup.partial_trace(&keep), mixture.partial_trace(&keep)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        for single in &keep {
            let rest: Vec<&str> = keep.iter().copied().filter(|q| q != single).collect();
            let cut = Bipartition::new(&[*single], &rest).expect("disjoint");
            let ns = negativity(&rs, &cut).unwrap_or(f64::NAN);
            let nm = negativity(&rm, &cut).unwrap_or(f64::NAN);
            ctx.report.param(&format!("lost {}, cut {}: mixture negativity", labels[lost], cut.name()), nm);
            ctx.report.greater(
                &format!("lost {}: superposition beats mixture across {}", labels[lost], cut.name()),
                nm + 1e-9,
                ns,
                Origin::Derived,
            );
        }
    }

    let draws = ctx.cfg.draws;
    let worst = ctx.sampled_min("random weights and outcomes", draws, |p, rng| {
        let a = haar_state(N, rng);
        fid(&ghz_superposition_pipeline(&a, p)?.detached, &extra_level_reference(&a)?)
    });
    if let Some(w) = worst {
        ctx.report
            .approx("random weights and outcomes (worst fidelity)", 1.0, w, 1e-9, Origin::Derived);
    }
    ctx.finish()
}
