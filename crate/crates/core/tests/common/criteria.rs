//! The nine acceptance measurements, shared by the `acceptance` target and the ordinary
//! integration tests. Each function reports what it measured; the callers decide how to
//! present or assert it.

use super::*;
use qnetsup::ctrltask::{
    controlled_cut, controlled_measure, controlled_merge, controlled_send, demonstrate_measurement_nonlinearity,
    prepare_aux_for_measurement, ControlledMeasureSpec,
};
use qnetsup::engine::enumerate_outcomes;
use qnetsup::entmetrics::{all_bipartitions, is_ppt, maximally_entangled_check, negativity as lib_negativity, smolin_state, Bipartition};
use qnetsup::graphstate::Graph;
use qnetsup::network::{
    collapse_to_single_control, distribute_request, prepare_weight_state, request_label, NetworkState,
};
use qnetsup::scenarios::{
    destinations_pipeline, encoding_pipeline, ghz_cluster_after_control, ghz_superposition_pipeline, paths_pipeline,
    smolin_superposition, Codewords, NONLINEARITY_TRACE_DISTANCE,
};
use qnetsup::{DensityState, Error, PureState, Register, Sample, Scripted};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

pub type Res<T> = Result<T, Error>;

/// Worst deviations seen over a batch of runs.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sweep {
    pub runs: usize,
    /// `max |1 − F|` against the reference vector.
    pub fid_dev: f64,
    /// `max_k | |α_k|² − p_k |` for the control populations.
    pub weight_dev: f64,
    /// `max |Σ p − 1|` over the outcome trees (exhaustive sweeps only).
    pub prob_dev: f64,
}

impl Sweep {
    fn leaf(&mut self, got: &[C], want: &[C]) {
        self.runs += 1;
        self.fid_dev = self.fid_dev.max((1.0 - overlap_sqr(got, want)).abs());
    }

    fn weights(&mut self, state: &PureState, control: &str, alphas: &[C]) -> Res<()> {
        let w = state.level_weights(control)?;
        for (a, p) in alphas.iter().zip(&w) {
            self.weight_dev = self.weight_dev.max((a.norm_sqr() - p).abs());
        }
        Ok(())
    }

    fn total(&mut self, p: f64) {
        self.prob_dev = self.prob_dev.max((p - 1.0).abs());
    }

    fn absorb(&mut self, o: &Sweep) {
        self.runs += o.runs;
        self.fid_dev = self.fid_dev.max(o.fid_dev);
        self.weight_dev = self.weight_dev.max(o.weight_dev);
        self.prob_dev = self.prob_dev.max(o.prob_dev);
    }

    pub fn within(&self, tol: f64) -> bool {
        self.runs > 0 && self.fid_dev <= tol && self.weight_dev <= tol && self.prob_dev <= tol
    }
}

pub struct Verdict {
    pub pass: bool,
    pub detail: String,
    pub secs: f64,
}

fn zero() -> Vec<C> {
    vec![cx(1.0, 0.0), cx(0.0, 0.0)]
}

fn plus() -> Vec<C> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![cx(s, 0.0), cx(s, 0.0)]
}

fn qubits(labels: &[&str], amps: Vec<C>) -> PureState {
    PureState::from_amplitudes(labels.iter().map(|l| Register::qubit(*l)).collect(), amps).expect("normalized")
}

fn kron_all(parts: &[Vec<C>]) -> Vec<C> {
    parts.iter().skip(1).fold(parts[0].clone(), |acc, p| kron(&acc, p))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- controlled tasks -------------------------------------------------------------------

const SEND: [&str; 6] = ["c", "a1", "a2", "b", "ax1", "ax2"];

fn send_input(alphas: &[C], psi: &[C]) -> PureState {
    qubits(&SEND, kron_all(&[alphas.to_vec(), psi.to_vec(), bell(0), zero(), plus()]))
}

/// `α₀|0⟩|ψ⟩_{a1}|Φ+⟩_{a2 b} + α₁|1⟩|0⟩_{a1}|+⟩_{a2}|ψ⟩_b`.
pub fn send_oracle(alphas: &[C], psi: &[C]) -> Vec<C> {
    controlled(alphas, &[kron(psi, &bell(0)), kron_all(&[zero(), plus(), psi.to_vec()])])
}

/// Every Bell outcome of one controlled teleportation: `(outcome, probability, state)`.
pub fn send_branches(alphas: &[C], psi: &[C]) -> Res<Vec<(usize, f64, PureState)>> {
    let input = send_input(alphas, psi);
    let leaves = enumerate_outcomes(|p| controlled_send(input.clone(), "c", "a1", "a2", "b", "ax1", "ax2", p))?;
    Ok(leaves
        .into_iter()
        .map(|l| (l.value.outcome, l.probability, l.value.post_state))
        .collect())
}

pub fn send_sweep(draws: usize, seed: u64) -> Res<Sweep> {
    let mut r = rng(seed);
    let mut s = Sweep::default();
    for _ in 0..draws {
        let (alphas, psi) = (random_state(2, &mut r), random_state(2, &mut r));
        let want = send_oracle(&alphas, &psi);
        let mut total = 0.0;
        for (_, p, st) in send_branches(&alphas, &psi)? {
            total += p;
            s.leaf(&amps_in(&st, &SEND[..4]), &want);
            s.weights(&st, "c", &alphas)?;
        }
        s.total(total);
    }
    Ok(s)
}

const CUT_GRAPH: [(usize, usize); 4] = [(0, 1), (1, 2), (2, 3), (0, 2)];
const CUT_VERTEX: usize = 1;

fn labelled_graph(names: &[&str], edges: &[(usize, usize)]) -> Graph {
    let e: Vec<(&str, &str)> = edges.iter().map(|&(a, b)| (names[a], names[b])).collect();
    Graph::from_edges(names, &e).expect("valid graph")
}

/// `α₀|0⟩|G⟩ + α₁|1⟩|+⟩_a|G/a⟩`.
pub fn cut_oracle(alphas: &[C]) -> Vec<C> {
    let rest: Vec<(usize, usize)> = CUT_GRAPH
        .iter()
        .copied()
        .filter(|&(a, b)| a != CUT_VERTEX && b != CUT_VERTEX)
        .collect();
    controlled(alphas, &[graph_state(4, &CUT_GRAPH), graph_state(4, &rest)])
}

pub fn cut_sweep(draws: usize, seed: u64) -> Res<Sweep> {
    let names = ["g0", "g1", "g2", "g3"];
    let graph = labelled_graph(&names, &CUT_GRAPH);
    let mut r = rng(seed);
    let mut s = Sweep::default();
    for _ in 0..draws {
        let alphas = random_state(2, &mut r);
        let input = qubits(
            &["c", "g0", "g1", "g2", "g3", "aux"],
            kron_all(&[alphas.clone(), graph_state(4, &CUT_GRAPH), plus()]),
        );
        let want = cut_oracle(&alphas);
        let leaves = enumerate_outcomes(|p| controlled_cut(input.clone(), &graph, "c", names[CUT_VERTEX], "aux", p))?;
        let mut total = 0.0;
        for l in leaves {
            total += l.probability;
            s.leaf(&amps_in(&l.value.post_state, &["c", "g0", "g1", "g2", "g3"]), &want);
            s.weights(&l.value.post_state, "c", &alphas)?;
        }
        s.total(total);
    }
    Ok(s)
}

/// Registers in oracle order: `G₁ = x-a1`, `G₂ = a2-y-z`.
const MERGE: [&str; 6] = ["c", "x", "a1", "a2", "y", "z"];

/// `α₀|0⟩|G₁⟩|G₂⟩ + α₁|1⟩|G₁ ∪ G₂ with a2 merged into a1⟩|+⟩_{a2}`.
pub fn merge_oracle(alphas: &[C]) -> Vec<C> {
    controlled(
        alphas,
        &[graph_state(5, &[(0, 1), (2, 3), (3, 4)]), graph_state(5, &[(0, 1), (1, 3), (3, 4)])],
    )
}

pub fn merge_sweep(draws: usize, seed: u64) -> Res<Sweep> {
    let g1 = labelled_graph(&["x", "a1"], &[(0, 1)]);
    let g2 = labelled_graph(&["a2", "y", "z"], &[(0, 1), (1, 2)]);
    let mut r = rng(seed);
    let mut s = Sweep::default();
    for _ in 0..draws {
        let alphas = random_state(2, &mut r);
        let input = qubits(
            &["c", "x", "a1", "a2", "y", "z", "aux"],
            kron_all(&[alphas.clone(), graph_state(5, &[(0, 1), (2, 3), (3, 4)]), plus()]),
        );
        let want = merge_oracle(&alphas);
        let leaves = enumerate_outcomes(|p| controlled_merge(input.clone(), "c", &g1, &g2, "a1", "a2", "aux", p))?;
        let mut total = 0.0;
        for l in leaves {
            total += l.probability;
            s.leaf(&amps_in(&l.value.post_state, &MERGE), &want);
            s.weights(&l.value.post_state, "c", &alphas)?;
        }
        s.total(total);
    }
    Ok(s)
}

/// A random orthonormal qubit basis.
fn random_basis(r: &mut ChaCha8Rng) -> Vec<Vec<C>> {
    let v = random_state(2, r);
    vec![v.clone(), vec![-v[1].conj(), v[0].conj()]]
}

fn measure_input(alphas: &[C], psi: &[C], aux: &[C]) -> PureState {
    qubits(&["c", "t", "aux"], kron_all(&[alphas.to_vec(), psi.to_vec(), aux.to_vec()]))
}

/// Controlled projective measurement in a random basis with the auxiliary prepared from
/// the target's statistics; only the control populations are compared.
pub fn measure_sweep(draws: usize, seed: u64) -> Res<Sweep> {
    let mut r = rng(seed);
    let mut s = Sweep::default();
    for _ in 0..draws {
        let (alphas, psi, basis) = (random_state(2, &mut r), random_state(2, &mut r), random_basis(&mut r));
        let rho = DensityState::from_pure(&qubits(&["t"], psi.clone()));
        let aux = prepare_aux_for_measurement(&rho, &basis, "aux")?;
        let input = measure_input(&alphas, &psi, aux.amplitudes());
        let spec = ControlledMeasureSpec {
            control: "c".into(),
            target: "t".into(),
            aux: "aux".into(),
            basis,
        };
        let leaves = enumerate_outcomes(|p| controlled_measure(input.clone(), &spec, p))?;
        let mut total = 0.0;
        for l in leaves {
            total += l.probability;
            s.runs += 1;
            s.weights(&l.value.post_state, "c", &alphas)?;
        }
        s.total(total);
    }
    Ok(s)
}

/// Target |+⟩ measured in the σz basis with the auxiliary left in |0⟩.
pub fn misprepared_aux() -> Res<()> {
    let input = measure_input(&plus(), &plus(), &zero());
    let spec = ControlledMeasureSpec {
        control: "c".into(),
        target: "t".into(),
        aux: "aux".into(),
        basis: vec![zero(), vec![cx(0.0, 0.0), cx(1.0, 0.0)]],
    };
    controlled_measure(input, &spec, &mut Scripted::default()).map(|_| ())
}

// ---- pipelines --------------------------------------------------------------------------

pub fn ghz_pipeline_sweep(draws: usize, seed: u64) -> Res<Sweep> {
    let mut r = rng(seed);
    let mut s = Sweep::default();
    for k in 0..draws {
        let alphas = random_state(4, &mut r);
        let out = ghz_superposition_pipeline(&alphas, &mut Sample::new(seed ^ (k as u64) << 8))?;
        s.leaf(&amps_in(&out.detached, &["1.sys", "2.sys", "3.sys", "4.sys"]), &ghz_superposition_oracle(&alphas));
        s.weights(&out.controlled.global, &request_label("1"), &alphas)?;
    }
    Ok(s)
}

/// `Σ_i α_i |φ⟩_i |2⟩_{i⊕1} |0⟩_rest` on four-level registers.
pub fn destinations_oracle(alphas: &[C], phi: &[C]) -> Vec<C> {
    let n = alphas.len();
    let mut v = vec![cx(0.0, 0.0); 4usize.pow(n as u32)];
    for (i, a) in alphas.iter().enumerate() {
        for (x, f) in phi.iter().enumerate() {
            let mut idx = 0;
            for k in 0..n {
                let level = if k == i { x } else if k == (i + 1) % n { 2 } else { 0 };
                idx = idx * 4 + level;
            }
            v[idx] += a * f;
        }
    }
    v
}

pub fn destinations_sweep(n: usize, draws: usize, seed: u64) -> Res<Sweep> {
    let labels: Vec<String> = (0..n).map(|k| format!("{}.sys", k + 1)).collect();
    let order: Vec<&str> = labels.iter().map(String::as_str).collect();
    let mut r = rng(seed);
    let mut s = Sweep::default();
    for k in 0..draws {
        let (alphas, phi) = (random_state(n, &mut r), random_state(2, &mut r));
        let out = destinations_pipeline(n, &alphas, &phi, &mut Sample::new(seed ^ (k as u64) << 8))?;
        s.leaf(&amps_in(&out, &order), &destinations_oracle(&alphas, &phi));
    }
    Ok(s)
}

/// Both routes must leave `(a, i)` in `|Φ+⟩`; the fidelities come from the pipeline.
pub fn paths_sweep(draws: usize, seed: u64) -> Res<Sweep> {
    let mut s = Sweep::default();
    for k in 0..draws {
        let out = paths_pipeline(&mut Sample::new(seed ^ (k as u64) << 8))?;
        for f in out.fidelity {
            s.runs += 1;
            s.fid_dev = s.fid_dev.max((1.0 - f).abs());
        }
    }
    Ok(s)
}

/// `φ₀|000⟩ + φ₁|111⟩`, every outcome tuple for each random input.
pub fn encoding_sweep(draws: usize, seed: u64) -> Res<Sweep> {
    let cw = Codewords::repetition();
    let mut r = rng(seed);
    let mut s = Sweep::default();
    for _ in 0..draws {
        let phi = random_state(2, &mut r);
        let mut want = vec![cx(0.0, 0.0); 8];
        want[0] = phi[0];
        want[7] = phi[1];
        let leaves = enumerate_outcomes(|p| encoding_pipeline(&cw, &phi, p))?;
        let mut total = 0.0;
        for l in leaves {
            total += l.probability;
            s.leaf(&amps_in(&l.value, &["q1", "q2", "q3"]), &want);
        }
        s.total(total);
    }
    Ok(s)
}

// ---- request distribution ---------------------------------------------------------------

/// Every outcome tuple of request distribution followed by collapse, for `n` devices and
/// `m` branches: the distributed state must be `Σ α_i |i⟩^{⊗n}` and the collapsed one
/// `Σ α_i |i⟩` on the initiator.
pub fn request_brute_force(m: usize, n: usize, seed: u64) -> Res<Sweep> {
    let alphas = random_state(m, &mut rng(seed));
    let ids: Vec<String> = (1..=n).map(|k| format!("d{k}")).collect();
    let rq: Vec<String> = ids.iter().map(|i| request_label(i)).collect();
    let order: Vec<&str> = rq.iter().map(String::as_str).collect();
    let mut spread = vec![cx(0.0, 0.0); m.pow(n as u32)];
    for (i, a) in alphas.iter().enumerate() {
        let idx = (0..n).fold(0, |acc, _| acc * m + i);
        spread[idx] = *a;
    }
    let weight = prepare_weight_state(&alphas)?;
    let leaves = enumerate_outcomes(|p| {
        let mut net = NetworkState::fully_connected(&ids)?;
        net.attach_request_resource(m, &ids[0])?;
        let net = distribute_request(net, &ids[0], &weight, p)?;
        let distributed = net.global.clone();
        let collapsed = collapse_to_single_control(net, &ids[0], p)?.global;
        Ok((distributed, collapsed))
    })?;
    let mut s = Sweep::default();
    let mut total = 0.0;
    for l in leaves {
        total += l.probability;
        let (d, c) = l.value;
        s.leaf(&amps_in(&d, &order), &spread);
        s.leaf(&amps_in(&c, &order[..1]), &alphas);
        s.weights(&c, order[0], &alphas)?;
    }
    s.total(total);
    Ok(s)
}

// ---- the nine criteria ------------------------------------------------------------------

fn timed(f: impl FnOnce() -> Res<(bool, String)>) -> Verdict {
    let t = Instant::now();
    let r = f();
    let secs = t.elapsed().as_secs_f64();
    match r {
        Ok((pass, detail)) => Verdict { pass, detail, secs },
        Err(e) => Verdict {
            pass: false,
            detail: format!("error: {e}"),
            secs,
        },
    }
}

fn range(v: &[f64]) -> String {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!("[{lo:.6}, {hi:.6}]")
}

/// Two-loss negativity of the four-party GHZ superposition, target 0.1 ± 0.005, < 1 s.
pub fn criterion_1() -> Verdict {
    let mut v = timed(|| {
        let out = ghz_superposition_pipeline(&[cx(0.5, 0.0); 4], &mut Scripted::default())?;
        let rho = DensityState::from_pure(&out.detached);
        let labels = ["1.sys", "2.sys", "3.sys", "4.sys"];
        let mut ns = Vec::new();
        for a in 0..4 {
            for b in a + 1..4 {
                let keep: Vec<&str> = (0..4).filter(|&j| j != a && j != b).map(|j| labels[j]).collect();
                let cut = Bipartition::new(&[keep[0]], &[keep[1]])?;
                ns.push(lib_negativity(&rho.partial_trace(&keep)?, &cut)?);
            }
        }
        let pass = ns.iter().all(|n| (n - 0.1).abs() <= 0.005);
        Ok((pass, format!("6 two-loss cuts, negativity in {} (target 0.1 ± 0.005)", range(&ns))))
    });
    v.pass &= v.secs < 1.0;
    v
}

fn ghz_and_cluster() -> (Vec<C>, Vec<C>) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut ghz = vec![cx(0.0, 0.0); 16];
    ghz[0] = cx(s, 0.0);
    ghz[15] = cx(s, 0.0);
    (ghz, graph_state(4, &[(0, 1), (1, 2), (2, 3)]))
}

/// Kept-pair negativity per control outcome, target 0.35 ± 0.005; mixture 0 ± 1e-9; < 1 s.
pub fn criterion_2() -> Verdict {
    let mut v = timed(|| {
        let mut ns = Vec::new();
        for k in 0..2 {
            let s = ghz_cluster_after_control(k)?;
            let rho = DensityState::from_pure(&s);
            for (a, b) in [("q1", "q2"), ("q3", "q4")] {
                ns.push(lib_negativity(&rho.partial_trace(&[a, b])?, &Bipartition::new(&[a], &[b])?)?);
            }
        }
        let (ghz, cluster) = ghz_and_cluster();
        let mixture = mix(&[(0.5, ghz), (0.5, cluster)]);
        let mut worst_mix = 0.0f64;
        for a in 0..4 {
            for b in a + 1..4 {
                let (r, d) = reduce(&mixture, &[2; 4], &[a, b]);
                worst_mix = worst_mix.max(negativity(&r, &d, &[0]));
            }
        }
        let pass = ns.iter().all(|n| (n - 0.35).abs() <= 0.005) && worst_mix <= 1e-9;
        Ok((
            pass,
            format!(
                "per-outcome pairs (q1,q2),(q3,q4) negativity in {} (target 0.35 ± 0.005); mixture max {:.1e}",
                range(&ns),
                worst_mix.abs()
            ),
        ))
    });
    v.pass &= v.secs < 1.0;
    v
}

/// Maximal entanglement on all seven cuts; Smolin mixture PPT on the 2:2 cuts; < 1 s.
pub fn criterion_3() -> Verdict {
    let mut v = timed(|| {
        let s = smolin_superposition(&[cx(0.5, 0.0); 4], &mut Scripted::default())?;
        let labels = ["q1", "q2", "q3", "q4"];
        let mut failed = Vec::new();
        let cuts = all_bipartitions(&labels);
        for cut in &cuts {
            if !maximally_entangled_check(&s, cut)? {
                failed.push(cut.name());
            }
        }
        let rho = smolin_state();
        let mut ppt = 0;
        for pair in [["q1", "q2"], ["q1", "q3"], ["q1", "q4"]] {
            let rest: Vec<&str> = labels.iter().copied().filter(|q| !pair.contains(q)).collect();
            if is_ppt(&rho, &Bipartition::new(&pair[..], &rest)?, None)? {
                ppt += 1;
            }
        }
        let pass = cuts.len() == 7 && failed.is_empty() && ppt == 3;
        Ok((
            pass,
            format!(
                "maximally entangled on {}/{} cuts (not: {}); mixture PPT on {ppt}/3 two-two cuts",
                cuts.len() - failed.len(),
                cuts.len(),
                if failed.is_empty() { "-".into() } else { failed.join(" ") }
            ),
        ))
    });
    v.pass &= v.secs < 1.0;
    v
}

/// Fidelity 1 ± 1e-9 for the controlled tasks and the protocol pipelines; < 60 s.
pub fn criterion_4(draws: usize, seed: u64) -> Verdict {
    let mut v = timed(|| {
        let parts: [(&str, Sweep); 7] = [
            ("send", send_sweep(draws, seed)?),
            ("cut", cut_sweep(draws, seed + 1)?),
            ("merge", merge_sweep(draws, seed + 2)?),
            ("ghz", ghz_pipeline_sweep(draws, seed + 3)?),
            ("destinations", destinations_sweep(3, draws, seed + 4)?),
            ("paths", paths_sweep(draws, seed + 5)?),
            ("encoding", encoding_sweep(draws, seed + 6)?),
        ];
        let pass = parts.iter().all(|(_, s)| s.within(1e-9));
        let detail = parts
            .iter()
            .map(|(n, s)| format!("{n} {}:{:.0e}", s.runs, s.fid_dev.max(s.prob_dev)))
            .collect::<Vec<_>>()
            .join(", ");
        Ok((pass, format!("runs:worst |1-F| {detail}")))
    });
    v.pass &= v.secs < 60.0;
    v
}

/// Control populations preserved within 1e-9 for every task and outcome; a mis-prepared
/// auxiliary raises the weight-drift error.
pub fn criterion_5(draws: usize, seed: u64) -> Verdict {
    timed(|| {
        let mut all = Sweep::default();
        for s in [
            measure_sweep(draws, seed)?,
            send_sweep(draws, seed + 1)?,
            cut_sweep(draws, seed + 2)?,
            merge_sweep(draws, seed + 3)?,
        ] {
            all.absorb(&s);
        }
        let drift = matches!(misprepared_aux(), Err(Error::WeightDrift { .. }));
        let pass = all.runs > 0 && all.weight_dev <= 1e-9 && all.prob_dev <= 1e-9 && drift;
        Ok((
            pass,
            format!(
                "{} outcome branches, worst population deviation {:.1e}; mis-prepared aux rejected: {drift}",
                all.runs, all.weight_dev
            ),
        ))
    })
}

/// Every Bell outcome of controlled teleportation has probability 1/4 ± 1e-10.
pub fn criterion_6(inputs: usize, seed: u64) -> Verdict {
    timed(|| {
        let mut r = rng(seed);
        let mut worst = 0.0f64;
        let mut count = 0;
        for _ in 0..inputs {
            let (alphas, psi) = (random_state(2, &mut r), random_state(2, &mut r));
            let leaves = send_branches(&alphas, &psi)?;
            count += leaves.len();
            let mut seen = [0.0; 4];
            for (o, p, _) in leaves {
                seen[o] += p;
            }
            worst = seen.iter().fold(worst, |w, p| w.max((p - 0.25).abs()));
        }
        Ok((
            worst <= 1e-10 && count == 4 * inputs,
            format!("{inputs} inputs, {count} outcomes, worst |p - 1/4| = {worst:.1e}"),
        ))
    })
}

/// Trace distance between the two decompositions > 0.01 and reproducible to 1e-9.
pub fn criterion_7() -> Verdict {
    timed(|| {
        let a = demonstrate_measurement_nonlinearity()?.trace_distance;
        let b = demonstrate_measurement_nonlinearity()?.trace_distance;
        let pass = a > 0.01 && (a - b).abs() <= 1e-9 && (a - NONLINEARITY_TRACE_DISTANCE).abs() <= 1e-9;
        Ok((pass, format!("trace distance {a:.12}, rerun difference {:.1e}", (a - b).abs())))
    })
}

/// `qnetsup run all --seed 7` twice, byte-identical output; each run < 2 minutes.
pub fn criterion_8() -> Verdict {
    timed(|| {
        let run = || -> Res<(Vec<u8>, f64, Option<i32>)> {
            let t = Instant::now();
            let out = std::process::Command::new(env!("CARGO_BIN_EXE_qnetsup"))
                .args(["run", "all", "--seed", "7"])
                .env_remove("QNETSUP_SEED")
                .output()
                .map_err(|e| Error::Config(format!("cannot start the CLI: {e}")))?;
            Ok((out.stdout, t.elapsed().as_secs_f64(), out.status.code()))
        };
        let (a, ta, code) = run()?;
        let (b, tb, _) = run()?;
        let same = a == b && !a.is_empty();
        let pass = same && ta.max(tb) < 120.0 && matches!(code, Some(0 | 1));
        Ok((
            pass,
            format!(
                "{} bytes, identical: {same}, wall {ta:.1} s / {tb:.1} s, exit {}",
                a.len(),
                code.map_or("-".into(), |c| c.to_string())
            ),
        ))
    })
}

/// Exhaustive outcome trees for request distribution and collapse at (m, n) = (3, 3), (2, 4).
pub fn criterion_9(seed: u64) -> Verdict {
    timed(|| {
        let a = request_brute_force(3, 3, seed)?;
        let b = request_brute_force(2, 4, seed + 1)?;
        let pass = a.within(1e-9) && b.within(1e-9);
        Ok((
            pass,
            format!(
                "(3,3): {} leaves, (2,4): {} leaves, worst |1-F| {:.1e}, worst |Σp-1| {:.1e}",
                a.runs / 2,
                b.runs / 2,
                a.fid_dev.max(b.fid_dev),
                a.prob_dev.max(b.prob_dev)
            ),
        ))
    })
}
