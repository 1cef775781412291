//! End-to-end constructions with machine-readable check reports, and the runner
//! behind the `qnetsup` command line.

mod addressing;
mod custom;
mod decision;
mod destinations;
mod encoding;
mod ghz_cluster;
mod ghz_superposition;
mod nonlinearity;
mod paths;
pub mod report;
mod smolin;

pub use addressing::scenario_addressing;
pub use custom::scenario_custom;
pub use decision::scenario_entanglement_decision;
pub use destinations::{destinations_pipeline, destinations_reference, scenario_destinations};
pub use encoding::{encoding_pipeline, encoding_reference, scenario_encoding, Codewords};
pub use ghz_cluster::{
    cluster_1d, ghz_cluster_after_control, ghz_cluster_state, ghz_variants_state, scenario_ghz_cluster,
};
pub use ghz_superposition::{
    extra_level_reference, ghz_superposition_pipeline, scenario_ghz_superposition, GhzSuperposition,
};
pub use nonlinearity::{scenario_nonlinearity, TRACE_DISTANCE as NONLINEARITY_TRACE_DISTANCE};
pub use paths::{paths_pipeline, scenario_paths, PathsOutcome};
pub use report::{Check, Observation, Origin, Relation, ScenarioReport};
pub use smolin::{
    scenario_smolin, smolin_superposition, smolin_superposition_reference, SMOLIN_ONE_VS_THREE_MIN_EIGENVALUE,
    SMOLIN_ONE_VS_THREE_NEGATIVITY,
};

use crate::engine::{enumerate_outcomes, Policy, PureState, Sample, Scripted};
use crate::error::{Error, Result};
use crate::network::topology::TopologySpec;
use crate::random::stream;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::time::Instant;

/// Everything a scenario may be parameterized by.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    /// Sample outcomes instead of taking the first most likely one.
    pub sample: bool,
    /// Random input draws per sweep where outcomes are not enumerated exhaustively.
    pub draws: usize,
    /// Number of devices in the multiple-destination scenario.
    pub destinations: usize,
    pub codewords: Codewords,
    pub topology: Option<TopologySpec>,
    /// Repetition index; selects the outcome stream under sampling.
    pub rep: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            sample: false,
            draws: 20,
            destinations: 3,
            codewords: Codewords::repetition(),
            topology: None,
            rep: 0,
        }
    }
}

impl RunConfig {
    pub fn with_seed(seed: u64) -> Self {
        RunConfig {
            seed,
            ..RunConfig::default()
        }
    }
}

/// Per-run state handed to a scenario: its report, input RNG and outcome policy source.
pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub report: ScenarioReport,
    inputs: ChaCha8Rng,
    outcomes: ChaCha8Rng,
    recorded: usize,
}

/// Wraps a policy and remembers every distribution it was asked to choose from.
pub struct Recorder {
    inner: Box<dyn Policy>,
    seen: Vec<(Vec<f64>, usize)>,
}

impl Policy for Recorder {
    fn select(&mut self, p: &[f64]) -> Result<usize> {
        let k = self.inner.select(p)?;
        self.seen.push((p.to_vec(), k));
        Ok(k)
    }
}

impl<'a> Ctx<'a> {
    pub fn new(name: &str, cfg: &'a RunConfig) -> Self {
        let mut report = ScenarioReport::new(name, cfg.seed);
        report.param("sample", cfg.sample);
        Ctx {
            cfg,
            report,
            inputs: stream(cfg.seed, &format!("{name}/inputs")),
            outcomes: stream(cfg.seed, &format!("{name}/outcomes/{}", cfg.rep)),
            recorded: 0,
        }
    }

    /// RNG for Haar draws and other inputs; independent of the outcome stream.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.inputs
    }

    /// Policy for the reported run: seeded sampling under `--sample`, otherwise the
    /// first most likely outcome (outcome 0 wherever outcomes are uniform).
    pub fn policy(&mut self) -> Recorder {
        let inner: Box<dyn Policy> = if self.cfg.sample {
            Box::new(Sample::new(self.outcomes.next_u64()))
        } else {
            Box::new(Scripted::default())
        };
        Recorder {
            inner,
            seen: Vec::new(),
        }
    }

    /// Keeps the observations of a finished [`Recorder`] for repetition statistics.
    pub fn absorb(&mut self, tag: &str, rec: Recorder) {
        for (i, (p, k)) in rec.seen.into_iter().enumerate() {
            self.report.observations.push(Observation {
                event: format!("{tag}#{i}"),
                probabilities: p,
                outcome: k,
            });
        }
        self.recorded += 1;
    }

    /// Policy for sweep draws; not recorded.
    pub fn sweep_policy(&mut self) -> Sample {
        Sample::new(self.outcomes.next_u64())
    }

    /// Records a failed check for an error, or passes the value through.
    pub fn guard<T>(&mut self, name: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.report.error(name, &e);
                None
            }
        }
    }

    /// Minimum of `f` over every reachable outcome tuple; also records the branch count.
    pub fn exhaustive_min(
        &mut self,
        name: &str,
        f: impl FnMut(&mut dyn Policy) -> Result<f64>,
    ) -> Option<f64> {
        let branches = self.guard(name, enumerate_outcomes(f))?;
        self.report.param(&format!("{name}: outcome tuples"), branches.len());
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        self.report.approx(
            &format!("{name}: outcome probabilities sum to 1"),
            1.0,
            total,
            1e-9,
            Origin::Exact,
        );
        Some(branches.iter().map(|b| b.value).fold(f64::INFINITY, f64::min))
    }

    /// Minimum of `f` over `draws` sampled outcome sequences.
    pub fn sampled_min(
        &mut self,
        name: &str,
        draws: usize,
        mut f: impl FnMut(&mut dyn Policy, &mut ChaCha8Rng) -> Result<f64>,
    ) -> Option<f64> {
        let mut worst = f64::INFINITY;
        for _ in 0..draws {
            let mut p = self.sweep_policy();
            let v = f(&mut p, &mut self.inputs);
            worst = worst.min(self.guard(name, v)?);
        }
        self.report.param(&format!("{name}: draws"), draws);
        Some(worst)
    }

    pub fn finish(self) -> ScenarioReport {
        self.report
    }
}

/// Fidelity helper shared by the scenarios.
pub(crate) fn fid(a: &PureState, b: &PureState) -> Result<f64> {
    crate::entmetrics::fidelity(a, b)
}

pub type ScenarioFn = fn(&RunConfig) -> ScenarioReport;

/// Registered scenarios with a one-line description.
pub const SCENARIOS: &[(&str, &str, ScenarioFn)] = &[
    (
        "ghz_superposition",
        "Bell-mesh resource to a superposition of all 3-party GHZ states, extra-level detachment",
        scenario_ghz_superposition,
    ),
    (
        "smolin",
        "superposed Bell-pair patterns versus the bound-entangled Smolin mixture",
        scenario_smolin,
    ),
    (
        "entanglement_decision",
        "control measurement basis decides between a Bell pair and a product state",
        scenario_entanglement_decision,
    ),
    (
        "ghz_cluster",
        "control basis selects GHZ or linear cluster; GHZ/cluster superposition under loss",
        scenario_ghz_cluster,
    ),
    (
        "destinations",
        "one qubit sent coherently to a superposition of n destinations",
        scenario_destinations,
    ),
    (
        "paths",
        "Bell pair between grid corners through a superposition of two routes",
        scenario_paths,
    ),
    (
        "encoding",
        "logical qubit teleported into a superposition of codeword locations",
        scenario_encoding,
    ),
    (
        "addressing",
        "addressing/activation registers switch devices and drive a program table",
        scenario_addressing,
    ),
    (
        "nonlinearity",
        "a controlled measurement cannot be a linear map on the target",
        scenario_nonlinearity,
    ),
];

/// Scenario names accepted by [`run_scenario`]; `custom` needs a topology.
pub fn scenario_names() -> Vec<&'static str> {
    SCENARIOS.iter().map(|(n, _, _)| *n).chain(["custom"]).collect()
}

fn lookup(name: &str) -> Result<ScenarioFn> {
    if name == "custom" {
        return Ok(scenario_custom);
    }
    SCENARIOS
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, _, f)| *f)
        .ok_or_else(|| Error::Config(format!("unknown scenario `{name}`")))
}

fn timed(f: ScenarioFn, cfg: &RunConfig) -> ScenarioReport {
    let t = Instant::now();
    let mut r = f(cfg);
    r.wall_time_ms = t.elapsed().as_secs_f64() * 1e3;
    r
}

/// Runs one scenario, aggregating `reps` sampled repetitions when `reps > 1`.
pub fn run_scenario(name: &str, cfg: &RunConfig, reps: usize) -> Result<ScenarioReport> {
    let f = lookup(name)?;
    if name == "custom" && cfg.topology.is_none() {
        return Err(Error::Config("scenario `custom` needs --topology".into()));
    }
    if name != "custom" && cfg.topology.is_some() {
        return Err(Error::Config("--topology only applies to scenario `custom`".into()));
    }
    if reps <= 1 {
        return Ok(timed(f, cfg));
    }
    let t = Instant::now();
    let reference = f(&RunConfig {
        sample: false,
        rep: 0,
        ..cfg.clone()
    });
    let runs: Vec<ScenarioReport> = (0..reps as u64)
        .map(|rep| {
            f(&RunConfig {
                sample: true,
                rep,
                ..cfg.clone()
            })
        })
        .collect();
    let mut r = aggregate(&reference, &runs);
    r.wall_time_ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(r)
}

/// Runs every registered scenario in order.
pub fn run_all(cfg: &RunConfig, reps: usize) -> Result<Vec<ScenarioReport>> {
    if cfg.topology.is_some() {
        return Err(Error::Config("--topology only applies to scenario `custom`".into()));
    }
    SCENARIOS
        .iter()
        .map(|(n, _, _)| run_scenario(n, cfg, reps))
        .collect()
}

/// Deterministic JSON document for a set of reports.
pub fn reports_json(reports: &[ScenarioReport]) -> String {
    let all_pass = reports.iter().all(|r| r.passed());
    let doc = serde_json::json!({
        "all_pass": all_pass,
        "reports": reports,
    });
    serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n"
}

/// Sampled repetitions against the reference run: numeric checks by mean within 5σ,
/// other checks by agreement count, and outcome frequencies by Born expectation.
fn aggregate(reference: &ScenarioReport, runs: &[ScenarioReport]) -> ScenarioReport {
    let k = runs.len();
    let mut out = ScenarioReport::new(&reference.scenario, reference.seed);
    out.parameters = reference.parameters.clone();
    out.param("sample", true);
    out.param("reps", k);
    for (i, check) in reference.checks.iter().enumerate() {
        let values: Vec<&Check> = runs
            .iter()
            .filter_map(|r| r.checks.get(i).filter(|c| c.name == check.name))
            .collect();
        let name = format!("{} (over {k} reps)", check.name);
        let nums: Option<Vec<f64>> = values.iter().map(|c| c.actual.as_f64()).collect();
        match (check.actual.as_f64(), nums) {
            (Some(want), Some(xs)) if xs.len() == k => {
                let mean = xs.iter().sum::<f64>() / k as f64;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k as f64 - 1.0);
                let bound = (5.0 * (var / k as f64).sqrt()).max(check.tolerance.unwrap_or(0.0)).max(1e-9);
                out.approx(&name, want, mean, bound, check.origin);
            }
            _ => {
                let agree = values.iter().filter(|c| c.actual == check.actual).count();
                out.equal(&name, k, agree, check.origin);
            }
        }
    }
    // Per event and outcome: summed probabilities, summed p(1 - p), observed counts.
    type Tally = (Vec<f64>, Vec<f64>, Vec<f64>);
    let mut tallies: BTreeMap<&str, Tally> = BTreeMap::new();
    for r in runs {
        for o in &r.observations {
            let n = o.probabilities.len();
            let total: f64 = o.probabilities.iter().sum();
            let (mean, var, count) = tallies
                .entry(o.event.as_str())
                .or_insert_with(|| (vec![0.0; n], vec![0.0; n], vec![0.0; n]));
            if mean.len() != n {
                continue;
            }
            for (j, p) in o.probabilities.iter().enumerate() {
                let p = p / total;
                mean[j] += p;
                var[j] += p * (1.0 - p);
            }
            count[o.outcome] += 1.0;
        }
    }
    let mut worst = 0.0f64;
    for (mean, var, count) in tallies.values() {
        for j in 0..mean.len() {
            let dev = (count[j] - mean[j]).abs();
            let z = if var[j] > 0.0 {
                dev / var[j].sqrt()
            } else if dev > 1e-9 {
                f64::INFINITY
            } else {
                0.0
            };
            worst = worst.max(z);
        }
    }
    out.param("sampled measurement events", tallies.len());
    out.less(
        "outcome frequencies within 5 sigma of Born expectation (max z)",
        5.0,
        worst,
        Origin::Exact,
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_scenario_is_config_error() {
        let cfg = RunConfig::default();
        assert!(matches!(run_scenario("nope", &cfg, 1), Err(Error::Config(_))));
        assert!(matches!(run_scenario("custom", &cfg, 1), Err(Error::Config(_))));
    }

    #[test]
    fn names_are_unique() {
        let names = scenario_names();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }
}
