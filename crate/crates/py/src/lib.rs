//! Python bindings: scenario runs with JSON reports, plus a few direct entry points.
//! Complex amplitudes cross the boundary as `(re, im)` pairs.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use qnetsup::entmetrics::{negativity as lib_negativity, Bipartition};
use qnetsup::network::topology::TopologySpec;
use qnetsup::scenarios::{self, Codewords, RunConfig};
use qnetsup::{DensityState, PureState, Register, Sample, Scripted};

fn err(e: qnetsup::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn complex(v: &[(f64, f64)]) -> Vec<Complex64> {
    v.iter().map(|&(re, im)| Complex64::new(re, im)).collect()
}

fn pairs(v: &[Complex64]) -> Vec<(f64, f64)> {
    v.iter().map(|z| (z.re, z.im)).collect()
}

/// Names accepted by `run`.
#[pyfunction]
fn scenario_names() -> Vec<String> {
    scenarios::scenario_names().into_iter().map(String::from).collect()
}

/// Runs one scenario (or `"all"`) and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (name, seed=0, sample=false, reps=1, draws=20, destinations=3, codewords=None, topology=None))]
#[allow(clippy::too_many_arguments)]
fn run(
    name: &str,
    seed: u64,
    sample: bool,
    reps: usize,
    draws: usize,
    destinations: usize,
    codewords: Option<&str>,
    topology: Option<&str>,
) -> PyResult<String> {
    if reps == 0 {
        return Err(PyValueError::new_err("reps must be positive"));
    }
    let cfg = RunConfig {
        seed,
        sample: sample || reps > 1,
        draws,
        destinations,
        codewords: codewords.map(Codewords::parse).transpose().map_err(err)?.unwrap_or_else(Codewords::repetition),
        topology: topology.map(TopologySpec::from_json).transpose().map_err(err)?,
        rep: 0,
    };
    let reports = if name == "all" {
        scenarios::run_all(&cfg, reps).map_err(err)?
    } else {
        vec![scenarios::run_scenario(name, &cfg, reps).map_err(err)?]
    };
    Ok(scenarios::reports_json(&reports))
}

/// Negativity of a pure state across `side_a` versus the remaining registers.
#[pyfunction]
fn negativity(amplitudes: Vec<(f64, f64)>, dims: Vec<usize>, side_a: Vec<usize>) -> PyResult<f64> {
    let labels: Vec<String> = (0..dims.len()).map(|k| format!("r{k}")).collect();
    let regs = labels.iter().zip(&dims).map(|(l, &d)| Register::new(l.clone(), d)).collect();
    let psi = PureState::from_unnormalized(regs, complex(&amplitudes)).map_err(err)?;
    let a: Vec<&str> = side_a.iter().filter_map(|&k| labels.get(k).map(String::as_str)).collect();
    let b: Vec<&str> = (0..dims.len()).filter(|k| !side_a.contains(k)).map(|k| labels[k].as_str()).collect();
    let cut = Bipartition::new(&a, &b).map_err(err)?;
    lib_negativity(&DensityState::from_pure(&psi), &cut).map_err(err)
}

/// Final amplitudes of the four-party GHZ superposition protocol on `1.sys`..`4.sys`.
/// Outcomes are sampled from `seed` when given, otherwise the most likely ones are taken.
#[pyfunction]
#[pyo3(signature = (alphas, seed=None))]
fn ghz_superposition(alphas: Vec<(f64, f64)>, seed: Option<u64>) -> PyResult<Vec<(f64, f64)>> {
    let a = complex(&alphas);
    let out = match seed {
        Some(s) => scenarios::ghz_superposition_pipeline(&a, &mut Sample::new(s)),
        None => scenarios::ghz_superposition_pipeline(&a, &mut Scripted::default()),
    }
    .map_err(err)?;
    let s = out.detached.permuted(&["1.sys", "2.sys", "3.sys", "4.sys"]).map_err(err)?;
    Ok(pairs(s.amplitudes()))
}

/// Trace distance between the two decompositions of the nonlinearity witness.
#[pyfunction]
fn nonlinearity_trace_distance() -> PyResult<f64> {
    Ok(qnetsup::ctrltask::demonstrate_measurement_nonlinearity().map_err(err)?.trace_distance)
}

#[pymodule]
fn qnetsup_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(scenario_names, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(negativity, m)?)?;
    m.add_function(wrap_pyfunction!(ghz_superposition, m)?)?;
    m.add_function(wrap_pyfunction!(nonlinearity_trace_distance, m)?)?;
    Ok(())
}
