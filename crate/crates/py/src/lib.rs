//! Python bindings: `import anneal_cert`.

use engine::convergence::{certify as certify_spec, DeltaMode, Infeasibility};
use engine::guarantees;
use engine::registry;
use engine::rng::stream_rng;
use engine::sampler::{default_schedule, run_schedule, Objective, RunOptions, Schedule};
use engine::verify::{is_approx_optimizer as classify, run_suite, Suite, SuiteOptions};
use engine::{Error, GuaranteeSpec, Proposal, TargetSpec, DEFAULT_STEP_BUDGET};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(
    anneal_cert,
    InfeasibleError,
    PyException,
    "Required steps exceed the budget."
);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Infeasible(inf) => infeasible(&inf),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn infeasible(inf: &Infeasibility) -> PyErr {
    InfeasibleError::new_err((
        format!(
            "infeasible, k = {} final-stage steps needed at J = {}, delta = {}; budget is {}",
            inf.required_k, inf.j, inf.delta, inf.budget
        ),
        inf.required_k,
        inf.j,
        inf.delta,
    ))
}

/// Lower bound on the probability that a draw from pi_J is an
/// (epsilon, alpha) approximate global optimizer.
#[pyfunction]
#[pyo3(signature = (epsilon, alpha, j, delta))]
fn sigma(epsilon: f64, alpha: f64, j: f64, delta: f64) -> PyResult<f64> {
    guarantees::sigma_for(epsilon, alpha, &TargetSpec::new(j, delta).map_err(to_py)?).map_err(to_py)
}

/// Smallest integer J reaching `sigma_target` at a fixed delta.
#[pyfunction]
fn min_j(epsilon: f64, alpha: f64, sigma_target: f64, delta: f64) -> PyResult<f64> {
    let spec = GuaranteeSpec::new(epsilon, alpha, sigma_target).map_err(to_py)?;
    guarantees::min_j(&spec, delta).map_err(to_py)
}

/// Certificate as a dict with keys epsilon, alpha, sigma_target, J, delta,
/// sigma, k, tv_bound, confidence. `delta` may be a number, "optimize" or
/// "min-steps". Raises InfeasibleError when k exceeds `budget`.
#[pyfunction]
#[pyo3(signature = (epsilon, alpha, sigma_target, tv, delta, proposal="uniform", budget=None))]
#[allow(clippy::too_many_arguments)]
fn certify<'py>(
    py: Python<'py>,
    epsilon: f64,
    alpha: f64,
    sigma_target: f64,
    tv: f64,
    delta: &Bound<'py, PyAny>,
    proposal: &str,
    budget: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = if let Ok(d) = delta.extract::<f64>() {
        DeltaMode::Fixed(d)
    } else {
        match delta.extract::<String>()?.as_str() {
            "optimize" => DeltaMode::Optimize,
            "min-steps" => DeltaMode::MinSteps,
            other => {
                return Err(PyValueError::new_err(format!(
                    "delta must be a number, 'optimize' or 'min-steps', got {other}"
                )))
            }
        }
    };
    let proposal: Proposal = proposal.parse().map_err(to_py)?;
    let spec = GuaranteeSpec::new(epsilon, alpha, sigma_target).map_err(to_py)?;
    let cert = certify_spec(
        &spec,
        tv,
        proposal.uniform_weight(),
        mode,
        budget.unwrap_or(DEFAULT_STEP_BUDGET),
    )
    .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("epsilon", epsilon)?;
    d.set_item("alpha", alpha)?;
    d.set_item("sigma_target", sigma_target)?;
    d.set_item("J", cert.target.j())?;
    d.set_item("delta", cert.target.delta())?;
    d.set_item("sigma", cert.sigma)?;
    d.set_item("k", cert.k)?;
    d.set_item("tv_bound", cert.tv_bound)?;
    d.set_item("confidence", cert.confidence)?;
    Ok(d)
}

/// Runs the chain on a registry function from the domain center. Returns a
/// dict with best/final point and value, and the trace as a list of
/// (step, J, theta, value) tuples when `trace_every > 0`.
#[pyfunction]
#[pyo3(signature = (function, j, delta, steps, seed=0, proposal="uniform", dim=None, trace_every=0, ladder=true))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    function: &str,
    j: f64,
    delta: f64,
    steps: u64,
    seed: u64,
    proposal: &str,
    dim: Option<usize>,
    trace_every: u64,
    ladder: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let f = registry::lookup(function, dim).map_err(to_py)?;
    let noisy_fn = f.noisy();
    let objective = if function.starts_with("noisy-") {
        Objective::ExpectedValue(&*noisy_fn)
    } else {
        Objective::Deterministic(&*f.criterion)
    };
    let proposal: Proposal = proposal.parse().map_err(to_py)?;
    let target = TargetSpec::new(j, delta).map_err(to_py)?;
    let schedule = if ladder {
        default_schedule(j, steps)
    } else {
        Schedule::single(j, steps)
    }
    .map_err(to_py)?;
    let out = py
        .detach(|| {
            run_schedule(
                &f.domain,
                f.domain.center(),
                &schedule,
                &target,
                &proposal,
                objective,
                RunOptions { trace_every },
                &mut stream_rng(seed, 0),
            )
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("best_theta", out.best_theta.coords().to_vec())?;
    d.set_item("best_value", out.best_value)?;
    d.set_item("final_theta", out.final_state.theta.coords().to_vec())?;
    d.set_item("final_value", out.final_state.value())?;
    d.set_item("accepted", out.final_state.accepted)?;
    d.set_item("steps", out.final_state.step_index)?;
    let trace: Vec<(u64, f64, Vec<f64>, f64)> = out
        .trace
        .into_iter()
        .map(|r| (r.step, r.j, r.theta, r.value))
        .collect();
    d.set_item("trace", trace)?;
    Ok(d)
}

/// Monte Carlo verdict ("yes", "no" or "borderline") on whether `theta` is an
/// (epsilon, alpha) approximate global optimizer of a registry function.
#[pyfunction]
#[pyo3(signature = (function, theta, epsilon, alpha, n_mc=10_000, seed=0, dim=None))]
fn is_approx_optimizer(
    function: &str,
    theta: Vec<f64>,
    epsilon: f64,
    alpha: f64,
    n_mc: usize,
    seed: u64,
    dim: Option<usize>,
) -> PyResult<(String, f64, f64)> {
    let f = registry::lookup(function, dim).map_err(to_py)?;
    let v = classify(
        &f.domain,
        &*f.criterion,
        &theta,
        epsilon,
        alpha,
        n_mc,
        &mut stream_rng(seed, 0),
    )
    .map_err(to_py)?;
    let kind = serde_json::to_value(v.kind).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((
        kind.as_str().unwrap_or_default().to_string(),
        v.exceedance,
        v.std_error,
    ))
}

/// Runs a verification suite and returns the JSON report as a string.
#[pyfunction]
#[pyo3(signature = (suite="bijection", seed=0))]
fn verify(py: Python<'_>, suite: &str, seed: u64) -> PyResult<String> {
    let suite: Suite = suite.parse().map_err(to_py)?;
    let report = py.detach(|| run_suite(suite, &SuiteOptions::default(), seed));
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Base names of the registry functions.
#[pyfunction]
fn functions() -> Vec<&'static str> {
    registry::NAMES.to_vec()
}

#[pymodule]
fn anneal_cert(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_function(wrap_pyfunction!(sigma, m)?)?;
    m.add_function(wrap_pyfunction!(min_j, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(is_approx_optimizer, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(functions, m)?)?;
    Ok(())
}
