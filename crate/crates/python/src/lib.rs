//! Python bindings: weight models, cylinders, occupancy, both constructions,
//! cylinder sums and the verification suites.

use digitrange::codec::{self, encode, Layout};
use digitrange::linear::{build_schedule, count_blocks, BlockSchedule};
use digitrange::occupancy::{expected_distinct, karlin_constant, monte_carlo_law};
use digitrange::rng::{substream, DEFAULT_SEED};
use digitrange::sublinear::{build_sublinear_schedule, ProfileSpec, SublinearSchedule};
use digitrange::tilt::{self, DigitLaw};
use digitrange::verify::{run_suite, Suite};
use digitrange::{DigitWord, ModelSpec, Rate, WeightModel};
use num_rational::BigRational;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for digitrange::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

/// Plain Python containers for any serializable value.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn word(digits: Vec<u64>) -> PyResult<DigitWord> {
    DigitWord::new(digits).py_err()
}

fn rate(theta: &str) -> PyResult<Rate> {
    theta.parse::<Rate>().py_err()
}

#[pyclass(name = "WeightModel", frozen)]
struct PyWeightModel {
    inner: WeightModel,
}

#[pymethods]
impl PyWeightModel {
    #[staticmethod]
    fn luroth() -> Self {
        PyWeightModel { inner: WeightModel::luroth() }
    }

    #[staticmethod]
    fn power(rho: f64) -> PyResult<Self> {
        Ok(PyWeightModel { inner: WeightModel::power(rho).py_err()? })
    }

    #[staticmethod]
    fn power_log(rho: f64, gamma: f64) -> PyResult<Self> {
        Ok(PyWeightModel { inner: WeightModel::power_log(rho, gamma).py_err()? })
    }

    #[staticmethod]
    fn explicit_prefix(prefix: Vec<f64>, rho: f64) -> PyResult<Self> {
        Ok(PyWeightModel { inner: WeightModel::explicit_prefix(prefix, rho).py_err()? })
    }

    /// Model from its JSON specification.
    #[staticmethod]
    fn from_json(spec: &str) -> PyResult<Self> {
        let spec: ModelSpec = serde_json::from_str(spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyWeightModel { inner: spec.build().py_err()? })
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho()
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    fn spec<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, self.inner.spec())
    }

    fn p(&self, k: u64) -> PyResult<f64> {
        self.inner.weight(k).py_err()
    }

    fn tail_sum(&self, m: u64) -> PyResult<f64> {
        self.inner.tail_sum(m).py_err()
    }

    fn tilted_tail_sum(&self, m: u64, s: f64) -> PyResult<f64> {
        self.inner.tilted_tail_sum(m, s).py_err()
    }

    fn left_endpoint(&self, k: u64) -> PyResult<f64> {
        if k == 0 {
            return Err(PyValueError::new_err("digits start at 1"));
        }
        Ok(self.inner.left_endpoint(k))
    }

    fn solve_s_k(&self, k: u64) -> PyResult<f64> {
        self.inner.solve_s_k(k).py_err()
    }

    fn sample_digit(&self, u: f64) -> PyResult<u64> {
        self.inner.sample_digit(u).py_err()
    }

    #[pyo3(signature = (epsilon, scan_limit = 1_000_000))]
    fn potter_scan<'py>(&self, py: Python<'py>, epsilon: f64, scan_limit: u64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.potter_scan(epsilon, scan_limit).py_err()?)
    }

    fn __repr__(&self) -> String {
        format!("WeightModel({})", self.inner)
    }
}

/// Cylinder of `digits`: `{digits, log_diam, left}` with `left` as `"p/q"` when exact.
#[pyfunction]
fn cylinder<'py>(py: Python<'py>, model: &PyWeightModel, digits: Vec<u64>) -> PyResult<Bound<'py, PyAny>> {
    let c = codec::cylinder(&model.inner, &word(digits)?).py_err()?;
    to_py(py, &c.to_record())
}

/// First `n` canonical digits of the rational `x` (given as `"p/q"`).
#[pyfunction]
fn encode_rational(model: &PyWeightModel, x: &str, n: usize) -> PyResult<Vec<u64>> {
    let x: BigRational = x.parse().map_err(|_| PyValueError::new_err(format!("invalid rational '{x}'")))?;
    Ok(encode(&model.inner, &x, n, Layout::Canonical).py_err()?.into_inner())
}

#[pyfunction]
fn encode_float(model: &PyWeightModel, x: f64, n: usize) -> PyResult<Vec<u64>> {
    Ok(codec::encode_f64(&model.inner, x, n).py_err()?.into_inner())
}

/// Distinct counts `D_1, …, D_n` of a digit sequence.
#[pyfunction]
fn distinct_profile(digits: Vec<u64>) -> PyResult<Vec<u64>> {
    Ok(word(digits)?.distinct_profile())
}

#[pyfunction]
fn expected_distinct_count(model: &PyWeightModel, n: u64) -> PyResult<f64> {
    expected_distinct(&model.inner, n).py_err()
}

#[pyfunction(name = "karlin_constant")]
fn karlin(rho: f64, c: f64) -> PyResult<f64> {
    karlin_constant(rho, c).py_err()
}

#[pyfunction]
#[pyo3(signature = (model, n, trials, seed = DEFAULT_SEED))]
fn simulate<'py>(py: Python<'py>, model: &PyWeightModel, n: u64, trials: u64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let report = py.detach(|| monte_carlo_law(&model.inner, n, trials, seed)).py_err()?;
    to_py(py, &report)
}

#[pyfunction]
fn block_count<'py>(py: Python<'py>, n: u64, length: u64, theta: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &count_blocks(n, length, rate(theta)?).py_err()?)
}

#[pyclass(name = "LinearSchedule", frozen)]
struct PyLinearSchedule {
    inner: BlockSchedule,
}

#[pymethods]
impl PyLinearSchedule {
    /// Dyadic schedule with rate `theta` (decimal or `"p/q"`) and `depth` levels.
    #[new]
    #[pyo3(signature = (theta, depth, k1 = 1))]
    fn new(theta: &str, depth: usize, k1: u64) -> PyResult<Self> {
        Ok(PyLinearSchedule { inner: build_schedule(rate(theta)?, k1, depth).py_err()? })
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn total_len(&self, depth: usize) -> u64 {
        self.inner.total_len(depth)
    }

    #[pyo3(signature = (seed = DEFAULT_SEED, index = 0, depth = None))]
    fn sample_point(&self, seed: u64, index: u64, depth: Option<usize>) -> PyResult<Vec<u64>> {
        let depth = depth.unwrap_or(self.inner.depth());
        Ok(self.inner.sample_point(depth, &mut substream(seed, index)).py_err()?.into_inner())
    }

    fn mu_log_mass(&self, digits: Vec<u64>) -> PyResult<f64> {
        self.inner.mu_log_mass(&word(digits)?).py_err()
    }

    fn local_dimension(&self, model: &PyWeightModel, digits: Vec<u64>) -> PyResult<f64> {
        self.inner.local_dimension(&model.inner, &word(digits)?).py_err()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }
}

#[pyclass(name = "SublinearSchedule", frozen)]
struct PySublinearSchedule {
    inner: SublinearSchedule,
}

#[pymethods]
impl PySublinearSchedule {
    #[new]
    #[pyo3(signature = (t, horizon, profile = "sqrt", beta = None, c = None, model = None))]
    fn new(t: f64, horizon: u64, profile: &str, beta: Option<f64>, c: Option<f64>, model: Option<&PyWeightModel>) -> PyResult<Self> {
        let spec = ProfileSpec { kind: profile.to_string(), beta, c, table: None, horizon };
        let model = model.map_or_else(WeightModel::luroth, |m| m.inner.clone());
        let inner = build_sublinear_schedule(spec.build().py_err()?, t, model).py_err()?;
        Ok(PySublinearSchedule { inner })
    }

    #[getter]
    fn k_star(&self) -> u64 {
        self.inner.k_star
    }

    #[getter]
    fn horizon(&self) -> u64 {
        self.inner.horizon()
    }

    fn f(&self, n: u64) -> u64 {
        self.inner.profile.f(n)
    }

    fn k_n(&self, n: u64) -> u64 {
        self.inner.k_n(n)
    }

    fn s_n(&self, n: u64) -> f64 {
        self.inner.s_n(n)
    }

    #[pyo3(signature = (seed = DEFAULT_SEED, index = 0, n_max = None))]
    fn sample_point(&self, seed: u64, index: u64, n_max: Option<u64>) -> PyResult<Vec<u64>> {
        let n = n_max.unwrap_or(self.inner.horizon());
        Ok(self.inner.sample_point(n, &mut substream(seed, index)).py_err()?.into_inner())
    }

    fn ratio_trace<'py>(&self, py: Python<'py>, digits: Vec<u64>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.ratio_trace(&word(digits)?).py_err()?)
    }
}

/// A weight model or a list of finite weights.
fn law(obj: &Bound<'_, PyAny>) -> PyResult<DigitLaw> {
    if let Ok(m) = obj.extract::<PyRef<'_, PyWeightModel>>() {
        return Ok(DigitLaw::Model(m.inner.clone()));
    }
    let weights: Vec<f64> = obj.extract()?;
    DigitLaw::finite(weights).py_err()
}

#[pyfunction]
#[pyo3(signature = (law_or_weights, n, s, theta, cap = 6))]
fn cylinder_sum_exact<'py>(
    py: Python<'py>,
    law_or_weights: &Bound<'py, PyAny>,
    n: u64,
    s: f64,
    theta: &str,
    cap: u64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &tilt::cylinder_sum_exact(&law(law_or_weights)?, n, s, rate(theta)?, cap).py_err()?)
}

#[pyfunction]
#[pyo3(signature = (law_or_weights, n, s, theta, trials, seed = DEFAULT_SEED))]
fn cylinder_sum_mc<'py>(
    py: Python<'py>,
    law_or_weights: &Bound<'py, PyAny>,
    n: u64,
    s: f64,
    theta: &str,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let law = law(law_or_weights)?;
    let theta = rate(theta)?;
    let rec = py.detach(|| tilt::cylinder_sum_mc(&law, n, s, theta, trials, seed)).py_err()?;
    to_py(py, &rec)
}

#[pyfunction]
fn change_of_measure_check<'py>(
    py: Python<'py>,
    law_or_weights: &Bound<'py, PyAny>,
    n: u64,
    s: f64,
    theta: &str,
    cap: u64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &tilt::change_of_measure_check(&law(law_or_weights)?, n, s, rate(theta)?, cap).py_err()?)
}

#[pyfunction]
#[pyo3(signature = (law_or_weights, n, s, theta, m_s = 1, trials = 100_000, seed = DEFAULT_SEED))]
#[allow(clippy::too_many_arguments)]
fn bound_chain<'py>(
    py: Python<'py>,
    law_or_weights: &Bound<'py, PyAny>,
    n: u64,
    s: f64,
    theta: &str,
    m_s: u64,
    trials: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let law = law(law_or_weights)?;
    let theta = rate(theta)?;
    let chain = py.detach(|| tilt::bound_chain(&law, n, s, theta, m_s, trials, seed)).py_err()?;
    to_py(py, &chain)
}

#[pyfunction]
#[pyo3(signature = (n_max = 6, value_max = 6))]
fn distinct_forces_large_check<'py>(py: Python<'py>, n_max: usize, value_max: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &tilt::distinct_forces_large_check(n_max, value_max))
}

#[pyfunction]
#[pyo3(signature = (suite = "quick", seed = DEFAULT_SEED, fail_inject = false))]
fn verify<'py>(py: Python<'py>, suite: &str, seed: u64, fail_inject: bool) -> PyResult<Bound<'py, PyAny>> {
    let suite: Suite = suite.parse().py_err()?;
    let report = py.detach(|| run_suite(suite, seed, fail_inject));
    to_py(py, &report)
}

#[pymodule]
fn pydigitrange(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWeightModel>()?;
    m.add_class::<PyLinearSchedule>()?;
    m.add_class::<PySublinearSchedule>()?;
    m.add_function(wrap_pyfunction!(cylinder, m)?)?;
    m.add_function(wrap_pyfunction!(encode_rational, m)?)?;
    m.add_function(wrap_pyfunction!(encode_float, m)?)?;
    m.add_function(wrap_pyfunction!(distinct_profile, m)?)?;
    m.add_function(wrap_pyfunction!(expected_distinct_count, m)?)?;
    m.add_function(wrap_pyfunction!(karlin, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(block_count, m)?)?;
    m.add_function(wrap_pyfunction!(cylinder_sum_exact, m)?)?;
    m.add_function(wrap_pyfunction!(cylinder_sum_mc, m)?)?;
    m.add_function(wrap_pyfunction!(change_of_measure_check, m)?)?;
    m.add_function(wrap_pyfunction!(bound_chain, m)?)?;
    m.add_function(wrap_pyfunction!(distinct_forces_large_check, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("DEFAULT_SEED", DEFAULT_SEED)?;
    Ok(())
}
