//! Python bindings for `bvm-core`.

use nalgebra::{DMatrix, DVector};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bvm_core::harness::{self, ExperimentConfig, ResultRow};
use bvm_core::inference::{self, Density, Sample};
use bvm_core::metrics;
use bvm_core::{Covariate, GramAccumulator};

create_exception!(bvm, BvmError, PyException);

fn py_err(e: bvm_core::Error) -> PyErr {
    BvmError::new_err(e.to_string())
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for bvm_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Seeded ChaCha8 stream.
#[pyclass(name = "RandomSource")]
struct PyRandomSource(bvm_core::RandomSource);

#[pymethods]
impl PyRandomSource {
    #[new]
    #[pyo3(signature = (seed, stream_id = 0))]
    fn new(seed: u64, stream_id: u64) -> Self {
        Self(bvm_core::RandomSource::new(seed, stream_id))
    }

    /// Stream for replicate `replicate` of a run seeded with `seed`.
    #[staticmethod]
    fn for_replicate(seed: u64, replicate: u64) -> Self {
        Self(bvm_core::RandomSource::for_replicate(seed, replicate))
    }

    fn substream(&self, salt: u64) -> Self {
        Self(self.0.substream(salt))
    }

    fn uniform(&mut self) -> f64 {
        self.0.uniform()
    }

    #[pyo3(signature = (mean = 0.0, sd = 1.0))]
    fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        self.0.normal(mean, sd)
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        self.0.bernoulli(p)
    }

    fn poisson(&mut self, rate: f64) -> f64 {
        self.0.poisson(rate)
    }
}

/// Multivariate normal with an SPD covariance.
#[pyclass(name = "Gaussian")]
struct PyGaussian(inference::GaussianDistribution);

fn to_matrix(rows: &[Vec<f64>], cols: usize) -> PyResult<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err(BvmError::new_err(format!("every row must have {cols} entries")));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[pymethods]
impl PyGaussian {
    #[new]
    fn new(mean: Vec<f64>, covariance: Vec<Vec<f64>>) -> PyResult<Self> {
        let cov = to_matrix(&covariance, mean.len())?;
        Ok(Self(inference::GaussianDistribution::new(DVector::from_vec(mean), cov).py()?))
    }

    #[staticmethod]
    fn isotropic(mean: Vec<f64>, variance: f64) -> PyResult<Self> {
        Ok(Self(inference::GaussianDistribution::isotropic(DVector::from_vec(mean), variance).py()?))
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.0.mean().iter().copied().collect()
    }

    #[getter]
    fn covariance(&self) -> Vec<Vec<f64>> {
        from_matrix(self.0.covariance())
    }

    fn log_density(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.0.dim() {
            return Err(py_err(bvm_core::Error::Dimension { expected: self.0.dim(), got: x.len() }));
        }
        Ok(self.0.log_density(&x))
    }

    fn sample(&self, rng: &mut PyRandomSource) -> Vec<f64> {
        let mut x = vec![0.0; self.0.dim()];
        self.0.sample_into(&mut rng.0, &mut x);
        x
    }

    /// Distribution of `w·θ`.
    fn linear_functional(&self, weights: Vec<f64>) -> PyResult<PyUnivariate> {
        Ok(PyUnivariate(self.0.linear_functional(&weights).py()?))
    }

    fn __repr__(&self) -> String {
        format!("Gaussian(mean={:?}, covariance={:?})", self.mean(), self.covariance())
    }
}

/// Scalar normal, Beta or Gamma distribution.
#[pyclass(name = "Univariate")]
struct PyUnivariate(inference::Univariate);

#[pymethods]
impl PyUnivariate {
    #[staticmethod]
    fn normal(mean: f64, sd: f64) -> PyResult<Self> {
        Ok(Self(inference::Univariate::normal(mean, sd).py()?))
    }

    #[staticmethod]
    fn beta(a: f64, b: f64) -> PyResult<Self> {
        Ok(Self(inference::Univariate::beta(a, b).py()?))
    }

    /// Gamma with the given shape and rate.
    #[staticmethod]
    fn gamma(shape: f64, rate: f64) -> PyResult<Self> {
        Ok(Self(inference::Univariate::gamma(shape, rate).py()?))
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn variance(&self) -> f64 {
        self.0.variance()
    }

    fn pdf(&self, x: f64) -> f64 {
        self.0.pdf(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    fn quantile(&self, prob: f64) -> PyResult<f64> {
        self.0.quantile(prob).py()
    }

    /// Equal-tailed credible interval.
    fn interval(&self, level: f64) -> PyResult<(f64, f64)> {
        inference::credible_interval(&self.0, level).py()
    }

    fn sample(&self, rng: &mut PyRandomSource) -> f64 {
        self.0.sample(&mut rng.0)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

fn accumulate(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> PyResult<GramAccumulator> {
    if xs.len() != ys.len() {
        return Err(BvmError::new_err(format!("{} covariates but {} outcomes", xs.len(), ys.len())));
    }
    let dim = xs.first().map_or(0, Vec::len);
    let mut acc = GramAccumulator::new(dim);
    for (x, y) in xs.into_iter().zip(ys) {
        acc.update(&Covariate::new(x).py()?, y).py()?;
    }
    Ok(acc)
}

/// `N(β̂, σ²(XᵀX)⁻¹)` from covariate rows and outcomes.
#[pyfunction]
fn representative_normal(xs: Vec<Vec<f64>>, ys: Vec<f64>, sigma2: f64) -> PyResult<PyGaussian> {
    let acc = accumulate(xs, ys)?;
    Ok(PyGaussian(inference::representative_normal(&acc, sigma2).py()?))
}

/// Conjugate posterior of a linear-Gaussian model with known noise variance.
#[pyfunction]
fn gaussian_posterior(prior: &PyGaussian, xs: Vec<Vec<f64>>, ys: Vec<f64>, sigma2: f64) -> PyResult<PyGaussian> {
    let acc = accumulate(xs, ys)?;
    Ok(PyGaussian(inference::gaussian_conjugate_posterior(&prior.0, &acc, sigma2).py()?))
}

/// Monte-Carlo TV distance; returns `(estimate, standard_error)`.
#[pyfunction]
fn tv_monte_carlo(p: &PyGaussian, q: &PyGaussian, samples: usize, rng: &mut PyRandomSource) -> PyResult<(f64, f64)> {
    let est = metrics::tv_monte_carlo(&p.0, &q.0, samples, &mut rng.0).py()?;
    Ok((est.value, est.std_error))
}

/// Exact TV distance between two scalar normals.
#[pyfunction]
fn tv_gaussian_1d(mu1: f64, sd1: f64, mu2: f64, sd2: f64) -> f64 {
    metrics::tv_gaussian_oracle_1d(mu1, sd1, mu2, sd2)
}

/// Every validation problem in a TOML config; empty when it is runnable.
#[pyfunction]
fn validate_config(toml: &str) -> PyResult<Vec<String>> {
    let cfg = ExperimentConfig::from_toml_str(toml).py()?;
    match harness::validate(&cfg) {
        Ok(()) => Ok(Vec::new()),
        Err(bvm_core::Error::Validation(problems)) => Ok(problems),
        Err(e) => Err(py_err(e)),
    }
}

fn row_tuple(r: &ResultRow) -> (usize, usize, f64, f64, f64, f64, Option<bool>, bool) {
    (r.replicate, r.n, r.tv, r.tv_se, r.lambda_min, r.lambda_max, r.covered, r.excluded)
}

/// Run a TOML config in memory.
///
/// Returns a dict with `rows` (result-table tuples) and `summary` (one dict
/// per checkpoint). Nothing is written to disk.
#[pyfunction]
#[pyo3(signature = (toml, *, seed = None, replicates = None, tv_samples = None, workers = None))]
fn run_config<'py>(
    py: Python<'py>,
    toml: &str,
    seed: Option<u64>,
    replicates: Option<usize>,
    tv_samples: Option<usize>,
    workers: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = ExperimentConfig::from_toml_str(toml).py()?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = replicates {
        cfg.replicates = r;
    }
    if let Some(t) = tv_samples {
        cfg.tv_samples = t;
    }
    let result = py.detach(|| harness::execute(&cfg, workers)).py()?;

    let out = PyDict::new(py);
    out.set_item("rows", result.rows.iter().map(row_tuple).collect::<Vec<_>>())?;
    let summary = result
        .summary
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("n", s.n)?;
            d.set_item("replicates", s.replicates)?;
            d.set_item("excluded", s.excluded)?;
            d.set_item("mean_tv", s.mean_tv)?;
            d.set_item("se", s.se)?;
            d.set_item("coverage", s.coverage)?;
            d.set_item("coverage_se", s.coverage_se)?;
            d.set_item("gate_failures", s.gate_failures)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    out.set_item("summary", summary)?;
    Ok(out)
}

/// Merge result CSVs into the long-format comparison table, as CSV text.
#[pyfunction]
fn summarize(paths: Vec<String>) -> PyResult<String> {
    let rows = harness::summarize(&paths).py()?;
    let mut buf = Vec::new();
    harness::write_comparison_csv(&rows, &mut buf).py()?;
    String::from_utf8(buf).map_err(|e| BvmError::new_err(e.to_string()))
}

#[pymodule]
fn bvm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BvmError", m.py().get_type::<BvmError>())?;
    m.add("RESULT_HEADER", harness::RESULT_HEADER)?;
    m.add_class::<PyRandomSource>()?;
    m.add_class::<PyGaussian>()?;
    m.add_class::<PyUnivariate>()?;
    m.add_function(wrap_pyfunction!(representative_normal, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(tv_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(tv_gaussian_1d, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    Ok(())
}
