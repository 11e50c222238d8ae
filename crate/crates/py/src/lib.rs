//! Python bindings for `algomarket`.
//!
//! Bit series cross the boundary as `"0110"` strings; tuple distributions
//! are wrapped in [`PyTupleDistribution`].

use std::collections::BTreeMap;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use algomarket::baselines::{self, GbmParams};
use algomarket::distributions::{bits_to_string, parse_bits};
use algomarket::tm::{self, EnumerationJob, Mode};
use algomarket::{ca, market, Error, Support, TupleDistribution};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::MissingArtifact(_) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for algomarket::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(
    name = "TupleDistribution",
    module = "algomarket_py",
    frozen,
    eq,
    from_py_object
)]
#[derive(Clone, PartialEq)]
pub struct PyTupleDistribution {
    inner: TupleDistribution,
}

impl From<TupleDistribution> for PyTupleDistribution {
    fn from(inner: TupleDistribution) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyTupleDistribution {
    #[new]
    #[pyo3(signature = (tuple_length, counts, source_label = "python"))]
    fn new(
        tuple_length: usize,
        counts: BTreeMap<String, u64>,
        source_label: &str,
    ) -> PyResult<Self> {
        Ok(
            TupleDistribution::from_counts(tuple_length, counts, source_label)
                .py()?
                .into(),
        )
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn tuple_length(&self) -> usize {
        self.inner.tuple_length()
    }

    #[getter]
    fn total(&self) -> u64 {
        self.inner.total()
    }

    #[getter]
    fn source_label(&self) -> &str {
        self.inner.source_label()
    }

    fn counts(&self) -> BTreeMap<String, u64> {
        self.inner.counts().clone()
    }

    fn count(&self, tuple: &str) -> u64 {
        self.inner.count(tuple)
    }

    fn probability(&self, tuple: &str) -> Option<f64> {
        self.inner.probability(tuple)
    }

    /// `(tuple, probability)` pairs, most frequent first.
    fn ranked(&self) -> PyResult<Vec<(String, f64)>> {
        Ok(algomarket::ranked_view(&self.inner).py()?.entries)
    }

    fn complexity(&self, tuple: &str) -> PyResult<f64> {
        algomarket::complexity_estimate(&self.inner, tuple).py()
    }

    fn merged(&self, other: &PyTupleDistribution) -> PyResult<Self> {
        let mut inner = self.inner.clone();
        inner.merge(&other.inner).py()?;
        Ok(inner.into())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "TupleDistribution(tuple_length={}, total={}, source_label={:?})",
            self.inner.tuple_length(),
            self.inner.total(),
            self.inner.source_label()
        )
    }
}

fn wrap_all(map: BTreeMap<usize, TupleDistribution>) -> BTreeMap<usize, PyTupleDistribution> {
    map.into_iter().map(|(n, d)| (n, d.into())).collect()
}

#[pyfunction]
fn build_distribution(bits: &str, n: usize) -> PyResult<PyTupleDistribution> {
    let bits = parse_bits(bits).py()?;
    Ok(algomarket::build_distribution(&bits, n).py()?.into())
}

/// Returns `(rho, n_compared)`; `rho` is `None` when undefined.
#[pyfunction]
#[pyo3(signature = (a, b, support = "intersection"))]
fn spearman(
    a: &PyTupleDistribution,
    b: &PyTupleDistribution,
    support: &str,
) -> PyResult<(Option<f64>, usize)> {
    let support: Support = support.parse().py()?;
    let r = algomarket::spearman(&a.inner, &b.inner, support).py()?;
    Ok((r.rho, r.n_compared))
}

#[pyfunction]
fn complexity_estimate(dist: &PyTupleDistribution, tuple: &str) -> PyResult<f64> {
    algomarket::complexity_estimate(&dist.inner, tuple).py()
}

#[pyfunction]
fn round_to_quantum(x: f64, q: f64) -> f64 {
    market::round_to_quantum(x, q)
}

#[pyfunction]
#[pyo3(signature = (closes, quantum = market::DEFAULT_QUANTUM))]
fn encode_closes(closes: Vec<f64>, quantum: f64) -> String {
    bits_to_string(&market::encode_closes(&closes, quantum))
}

/// Reads a `date,close` CSV and returns its direction bits.
#[pyfunction]
#[pyo3(signature = (path, quantum = market::DEFAULT_QUANTUM))]
fn encode_csv(path: &str, quantum: f64) -> PyResult<String> {
    let prices = market::ingest_csv(path).py()?;
    Ok(bits_to_string(
        &market::encode_directions(&prices, quantum).py()?.bits,
    ))
}

/// The transition table of machine `index`, one entry per line.
#[pyfunction]
fn machine_from_index(index: u64, n_states: usize) -> PyResult<String> {
    Ok(tm::machine_from_index(index, n_states).py()?.to_string())
}

/// Returns `(halted, steps, output)`.
#[pyfunction]
fn run_machine(
    index: u64,
    n_states: usize,
    background: u8,
    step_bound: u64,
) -> PyResult<(bool, u64, String)> {
    let m = tm::machine_from_index(index, n_states).py()?;
    let r = tm::run_machine(&m, background, step_bound).py()?;
    Ok((r.halted, r.steps, bits_to_string(&r.output)))
}

/// Output distributions keyed by length. `mode` is `"exhaustive"` or
/// `"sample:COUNT[:seed=SEED]"`.
#[pyfunction]
#[pyo3(signature = (n_states, tuple_lengths, mode = "exhaustive", step_bound = None, force = false))]
fn enumerate_distribution(
    py: Python<'_>,
    n_states: usize,
    tuple_lengths: Vec<usize>,
    mode: &str,
    step_bound: Option<u64>,
    force: bool,
) -> PyResult<BTreeMap<usize, PyTupleDistribution>> {
    let mode: Mode = mode.parse().py()?;
    let mut job = EnumerationJob::exhaustive(n_states).py()?;
    job.mode = mode;
    job.force = force;
    if let Some(b) = step_bound {
        job.step_bound = b;
    }
    let map = py
        .detach(|| tm::enumerate_distribution(&job, &tuple_lengths))
        .py()?;
    Ok(wrap_all(map))
}

#[pyfunction]
#[pyo3(signature = (count, tuple_lengths, steps = ca::DEFAULT_STEPS, seed = 0))]
fn ca_sample_distribution(
    py: Python<'_>,
    count: usize,
    tuple_lengths: Vec<usize>,
    steps: usize,
    seed: u64,
) -> PyResult<BTreeMap<usize, PyTupleDistribution>> {
    let map = py
        .detach(|| ca::sample_distribution(count, steps, &tuple_lengths, seed))
        .py()?;
    Ok(wrap_all(map))
}

#[pyfunction]
#[pyo3(signature = (width, steps, seed = 0))]
fn rule90_price_series(width: usize, steps: usize, seed: u64) -> PyResult<Vec<i64>> {
    ca::rule90_price_series(width, steps, seed).py()
}

#[pyfunction]
fn random_direction_series(length: usize, seed: u64) -> PyResult<String> {
    Ok(bits_to_string(
        &baselines::random_direction_series(length, seed).py()?,
    ))
}

#[pyfunction]
#[pyo3(signature = (s0, sigma, mu, steps, seed = 0))]
fn gbm_series(s0: f64, sigma: f64, mu: f64, steps: usize, seed: u64) -> PyResult<Vec<f64>> {
    baselines::gbm_series(&GbmParams {
        s0,
        sigma,
        mu,
        steps,
        seed,
    })
    .py()
}

/// Returns `(mean, std, bins)` with bins as
/// `(center, observed, expected, excess)` tuples, every occupied bin
/// included.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn isolate_tail(
    changes: Vec<f64>,
    bin_width: f64,
) -> PyResult<(f64, f64, Vec<(f64, u64, f64, u64)>)> {
    let r = baselines::isolate_tail(&changes, bin_width).py()?;
    let bins = r
        .bins
        .iter()
        .map(|b| (b.center, b.observed, b.expected, b.excess))
        .collect();
    Ok((r.fitted_mean, r.fitted_std, bins))
}

#[pymodule]
fn algomarket_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", algomarket::VERSION)?;
    m.add_class::<PyTupleDistribution>()?;
    m.add_function(wrap_pyfunction!(build_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(complexity_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(round_to_quantum, m)?)?;
    m.add_function(wrap_pyfunction!(encode_closes, m)?)?;
    m.add_function(wrap_pyfunction!(encode_csv, m)?)?;
    m.add_function(wrap_pyfunction!(machine_from_index, m)?)?;
    m.add_function(wrap_pyfunction!(run_machine, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(ca_sample_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(rule90_price_series, m)?)?;
    m.add_function(wrap_pyfunction!(random_direction_series, m)?)?;
    m.add_function(wrap_pyfunction!(gbm_series, m)?)?;
    m.add_function(wrap_pyfunction!(isolate_tail, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_round_trip() {
        pyo3::append_to_inittab!(algomarket_py);
        Python::initialize();
        Python::attach(|py| {
            let m = py.import("algomarket_py").unwrap();
            let d = m
                .getattr("build_distribution")
                .unwrap()
                .call1(("0101011100", 2))
                .unwrap();
            let d: PyRef<'_, PyTupleDistribution> = d.extract().unwrap();
            assert_eq!(d.total(), 5);
            assert_eq!(d.count("01"), 3);
            let (rho, n): (Option<f64>, usize) = m
                .getattr("spearman")
                .unwrap()
                .call1((d.clone(), d.clone()))
                .unwrap()
                .extract()
                .unwrap();
            assert_eq!((rho, n), (Some(1.0), 3));
            let err = m.getattr("round_to_quantum").unwrap().call1(("x", 0.4));
            assert!(err.is_err());
            assert!(m
                .getattr("encode_csv")
                .unwrap()
                .call1(("/no/such.csv",))
                .unwrap_err()
                .is_instance_of::<PyIOError>(py));
        });
    }
}
