//! Python bindings for the gridcast forecasting, residual and market code.

use std::fmt::Display;
use std::path::PathBuf;

use chrono::{NaiveDate, NaiveDateTime};
use gridcast::data::{
    drift_benchmark_series, ingest_demand_csv, label_calendar, synth_demand, ColumnMap, FeatureConfig, SeasonTable,
    SynthParams,
};
use gridcast::eval::{compute_metrics, per_hour_online, per_hour_orchestrate, reserve_analysis, PipelineConfig};
use gridcast::market::{merit_order_dispatch, run_simulation, sensitivity_sweep, Offer, Perturbation, Scenario};
use gridcast::offline::{Algorithm, AlgorithmKind, Hyperparams};
use gridcast::online::{boxcox_inverse, boxcox_transform, OnlineAlgorithm, OnlineKind};
use gridcast::residuals::{Family, ResidualDistribution};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

fn value_error(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts any serializable value into plain Python objects through JSON.
fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(value_error)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse_date(s: &str) -> PyResult<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| value_error(format!("bad date `{s}`: {e}")))
}

fn parse_families(names: Option<Vec<String>>) -> PyResult<Vec<Family>> {
    match names {
        None => Ok(Family::ALL.to_vec()),
        Some(n) => n.iter().map(|s| s.parse::<Family>().map_err(value_error)).collect(),
    }
}

/// An hourly demand series in MWh.
#[pyclass(module = "gridcast_py", name = "DemandSeries")]
struct PySeries {
    inner: gridcast::data::DemandSeries,
}

#[pymethods]
impl PySeries {
    /// Builds a series from ISO timestamps and demand values.
    #[new]
    fn new(timestamps: Vec<String>, demand: Vec<f64>) -> PyResult<Self> {
        if timestamps.len() != demand.len() {
            return Err(value_error("timestamps and demand differ in length"));
        }
        let records = timestamps
            .iter()
            .zip(demand)
            .map(|(t, d)| {
                NaiveDateTime::parse_from_str(t, "%Y-%m-%dT%H:%M:%S")
                    .or_else(|_| NaiveDateTime::parse_from_str(t, "%Y-%m-%d %H:%M:%S"))
                    .map(|ts| (ts, d))
                    .map_err(|e| value_error(format!("bad timestamp `{t}`: {e}")))
            })
            .collect::<PyResult<Vec<_>>>()?;
        let inner = gridcast::data::DemandSeries::new(records, Default::default()).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (seed=0, n_days=365, start="2011-01-01", noise_sd=800.0, drift_per_year=0.0))]
    fn synth(seed: u64, n_days: usize, start: &str, noise_sd: f64, drift_per_year: f64) -> PyResult<Self> {
        let p = SynthParams { seed, n_days, start: parse_date(start)?, noise_sd, drift_per_year, ..Default::default() };
        Ok(Self { inner: synth_demand(&p).map_err(value_error)? })
    }

    /// The fixed drifting series used to compare online and offline learners.
    #[staticmethod]
    fn drift_benchmark() -> Self {
        Self { inner: drift_benchmark_series() }
    }

    #[staticmethod]
    #[pyo3(signature = (path, timestamp_column="timestamp", demand_column="demand", timestamp_format=None))]
    fn from_csv(
        path: PathBuf,
        timestamp_column: &str,
        demand_column: &str,
        timestamp_format: Option<String>,
    ) -> PyResult<Self> {
        let cols = ColumnMap { timestamp: timestamp_column.into(), demand: demand_column.into(), timestamp_format };
        Ok(Self { inner: ingest_demand_csv(&path, &cols).map_err(value_error)? })
    }

    #[getter]
    fn timestamps(&self) -> Vec<String> {
        self.inner.records().map(|(ts, _)| ts.format("%Y-%m-%dT%H:%M:%S").to_string()).collect()
    }

    #[getter]
    fn demand(&self) -> Vec<f64> {
        self.inner.demand().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("DemandSeries({} hours from {})", self.inner.len(), self.inner.start())
    }
}

fn hyperparams(params: Option<&Bound<'_, PyDict>>) -> PyResult<Hyperparams> {
    match params {
        None => Ok(Hyperparams::new()),
        Some(d) => {
            let text: String = d.py().import("json")?.call_method1("dumps", (d,))?.extract()?;
            serde_json::from_str(&text).map_err(value_error)
        }
    }
}

/// Trains one model per target hour and scores the pooled test forecasts.
///
/// Offline algorithms are fitted once on the rows before `test_start`;
/// online ones are validated progressively. Returns a dict with `metrics`,
/// `hourly` and `pooled` (per-forecast actual, predicted and residual).
#[pyfunction]
#[pyo3(signature = (series, algorithm, test_start, params=None, seed=0, scale_targets=true))]
fn train(
    py: Python<'_>,
    series: &PySeries,
    algorithm: &str,
    test_start: &str,
    params: Option<&Bound<'_, PyDict>>,
    seed: u64,
    scale_targets: bool,
) -> PyResult<Py<PyAny>> {
    let hp = hyperparams(params)?;
    let cfg = PipelineConfig { features: FeatureConfig::default(), test_start: parse_date(test_start)?, scale_targets };
    let s = &series.inner;
    let out = PyDict::new(py);
    let (metrics, hourly, pooled) = py.detach(|| -> PyResult<_> {
        let cal = label_calendar(s, &SeasonTable::default()).map_err(value_error)?;
        if let Ok(kind) = algorithm.parse::<AlgorithmKind>() {
            let alg = Algorithm::from_params(kind, &hp).map_err(value_error)?;
            let run = per_hour_orchestrate(s, &cal, &cfg, &alg, seed).map_err(value_error)?;
            Ok((run.metrics, run.hourly, run.pooled))
        } else if let Ok(kind) = algorithm.parse::<OnlineKind>() {
            let alg = OnlineAlgorithm::from_params(kind, &hp).map_err(value_error)?;
            let run = per_hour_online(s, &cal, &cfg, &alg, seed).map_err(value_error)?;
            Ok((run.metrics, run.hourly, run.pooled))
        } else {
            Err(value_error(format!("unknown algorithm `{algorithm}`")))
        }
    })?;
    out.set_item("metrics", to_py(py, &metrics)?)?;
    out.set_item("hourly", to_py(py, &hourly)?)?;
    out.set_item("pooled", to_py(py, &pooled)?)?;
    Ok(out.into_any().unbind())
}

/// MAE, MSE, RMSE, R² and, given naive forecasts, MASE.
#[pyfunction]
#[pyo3(signature = (actual, predicted, naive=None))]
fn metrics(py: Python<'_>, actual: Vec<f64>, predicted: Vec<f64>, naive: Option<Vec<f64>>) -> PyResult<Py<PyAny>> {
    let m = compute_metrics(&actual, &predicted, naive.as_deref()).map_err(value_error)?;
    to_py(py, &m)
}

/// Fractions of absolute residuals within the maximum and average reserve.
#[pyfunction]
#[pyo3(signature = (residuals, max_reserve=6000.0, avg_reserve=2000.0))]
fn reserve(py: Python<'_>, residuals: Vec<f64>, max_reserve: f64, avg_reserve: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &reserve_analysis(&residuals, max_reserve, avg_reserve).map_err(value_error)?)
}

#[pyfunction]
fn boxcox(y: f64, lam: f64) -> PyResult<f64> {
    boxcox_transform(y, lam).map_err(value_error)
}

#[pyfunction(name = "boxcox_inverse")]
fn boxcox_inv(z: f64, lam: f64) -> Option<f64> {
    boxcox_inverse(z, lam)
}

/// A fitted residual distribution.
#[pyclass(module = "gridcast_py", name = "Distribution")]
struct PyDistribution {
    inner: ResidualDistribution,
}

#[pymethods]
impl PyDistribution {
    #[staticmethod]
    fn fit(residuals: Vec<f64>, family: &str) -> PyResult<Self> {
        let f = family.parse::<Family>().map_err(value_error)?;
        let inner = gridcast::residuals::fit_distribution(&residuals, f).map_err(value_error)?;
        Ok(Self { inner })
    }

    /// Lowest histogram SSE among `families` (all when omitted).
    #[staticmethod]
    #[pyo3(signature = (residuals, families=None))]
    fn select_best(residuals: Vec<f64>, families: Option<Vec<String>>) -> PyResult<Self> {
        let fams = parse_families(families)?;
        let inner = gridcast::residuals::select_best(&residuals, &fams).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn normal(mu: f64, sigma: f64) -> PyResult<Self> {
        Ok(Self { inner: ResidualDistribution::normal(mu, sigma).map_err(value_error)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: ResidualDistribution::from_json(text).map_err(value_error)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family.name()
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.inner.params.clone()
    }

    #[getter]
    fn sse(&self) -> Option<f64> {
        self.inner.sse
    }

    fn pdf(&self, x: f64) -> f64 {
        self.inner.pdf(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn quantile(&self, u: f64) -> Option<f64> {
        self.inner.quantile(u)
    }

    fn mean(&self) -> Option<f64> {
        self.inner.mean()
    }

    fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        self.inner.sample(seed, n)
    }

    fn __repr__(&self) -> String {
        format!("Distribution({}, {:?})", self.inner.family.name(), self.inner.params)
    }
}

#[pyfunction]
fn npv(cashflows: Vec<f64>, rate: f64) -> PyResult<f64> {
    gridcast::market::npv(&cashflows, rate).map_err(value_error)
}

/// Merit-order dispatch of `(srmc, available_mw)` offers against a demand.
#[pyfunction]
fn dispatch(py: Python<'_>, offers: Vec<(f64, f64)>, demand_mw: f64) -> PyResult<Py<PyAny>> {
    let offers: Vec<Offer> =
        offers.into_iter().enumerate().map(|(id, (srmc, available_mw))| Offer { id, srmc, available_mw }).collect();
    to_py(py, &merit_order_dispatch(&offers, demand_mw))
}

fn load_scenario(path: Option<PathBuf>) -> PyResult<Scenario> {
    match path {
        Some(p) => Scenario::load(&p).map_err(value_error),
        None => Ok(Scenario::default_scenario()),
    }
}

/// Runs the market simulation; demand is perturbed by `normal_sd` MW or by
/// draws from `distribution`, and left as is when neither is given.
#[pyfunction]
#[pyo3(signature = (scenario=None, normal_sd=None, distribution=None, seed=0, start_year=None, end_year=None))]
fn simulate(
    py: Python<'_>,
    scenario: Option<PathBuf>,
    normal_sd: Option<f64>,
    distribution: Option<&PyDistribution>,
    seed: u64,
    start_year: Option<i32>,
    end_year: Option<i32>,
) -> PyResult<Py<PyAny>> {
    let mut sc = load_scenario(scenario)?;
    sc.start_year = start_year.unwrap_or(sc.start_year);
    sc.end_year = end_year.unwrap_or(sc.end_year);
    let perturbation = match (distribution, normal_sd) {
        (Some(_), Some(_)) => return Err(value_error("give either normal_sd or distribution")),
        (Some(d), None) => Perturbation::Distribution(d.inner.clone()),
        (None, Some(sd)) => Perturbation::normal(sd).map_err(value_error)?,
        (None, None) => Perturbation::None,
    };
    let r = py.detach(|| run_simulation(&sc, &perturbation, seed)).map_err(value_error)?;
    to_py(py, &r)
}

/// Seed-averaged dispatch per σ; the first row is the unperturbed baseline.
#[pyfunction]
#[pyo3(signature = (sigmas=None, seeds=None, scenario=None, start_year=None, end_year=None))]
fn sensitivity(
    py: Python<'_>,
    sigmas: Option<Vec<f64>>,
    seeds: Option<Vec<u64>>,
    scenario: Option<PathBuf>,
    start_year: Option<i32>,
    end_year: Option<i32>,
) -> PyResult<Py<PyAny>> {
    let mut sc = load_scenario(scenario)?;
    sc.start_year = start_year.unwrap_or(sc.start_year);
    sc.end_year = end_year.unwrap_or(sc.end_year);
    let sigmas = sigmas.unwrap_or_else(gridcast::market::default_sigmas);
    let seeds = seeds.unwrap_or_else(|| (0..10).collect());
    let t = py.detach(|| sensitivity_sweep(&sc, &sigmas, &seeds)).map_err(value_error)?;
    let rows: Vec<_> = std::iter::once(&t.baseline).chain(&t.rows).collect();
    to_py(py, &rows)
}

#[pymodule]
fn gridcast_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    init_module(m)
}

/// Registers the module contents; also used to embed the module in tests.
pub fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", gridcast::CODE_VERSION)?;
    m.add_class::<PySeries>()?;
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(reserve, m)?)?;
    m.add_function(wrap_pyfunction!(boxcox, m)?)?;
    m.add_function(wrap_pyfunction!(boxcox_inv, m)?)?;
    m.add_function(wrap_pyfunction!(npv, m)?)?;
    m.add_function(wrap_pyfunction!(dispatch, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity, m)?)?;
    Ok(())
}
