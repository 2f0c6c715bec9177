use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{Duration, NaiveDate};
use gridcast::data::{
    build_features, drift_benchmark_series, ingest_demand_csv, label_calendar, read_holidays, split_train_test,
    synth_demand, write_demand_csv, CalendarFeatures, ColumnMap, DemandSeries,
};
use gridcast::eval::{
    compute_metrics, grid_search, per_hour_online, per_hour_orchestrate, prepare_hour, reserve_analysis,
    write_grid_csv, EvalError, GridSearchConfig, HourlyMetrics, MetricReport, PipelineConfig, PooledResidual,
    RowStatus, TIMING_COLUMNS,
};
use gridcast::offline::{Algorithm, FitError, ModelDocument};
use gridcast::online::{OnlineCheckpoint, OnlineError};
use gridcast::rng::{stream_seed, streams};

use crate::config::{field_error, Learner, Plan, RunConfig};
use crate::output::{create_dir, csv_writer, fmt_opt, read_table, write_manifest};

fn column_map(cfg: &RunConfig) -> ColumnMap {
    ColumnMap {
        timestamp: cfg.data.timestamp_column.clone(),
        demand: cfg.data.demand_column.clone(),
        timestamp_format: cfg.data.timestamp_format.clone(),
    }
}

fn holidays(cfg: &RunConfig) -> Result<BTreeSet<NaiveDate>> {
    match &cfg.data.holidays {
        Some(p) => read_holidays(p).with_context(|| format!("reading holidays `{}`", p.display())),
        None => Ok(BTreeSet::new()),
    }
}

/// The configured series with its holidays attached.
pub fn load_series(cfg: &RunConfig) -> Result<DemandSeries> {
    cfg.validate_data()?;
    let h = holidays(cfg)?;
    if let Some(p) = &cfg.data.path {
        let s = ingest_demand_csv(p, &column_map(cfg)).with_context(|| format!("ingesting `{}`", p.display()))?;
        return Ok(s.with_holidays(h));
    }
    let synth = cfg.data.synth.as_ref().expect("validated");
    if synth.drift_benchmark {
        return Ok(drift_benchmark_series().with_holidays(h));
    }
    synth_demand(&synth.params(h)).map_err(|e| field_error("data.synth", e))
}

fn calendar(cfg: &RunConfig, series: &DemandSeries) -> Result<Vec<CalendarFeatures>> {
    let table = cfg.data.seasons.clone().unwrap_or_default();
    Ok(label_calendar(series, &table)?)
}

/// `features.test_start`, or the date 80% of the way through the series.
fn test_start(cfg: &RunConfig, series: &DemandSeries) -> NaiveDate {
    cfg.features.test_start.unwrap_or_else(|| {
        let (a, b) = (series.start().date(), series.end().date());
        a + Duration::days((b - a).num_days() * 4 / 5)
    })
}

pub fn ingest(cfg: &RunConfig, name: &str) -> Result<String> {
    if cfg.data.path.is_none() {
        bail!(field_error("data.path", "no input file given (use --input)"));
    }
    let series = load_series(cfg)?;
    let out = &cfg.output.dir;
    create_dir(out)?;
    let path = out.join(name);
    write_demand_csv(&series, &path)?;
    write_manifest(
        out,
        "ingest",
        None,
        &cfg.hash_bytes(&serde_json::json!({ "name": name })),
        std::slice::from_ref(&path),
    )?;
    Ok(format!("ingest: {} records {} .. {} -> {}", series.len(), series.start(), series.end(), path.display()))
}

pub fn synth(cfg: &RunConfig, name: &str) -> Result<String> {
    let series = load_series(cfg)?;
    let out = &cfg.output.dir;
    create_dir(out)?;
    let path = out.join(name);
    write_demand_csv(&series, &path)?;
    let seed = cfg.data.synth.as_ref().map(|s| s.seed);
    write_manifest(
        out,
        "synth",
        seed,
        &cfg.hash_bytes(&serde_json::json!({ "name": name })),
        std::slice::from_ref(&path),
    )?;
    Ok(format!("synth: {} records -> {}", series.len(), path.display()))
}

fn write_pooled(path: &Path, pooled: &[PooledResidual]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["timestamp", "actual", "predicted", "residual"])?;
    for p in pooled {
        w.write_record([
            p.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
            p.actual.to_string(),
            p.predicted.to_string(),
            p.residual.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Grid table without the wall-clock columns.
fn write_grid(path: &Path, rows: &[gridcast::eval::GridRow]) -> Result<()> {
    let mut buf = Vec::new();
    write_grid_csv(rows, &mut buf)?;
    let mut r = csv::Reader::from_reader(buf.as_slice());
    let header = r.headers()?.clone();
    let keep: Vec<usize> = (0..header.len()).filter(|&j| !TIMING_COLUMNS.contains(&&header[j])).collect();
    let mut w = csv_writer(path)?;
    w.write_record(keep.iter().map(|&j| &header[j]))?;
    for rec in r.records() {
        let rec = rec?;
        w.write_record(keep.iter().map(|&j| &rec[j]))?;
    }
    w.flush()?;
    Ok(())
}

struct TrainedRow {
    algorithm: &'static str,
    mode: &'static str,
    params: String,
    metrics: MetricReport,
    hourly: Vec<HourlyMetrics>,
    missing: usize,
}

const METRIC_HEADER: [&str; 11] =
    ["rank", "algorithm", "mode", "params", "n", "mae", "mse", "rmse", "r_squared", "mase", "missing_predictions"];

#[allow(clippy::too_many_arguments)]
fn train_one(
    cfg: &RunConfig,
    series: &DemandSeries,
    cal: &[CalendarFeatures],
    pipe: &PipelineConfig,
    seed: u64,
    learner: Learner,
    plan: Plan,
    outputs: &mut Vec<PathBuf>,
) -> Result<TrainedRow> {
    let name = learner.name();
    let out = &cfg.output.dir;
    let model_dir = out.join("models").join(name);
    create_dir(&model_dir)?;
    let (params, pooled, metrics, hourly, missing) = match plan {
        Plan::Offline { kind, grid, combinations } => {
            let params = if combinations > 1 {
                let h = prepare_hour(series, cal, cfg.train.grid_hour, pipe, pipe.scale_targets)?;
                let gc = GridSearchConfig { n_splits: cfg.train.n_splits, mode: cfg.train.cv_mode, seed };
                let grid_rows = grid_search(kind, &grid, &h.train.x, &h.y_train, &gc, h.target_scaler.as_ref())?;
                let path = out.join(format!("grid_{name}.csv"));
                write_grid(&path, &grid_rows)?;
                outputs.push(path);
                match grid_rows.first() {
                    Some(r) if r.status == RowStatus::Ok => r.params.clone(),
                    _ => bail!(field_error(&format!("train.grids.{name}"), "every grid combination failed")),
                }
            } else {
                grid.combinations()?.remove(0)
            };
            let alg = Algorithm::from_params(kind, &params)?;
            let run = per_hour_orchestrate(series, cal, pipe, &alg, seed)?;
            for (hour, doc) in run.models.iter().enumerate() {
                let p = model_dir.join(format!("hour_{hour:02}.json"));
                doc.save(&p)?;
                outputs.push(p);
            }
            (params.label(), run.pooled, run.metrics, run.hourly, 0)
        }
        Plan::Online(alg) => {
            let run = per_hour_online(series, cal, pipe, &alg, seed)?;
            for (hour, c) in run.checkpoints.iter().enumerate() {
                let p = model_dir.join(format!("hour_{hour:02}.json"));
                c.save(&p)?;
                outputs.push(p);
            }
            (alg.describe().label(), run.pooled, run.metrics, run.hourly, run.missing_predictions)
        }
    };
    let p = out.join("residuals").join(format!("{name}.csv"));
    write_pooled(&p, &pooled)?;
    outputs.push(p);
    let mode = match learner {
        Learner::Offline(_) => "offline",
        Learner::Online(_) => "online",
    };
    Ok(TrainedRow { algorithm: name, mode, params, metrics, hourly, missing })
}

pub fn train(cfg: &RunConfig, timings: bool) -> Result<String> {
    let plans = cfg.train_plans()?;
    let series = load_series(cfg)?;
    let cal = calendar(cfg, &series)?;
    let pipe = cfg.features.pipeline(test_start(cfg, &series));
    let seed = stream_seed(cfg.train.seed, streams::TRAIN);
    let out = &cfg.output.dir;
    create_dir(&out.join("models"))?;
    create_dir(&out.join("residuals"))?;
    let mut outputs: Vec<PathBuf> = Vec::new();
    let mut rows = Vec::new();

    for (learner, plan) in plans {
        let name = learner.name();
        eprintln!("train: {name}");
        let row = train_one(cfg, &series, &cal, &pipe, seed, learner, plan, &mut outputs).map_err(|e| {
            let bad_param = matches!(
                e.downcast_ref::<EvalError>(),
                Some(
                    EvalError::Fit(FitError::InvalidParameter(_)) | EvalError::Online(OnlineError::InvalidParameter(_))
                )
            );
            if bad_param {
                field_error(&format!("train.grids.{name}"), format!("{e:#}"))
            } else {
                e.context(format!("training {name}"))
            }
        })?;
        rows.push(row);
    }

    rows.sort_by(|a, b| a.metrics.mae.total_cmp(&b.metrics.mae).then(a.algorithm.cmp(b.algorithm)));
    let path = out.join("metrics.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(METRIC_HEADER)?;
    for (i, r) in rows.iter().enumerate() {
        let m = &r.metrics;
        w.write_record([
            (i + 1).to_string(),
            r.algorithm.to_string(),
            r.mode.to_string(),
            r.params.clone(),
            m.n.to_string(),
            m.mae.to_string(),
            m.mse.to_string(),
            m.rmse.to_string(),
            fmt_opt(m.r_squared),
            fmt_opt(m.mase),
            r.missing.to_string(),
        ])?;
    }
    w.flush()?;
    outputs.push(path);

    let path = out.join("hourly_metrics.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["algorithm", "hour", "n", "mae", "rmse", "r_squared", "mase"])?;
    for r in &rows {
        for h in &r.hourly {
            let m = &h.metrics;
            w.write_record([
                r.algorithm.to_string(),
                h.hour.to_string(),
                m.n.to_string(),
                m.mae.to_string(),
                m.rmse.to_string(),
                fmt_opt(m.r_squared),
                fmt_opt(m.mase),
            ])?;
        }
    }
    w.flush()?;
    outputs.push(path);

    if timings {
        let path = out.join("timings.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["algorithm", "hour", "fit_time_s", "score_time_s"])?;
        for r in &rows {
            for h in &r.hourly {
                w.write_record([
                    r.algorithm.to_string(),
                    h.hour.to_string(),
                    h.metrics.fit_time.to_string(),
                    h.metrics.score_time.to_string(),
                ])?;
            }
        }
        w.flush()?;
        outputs.push(path);
    }

    write_manifest(out, "train", Some(cfg.train.seed), &cfg.hash_bytes(&serde_json::Value::Null), &outputs)?;
    let best = &rows[0];
    Ok(format!(
        "train: {} algorithm(s), best {} with MAE {:.2} MWh over {} test hours",
        rows.len(),
        best.algorithm,
        best.metrics.mae,
        best.metrics.n
    ))
}

enum Frozen {
    Offline(ModelDocument),
    Online(OnlineCheckpoint),
}

impl Frozen {
    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading `{}`", path.display()))?;
        if let Ok(d) = ModelDocument::from_json(&text) {
            return Ok(Self::Offline(d));
        }
        OnlineCheckpoint::from_json(&text)
            .map(Self::Online)
            .with_context(|| format!("`{}` is neither a model document nor an online checkpoint", path.display()))
    }

    /// Width of the raw feature rows the model accepts.
    fn input_width(&self) -> usize {
        let (scaler, names) = match self {
            Self::Offline(d) => (&d.feature_scaler, &d.feature_names),
            Self::Online(c) => (&c.feature_scaler, &c.feature_names),
        };
        scaler.as_ref().map_or(names.len(), |s| s.width())
    }

    fn predict(&self, row: &[f64]) -> Result<f64> {
        Ok(match self {
            Self::Offline(d) => d.predict_raw(row)?,
            Self::Online(c) => c.predict_raw(row)?,
        })
    }
}

/// `<out>/models/<first trained algorithm>`.
fn default_model_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let metrics = cfg.output.dir.join("metrics.csv");
    if metrics.exists() {
        if let Some(best) = read_table(&metrics)?.first().and_then(|r| r.get("algorithm").cloned()) {
            return Ok(cfg.output.dir.join("models").join(best));
        }
    }
    let first = cfg.train.algorithms.first().context("no --models given and train.algorithms is empty")?;
    Ok(cfg.output.dir.join("models").join(first))
}

pub fn evaluate(cfg: &RunConfig, models: Option<&Path>, max_reserve: f64, avg_reserve: f64) -> Result<String> {
    for (flag, v) in [("--max-reserve", max_reserve), ("--avg-reserve", avg_reserve)] {
        if !(v.is_finite() && v >= 0.0) {
            bail!("{flag} must be finite and >= 0, got {v}");
        }
    }
    let dir = match models {
        Some(d) => d.to_path_buf(),
        None => default_model_dir(cfg)?,
    };
    let series = load_series(cfg)?;
    let cal = calendar(cfg, &series)?;
    let fc = cfg.features.feature_config();
    let start = test_start(cfg, &series);

    let mut pooled = Vec::new();
    for hour in 0..24u32 {
        let path = dir.join(format!("hour_{hour:02}.json"));
        let model = Frozen::load(&path)?;
        if model.input_width() != fc.width() {
            bail!(
                "dimension mismatch: `{}` expects {} features, the configured features give {}",
                path.display(),
                model.input_width(),
                fc.width()
            );
        }
        let fm = build_features(&series, &cal, hour, &fc)?;
        let (_, test) = split_train_test(&fm, start)?;
        for (i, row) in test.x.rows().enumerate() {
            let predicted = model.predict(row)?;
            let actual = test.targets[i];
            pooled.push(PooledResidual {
                timestamp: test.dates[i].and_hms_opt(hour, 0, 0).expect("valid hour"),
                actual,
                predicted,
                residual: actual - predicted,
            });
        }
    }
    pooled.sort_by_key(|p| p.timestamp);

    let actual: Vec<f64> = pooled.iter().map(|p| p.actual).collect();
    let predicted: Vec<f64> = pooled.iter().map(|p| p.predicted).collect();
    let naive: Option<Vec<f64>> = pooled.iter().map(|p| series.demand_at(p.timestamp - Duration::hours(24))).collect();
    let m = compute_metrics(&actual, &predicted, naive.as_deref())?;
    let residuals: Vec<f64> = pooled.iter().map(|p| p.residual).collect();
    let r = reserve_analysis(&residuals, max_reserve, avg_reserve)?;

    let out = &cfg.output.dir;
    create_dir(out)?;
    let res_path = out.join("pooled_residuals.csv");
    write_pooled(&res_path, &pooled)?;

    let metrics_path = out.join("evaluation.csv");
    let mut w = csv_writer(&metrics_path)?;
    w.write_record(["n", "mae", "mse", "rmse", "r_squared", "mase"])?;
    w.write_record([
        m.n.to_string(),
        m.mae.to_string(),
        m.mse.to_string(),
        m.rmse.to_string(),
        fmt_opt(m.r_squared),
        fmt_opt(m.mase),
    ])?;
    w.flush()?;

    let reserve_path = out.join("reserve.csv");
    let mut w = csv_writer(&reserve_path)?;
    w.write_record(["n", "max_reserve_mwh", "avg_reserve_mwh", "frac_within_max", "frac_within_avg", "p5", "p95"])?;
    w.write_record([
        r.n.to_string(),
        r.max_reserve.to_string(),
        r.avg_reserve.to_string(),
        r.frac_within_max.to_string(),
        r.frac_within_avg.to_string(),
        r.p5.to_string(),
        r.p95.to_string(),
    ])?;
    w.flush()?;

    let extra = serde_json::json!({ "models": dir, "max_reserve": max_reserve, "avg_reserve": avg_reserve });
    write_manifest(out, "evaluate", None, &cfg.hash_bytes(&extra), &[res_path, metrics_path, reserve_path])?;
    Ok(format!(
        "evaluate: {} forecasts, MAE {:.2} MWh, {:.1}% within {} MWh, {:.1}% within {} MWh",
        m.n,
        m.mae,
        100.0 * r.frac_within_max,
        max_reserve,
        100.0 * r.frac_within_avg,
        avg_reserve
    ))
}
