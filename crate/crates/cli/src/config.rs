use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use gridcast::data::{FeatureConfig, SeasonTable, SynthParams};
use gridcast::eval::{CvMode, PipelineConfig};
use gridcast::market::default_sigmas;
use gridcast::offline::{Algorithm, AlgorithmKind, HyperparamGrid};
use gridcast::online::{OnlineAlgorithm, OnlineKind};
use gridcast::residuals::{BinRule, Family};
use serde::{Deserialize, Serialize};

/// Error naming the offending config field.
pub fn field_error(field: &str, msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow::anyhow!("config field `{field}`: {msg}")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub features: FeaturesSection,
    pub train: TrainSection,
    pub residuals: ResidualsSection,
    pub simulate: SimulateSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Hourly demand CSV; takes precedence over `synth`.
    pub path: Option<PathBuf>,
    pub timestamp_column: String,
    pub demand_column: String,
    pub timestamp_format: Option<String>,
    /// One ISO date per line.
    pub holidays: Option<PathBuf>,
    pub seasons: Option<SeasonTable>,
    pub synth: Option<SynthSection>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            path: None,
            timestamp_column: "timestamp".into(),
            demand_column: "demand".into(),
            timestamp_format: None,
            holidays: None,
            seasons: None,
            synth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// Use the shipped drifting benchmark series; the other fields are
    /// then ignored.
    pub drift_benchmark: bool,
    pub start: NaiveDate,
    pub n_days: usize,
    pub base_mwh: f64,
    pub daily_amp_mwh: f64,
    pub weekly_amp_mwh: f64,
    pub seasonal_amp_mwh: f64,
    pub noise_sd_mwh: f64,
    pub drift_mwh_per_year: f64,
    pub seed: u64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let p = SynthParams::default();
        Self {
            drift_benchmark: false,
            start: p.start,
            n_days: p.n_days,
            base_mwh: p.base,
            daily_amp_mwh: p.daily_amp,
            weekly_amp_mwh: p.weekly_amp,
            seasonal_amp_mwh: p.seasonal_amp,
            noise_sd_mwh: p.noise_sd,
            drift_mwh_per_year: p.drift_per_year,
            seed: p.seed,
        }
    }
}

impl SynthSection {
    pub fn params(&self, holidays: BTreeSet<NaiveDate>) -> SynthParams {
        SynthParams {
            start: self.start,
            n_days: self.n_days,
            base: self.base_mwh,
            daily_amp: self.daily_amp_mwh,
            weekly_amp: self.weekly_amp_mwh,
            seasonal_amp: self.seasonal_amp_mwh,
            noise_sd: self.noise_sd_mwh,
            drift_per_year: self.drift_mwh_per_year,
            seed: self.seed,
            holidays,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    pub lag_days: Vec<u32>,
    pub lag_window: usize,
    pub n_seasons: usize,
    /// First test date; defaults to the date 80% of the way through the
    /// series.
    pub test_start: Option<NaiveDate>,
    pub scale_targets: bool,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        let f = FeatureConfig::default();
        Self {
            lag_days: f.lag_days,
            lag_window: f.lag_window,
            n_seasons: f.n_seasons,
            test_start: None,
            scale_targets: true,
        }
    }
}

impl FeaturesSection {
    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig { lag_days: self.lag_days.clone(), lag_window: self.lag_window, n_seasons: self.n_seasons }
    }

    pub fn pipeline(&self, test_start: NaiveDate) -> PipelineConfig {
        PipelineConfig { features: self.feature_config(), test_start, scale_targets: self.scale_targets }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// Offline (`ols`, `extra_trees`, ...) or online (`boxcox`,
    /// `passive_aggressive`, ...) learner names.
    pub algorithms: Vec<String>,
    /// Candidate hyperparameters per algorithm. Offline grids with more than
    /// one combination are searched; online entries must name one.
    pub grids: BTreeMap<String, HyperparamGrid>,
    pub cv_mode: CvMode,
    pub n_splits: usize,
    /// Target hour whose design the grid search runs on.
    pub grid_hour: u32,
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            algorithms: vec!["ols".into()],
            grids: BTreeMap::new(),
            cv_mode: CvMode::Random,
            n_splits: 5,
            grid_hour: 18,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualsSection {
    /// CSV with a `residual` column.
    pub input: Option<PathBuf>,
    pub families: Vec<String>,
    pub bin_rule: BinRule,
}

impl Default for ResidualsSection {
    fn default() -> Self {
        Self {
            input: None,
            families: Family::ALL.iter().map(|f| f.name().to_string()).collect(),
            bin_rule: BinRule::FreedmanDiaconis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Scenario TOML; the shipped default scenario when absent.
    pub scenario: Option<PathBuf>,
    pub start_year: Option<i32>,
    pub end_year: Option<i32>,
    pub seed: u64,
    /// Residual distribution document driving demand perturbation.
    pub distribution: Option<PathBuf>,
    pub normal_sd_mw: Option<f64>,
    pub sweep_seeds: Vec<u64>,
    pub sigmas_mw: Vec<f64>,
    /// Labelled distribution documents for a distribution sweep.
    pub distributions: BTreeMap<String, PathBuf>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            scenario: None,
            start_year: None,
            end_year: None,
            seed: 0,
            distribution: None,
            normal_sd_mw: None,
            sweep_seeds: (0..10).collect(),
            sigmas_mw: default_sigmas(),
            distributions: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// A learner named in `train.algorithms`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Learner {
    Offline(AlgorithmKind),
    Online(OnlineKind),
}

impl Learner {
    pub fn parse(name: &str) -> Option<Self> {
        name.parse().map(Self::Offline).ok().or_else(|| name.parse().map(Self::Online).ok())
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Offline(k) => k.name(),
            Self::Online(k) => k.name(),
        }
    }
}

/// A learner with the hyperparameter candidates to try.
#[derive(Debug, Clone)]
pub enum Plan {
    Offline { kind: AlgorithmKind, grid: HyperparamGrid, combinations: usize },
    Online(OnlineAlgorithm),
}

fn check_exists(field: &str, path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(field_error(field, format!("path `{}` does not exist", path.display())));
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config `{}`", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config `{}`", path.display()))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Bytes hashed into run manifests: everything except the output
    /// location.
    pub fn hash_bytes(&self, extra: &serde_json::Value) -> Vec<u8> {
        let mut c = self.clone();
        c.output = OutputSection::default();
        serde_json::to_vec(&serde_json::json!({ "config": c, "inputs": extra })).expect("config serializes")
    }

    pub fn validate_data(&self) -> Result<()> {
        let d = &self.data;
        match (&d.path, &d.synth) {
            (Some(p), _) => check_exists("data.path", p)?,
            (None, Some(s)) => {
                if !s.drift_benchmark && s.n_days == 0 {
                    return Err(field_error("data.synth.n_days", "must be at least 1"));
                }
            }
            (None, None) => return Err(field_error("data", "set `path` or a `synth` table")),
        }
        if let Some(h) = &d.holidays {
            check_exists("data.holidays", h)?;
        }
        if let Some(t) = &d.seasons {
            t.validate().map_err(|e| field_error("data.seasons", e))?;
            if t.len() != self.features.n_seasons {
                return Err(field_error(
                    "features.n_seasons",
                    format!("is {} but data.seasons defines {}", self.features.n_seasons, t.len()),
                ));
            }
        }
        self.validate_features()
    }

    pub fn validate_features(&self) -> Result<()> {
        let f = &self.features;
        if f.lag_days.is_empty() || f.lag_days.contains(&0) {
            return Err(field_error("features.lag_days", "must be non-empty with every entry >= 1"));
        }
        if f.lag_window == 0 {
            return Err(field_error("features.lag_window", "must be >= 1"));
        }
        if f.n_seasons == 0 {
            return Err(field_error("features.n_seasons", "must be >= 1"));
        }
        Ok(())
    }

    /// Resolves `train.algorithms` against `train.grids`.
    pub fn train_plans(&self) -> Result<Vec<(Learner, Plan)>> {
        let t = &self.train;
        if t.algorithms.is_empty() {
            return Err(field_error("train.algorithms", "must name at least one algorithm"));
        }
        let mut seen = BTreeSet::new();
        let mut plans = Vec::new();
        for (i, name) in t.algorithms.iter().enumerate() {
            let field = format!("train.algorithms[{i}]");
            let learner =
                Learner::parse(name).ok_or_else(|| field_error(&field, format!("unknown algorithm `{name}`")))?;
            if !seen.insert(learner.name()) {
                return Err(field_error(&field, format!("`{name}` is listed twice")));
            }
            let grid = t.grids.get(name).cloned().unwrap_or_default();
            let gfield = format!("train.grids.{name}");
            let combos = grid.combinations().map_err(|e| field_error(&gfield, e))?;
            let plan = match learner {
                Learner::Offline(kind) => {
                    for c in &combos {
                        Algorithm::from_params(kind, c).map_err(|e| field_error(&gfield, e))?;
                    }
                    Plan::Offline { kind, grid, combinations: combos.len() }
                }
                Learner::Online(kind) => {
                    if combos.len() != 1 {
                        return Err(field_error(&gfield, "online learners take exactly one combination"));
                    }
                    Plan::Online(OnlineAlgorithm::from_params(kind, &combos[0]).map_err(|e| field_error(&gfield, e))?)
                }
            };
            plans.push((learner, plan));
        }
        if let Some(k) = t.grids.keys().find(|k| !t.algorithms.contains(k)) {
            return Err(field_error(&format!("train.grids.{k}"), "algorithm is not listed in train.algorithms"));
        }
        if plans.iter().any(|(_, p)| matches!(p, Plan::Offline { combinations, .. } if *combinations > 1)) {
            if t.n_splits < 2 {
                return Err(field_error("train.n_splits", "must be >= 2"));
            }
            if t.grid_hour > 23 {
                return Err(field_error("train.grid_hour", "must be in 0..=23"));
            }
        }
        Ok(plans)
    }

    pub fn residual_families(&self) -> Result<Vec<Family>> {
        let r = &self.residuals;
        if r.families.is_empty() {
            return Err(field_error("residuals.families", "must name at least one family"));
        }
        let families = r
            .families
            .iter()
            .enumerate()
            .map(|(i, n)| n.parse::<Family>().map_err(|e| field_error(&format!("residuals.families[{i}]"), e)))
            .collect::<Result<Vec<_>>>()?;
        if let BinRule::Fixed { n_bins } = r.bin_rule {
            if n_bins == 0 {
                return Err(field_error("residuals.bin_rule.n_bins", "must be >= 1"));
            }
        }
        Ok(families)
    }

    pub fn validate_simulate(&self) -> Result<()> {
        let s = &self.simulate;
        if let Some(p) = &s.scenario {
            check_exists("simulate.scenario", p)?;
        }
        if let Some(p) = &s.distribution {
            check_exists("simulate.distribution", p)?;
        }
        if s.distribution.is_some() && s.normal_sd_mw.is_some() {
            return Err(field_error("simulate.normal_sd_mw", "conflicts with simulate.distribution"));
        }
        if let Some(sd) = s.normal_sd_mw {
            if !(sd.is_finite() && sd >= 0.0) {
                return Err(field_error("simulate.normal_sd_mw", "must be finite and >= 0"));
            }
        }
        if let (Some(a), Some(b)) = (s.start_year, s.end_year) {
            if b < a {
                return Err(field_error("simulate.end_year", "precedes start_year"));
            }
        }
        for (label, p) in &s.distributions {
            check_exists(&format!("simulate.distributions.{label}"), p)?;
        }
        Ok(())
    }

    pub fn validate_sweep(&self) -> Result<()> {
        self.validate_simulate()?;
        let s = &self.simulate;
        if s.sweep_seeds.is_empty() {
            return Err(field_error("simulate.sweep_seeds", "must list at least one seed"));
        }
        if s.distributions.is_empty() {
            if s.sigmas_mw.is_empty() {
                return Err(field_error("simulate.sigmas_mw", "must list at least one value"));
            }
            if let Some(v) = s.sigmas_mw.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                bail!(field_error("simulate.sigmas_mw", format!("{v} is not finite and >= 0")));
            }
        }
        Ok(())
    }
}
