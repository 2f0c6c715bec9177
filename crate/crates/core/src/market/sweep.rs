use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plant::Technology;
use super::scenario::Scenario;
use super::sim::{run_simulation, Perturbation, SimulationResult};
use super::MarketError;

/// 1000, 2000, …, 20000 MW.
pub fn default_sigmas() -> Vec<f64> {
    (1..=20).map(|k| 1000.0 * f64::from(k)).collect()
}

/// Seed-averaged outcome of one perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub sigma_mw: Option<f64>,
    pub runs: usize,
    pub mean_dispatch_mwh: BTreeMap<Technology, f64>,
    /// Sample standard deviation across seeds; 0 for a single seed.
    pub sd_dispatch_mwh: BTreeMap<Technology, f64>,
    /// Each seed's mean yearly dispatch, in seed order.
    pub seed_dispatch_mwh: Vec<(u64, BTreeMap<Technology, f64>)>,
    pub mean_invested_mw: BTreeMap<Technology, f64>,
    pub mean_carbon_t: f64,
    /// Mean carbon over the baseline's mean carbon.
    pub relative_carbon: f64,
    pub mean_unserved_mwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub seeds: Vec<u64>,
    /// The unperturbed control.
    pub baseline: SweepRow,
    pub rows: Vec<SweepRow>,
}

fn summarise(label: String, sigma_mw: Option<f64>, runs: &[SimulationResult], baseline_carbon: f64) -> SweepRow {
    let n = runs.len() as f64;
    let mut mean = BTreeMap::new();
    let mut sd = BTreeMap::new();
    let mut invested = BTreeMap::new();
    for t in Technology::ALL {
        let v: Vec<f64> = runs.iter().map(|r| r.mean_dispatch_mwh[&t]).collect();
        let m = v.iter().sum::<f64>() / n;
        let var = if runs.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        mean.insert(t, m);
        sd.insert(t, var.sqrt());
        invested.insert(t, runs.iter().map(|r| r.invested_mw[&t]).sum::<f64>() / n);
    }
    let mean_carbon_t = runs.iter().map(|r| r.mean_carbon_t).sum::<f64>() / n;
    SweepRow {
        label,
        sigma_mw,
        runs: runs.len(),
        mean_dispatch_mwh: mean,
        sd_dispatch_mwh: sd,
        seed_dispatch_mwh: runs.iter().map(|r| (r.seed, r.mean_dispatch_mwh.clone())).collect(),
        mean_invested_mw: invested,
        mean_carbon_t,
        relative_carbon: mean_carbon_t / baseline_carbon,
        mean_unserved_mwh: runs.iter().map(|r| r.unserved_mwh).sum::<f64>() / n,
    }
}

/// Runs every `(case, seed)` pair as an independent simulation and
/// summarises per case. Row order follows `cases`; the first case is the
/// baseline.
fn run_cases(
    scenario: &Scenario,
    cases: &[(String, Option<f64>, Perturbation)],
    seeds: &[u64],
) -> Result<Vec<SweepRow>, MarketError> {
    if seeds.is_empty() {
        return Err(MarketError::InvalidParameter("no seeds given".into()));
    }
    scenario.validate()?;
    let jobs: Vec<(usize, u64)> = (0..cases.len()).flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    let results =
        jobs.par_iter().map(|&(c, s)| run_simulation(scenario, &cases[c].2, s)).collect::<Result<Vec<_>, _>>()?;
    let per_case: Vec<&[SimulationResult]> = results.chunks(seeds.len()).collect();
    let baseline_carbon = per_case[0].iter().map(|r| r.mean_carbon_t).sum::<f64>() / seeds.len() as f64;
    Ok(cases
        .iter()
        .zip(per_case)
        .map(|((label, sigma, _), runs)| summarise(label.clone(), *sigma, runs, baseline_carbon))
        .collect())
}

/// `Normal(0, σ)` demand noise for each σ, plus a prepended σ = 0 control.
pub fn sensitivity_sweep(scenario: &Scenario, sigmas: &[f64], seeds: &[u64]) -> Result<SweepTable, MarketError> {
    if sigmas.is_empty() {
        return Err(MarketError::InvalidParameter("no sigma values given".into()));
    }
    if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(MarketError::InvalidParameter(format!("sigma must be finite and >= 0, got {s}")));
    }
    let mut cases = vec![("sigma_0".to_string(), Some(0.0), Perturbation::normal(0.0)?)];
    for &s in sigmas {
        cases.push((format!("sigma_{s}"), Some(s), Perturbation::normal(s)?));
    }
    let mut rows = run_cases(scenario, &cases, seeds)?;
    let baseline = rows.remove(0);
    Ok(SweepTable { seeds: seeds.to_vec(), baseline, rows })
}

/// One row per labelled perturbation (for example residual distributions
/// of different forecasters), against an unperturbed baseline.
pub fn distribution_sweep(
    scenario: &Scenario,
    cases: &[(String, Perturbation)],
    seeds: &[u64],
) -> Result<SweepTable, MarketError> {
    let mut all = vec![("unperturbed".to_string(), None, Perturbation::None)];
    all.extend(cases.iter().map(|(l, p)| (l.clone(), None, p.clone())));
    let mut rows = run_cases(scenario, &all, seeds)?;
    let baseline = rows.remove(0);
    Ok(SweepTable { seeds: seeds.to_vec(), baseline, rows })
}
