use std::path::{Path, PathBuf};

use super::plant::Technology;
use super::sim::SimulationResult;
use super::sweep::{SweepRow, SweepTable};
use super::MarketError;

/// File names written by [`write_simulation_facets`].
pub const FACETS: [&str; 4] = ["yearly_mix.csv", "investments.csv", "prices.csv", "carbon.csv"];

fn writer(dir: &Path, name: &str) -> Result<(csv::Writer<std::fs::File>, PathBuf), MarketError> {
    let path = dir.join(name);
    Ok((csv::Writer::from_path(&path)?, path))
}

/// One table per facet of a run; returns the paths written.
pub fn write_simulation_facets(result: &SimulationResult, dir: &Path) -> Result<Vec<PathBuf>, MarketError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();

    let (mut w, p) = writer(dir, FACETS[0])?;
    w.write_record(["year", "technology", "capacity_mw", "dispatch_mwh", "available_mwh"])?;
    for y in &result.years {
        for t in Technology::ALL {
            w.write_record([
                y.year.to_string(),
                t.to_string(),
                y.capacity_mw[&t].to_string(),
                y.dispatch_mwh[&t].to_string(),
                y.available_mwh[&t].to_string(),
            ])?;
        }
    }
    w.flush()?;
    paths.push(p);

    let (mut w, p) = writer(dir, FACETS[1])?;
    w.write_record([
        "year",
        "event",
        "genco",
        "plant_id",
        "technology",
        "capacity_mw",
        "npv",
        "capex_cents",
        "commission_year",
    ])?;
    for y in &result.years {
        for r in &y.retirements {
            w.write_record([
                y.year.to_string(),
                "retire".into(),
                r.genco.clone(),
                r.plant_id.to_string(),
                r.technology.to_string(),
                r.capacity_mw.to_string(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
        for i in &y.investments {
            w.write_record([
                y.year.to_string(),
                "invest".into(),
                i.genco.clone(),
                i.plant_id.to_string(),
                i.technology.to_string(),
                i.capacity_mw.to_string(),
                i.npv.to_string(),
                i.capex_cents.to_string(),
                i.commission_year.to_string(),
            ])?;
        }
    }
    w.flush()?;
    paths.push(p);

    let (mut w, p) = writer(dir, FACETS[2])?;
    w.write_record([
        "year",
        "day",
        "hour",
        "base_demand_mw",
        "draw_mw",
        "demand_mw",
        "dispatched_mw",
        "unserved_mw",
        "clearing_price",
        "settlement_price",
    ])?;
    for y in &result.years {
        for s in &y.segments {
            w.write_record([
                y.year.to_string(),
                s.day.to_string(),
                s.hour.to_string(),
                s.base_demand_mw.to_string(),
                s.draw_mw.to_string(),
                s.demand_mw.to_string(),
                s.dispatched_mw.to_string(),
                s.unserved_mw.to_string(),
                s.clearing_price.to_string(),
                s.settlement_price.to_string(),
            ])?;
        }
    }
    w.flush()?;
    paths.push(p);

    let (mut w, p) = writer(dir, FACETS[3])?;
    w.write_record([
        "year",
        "carbon_price",
        "carbon_t",
        "unserved_mwh",
        "value_of_lost_load",
        "revenue_cents",
        "cost_cents",
        "capex_cents",
        "cash_change_cents",
    ])?;
    for y in &result.years {
        let change: i64 = y.cash_end_cents.iter().sum::<i64>() - y.cash_start_cents.iter().sum::<i64>();
        w.write_record([
            y.year.to_string(),
            y.carbon_price.to_string(),
            y.carbon_t.to_string(),
            y.unserved_mwh.to_string(),
            y.value_of_lost_load.to_string(),
            y.revenue_cents.to_string(),
            y.cost_cents.to_string(),
            y.capex_cents.to_string(),
            change.to_string(),
        ])?;
    }
    w.flush()?;
    paths.push(p);
    Ok(paths)
}

fn sweep_header() -> Vec<String> {
    let mut h = vec!["label".to_string(), "sigma_mw".into(), "runs".into()];
    for t in Technology::ALL {
        h.push(format!("mean_{t}_mwh"));
        h.push(format!("sd_{t}_mwh"));
    }
    h.extend(["mean_carbon_t", "relative_carbon", "mean_unserved_mwh"].map(String::from));
    h
}

fn sweep_record(r: &SweepRow) -> Vec<String> {
    let mut v = vec![r.label.clone(), r.sigma_mw.map(|s| s.to_string()).unwrap_or_default(), r.runs.to_string()];
    for t in Technology::ALL {
        v.push(r.mean_dispatch_mwh[&t].to_string());
        v.push(r.sd_dispatch_mwh[&t].to_string());
    }
    v.push(r.mean_carbon_t.to_string());
    v.push(r.relative_carbon.to_string());
    v.push(r.mean_unserved_mwh.to_string());
    v
}

/// `sweep.csv` holds one row per perturbation; the control row goes to
/// `sweep_baseline.csv`.
pub fn write_sweep_facets(table: &SweepTable, dir: &Path) -> Result<Vec<PathBuf>, MarketError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, rows) in
        [("sweep.csv", table.rows.iter().collect::<Vec<_>>()), ("sweep_baseline.csv", vec![&table.baseline])]
    {
        let (mut w, p) = writer(dir, name)?;
        w.write_record(sweep_header())?;
        for r in rows {
            w.write_record(sweep_record(r))?;
        }
        w.flush()?;
        paths.push(p);
    }
    Ok(paths)
}
