use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use gridcast::market::Technology;

use crate::config::RunConfig;
use crate::output::{create_dir, csv_writer, read_table, write_manifest};

type Table = Vec<BTreeMap<String, String>>;

fn gather(from: &[PathBuf], name: &str) -> Result<Vec<(PathBuf, Table)>> {
    from.iter().map(|d| d.join(name)).filter(|p| p.exists()).map(|p| Ok((p.clone(), read_table(&p)?))).collect()
}

fn cell<'a>(row: &'a BTreeMap<String, String>, key: &str) -> &'a str {
    row.get(key).map_or("", String::as_str)
}

/// Writes a long-format table and records its path.
fn emit(path: PathBuf, header: &[&str], rows: Vec<Vec<String>>, written: &mut Vec<PathBuf>) -> Result<()> {
    let mut w = csv_writer(&path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    written.push(path);
    Ok(())
}

/// Long-format tables: metric by algorithm, metric by hour, mix and carbon
/// by σ, and mix by forecaster MAE.
pub fn report(cfg: &RunConfig, from: &[PathBuf]) -> Result<String> {
    let out = cfg.output.dir.join("report");
    create_dir(&out)?;
    let mut written = Vec::new();

    let metrics = gather(from, "metrics.csv")?;
    let mut mae_by_algorithm = BTreeMap::new();
    if !metrics.is_empty() {
        let mut rows = Vec::new();
        for (_, t) in &metrics {
            for r in t {
                mae_by_algorithm.insert(cell(r, "algorithm").to_string(), cell(r, "mae").to_string());
                for m in ["mae", "mse", "rmse", "r_squared", "mase"] {
                    rows.push(vec![cell(r, "algorithm").into(), cell(r, "mode").into(), m.into(), cell(r, m).into()]);
                }
            }
        }
        emit(out.join("metric_by_algorithm.csv"), &["algorithm", "mode", "metric", "value"], rows, &mut written)?;
    }

    let hourly = gather(from, "hourly_metrics.csv")?;
    if !hourly.is_empty() {
        let mut rows = Vec::new();
        for (_, t) in &hourly {
            for r in t {
                for m in ["mae", "rmse", "r_squared", "mase"] {
                    rows.push(vec![cell(r, "algorithm").into(), cell(r, "hour").into(), m.into(), cell(r, m).into()]);
                }
            }
        }
        emit(out.join("metric_by_hour.csv"), &["algorithm", "hour", "metric", "value"], rows, &mut written)?;
    }

    let mut sweep_rows: Table = Vec::new();
    for name in ["sweep_baseline.csv", "sweep.csv"] {
        for (_, t) in gather(from, name)? {
            sweep_rows.extend(t);
        }
    }
    let (by_sigma, by_label): (Table, Table) = sweep_rows.into_iter().partition(|r| !cell(r, "sigma_mw").is_empty());
    if !by_sigma.is_empty() {
        let mut mix = Vec::new();
        let mut carbon = Vec::new();
        for r in &by_sigma {
            let sigma = cell(r, "sigma_mw").to_string();
            for t in Technology::ALL {
                mix.push(vec![
                    sigma.clone(),
                    t.to_string(),
                    cell(r, &format!("mean_{t}_mwh")).into(),
                    cell(r, &format!("sd_{t}_mwh")).into(),
                ]);
            }
            carbon.push(vec![sigma, cell(r, "mean_carbon_t").into(), cell(r, "relative_carbon").into()]);
        }
        emit(
            out.join("mix_by_sigma.csv"),
            &["sigma_mw", "technology", "mean_dispatch_mwh", "sd_dispatch_mwh"],
            mix,
            &mut written,
        )?;
        emit(out.join("carbon_by_sigma.csv"), &["sigma_mw", "mean_carbon_t", "relative_carbon"], carbon, &mut written)?;
    }
    if !by_label.is_empty() {
        let mut mix = Vec::new();
        for r in &by_label {
            let label = cell(r, "label");
            let mae = mae_by_algorithm.get(label).cloned().unwrap_or_default();
            for t in Technology::ALL {
                mix.push(vec![label.to_string(), mae.clone(), t.to_string(), cell(r, &format!("mean_{t}_mwh")).into()]);
            }
            mix.push(vec![label.to_string(), mae, "carbon_t".into(), cell(r, "mean_carbon_t").into()]);
        }
        emit(out.join("mix_by_mae.csv"), &["label", "mae", "series", "value"], mix, &mut written)?;
    }

    if written.is_empty() {
        let dirs: Vec<String> = from.iter().map(|d| d.display().to_string()).collect();
        bail!("no metrics.csv, hourly_metrics.csv or sweep tables found in {}", dirs.join(", "));
    }
    let sources: Vec<String> = from.iter().map(|p: &PathBuf| Path::new(p).display().to_string()).collect();
    write_manifest(&out, "report", None, &cfg.hash_bytes(&serde_json::json!({ "from": sources })), &written)?;
    Ok(format!("report: {} table(s) -> {}", written.len(), out.display()))
}
