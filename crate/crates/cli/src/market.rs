use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gridcast::market::{
    distribution_sweep, run_simulation, sensitivity_sweep, write_simulation_facets, write_sweep_facets, Perturbation,
    Scenario, SweepTable, Technology,
};
use gridcast::residuals::{fit_all, ResidualDistribution};

use crate::config::{field_error, RunConfig};
use crate::output::{create_dir, csv_writer, fmt_opt, read_table, write_manifest};

fn read_residuals(path: &Path) -> Result<Vec<f64>> {
    let rows = read_table(path)?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let v = r.get("residual").with_context(|| format!("`{}` has no `residual` column", path.display()))?;
            v.trim().parse::<f64>().with_context(|| format!("`{}` row {}: bad residual `{v}`", path.display(), i + 2))
        })
        .collect()
}

pub fn fit_residuals(cfg: &RunConfig) -> Result<String> {
    let families = cfg.residual_families()?;
    let input = cfg
        .residuals
        .input
        .as_ref()
        .ok_or_else(|| field_error("residuals.input", "no residual file given (use --residuals)"))?;
    if !input.exists() {
        bail!(field_error("residuals.input", format!("path `{}` does not exist", input.display())));
    }
    let residuals = read_residuals(input)?;
    let fits = fit_all(&residuals, &families, cfg.residuals.bin_rule)?;

    let sse = |d: &ResidualDistribution| d.sse.unwrap_or(f64::INFINITY);
    let mut ranked: Vec<_> = fits.iter().collect();
    ranked.sort_by(|(fa, a), (fb, b)| match (a, b) {
        (Ok(a), Ok(b)) => {
            sse(a).total_cmp(&sse(b)).then(a.n_params().cmp(&b.n_params())).then(fa.name().cmp(fb.name()))
        }
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => fa.name().cmp(fb.name()),
    });
    let best = match ranked.first() {
        Some((_, Ok(d))) => d.clone(),
        _ => bail!("every family failed to fit"),
    };

    let out = &cfg.output.dir;
    create_dir(out)?;
    let table = out.join("family_sse.csv");
    let mut w = csv_writer(&table)?;
    w.write_record([
        "rank",
        "family",
        "status",
        "sse",
        "log_likelihood",
        "n_params",
        "params",
        "converged",
        "n_bins",
        "reason",
    ])?;
    for (i, (family, r)) in ranked.iter().enumerate() {
        match r {
            Ok(d) => {
                let params: Vec<String> =
                    family.param_names().iter().zip(&d.params).map(|(n, v)| format!("{n}={v}")).collect();
                w.write_record([
                    (i + 1).to_string(),
                    family.name().to_string(),
                    "ok".into(),
                    fmt_opt(d.sse),
                    fmt_opt(d.log_likelihood),
                    d.n_params().to_string(),
                    params.join(";"),
                    d.converged.to_string(),
                    d.n_bins.to_string(),
                    String::new(),
                ])?;
            }
            Err(e) => {
                w.write_record([
                    (i + 1).to_string(),
                    family.name().to_string(),
                    "failed".into(),
                    String::new(),
                    String::new(),
                    family.n_params().to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    let dist_path = out.join("distribution.json");
    best.save(&dist_path)?;

    let extra = serde_json::json!({ "residuals": residuals });
    write_manifest(out, "fit-residuals", None, &cfg.hash_bytes(&extra), &[table, dist_path])?;
    Ok(format!(
        "fit-residuals: best {} of {} families on {} residuals (SSE {:.3e})",
        best.family,
        families.len(),
        residuals.len(),
        sse(&best)
    ))
}

fn load_scenario(cfg: &RunConfig) -> Result<Scenario> {
    let mut s = match &cfg.simulate.scenario {
        Some(p) => Scenario::load(p).with_context(|| format!("loading scenario `{}`", p.display()))?,
        None => Scenario::default_scenario(),
    };
    if let Some(y) = cfg.simulate.start_year {
        s.start_year = y;
    }
    if let Some(y) = cfg.simulate.end_year {
        s.end_year = y;
    }
    s.validate().map_err(|e| field_error("simulate.scenario", e))?;
    Ok(s)
}

fn load_distribution(path: &Path) -> Result<ResidualDistribution> {
    ResidualDistribution::load(path).with_context(|| format!("loading distribution `{}`", path.display()))
}

pub fn simulate(cfg: &RunConfig) -> Result<String> {
    cfg.validate_simulate()?;
    let scenario = load_scenario(cfg)?;
    let s = &cfg.simulate;
    let perturbation = match (&s.distribution, s.normal_sd_mw) {
        (Some(p), _) => Perturbation::Distribution(load_distribution(p)?),
        (None, Some(sd)) => Perturbation::normal(sd)?,
        (None, None) => Perturbation::None,
    };
    let result = run_simulation(&scenario, &perturbation, s.seed)?;

    let out = &cfg.output.dir;
    let paths = write_simulation_facets(&result, out)?;
    let extra = serde_json::json!({ "scenario": scenario, "perturbation": perturbation });
    write_manifest(out, "simulate", Some(s.seed), &cfg.hash_bytes(&extra), &paths)?;
    let invested: f64 = result.invested_mw.values().sum();
    Ok(format!(
        "simulate: {} years, mean carbon {:.0} t/yr, {:.0} MW invested, {:.0} MWh unserved",
        result.years.len(),
        result.mean_carbon_t,
        invested,
        result.unserved_mwh
    ))
}

fn write_seed_table(table: &SweepTable, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["label", "sigma_mw", "seed", "technology", "mean_dispatch_mwh"])?;
    for row in std::iter::once(&table.baseline).chain(&table.rows) {
        for (seed, mix) in &row.seed_dispatch_mwh {
            for t in Technology::ALL {
                w.write_record([
                    row.label.clone(),
                    fmt_opt(row.sigma_mw),
                    seed.to_string(),
                    t.to_string(),
                    mix[&t].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn sensitivity(cfg: &RunConfig) -> Result<String> {
    cfg.validate_sweep()?;
    let scenario = load_scenario(cfg)?;
    let s = &cfg.simulate;
    let (table, extra) = if s.distributions.is_empty() {
        let t = sensitivity_sweep(&scenario, &s.sigmas_mw, &s.sweep_seeds)?;
        (t, serde_json::json!({ "scenario": scenario }))
    } else {
        let cases = s
            .distributions
            .iter()
            .map(|(label, p)| Ok((label.clone(), Perturbation::Distribution(load_distribution(p)?))))
            .collect::<Result<Vec<_>>>()?;
        let t = distribution_sweep(&scenario, &cases, &s.sweep_seeds)?;
        let dists: Vec<_> = cases.iter().map(|(l, p)| (l.clone(), p.clone())).collect();
        (t, serde_json::json!({ "scenario": scenario, "distributions": dists }))
    };

    let out = &cfg.output.dir;
    let mut paths: Vec<PathBuf> = write_sweep_facets(&table, out)?;
    let seeds_path = out.join("sweep_seeds.csv");
    write_seed_table(&table, &seeds_path)?;
    paths.push(seeds_path);
    write_manifest(out, "sensitivity", None, &cfg.hash_bytes(&extra), &paths)?;
    Ok(format!(
        "sensitivity: {} rows x {} seeds against baseline `{}`",
        table.rows.len(),
        table.seeds.len(),
        table.baseline.label
    ))
}
