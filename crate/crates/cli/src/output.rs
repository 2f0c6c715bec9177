use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gridcast::manifest::RunManifest;

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating `{}`", dir.display()))
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing `{}`", path.display()))
}

/// Writes `<command>.manifest.json` into `dir`, listing outputs relative
/// to it.
pub fn write_manifest(dir: &Path, command: &str, seed: Option<u64>, config: &[u8], outputs: &[PathBuf]) -> Result<()> {
    let rel = outputs.iter().map(|p| p.strip_prefix(dir).unwrap_or(p).to_string_lossy().replace('\\', "/")).collect();
    let path = dir.join(format!("{command}.manifest.json"));
    RunManifest::new(command, seed, config, rel).write(&path).with_context(|| format!("writing `{}`", path.display()))
}

/// Rows of a headed CSV keyed by column name.
pub fn read_table(path: &Path) -> Result<Vec<BTreeMap<String, String>>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading `{}`", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    r.records()
        .map(|rec| {
            let rec = rec.with_context(|| format!("reading `{}`", path.display()))?;
            Ok(header.iter().cloned().zip(rec.iter().map(String::from)).collect())
        })
        .collect()
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
