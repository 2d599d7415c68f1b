//! `report`: check a run's digests and summarize its CSVs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use ucplab::interpolation::signed_band;

use crate::run::{digest, load_manifest, RunDir};

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub dir: PathBuf,
    pub run_id: String,
    pub command: String,
    /// Outputs whose digest no longer matches the manifest.
    pub modified: Vec<String>,
    pub failures: usize,
    /// Tables that no longer parse.
    pub unreadable: Vec<String>,
    pub tables: BTreeMap<String, TableSummary>,
}

#[derive(Debug, Serialize)]
pub struct TableSummary {
    pub rows: usize,
    pub columns: Vec<String>,
    /// Per-λ mean of `C_per_lambda` and its signed band, for three-ball tables.
    pub c_per_lambda: Option<(Vec<(f64, f64)>, f64)>,
    /// Distinct `C_hat` values, for vanishing tables.
    pub c_hat: Option<Vec<f64>>,
    /// Last `alpha_n` and `n`, for schedule tables.
    pub last_alpha: Option<(usize, f64)>,
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

fn summarize(path: &Path) -> Result<TableSummary> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    let records: Vec<csv::StringRecord> = r.records().collect::<Result<_, _>>()?;
    let values = |name: &str| -> Option<Vec<f64>> {
        let k = column(&headers, name)?;
        Some(records.iter().filter_map(|rec| rec.get(k)?.parse().ok()).collect())
    };
    let c_per_lambda = match (values("lambda"), values("C_per_lambda")) {
        (Some(l), Some(c)) if !c.is_empty() => {
            let mut by: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
            for (li, ci) in l.iter().zip(&c) {
                by.entry(li.to_bits()).or_default().push(*ci);
            }
            let means = by.into_iter().map(|(k, v)| (f64::from_bits(k), v.iter().sum::<f64>() / v.len() as f64)).collect();
            Some((means, signed_band(&c)))
        }
        _ => None,
    };
    let c_hat = values("C_hat").map(|mut v| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    });
    let last_alpha = match (values("n"), values("alpha_n")) {
        (Some(n), Some(a)) if column(&headers, "S_n").is_some() => n.last().zip(a.last()).map(|(&n, &a)| (n as usize, a)),
        _ => None,
    };
    Ok(TableSummary { rows: records.len(), columns: headers.iter().map(String::from).collect(), c_per_lambda, c_hat, last_alpha })
}

pub fn report_one(dir: &Path) -> Result<RunReport> {
    let m = load_manifest(dir)?;
    let mut modified = vec![];
    let mut tables = BTreeMap::new();
    let mut unreadable = vec![];
    for out in &m.outputs {
        let path = dir.join(&out.path);
        match digest(&path) {
            Ok(d) if d.sha256 == out.sha256 => {}
            _ => modified.push(out.path.clone()),
        }
        if out.path.ends_with(".csv") && path.exists() {
            match summarize(&path) {
                Ok(t) => {
                    tables.insert(out.path.clone(), t);
                }
                Err(_) => unreadable.push(out.path.clone()),
            }
        }
    }
    Ok(RunReport { dir: dir.to_path_buf(), run_id: m.run_id, command: m.command, modified, failures: m.failures.len(), unreadable, tables })
}

pub fn report(run: &mut RunDir, dirs: &[PathBuf]) -> Result<Vec<RunReport>> {
    let reports = dirs.iter().map(|d| report_one(d)).collect::<Result<Vec<_>>>()?;
    for d in dirs {
        run.input(&d.join(crate::run::MANIFEST));
    }
    run.write_json("report.json", &reports)?;
    Ok(reports)
}
