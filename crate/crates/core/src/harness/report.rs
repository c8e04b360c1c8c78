//! Merged tables written after a grid has finished.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::cascade::RegionLog;
use crate::error::{Error, Result};

use super::metrics::{normalize_losses, NormalizedLoss};
use super::record::RunRecord;
use super::runner::RECORD_DIR;

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

fn write_row<I, S>(writer: &mut csv::Writer<Vec<u8>>, row: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    writer
        .write_record(row)
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

/// Orders records by function, setting, algorithm and seed.
pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        a.group_key()
            .cmp(&b.group_key())
            .then_with(|| a.algorithm.cmp(&b.algorithm))
            .then_with(|| a.seed.cmp(&b.seed))
    });
}

/// Reads every per-cell record under `dir/records`.
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let record_dir = dir.join(RECORD_DIR);
    let mut paths: Vec<PathBuf> = fs::read_dir(&record_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut records = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(&path)?;
        let record = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.clone(),
            line: e.line() as u64,
            msg: e.to_string(),
        })?;
        records.push(record);
    }
    sort_records(&mut records);
    Ok(records)
}

pub const RECORD_COLUMNS: [&str; 21] = [
    "function",
    "group",
    "algorithm",
    "seed",
    "instance",
    "dim",
    "budget",
    "k",
    "d_min",
    "method",
    "center_strategy",
    "complete",
    "failed",
    "evaluations",
    "restarts",
    "leader_loss",
    "mean_loss",
    "batch_losses",
    "cpu_seconds",
    "selection_seconds",
    "error",
];

pub fn records_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_row(&mut w, RECORD_COLUMNS)?;
    for r in records {
        write_row(
            &mut w,
            [
                r.function.clone(),
                r.group.clone(),
                r.algorithm.clone(),
                r.seed.to_string(),
                r.instance.to_string(),
                r.dim.to_string(),
                r.budget.to_string(),
                r.k.to_string(),
                r.d_min.to_string(),
                r.method.to_string(),
                r.center_strategy.map(|c| c.to_string()).unwrap_or_default(),
                r.complete.to_string(),
                r.failed.to_string(),
                r.evaluations.to_string(),
                r.restarts.map(|v| v.to_string()).unwrap_or_default(),
                opt(r.leader_loss),
                opt(r.mean_loss()),
                join(&r.batch_losses),
                r.cpu_seconds.to_string(),
                r.selection_seconds.to_string(),
                r.error.clone().unwrap_or_default(),
            ],
        )?;
    }
    finish(w)
}

pub fn normalized_csv(rows: &[NormalizedLoss]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_row(
        &mut w,
        [
            "function",
            "algorithm",
            "seed",
            "dim",
            "budget",
            "k",
            "d_min",
            "complete",
            "mean_loss",
            "normalized",
        ],
    )?;
    for r in rows {
        write_row(
            &mut w,
            [
                r.function.clone(),
                r.algorithm.clone(),
                r.seed.to_string(),
                r.dim.to_string(),
                r.budget.to_string(),
                r.k.to_string(),
                r.d_min.to_string(),
                r.complete.to_string(),
                opt(r.mean_loss),
                opt(r.normalized),
            ],
        )?;
    }
    finish(w)
}

/// Per function, setting and algorithm: the seed-mean cumulative average
/// loss curve and the seed-mean ranked loss curve, over complete runs only.
/// When no run is complete the value columns stay empty.
pub fn export_plot_data(records: &[RunRecord]) -> Result<String> {
    let width = records.iter().map(|r| r.k).max().unwrap_or(0);
    let mut groups: BTreeMap<(String, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.group_key(), r.algorithm.clone()))
            .or_default()
            .push(r);
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "function",
        "algorithm",
        "dim",
        "budget",
        "k",
        "d_min",
        "series",
        "n_runs",
        "n_complete",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    header.extend((1..=width).map(|i| format!("v{i}")));
    write_row(&mut w, &header)?;

    for members in groups.values() {
        let first = members[0];
        let complete: Vec<&&RunRecord> = members.iter().filter(|r| r.complete).collect();
        for (series, pick) in [("cum_avg", 0usize), ("ranked", 1)] {
            let mut row = vec![
                first.function.clone(),
                first.algorithm.clone(),
                first.dim.to_string(),
                first.budget.to_string(),
                first.k.to_string(),
                first.d_min.to_string(),
                series.to_string(),
                members.len().to_string(),
                complete.len().to_string(),
            ];
            for i in 0..width {
                let values: Vec<f64> = complete
                    .iter()
                    .filter_map(|r| {
                        if pick == 0 {
                            r.cum_avg.get(i)
                        } else {
                            r.batch_losses.get(i)
                        }
                    })
                    .copied()
                    .collect();
                if values.is_empty() || values.len() < complete.len() {
                    row.push(String::new());
                } else {
                    row.push((values.iter().sum::<f64>() / values.len() as f64).to_string());
                }
            }
            write_row(&mut w, &row)?;
        }
    }
    finish(w)
}

/// Tabu centers at the given fractions of the budget, one row per instance.
pub fn region_snapshots_csv(log: &RegionLog, budget: usize, fractions: &[f64]) -> Result<String> {
    let dim = log.entries.first().map_or(0, |e| e.center.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "fraction",
        "eval_limit",
        "generation",
        "instance",
        "rank",
        "radius",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    header.extend((0..dim).map(|j| format!("c{j}")));
    header.push("active".into());
    write_row(&mut w, &header)?;
    for &fraction in fractions {
        let limit = (fraction * budget as f64).floor() as usize;
        for e in log.centers_at(limit) {
            let mut row = vec![
                fraction.to_string(),
                limit.to_string(),
                e.generation.to_string(),
                e.instance.to_string(),
                e.rank.to_string(),
                log.d_min.to_string(),
            ];
            row.extend(e.center.iter().map(f64::to_string));
            row.push(e.active.to_string());
            write_row(&mut w, &row)?;
        }
    }
    finish(w)
}

/// Paths of the files written by [`write_report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub records: PathBuf,
    pub normalized: PathBuf,
    pub curves: PathBuf,
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

/// Merges the records of `in_dir` into `out` plus `<stem>_normalized.csv`
/// and `<stem>_curves.csv` next to it.
pub fn write_report(in_dir: &Path, out: &Path) -> Result<(ReportFiles, Vec<RunRecord>)> {
    let records = load_records(in_dir)?;
    let files = ReportFiles {
        records: out.to_path_buf(),
        normalized: sibling(out, "normalized"),
        curves: sibling(out, "curves"),
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&files.records, records_csv(&records)?)?;
    fs::write(
        &files.normalized,
        normalized_csv(&normalize_losses(&records))?,
    )?;
    fs::write(&files.curves, export_plot_data(&records)?)?;
    Ok((files, records))
}
