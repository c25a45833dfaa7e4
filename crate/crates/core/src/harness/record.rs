//! Result records and their file formats.
//!
//! Results CSV columns, in order:
//! `experiment,kind,learner,params,dataset,n,sensitivity_p,x,fold,train_size,`
//! `sample_f,sample_precision,sample_recall,macro_f,wall_time,status,error,`
//! `seed_master,seed_lexicon,seed_objects,seed_folds,seed_learner`.
//! Metric cells are empty for failed cells. The JSON-lines file holds the
//! same records, one object per line.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeedSet {
    pub master: u64,
    pub lexicon: u64,
    pub objects: u64,
    pub folds: u64,
    pub learner: u64,
}

/// One evaluated cell: a learner on one fold at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub kind: String,
    /// Family name, or `Baseline` for the constant predictor.
    pub learner: String,
    pub params: String,
    pub dataset: String,
    pub n: usize,
    pub sensitivity_p: f64,
    /// Value of the swept quantity (n, p or checkpoint); 0 when nothing is swept.
    pub x: f64,
    pub fold: usize,
    pub train_size: usize,
    pub sample_f: Option<f64>,
    pub sample_precision: Option<f64>,
    pub sample_recall: Option<f64>,
    pub macro_f: Option<f64>,
    pub wall_time: f64,
    pub status: CellStatus,
    pub error: Option<String>,
    pub seeds: SeedSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

impl ResultRecord {
    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }

    /// Label used to group records: learner name plus parameters.
    pub fn learner_key(&self) -> String {
        if self.params.is_empty() {
            self.learner.clone()
        } else {
            format!("{}[{}]", self.learner, self.params)
        }
    }

    /// Record with `wall_time` zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> ResultRecord {
        ResultRecord {
            wall_time: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    experiment: String,
    kind: String,
    learner: String,
    params: String,
    dataset: String,
    n: usize,
    sensitivity_p: f64,
    x: f64,
    fold: usize,
    train_size: usize,
    sample_f: Option<f64>,
    sample_precision: Option<f64>,
    sample_recall: Option<f64>,
    macro_f: Option<f64>,
    wall_time: f64,
    status: CellStatus,
    error: Option<String>,
    seed_master: u64,
    seed_lexicon: u64,
    seed_objects: u64,
    seed_folds: u64,
    seed_learner: u64,
}

impl From<&ResultRecord> for CsvRow {
    fn from(r: &ResultRecord) -> Self {
        CsvRow {
            experiment: r.experiment.clone(),
            kind: r.kind.clone(),
            learner: r.learner.clone(),
            params: r.params.clone(),
            dataset: r.dataset.clone(),
            n: r.n,
            sensitivity_p: r.sensitivity_p,
            x: r.x,
            fold: r.fold,
            train_size: r.train_size,
            sample_f: r.sample_f,
            sample_precision: r.sample_precision,
            sample_recall: r.sample_recall,
            macro_f: r.macro_f,
            wall_time: r.wall_time,
            status: r.status,
            error: r.error.clone(),
            seed_master: r.seeds.master,
            seed_lexicon: r.seeds.lexicon,
            seed_objects: r.seeds.objects,
            seed_folds: r.seeds.folds,
            seed_learner: r.seeds.learner,
        }
    }
}

impl From<CsvRow> for ResultRecord {
    fn from(r: CsvRow) -> Self {
        ResultRecord {
            experiment: r.experiment,
            kind: r.kind,
            learner: r.learner,
            params: r.params,
            dataset: r.dataset,
            n: r.n,
            sensitivity_p: r.sensitivity_p,
            x: r.x,
            fold: r.fold,
            train_size: r.train_size,
            sample_f: r.sample_f,
            sample_precision: r.sample_precision,
            sample_recall: r.sample_recall,
            macro_f: r.macro_f,
            wall_time: r.wall_time,
            status: r.status,
            error: r.error,
            seeds: SeedSet {
                master: r.seed_master,
                lexicon: r.seed_lexicon,
                objects: r.seed_objects,
                folds: r.seed_folds,
                learner: r.seed_learner,
            },
        }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.display().to_string(),
            line: 0,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

pub fn write_results_csv(path: &Path, records: &[ResultRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in records {
        w.serialize(CsvRow::from(r)).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize::<CsvRow>()
        .map(|row| row.map(ResultRecord::from).map_err(|e| csv_err(path, e)))
        .collect()
}

pub fn write_results_jsonl(path: &Path, records: &[ResultRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results_jsonl(path: &Path) -> Result<Vec<ResultRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Mean scores of one learner at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub learner: String,
    pub params: String,
    pub x: f64,
    pub cells: usize,
    pub failures: usize,
    pub mean_f: Option<f64>,
    pub mean_macro_f: Option<f64>,
    pub mean_train_size: f64,
}

impl SummaryRow {
    pub fn learner_key(&self) -> String {
        if self.params.is_empty() {
            self.learner.clone()
        } else {
            format!("{}[{}]", self.learner, self.params)
        }
    }
}

/// Groups records by (learner, params, x) in first-appearance order and
/// averages the successful cells.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, String, u64)> = Vec::new();
    let mut groups: BTreeMap<(String, String, u64), Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.learner.clone(), r.params.clone(), r.x.to_bits());
        let entry = groups.entry(key.clone()).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rs = &groups[&key];
            let ok: Vec<&&ResultRecord> = rs.iter().filter(|r| r.is_ok()).collect();
            let mean = |f: fn(&ResultRecord) -> Option<f64>| -> Option<f64> {
                let v: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            };
            SummaryRow {
                learner: key.0.clone(),
                params: key.1.clone(),
                x: f64::from_bits(key.2),
                cells: rs.len(),
                failures: rs.len() - ok.len(),
                mean_f: mean(|r| r.sample_f),
                mean_macro_f: mean(|r| r.macro_f),
                mean_train_size: rs.iter().map(|r| r.train_size as f64).sum::<f64>() / rs.len() as f64,
            }
        })
        .collect()
}

/// Tidy curve file: one line per (learner, x) with the mean F.
pub fn write_curve_csv(path: &Path, axis: &str, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["learner", "params", "axis", "x", "sample_f", "macro_f", "cells", "failures"])
        .map_err(|e| csv_err(path, e))?;
    let opt = |v: Option<f64>| v.map(|f| format!("{f:.4}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.learner.clone(),
            r.params.clone(),
            axis.to_string(),
            r.x.to_string(),
            opt(r.mean_f),
            opt(r.mean_macro_f),
            r.cells.to_string(),
            r.failures.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Plain-text table of mean scores, one line per summary row.
pub fn render_summary(rows: &[SummaryRow], axis: Option<&str>) -> String {
    let width = rows.iter().map(|r| r.learner_key().len()).max().unwrap_or(7).max(7);
    let mut out = String::new();
    let head = axis.map(|a| format!(" {a:>10}")).unwrap_or_default();
    out.push_str(&format!("{:<width$}{head} {:>9} {:>9} {:>6}\n", "learner", "sample_f", "macro_f", "cells"));
    for r in rows {
        let x = axis.map(|_| format!(" {:>10}", r.x)).unwrap_or_default();
        let f = |v: Option<f64>| v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "failed".into());
        out.push_str(&format!(
            "{:<width$}{x} {:>9} {:>9} {:>6}\n",
            r.learner_key(),
            f(r.mean_f),
            f(r.mean_macro_f),
            if r.failures > 0 {
                format!("{}!{}", r.cells, r.failures)
            } else {
                r.cells.to_string()
            }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(learner: &str, x: f64, fold: usize, f: Option<f64>) -> ResultRecord {
        ResultRecord {
            experiment: "e".into(),
            kind: "xval".into(),
            learner: learner.into(),
            params: String::new(),
            dataset: "SIM".into(),
            n: 17,
            sensitivity_p: 0.5,
            x,
            fold,
            train_size: 30,
            sample_f: f,
            sample_precision: f,
            sample_recall: f,
            macro_f: f.map(|v| v / 2.0),
            wall_time: 0.25,
            status: if f.is_some() { CellStatus::Ok } else { CellStatus::Failed },
            error: f.is_none().then(|| "word 3: training diverged, \"x\"".to_string()),
            seeds: SeedSet {
                master: 1,
                lexicon: u64::MAX,
                objects: 3,
                folds: 4,
                learner: 5,
            },
        }
    }

    #[test]
    fn csv_and_jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![record("MLP", 0.0, 0, Some(81.5)), record("KNeighbors", 0.0, 1, None)];
        let csv = dir.path().join("r.csv");
        write_results_csv(&csv, &records).unwrap();
        assert_eq!(read_results_csv(&csv).unwrap(), records);
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("experiment,kind,learner,params,dataset,n,sensitivity_p,x,fold,train_size,sample_f"));
        let jl = dir.path().join("r.jsonl");
        write_results_jsonl(&jl, &records).unwrap();
        assert_eq!(read_results_jsonl(&jl).unwrap(), records);
    }

    #[test]
    fn summary_averages_successful_cells_per_point() {
        let records = vec![
            record("MLP", 10.0, 0, Some(80.0)),
            record("MLP", 10.0, 1, Some(90.0)),
            record("MLP", 100.0, 0, Some(70.0)),
            record("MLP", 100.0, 1, None),
        ];
        let s = summarize(&records);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].mean_f, Some(85.0));
        assert_eq!(s[1].mean_f, Some(70.0));
        assert_eq!((s[1].cells, s[1].failures), (2, 1));
        let table = render_summary(&s, Some("n"));
        assert_eq!(table.lines().count(), 3);
        assert!(table.contains("2!1"));
    }
}
