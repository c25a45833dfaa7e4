//! CSV and metadata files.
//!
//! Features: UTF-8 CSV, header `f0,...,f{n-1}`, one object per line.
//! Labels: header `word_ids`, then one line per object holding its word ids
//! separated by single spaces (an empty line is an empty set).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{LinearScaler, ObjectMatrix, SourceTag};
use crate::error::{Error, Result};
use crate::tutor::WordSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub source_tag: SourceTag,
    pub rows: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<LinearScaler>,
    pub seeds: BTreeMap<String, u64>,
    pub rng: String,
    /// True when the data is a synthetic stand-in for grounded data.
    #[serde(default)]
    pub proxy: bool,
    /// Configuration that regenerates the files, one `key=value` per entry.
    #[serde(default)]
    pub config: Vec<String>,
}

impl DatasetMetadata {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn write_features_csv(path: &Path, x: &ObjectMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    let header: Vec<String> = (0..x.n()).map(|j| format!("f{j}")).collect();
    w.write_record(&header).map_err(|e| csv_io(path, e))?;
    let mut buf = Vec::with_capacity(x.n());
    for row in x.values.outer_iter() {
        buf.clear();
        buf.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&buf).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Serde(format!("{}: {other:?}", path.display())),
    }
}

/// Reads a features CSV without rescaling.
pub fn read_features_csv(path: &Path, source: SourceTag) -> Result<ObjectMatrix> {
    let name = path.display().to_string();
    let perr = |line: usize, column: usize, message: String| Error::Parse {
        path: name.clone(),
        line,
        column,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    let n = rdr.headers().map_err(|e| perr(1, 1, e.to_string()))?.len();
    if n == 0 {
        return Err(perr(1, 1, "empty header".into()));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            perr(line, 1, e.to_string())
        })?;
        let line = rec.position().map_or(rows + 2, |p| p.line() as usize);
        if rec.len() != n {
            return Err(perr(line, rec.len().min(n) + 1, format!("expected {n} columns, found {}", rec.len())));
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| perr(line, j + 1, format!("non-numeric cell `{cell}`")))?;
            if !v.is_finite() {
                return Err(perr(line, j + 1, format!("non-finite cell `{cell}`")));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(perr(2, 1, "no data rows".into()));
    }
    let values = Array2::from_shape_vec((rows, n), values).map_err(|e| Error::shape(e.to_string()))?;
    ObjectMatrix::new(values, source)
}

pub fn write_labels_csv(path: &Path, labels: &[WordSet]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "word_ids").map_err(io)?;
    for set in labels {
        let line: Vec<String> = set.ids().iter().map(usize::to_string).collect();
        writeln!(w, "{}", line.join(" ")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<WordSet>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "word_ids" => {}
        _ => {
            return Err(Error::Parse {
                path: name,
                line: 1,
                column: 1,
                message: "expected header `word_ids`".into(),
            })
        }
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| Error::Parse {
                        path: name.clone(),
                        line: i + 2,
                        column: 1,
                        message: format!("bad word id `{tok}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(WordSet::new)
        })
        .collect()
}

/// Grounded feature data: one view, or two aligned views of the same objects.
#[derive(Debug, Clone, PartialEq)]
pub enum Grounded {
    Single {
        objects: ObjectMatrix,
        scaler: LinearScaler,
    },
    Paired {
        tutor_view: ObjectMatrix,
        learner_view: ObjectMatrix,
        scalers: (LinearScaler, LinearScaler),
    },
}

/// Loads one or two grounded feature files, rescaling each column to `[0,1]`
/// with its full-dataset min/max.
pub fn load_grounded(features: &Path, second: Option<&Path>) -> Result<Grounded> {
    let rescale = |m: ObjectMatrix| -> Result<(ObjectMatrix, LinearScaler)> {
        let scaler = LinearScaler::fit(m.view())?;
        let values = scaler.transform(m.view())?;
        Ok((ObjectMatrix::new(values, m.source)?, scaler))
    };
    match second {
        None => {
            let (objects, scaler) = rescale(read_features_csv(features, SourceTag::Gro1)?)?;
            Ok(Grounded::Single { objects, scaler })
        }
        Some(second) => {
            let a = read_features_csv(features, SourceTag::Gro2Tutor)?;
            let b = read_features_csv(second, SourceTag::Gro2Learner)?;
            if a.values.dim() != b.values.dim() {
                return Err(Error::shape(format!(
                    "paired views differ in shape: {:?} vs {:?}",
                    a.values.dim(),
                    b.values.dim()
                )));
            }
            let (tutor_view, sa) = rescale(a)?;
            let (learner_view, sb) = rescale(b)?;
            Ok(Grounded::Paired {
                tutor_view,
                learner_view,
                scalers: (sa, sb),
            })
        }
    }
}
