//! Files written for one experiment run.
//!
//! | file | content |
//! |---|---|
//! | `results.csv` | one [`ResultRecord`] per line |
//! | `results.jsonl` | the same records as JSON lines |
//! | `summary.txt` | mean scores per learner (and sweep value) |
//! | `curve.csv` | sweeps and online runs: mean F per learner and x |
//! | `frequency.csv` | cross-validation: per-word frequency against F |
//! | `tuned_params.conf` | grid search: winning settings as config lines |
//! | `metadata.json` | configuration closure, seeds and dataset metadata |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::render_config;
use crate::data::DatasetMetadata;
use crate::error::{Error, Result};
use crate::rng::RNG_ALGORITHM;

use super::frequency::{frequency_csv, frequency_report};
use super::record::{render_summary, summarize, write_curve_csv, write_results_csv, write_results_jsonl};
use super::run::{tuned_config, ExperimentOutput, BASELINE};
use super::spec::ExperimentKind;

/// Everything needed to regenerate a run's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub experiment: String,
    pub kind: String,
    pub version: String,
    pub rng: String,
    pub master_seed: u64,
    /// The full configuration as `key=value` lines; parsing them reproduces
    /// the experiment.
    pub config: Vec<String>,
    pub datasets: Vec<DatasetMetadata>,
    pub notes: Vec<String>,
}

impl RunMetadata {
    pub fn new(out: &ExperimentOutput) -> Self {
        RunMetadata {
            experiment: out.spec.id.clone(),
            kind: out.spec.kind.as_str().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            rng: RNG_ALGORITHM.to_string(),
            master_seed: out.spec.seed,
            config: render_config(&out.spec),
            datasets: out.datasets.clone(),
            notes: out.notes.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes every output file into `dir`, creating it if needed, and returns
/// the paths written.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let path = |name: &str| dir.join(name);

    write_results_csv(&path("results.csv"), &out.records)?;
    written.push(path("results.csv"));
    write_results_jsonl(&path("results.jsonl"), &out.records)?;
    written.push(path("results.jsonl"));

    let axis = out.spec.kind.axis();
    let summary = summarize(&out.records);
    let table = render_summary(&summary, axis);
    std::fs::write(path("summary.txt"), &table).map_err(|e| Error::io(path("summary.txt"), e))?;
    written.push(path("summary.txt"));
    if let Some(axis) = axis {
        write_curve_csv(&path("curve.csv"), axis, &summary)?;
        written.push(path("curve.csv"));
    }

    if out.spec.kind == ExperimentKind::Xval {
        let mut reports = Vec::new();
        for row in summary.iter().filter(|r| r.learner != BASELINE) {
            let evals = out.reports_for(&row.learner_key());
            if !evals.is_empty() {
                reports.push((row.learner_key(), frequency_report(&evals)?));
            }
        }
        if !reports.is_empty() {
            std::fs::write(path("frequency.csv"), frequency_csv(&reports))
                .map_err(|e| Error::io(path("frequency.csv"), e))?;
            written.push(path("frequency.csv"));
        }
    }

    if out.spec.kind == ExperimentKind::GridSearch {
        let conf = tuned_config(&out.grid);
        std::fs::write(path("tuned_params.conf"), conf).map_err(|e| Error::io(path("tuned_params.conf"), e))?;
        written.push(path("tuned_params.conf"));
    }

    let meta = serde_json::to_string_pretty(&RunMetadata::new(out))?;
    std::fs::write(path("metadata.json"), meta + "\n").map_err(|e| Error::io(path("metadata.json"), e))?;
    written.push(path("metadata.json"));
    Ok(written)
}
