use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{Family, LearnerSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Xval,
    DimsSweep,
    SensitivitySweep,
    Online,
    GridSearch,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Xval => "xval",
            ExperimentKind::DimsSweep => "dims_sweep",
            ExperimentKind::SensitivitySweep => "sensitivity_sweep",
            ExperimentKind::Online => "online",
            ExperimentKind::GridSearch => "grid_search",
        }
    }

    /// Name of the swept quantity, if any.
    pub fn axis(self) -> Option<&'static str> {
        match self {
            ExperimentKind::DimsSweep => Some("n"),
            ExperimentKind::SensitivitySweep => Some("p"),
            ExperimentKind::Online => Some("checkpoint"),
            _ => None,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "xval" => ExperimentKind::Xval,
            "dims_sweep" => ExperimentKind::DimsSweep,
            "sensitivity_sweep" => ExperimentKind::SensitivitySweep,
            "online" => ExperimentKind::Online,
            "grid_search" => ExperimentKind::GridSearch,
            other => return Err(Error::Config(format!("unknown experiment kind `{other}`"))),
        })
    }
}

/// Where the objects come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Uniform objects labeled by a fresh tutor.
    Sim,
    /// Same generator as `Sim` with independent seeds.
    SimDevelop,
    /// Gaussian blobs labeled by a fresh tutor.
    Clustered,
    /// Clustered objects seen by the tutor; the learner sees a noisy copy.
    PairedProxy,
    /// Features (and optionally labels) read from CSV files.
    Files,
}

impl DataSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            DataSource::Sim => "sim",
            DataSource::SimDevelop => "sim-develop",
            DataSource::Clustered => "clustered",
            DataSource::PairedProxy => "paired-proxy",
            DataSource::Files => "files",
        }
    }

    pub fn is_simulated(&self) -> bool {
        !matches!(self, DataSource::Files)
    }
}

impl FromStr for DataSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "sim" => DataSource::Sim,
            "sim-develop" => DataSource::SimDevelop,
            "clustered" => DataSource::Clustered,
            "paired-proxy" => DataSource::PairedProxy,
            "files" => DataSource::Files,
            other => return Err(Error::Config(format!("unknown data source `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub source: DataSource,
    pub rows: usize,
    pub n: usize,
    pub clusters: usize,
    pub spread: f64,
    /// Learner-view noise for `PairedProxy`.
    pub noise: f64,
    pub features: Option<PathBuf>,
    /// Second view: tutor labels come from `features`, learners see this.
    pub learner_features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            source: DataSource::Sim,
            rows: 4532,
            n: 17,
            clusters: 20,
            spread: 0.05,
            noise: 0.05,
            features: None,
            learner_features: None,
            labels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TutorConfig {
    pub m: usize,
    pub k: usize,
    pub sensitivity_p: f64,
    /// Fixed lexicon seed; derived from the master seed when absent.
    pub seed: Option<u64>,
}

impl Default for TutorConfig {
    fn default() -> Self {
        TutorConfig {
            m: 100,
            k: 5,
            sensitivity_p: 0.5,
            seed: None,
        }
    }
}

/// An online checkpoint: a training prefix length or the whole training fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Checkpoint {
    Rows(usize),
    All,
}

impl Checkpoint {
    pub fn resolve(self, train_rows: usize) -> usize {
        match self {
            Checkpoint::Rows(r) => r,
            Checkpoint::All => train_rows,
        }
    }
}

impl fmt::Display for Checkpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Checkpoint::Rows(r) => write!(f, "{r}"),
            Checkpoint::All => f.write_str("all"),
        }
    }
}

impl FromStr for Checkpoint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(Checkpoint::All),
            v => v
                .parse()
                .map(Checkpoint::Rows)
                .map_err(|_| Error::Config(format!("bad checkpoint `{v}`"))),
        }
    }
}

/// Hyperparameter grid for one family: every combination of the axis values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub base: LearnerSpec,
    pub axes: Vec<(String, Vec<String>)>,
}

pub const MAX_GRID_CELLS: usize = 32;

impl GridSpec {
    pub fn new(base: LearnerSpec) -> Self {
        GridSpec { base, axes: Vec::new() }
    }

    pub fn axis(mut self, key: &str, values: &[&str]) -> Self {
        self.axes.push((key.to_string(), values.iter().map(|v| v.to_string()).collect()));
        self
    }

    pub fn family(&self) -> Family {
        self.base.family
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    /// Every grid cell in row-major order, the last axis varying fastest.
    pub fn cells(&self) -> Result<Vec<LearnerSpec>> {
        let mut out = vec![self.base.clone()];
        for (key, values) in &self.axes {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for spec in &out {
                for v in values {
                    let mut s = spec.clone();
                    s.set(key, v)?;
                    next.push(s);
                }
            }
            out = next;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub id: String,
    pub kind: ExperimentKind,
    pub dataset: DatasetConfig,
    pub tutor: TutorConfig,
    pub learners: Vec<LearnerSpec>,
    pub folds: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    pub workers: usize,
    /// Adds the constant most-frequent-words predictor to every evaluation.
    pub baseline: bool,
    pub dims: Vec<usize>,
    pub sensitivities: Vec<f64>,
    /// Training rows kept per fold at a given `n` in the dimension sweep.
    pub train_caps: BTreeMap<usize, usize>,
    pub checkpoints: Vec<Checkpoint>,
    /// How many folds the online experiment evaluates.
    pub online_folds: usize,
    pub grids: Vec<GridSpec>,
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    /// Standard parameters: 4532 uniform objects, n=17, 100 words, k=5,
    /// p=0.5, 4 folds. The sensitivity sweep runs at n=100 and the grid
    /// search on SIM-DEVELOP.
    pub fn standard(kind: ExperimentKind) -> Self {
        let mut dataset = DatasetConfig::default();
        match kind {
            ExperimentKind::SensitivitySweep => dataset.n = 100,
            ExperimentKind::GridSearch => dataset.source = DataSource::SimDevelop,
            _ => {}
        }
        ExperimentSpec {
            id: kind.as_str().to_string(),
            kind,
            dataset,
            tutor: TutorConfig::default(),
            learners: Vec::new(),
            folds: 4,
            seed: 0,
            workers: 0,
            baseline: false,
            dims: vec![10, 100, 1000, 10000],
            sensitivities: vec![0.1, 0.25, 0.5, 0.75, 1.0],
            train_caps: BTreeMap::new(),
            checkpoints: [100, 200, 300, 400, 500, 1000, 2000]
                .into_iter()
                .map(Checkpoint::Rows)
                .chain([Checkpoint::All])
                .collect(),
            online_folds: 1,
            grids: Vec::new(),
            output: None,
        }
    }

    pub fn with_learners(mut self, learners: Vec<LearnerSpec>) -> Self {
        self.learners = learners;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Rows in one training fold; the first `rows % folds` folds hold one
    /// extra test row, so the smallest training fold is returned.
    pub fn min_train_rows(&self) -> usize {
        self.dataset.rows - self.dataset.rows.div_ceil(self.folds)
    }

    /// Checks the dataset, tutor and fold settings; no data is touched.
    pub fn validate_data(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        let d = &self.dataset;
        if d.source.is_simulated() {
            if d.rows < self.folds {
                return bad(format!("{} rows cannot fill {} folds", d.rows, self.folds));
            }
            if d.n == 0 {
                return bad("data.n must be at least 1".into());
            }
        }
        if matches!(d.source, DataSource::Clustered | DataSource::PairedProxy) {
            if d.clusters == 0 {
                return bad("data.clusters must be at least 1".into());
            }
            if !(d.spread > 0.0 && d.spread.is_finite()) {
                return bad(format!("data.spread must be positive, got {}", d.spread));
            }
        }
        if d.source == DataSource::PairedProxy && !(d.noise >= 0.0 && d.noise.is_finite()) {
            return bad(format!("data.noise must be >= 0, got {}", d.noise));
        }
        if d.source == DataSource::Files && d.features.is_none() {
            return bad("data.source=files needs data.features".into());
        }
        let t = &self.tutor;
        if t.m == 0 || t.k == 0 || t.k > t.m {
            return bad(format!("tutor needs 1 <= k <= m, got k={} m={}", t.k, t.m));
        }
        check_sensitivity(t.sensitivity_p)
    }

    /// Checks every parameter domain; no data is touched.
    pub fn validate(&self) -> Result<()> {
        self.validate_data()?;
        let bad = |msg: String| Err(Error::Config(msg));
        let d = &self.dataset;
        if self.kind == ExperimentKind::GridSearch {
            if self.grids.is_empty() {
                return bad("grid_search needs at least one grid".into());
            }
            for g in &self.grids {
                if g.size() == 0 || g.size() > MAX_GRID_CELLS {
                    return bad(format!(
                        "{} grid has {} cells; allowed 1..={MAX_GRID_CELLS}",
                        g.family(),
                        g.size()
                    ));
                }
                for cell in g.cells()? {
                    cell.resolve()?;
                }
            }
        } else {
            if self.learners.is_empty() && !self.baseline {
                return bad("no learners configured".into());
            }
            let mut keys = Vec::with_capacity(self.learners.len());
            for l in &self.learners {
                l.resolve()?;
                let key = (l.family, l.params_string());
                if keys.contains(&key) {
                    return bad(format!("learner {} [{}] is listed twice", key.0, key.1));
                }
                keys.push(key);
            }
        }
        match self.kind {
            ExperimentKind::DimsSweep | ExperimentKind::SensitivitySweep if !d.source.is_simulated() => {
                return bad(format!("{} needs simulated data", self.kind));
            }
            ExperimentKind::DimsSweep => {
                if self.dims.is_empty() || self.dims.contains(&0) {
                    return bad("sweep.dims must list dimensions >= 1".into());
                }
                for (&n, &cap) in &self.train_caps {
                    if cap == 0 {
                        return bad(format!("training cap for n={n} must be positive"));
                    }
                }
            }
            ExperimentKind::SensitivitySweep => {
                if self.sensitivities.is_empty() {
                    return bad("sweep.p must list at least one value".into());
                }
                for &p in &self.sensitivities {
                    check_sensitivity(p)?;
                }
            }
            ExperimentKind::Online => {
                if self.checkpoints.is_empty() {
                    return bad("online.checkpoints is empty".into());
                }
                if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("online.checkpoints must be strictly increasing".into());
                }
                if self.checkpoints.contains(&Checkpoint::Rows(0)) {
                    return bad("online checkpoints must be positive".into());
                }
                if d.source.is_simulated() {
                    if let Some(&Checkpoint::Rows(r)) = self.checkpoints.iter().rev().find(|c| matches!(c, Checkpoint::Rows(_))) {
                        if r > self.min_train_rows() {
                            return bad(format!(
                                "checkpoint {r} exceeds the {} training rows per fold",
                                self.min_train_rows()
                            ));
                        }
                    }
                }
                if self.online_folds == 0 || self.online_folds > self.folds {
                    return bad(format!("online.folds must be in 1..={}", self.folds));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn check_sensitivity(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Config(format!("sensitivity p must be in (0, 1], got {p}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_spec_is_valid() {
        let spec = ExperimentSpec::standard(ExperimentKind::Xval).with_learners(vec![LearnerSpec::new(Family::GaussianNb)]);
        spec.validate().unwrap();
        assert_eq!(spec.min_train_rows(), 3399);
    }

    #[test]
    fn invalid_domains_are_rejected_up_front() {
        let base = ExperimentSpec::standard(ExperimentKind::Online).with_learners(vec![LearnerSpec::new(Family::Sgd)]);
        base.validate().unwrap();
        let mut s = base.clone();
        s.folds = 1;
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.tutor.k = 101;
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.checkpoints = vec![Checkpoint::Rows(200), Checkpoint::Rows(100)];
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.checkpoints = vec![Checkpoint::Rows(3400)];
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.tutor.sensitivity_p = 0.0;
        assert!(s.validate().is_err());
        let mut s = base;
        s.learners = vec![LearnerSpec::new(Family::Sgd).with_mode(crate::learner::MultilabelMode::Native)];
        assert!(s.validate().is_err());
    }

    #[test]
    fn grid_cells_enumerate_the_product() {
        let g = GridSpec::new(LearnerSpec::new(Family::KNeighbors)).axis("knn.k", &["1", "3", "5"]);
        let cells = g.cells().unwrap();
        assert_eq!(cells.len(), 3);
        assert_eq!(cells[1].params_string(), "knn.k=3");
        let g = GridSpec::new(LearnerSpec::new(Family::Sgd))
            .axis("lin.lr", &["0.1", "0.01"])
            .axis("sgd.loss", &["log", "hinge"]);
        let names: Vec<String> = g.cells().unwrap().iter().map(LearnerSpec::params_string).collect();
        assert_eq!(
            names,
            [
                "lin.lr=0.1;sgd.loss=log",
                "lin.lr=0.1;sgd.loss=hinge",
                "lin.lr=0.01;sgd.loss=log",
                "lin.lr=0.01;sgd.loss=hinge"
            ]
        );
        let mut spec = ExperimentSpec::standard(ExperimentKind::GridSearch);
        spec.grids = vec![GridSpec::new(LearnerSpec::new(Family::Sgd))
            .axis("lin.lr", &["1", "2", "3", "4", "5", "6"])
            .axis("lin.l2", &["1", "2", "3", "4", "5", "6"])];
        assert!(spec.validate().is_err());
    }
}
