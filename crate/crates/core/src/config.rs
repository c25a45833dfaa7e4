//! Experiment configuration files.
//!
//! One `key=value` per line; blank lines and lines starting with `#` are
//! ignored. Later assignments override earlier ones, and `include=PATH`
//! splices another file in place (relative paths resolve against the
//! including file). Unknown keys are errors.
//!
//! | key | value |
//! |---|---|
//! | `experiment.id` | free text |
//! | `experiment.kind` | `xval`, `dims_sweep`, `sensitivity_sweep`, `online`, `grid_search` |
//! | `seed` | master seed (u64) |
//! | `workers` | worker threads, 0 = all cores |
//! | `folds` | cross-validation folds |
//! | `baseline` | `true` adds the most-frequent-words predictor |
//! | `output` | output directory |
//! | `data.source` | `sim`, `sim-develop`, `clustered`, `paired-proxy`, `files` |
//! | `data.rows`, `data.n` | simulated size |
//! | `data.clusters`, `data.spread` | clustered generator |
//! | `data.noise` | learner-view noise of `paired-proxy` |
//! | `data.features`, `data.learner_features`, `data.labels` | CSV paths for `files` |
//! | `tutor.m`, `tutor.k`, `tutor.p` | words, words per object, weight density |
//! | `tutor.seed` | fixed lexicon seed |
//! | `learners` | comma-separated families, each at most once |
//! | `learner.<Family>.<key>` | setting for that family (`mode`, `preprocessing` or a hyperparameter) |
//! | `sweep.dims` | comma-separated dimensions |
//! | `sweep.p` | comma-separated sensitivities |
//! | `sweep.train_cap` | comma-separated `n:rows` training caps |
//! | `online.checkpoints` | comma-separated prefix sizes, `all` for the full fold |
//! | `online.folds` | folds evaluated online |
//! | `grid.<Family>.<key>` | comma-separated values of one grid axis |
//!
//! `experiment.kind` selects the starting defaults; every other key applies
//! on top in file order.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::{Checkpoint, ExperimentKind, ExperimentSpec, GridSpec};
use crate::learner::{Family, LearnerSpec};

const MAX_INCLUDE_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    /// `file:line` or `override` for programmatic settings.
    origin: String,
    base: PathBuf,
}

/// Ordered `key=value` assignments, not yet interpreted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: Vec<Entry>,
}

impl Config {
    pub fn new() -> Self {
        Config::default()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut c = Config::new();
        c.include(path, 0)?;
        Ok(c)
    }

    /// Parses `text`; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path, origin: &str) -> Result<Self> {
        let mut c = Config::new();
        c.parse_into(text, base, origin, 0)?;
        Ok(c)
    }

    fn include(&mut self, path: &Path, depth: usize) -> Result<()> {
        if depth > MAX_INCLUDE_DEPTH {
            return Err(Error::Config(format!("{}: includes nested too deeply", path.display())));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        self.parse_into(&text, &base, &path.display().to_string(), depth)
    }

    fn parse_into(&mut self, text: &str, base: &Path, origin: &str, depth: usize) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = format!("{origin}:{}", i + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{at}: expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "include" {
                self.include(&base.join(value), depth + 1)?;
            } else {
                self.entries.push(Entry {
                    key: key.to_string(),
                    value: value.to_string(),
                    origin: at,
                    base: base.to_path_buf(),
                });
            }
        }
        Ok(())
    }

    /// Appends an assignment that overrides everything before it.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            origin: "override".to_string(),
            base: PathBuf::new(),
        });
    }

    /// Last value assigned to `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|e| e.key == key).map(|e| e.value.as_str())
    }

    /// Interprets the assignments. Key names and value syntax are checked
    /// here; parameter domains by [`ExperimentSpec::validate`].
    pub fn to_spec(&self) -> Result<ExperimentSpec> {
        let kind = match self.entries.iter().rev().find(|e| e.key == "experiment.kind") {
            Some(e) => e.value.parse().map_err(|err| at(e, err))?,
            None => ExperimentKind::Xval,
        };
        let mut b = Builder {
            spec: ExperimentSpec::standard(kind),
            families: Vec::new(),
            settings: Vec::new(),
            grids: Vec::new(),
        };
        for e in &self.entries {
            b.apply(e).map_err(|err| at(e, err))?;
        }
        b.finish()
    }
}

fn at(e: &Entry, err: Error) -> Error {
    let msg = match err {
        Error::Config(m) => m,
        other => other.to_string(),
    };
    Error::Config(format!("{}: {}: {msg}", e.origin, e.key))
}

struct Builder {
    spec: ExperimentSpec,
    families: Vec<Family>,
    settings: Vec<(Family, String, String)>,
    grids: Vec<(Family, Vec<GridAxis>)>,
}

type GridAxis = (String, Vec<String>);

fn value<T: FromStr>(v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("cannot parse `{v}`")))
}

fn list<T: FromStr>(v: &str) -> Result<Vec<T>> {
    v.split(',').map(|s| value(s.trim())).collect()
}

fn boolean(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("expected true or false, got `{v}`"))),
    }
}

impl Builder {
    fn apply(&mut self, e: &Entry) -> Result<()> {
        let s = &mut self.spec;
        let v = e.value.as_str();
        let path = || if v.is_empty() { None } else { Some(e.base.join(v)) };
        match e.key.as_str() {
            "experiment.kind" => {}
            "experiment.id" => s.id = v.to_string(),
            "seed" => s.seed = value(v)?,
            "workers" => s.workers = value(v)?,
            "folds" => s.folds = value(v)?,
            "baseline" => s.baseline = boolean(v)?,
            "output" => s.output = path(),
            "data.source" => s.dataset.source = v.parse()?,
            "data.rows" => s.dataset.rows = value(v)?,
            "data.n" => s.dataset.n = value(v)?,
            "data.clusters" => s.dataset.clusters = value(v)?,
            "data.spread" => s.dataset.spread = value(v)?,
            "data.noise" => s.dataset.noise = value(v)?,
            "data.features" => s.dataset.features = path(),
            "data.learner_features" => s.dataset.learner_features = path(),
            "data.labels" => s.dataset.labels = path(),
            "tutor.m" => s.tutor.m = value(v)?,
            "tutor.k" => s.tutor.k = value(v)?,
            "tutor.p" => s.tutor.sensitivity_p = value(v)?,
            "tutor.seed" => s.tutor.seed = if v.is_empty() { None } else { Some(value(v)?) },
            "learners" => {
                self.families = if v.is_empty() { Vec::new() } else { list(v)? };
                let mut seen = self.families.clone();
                seen.sort();
                if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
                    return Err(Error::Config(format!("{} is listed twice", w[0])));
                }
            }
            "sweep.dims" => s.dims = list(v)?,
            "sweep.p" => s.sensitivities = list(v)?,
            "sweep.train_cap" => {
                s.train_caps.clear();
                for item in v.split(',').map(str::trim).filter(|i| !i.is_empty()) {
                    let (n, rows) = item
                        .split_once(':')
                        .ok_or_else(|| Error::Config(format!("expected n:rows, got `{item}`")))?;
                    s.train_caps.insert(value(n)?, value(rows)?);
                }
            }
            "online.checkpoints" => s.checkpoints = list::<Checkpoint>(v)?,
            "online.folds" => s.online_folds = value(v)?,
            key => {
                if let Some(rest) = key.strip_prefix("learner.") {
                    let (family, setting) = split_family(rest)?;
                    LearnerSpec::new(family).set(setting, v)?;
                    self.settings.push((family, setting.to_string(), v.to_string()));
                } else if let Some(rest) = key.strip_prefix("grid.") {
                    let (family, setting) = split_family(rest)?;
                    let values: Vec<String> = v.split(',').map(|x| x.trim().to_string()).collect();
                    for x in &values {
                        LearnerSpec::new(family).set(setting, x)?;
                    }
                    let idx = match self.grids.iter().position(|(f, _)| *f == family) {
                        Some(i) => i,
                        None => {
                            self.grids.push((family, Vec::new()));
                            self.grids.len() - 1
                        }
                    };
                    let axes = &mut self.grids[idx].1;
                    match axes.iter_mut().find(|(k, _)| k == setting) {
                        Some(axis) => axis.1 = values,
                        None => axes.push((setting.to_string(), values)),
                    }
                } else {
                    return Err(Error::Config(format!("unknown key `{key}`")));
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<ExperimentSpec> {
        let mut learners = Vec::with_capacity(self.families.len());
        for &family in &self.families {
            let mut spec = LearnerSpec::new(family);
            for (f, k, v) in &self.settings {
                if *f == family {
                    spec.set(k, v)?;
                }
            }
            learners.push(spec);
        }
        self.spec.learners = learners;
        self.spec.grids = self
            .grids
            .into_iter()
            .map(|(family, axes)| GridSpec {
                base: LearnerSpec::new(family),
                axes,
            })
            .collect();
        Ok(self.spec)
    }
}

/// Splits `Family.key` where the key itself may contain dots.
fn split_family(rest: &str) -> Result<(Family, &str)> {
    let (family, key) = rest
        .split_once('.')
        .ok_or_else(|| Error::Config(format!("expected <Family>.<key>, got `{rest}`")))?;
    Ok((family.parse()?, key))
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Every setting of `spec` as config lines; [`Config::parse`] on these lines
/// rebuilds an equal spec (learner seeds excepted, which the harness derives).
pub fn render_config(spec: &ExperimentSpec) -> Vec<String> {
    let d = &spec.dataset;
    let t = &spec.tutor;
    let p = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
    let mut lines = vec![
        format!("experiment.kind={}", spec.kind),
        format!("experiment.id={}", spec.id),
        format!("seed={}", spec.seed),
        format!("workers={}", spec.workers),
        format!("folds={}", spec.folds),
        format!("baseline={}", spec.baseline),
        format!("output={}", p(&spec.output)),
        format!("data.source={}", d.source.as_str()),
        format!("data.rows={}", d.rows),
        format!("data.n={}", d.n),
        format!("data.clusters={}", d.clusters),
        format!("data.spread={}", d.spread),
        format!("data.noise={}", d.noise),
        format!("data.features={}", p(&d.features)),
        format!("data.learner_features={}", p(&d.learner_features)),
        format!("data.labels={}", p(&d.labels)),
        format!("tutor.m={}", t.m),
        format!("tutor.k={}", t.k),
        format!("tutor.p={}", t.sensitivity_p),
        format!("tutor.seed={}", t.seed.map(|s| s.to_string()).unwrap_or_default()),
        format!("learners={}", join(&spec.learners.iter().map(|l| l.family).collect::<Vec<_>>())),
    ];
    for l in &spec.learners {
        lines.extend(l.settings().into_iter().map(|(k, v)| format!("learner.{}.{k}={v}", l.family)));
    }
    lines.push(format!("sweep.dims={}", join(&spec.dims)));
    lines.push(format!("sweep.p={}", join(&spec.sensitivities)));
    let caps: Vec<String> = spec.train_caps.iter().map(|(n, r)| format!("{n}:{r}")).collect();
    lines.push(format!("sweep.train_cap={}", caps.join(",")));
    lines.push(format!("online.checkpoints={}", join(&spec.checkpoints)));
    lines.push(format!("online.folds={}", spec.online_folds));
    for g in &spec.grids {
        lines.extend(g.base.settings().into_iter().map(|(k, v)| format!("grid.{}.{k}={v}", g.family())));
        lines.extend(g.axes.iter().map(|(k, vs)| format!("grid.{}.{k}={}", g.family(), vs.join(","))));
    }
    lines
}
