use std::time::Instant;

use crate::data::{kfold_split, DatasetMetadata, FoldSplit, LabeledDataset};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, with_workers, Parallelism};
use crate::learner::{fit_with, Family, LearnerSpec, MultilabelMode, OnlineLearner};
use crate::metrics::{evaluate, EvalReport};
use crate::rng::derive_seed;

use super::baseline::most_frequent_words;
use super::dataset::{build_dataset, PreparedData};
use super::record::{CellStatus, ResultRecord, SeedSet};
use super::spec::{ExperimentKind, ExperimentSpec};

/// Learner name used for the most-frequent-words predictor.
pub const BASELINE: &str = "Baseline";

/// Mean score of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCellResult {
    pub spec: LearnerSpec,
    pub mean_f: Option<f64>,
    pub failures: usize,
}

/// Grid outcome for one family; `best` is the first cell with the highest
/// mean F among cells without failures.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBest {
    pub family: Family,
    pub best: Option<GridCellResult>,
    pub cells: Vec<GridCellResult>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub spec: ExperimentSpec,
    pub records: Vec<ResultRecord>,
    /// Evaluation behind each record; `None` for failed cells.
    pub reports: Vec<Option<EvalReport>>,
    pub grid: Vec<GridBest>,
    /// One entry per sweep point.
    pub datasets: Vec<DatasetMetadata>,
    pub notes: Vec<String>,
}

impl ExperimentOutput {
    /// Successful evaluations of the learner whose key is `key`.
    pub fn reports_for(&self, key: &str) -> Vec<EvalReport> {
        self.records
            .iter()
            .zip(&self.reports)
            .filter(|(r, _)| r.learner_key() == key)
            .filter_map(|(_, e)| e.clone())
            .collect()
    }
}

/// Runs the experiment described by `spec` after validating it.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let spec = spec.clone();
    with_workers(spec.workers, move || match spec.kind {
        ExperimentKind::Xval => run_xval(&spec),
        ExperimentKind::DimsSweep => run_dims_sweep(&spec),
        ExperimentKind::SensitivitySweep => run_sensitivity_sweep(&spec),
        ExperimentKind::Online => run_online(&spec),
        ExperimentKind::GridSearch => run_grid_search(&spec),
    })
}

fn parallelism(spec: &ExperimentSpec) -> Parallelism {
    if spec.workers == 1 {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    }
}

fn learner_seed(master: u64, point: usize, learner: usize, fold: usize) -> u64 {
    derive_seed(master, "learner", ((point as u64) << 40) | ((learner as u64) << 20) | fold as u64)
}

fn empty_output(spec: &ExperimentSpec) -> ExperimentOutput {
    ExperimentOutput {
        spec: spec.clone(),
        records: Vec::new(),
        reports: Vec::new(),
        grid: Vec::new(),
        datasets: Vec::new(),
        notes: Vec::new(),
    }
}

/// Shared state of all cells at one sweep point.
struct Point<'a> {
    spec: &'a ExperimentSpec,
    data: &'a PreparedData,
    folds: FoldSplit,
    index: usize,
    x: f64,
    cap: Option<usize>,
    par: Parallelism,
}

/// A learner (by position in the experiment's list) or the baseline.
#[derive(Clone, Copy)]
enum Who<'a> {
    Learner(usize, &'a LearnerSpec),
    Baseline,
}

type Cell = (ResultRecord, Option<EvalReport>);

impl Point<'_> {
    fn new<'a>(
        spec: &'a ExperimentSpec,
        data: &'a PreparedData,
        index: usize,
        x: f64,
        cap: Option<usize>,
    ) -> Result<Point<'a>> {
        let folds = kfold_split(data.dataset.rows(), spec.folds, data.folds_seed)?;
        Ok(Point {
            spec,
            data,
            folds,
            index,
            x,
            cap,
            par: parallelism(spec),
        })
    }

    fn train_rows(&self, fold: usize) -> &[usize] {
        let rows = &self.folds.train[fold];
        &rows[..self.cap.map_or(rows.len(), |c| c.min(rows.len()))]
    }

    fn record(&self, who: Who<'_>, fold: usize, train_size: usize, x: f64) -> ResultRecord {
        let (learner, params, seed) = match who {
            Who::Learner(li, l) => (
                l.family.name().to_string(),
                l.params_string(),
                learner_seed(self.spec.seed, self.index, li, fold),
            ),
            Who::Baseline => (BASELINE.to_string(), "most_frequent".to_string(), 0),
        };
        ResultRecord {
            experiment: self.spec.id.clone(),
            kind: self.spec.kind.as_str().to_string(),
            learner,
            params,
            dataset: self.data.tag.clone(),
            n: self.data.n,
            sensitivity_p: self.data.sensitivity_p,
            x,
            fold,
            train_size,
            sample_f: None,
            sample_precision: None,
            sample_recall: None,
            macro_f: None,
            wall_time: 0.0,
            status: CellStatus::Failed,
            error: None,
            seeds: SeedSet {
                master: self.spec.seed,
                lexicon: self.data.lexicon_seed,
                objects: self.data.objects_seed,
                folds: self.data.folds_seed,
                learner: seed,
            },
        }
    }

    fn finish(mut record: ResultRecord, started: Instant, outcome: Result<EvalReport>) -> Cell {
        record.wall_time = started.elapsed().as_secs_f64();
        match outcome {
            Ok(report) => {
                record.status = CellStatus::Ok;
                record.sample_f = Some(report.sample_f);
                record.sample_precision = Some(report.sample_precision);
                record.sample_recall = Some(report.sample_recall);
                record.macro_f = Some(report.macro_f);
                log::info!(
                    "{} {} fold {} x={}: F={:.2} ({:.1}s)",
                    record.dataset,
                    record.learner_key(),
                    record.fold,
                    record.x,
                    report.sample_f,
                    record.wall_time
                );
                (record, Some(report))
            }
            Err(e) => {
                log::warn!("{} fold {} failed: {e}", record.learner_key(), record.fold);
                record.error = Some(e.to_string());
                (record, None)
            }
        }
    }

    /// Fits on `train` and scores on `test`.
    fn fit_and_score(&self, who: Who<'_>, seed: u64, train: &LabeledDataset, test: &LabeledDataset) -> Result<EvalReport> {
        let counts = train.labels.counts();
        let preds = match who {
            Who::Learner(_, l) => {
                let spec = l.clone().with_seed(seed);
                fit_with(&spec, train.objects.view(), &train.labels, self.par)?.predict_labels(test.objects.view())?
            }
            Who::Baseline => vec![most_frequent_words(&counts, train.k)?; test.rows()],
        };
        evaluate(test.labels.rows(), &preds, &counts)
    }

    fn cell(&self, who: Who<'_>, fold: usize) -> Cell {
        let started = Instant::now();
        let train_rows = self.train_rows(fold);
        let record = self.record(who, fold, train_rows.len(), self.x);
        let train = self.data.dataset.subset(train_rows);
        let test = self.data.dataset.subset(&self.folds.test[fold]);
        let outcome = self.fit_and_score(who, record.seeds.learner, &train, &test);
        Self::finish(record, started, outcome)
    }

    /// Every learner (then the baseline) on every fold, merged in that order.
    fn run_cells(&self, learners: &[LearnerSpec], baseline: bool) -> Vec<Cell> {
        let mut jobs: Vec<(Who<'_>, usize)> = Vec::new();
        for (li, l) in learners.iter().enumerate() {
            jobs.extend((0..self.spec.folds).map(|f| (Who::Learner(li, l), f)));
        }
        if baseline {
            jobs.extend((0..self.spec.folds).map(|f| (Who::Baseline, f)));
        }
        map_indexed(jobs.len(), self.par, |i| self.cell(jobs[i].0, jobs[i].1))
    }

    /// Learning curve of one learner on one fold.
    fn online_cells(&self, who: Who<'_>, fold: usize) -> Vec<Cell> {
        let train_rows = self.train_rows(fold);
        let test = self.data.dataset.subset(&self.folds.test[fold]);
        let points: Vec<usize> = self.spec.checkpoints.iter().map(|c| c.resolve(train_rows.len())).collect();
        let incremental = match who {
            Who::Learner(_, l) => l.family.is_incremental() && l.mode == MultilabelMode::OneVsRest,
            Who::Baseline => false,
        };
        let mut out = Vec::with_capacity(points.len());
        let mut online: Option<Result<OnlineLearner>> = None;
        let started = Instant::now();
        let mut fed = 0;
        for &c in &points {
            let step = Instant::now();
            let mut record = self.record(who, fold, c, c as f64);
            if c > train_rows.len() {
                record.error = Some(format!("checkpoint {c} exceeds {} training rows", train_rows.len()));
                out.push((record, None));
                continue;
            }
            let outcome = if incremental {
                let Who::Learner(_, l) = who else { unreachable!() };
                let learner = online.get_or_insert_with(|| {
                    let spec = l.clone().with_seed(record.seeds.learner);
                    OnlineLearner::new(&spec, self.data.dataset.labels.m(), self.data.n)
                });
                match learner {
                    Ok(learner) => {
                        let chunk = self.data.dataset.subset(&train_rows[fed..c]);
                        fed = c;
                        learner
                            .update(chunk.objects.view(), &chunk.labels)
                            .and_then(|_| learner.snapshot())
                            .and_then(|model| {
                                let preds = model.predict_labels(test.objects.view())?;
                                let counts = self.data.dataset.labels.select_rows(&train_rows[..c]).counts();
                                evaluate(test.labels.rows(), &preds, &counts)
                            })
                    }
                    Err(e) => Err(Error::Config(e.to_string())),
                }
            } else {
                let train = self.data.dataset.subset(&train_rows[..c]);
                self.fit_and_score(who, record.seeds.learner, &train, &test)
            };
            out.push(Self::finish(record, if incremental { started } else { step }, outcome));
        }
        out
    }
}

fn push_cells(out: &mut ExperimentOutput, cells: Vec<Cell>) {
    for (r, e) in cells {
        out.records.push(r);
        out.reports.push(e);
    }
}

/// Cross-validation of every learner on one dataset.
pub fn run_xval(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = empty_output(spec);
    let data = build_dataset(spec, 0, spec.dataset.n, spec.tutor.sensitivity_p)?;
    let point = Point::new(spec, &data, 0, 0.0, None)?;
    push_cells(&mut out, point.run_cells(&spec.learners, spec.baseline));
    out.datasets.push(data.metadata(Vec::new()));
    Ok(out)
}

/// Cross-validation at every dimension in `spec.dims`, with a fresh lexicon
/// and dataset per dimension. Points run one after another to bound memory.
pub fn run_dims_sweep(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = empty_output(spec);
    for (i, &n) in spec.dims.iter().enumerate() {
        let data = build_dataset(spec, i, n, spec.tutor.sensitivity_p)?;
        let cap = spec.train_caps.get(&n).copied();
        let point = Point::new(spec, &data, i, n as f64, cap)?;
        if let Some(c) = cap {
            let kept = point.train_rows(0).len();
            out.notes.push(format!(
                "n={n}: training folds subsampled to the first {kept} of {} rows",
                point.folds.train[0].len()
            ));
            log::info!("n={n}: training on {kept} rows per fold (cap {c})");
        }
        push_cells(&mut out, point.run_cells(&spec.learners, spec.baseline));
        out.datasets.push(data.metadata(Vec::new()));
    }
    Ok(out)
}

/// Cross-validation at every tutor sensitivity in `spec.sensitivities`.
pub fn run_sensitivity_sweep(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = empty_output(spec);
    for (i, &p) in spec.sensitivities.iter().enumerate() {
        let data = build_dataset(spec, i, spec.dataset.n, p)?;
        let point = Point::new(spec, &data, i, p, None)?;
        push_cells(&mut out, point.run_cells(&spec.learners, spec.baseline));
        out.datasets.push(data.metadata(Vec::new()));
    }
    Ok(out)
}

/// Learning curves: at each checkpoint `c` the learner has seen the first
/// `c` rows of the training fold and is scored on the whole test fold.
/// SGD and passive-aggressive learners in one-vs-rest mode update in place
/// with the new rows; every other learner is refit on the prefix.
pub fn run_online(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = empty_output(spec);
    let data = build_dataset(spec, 0, spec.dataset.n, spec.tutor.sensitivity_p)?;
    let point = Point::new(spec, &data, 0, 0.0, None)?;
    let mut jobs: Vec<(Who<'_>, usize)> = Vec::new();
    for (li, l) in spec.learners.iter().enumerate() {
        jobs.extend((0..spec.online_folds).map(|f| (Who::Learner(li, l), f)));
    }
    if spec.baseline {
        jobs.extend((0..spec.online_folds).map(|f| (Who::Baseline, f)));
    }
    let curves = map_indexed(jobs.len(), point.par, |i| point.online_cells(jobs[i].0, jobs[i].1));
    for cells in curves {
        push_cells(&mut out, cells);
    }
    out.datasets.push(data.metadata(Vec::new()));
    Ok(out)
}

/// Exhaustive search over every grid; each cell is cross-validated on the
/// configured dataset (SIM-DEVELOP by default).
pub fn run_grid_search(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let mut out = empty_output(spec);
    let data = build_dataset(spec, 0, spec.dataset.n, spec.tutor.sensitivity_p)?;
    let point = Point::new(spec, &data, 0, 0.0, None)?;
    let mut cells: Vec<LearnerSpec> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    for (g, grid) in spec.grids.iter().enumerate() {
        for cell in grid.cells()? {
            cells.push(cell);
            owner.push(g);
        }
    }
    let results = point.run_cells(&cells, spec.baseline);
    let mut grid: Vec<GridBest> = spec
        .grids
        .iter()
        .map(|g| GridBest {
            family: g.family(),
            best: None,
            cells: Vec::new(),
        })
        .collect();
    for (ci, cell) in cells.iter().enumerate() {
        let folds = &results[ci * spec.folds..(ci + 1) * spec.folds];
        let fs: Vec<f64> = folds.iter().filter_map(|(r, _)| r.sample_f).collect();
        let result = GridCellResult {
            spec: cell.clone(),
            mean_f: (!fs.is_empty()).then(|| fs.iter().sum::<f64>() / fs.len() as f64),
            failures: spec.folds - fs.len(),
        };
        log::info!("grid {} [{}]: {:?}", cell.family, cell.params_string(), result.mean_f);
        let entry = &mut grid[owner[ci]];
        let better = match (&entry.best, result.mean_f) {
            (_, None) => false,
            _ if result.failures > 0 => false,
            (None, Some(_)) => true,
            (Some(b), Some(f)) => f > b.mean_f.unwrap_or(f64::NEG_INFINITY),
        };
        if better {
            entry.best = Some(result.clone());
        }
        entry.cells.push(result);
    }
    push_cells(&mut out, results);
    out.grid = grid;
    out.datasets.push(data.metadata(Vec::new()));
    Ok(out)
}

/// Tuned settings as config lines, one `learner.<Family>.<key>=<value>`
/// per setting, headed by a comment with the winning score.
pub fn tuned_config(grid: &[GridBest]) -> String {
    let mut text = String::new();
    for g in grid {
        match &g.best {
            Some(best) => {
                text.push_str(&format!(
                    "# {}: mean sample F {:.2} over {} cells\n",
                    g.family,
                    best.mean_f.unwrap_or(0.0),
                    g.cells.len()
                ));
                for (k, v) in best.spec.settings() {
                    text.push_str(&format!("learner.{}.{k}={v}\n", g.family));
                }
            }
            None => text.push_str(&format!("# {}: every cell failed\n", g.family)),
        }
    }
    text
}
