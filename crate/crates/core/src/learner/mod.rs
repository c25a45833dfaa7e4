//! The learner contract: fit on objects and multi-hot word labels, score
//! every word, threshold scores into word sets.
//!
//! Families without a native multi-label form are trained one-vs-rest: one
//! binary model per word column. A word with no positive training example
//! is never predicted and a word present in every training row is always
//! predicted; neither gets a fitted model.

pub mod bayes;
pub mod ensemble;
pub mod linear;
pub mod mlp;
pub mod neighbors;
mod params;
pub mod tree;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{LabelMatrix, LinearScaler, Standardizer};
use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, Parallelism};
use crate::rng::derive_seed;
use crate::tutor::WordSet;

use bayes::{column_variances, epsilon_for, GaussianNbModel, MultinomialNbModel};
use ensemble::{AdaBoostModel, ForestModel, GradBoostModel};
use linear::{logreg_fit, pa_fit, pa_partial_fit, sgd_fit, sgd_partial_fit, LinearBinaryModel, LinearKind, LinearParams, Loss};
use mlp::{mlp_fit, MlpModel};
use neighbors::{CentroidBinaryModel, KnnModel, LabelSetCentroids};
use tree::{DecisionTreeModel, TreeInput};

pub use params::{Family, FamilyParams, LearnerSpec, MultilabelMode, Preprocessing};

/// How to read a score column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreKind {
    /// In `[0,1]`; positive when strictly above 0.5.
    Probability,
    /// Signed and unbounded; positive when strictly above 0.
    Margin,
    /// 0 or 1 from a set-valued prediction.
    Indicator,
}

impl ScoreKind {
    pub fn threshold(self) -> f64 {
        match self {
            ScoreKind::Probability | ScoreKind::Indicator => 0.5,
            ScoreKind::Margin => 0.0,
        }
    }

    pub fn is_positive(self, score: f64) -> bool {
        score > self.threshold()
    }

    /// Score used for a word decided without a model.
    pub fn constant(self, positive: bool) -> f64 {
        match (self, positive) {
            (ScoreKind::Margin, true) => 1.0,
            (ScoreKind::Margin, false) => -1.0,
            (_, true) => 1.0,
            (_, false) => 0.0,
        }
    }
}

/// Word sets from a score matrix under the strict threshold of `kind`.
pub fn threshold_scores(scores: ArrayView2<'_, f64>, kind: ScoreKind) -> Vec<WordSet> {
    scores
        .outer_iter()
        .map(|r| r.iter().enumerate().filter(|(_, &s)| kind.is_positive(s)).map(|(j, _)| j).collect())
        .collect()
}

/// Feature transform fit on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Preprocessor {
    /// Min-max onto `[0,1]`, clipping unseen values.
    MinMax(LinearScaler),
    Standardize(Standardizer),
}

impl Preprocessor {
    pub fn fit(kind: Preprocessing, x: ArrayView2<'_, f64>) -> Result<Self> {
        Ok(match kind {
            Preprocessing::MinMax => Preprocessor::MinMax(LinearScaler::fit(x)?.clipped()),
            Preprocessing::Standardize => Preprocessor::Standardize(Standardizer::fit(x)?),
        })
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            Preprocessor::MinMax(s) => s.transform(x),
            Preprocessor::Standardize(s) => s.transform(x),
        }
    }
}

/// A fitted binary classifier for one word.
#[derive(Debug, Clone, PartialEq)]
pub enum BinaryModel {
    Linear(LinearBinaryModel),
    Centroid(CentroidBinaryModel),
    GaussianNb(GaussianNbModel),
    MultinomialNb(MultinomialNbModel),
    Knn(KnnModel),
    Tree(DecisionTreeModel),
    Forest(ForestModel),
    AdaBoost(AdaBoostModel),
    GradBoost(GradBoostModel),
    Mlp(MlpModel),
}

impl BinaryModel {
    pub fn kind(&self) -> ScoreKind {
        match self {
            BinaryModel::Linear(l) if !l.is_probabilistic() => ScoreKind::Margin,
            BinaryModel::Centroid(_) | BinaryModel::AdaBoost(_) => ScoreKind::Margin,
            _ => ScoreKind::Probability,
        }
    }

    /// Positive-class score for every row of `x`.
    pub fn scores(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let x = x.as_standard_layout();
        let row = |i: usize| x.row(i).to_slice().expect("standard layout");
        let rows = 0..x.nrows();
        Ok(match self {
            BinaryModel::Linear(m) => rows.map(|i| m.score(row(i))).collect(),
            BinaryModel::Centroid(m) => rows.map(|i| m.margin(row(i))).collect(),
            BinaryModel::GaussianNb(m) => rows.map(|i| m.predict_proba(row(i))).collect(),
            BinaryModel::MultinomialNb(m) => rows.map(|i| m.predict_proba(row(i))).collect::<Result<_>>()?,
            BinaryModel::Knn(m) => rows.map(|i| m.vote_fractions(row(i))[0]).collect(),
            BinaryModel::Tree(m) => rows
                .map(|i| {
                    let mut s = [0.0];
                    m.scores_into(row(i), &mut s);
                    s[0]
                })
                .collect(),
            BinaryModel::Forest(m) => rows
                .map(|i| {
                    let mut s = [0.0];
                    m.scores_into(row(i), &mut s);
                    s[0]
                })
                .collect(),
            BinaryModel::AdaBoost(m) => rows.map(|i| m.margin(row(i))).collect(),
            BinaryModel::GradBoost(m) => rows.map(|i| m.predict_proba(row(i))).collect(),
            BinaryModel::Mlp(m) => m.forward(x.view())?.column(0).to_vec(),
        })
    }
}

/// Trains one binary model per word column.
///
/// `prepare` runs once per multi-label fit and its result is shared by every
/// column, for work that depends only on the features.
pub trait BinaryTrainer: Sync {
    type Shared: Sync;
    fn kind(&self) -> ScoreKind;
    fn prepare(&self, x: ArrayView2<'_, f64>) -> Result<Self::Shared>;
    fn fit(&self, shared: &Self::Shared, x: ArrayView2<'_, f64>, y: &[bool], seed: u64) -> Result<BinaryModel>;
}

/// A binary trainer from a closure.
pub struct FnTrainer<F> {
    pub kind: ScoreKind,
    pub fit: F,
}

impl<F> BinaryTrainer for FnTrainer<F>
where
    F: Fn(ArrayView2<'_, f64>, &[bool], u64) -> Result<BinaryModel> + Sync,
{
    type Shared = ();
    fn kind(&self) -> ScoreKind {
        self.kind
    }
    fn prepare(&self, _: ArrayView2<'_, f64>) -> Result<()> {
        Ok(())
    }
    fn fit(&self, _: &(), x: ArrayView2<'_, f64>, y: &[bool], seed: u64) -> Result<BinaryModel> {
        (self.fit)(x, y, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OvrColumn {
    Never,
    Always,
    Fitted(BinaryModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OvrModel {
    pub columns: Vec<OvrColumn>,
    pub kind: ScoreKind,
}

impl OvrModel {
    pub fn scores(&self, x: ArrayView2<'_, f64>, par: Parallelism) -> Result<Array2<f64>> {
        let cols = try_map_indexed(self.columns.len(), par, |j| match &self.columns[j] {
            OvrColumn::Never => Ok(vec![self.kind.constant(false); x.nrows()]),
            OvrColumn::Always => Ok(vec![self.kind.constant(true); x.nrows()]),
            OvrColumn::Fitted(m) => m.scores(x),
        })?;
        let mut out = Array2::zeros((x.nrows(), self.columns.len()));
        for (j, col) in cols.into_iter().enumerate() {
            out.column_mut(j).assign(&ndarray::ArrayView1::from(&col));
        }
        Ok(out)
    }
}

/// One-vs-rest: column `j` is trained with seed `derive_seed(seed, "ovr", j)`.
/// Inner errors come back wrapped in [`Error::Word`].
pub fn ovr_wrap<T: BinaryTrainer>(
    trainer: &T,
    x: ArrayView2<'_, f64>,
    y: &LabelMatrix,
    seed: u64,
    par: Parallelism,
) -> Result<OvrModel> {
    check_training(x, y)?;
    let shared = trainer.prepare(x)?;
    let cols = y.columns();
    let rows = y.len();
    let columns = try_map_indexed(cols.len(), par, |j| {
        let pos = cols[j].iter().filter(|&&v| v).count();
        if pos == 0 {
            return Ok(OvrColumn::Never);
        }
        if pos == rows {
            return Ok(OvrColumn::Always);
        }
        trainer
            .fit(&shared, x, &cols[j], derive_seed(seed, "ovr", j as u64))
            .map(OvrColumn::Fitted)
            .map_err(|e| Error::Word {
                word: j,
                source: Box::new(e),
            })
    })?;
    Ok(OvrModel {
        columns,
        kind: trainer.kind(),
    })
}

fn check_training(x: ArrayView2<'_, f64>, y: &LabelMatrix) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::shape(format!("{} object rows but {} label rows", x.nrows(), y.len())));
    }
    if x.nrows() == 0 {
        return Err(Error::param("empty training set"));
    }
    Ok(())
}

/// Binary trainer for any family, used in one-vs-rest mode.
pub struct FamilyTrainer {
    pub params: FamilyParams,
    pub par: Parallelism,
}

pub enum SharedPrep {
    None,
    Trees(TreeInput),
    VarianceEpsilon(f64),
}

impl BinaryTrainer for FamilyTrainer {
    type Shared = SharedPrep;

    fn kind(&self) -> ScoreKind {
        match &self.params {
            FamilyParams::NearestCentroid | FamilyParams::PassiveAggressive(_) | FamilyParams::AdaBoost { .. } => {
                ScoreKind::Margin
            }
            FamilyParams::Sgd(p) if p.loss == Loss::Hinge => ScoreKind::Margin,
            _ => ScoreKind::Probability,
        }
    }

    fn prepare(&self, x: ArrayView2<'_, f64>) -> Result<SharedPrep> {
        Ok(match &self.params {
            FamilyParams::AdaBoost { .. } | FamilyParams::GradientBoosting { .. } => SharedPrep::Trees(TreeInput::presorted(x)),
            FamilyParams::GaussianNb { var_floor } => {
                let max_var = column_variances(x).into_iter().fold(0.0, f64::max);
                SharedPrep::VarianceEpsilon(epsilon_for(*var_floor, max_var))
            }
            _ => SharedPrep::None,
        })
    }

    fn fit(&self, shared: &SharedPrep, x: ArrayView2<'_, f64>, y: &[bool], seed: u64) -> Result<BinaryModel> {
        let single = || LabelMatrix::new(1, y.iter().map(|&t| if t { WordSet::new(vec![0]) } else { WordSet::empty() }).collect());
        Ok(match (&self.params, shared) {
            (FamilyParams::Knn { k }, _) => BinaryModel::Knn(KnnModel::fit(x, &single()?, *k)?),
            (FamilyParams::NearestCentroid, _) => BinaryModel::Centroid(CentroidBinaryModel::fit(x, y)?),
            (FamilyParams::Logistic(p), _) => BinaryModel::Linear(logreg_fit(x, y, p)?),
            (FamilyParams::Sgd(p), _) => BinaryModel::Linear(sgd_fit(x, y, p, seed)?),
            (FamilyParams::PassiveAggressive(p), _) => BinaryModel::Linear(pa_fit(x, y, p, seed)?),
            (FamilyParams::GaussianNb { .. }, SharedPrep::VarianceEpsilon(eps)) => {
                BinaryModel::GaussianNb(GaussianNbModel::fit_with_epsilon(x, y, *eps)?)
            }
            (FamilyParams::GaussianNb { var_floor }, _) => BinaryModel::GaussianNb(GaussianNbModel::fit(x, y, *var_floor)?),
            (FamilyParams::MultinomialNb { alpha }, _) => BinaryModel::MultinomialNb(MultinomialNbModel::fit(x, y, *alpha)?),
            (FamilyParams::Tree(p), _) => BinaryModel::Tree(DecisionTreeModel::fit(x, &single()?, p, seed)?),
            (FamilyParams::Forest(p), _) => BinaryModel::Forest(ForestModel::fit(x, &single()?, p, seed, self.par)?),
            (FamilyParams::AdaBoost { stages, depth }, SharedPrep::Trees(input)) => {
                BinaryModel::AdaBoost(AdaBoostModel::fit_on(input, y, *stages, *depth, seed)?)
            }
            (FamilyParams::AdaBoost { stages, depth }, _) => BinaryModel::AdaBoost(AdaBoostModel::fit(x, y, *stages, *depth, seed)?),
            (FamilyParams::GradientBoosting { stages, lr, depth }, SharedPrep::Trees(input)) => {
                BinaryModel::GradBoost(GradBoostModel::fit_on(input, y, *stages, *lr, *depth, seed)?)
            }
            (FamilyParams::GradientBoosting { stages, lr, depth }, _) => {
                BinaryModel::GradBoost(GradBoostModel::fit(x, y, *stages, *lr, *depth, seed)?)
            }
            (FamilyParams::Mlp(p), _) => BinaryModel::Mlp(mlp_fit(x, &single()?, p, seed)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NativeModel {
    Knn(KnnModel),
    LabelSetCentroids(LabelSetCentroids),
    Tree(DecisionTreeModel),
    Forest(ForestModel),
    Mlp(MlpModel),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelState {
    Native(NativeModel),
    OneVsRest(OvrModel),
}

/// A fitted learner. Immutable after [`fit`]; scoring is a pure function of
/// the fitted state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: LearnerSpec,
    pub m: usize,
    pub n: usize,
    pub score_kind: ScoreKind,
    pub preprocessor: Preprocessor,
    pub state: ModelState,
    /// Words with no positive training example.
    unseen: Vec<usize>,
    par: Parallelism,
}

pub fn fit(spec: &LearnerSpec, x: ArrayView2<'_, f64>, y: &LabelMatrix) -> Result<TrainedModel> {
    fit_with(spec, x, y, Parallelism::default())
}

pub fn fit_with(spec: &LearnerSpec, x: ArrayView2<'_, f64>, y: &LabelMatrix, par: Parallelism) -> Result<TrainedModel> {
    check_training(x, y)?;
    let params = spec.resolve()?;
    let preprocessor = Preprocessor::fit(spec.preprocessing, x)?;
    let xt = preprocessor.transform(x)?;
    let xv = xt.view();
    let (state, score_kind) = match spec.mode {
        MultilabelMode::OneVsRest => {
            let trainer = FamilyTrainer { params, par };
            let ovr = ovr_wrap(&trainer, xv, y, spec.seed, par)?;
            let kind = ovr.kind;
            (ModelState::OneVsRest(ovr), kind)
        }
        MultilabelMode::Native => {
            let native = match params {
                FamilyParams::Knn { k } => NativeModel::Knn(KnnModel::fit(xv, y, k)?),
                FamilyParams::NearestCentroid => NativeModel::LabelSetCentroids(LabelSetCentroids::fit(xv, y)?),
                FamilyParams::Tree(p) => NativeModel::Tree(DecisionTreeModel::fit(xv, y, &p, spec.seed)?),
                FamilyParams::Forest(p) => NativeModel::Forest(ForestModel::fit(xv, y, &p, spec.seed, par)?),
                FamilyParams::Mlp(p) => NativeModel::Mlp(mlp_fit(xv, y, &p, spec.seed)?),
                _ => return Err(Error::Config(format!("{} has no native multi-label mode", spec.family))),
            };
            let kind = match native {
                NativeModel::LabelSetCentroids(_) => ScoreKind::Indicator,
                _ => ScoreKind::Probability,
            };
            (ModelState::Native(native), kind)
        }
    };
    let unseen = y.counts().iter().enumerate().filter(|(_, &c)| c == 0).map(|(j, _)| j).collect();
    Ok(TrainedModel {
        spec: spec.clone(),
        m: y.m(),
        n: x.ncols(),
        score_kind,
        preprocessor,
        state,
        unseen,
        par,
    })
}

impl TrainedModel {
    /// Rows x m scores; higher means more confident.
    pub fn predict_scores(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n {
            return Err(Error::shape(format!("model expects {} features, got {}", self.n, x.ncols())));
        }
        let xt = self.preprocessor.transform(x)?;
        let xt = xt.as_standard_layout();
        let row = |i: usize| xt.row(i).to_slice().expect("standard layout");
        let mut out = match &self.state {
            ModelState::OneVsRest(ovr) => ovr.scores(xt.view(), self.par)?,
            ModelState::Native(native) => {
                let mut out = Array2::zeros((xt.nrows(), self.m));
                match native {
                    NativeModel::Knn(m) => out = m.scores(xt.view(), self.par),
                    NativeModel::Mlp(m) => out = m.forward(xt.view())?,
                    NativeModel::LabelSetCentroids(m) => {
                        for (i, mut r) in out.outer_iter_mut().enumerate() {
                            for &j in m.predict(row(i)).ids() {
                                r[j] = 1.0;
                            }
                        }
                    }
                    NativeModel::Tree(m) => {
                        for (i, mut r) in out.outer_iter_mut().enumerate() {
                            m.scores_into(row(i), r.as_slice_mut().expect("standard layout"));
                        }
                    }
                    NativeModel::Forest(m) => {
                        for (i, mut r) in out.outer_iter_mut().enumerate() {
                            m.scores_into(row(i), r.as_slice_mut().expect("standard layout"));
                        }
                    }
                }
                out
            }
        };
        let never = self.score_kind.constant(false);
        for &j in &self.unseen {
            out.column_mut(j).fill(never);
        }
        Ok(out)
    }

    pub fn predict_labels(&self, x: ArrayView2<'_, f64>) -> Result<Vec<WordSet>> {
        Ok(threshold_scores(self.predict_scores(x)?.view(), self.score_kind))
    }
}

/// SGD or passive-aggressive one-vs-rest model updated chunk by chunk.
///
/// The standardizer is fit on the first chunk and then frozen. Each update
/// runs the configured number of epochs over the new chunk only.
#[derive(Debug, Clone)]
pub struct OnlineLearner {
    spec: LearnerSpec,
    params: FamilyParams,
    preprocessor: Option<Preprocessor>,
    columns: Vec<LinearBinaryModel>,
    positives: Vec<usize>,
    seen: usize,
    updates: u64,
    m: usize,
    n: usize,
}

impl OnlineLearner {
    pub fn new(spec: &LearnerSpec, m: usize, n: usize) -> Result<Self> {
        if !spec.family.is_incremental() {
            return Err(Error::Config(format!("{} does not learn incrementally", spec.family)));
        }
        if spec.mode != MultilabelMode::OneVsRest {
            return Err(Error::Config(format!("{} learns incrementally only one-vs-rest", spec.family)));
        }
        let params = spec.resolve()?;
        let kind = match &params {
            FamilyParams::Sgd(p) => LinearKind::Sgd(p.loss),
            _ => LinearKind::PassiveAggressive,
        };
        Ok(OnlineLearner {
            spec: spec.clone(),
            params,
            preprocessor: None,
            columns: vec![LinearBinaryModel::zeros(n, kind); m],
            positives: vec![0; m],
            seen: 0,
            updates: 0,
            m,
            n,
        })
    }

    pub fn seen(&self) -> usize {
        self.seen
    }

    pub fn update(&mut self, x: ArrayView2<'_, f64>, y: &LabelMatrix) -> Result<()> {
        check_training(x, y)?;
        if x.ncols() != self.n || y.m() != self.m {
            return Err(Error::shape(format!(
                "online learner built for {}x{} got {}x{}",
                self.n,
                self.m,
                x.ncols(),
                y.m()
            )));
        }
        if self.preprocessor.is_none() {
            self.preprocessor = Some(Preprocessor::fit(self.spec.preprocessing, x)?);
        }
        let xt = self.preprocessor.as_ref().expect("set above").transform(x)?;
        let cols = y.columns();
        for (j, col) in cols.iter().enumerate() {
            self.positives[j] += col.iter().filter(|&&v| v).count();
            let seed = derive_seed(self.spec.seed, "ovr", j as u64) ^ derive_seed(self.spec.seed, "chunk", self.updates);
            match &self.params {
                FamilyParams::Sgd(p) => sgd_partial_fit(&mut self.columns[j], xt.view(), col, p, seed),
                FamilyParams::PassiveAggressive(p) => pa_partial_fit(&mut self.columns[j], xt.view(), col, p, seed),
                _ => unreachable!("checked in new"),
            }
            .map_err(|e| Error::Word {
                word: j,
                source: Box::new(e),
            })?;
        }
        self.seen += y.len();
        self.updates += 1;
        Ok(())
    }

    /// A frozen copy usable like any batch-trained model.
    pub fn snapshot(&self) -> Result<TrainedModel> {
        let preprocessor = self
            .preprocessor
            .clone()
            .ok_or_else(|| Error::param("online learner has seen no data"))?;
        let kind = match &self.params {
            FamilyParams::Sgd(LinearParams { loss: Loss::Log, .. }) => ScoreKind::Probability,
            _ => ScoreKind::Margin,
        };
        let columns = self
            .columns
            .iter()
            .zip(&self.positives)
            .map(|(c, &pos)| {
                if pos == 0 {
                    OvrColumn::Never
                } else if pos == self.seen {
                    OvrColumn::Always
                } else {
                    OvrColumn::Fitted(BinaryModel::Linear(c.clone()))
                }
            })
            .collect();
        Ok(TrainedModel {
            spec: self.spec.clone(),
            m: self.m,
            n: self.n,
            score_kind: kind,
            preprocessor,
            state: ModelState::OneVsRest(OvrModel { columns, kind }),
            unseen: self.positives.iter().enumerate().filter(|(_, &c)| c == 0).map(|(j, _)| j).collect(),
            par: Parallelism::default(),
        })
    }
}
