//! Tree ensembles: random forests, extra trees, discrete AdaBoost and
//! gradient boosting on the logistic loss.

use ndarray::ArrayView2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::linear::{sigmoid, softplus};
use super::tree::{
    build_tree, check_fit, weighted_stump, MaxFeatures, MultiLabelGini, SplitSearch, SquaredError, ThresholdMode, Tree, TreeInput,
    TreeParams, WordFractions,
};
use crate::data::LabelMatrix;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Parallelism};
use crate::rng::{derive_seed, rng_from_seed};
use crate::tutor::WordSet;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub bootstrap: bool,
    pub tree: TreeParams,
    /// Row weight of positive rows; single-word forests only.
    pub pos_weight: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            bootstrap: true,
            tree: TreeParams::default(),
            pos_weight: 1.0,
        }
    }
}

/// Multi-output forest; a word's score is its mean leaf fraction over trees.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree<WordFractions>>,
    pub bootstrap: bool,
    pub m: usize,
    pub seed: u64,
}

impl ForestModel {
    /// Tree `t` draws from the substream `derive_seed(seed, "tree", t)`, so
    /// the result does not depend on how trees are scheduled.
    pub fn fit(x: ArrayView2<'_, f64>, labels: &LabelMatrix, p: &ForestParams, seed: u64, par: Parallelism) -> Result<Self> {
        check_fit(x, labels.len(), &p.tree)?;
        if p.trees == 0 {
            return Err(Error::param("a forest needs at least one tree"));
        }
        if p.pos_weight != 1.0 && labels.m() != 1 {
            return Err(Error::param("a positive-class weight needs a single-word forest"));
        }
        let class_weight: Option<Vec<f64>> = (p.pos_weight != 1.0).then(|| {
            labels
                .rows()
                .iter()
                .map(|s| if s.is_empty() { 1.0 } else { p.pos_weight })
                .collect()
        });
        let n = x.ncols();
        let k = p.tree.max_features.resolve(n);
        let input = if p.tree.threshold_mode == ThresholdMode::Best && n <= 4 * k {
            TreeInput::presorted(x)
        } else {
            TreeInput::new(x)
        };
        let crit = MultiLabelGini {
            labels: labels.rows(),
            m: labels.m().max(1),
        };
        let rows = x.nrows();
        let trees = map_indexed(p.trees, par, |t| {
            let tseed = derive_seed(seed, "tree", t as u64);
            if p.bootstrap {
                let mut rng = rng_from_seed(tseed);
                let mut counts = vec![0.0; rows];
                for _ in 0..rows {
                    counts[rng.random_range(0..rows)] += 1.0;
                }
                let chosen: Vec<u32> = (0..rows as u32).filter(|&r| counts[r as usize] > 0.0).collect();
                if let Some(cw) = &class_weight {
                    counts.iter_mut().zip(cw).for_each(|(c, w)| *c *= w);
                }
                build_tree(&input, chosen, Some(&counts), &crit, &p.tree, rng.random(), SplitSearch::Auto)
            } else {
                let all = (0..rows as u32).collect();
                build_tree(&input, all, class_weight.as_deref(), &crit, &p.tree, tseed, SplitSearch::Auto)
            }
        });
        Ok(ForestModel {
            trees,
            bootstrap: p.bootstrap,
            m: labels.m(),
            seed,
        })
    }

    pub fn scores_into(&self, x: &[f64], out: &mut [f64]) {
        for t in &self.trees {
            for &(j, p) in t.leaf(x) {
                out[j] += p;
            }
        }
        let c = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= c);
    }

    pub fn predict(&self, x: &[f64]) -> WordSet {
        let mut s = vec![0.0; self.m];
        self.scores_into(x, &mut s);
        s.iter().enumerate().filter(|(_, &v)| v > 0.5).map(|(j, _)| j).collect()
    }
}

/// Diagnostics recorded for each boosting stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub error: f64,
    pub alpha: f64,
    /// Sum of sample weights after the stage's update.
    pub weight_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoostModel {
    /// Weak learners with leaves in {-1, +1}, and their stage weights.
    pub stages: Vec<(Tree<f64>, f64)>,
    pub history: Vec<StageRecord>,
}

fn weak_params(depth: usize) -> TreeParams {
    TreeParams {
        max_depth: Some(depth),
        min_leaf: 1,
        max_features: MaxFeatures::All,
        threshold_mode: ThresholdMode::Best,
    }
}

fn binary_labels(y: &[bool]) -> Vec<WordSet> {
    y.iter().map(|&t| if t { WordSet::new(vec![0]) } else { WordSet::empty() }).collect()
}

fn require_both_classes(y: &[bool]) -> Result<()> {
    let pos = y.iter().filter(|&&t| t).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::param("both classes must be present"));
    }
    Ok(())
}

impl AdaBoostModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[bool], stages: usize, depth: usize, seed: u64) -> Result<Self> {
        let input = TreeInput::presorted(x);
        Self::fit_on(&input, y, stages, depth, seed)
    }

    pub(crate) fn fit_on(input: &TreeInput, y: &[bool], stages: usize, depth: usize, seed: u64) -> Result<Self> {
        if input.rows() != y.len() {
            return Err(Error::shape(format!("{} rows but {} labels", input.rows(), y.len())));
        }
        require_both_classes(y)?;
        let rows = y.len();
        let labels = binary_labels(y);
        let crit = MultiLabelGini { labels: &labels, m: 1 };
        let params = weak_params(depth);
        let all: Vec<u32> = (0..rows as u32).collect();
        let mut w = vec![1.0 / rows as f64; rows];
        let mut model = AdaBoostModel {
            stages: Vec::new(),
            history: Vec::new(),
        };
        for s in 0..stages {
            let tree = if depth == 1 && input.is_presorted() {
                weighted_stump(input, y, &w)
            } else {
                build_tree(input, all.clone(), Some(&w), &crit, &params, derive_seed(seed, "stage", s as u64), SplitSearch::Presorted)
                    .map_leaves(|leaf| if leaf.first().is_some_and(|&(_, p)| p > 0.5) { 1.0 } else { -1.0 })
            };
            let h: Vec<f64> = (0..rows).map(|r| *input.leaf_of_row(&tree, r)).collect();
            let err: f64 = (0..rows).filter(|&r| (h[r] > 0.0) != y[r]).map(|r| w[r]).sum();
            if err >= 0.5 {
                break;
            }
            if err <= 0.0 {
                model.stages.push((tree, 1.0));
                model.history.push(StageRecord {
                    error: 0.0,
                    alpha: 1.0,
                    weight_sum: w.iter().sum(),
                });
                break;
            }
            let alpha = 0.5 * ((1.0 - err) / err).ln();
            for r in 0..rows {
                let yr = if y[r] { 1.0 } else { -1.0 };
                w[r] *= (-alpha * yr * h[r]).exp();
            }
            let z: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= z);
            model.stages.push((tree, alpha));
            model.history.push(StageRecord {
                error: err,
                alpha,
                weight_sum: w.iter().sum(),
            });
        }
        Ok(model)
    }

    /// `sum_t alpha_t h_t(x)`.
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.stages.iter().map(|(t, a)| a * t.leaf(x)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradBoostModel {
    pub init: f64,
    pub lr: f64,
    pub trees: Vec<Tree<f64>>,
    /// Mean training log-loss after initialization and after each stage.
    pub losses: Vec<f64>,
}

impl GradBoostModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[bool], stages: usize, lr: f64, depth: usize, seed: u64) -> Result<Self> {
        let input = TreeInput::presorted(x);
        Self::fit_on(&input, y, stages, lr, depth, seed)
    }

    /// Starts at the log-odds of the positive rate; each stage fits a
    /// regression tree to `y - sigmoid(F)` with Newton leaf values.
    pub(crate) fn fit_on(input: &TreeInput, y: &[bool], stages: usize, lr: f64, depth: usize, seed: u64) -> Result<Self> {
        if input.rows() != y.len() {
            return Err(Error::shape(format!("{} rows but {} labels", input.rows(), y.len())));
        }
        require_both_classes(y)?;
        let rows = y.len();
        let t: Vec<f64> = y.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
        let rate = t.iter().sum::<f64>() / rows as f64;
        let init = (rate / (1.0 - rate)).ln();
        let mut f = vec![init; rows];
        let params = weak_params(depth);
        let all: Vec<u32> = (0..rows as u32).collect();
        let loss = |f: &[f64]| f.iter().zip(&t).map(|(z, y)| softplus(*z) - y * z).sum::<f64>() / rows as f64;
        let mut model = GradBoostModel {
            init,
            lr,
            trees: Vec::new(),
            losses: vec![loss(&f)],
        };
        let mut resid = vec![0.0; rows];
        let mut hess = vec![0.0; rows];
        for s in 0..stages {
            for r in 0..rows {
                let p = sigmoid(f[r]);
                resid[r] = t[r] - p;
                hess[r] = p * (1.0 - p);
            }
            let crit = SquaredError {
                target: &resid,
                hessian: Some(&hess),
            };
            let tree = build_tree(input, all.clone(), None, &crit, &params, derive_seed(seed, "stage", s as u64), SplitSearch::Presorted);
            for (r, fr) in f.iter_mut().enumerate() {
                *fr += lr * input.leaf_of_row(&tree, r);
            }
            let l = loss(&f);
            if !l.is_finite() {
                return Err(Error::Diverged(format!("gradient boosting stage {s}: loss = {l}")));
            }
            model.losses.push(l);
            model.trees.push(tree);
        }
        Ok(model)
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.init + self.lr * self.trees.iter().map(|t| t.leaf(x)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}
