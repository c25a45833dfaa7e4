//! CART trees: greedy binary partitioning with best or random thresholds.
//!
//! Rows go left when `x[feature] <= threshold`. Among equally good splits the
//! lowest feature index wins, then the lowest threshold. Best thresholds sit
//! midway between consecutive distinct values.
//!
//! Two search strategies build the same tree. The presorted one keeps every
//! feature's row order per node and partitions it stably; the per-node one
//! sorts candidate features at each node. Presorting pays off when the
//! number of features is small relative to the features tried per split.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from_seed};
use crate::tutor::WordSet;

/// Number of features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxFeatures {
    All,
    /// `ceil(sqrt(n))`
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n: usize) -> usize {
        let k = match self {
            MaxFeatures::All => n,
            MaxFeatures::Sqrt => (n as f64).sqrt().ceil() as usize,
            MaxFeatures::Count(c) => c,
        };
        k.clamp(1, n.max(1))
    }
}

impl FromStr for MaxFeatures {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(MaxFeatures::All),
            "sqrt" => Ok(MaxFeatures::Sqrt),
            v => match v.parse::<usize>() {
                Ok(c) if c > 0 => Ok(MaxFeatures::Count(c)),
                _ => Err(Error::Config(format!("max_features must be `all`, `sqrt` or a positive integer, got `{v}`"))),
            },
        }
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxFeatures::All => f.write_str("all"),
            MaxFeatures::Sqrt => f.write_str("sqrt"),
            MaxFeatures::Count(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdMode {
    Best,
    /// One uniform threshold per candidate feature, drawn within the node's
    /// observed range.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub max_features: MaxFeatures,
    pub threshold_mode: ThresholdMode,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_leaf: 1,
            max_features: MaxFeatures::All,
            threshold_mode: ThresholdMode::Best,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node<L> {
    Leaf(L),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in preorder; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<L> {
    pub nodes: Vec<Node<L>>,
}

impl<L> Tree<L> {
    pub fn leaf(&self, x: &[f64]) -> &L {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(l) => return l,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Number of threshold comparisons made when routing `x`.
    pub fn comparisons(&self, x: &[f64]) -> usize {
        let mut i = 0;
        let mut c = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = &self.nodes[i]
        {
            c += 1;
            i = if x[*feature] <= *threshold { *left } else { *right };
        }
        c
    }

    pub fn depth(&self) -> usize {
        fn go<L>(t: &Tree<L>, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn map_leaves<M>(self, mut f: impl FnMut(L) -> M) -> Tree<M> {
        Tree {
            nodes: self
                .nodes
                .into_iter()
                .map(|n| match n {
                    Node::Leaf(l) => Node::Leaf(f(l)),
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    },
                })
                .collect(),
        }
    }
}

/// Impurity bookkeeping for one side of a candidate split.
pub(crate) trait Criterion: Sync {
    type Stats: Clone;
    type Leaf;
    fn empty(&self) -> Self::Stats;
    fn add(&self, s: &mut Self::Stats, row: usize, w: f64);
    fn remove(&self, s: &mut Self::Stats, row: usize, w: f64);
    fn weight(&self, s: &Self::Stats) -> f64;
    /// Weighted impurity: node weight times impurity.
    fn cost(&self, s: &Self::Stats) -> f64;
    fn leaf(&self, s: &Self::Stats) -> Self::Leaf;
}

/// Per-word positive fractions of a leaf, sparse and sorted by word id.
pub type WordFractions = Vec<(usize, f64)>;

/// Mean per-word Gini over `m` binary labels.
pub(crate) struct MultiLabelGini<'a> {
    pub labels: &'a [WordSet],
    pub m: usize,
}

#[derive(Clone)]
pub(crate) struct GiniStats {
    w: f64,
    counts: Vec<f64>,
    s1: f64,
    s2: f64,
}

impl Criterion for MultiLabelGini<'_> {
    type Stats = GiniStats;
    type Leaf = WordFractions;

    fn empty(&self) -> GiniStats {
        GiniStats {
            w: 0.0,
            counts: vec![0.0; self.m],
            s1: 0.0,
            s2: 0.0,
        }
    }

    fn add(&self, s: &mut GiniStats, row: usize, w: f64) {
        s.w += w;
        for &j in self.labels[row].ids() {
            let c = s.counts[j];
            s.s2 += w * (2.0 * c + w);
            s.s1 += w;
            s.counts[j] = c + w;
        }
    }

    fn remove(&self, s: &mut GiniStats, row: usize, w: f64) {
        s.w -= w;
        for &j in self.labels[row].ids() {
            let c = s.counts[j];
            s.s2 += w * (w - 2.0 * c);
            s.s1 -= w;
            s.counts[j] = c - w;
        }
    }

    fn weight(&self, s: &GiniStats) -> f64 {
        s.w
    }

    fn cost(&self, s: &GiniStats) -> f64 {
        if s.w <= 0.0 {
            return 0.0;
        }
        (2.0 / self.m as f64) * (s.s1 - s.s2 / s.w)
    }

    fn leaf(&self, s: &GiniStats) -> WordFractions {
        s.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0.0)
            .map(|(j, &c)| (j, c / s.w))
            .collect()
    }
}

/// Squared-error criterion on a real target. With `hessian` set, leaves hold
/// the Newton step `sum(target) / sum(hessian)`; otherwise the mean.
pub(crate) struct SquaredError<'a> {
    pub target: &'a [f64],
    pub hessian: Option<&'a [f64]>,
}

#[derive(Clone)]
pub(crate) struct SeStats {
    w: f64,
    sy: f64,
    syy: f64,
    sh: f64,
}

impl Criterion for SquaredError<'_> {
    type Stats = SeStats;
    type Leaf = f64;

    fn empty(&self) -> SeStats {
        SeStats {
            w: 0.0,
            sy: 0.0,
            syy: 0.0,
            sh: 0.0,
        }
    }

    fn add(&self, s: &mut SeStats, row: usize, w: f64) {
        let y = self.target[row];
        s.w += w;
        s.sy += w * y;
        s.syy += w * y * y;
        if let Some(h) = self.hessian {
            s.sh += w * h[row];
        }
    }

    fn remove(&self, s: &mut SeStats, row: usize, w: f64) {
        let y = self.target[row];
        s.w -= w;
        s.sy -= w * y;
        s.syy -= w * y * y;
        if let Some(h) = self.hessian {
            s.sh -= w * h[row];
        }
    }

    fn weight(&self, s: &SeStats) -> f64 {
        s.w
    }

    fn cost(&self, s: &SeStats) -> f64 {
        if s.w <= 0.0 {
            return 0.0;
        }
        (s.syy - s.sy * s.sy / s.w).max(0.0)
    }

    fn leaf(&self, s: &SeStats) -> f64 {
        match self.hessian {
            Some(_) if s.sh > 1e-150 => s.sy / s.sh,
            Some(_) => 0.0,
            None if s.w > 0.0 => s.sy / s.w,
            None => 0.0,
        }
    }
}

/// Column-major copy of the training features, optionally presorted.
#[derive(Debug, Clone)]
pub struct TreeInput {
    xt: Array2<f64>,
    sorted: Option<Vec<Vec<u32>>>,
    /// Feature values in presorted order.
    sorted_values: Option<Vec<Vec<f64>>>,
}

impl TreeInput {
    pub fn new(x: ArrayView2<'_, f64>) -> Self {
        TreeInput {
            xt: x.t().as_standard_layout().into_owned(),
            sorted: None,
            sorted_values: None,
        }
    }

    /// Also sorts every feature once by `(value, row)`.
    pub fn presorted(x: ArrayView2<'_, f64>) -> Self {
        let mut input = Self::new(x);
        let rows = input.rows() as u32;
        let sorted: Vec<Vec<u32>> = (0..input.features())
            .map(|f| {
                let col = input.col(f);
                let mut order: Vec<u32> = (0..rows).collect();
                order.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                order
            })
            .collect();
        let values = sorted
            .iter()
            .enumerate()
            .map(|(f, order)| {
                let col = input.col(f);
                order.iter().map(|&r| col[r as usize]).collect()
            })
            .collect();
        input.sorted = Some(sorted);
        input.sorted_values = Some(values);
        input
    }

    pub fn is_presorted(&self) -> bool {
        self.sorted.is_some()
    }

    pub fn rows(&self) -> usize {
        self.xt.ncols()
    }

    pub fn features(&self) -> usize {
        self.xt.nrows()
    }

    /// Routes training row `r` through `tree`.
    pub(crate) fn leaf_of_row<'t, L>(&self, tree: &'t Tree<L>, r: usize) -> &'t L {
        let mut i = 0;
        loop {
            match &tree.nodes[i] {
                Node::Leaf(l) => return l,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if self.xt[[*feature, r]] <= *threshold { *left } else { *right },
            }
        }
    }

    fn col(&self, f: usize) -> &[f64] {
        self.xt.row(f).to_slice().expect("standard layout")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSearch {
    Auto,
    Presorted,
    PerNode,
}

const PRESORT_FEATURE_RATIO: usize = 4;

/// Split costs this close (relative) count as equal.
const COST_TIE_TOLERANCE: f64 = 1e-12;

struct NodeSet {
    /// Ascending row ids.
    rows: Vec<u32>,
    /// Per-feature row order, when presorted.
    sorted: Option<Vec<Vec<u32>>>,
}

struct Candidate {
    cost: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn better_than(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => {
                let tol = COST_TIE_TOLERANCE * o.cost.abs().max(1.0);
                self.cost < o.cost - tol
                    || (self.cost <= o.cost + tol
                        && (self.feature < o.feature || (self.feature == o.feature && self.threshold < o.threshold)))
            }
        }
    }
}

struct Builder<'a, C: Criterion> {
    input: &'a TreeInput,
    weights: Option<&'a [f64]>,
    crit: &'a C,
    params: &'a TreeParams,
    k_features: usize,
    left_mark: Vec<bool>,
}

impl<C: Criterion> Builder<'_, C> {
    fn w(&self, r: u32) -> f64 {
        self.weights.map_or(1.0, |w| w[r as usize])
    }

    fn stats(&self, rows: &[u32]) -> C::Stats {
        let mut s = self.crit.empty();
        for &r in rows {
            self.crit.add(&mut s, r as usize, self.w(r));
        }
        s
    }

    fn best_on_sorted(&self, f: usize, order: &[u32], total: &C::Stats, best: &mut Option<Candidate>) -> bool {
        let col = self.input.col(f);
        let min_leaf = self.params.min_leaf;
        let len = order.len();
        let mut left = self.crit.empty();
        let mut right = total.clone();
        let mut found = false;
        for i in 0..len - 1 {
            let r = order[i];
            let w = self.w(r);
            self.crit.add(&mut left, r as usize, w);
            self.crit.remove(&mut right, r as usize, w);
            let nl = i + 1;
            if len - nl < min_leaf {
                break;
            }
            let (a, b) = (col[r as usize], col[order[i + 1] as usize]);
            if b <= a || nl < min_leaf {
                continue;
            }
            found = true;
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            let cand = Candidate {
                cost: self.crit.cost(&left) + self.crit.cost(&right),
                feature: f,
                threshold,
            };
            if cand.better_than(best) {
                *best = Some(cand);
            }
        }
        found
    }

    fn random_on(&self, f: usize, rows: &[u32], total: &C::Stats, rng: &mut crate::rng::Rng, best: &mut Option<Candidate>) -> bool {
        let col = self.input.col(f);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in rows {
            let v = col[r as usize];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi <= lo {
            return false;
        }
        let mut threshold = rng.random_range(lo..hi);
        if threshold >= hi {
            threshold = lo;
        }
        let mut left = self.crit.empty();
        let mut right = total.clone();
        let mut nl = 0;
        for &r in rows {
            if col[r as usize] <= threshold {
                let w = self.w(r);
                self.crit.add(&mut left, r as usize, w);
                self.crit.remove(&mut right, r as usize, w);
                nl += 1;
            }
        }
        let min_leaf = self.params.min_leaf;
        if nl < min_leaf || rows.len() - nl < min_leaf {
            return false;
        }
        let cand = Candidate {
            cost: self.crit.cost(&left) + self.crit.cost(&right),
            feature: f,
            threshold,
        };
        if cand.better_than(best) {
            *best = Some(cand);
        }
        true
    }

    fn find_split(&self, set: &NodeSet, total: &C::Stats, seed: u64) -> Option<Candidate> {
        let n = self.input.features();
        let mut rng = rng_from_seed(seed);
        let features: Vec<usize> = if self.k_features >= n {
            (0..n).collect()
        } else {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            all
        };
        let mut best = None;
        let mut scratch: Vec<u32> = Vec::new();
        let mut any_valid = false;
        for (visited, f) in features.into_iter().enumerate() {
            if visited >= self.k_features && any_valid {
                break;
            }
            let valid = match self.params.threshold_mode {
                ThresholdMode::Random => self.random_on(f, &set.rows, total, &mut rng, &mut best),
                ThresholdMode::Best => match &set.sorted {
                    Some(sorted) => self.best_on_sorted(f, &sorted[f], total, &mut best),
                    None => {
                        let col = self.input.col(f);
                        scratch.clear();
                        scratch.extend_from_slice(&set.rows);
                        scratch.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                        self.best_on_sorted(f, &scratch, total, &mut best)
                    }
                },
            };
            any_valid |= valid;
        }
        best
    }

    fn partition(&mut self, set: NodeSet, feature: usize, threshold: f64) -> (NodeSet, NodeSet) {
        let col = self.input.col(feature);
        let (lr, rr): (Vec<u32>, Vec<u32>) = set.rows.iter().partition(|&&r| col[r as usize] <= threshold);
        let sorted = set.sorted.map(|lists| {
            for &r in &lr {
                self.left_mark[r as usize] = true;
            }
            let split: (Vec<Vec<u32>>, Vec<Vec<u32>>) = lists
                .into_iter()
                .map(|list| list.into_iter().partition::<Vec<u32>, _>(|&r| self.left_mark[r as usize]))
                .unzip();
            for &r in &lr {
                self.left_mark[r as usize] = false;
            }
            split
        });
        let (ls, rs) = match sorted {
            Some((a, b)) => (Some(a), Some(b)),
            None => (None, None),
        };
        (NodeSet { rows: lr, sorted: ls }, NodeSet { rows: rr, sorted: rs })
    }

    fn grow(mut self, root: NodeSet, seed: u64) -> Tree<C::Leaf> {
        let mut nodes: Vec<Option<Node<C::Leaf>>> = vec![None];
        let mut stack = vec![(0usize, root, 0usize, seed)];
        while let Some((idx, set, depth, seed)) = stack.pop() {
            let total = self.stats(&set.rows);
            let weight = self.crit.weight(&total);
            let can_split = self.params.max_depth.is_none_or(|d| depth < d)
                && set.rows.len() >= 2 * self.params.min_leaf
                && self.crit.cost(&total) > 1e-12 * weight;
            let split = if can_split { self.find_split(&set, &total, seed) } else { None };
            match split {
                None => nodes[idx] = Some(Node::Leaf(self.crit.leaf(&total))),
                Some(c) => {
                    let (l, r) = self.partition(set, c.feature, c.threshold);
                    let (li, ri) = (nodes.len(), nodes.len() + 1);
                    nodes.push(None);
                    nodes.push(None);
                    nodes[idx] = Some(Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left: li,
                        right: ri,
                    });
                    stack.push((ri, r, depth + 1, child_seed(seed, 1)));
                    stack.push((li, l, depth + 1, child_seed(seed, 0)));
                }
            }
        }
        let mut tree = Tree {
            nodes: nodes.into_iter().map(|n| n.expect("every node is filled")).collect(),
        };
        renumber_preorder(&mut tree);
        tree
    }
}

fn renumber_preorder<L>(tree: &mut Tree<L>) {
    let len = tree.nodes.len();
    let mut order = Vec::with_capacity(len);
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        order.push(i);
        if let Node::Split { left, right, .. } = &tree.nodes[i] {
            stack.push(*right);
            stack.push(*left);
        }
    }
    let mut new_index = vec![0usize; len];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let mut old: Vec<Option<Node<L>>> = std::mem::take(&mut tree.nodes).into_iter().map(Some).collect();
    tree.nodes = order
        .iter()
        .map(|&i| match old[i].take().expect("visited once") {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => Node::Split {
                feature,
                threshold,
                left: new_index[left],
                right: new_index[right],
            },
            leaf => leaf,
        })
        .collect();
}

/// Grows one tree on `rows` (ascending, each with positive weight).
pub(crate) fn build_tree<C: Criterion>(
    input: &TreeInput,
    rows: Vec<u32>,
    weights: Option<&[f64]>,
    crit: &C,
    params: &TreeParams,
    seed: u64,
    search: SplitSearch,
) -> Tree<C::Leaf> {
    let n = input.features();
    let k_features = params.max_features.resolve(n);
    let presort = params.threshold_mode == ThresholdMode::Best
        && match search {
            SplitSearch::Presorted => true,
            SplitSearch::PerNode => false,
            SplitSearch::Auto => n <= PRESORT_FEATURE_RATIO * k_features,
        };
    let mut left_mark = Vec::new();
    let sorted = if presort {
        left_mark = vec![false; input.rows()];
        let mut member = vec![false; input.rows()];
        for &r in &rows {
            member[r as usize] = true;
        }
        let owned;
        let lists = match &input.sorted {
            Some(s) => s,
            None => {
                owned = TreeInput::presorted(input.xt.t()).sorted.expect("presorted");
                &owned
            }
        };
        Some(
            lists
                .iter()
                .map(|l| l.iter().copied().filter(|&r| member[r as usize]).collect())
                .collect(),
        )
    } else {
        None
    };
    let builder = Builder {
        input,
        weights,
        crit,
        params,
        k_features,
        left_mark,
    };
    builder.grow(NodeSet { rows, sorted }, seed)
}

fn binary_gini_cost(pos: f64, w: f64) -> f64 {
    if w <= 0.0 {
        0.0
    } else {
        2.0 * (pos - pos * pos / w)
    }
}

/// Depth-1 weighted Gini tree over all rows of a presorted input, with
/// leaves `+1` where the positive weight fraction exceeds one half and `-1`
/// elsewhere. Same splits and tie rules as [`build_tree`] with one binary
/// label, depth 1 and `min_leaf` 1, without the per-node bookkeeping.
pub(crate) fn weighted_stump(input: &TreeInput, y: &[bool], w: &[f64]) -> Tree<f64> {
    let sorted = input.sorted.as_ref().expect("stump search needs a presorted input");
    let leaf = |pos: f64, total: f64| if total > 0.0 && pos / total > 0.5 { 1.0 } else { -1.0 };
    let wp: Vec<f64> = w.iter().zip(y).map(|(&wr, &t)| if t { wr } else { 0.0 }).collect();
    let total: f64 = w.iter().sum();
    let pos: f64 = wp.iter().sum();
    let constant = Tree {
        nodes: vec![Node::Leaf(leaf(pos, total))],
    };
    if y.len() < 2 || binary_gini_cost(pos, total) <= 1e-12 * total {
        return constant;
    }
    let mut best: Option<Candidate> = None;
    let mut best_left = (0.0, 0.0);
    let values = input.sorted_values.as_ref().expect("set with the row order");
    for (f, (order, vals)) in sorted.iter().zip(values).enumerate() {
        let (mut lp, mut lw) = (0.0, 0.0);
        let mut bound = best.as_ref().map_or(f64::INFINITY, |b| b.cost + COST_TIE_TOLERANCE * b.cost.abs().max(1.0));
        for i in 0..order.len() - 1 {
            let r = order[i] as usize;
            lw += w[r];
            lp += wp[r];
            let (a, b) = (vals[i], vals[i + 1]);
            if b <= a {
                continue;
            }
            let (rp, rw) = (pos - lp, total - lw);
            let cost = if rw > 0.0 {
                2.0 * pos - 2.0 * (lp * lp * rw + rp * rp * lw) / (lw * rw)
            } else {
                binary_gini_cost(lp, lw) + binary_gini_cost(rp, rw)
            };
            if cost > bound {
                continue;
            }
            let mut threshold = a + (b - a) / 2.0;
            if threshold >= b {
                threshold = a;
            }
            let cand = Candidate {
                cost,
                feature: f,
                threshold,
            };
            if cand.better_than(&best) {
                bound = cost + COST_TIE_TOLERANCE * cost.abs().max(1.0);
                best = Some(cand);
                best_left = (lp, lw);
            }
        }
    }
    match best {
        None => constant,
        Some(c) => Tree {
            nodes: vec![
                Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left: 1,
                    right: 2,
                },
                Node::Leaf(leaf(best_left.0, best_left.1)),
                Node::Leaf(leaf(pos - best_left.0, total - best_left.1)),
            ],
        },
    }
}

/// A single multi-output classification tree.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTreeModel {
    pub tree: Tree<WordFractions>,
    pub m: usize,
}

impl DecisionTreeModel {
    pub fn fit(x: ArrayView2<'_, f64>, labels: &crate::data::LabelMatrix, params: &TreeParams, seed: u64) -> Result<Self> {
        Self::fit_with(x, labels, params, seed, SplitSearch::Auto)
    }

    pub fn fit_with(
        x: ArrayView2<'_, f64>,
        labels: &crate::data::LabelMatrix,
        params: &TreeParams,
        seed: u64,
        search: SplitSearch,
    ) -> Result<Self> {
        check_fit(x, labels.len(), params)?;
        let input = TreeInput::new(x);
        let crit = MultiLabelGini {
            labels: labels.rows(),
            m: labels.m().max(1),
        };
        let rows = (0..x.nrows() as u32).collect();
        Ok(DecisionTreeModel {
            tree: build_tree(&input, rows, None, &crit, params, seed, search),
            m: labels.m(),
        })
    }

    pub fn scores_into(&self, x: &[f64], out: &mut [f64]) {
        for &(j, p) in self.tree.leaf(x) {
            out[j] += p;
        }
    }
}

pub(crate) fn check_fit(x: ArrayView2<'_, f64>, labels: usize, params: &TreeParams) -> Result<()> {
    if x.nrows() != labels {
        return Err(Error::shape(format!("{} rows but {} labels", x.nrows(), labels)));
    }
    if x.nrows() == 0 {
        return Err(Error::param("empty training set"));
    }
    if x.ncols() == 0 {
        return Err(Error::param("no features"));
    }
    if params.min_leaf == 0 {
        return Err(Error::param("min_leaf must be at least 1"));
    }
    Ok(())
}
