//! k-nearest neighbours and nearest-centroid classifiers.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::LabelMatrix;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Parallelism};
use crate::tutor::WordSet;

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let d = a[4 * c + l] - b[4 * c + l];
            acc[l] += d * d;
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// Brute-force KNN over stored training rows with unweighted per-word votes.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    x: Array2<f64>,
    labels: LabelMatrix,
    k: usize,
}

impl KnnModel {
    pub fn fit(x: ArrayView2<'_, f64>, labels: &LabelMatrix, k: usize) -> Result<Self> {
        if x.nrows() != labels.len() {
            return Err(Error::shape(format!("{} rows but {} label rows", x.nrows(), labels.len())));
        }
        if k == 0 || k > x.nrows() {
            return Err(Error::param(format!(
                "k_neighbors = {k} needs 1..={} stored rows",
                x.nrows()
            )));
        }
        Ok(KnnModel {
            x: x.as_standard_layout().into_owned(),
            labels: labels.clone(),
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.labels.m()
    }

    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn stored_x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn stored_labels(&self) -> &LabelMatrix {
        &self.labels
    }

    /// Stored-row indices of the `k` nearest rows; equal distances favour the
    /// lower index.
    pub fn neighbors(&self, q: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .outer_iter()
            .enumerate()
            .map(|(i, r)| (squared_euclidean(r.as_slice().expect("standard layout"), q), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_unstable_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Vote fraction of each word among the neighbours of `q`.
    pub fn vote_fractions(&self, q: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.m()];
        for i in self.neighbors(q) {
            for &j in self.labels.row(i).ids() {
                votes[j] += 1.0;
            }
        }
        let k = self.k as f64;
        votes.iter_mut().for_each(|v| *v /= k);
        votes
    }

    pub fn scores(&self, x: ArrayView2<'_, f64>, par: Parallelism) -> Array2<f64> {
        let x = x.as_standard_layout();
        let rows = map_indexed(x.nrows(), par, |i| self.vote_fractions(x.row(i).as_slice().expect("standard layout")));
        let mut out = Array2::zeros((x.nrows(), self.m()));
        for (mut dst, src) in out.outer_iter_mut().zip(rows) {
            dst.assign(&ndarray::ArrayView1::from(&src));
        }
        out
    }

    /// Words named by strictly more than half of the neighbours.
    pub fn predict(&self, q: &[f64]) -> WordSet {
        let k = self.k;
        let mut votes = vec![0usize; self.m()];
        for i in self.neighbors(q) {
            for &j in self.labels.row(i).ids() {
                votes[j] += 1;
            }
        }
        votes
            .iter()
            .enumerate()
            .filter(|(_, &v)| 2 * v > k)
            .map(|(j, _)| j)
            .collect()
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

fn mean_of_rows<'a>(rows: impl Iterator<Item = ndarray::ArrayView1<'a, f64>>, n: usize) -> (Vec<f64>, usize) {
    let mut sum = vec![0.0; n];
    let mut count = 0;
    for r in rows {
        for (s, v) in sum.iter_mut().zip(r) {
            *s += v;
        }
        count += 1;
    }
    if count > 0 {
        sum.iter_mut().for_each(|s| *s /= count as f64);
    }
    (sum, count)
}

/// One word's positive and negative centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidBinaryModel {
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

impl CentroidBinaryModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[bool]) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::shape(format!("{} rows but {} labels", x.nrows(), y.len())));
        }
        let n = x.ncols();
        let (positive, np) = mean_of_rows(x.outer_iter().zip(y).filter(|(_, &t)| t).map(|(r, _)| r), n);
        let (negative, nn) = mean_of_rows(x.outer_iter().zip(y).filter(|(_, &t)| !t).map(|(r, _)| r), n);
        if np == 0 || nn == 0 {
            return Err(Error::param("both classes must be present"));
        }
        Ok(CentroidBinaryModel { positive, negative })
    }

    /// `d(x, negative) - d(x, positive)`; positive means closer to the
    /// positive centroid, and a tie scores 0 (negative).
    pub fn margin(&self, x: &[f64]) -> f64 {
        euclidean(x, &self.negative) - euclidean(x, &self.positive)
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.margin(x) > 0.0
    }
}

/// Natively multi-label nearest centroid: one centroid per distinct training
/// label set, predicting the set of the closest centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSetCentroids {
    pub sets: Vec<WordSet>,
    pub centroids: Array2<f64>,
    m: usize,
}

impl LabelSetCentroids {
    pub fn fit(x: ArrayView2<'_, f64>, labels: &LabelMatrix) -> Result<Self> {
        if x.nrows() != labels.len() {
            return Err(Error::shape(format!("{} rows but {} label rows", x.nrows(), labels.len())));
        }
        if x.nrows() == 0 {
            return Err(Error::param("empty training set"));
        }
        let mut index = std::collections::HashMap::new();
        let mut sets: Vec<WordSet> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (i, s) in labels.rows().iter().enumerate() {
            let g = *index.entry(s.clone()).or_insert_with(|| {
                sets.push(s.clone());
                members.push(Vec::new());
                sets.len() - 1
            });
            members[g].push(i);
        }
        let n = x.ncols();
        let mut centroids = Array2::zeros((sets.len(), n));
        for (g, rows) in members.iter().enumerate() {
            let (c, _) = mean_of_rows(rows.iter().map(|&i| x.row(i)), n);
            centroids.row_mut(g).assign(&ndarray::ArrayView1::from(&c));
        }
        Ok(LabelSetCentroids {
            sets,
            centroids,
            m: labels.m(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Index of the nearest centroid; ties favour the earlier group.
    pub fn nearest(&self, q: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (g, c) in self.centroids.outer_iter().enumerate() {
            let d = squared_euclidean(c.as_slice().expect("standard layout"), q);
            if d < best.0 {
                best = (d, g);
            }
        }
        best.1
    }

    pub fn predict(&self, q: &[f64]) -> &WordSet {
        &self.sets[self.nearest(q)]
    }
}
