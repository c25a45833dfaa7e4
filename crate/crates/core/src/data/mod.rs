//! Object matrices, tutor labeling and dataset generation.

mod folds;
mod io;
mod scale;

pub use folds::{kfold_split, FoldSplit};
pub use io::{
    load_grounded, read_features_csv, read_labels_csv, write_features_csv, write_labels_csv, DatasetMetadata, Grounded,
};
pub use scale::{standardize, LinearScaler, Standardizer};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::tutor::{Lexicon, WordSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceTag {
    #[serde(rename = "SIM")]
    Sim,
    #[serde(rename = "SIM-DEVELOP")]
    SimDevelop,
    #[serde(rename = "GRO1")]
    Gro1,
    #[serde(rename = "GRO2-tutor")]
    Gro2Tutor,
    #[serde(rename = "GRO2-learner")]
    Gro2Learner,
    #[serde(rename = "CLUSTERED")]
    Clustered,
}

impl SourceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceTag::Sim => "SIM",
            SourceTag::SimDevelop => "SIM-DEVELOP",
            SourceTag::Gro1 => "GRO1",
            SourceTag::Gro2Tutor => "GRO2-tutor",
            SourceTag::Gro2Learner => "GRO2-learner",
            SourceTag::Clustered => "CLUSTERED",
        }
    }
}

impl std::fmt::Display for SourceTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Row-major matrix of object feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMatrix {
    pub values: Array2<f64>,
    pub source: SourceTag,
}

impl ObjectMatrix {
    pub fn new(values: Array2<f64>, source: SourceTag) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("object matrix contains non-finite values".into()));
        }
        Ok(ObjectMatrix { values, source })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn select_rows(&self, idx: &[usize]) -> ObjectMatrix {
        ObjectMatrix {
            values: self.values.select(Axis(0), idx),
            source: self.source,
        }
    }
}

/// Multi-hot label matrix stored as one sorted word-id set per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMatrix {
    m: usize,
    rows: Vec<WordSet>,
}

impl LabelMatrix {
    pub fn new(m: usize, rows: Vec<WordSet>) -> Result<Self> {
        if let Some((i, s)) = rows.iter().enumerate().find(|(_, s)| s.max_id().is_some_and(|id| id >= m)) {
            return Err(Error::shape(format!(
                "label row {i} holds word id {} but only {m} words exist",
                s.max_id().unwrap_or_default()
            )));
        }
        Ok(LabelMatrix { m, rows })
    }

    pub fn from_dense(dense: ArrayView2<'_, u8>) -> Result<Self> {
        let m = dense.ncols();
        let mut rows = Vec::with_capacity(dense.nrows());
        for (i, r) in dense.outer_iter().enumerate() {
            let mut ids = Vec::new();
            for (j, &v) in r.iter().enumerate() {
                match v {
                    0 => {}
                    1 => ids.push(j),
                    other => return Err(Error::Contract(format!("label ({i},{j}) = {other} is not binary"))),
                }
            }
            rows.push(WordSet::new(ids));
        }
        Ok(LabelMatrix { m, rows })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[WordSet] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &WordSet {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].contains(j)
    }

    pub fn column(&self, j: usize) -> Vec<bool> {
        self.rows.iter().map(|r| r.contains(j)).collect()
    }

    /// All columns at once; cheaper than calling [`column`](Self::column) `m` times.
    pub fn columns(&self) -> Vec<Vec<bool>> {
        let mut cols = vec![vec![false; self.rows.len()]; self.m];
        for (i, r) in self.rows.iter().enumerate() {
            for &j in r.ids() {
                cols[j][i] = true;
            }
        }
        cols
    }

    pub fn to_dense(&self) -> Array2<u8> {
        let mut d = Array2::zeros((self.rows.len(), self.m));
        for (i, r) in self.rows.iter().enumerate() {
            for &j in r.ids() {
                d[[i, j]] = 1;
            }
        }
        d
    }

    /// Positive count per word.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.m];
        for r in &self.rows {
            for &j in r.ids() {
                c[j] += 1;
            }
        }
        c
    }

    pub fn select_rows(&self, idx: &[usize]) -> LabelMatrix {
        LabelMatrix {
            m: self.m,
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Keeps only the given columns, renumbered `0..cols.len()`.
    pub fn select_columns(&self, cols: &[usize]) -> LabelMatrix {
        let rows = self
            .rows
            .iter()
            .map(|r| cols.iter().enumerate().filter(|(_, &c)| r.contains(c)).map(|(new, _)| new).collect())
            .collect();
        LabelMatrix { m: cols.len(), rows }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub objects: ObjectMatrix,
    pub labels: LabelMatrix,
    pub k: usize,
    /// Seed of the producing lexicon; `None` for externally labeled data.
    pub lexicon_seed: Option<u64>,
}

impl LabeledDataset {
    pub fn rows(&self) -> usize {
        self.objects.rows()
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            objects: self.objects.select_rows(idx),
            labels: self.labels.select_rows(idx),
            k: self.k,
            lexicon_seed: self.lexicon_seed,
        }
    }
}

/// Two views of the same physical objects, labeled from the tutor's view.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDataset {
    pub tutor_view: ObjectMatrix,
    pub learner_view: ObjectMatrix,
    pub labels: LabelMatrix,
    pub k: usize,
    pub lexicon_seed: Option<u64>,
}

impl PairedDataset {
    /// The dataset a learner trains on: learner features with tutor labels.
    pub fn learner_dataset(&self) -> LabeledDataset {
        LabeledDataset {
            objects: self.learner_view.clone(),
            labels: self.labels.clone(),
            k: self.k,
            lexicon_seed: self.lexicon_seed,
        }
    }
}

pub fn gen_uniform(rows: usize, n: usize, seed: u64) -> Result<ObjectMatrix> {
    gen_uniform_tagged(rows, n, seed, SourceTag::Sim)
}

pub fn gen_uniform_tagged(rows: usize, n: usize, seed: u64, source: SourceTag) -> Result<ObjectMatrix> {
    if rows == 0 || n == 0 {
        return Err(Error::param(format!("uniform data needs rows, n >= 1 (got {rows}x{n})")));
    }
    let mut rng = rng_from_seed(seed);
    let values = Array2::from_shape_simple_fn((rows, n), || rng.random::<f64>());
    ObjectMatrix::new(values, source)
}

/// Output of [`gen_clustered`] with generation-time bookkeeping.
#[derive(Debug, Clone)]
pub struct ClusteredSample {
    pub objects: ObjectMatrix,
    pub centers: Array2<f64>,
    pub assignment: Vec<usize>,
    /// Values before clipping to `[0,1]`.
    pub unclipped: Array2<f64>,
}

/// Gaussian blobs with uniform centers, clipped to the unit cube.
pub fn gen_clustered(rows: usize, n: usize, cluster_count: usize, spread: f64, seed: u64) -> Result<ClusteredSample> {
    if rows == 0 || n == 0 {
        return Err(Error::param(format!("clustered data needs rows, n >= 1 (got {rows}x{n})")));
    }
    if cluster_count == 0 {
        return Err(Error::param("cluster_count must be at least 1"));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::param(format!("spread must be positive, got {spread}")));
    }
    let mut rng = rng_from_seed(seed);
    let centers = Array2::from_shape_simple_fn((cluster_count, n), || rng.random::<f64>());
    let noise = Normal::new(0.0, spread).map_err(|e| Error::param(e.to_string()))?;
    let mut unclipped = Array2::zeros((rows, n));
    let mut assignment = Vec::with_capacity(rows);
    for i in 0..rows {
        let c = rng.random_range(0..cluster_count);
        assignment.push(c);
        for j in 0..n {
            unclipped[[i, j]] = centers[[c, j]] + noise.sample(&mut rng);
        }
    }
    let values = unclipped.mapv(|v: f64| v.clamp(0.0, 1.0));
    Ok(ClusteredSample {
        objects: ObjectMatrix::new(values, SourceTag::Clustered)?,
        centers,
        assignment,
        unclipped,
    })
}

/// Adds independent Gaussian noise to every cell, clipped to `[0,1]`; used as a
/// synthetic stand-in for a second robot's viewpoint.
pub fn perturb_view(objects: &ObjectMatrix, sigma: f64, seed: u64) -> Result<ObjectMatrix> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("noise sigma must be >= 0, got {sigma}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut values = objects.values.clone();
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma).map_err(|e| Error::param(e.to_string()))?;
        values.mapv_inplace(|v| (v + noise.sample(&mut rng)).clamp(0.0, 1.0));
    }
    ObjectMatrix::new(values, SourceTag::Gro2Learner)
}

pub fn label_with_tutor(objects: &ObjectMatrix, lexicon: &Lexicon, k: usize) -> Result<LabeledDataset> {
    if objects.n() != lexicon.n {
        return Err(Error::shape(format!(
            "objects have {} dimensions, lexicon has {}",
            objects.n(),
            lexicon.n
        )));
    }
    let rows = objects
        .values
        .outer_iter()
        .map(|r| match r.as_slice() {
            Some(s) => lexicon.describe(s, k),
            None => lexicon.describe(&r.to_vec(), k),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset {
        objects: objects.clone(),
        labels: LabelMatrix::new(lexicon.m(), rows)?,
        k,
        lexicon_seed: Some(lexicon.rng_seed),
    })
}

pub fn label_paired(
    tutor_view: &ObjectMatrix,
    learner_view: &ObjectMatrix,
    lexicon: &Lexicon,
    k: usize,
) -> Result<PairedDataset> {
    if tutor_view.values.dim() != learner_view.values.dim() {
        return Err(Error::shape(format!(
            "tutor view is {:?}, learner view is {:?}",
            tutor_view.values.dim(),
            learner_view.values.dim()
        )));
    }
    let labeled = label_with_tutor(tutor_view, lexicon, k)?;
    Ok(PairedDataset {
        tutor_view: tutor_view.clone(),
        learner_view: learner_view.clone(),
        labels: labeled.labels,
        k,
        lexicon_seed: Some(lexicon.rng_seed),
    })
}
