//! Multi-layer perceptron with ReLU hidden layers and a sigmoid output per
//! word, trained by minibatch gradient descent on binary cross-entropy.
//!
//! The training loss sums the per-word cross-entropy over words and averages
//! it over the rows of a batch.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use super::linear::{sigmoid, softplus};
use crate::data::LabelMatrix;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub lr: f64,
    /// Step size in epoch `t` is `lr / (1 + decay * t)`.
    pub decay: f64,
    pub batch: usize,
    pub epochs: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![128, 128],
            lr: 0.01,
            decay: 0.001,
            batch: 32,
            epochs: 200,
        }
    }
}

/// Dense layer computing `a W + b` with `W` of shape `inputs x outputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
}

/// Keeps outputs strictly inside (0, 1) where the sigmoid saturates in f64.
const OUTPUT_CLAMP: f64 = 1e-15;

impl MlpModel {
    /// He-scaled normal weights and zero biases for layer sizes
    /// `[n, h1, ..., m]`.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self> {
        check_sizes(sizes)?;
        let mut rng = rng_from_seed(seed);
        let layers = sizes
            .windows(2)
            .map(|io| {
                let normal = Normal::new(0.0, (2.0 / io[0] as f64).sqrt()).expect("positive std");
                Layer {
                    w: Array2::from_shape_simple_fn((io[0], io[1]), || normal.sample(&mut rng)),
                    b: Array1::zeros(io[1]),
                }
            })
            .collect();
        Ok(MlpModel { layers })
    }

    /// All weights and biases zero; every output is exactly 0.5.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(MlpModel {
            layers: sizes
                .windows(2)
                .map(|io| Layer {
                    w: Array2::zeros((io[0], io[1])),
                    b: Array1::zeros(io[1]),
                })
                .collect(),
        })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::param("an MLP needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.b.len() != l.w.ncols() {
                return Err(Error::shape(format!("layer {i}: bias length {} for {} outputs", l.b.len(), l.w.ncols())));
            }
            if i > 0 && layers[i - 1].w.ncols() != l.w.nrows() {
                return Err(Error::shape(format!("layer {i} takes {} inputs, previous gives {}", l.w.nrows(), layers[i - 1].w.ncols())));
            }
        }
        Ok(MlpModel { layers })
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers[self.layers.len() - 1].w.ncols()
    }

    fn check_input(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::shape(format!("MLP takes {} inputs, got {}", self.n_inputs(), x.ncols())));
        }
        Ok(())
    }

    /// Pre-activations of every layer.
    fn forward_all(&self, x: ArrayView2<'_, f64>) -> Vec<Array2<f64>> {
        let mut zs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let z = if i == 0 {
                x.dot(&l.w) + &l.b
            } else {
                zs[i - 1].mapv(relu).dot(&l.w) + &l.b
            };
            zs.push(z);
        }
        zs
    }

    pub fn logits(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        Ok(self.forward_all(x).pop().expect("at least one layer"))
    }

    /// Output probabilities, strictly inside (0, 1).
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.logits(x)?.mapv(|z| sigmoid(z).clamp(OUTPUT_CLAMP, 1.0 - OUTPUT_CLAMP)))
    }

    /// Batch loss and the gradient of every layer.
    pub fn loss_and_gradients(&self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<(f64, Vec<Layer>)> {
        self.check_input(x)?;
        if y.dim() != (x.nrows(), self.n_outputs()) {
            return Err(Error::shape(format!("targets {:?} for {} rows and {} outputs", y.dim(), x.nrows(), self.n_outputs())));
        }
        let rows = x.nrows().max(1) as f64;
        let zs = self.forward_all(x);
        let out = &zs[zs.len() - 1];
        let mut loss = 0.0;
        Zip::from(out).and(y).for_each(|&z, &t| loss += softplus(z) - t * z);
        loss /= rows;

        let mut delta = Zip::from(out).and(y).map_collect(|&z, &t| (sigmoid(z) - t) / rows);
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let input = if i == 0 { x.to_owned() } else { zs[i - 1].mapv(relu) };
            let gw = input.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].w.t());
                Zip::from(&mut back).and(&zs[i - 1]).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = back;
            }
            grads.push(Layer { w: gw, b: gb });
        }
        grads.reverse();
        Ok((loss, grads))
    }

    pub fn apply_step(&mut self, grads: &[Layer], lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(grads) {
            l.w.scaled_add(-lr, &g.w);
            l.b.scaled_add(-lr, &g.b);
        }
    }

    /// Minibatch training over shuffled epochs, continuing from the current
    /// weights.
    pub fn train(&mut self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, p: &MlpParams, seed: u64) -> Result<()> {
        if x.nrows() != y.nrows() {
            return Err(Error::shape(format!("{} rows but {} label rows", x.nrows(), y.nrows())));
        }
        if x.nrows() == 0 {
            return Err(Error::param("empty training set"));
        }
        if p.batch == 0 {
            return Err(Error::param("batch size must be positive"));
        }
        let mut rng = rng_from_seed(seed);
        let mut order: Vec<usize> = (0..x.nrows()).collect();
        for epoch in 0..p.epochs {
            order.shuffle(&mut rng);
            let lr = p.lr / (1.0 + p.decay * epoch as f64);
            for (b, chunk) in order.chunks(p.batch).enumerate() {
                let xb = x.select(Axis(0), chunk);
                let yb = y.select(Axis(0), chunk);
                let (loss, grads) = self.loss_and_gradients(xb.view(), yb.view())?;
                if !loss.is_finite() {
                    return Err(Error::Diverged(format!(
                        "MLP loss is {loss} at epoch {epoch}, batch {b} (lr {lr:.3e}); lower mlp.lr"
                    )));
                }
                self.apply_step(&grads, lr);
            }
        }
        if self.layers.iter().any(|l| l.w.iter().chain(l.b.iter()).any(|v| !v.is_finite())) {
            return Err(Error::Diverged("MLP weights became non-finite".into()));
        }
        Ok(())
    }

    /// Copy with output units reordered: new output `j` is old output
    /// `perm[j]`.
    pub fn permute_outputs(&self, perm: &[usize]) -> Self {
        let mut out = self.clone();
        let last = out.layers.len() - 1;
        let l = &self.layers[last];
        for (j, &src) in perm.iter().enumerate() {
            out.layers[last].w.column_mut(j).assign(&l.w.column(src));
            out.layers[last].b[j] = l.b[src];
        }
        out
    }
}

fn relu(z: f64) -> f64 {
    z.max(0.0)
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::param(format!("bad layer sizes {sizes:?}")));
    }
    Ok(())
}

pub(crate) fn dense_targets(labels: &LabelMatrix) -> Array2<f64> {
    labels.to_dense().mapv(f64::from)
}

/// Initializes from `derive_seed(seed, "mlp-init", 0)` and shuffles from
/// `derive_seed(seed, "mlp-shuffle", 0)`.
pub fn mlp_fit(x: ArrayView2<'_, f64>, labels: &LabelMatrix, p: &MlpParams, seed: u64) -> Result<MlpModel> {
    let mut sizes = vec![x.ncols()];
    sizes.extend(&p.hidden);
    sizes.push(labels.m());
    let init = MlpModel::init(&sizes, derive_seed(seed, "mlp-init", 0))?;
    mlp_fit_from(init, x, labels, p, seed)
}

pub fn mlp_fit_from(mut model: MlpModel, x: ArrayView2<'_, f64>, labels: &LabelMatrix, p: &MlpParams, seed: u64) -> Result<MlpModel> {
    if labels.m() != model.n_outputs() {
        return Err(Error::shape(format!("{} words for {} outputs", labels.m(), model.n_outputs())));
    }
    let y = dense_targets(labels);
    let x = x.as_standard_layout();
    model.train(x.view(), y.view(), p, derive_seed(seed, "mlp-shuffle", 0))?;
    Ok(model)
}
