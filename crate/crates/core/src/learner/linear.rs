//! Logistic regression, SGD and passive-aggressive binary classifiers.
//!
//! Weight vectors have length `n + 1`; the last entry is the bias, applied
//! to an implicit constant feature of 1 and never regularized.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Loss {
    Log,
    Hinge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub lr: f64,
    /// Step size at epoch `t` is `lr / (1 + decay * t)`.
    pub decay: f64,
    pub l2: f64,
    pub epochs: usize,
    pub tol: f64,
    pub loss: Loss,
    /// Loss multiplier for positive samples.
    pub pos_weight: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        LinearParams {
            lr: 0.1,
            decay: 0.01,
            l2: 1e-4,
            epochs: 100,
            tol: 1e-6,
            loss: Loss::Log,
            pos_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearKind {
    Logistic,
    Sgd(Loss),
    PassiveAggressive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBinaryModel {
    pub weights: Vec<f64>,
    pub kind: LinearKind,
    /// Epochs consumed so far; continues the step-size schedule across
    /// incremental updates.
    pub epochs_seen: usize,
}

impl LinearBinaryModel {
    pub fn zeros(n: usize, kind: LinearKind) -> Self {
        LinearBinaryModel {
            weights: vec![0.0; n + 1],
            kind,
            epochs_seen: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn bias(&self) -> f64 {
        self.weights[self.n()]
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        dot_bias(&self.weights, x)
    }

    /// Positive-class probability for log-loss models, signed margin
    /// otherwise.
    pub fn score(&self, x: &[f64]) -> f64 {
        let z = self.decision(x);
        match self.kind {
            LinearKind::Logistic | LinearKind::Sgd(Loss::Log) => sigmoid(z),
            _ => z,
        }
    }

    pub fn is_probabilistic(&self) -> bool {
        matches!(self.kind, LinearKind::Logistic | LinearKind::Sgd(Loss::Log))
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }
}

pub(crate) fn dot_bias(w: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = w[n];
    for (wi, xi) in w[..n].iter().zip(x) {
        s += wi * xi;
    }
    s
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn check_xy(x: ArrayView2<'_, f64>, len: usize) -> Result<()> {
    if x.nrows() != len {
        return Err(Error::shape(format!("{} rows but {} labels", x.nrows(), len)));
    }
    if len == 0 {
        return Err(Error::param("empty training set"));
    }
    Ok(())
}

/// Mean negative log-likelihood plus `l2/2 * |w|^2` (bias excluded), and its
/// gradient.
pub fn logistic_objective(w: &[f64], x: ArrayView2<'_, f64>, y: &[bool], l2: f64) -> (f64, Vec<f64>) {
    weighted_logistic_objective(w, x, y, l2, 1.0)
}

/// [`logistic_objective`] with positive samples weighted by `pos_weight`.
pub fn weighted_logistic_objective(
    w: &[f64],
    x: ArrayView2<'_, f64>,
    y: &[bool],
    l2: f64,
    pos_weight: f64,
) -> (f64, Vec<f64>) {
    let n = x.ncols();
    let rows = x.nrows() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; n + 1];
    for (row, &yi) in x.outer_iter().zip(y) {
        let xs = row.as_slice().expect("standard layout");
        let z = dot_bias(w, xs);
        let (t, sw) = if yi { (1.0, pos_weight) } else { (0.0, 1.0) };
        loss += sw * (softplus(z) - t * z);
        let g = sw * (sigmoid(z) - t);
        for (gj, xj) in grad[..n].iter_mut().zip(xs) {
            *gj += g * xj;
        }
        grad[n] += g;
    }
    loss /= rows;
    for g in &mut grad {
        *g /= rows;
    }
    for j in 0..n {
        loss += 0.5 * l2 * w[j] * w[j];
        grad[j] += l2 * w[j];
    }
    (loss, grad)
}

/// Full-batch gradient descent on the regularized logistic loss. Stops once
/// the gradient norm falls to `tol` or the epoch budget is spent.
pub fn logreg_fit(x: ArrayView2<'_, f64>, y: &[bool], p: &LinearParams) -> Result<LinearBinaryModel> {
    check_xy(x, y.len())?;
    let x = x.as_standard_layout();
    let mut model = LinearBinaryModel::zeros(x.ncols(), LinearKind::Logistic);
    for epoch in 0..p.epochs {
        let (_, grad) = weighted_logistic_objective(&model.weights, x.view(), y, p.l2, p.pos_weight);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm <= p.tol {
            break;
        }
        let lr = p.lr / (1.0 + p.decay * epoch as f64);
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= lr * g;
        }
        model.epochs_seen += 1;
    }
    finite(model)
}

fn finite(model: LinearBinaryModel) -> Result<LinearBinaryModel> {
    if model.is_finite() {
        Ok(model)
    } else {
        Err(Error::Diverged("linear model weights became non-finite".into()))
    }
}

/// One stochastic update on a single sample whose loss gradient is scaled by
/// `weight`. The L2 shrink applies to the non-bias weights.
pub fn sgd_step(w: &mut [f64], x: &[f64], y: bool, weight: f64, loss: Loss, lr: f64, l2: f64) {
    let n = x.len();
    let z = dot_bias(w, x);
    let g = match loss {
        Loss::Log => sigmoid(z) - if y { 1.0 } else { 0.0 },
        Loss::Hinge => {
            let s = if y { 1.0 } else { -1.0 };
            if s * z < 1.0 {
                -s
            } else {
                0.0
            }
        }
    };
    let g = g * weight;
    for j in 0..n {
        w[j] -= lr * (g * x[j] + l2 * w[j]);
    }
    w[n] -= lr * g;
}

/// Per-sample SGD over shuffled epochs, starting from zero weights.
pub fn sgd_fit(x: ArrayView2<'_, f64>, y: &[bool], p: &LinearParams, seed: u64) -> Result<LinearBinaryModel> {
    let mut model = LinearBinaryModel::zeros(x.ncols(), LinearKind::Sgd(p.loss));
    sgd_partial_fit(&mut model, x, y, p, seed)?;
    Ok(model)
}

/// Continues SGD on new samples for `p.epochs` more epochs.
pub fn sgd_partial_fit(
    model: &mut LinearBinaryModel,
    x: ArrayView2<'_, f64>,
    y: &[bool],
    p: &LinearParams,
    seed: u64,
) -> Result<()> {
    check_xy(x, y.len())?;
    check_width(model, x)?;
    let x = x.as_standard_layout();
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..y.len()).collect();
    for _ in 0..p.epochs {
        order.shuffle(&mut rng);
        let lr = p.lr / (1.0 + p.decay * model.epochs_seen as f64);
        for &i in &order {
            let xs = x.row(i).to_slice().expect("standard layout");
            let sw = if y[i] { p.pos_weight } else { 1.0 };
            sgd_step(&mut model.weights, xs, y[i], sw, p.loss, lr, p.l2);
        }
        model.epochs_seen += 1;
    }
    if model.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged("SGD weights became non-finite".into()))
    }
}

fn check_width(model: &LinearBinaryModel, x: ArrayView2<'_, f64>) -> Result<()> {
    if model.n() != x.ncols() {
        return Err(Error::shape(format!("model has {} inputs, data has {}", model.n(), x.ncols())));
    }
    Ok(())
}

/// PA-I update with `y` in {-1, +1}: `tau = min(C, hinge / |x|^2)`,
/// `w += tau * y * x`. The norm is taken over the entries of `x` as given,
/// so callers that fold the bias into `x` get the bias updated as well.
/// Returns `tau`; a zero-norm sample is skipped.
pub fn pa_step(w: &mut [f64], x: &[f64], y: f64, c: f64) -> f64 {
    let margin: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() * y;
    let loss = (1.0 - margin).max(0.0);
    if loss == 0.0 {
        return 0.0;
    }
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return 0.0;
    }
    let tau = c.min(loss / norm2);
    for (wi, xi) in w.iter_mut().zip(x) {
        *wi += tau * y * xi;
    }
    tau
}

/// Aggressiveness `c` for negatives and `c * pos_weight` for positives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaParams {
    pub c: f64,
    pub epochs: usize,
    pub pos_weight: f64,
}

impl Default for PaParams {
    fn default() -> Self {
        PaParams {
            c: 1.0,
            epochs: 10,
            pos_weight: 1.0,
        }
    }
}

pub fn pa_fit(x: ArrayView2<'_, f64>, y: &[bool], p: &PaParams, seed: u64) -> Result<LinearBinaryModel> {
    let mut model = LinearBinaryModel::zeros(x.ncols(), LinearKind::PassiveAggressive);
    pa_partial_fit(&mut model, x, y, p, seed)?;
    Ok(model)
}

pub fn pa_partial_fit(
    model: &mut LinearBinaryModel,
    x: ArrayView2<'_, f64>,
    y: &[bool],
    p: &PaParams,
    seed: u64,
) -> Result<()> {
    check_xy(x, y.len())?;
    check_width(model, x)?;
    let x = x.as_standard_layout();
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut xb = vec![1.0; x.ncols() + 1];
    for _ in 0..p.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            xb[..x.ncols()].copy_from_slice(x.row(i).to_slice().expect("standard layout"));
            let (sign, c) = if y[i] { (1.0, p.c * p.pos_weight) } else { (-1.0, p.c) };
            pa_step(&mut model.weights, &xb, sign, c);
        }
        model.epochs_seen += 1;
    }
    if model.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged("PA weights became non-finite".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn toy() -> (Array2<f64>, Vec<bool>) {
        let x = array![[-2.0, 0.5], [-1.5, -0.3], [-1.0, 0.2], [-0.4, 0.9], [0.3, -0.6], [1.0, 0.1], [1.6, -0.2], [2.2, 0.4]];
        let y = vec![false, false, false, true, false, true, true, true];
        (x, y)
    }

    #[test]
    fn positive_weight_equals_duplicated_positives() {
        let (x, y) = toy();
        let w = vec![0.4, -0.2, 0.1];
        let (lw, gw) = weighted_logistic_objective(&w, x.view(), &y, 0.0, 2.0);
        let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i]).collect();
        let rows: Vec<usize> = (0..y.len()).chain(pos.iter().copied()).collect();
        let xd = x.select(ndarray::Axis(0), &rows);
        let yd: Vec<bool> = rows.iter().map(|&i| y[i]).collect();
        let (ld, gd) = logistic_objective(&w, xd.view(), &yd, 0.0);
        let scale = rows.len() as f64 / y.len() as f64;
        assert!((lw - ld * scale).abs() < 1e-12);
        for (a, b) in gw.iter().zip(&gd) {
            assert!((a - b * scale).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = toy();
        let w = vec![0.3, -0.7, 0.2];
        let (_, g) = logistic_objective(&w, x.view(), &y, 0.05);
        let h = 1e-6;
        for j in 0..w.len() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[j] += h;
            wm[j] -= h;
            let fd = (logistic_objective(&wp, x.view(), &y, 0.05).0 - logistic_objective(&wm, x.view(), &y, 0.05).0) / (2.0 * h);
            let rel = (fd - g[j]).abs() / g[j].abs().max(1e-8);
            assert!(rel < 1e-5, "coordinate {j}: analytic {} vs numeric {fd}", g[j]);
        }
    }

    #[test]
    fn separable_1d_is_fit_exactly() {
        let x = array![[-3.0], [-2.0], [-1.0], [1.0], [2.0], [3.0]];
        let y = [false, false, false, true, true, true];
        let p = LinearParams {
            l2: 1e-6,
            ..LinearParams::default()
        };
        let m = logreg_fit(x.view(), &y, &p).unwrap();
        for (row, &t) in x.outer_iter().zip(&y) {
            assert_eq!(m.score(row.as_slice().unwrap()) > 0.5, t);
        }
    }

    #[test]
    fn full_batch_loss_decreases() {
        let (x, y) = toy();
        let mut w = vec![0.0; 3];
        let mut last = f64::INFINITY;
        for _ in 0..50 {
            let (loss, g) = logistic_objective(&w, x.view(), &y, 1e-3);
            assert!(loss <= last + 1e-15);
            last = loss;
            for (wi, gi) in w.iter_mut().zip(&g) {
                *wi -= 0.05 * gi;
            }
        }
    }

    #[test]
    fn single_sgd_update_is_a_gradient_step() {
        let x = array![[0.5, -1.0]];
        let p = LinearParams {
            lr: 0.2,
            decay: 0.0,
            l2: 0.0,
            epochs: 1,
            ..LinearParams::default()
        };
        let m = sgd_fit(x.view(), &[true], &p, 7).unwrap();
        // at w = 0 the log-loss gradient is (sigmoid(0) - 1) * (x, 1) = -0.5 * (0.5, -1, 1)
        let expect = [0.2 * 0.5 * 0.5, -0.2 * 0.5, 0.2 * 0.5];
        for (a, b) in m.weights.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let frozen = sgd_fit(x.view(), &[true], &LinearParams { lr: 0.0, ..p }, 7).unwrap();
        assert!(frozen.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn sgd_approaches_batch_loss() {
        let (x, y) = toy();
        let l2 = 1e-2;
        let batch = logreg_fit(
            x.view(),
            &y,
            &LinearParams {
                l2,
                epochs: 5000,
                tol: 1e-10,
                decay: 0.0,
                lr: 0.5,
                ..LinearParams::default()
            },
        )
        .unwrap();
        let sgd = sgd_fit(
            x.view(),
            &y,
            &LinearParams {
                l2,
                epochs: 400,
                lr: 0.05,
                decay: 0.01,
                ..LinearParams::default()
            },
            3,
        )
        .unwrap();
        let lb = logistic_objective(&batch.weights, x.view(), &y, l2).0;
        let ls = logistic_objective(&sgd.weights, x.view(), &y, l2).0;
        assert!(ls <= lb * 1.05, "sgd {ls} batch {lb}");
    }

    #[test]
    fn sgd_is_reproducible() {
        let (x, y) = toy();
        let p = LinearParams::default();
        assert_eq!(sgd_fit(x.view(), &y, &p, 11).unwrap(), sgd_fit(x.view(), &y, &p, 11).unwrap());
    }

    #[test]
    fn pa_hand_example() {
        let mut w = vec![0.0, 0.0];
        let tau = pa_step(&mut w, &[1.0, 0.0], 1.0, f64::INFINITY);
        assert_eq!(tau, 1.0);
        assert_eq!(w, vec![1.0, 0.0]);
        // margin is now exactly 1: passive
        assert_eq!(pa_step(&mut w, &[1.0, 0.0], 1.0, f64::INFINITY), 0.0);
        assert_eq!(w, vec![1.0, 0.0]);
        assert_eq!(pa_step(&mut w, &[0.0, 0.0], -1.0, 1.0), 0.0);
    }

    proptest::proptest! {
        #[test]
        fn pa_never_increases_sample_loss(
            w in proptest::collection::vec(-2.0f64..2.0, 3),
            x in proptest::collection::vec(-2.0f64..2.0, 3),
            pos in proptest::bool::ANY,
            c in 0.01f64..10.0,
        ) {
            let y = if pos { 1.0 } else { -1.0 };
            let hinge = |w: &[f64]| (1.0 - y * w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()).max(0.0);
            let mut w2 = w.clone();
            let before = hinge(&w);
            let tau = pa_step(&mut w2, &x, y, c);
            let after = hinge(&w2);
            proptest::prop_assert!(after <= before + 1e-12);
            let norm2: f64 = x.iter().map(|v| v * v).sum();
            if norm2 > 1e-6 && tau < c {
                proptest::prop_assert!(after < 1e-9);
            }
        }
    }
}
