//! Gaussian and multinomial naive Bayes binary classifiers.
//!
//! Parameters are the closed-form maximum-likelihood estimates, which is
//! where expectation-maximization converges when every label is observed.

use std::f64::consts::PI;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

fn class_split(y: &[bool]) -> Result<[usize; 2]> {
    let pos = y.iter().filter(|&&v| v).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::param("both classes must be present"));
    }
    Ok([neg, pos])
}

/// Population variance of each column.
pub fn column_variances(x: ArrayView2<'_, f64>) -> Vec<f64> {
    let rows = x.nrows() as f64;
    x.columns()
        .into_iter()
        .map(|c| {
            let mean = c.sum() / rows;
            c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / rows
        })
        .collect()
}

/// Index 0 is the negative class, 1 the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
    pub epsilon: f64,
}

impl GaussianNbModel {
    /// `var_floor` is relative: the added epsilon is
    /// `var_floor * max(column_variances)`, or `var_floor` itself when every
    /// column is constant.
    pub fn fit(x: ArrayView2<'_, f64>, y: &[bool], var_floor: f64) -> Result<Self> {
        let max_var = column_variances(x).into_iter().fold(0.0, f64::max);
        Self::fit_with_epsilon(x, y, epsilon_for(var_floor, max_var))
    }

    pub(crate) fn fit_with_epsilon(x: ArrayView2<'_, f64>, y: &[bool], epsilon: f64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::shape(format!("{} rows but {} labels", x.nrows(), y.len())));
        }
        let counts = class_split(y)?;
        let n = x.ncols();
        let mut mean = [vec![0.0; n], vec![0.0; n]];
        let mut var = [vec![0.0; n], vec![0.0; n]];
        for (row, &c) in x.outer_iter().zip(y) {
            for (m, v) in mean[c as usize].iter_mut().zip(row) {
                *m += v;
            }
        }
        for c in 0..2 {
            for m in &mut mean[c] {
                *m /= counts[c] as f64;
            }
        }
        for (row, &c) in x.outer_iter().zip(y) {
            let c = c as usize;
            for j in 0..n {
                let d = row[j] - mean[c][j];
                var[c][j] += d * d;
            }
        }
        for c in 0..2 {
            for v in &mut var[c] {
                *v = *v / counts[c] as f64 + epsilon;
            }
        }
        let total = y.len() as f64;
        Ok(GaussianNbModel {
            log_prior: [(counts[0] as f64 / total).ln(), (counts[1] as f64 / total).ln()],
            mean,
            var,
            epsilon,
        })
    }

    pub fn joint_log_likelihood(&self, x: &[f64]) -> [f64; 2] {
        let mut out = self.log_prior;
        for (c, o) in out.iter_mut().enumerate() {
            for ((xi, m), v) in x.iter().zip(&self.mean[c]).zip(&self.var[c]) {
                let d = xi - m;
                *o -= 0.5 * (2.0 * PI * v).ln() + d * d / (2.0 * v);
            }
        }
        out
    }

    /// Posterior probability of the positive class.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let jll = self.joint_log_likelihood(x);
        (jll[1] - log_sum_exp2(jll[0], jll[1])).exp()
    }
}

pub(crate) fn epsilon_for(var_floor: f64, max_var: f64) -> f64 {
    if max_var > 0.0 {
        var_floor * max_var
    } else {
        var_floor.max(f64::MIN_POSITIVE)
    }
}

/// Additive-smoothed multinomial model over nonnegative feature magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialNbModel {
    pub log_prior: [f64; 2],
    /// `ln theta[c][j]` with `theta[c][j] = (N_cj + alpha) / (N_c + alpha n)`.
    pub log_theta: [Vec<f64>; 2],
    pub alpha: f64,
}

fn check_nonnegative(x: ArrayView2<'_, f64>) -> Result<()> {
    if let Some(((i, j), v)) = x.indexed_iter().find(|(_, v)| **v < 0.0) {
        return Err(Error::Contract(format!(
            "multinomial naive Bayes needs nonnegative features; found {v} at row {i}, column {j}"
        )));
    }
    Ok(())
}

impl MultinomialNbModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[bool], alpha: f64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::shape(format!("{} rows but {} labels", x.nrows(), y.len())));
        }
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::param("alpha must be positive"));
        }
        check_nonnegative(x)?;
        let counts = class_split(y)?;
        let n = x.ncols();
        let mut feat = [vec![0.0; n], vec![0.0; n]];
        for (row, &c) in x.outer_iter().zip(y) {
            for (f, v) in feat[c as usize].iter_mut().zip(row) {
                *f += v;
            }
        }
        let log_theta = feat.map(|f| {
            let total: f64 = f.iter().sum::<f64>() + alpha * n as f64;
            f.iter().map(|v| ((v + alpha) / total).ln()).collect()
        });
        let total = y.len() as f64;
        Ok(MultinomialNbModel {
            log_prior: [(counts[0] as f64 / total).ln(), (counts[1] as f64 / total).ln()],
            log_theta,
            alpha,
        })
    }

    pub fn joint_log_likelihood(&self, x: &[f64]) -> [f64; 2] {
        let mut out = self.log_prior;
        for (c, o) in out.iter_mut().enumerate() {
            *o += x.iter().zip(&self.log_theta[c]).map(|(v, t)| v * t).sum::<f64>();
        }
        out
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if let Some(v) = x.iter().find(|v| **v < 0.0) {
            return Err(Error::Contract(format!("multinomial naive Bayes got negative feature {v}")));
        }
        let jll = self.joint_log_likelihood(x);
        Ok((jll[1] - log_sum_exp2(jll[0], jll[1])).exp())
    }
}
