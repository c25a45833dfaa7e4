use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column min/max scaler onto `[0,1]`. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    /// Clamp transformed values into `[0,1]` (for data outside the fit range).
    #[serde(default)]
    pub clip: bool,
}

impl LinearScaler {
    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::shape("cannot fit a scaler on zero rows"));
        }
        let mins = x.fold_axis(Axis(0), f64::INFINITY, |a, &b| a.min(b)).to_vec();
        let maxs = x.fold_axis(Axis(0), f64::NEG_INFINITY, |a, &b| a.max(b)).to_vec();
        Ok(LinearScaler { mins, maxs, clip: false })
    }

    pub fn clipped(mut self) -> Self {
        self.clip = true;
        self
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mins.len() {
            return Err(Error::shape(format!(
                "scaler fit on {} columns, got {}",
                self.mins.len(),
                x.ncols()
            )));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (lo, hi) = (self.mins[j], self.maxs[j]);
            let range = hi - lo;
            if range > 0.0 {
                col.mapv_inplace(|v| {
                    let s = (v - lo) / range;
                    if self.clip {
                        s.clamp(0.0, 1.0)
                    } else {
                        s
                    }
                });
            } else {
                col.fill(0.0);
            }
        }
        Ok(out)
    }
}

/// Per-column z-scoring with population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<'_, f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::shape("cannot standardize zero rows"));
        }
        let means: Array1<f64> = x.mean_axis(Axis(0)).expect("nonempty");
        let stds = x.std_axis(Axis(0), 0.0);
        Ok(Standardizer {
            means: means.to_vec(),
            stds: stds.to_vec(),
        })
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.means.len() {
            return Err(Error::shape(format!(
                "standardizer fit on {} columns, got {}",
                self.means.len(),
                x.ncols()
            )));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (mu, sd) = (self.means[j], self.stds[j]);
            if sd > 0.0 {
                col.mapv_inplace(|v| (v - mu) / sd);
            } else {
                col.fill(0.0);
            }
        }
        Ok(out)
    }
}

/// Standardizes `x`, fitting statistics on `x` itself unless `fit_stats` is given.
pub fn standardize(x: ArrayView2<'_, f64>, fit_stats: Option<&Standardizer>) -> Result<(Array2<f64>, Standardizer)> {
    let stats = match fit_stats {
        Some(s) => s.clone(),
        None => Standardizer::fit(x)?,
    };
    Ok((stats.transform(x)?, stats))
}
