//! Serial-dependence diagnostics: lag-`k` autocorrelation surfaces and their
//! L² aggregation across lags.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fda::{window_mean, FunctionalSeries};

/// `p × p` surface of `γ̂_k(t, s)`; `None` where a denominator vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrSurface {
    p: usize,
    values: Vec<Option<f64>>,
}

impl AutocorrSurface {
    pub fn grid_size(&self) -> usize {
        self.p
    }

    pub fn get(&self, t: usize, s: usize) -> Option<f64> {
        self.values[t * self.p + s]
    }

    pub fn defined_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variogram {
    pub lags: Vec<usize>,
    /// `‖γ̂_k‖₂` per lag; `None` when the surface is undefined everywhere.
    pub values: Vec<Option<f64>>,
    /// Share of surface entries that were undefined and left out of the integral.
    pub undefined_fraction: Vec<f64>,
}

fn centered(x: &FunctionalSeries) -> Vec<f64> {
    let p = x.grid_size();
    let mean = window_mean(x, 0, x.len());
    let mut out = x.data().to_vec();
    for row in out.chunks_exact_mut(p) {
        row.iter_mut().zip(&mean).for_each(|(v, m)| *v -= m);
    }
    out
}

fn check_lag(x: &FunctionalSeries, k: usize) -> Result<()> {
    if x.len() < 3 || k > x.len() - 2 {
        return Err(Error::InvalidConfig(format!(
            "lag {k} needs at least {} curves, series has {}",
            k + 2,
            x.len()
        )));
    }
    Ok(())
}

fn surface_from_centered(xc: &[f64], n: usize, p: usize, k: usize, scale: f64) -> AutocorrSurface {
    let pairs = n - k;
    let mut cross = vec![0.0; p * p];
    let mut var_lead = vec![0.0; p];
    let mut var_lag = vec![0.0; p];
    for j in 0..pairs {
        let a = &xc[j * p..(j + 1) * p];
        let b = &xc[(j + k) * p..(j + k + 1) * p];
        for t in 0..p {
            var_lead[t] += a[t] * a[t];
            var_lag[t] += b[t] * b[t];
            let at = a[t];
            let row = &mut cross[t * p..(t + 1) * p];
            row.iter_mut().zip(b).for_each(|(c, bs)| *c += at * bs);
        }
    }
    // Sums of squares below this are rounding residue of a constant column.
    let tol = pairs as f64 * (1e-12 * (1.0 + scale)).powi(2);
    let mut values = vec![None; p * p];
    for t in 0..p {
        for s in 0..p {
            if var_lead[t] > tol && var_lag[s] > tol {
                values[t * p + s] = Some(cross[t * p + s] / (var_lead[t] * var_lag[s]).sqrt());
            }
        }
    }
    AutocorrSurface { p, values }
}

/// Lag-`k` autocorrelation surface, centred at the global sample mean.
pub fn autocorr_surface(x: &FunctionalSeries, k: usize) -> Result<AutocorrSurface> {
    check_lag(x, k)?;
    let scale = x.data().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(surface_from_centered(&centered(x), x.len(), x.grid_size(), k, scale))
}

/// L² norms of the autocorrelation surfaces for lags `0..=max_lag`.
pub fn variogram(x: &FunctionalSeries, max_lag: usize) -> Result<Variogram> {
    check_lag(x, max_lag)?;
    let (n, p) = (x.len(), x.grid_size());
    let xc = centered(x);
    let scale = x.data().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let w = x.grid().weights();
    let mut values = Vec::with_capacity(max_lag + 1);
    let mut undefined_fraction = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let surf = surface_from_centered(&xc, n, p, k, scale);
        let defined = surf.defined_count();
        undefined_fraction.push(1.0 - defined as f64 / (p * p) as f64);
        if defined == 0 {
            values.push(None);
            continue;
        }
        let mut acc = 0.0;
        for t in 0..p {
            for s in 0..p {
                if let Some(g) = surf.get(t, s) {
                    acc += w[t] * w[s] * g * g;
                }
            }
        }
        values.push(Some(acc.sqrt()));
    }
    Ok(Variogram {
        lags: (0..=max_lag).collect(),
        values,
        undefined_fraction,
    })
}

/// Hilbert–Schmidt norms of the lag-`k` autocovariance kernels
/// `(1/n) Σ_{j ≤ n−k} X̃_j(t) X̃_{j+k}(s)` for `k = 0..=max_lag`.
pub fn autocov_norms(x: &FunctionalSeries, max_lag: usize) -> Result<Vec<f64>> {
    check_lag(x, max_lag)?;
    let (n, p) = (x.len(), x.grid_size());
    let xc = centered(x);
    let w = x.grid().weights();
    let mut out = Vec::with_capacity(max_lag + 1);
    let mut cov = vec![0.0; p * p];
    for k in 0..=max_lag {
        cov.iter_mut().for_each(|c| *c = 0.0);
        for j in 0..n - k {
            let a = &xc[j * p..(j + 1) * p];
            let b = &xc[(j + k) * p..(j + k + 1) * p];
            for t in 0..p {
                let at = a[t];
                cov[t * p..(t + 1) * p]
                    .iter_mut()
                    .zip(b)
                    .for_each(|(c, bs)| *c += at * bs);
            }
        }
        let mut acc = 0.0;
        for t in 0..p {
            for s in 0..p {
                let c = cov[t * p + s] / n as f64;
                acc += w[t] * w[s] * c * c;
            }
        }
        out.push(acc.sqrt());
    }
    Ok(out)
}
