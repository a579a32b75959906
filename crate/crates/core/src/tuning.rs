//! Tuning rules: relevance threshold, block length and the default constants.
//!
//! Block-length selection is pluggable. Each rule implements
//! [`BlockLengthRule`] and is registered by name in a
//! [`BlockLengthRegistry`]; front ends look rules up by the name given on the
//! command line or in a config file.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::autocov_norms;
use crate::error::{Error, Result};
use crate::fda::{sup_norm, window_mean, FunctionalSeries};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_C: f64 = 0.1;
pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_DELTA_FRACTION: f64 = 1.0 / 3.0;
pub const DEFAULT_EDGE_FRACTION: f64 = 0.05;
pub const DEFAULT_BLOCK_EXPONENT: f64 = 0.25;

/// Admissible range of the fixed block-length exponent.
pub const BLOCK_EXPONENT_RANGE: (f64, f64) = (0.2, 2.0 / 7.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningDefaults {
    pub c: f64,
    pub alpha: f64,
    pub replicates: usize,
    pub block_rule: String,
    pub delta_fraction: f64,
    pub edge_fraction: f64,
}

impl Default for TuningDefaults {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            alpha: DEFAULT_ALPHA,
            replicates: DEFAULT_REPLICATES,
            block_rule: FixedExponent::NAME.to_string(),
            delta_fraction: DEFAULT_DELTA_FRACTION,
            edge_fraction: DEFAULT_EDGE_FRACTION,
        }
    }
}

/// `fraction · ‖μ̂_initial − μ̂_final‖_∞`, with the means taken over the first
/// and last `⌊edge_fraction · n⌋` curves.
pub fn select_delta(x: &FunctionalSeries, edge_fraction: f64, fraction: f64) -> Result<f64> {
    if !(edge_fraction > 0.0 && edge_fraction < 0.5) {
        return Err(Error::InvalidConfig(format!(
            "edge fraction must lie in (0, 0.5), got {edge_fraction}"
        )));
    }
    if !(fraction > 0.0 && fraction.is_finite()) {
        return Err(Error::InvalidConfig(format!("delta fraction must be positive, got {fraction}")));
    }
    let n = x.len();
    let edge = (edge_fraction * n as f64 + 1e-9).floor() as usize;
    if edge < 1 {
        return Err(Error::TooFewObservations {
            got: n,
            min: (1.0 / edge_fraction).ceil() as usize,
        });
    }
    let first = window_mean(x, 0, edge);
    let last = window_mean(x, n - edge, n);
    let diff: Vec<f64> = first.iter().zip(&last).map(|(a, b)| a - b).collect();
    Ok(fraction * sup_norm(&diff))
}

/// A block-length selection rule for the multiplier bootstrap.
pub trait BlockLengthRule: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Raw choice for the series; the caller clamps to the admissible range.
    fn raw_length(&self, x: &FunctionalSeries) -> Result<usize>;

    /// Block length with `L ≥ 1` and `2L + 2 ≤ n`.
    fn select(&self, x: &FunctionalSeries) -> Result<usize> {
        let n = x.len();
        if n < 16 {
            return Err(Error::TooFewObservations { got: n, min: 16 });
        }
        Ok(self.raw_length(x)?.clamp(1, (n - 2) / 2))
    }
}

/// `L = ⌈n^β⌉`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedExponent {
    pub beta: f64,
}

impl FixedExponent {
    pub const NAME: &'static str = "fixed";

    pub fn new(beta: f64) -> Result<Self> {
        let (lo, hi) = BLOCK_EXPONENT_RANGE;
        if !(beta >= lo - 1e-12 && beta <= hi + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "block exponent {beta} outside [{lo}, {hi:.4}]"
            )));
        }
        Ok(Self { beta })
    }
}

impl Default for FixedExponent {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BLOCK_EXPONENT,
        }
    }
}

impl BlockLengthRule for FixedExponent {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn raw_length(&self, x: &FunctionalSeries) -> Result<usize> {
        Ok(((x.len() as f64).powf(self.beta) - 1e-9).ceil().max(1.0) as usize)
    }
}

/// Plug-in bandwidth for the quadratic-spectral kernel.
///
/// With `a_k = ‖γ̂_k‖₂` the Hilbert–Schmidt norms of the lag-`k`
/// autocovariance kernels and Bartlett pilot weights `w_k` up to lag
/// `K = ⌈n^{1/5}⌉`:
///
/// ```text
/// α̂(2) = (2 Σ_k k² w_k a_k)² / (a_0 + 2 Σ_k w_k a_k)²
/// L    = round(1.3221 · (α̂(2) · n)^{1/5})   clamped to [2, ⌊n^{2/7}⌋]
/// ```
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QuadraticSpectralPlugIn;

impl QuadraticSpectralPlugIn {
    pub const NAME: &'static str = "plugin";
}

impl BlockLengthRule for QuadraticSpectralPlugIn {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn raw_length(&self, x: &FunctionalSeries) -> Result<usize> {
        let n = x.len();
        let nf = n as f64;
        let pilot = (nf.powf(0.2).ceil() as usize).clamp(1, n - 2);
        let norms = autocov_norms(x, pilot)?;
        let mut level = norms[0];
        let mut curvature = 0.0;
        for (k, a) in norms.iter().enumerate().skip(1) {
            let w = 1.0 - k as f64 / (pilot as f64 + 1.0);
            level += 2.0 * w * a;
            curvature += 2.0 * (k * k) as f64 * w * a;
        }
        let upper = (nf.powf(2.0 / 7.0) + 1e-9).floor().max(2.0) as usize;
        if level <= 0.0 {
            return Ok(2);
        }
        let alpha2 = (curvature / level).powi(2);
        let raw = (1.3221 * (alpha2 * nf).powf(0.2)).round() as usize;
        Ok(raw.clamp(2, upper))
    }
}

/// Named block-length rules.
#[derive(Debug, Clone)]
pub struct BlockLengthRegistry {
    rules: BTreeMap<String, Arc<dyn BlockLengthRule>>,
}

impl BlockLengthRegistry {
    pub fn empty() -> Self {
        Self {
            rules: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, rule: Arc<dyn BlockLengthRule>) {
        self.rules.insert(rule.name().to_string(), rule);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn BlockLengthRule>> {
        self.rules.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: "block-length rule",
            name: name.to_string(),
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }
}

impl Default for BlockLengthRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(FixedExponent::default()));
        reg.register(Arc::new(QuadraticSpectralPlugIn));
        reg
    }
}

/// Block length from the rule registered under `name`.
pub fn select_block_length(x: &FunctionalSeries, name: &str) -> Result<usize> {
    BlockLengthRegistry::default().get(name)?.select(x)
}
