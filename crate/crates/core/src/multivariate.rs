//! Relevance testing for vector-valued functional series, given as one
//! [`FunctionalSeries`] per coordinate observed at the same time points.
//!
//! Two modes are offered. [`Aggregation::PerCoordinate`] segments and tests
//! every coordinate on its own, but calibrates all of them against a single
//! bootstrap quantile of the maximum over coordinates and candidates.
//! [`Aggregation::Norm`] segments jointly and tests `‖(M̂⁽¹⁾, …, M̂⁽ᵈ⁾)‖_q`
//! against one threshold `Δ`.

use serde::{Deserialize, Serialize};

use crate::binseg::{binseg, segment_by, ChangePointSet};
use crate::cusum::{first_near_max, for_each_row};
use crate::error::{Error, Result};
use crate::fda::{l2_norm_sq, window_mean, Curve, FunctionalSeries};
use crate::relevance::{
    detector, empirical_quantile, run_replicates, BootstrapConfig, CandidateBootstrap, Detector,
    RelevanceReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Aggregation {
    PerCoordinate,
    /// `q ∈ [1, ∞]`; use `f64::INFINITY` for the maximum.
    Norm(f64),
}

/// Joint test outcome in the aggregated mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointReport {
    pub candidates: ChangePointSet,
    /// Detectors built from the aggregated sup-norm.
    pub detectors: Vec<Detector>,
    /// `M̂⁽ˡ⁾` per candidate, per coordinate.
    pub coordinate_sups: Vec<Vec<f64>>,
    pub quantile: Option<f64>,
    pub bootstrap_draws: Vec<f64>,
    pub relevant: Vec<bool>,
    /// Segment means per coordinate.
    pub segment_means: Vec<Vec<Curve>>,
    pub exponent: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MultivariateReport {
    /// One report per coordinate; all share the same quantile and draws.
    PerCoordinate(Vec<RelevanceReport>),
    Aggregated(JointReport),
}

fn check_coordinates(xs: &[FunctionalSeries]) -> Result<usize> {
    let first = xs
        .first()
        .ok_or_else(|| Error::DimensionMismatch("no coordinates given".into()))?;
    let n = first.len();
    if let Some((l, x)) = xs.iter().enumerate().find(|(_, x)| x.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "coordinate {} has {} curves, coordinate 1 has {n}",
            l + 1,
            x.len()
        )));
    }
    Ok(n)
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!("expected {want} {what}, got {got}")));
    }
    Ok(())
}

/// `‖v‖_q` for `q ∈ [1, ∞]`.
pub fn q_norm(v: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    } else {
        v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Threshold for joint segmentation: `σ̂ √(3 log n)` with `σ̂²` the lower
/// median of `Σ_ℓ ‖X⁽ˡ⁾_{j+1} − X⁽ˡ⁾_j‖₂² / 2`.
pub fn default_xi_joint(xs: &[FunctionalSeries]) -> Result<f64> {
    let n = check_coordinates(xs)?;
    if n < 3 {
        return Err(Error::TooFewObservations { got: n, min: 3 });
    }
    let mut halves = vec![0.0; n - 1];
    for x in xs {
        let mut diff = vec![0.0; x.grid_size()];
        for (j, h) in halves.iter_mut().enumerate() {
            diff.iter_mut()
                .zip(x.row(j + 1).iter().zip(x.row(j)))
                .for_each(|(d, (a, b))| *d = a - b);
            *h += l2_norm_sq(x.grid(), &diff) / 2.0;
        }
    }
    halves.sort_by(f64::total_cmp);
    Ok(halves[(halves.len() - 1) / 2].sqrt() * (3.0 * (n as f64).ln()).sqrt())
}

/// Binary segmentation on `Σ_ℓ ‖U⁽ˡ⁾(k)‖₂²`.
pub fn binseg_joint(xs: &[FunctionalSeries], xi_n: f64, min_seg: usize) -> Result<ChangePointSet> {
    let n = check_coordinates(xs)?;
    segment_by(n, xi_n, min_seg, |l, r, k_lo, k_hi| {
        if k_lo > k_hi {
            return None;
        }
        let mut total = vec![0.0; k_hi - k_lo + 1];
        for x in xs {
            for_each_row(x, l, r, |k, row| {
                if (k_lo..=k_hi).contains(&k) {
                    total[k - k_lo] += l2_norm_sq(x.grid(), row);
                }
            });
        }
        let (off, sq) = first_near_max(&total)?;
        Some((k_lo + off, sq.sqrt()))
    })
}

/// Relevance testing across coordinates.
///
/// `deltas` and `xi` hold one entry per coordinate in the per-coordinate mode
/// and a single entry in the aggregated mode.
pub fn detect_relevant_multivariate(
    xs: &[FunctionalSeries],
    deltas: &[f64],
    mode: Aggregation,
    cfg: &BootstrapConfig,
    xi: &[f64],
) -> Result<MultivariateReport> {
    cfg.validate()?;
    let d = xs.len();
    check_coordinates(xs)?;
    match mode {
        Aggregation::PerCoordinate => {
            check_len("thresholds", deltas.len(), d)?;
            check_len("segmentation thresholds", xi.len(), d)?;
            per_coordinate(xs, deltas, cfg, xi).map(MultivariateReport::PerCoordinate)
        }
        Aggregation::Norm(q) => {
            if !(q >= 1.0) {
                return Err(Error::InvalidConfig(format!("norm exponent must lie in [1, ∞], got {q}")));
            }
            check_len("thresholds", deltas.len(), 1)?;
            check_len("segmentation thresholds", xi.len(), 1)?;
            let cps = binseg_joint(xs, xi[0], cfg.min_segment())?;
            aggregated(xs, cps, deltas[0], q, cfg).map(MultivariateReport::Aggregated)
        }
    }
}

fn per_coordinate(
    xs: &[FunctionalSeries],
    deltas: &[f64],
    cfg: &BootstrapConfig,
    xi: &[f64],
) -> Result<Vec<RelevanceReport>> {
    let n = xs[0].len();
    let mut cps_all = Vec::with_capacity(xs.len());
    let mut preps = Vec::new();
    for (x, &xi_l) in xs.iter().zip(xi) {
        let cps = binseg(x, xi_l, cfg.min_segment())?;
        for i in 1..=cps.len() {
            preps.push(CandidateBootstrap::prepare(x, &cps, i, cfg)?);
        }
        cps_all.push(cps);
    }
    let (quantile, draws) = if preps.is_empty() {
        (None, Vec::new())
    } else {
        let draws = run_replicates(n, cfg, |m| {
            preps
                .iter()
                .map(|p| p.replicate(&m[p.l..]))
                .fold(f64::NEG_INFINITY, f64::max)
        });
        (Some(empirical_quantile(&draws, cfg.alpha)), draws)
    };

    let mut prep_iter = preps.into_iter();
    let mut reports = Vec::with_capacity(xs.len());
    for ((x, cps), &delta) in xs.iter().zip(cps_all).zip(deltas) {
        let detectors = (1..=cps.len())
            .map(|i| detector(x, &cps, i, delta))
            .collect::<Result<Vec<_>>>()?;
        let relevant = detectors
            .iter()
            .map(|d| quantile.is_some_and(|q| d.statistic > q))
            .collect();
        let extremal = prep_iter.by_ref().take(cps.len()).map(|p| p.extremal).collect();
        let has_candidates = !cps.is_empty();
        reports.push(RelevanceReport {
            segment_means: segment_means(x, &cps),
            candidates: cps,
            detectors,
            quantile: if has_candidates { quantile } else { None },
            bootstrap_draws: if has_candidates { draws.clone() } else { Vec::new() },
            relevant,
            extremal,
            delta,
        });
    }
    Ok(reports)
}

fn segment_means(x: &FunctionalSeries, cps: &ChangePointSet) -> Vec<Curve> {
    cps.segments()
        .into_iter()
        .map(|(from, to)| Curve::from_vec_unchecked(window_mean(x, from - 1, to)))
        .collect()
}

/// Linearisation weights of `‖·‖_q` at `sups`: `(M⁽ˡ⁾/‖M‖_q)^{q−1}`. The
/// maximum norm keeps the coordinates within `margin` of the largest value.
fn norm_weights(sups: &[f64], q: f64, margin: f64) -> Vec<f64> {
    let d = sups.len() as f64;
    let total = q_norm(sups, q);
    if q.is_infinite() {
        let top = total;
        return sups
            .iter()
            .map(|&m| if m >= top - margin { 1.0 } else { 0.0 })
            .collect();
    }
    if total == 0.0 {
        return vec![d.powf(1.0 / q - 1.0); sups.len()];
    }
    sups.iter().map(|&m| (m / total).powf(q - 1.0)).collect()
}

fn aggregated(
    xs: &[FunctionalSeries],
    cps: ChangePointSet,
    delta: f64,
    q: f64,
    cfg: &BootstrapConfig,
) -> Result<JointReport> {
    let n = xs[0].len();
    let segment_means = xs.iter().map(|x| segment_means(x, &cps)).collect();
    if cps.is_empty() {
        return Ok(JointReport {
            candidates: cps,
            detectors: Vec::new(),
            coordinate_sups: Vec::new(),
            quantile: None,
            bootstrap_draws: Vec::new(),
            relevant: Vec::new(),
            segment_means,
            exponent: q,
            delta,
        });
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!("delta must be non-negative, got {delta}")));
    }
    let margin = cfg.c * (n as f64).ln() / (n as f64).sqrt();
    let mut detectors = Vec::with_capacity(cps.len());
    let mut coordinate_sups = Vec::with_capacity(cps.len());
    let mut preps = Vec::with_capacity(cps.len());
    for i in 1..=cps.len() {
        let per: Vec<Detector> = xs
            .iter()
            .map(|x| detector(x, &cps, i, 0.0))
            .collect::<Result<_>>()?;
        let sups: Vec<f64> = per.iter().map(|d| d.sup_cusum).collect();
        let (n_i, h) = (per[0].window_len, per[0].h_at_change);
        detectors.push(Detector::from_parts(i, n_i, h, q_norm(&sups, q), delta));
        let cand: Vec<CandidateBootstrap> = xs
            .iter()
            .map(|x| CandidateBootstrap::prepare(x, &cps, i, cfg))
            .collect::<Result<_>>()?;
        preps.push((norm_weights(&sups, q, margin), cand));
        coordinate_sups.push(sups);
    }
    let draws = run_replicates(n, cfg, |m| {
        preps
            .iter()
            .map(|(weights, cand)| {
                let stats = cand.iter().map(|p| p.replicate(&m[p.l..]));
                if q.is_infinite() {
                    stats
                        .zip(weights)
                        .filter(|(_, &w)| w > 0.0)
                        .map(|(s, _)| s)
                        .fold(f64::NEG_INFINITY, f64::max)
                } else {
                    stats.zip(weights).map(|(s, w)| w * s).sum()
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let quantile = empirical_quantile(&draws, cfg.alpha);
    let relevant = detectors.iter().map(|d| d.statistic > quantile).collect();
    Ok(JointReport {
        candidates: cps,
        detectors,
        coordinate_sups,
        quantile: Some(quantile),
        bootstrap_draws: draws,
        relevant,
        segment_means,
        exponent: q,
        delta,
    })
}
