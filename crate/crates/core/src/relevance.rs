//! Relevance testing of segmentation candidates.
//!
//! Each candidate `k̂_i` is examined on its window `(k̂_{i−1}, k̂_{i+1}]`. The
//! detector compares the sup-norm of the window CUSUM against the attenuated
//! threshold `ĥ(1−ĥ)Δ`; the critical value comes from a block multiplier
//! bootstrap of the jump-corrected observations, evaluated only on the
//! estimated extremal sets of the mean difference.
//!
//! Bootstrap multipliers are indexed by `(replicate, absolute observation
//! index)`: every replicate owns an independent ChaCha stream, so replicates
//! can run in any order or in parallel and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binseg::{binseg, ChangePointSet};
use crate::cusum::cusum_supnorm;
use crate::error::{Error, Result};
use crate::fda::{sup_norm, window_mean, Curve, FunctionalSeries, SegmentMap};

/// Detector of one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    /// Candidate number `i` (1-based).
    pub candidate: usize,
    /// `n̂_i = k̂_{i+1} − k̂_{i−1}`.
    pub window_len: usize,
    /// `ĥ_i(ŝ_i)`.
    pub h_at_change: f64,
    /// Sup-norm of the window CUSUM, `M̂_{n,i}`.
    pub sup_cusum: f64,
    /// `√n̂_i · (M̂ − ĥ(1−ĥ)Δ)`.
    pub statistic: f64,
}

impl Detector {
    pub(crate) fn from_parts(candidate: usize, window_len: usize, h: f64, sup_cusum: f64, delta: f64) -> Self {
        Self {
            candidate,
            window_len,
            h_at_change: h,
            sup_cusum,
            statistic: (window_len as f64).sqrt() * (sup_cusum - h * (1.0 - h) * delta),
        }
    }
}

/// Grid indices where `±(μ̂₁ − μ̂₂)` comes within `margin` of its sup-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalSets {
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
    pub margin: f64,
}

/// Block multiplier bootstrap settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of replicates `R`.
    pub replicates: usize,
    /// Block length `L`.
    pub block_len: usize,
    /// Level `α` of the quantile `q*_{1−α}`.
    pub alpha: f64,
    /// Extremal-set constant `c`.
    pub c: f64,
    pub seed: u64,
    /// Minimum segment length for segmentation; `None` means `2L + 2`.
    #[serde(default)]
    pub min_seg: Option<usize>,
}

impl BootstrapConfig {
    pub fn new(block_len: usize, seed: u64) -> Self {
        Self {
            replicates: crate::tuning::DEFAULT_REPLICATES,
            block_len,
            alpha: crate::tuning::DEFAULT_ALPHA,
            c: crate::tuning::DEFAULT_C,
            seed,
            min_seg: None,
        }
    }

    pub fn min_segment(&self) -> usize {
        self.min_seg.unwrap_or(2 * self.block_len + 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicate count must be at least 1".into()));
        }
        if self.block_len == 0 {
            return Err(Error::InvalidConfig("block length must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("c must be positive, got {}", self.c)));
        }
        if self.min_seg == Some(0) {
            return Err(Error::InvalidConfig("min_seg must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of the two-step procedure on one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceReport {
    pub candidates: ChangePointSet,
    pub detectors: Vec<Detector>,
    /// `q*_{1−α}`; `None` when segmentation found nothing and the bootstrap was skipped.
    pub quantile: Option<f64>,
    /// Aggregated bootstrap statistics in replicate order.
    pub bootstrap_draws: Vec<f64>,
    pub relevant: Vec<bool>,
    pub segment_means: Vec<Curve>,
    pub extremal: Vec<ExtremalSets>,
    pub delta: f64,
}

impl RelevanceReport {
    /// Indices `k̂_i` flagged relevant.
    pub fn relevant_indices(&self) -> Vec<usize> {
        self.candidates
            .indices()
            .iter()
            .zip(&self.relevant)
            .filter_map(|(&k, &rel)| rel.then_some(k))
            .collect()
    }
}

/// Window boundaries `(k̂_{i−1}, k̂_i, k̂_{i+1})` of candidate `i`.
fn window_of(cps: &ChangePointSet, i: usize) -> Result<(usize, usize, usize)> {
    if i < 1 || i > cps.len() {
        return Err(Error::NoSuchCandidate(i));
    }
    Ok((cps.boundary(i - 1), cps.boundary(i), cps.boundary(i + 1)))
}

fn check_sample(x: &FunctionalSeries, cps: &ChangePointSet) -> Result<()> {
    if cps.sample_size() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "change points refer to n = {}, series has n = {}",
            cps.sample_size(),
            x.len()
        )));
    }
    Ok(())
}

/// `ĥ_i(ŝ_i)` via the segment map of `[ŝ_{i−1}, ŝ_{i+1}]`.
fn h_at_change(cps: &ChangePointSet, i: usize) -> Result<f64> {
    let (l, k, r) = window_of(cps, i)?;
    let map = SegmentMap::new(cps.scaled(i - 1), cps.scaled(i + 1))?;
    let h = map.rescale(cps.scaled(i))?;
    // Integer form avoids rounding in k/n; both agree to a few ulps.
    let exact = (k - l) as f64 / (r - l) as f64;
    debug_assert!((h - exact).abs() < 1e-12);
    Ok(exact)
}

/// Detector `T̂_{n,i}` of candidate `i` (1-based).
pub fn detector(x: &FunctionalSeries, cps: &ChangePointSet, i: usize, delta: f64) -> Result<Detector> {
    check_sample(x, cps)?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!("delta must be non-negative, got {delta}")));
    }
    let (l, _, r) = window_of(cps, i)?;
    let n_i = r - l;
    if n_i < 4 {
        return Err(Error::DegenerateWindow { candidate: i, window: n_i });
    }
    let h = h_at_change(cps, i)?;
    let m = cusum_supnorm(x, l, r);
    Ok(Detector::from_parts(i, n_i, h, m, delta))
}

/// Extremal sets of `μ̂₁ − μ̂₂` with margin `c·log(n)/√n`.
pub fn extremal_sets(mu1: &Curve, mu2: &Curve, n: usize, c: f64) -> Result<ExtremalSets> {
    if mu1.len() != mu2.len() {
        return Err(Error::DimensionMismatch(format!(
            "mean curves have {} and {} grid values",
            mu1.len(),
            mu2.len()
        )));
    }
    if n < 2 {
        return Err(Error::TooFewObservations { got: n, min: 2 });
    }
    if !(c > 0.0) {
        return Err(Error::InvalidConfig(format!("c must be positive, got {c}")));
    }
    let margin = c * (n as f64).ln() / (n as f64).sqrt();
    Ok(extremal_from_diff(mu1.sub(mu2).values(), margin))
}

fn extremal_from_diff(diff: &[f64], margin: f64) -> ExtremalSets {
    let level = sup_norm(diff) - margin;
    let plus = (0..diff.len()).filter(|&t| diff[t] >= level).collect();
    let minus = (0..diff.len()).filter(|&t| -diff[t] >= level).collect();
    ExtremalSets { plus, minus, margin }
}

/// Everything one candidate needs to produce bootstrap replicates.
///
/// `blocks` holds, for every block start `b = l+1..=r`, the centered and
/// scaled block sums `(Σ_{j=b}^{b+len−1} Ŷ_j − len·Ȳ) / √len` at the grid
/// points of `columns` (the union of both extremal sets). Blocks are truncated
/// at the window end, so `len = min(L, r − b + 1)`.
#[derive(Debug, Clone)]
pub(crate) struct CandidateBootstrap {
    pub(crate) l: usize,
    pub(crate) k: usize,
    pub(crate) r: usize,
    h: f64,
    columns: Vec<usize>,
    sign_plus: Vec<bool>,
    sign_minus: Vec<bool>,
    blocks: Vec<f64>,
    pub(crate) extremal: ExtremalSets,
}

impl CandidateBootstrap {
    pub(crate) fn prepare(x: &FunctionalSeries, cps: &ChangePointSet, i: usize, cfg: &BootstrapConfig) -> Result<Self> {
        check_sample(x, cps)?;
        let (l, k, r) = window_of(cps, i)?;
        let n_i = r - l;
        let big_l = cfg.block_len;
        if big_l == 0 || n_i < 2 * big_l + 2 {
            return Err(Error::BlockTooLong {
                candidate: i,
                window: n_i,
                block_len: big_l,
            });
        }
        let mu1 = window_mean(x, l, k);
        let mu2 = window_mean(x, k, r);
        let diff: Vec<f64> = mu1.iter().zip(&mu2).map(|(a, b)| a - b).collect();
        let margin = cfg.c * (x.len() as f64).ln() / (x.len() as f64).sqrt();
        let extremal = extremal_from_diff(&diff, margin);

        let mut columns: Vec<usize> = extremal.plus.iter().chain(&extremal.minus).copied().collect();
        columns.sort_unstable();
        columns.dedup();
        let sign_plus = columns.iter().map(|t| extremal.plus.binary_search(t).is_ok()).collect();
        let sign_minus = columns.iter().map(|t| extremal.minus.binary_search(t).is_ok()).collect();

        // Jump-corrected observations, restricted to the needed columns.
        let q = columns.len();
        let mut y = vec![0.0; n_i * q];
        for (row, idx) in (l..r).enumerate() {
            let obs = x.row(idx);
            let after = idx + 1 > k;
            for (c, &t) in columns.iter().enumerate() {
                // Ŷ_j = X_j − (μ̂₂ − μ̂₁)·1{j > k̂_i}
                y[row * q + c] = if after { obs[t] + diff[t] } else { obs[t] };
            }
        }
        let mut centre = vec![0.0; q];
        for row in y.chunks_exact(q) {
            centre.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        centre.iter_mut().for_each(|m| *m /= n_i as f64);

        // prefix[j] = Σ_{rows < j} (Ŷ − Ȳ)
        let mut prefix = vec![0.0; (n_i + 1) * q];
        for row in 0..n_i {
            for c in 0..q {
                prefix[(row + 1) * q + c] = prefix[row * q + c] + (y[row * q + c] - centre[c]);
            }
        }
        let mut blocks = vec![0.0; n_i * q];
        for start in 0..n_i {
            let end = (start + big_l).min(n_i);
            let scale = 1.0 / ((end - start) as f64).sqrt();
            for c in 0..q {
                blocks[start * q + c] = (prefix[end * q + c] - prefix[start * q + c]) * scale;
            }
        }

        Ok(Self {
            l,
            k,
            r,
            h: (k - l) as f64 / n_i as f64,
            columns,
            sign_plus,
            sign_minus,
            blocks,
            extremal,
        })
    }

    /// `T̂_i^{(r)}` for multipliers indexed from the first observation of the
    /// window (`multipliers[0]` belongs to observation `l + 1`).
    pub(crate) fn replicate(&self, multipliers: &[f64]) -> f64 {
        let n_i = self.r - self.l;
        let q = self.columns.len();
        let split = self.k - self.l;
        let mut at_change = vec![0.0; q];
        let mut at_end = vec![0.0; q];
        for (start, &xi) in multipliers[..n_i].iter().enumerate() {
            if start == split {
                at_change.copy_from_slice(&at_end);
            }
            let row = &self.blocks[start * q..(start + 1) * q];
            at_end.iter_mut().zip(row).for_each(|(acc, z)| *acc += z * xi);
        }
        if split == n_i {
            at_change.copy_from_slice(&at_end);
        }
        let norm = 1.0 / (n_i as f64).sqrt();
        let mut best = f64::NEG_INFINITY;
        for c in 0..q {
            // Ŵ(ŝ_i, t) = B̂(ŝ_i, t) − ĥ(ŝ_i) B̂(ŝ_{i+1}, t)
            let w = norm * (at_change[c] - self.h * at_end[c]);
            if self.sign_plus[c] {
                best = best.max(w);
            }
            if self.sign_minus[c] {
                best = best.max(-w);
            }
        }
        best
    }
}

/// One bootstrap statistic `T̂_i^{(r)}` of candidate `i` for the given
/// standard normal multipliers; `multipliers[b]` weights the block starting
/// at observation `k̂_{i−1} + 1 + b`.
pub fn bootstrap_replicate(
    x: &FunctionalSeries,
    cps: &ChangePointSet,
    i: usize,
    cfg: &BootstrapConfig,
    multipliers: &[f64],
) -> Result<f64> {
    let prep = CandidateBootstrap::prepare(x, cps, i, cfg)?;
    let needed = prep.r - prep.l;
    if multipliers.len() < needed {
        return Err(Error::DimensionMismatch(format!(
            "candidate {i} needs {needed} multipliers, got {}",
            multipliers.len()
        )));
    }
    Ok(prep.replicate(multipliers))
}

/// Standard normal multipliers of replicate `rep` for observations `1..=n`.
pub fn replicate_multipliers(seed: u64, rep: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// `⌈(1−α)R⌉`-th order statistic of `draws`.
pub fn empirical_quantile(draws: &[f64], alpha: f64) -> f64 {
    assert!(!draws.is_empty(), "quantile of an empty sample");
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((1.0 - alpha) * draws.len() as f64 - 1e-9).ceil() as usize;
    sorted[rank.clamp(1, draws.len()) - 1]
}

/// Runs `R` replicates where each replicate's statistic is produced by
/// `statistic(multipliers)` from the shared absolute-index multipliers.
pub(crate) fn run_replicates(
    n: usize,
    cfg: &BootstrapConfig,
    statistic: impl Fn(&[f64]) -> f64 + Sync,
) -> Vec<f64> {
    (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|rep| statistic(&replicate_multipliers(cfg.seed, rep, n)))
        .collect()
}

/// `q*_{1−α}` and the `R` draws of `max_i T̂_i^{(r)}`.
pub fn bootstrap_quantile(
    x: &FunctionalSeries,
    cps: &ChangePointSet,
    _delta: f64,
    cfg: &BootstrapConfig,
) -> Result<(f64, Vec<f64>)> {
    cfg.validate()?;
    if cps.is_empty() {
        return Err(Error::InvalidConfig("bootstrap needs at least one candidate".into()));
    }
    let preps = (1..=cps.len())
        .map(|i| CandidateBootstrap::prepare(x, cps, i, cfg))
        .collect::<Result<Vec<_>>>()?;
    let draws = run_replicates(x.len(), cfg, |xi| aggregate_max(&preps, xi));
    Ok((empirical_quantile(&draws, cfg.alpha), draws))
}

pub(crate) fn aggregate_max(preps: &[CandidateBootstrap], multipliers: &[f64]) -> f64 {
    preps
        .iter()
        .map(|p| p.replicate(&multipliers[p.l..]))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Segmentation with threshold `xi` followed by the bootstrap relevance test.
pub fn detect_relevant(x: &FunctionalSeries, delta: f64, cfg: &BootstrapConfig, xi: f64) -> Result<RelevanceReport> {
    cfg.validate()?;
    let cps = binseg(x, xi, cfg.min_segment())?;
    relevance_for_candidates(x, cps, delta, cfg)
}

/// Step 2 alone, on a given candidate set.
pub fn relevance_for_candidates(
    x: &FunctionalSeries,
    cps: ChangePointSet,
    delta: f64,
    cfg: &BootstrapConfig,
) -> Result<RelevanceReport> {
    cfg.validate()?;
    check_sample(x, &cps)?;
    let segment_means = cps
        .segments()
        .into_iter()
        .map(|(from, to)| Curve::from_vec_unchecked(window_mean(x, from - 1, to)))
        .collect();
    if cps.is_empty() {
        return Ok(RelevanceReport {
            candidates: cps,
            detectors: Vec::new(),
            quantile: None,
            bootstrap_draws: Vec::new(),
            relevant: Vec::new(),
            segment_means,
            extremal: Vec::new(),
            delta,
        });
    }
    let detectors = (1..=cps.len())
        .map(|i| detector(x, &cps, i, delta))
        .collect::<Result<Vec<_>>>()?;
    let preps = (1..=cps.len())
        .map(|i| CandidateBootstrap::prepare(x, &cps, i, cfg))
        .collect::<Result<Vec<_>>>()?;
    let draws = run_replicates(x.len(), cfg, |xi| aggregate_max(&preps, xi));
    let quantile = empirical_quantile(&draws, cfg.alpha);
    let relevant = detectors.iter().map(|d| d.statistic > quantile).collect();
    Ok(RelevanceReport {
        candidates: cps,
        detectors,
        quantile: Some(quantile),
        bootstrap_draws: draws,
        relevant,
        segment_means,
        extremal: preps.into_iter().map(|p| p.extremal).collect(),
        delta,
    })
}
