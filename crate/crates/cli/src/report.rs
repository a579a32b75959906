//! JSON report of a `detect` run.

use fdrel_core::{empirical_quantile, RelevanceReport};
use serde::Serialize;

use crate::config::ResolvedConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateEntry {
    pub index: usize,
    pub scaled: f64,
    pub detector: f64,
    pub relevant: bool,
    pub window_len: usize,
    pub sup_cusum: f64,
    pub h_at_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawsSummary {
    pub min: f64,
    pub q50: f64,
    pub q90: f64,
    pub max: f64,
}

impl DrawsSummary {
    /// Order-statistic summary; `None` for an empty sample.
    pub fn of(draws: &[f64]) -> Option<Self> {
        if draws.is_empty() {
            return None;
        }
        Some(Self {
            min: draws.iter().cloned().fold(f64::INFINITY, f64::min),
            q50: empirical_quantile(draws, 0.5),
            q90: empirical_quantile(draws, 0.1),
            max: draws.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentEntry {
    pub from: usize,
    pub to: usize,
    pub mean_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: ResolvedConfig,
    pub candidates: Vec<CandidateEntry>,
    pub quantile: Option<f64>,
    pub draws_summary: Option<DrawsSummary>,
    pub segments: Vec<SegmentEntry>,
    pub delta: f64,
    pub xi: f64,
    #[serde(rename = "L")]
    pub block_len: usize,
    pub n: usize,
    pub grid_size: usize,
    pub version: &'static str,
    pub seed: u64,
}

impl Report {
    pub fn build(config: ResolvedConfig, rel: &RelevanceReport, grid_size: usize) -> Self {
        let cps = &rel.candidates;
        let candidates = rel
            .detectors
            .iter()
            .zip(&rel.relevant)
            .map(|(d, &relevant)| CandidateEntry {
                index: cps.boundary(d.candidate),
                scaled: cps.scaled(d.candidate),
                detector: d.statistic,
                relevant,
                window_len: d.window_len,
                sup_cusum: d.sup_cusum,
                h_at_change: d.h_at_change,
            })
            .collect();
        let segments = cps
            .segments()
            .into_iter()
            .enumerate()
            .map(|(i, (from, to))| SegmentEntry {
                from,
                to,
                mean_file: segment_file(i + 1),
            })
            .collect();
        Self {
            candidates,
            quantile: rel.quantile,
            draws_summary: DrawsSummary::of(&rel.bootstrap_draws),
            segments,
            delta: config.delta,
            xi: config.xi,
            block_len: config.block_len,
            n: cps.sample_size(),
            grid_size,
            version: env!("CARGO_PKG_VERSION"),
            seed: config.requested.seed,
            config,
        }
    }
}

pub fn segment_file(i: usize) -> String {
    format!("segment_{i}.csv")
}
