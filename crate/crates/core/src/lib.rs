//! Detection of relevant change points in functional time series.
//!
//! The pipeline has two steps. Binary segmentation over the L² norm of the
//! functional CUSUM proposes candidate change points; a block multiplier
//! bootstrap then decides which of them exceed a practically relevant size
//! `Δ` in sup-norm.
//!
//! ```
//! use fdrel_core::{binseg, default_xi, detect_relevant, BootstrapConfig, FunctionalSeries, Grid};
//!
//! let grid = Grid::uniform(5).unwrap();
//! let data: Vec<f64> = (0..60)
//!     .flat_map(|j| std::iter::repeat(if j < 30 { 0.0 } else { 4.0 }).take(5))
//!     .collect();
//! let x = FunctionalSeries::from_rows(grid, data).unwrap();
//! let cps = binseg(&x, 1e-6, 4).unwrap();
//! assert_eq!(cps.indices(), &[30]);
//!
//! let cfg = BootstrapConfig { replicates: 50, ..BootstrapConfig::new(2, 7) };
//! let report = detect_relevant(&x, 1.0, &cfg, 1e-6).unwrap();
//! assert_eq!(report.candidates.indices(), &[30]);
//! # let _ = default_xi(&x);
//! ```

pub mod binseg;
pub mod cusum;
pub mod diagnostics;
pub mod error;
pub mod fda;
pub mod multivariate;
pub mod relevance;
pub mod simulate;
pub mod tuning;

pub use binseg::{binseg, default_xi, ChangePointSet};
pub use cusum::{cusum, cusum_argmax_l2, cusum_supnorm_at, CusumEvaluation};
pub use diagnostics::{autocorr_surface, autocov_norms, variogram, AutocorrSurface, Variogram};
pub use error::{Error, Result};
pub use fda::{l2_norm, rescale, segment_mean, sup_norm, Curve, FunctionalSeries, Grid, SegmentMap};
pub use multivariate::{
    binseg_joint, default_xi_joint, detect_relevant_multivariate, Aggregation, JointReport,
    MultivariateReport,
};
pub use relevance::{
    bootstrap_quantile, bootstrap_replicate, detect_relevant, detector, empirical_quantile,
    extremal_sets, relevance_for_candidates, replicate_multipliers, BootstrapConfig, Detector,
    ExtremalSets, RelevanceReport,
};
pub use simulate::{
    bump_delta_j, gen_fma1, gen_mean_series, gen_series, scenario_mean, FmaParams, MeanLabel,
    ScenarioDesign, ScenarioRegistry, SimScenario,
};
pub use tuning::{
    select_block_length, select_delta, BlockLengthRegistry, BlockLengthRule, FixedExponent,
    QuadraticSpectralPlugIn, TuningDefaults,
};
