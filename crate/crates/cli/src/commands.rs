//! The `detect`, `simulate` and `diagnose` subcommands.

use std::path::{Path, PathBuf};

use fdrel_core::simulate::FmaParams;
use fdrel_core::{
    detect_relevant, gen_mean_series, gen_series, sup_norm, variogram, FunctionalSeries, Grid,
    RelevanceReport, ScenarioRegistry, Variogram,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{ingest_csv, write_json, write_series_csv, write_table, DEFAULT_GRID_SIZE};
use crate::report::{segment_file, Report};

pub const REPORT_FILE: &str = "report.json";
pub const SERIES_FILE: &str = "series.csv";
pub const DIFFERENCES_FILE: &str = "differences.csv";
pub const DIFF_SUP_FILE: &str = "diff_sup.csv";

/// Runs segmentation and the relevance test, then writes the report and plot data to `cfg.out`.
pub fn run_detect(cfg: &RunConfig) -> Result<(Report, RelevanceReport)> {
    let x = ingest_csv(&cfg.input, cfg.grid_size)?;
    let resolved = cfg.resolve(&x)?;
    let rel = detect_relevant(&x, resolved.delta, &resolved.bootstrap, resolved.xi)?;
    let report = Report::build(resolved, &rel, x.grid_size());

    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    write_series_csv(&cfg.out.join(SERIES_FILE), &x)?;
    write_segment_means(&cfg.out, &x, &rel)?;
    write_differences(&cfg.out, &x, &rel)?;
    write_json(&cfg.out.join(REPORT_FILE), &report)?;
    Ok((report, rel))
}

fn write_segment_means(out: &Path, x: &FunctionalSeries, rel: &RelevanceReport) -> Result<()> {
    let header = vec!["t".to_string(), "mean".to_string()];
    for (i, mean) in rel.segment_means.iter().enumerate() {
        let rows = x
            .grid()
            .points()
            .iter()
            .zip(mean.values())
            .map(|(&t, &m)| vec![Some(t), Some(m)]);
        write_table(&out.join(segment_file(i + 1)), &header, rows)?;
    }
    Ok(())
}

/// `|μ̂_i − μ̂_{i+1}|` per candidate, and where each reaches its sup-norm.
fn write_differences(out: &Path, x: &FunctionalSeries, rel: &RelevanceReport) -> Result<()> {
    let diffs: Vec<Vec<f64>> = rel
        .segment_means
        .windows(2)
        .map(|w| w[0].values().iter().zip(w[1].values()).map(|(a, b)| (a - b).abs()).collect())
        .collect();
    let points = x.grid().points();

    let mut header = vec!["t".to_string()];
    header.extend((1..=diffs.len()).map(|i| format!("diff_{i}")));
    let rows = (0..points.len()).map(|t| {
        std::iter::once(Some(points[t]))
            .chain(diffs.iter().map(|d| Some(d[t])))
            .collect()
    });
    write_table(&out.join(DIFFERENCES_FILE), &header, rows)?;

    let header: Vec<String> = ["candidate", "index", "t_at_sup", "sup"].map(String::from).to_vec();
    let rows = diffs.iter().enumerate().map(|(i, d)| {
        let sup = sup_norm(d);
        let at = d.iter().position(|&v| v == sup).unwrap_or(0);
        vec![
            Some((i + 1) as f64),
            Some(rel.candidates.boundary(i + 1) as f64),
            Some(points[at]),
            Some(sup),
        ]
    });
    write_table(&out.join(DIFF_SUP_FILE), &header, rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateArgs {
    pub scenario: String,
    pub n: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub noiseless: bool,
    pub grid_size: usize,
    pub bump_scale: f64,
}

impl SimulateArgs {
    pub fn new(scenario: &str, n: usize, seed: u64, out: impl Into<PathBuf>) -> Self {
        Self {
            scenario: scenario.to_string(),
            n,
            seed,
            out: out.into(),
            noiseless: false,
            grid_size: DEFAULT_GRID_SIZE,
            bump_scale: 1.0,
        }
    }
}

/// Generates a scenario series in memory.
pub fn simulate_series(args: &SimulateArgs) -> Result<FunctionalSeries> {
    if !(args.bump_scale >= 0.0 && args.bump_scale.is_finite()) {
        return Err(CliError::Argument(format!("bump scale must be non-negative, got {}", args.bump_scale)));
    }
    let design = ScenarioRegistry::default().get(&args.scenario)?;
    let mut scn = design.build(args.n, Grid::uniform(args.grid_size)?, args.seed);
    scn.bump_scale = args.bump_scale;
    let x = if args.noiseless {
        gen_mean_series(&scn)?
    } else {
        gen_series(&scn, &FmaParams::default())?
    };
    Ok(x)
}

pub fn run_simulate(args: &SimulateArgs) -> Result<FunctionalSeries> {
    let x = simulate_series(args)?;
    write_series_csv(&args.out, &x)?;
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseArgs {
    pub input: PathBuf,
    pub max_lag: usize,
    pub out: PathBuf,
    pub grid_size: Option<usize>,
}

/// Writes `lag,value,undefined_fraction`; an undefined lag leaves `value` empty.
pub fn run_diagnose(args: &DiagnoseArgs) -> Result<Variogram> {
    let x = ingest_csv(&args.input, args.grid_size)?;
    let v = variogram(&x, args.max_lag)?;
    let header: Vec<String> = ["lag", "value", "undefined_fraction"].map(String::from).to_vec();
    let rows = v
        .lags
        .iter()
        .zip(&v.values)
        .zip(&v.undefined_fraction)
        .map(|((&lag, &val), &frac)| vec![Some(lag as f64), val, Some(frac)]);
    write_table(&args.out, &header, rows)?;
    Ok(v)
}
