use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fdrel_cli::commands::{run_detect, run_diagnose, run_simulate, DiagnoseArgs, SimulateArgs};
use fdrel_cli::config::{BlockChoice, FileConfig, RunConfig, Setting};
use fdrel_cli::io::DEFAULT_GRID_SIZE;
use fdrel_cli::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "fdrel", version, about = "Relevant change points in functional time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment a series and test each candidate for a relevant change.
    Detect {
        #[arg(long)]
        input: PathBuf,
        /// Output directory for report.json and CSV plot data.
        #[arg(long)]
        out: PathBuf,
        /// TOML file with any of: alpha, delta, xi, L, R, c, seed, min_seg, grid_size.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Relevance threshold, or `auto`.
        #[arg(long)]
        delta: Option<Setting>,
        /// Segmentation threshold, or `auto`.
        #[arg(long)]
        xi: Option<Setting>,
        /// Block length, or `auto:fixed` / `auto:plugin`.
        #[arg(long = "L")]
        block_len: Option<BlockChoice>,
        /// Bootstrap replicates.
        #[arg(long = "R")]
        replicates: Option<usize>,
        /// Extremal-set constant.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        min_seg: Option<usize>,
        /// Resample cycles to this many grid points.
        #[arg(long)]
        grid_size: Option<usize>,
    },
    /// Generate a seeded scenario series as CSV.
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Write the mean schedule without noise.
        #[arg(long)]
        noiseless: bool,
        #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
        grid_size: usize,
        /// Multiplier on the mean bump.
        #[arg(long, default_value_t = 1.0)]
        bump_scale: f64,
    },
    /// Lag-wise L² norms of the autocorrelation surfaces.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        max_lag: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        grid_size: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect {
            input,
            out,
            config,
            alpha,
            delta,
            xi,
            block_len,
            replicates,
            c,
            seed,
            min_seg,
            grid_size,
        } => {
            let mut cfg = RunConfig::new(input, out);
            if let Some(path) = config {
                cfg.apply_file(FileConfig::load(&path)?);
            }
            cfg.apply_file(FileConfig {
                alpha,
                delta,
                xi,
                block_len,
                replicates,
                c,
                seed,
                min_seg,
                grid_size,
            });
            let (report, _) = run_detect(&cfg)?;
            let relevant = report.candidates.iter().filter(|c| c.relevant).count();
            println!(
                "{} candidate(s), {relevant} relevant; report in {}",
                report.candidates.len(),
                cfg.out.display()
            );
        }
        Command::Simulate {
            scenario,
            n,
            seed,
            out,
            noiseless,
            grid_size,
            bump_scale,
        } => {
            let args = SimulateArgs {
                scenario,
                n,
                seed,
                out,
                noiseless,
                grid_size,
                bump_scale,
            };
            run_simulate(&args)?;
        }
        Command::Diagnose {
            input,
            max_lag,
            out,
            grid_size,
        } => {
            run_diagnose(&DiagnoseArgs {
                input,
                max_lag,
                out,
                grid_size,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Argument(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
