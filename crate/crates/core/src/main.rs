use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use decoy_clt::channel::BlockRule;
use decoy_clt::commands::{self, CoverageOptions, SweepOptions};
use decoy_clt::config::{load_counts, RunConfig};
use decoy_clt::deviation::Method;
use decoy_clt::optimizer::DeConfig;
use decoy_clt::{Error, Result};

/// Finite-key decoy-state statistics: estimation, rate sweeps, deviation
/// analysis and coverage experiments.
#[derive(Parser)]
#[command(name = "decoy-clt", version)]
struct Cli {
    /// Configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SearchArgs {
    /// Seed of the intensity search.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 300)]
    generations: usize,

    #[arg(long, default_value_t = 40)]
    population: usize,
}

impl SearchArgs {
    fn de(&self) -> DeConfig {
        DeConfig {
            seed: self.seed,
            generations: self.generations,
            population: self.population,
            ..DeConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Bounds and key length for measured counts. Exits 2 on abort.
    Estimate {
        #[arg(long)]
        counts: PathBuf,
    },
    /// Optimised finite-key and asymptotic rates over a distance grid.
    Sweep {
        /// Distances in km [default: 10,20,...,150].
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        distances: Option<Vec<f64>>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Gap between normal-approximation and binomial tail probabilities.
    Deviation {
        #[arg(long, value_delimiter = ',', default_values_t = vec![100_000_000u64, 100_000])]
        n: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-7, 0.47])]
        p: Vec<f64>,
        /// All methods when omitted.
        #[arg(long, value_delimiter = ',')]
        method: Option<Vec<String>>,
    },
    /// Monte Carlo violation rates of every bound.
    Coverage {
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Distance of the simulated link in km; only the first is used.
        #[arg(long, value_delimiter = ',', default_values_t = vec![25.0])]
        distances: Vec<f64>,
        /// Pulses per simulated session.
        #[arg(long, default_value_t = 1_000_000)]
        pulses: u64,
        #[command(flatten)]
        search: SearchArgs,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let out = cli.out.as_deref();
    match cli.command {
        Command::Estimate { counts } => {
            let counts = load_counts(&counts)?;
            let r = commands::run_estimate(&counts, &cfg)?;
            print!("{}", commands::render_estimate(&r));
            if let Some(path) = out {
                emit(Some(path), &commands::estimate_csv(&r))?;
            }
            Ok(if r.is_abort() { 2 } else { 0 })
        }
        Command::Sweep { distances, search } => {
            let opts = SweepOptions {
                distances: distances.unwrap_or_else(commands::default_distances),
                de: search.de(),
                block: BlockRule::default(),
            };
            let rows = commands::sweep(&cfg, &opts)?;
            emit(out, &commands::sweep_csv(&rows))?;
            Ok(0)
        }
        Command::Deviation { n, p, method } => {
            let methods = method
                .map(|list| {
                    list.iter()
                        .map(|m| m.parse())
                        .collect::<Result<Vec<Method>>>()
                })
                .transpose()?;
            let reports = commands::deviation_reports(&cfg, &n, &p, methods.as_deref())?;
            emit(out, &commands::deviation_csv(&reports))?;
            Ok(0)
        }
        Command::Coverage {
            trials,
            distances,
            pulses,
            search,
        } => {
            let distance_km = *distances
                .first()
                .ok_or_else(|| Error::Config("--distances needs a value".into()))?;
            let opts = CoverageOptions {
                distance_km,
                pulses,
                trials,
                seed: search.seed,
                de: search.de(),
                block: BlockRule::default(),
            };
            let (_, report) = commands::coverage(&cfg, &opts)?;
            emit(out, &commands::coverage_csv(&report))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
