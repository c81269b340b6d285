use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use certsmooth::config::{Overrides, RunConfig};
use certsmooth::core::report::{build_certified_accuracy_table, compare_radii, ood_statistics, DEFAULT_RADIUS_GRID};
use certsmooth::model::UncertaintyKindDto;
use certsmooth::records::{load_records, records_to_string};
use certsmooth::run::{run_calibration, run_certify_dataset};
use certsmooth::{output, pool};

/// Certify smoothed classifiers that can answer "uncertain".
#[derive(Debug, Parser)]
#[command(name = "certsmooth", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Noise standard deviation.
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Selection-stage draws.
    #[arg(long, global = true)]
    n0: Option<u64>,
    /// Estimation-stage draws.
    #[arg(long, global = true)]
    n: Option<u64>,
    /// Family-wise significance level.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Rejection threshold of the uncertainty rule.
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file. Commands print to stdout when it is absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Certify a dataset and write per-sample records as CSV.
    Certify {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of standard, cc, ncl.
        #[arg(long, value_delimiter = ',')]
        mode: Option<Vec<String>>,
        /// Certify every k-th sample.
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Choose the most restrictive threshold within an accuracy budget.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: UncertaintyKindDto,
        /// Tolerated relative loss of majority-vote accuracy.
        #[arg(long, default_value_t = 0.01)]
        budget: f64,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
    /// Certified accuracy per mode over a radius grid.
    Table {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Per-sample change of R_CC and R_NCL against R.
    Compare {
        #[arg(long)]
        records: PathBuf,
    },
    /// Uncertainty-class statistics of two CC-mode runs.
    Ood {
        #[arg(long)]
        id: PathBuf,
        #[arg(long)]
        ood: PathBuf,
    },
    /// Histogram of distinct labels seen in the selection stage.
    Hist {
        #[arg(long)]
        records: PathBuf,
    },
}

/// Print `text` to stdout and write `csv` to `out` when given.
fn emit(text: &str, csv: &str, out: Option<&Path>) -> Result<()> {
    print!("{text}");
    if let Some(path) = out {
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let mut overrides = Overrides {
        sigma: g.sigma,
        n0: g.n0,
        n: g.n,
        alpha: g.alpha,
        theta: g.theta,
        seed: g.seed,
        output: None,
        modes: None,
        stride: None,
    };
    match cli.command {
        Command::Certify { config, mode, stride } => {
            overrides.modes = mode;
            overrides.stride = stride;
            let cfg = RunConfig::load(&config, &overrides)?;
            let run = run_certify_dataset(&cfg, pool::worker_count())?;
            for w in &run.warnings {
                eprintln!("warning: {w}");
            }
            let csv = records_to_string(&run.records);
            // A command-line path is taken as given; a config path is
            // relative to the config file.
            match g.out.or(cfg.output) {
                Some(path) => fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => std::io::stdout().write_all(csv.as_bytes())?,
            }
        }
        Command::Calibrate { config, kind, budget, steps } => {
            let cfg = RunConfig::load(&config, &overrides)?;
            let outcome = run_calibration(&cfg, kind.into(), budget, steps)?;
            if outcome.budget_violated_at_start {
                eprintln!("warning: the accuracy budget is exceeded at the first threshold");
            }
            emit(&output::calibration_text(&outcome), &output::calibration_trace_csv(&outcome), g.out.as_deref())?;
        }
        Command::Table { records, grid } => {
            let grid = grid.unwrap_or_else(|| DEFAULT_RADIUS_GRID.to_vec());
            if grid.is_empty() || grid.iter().any(|r| !r.is_finite()) {
                bail!("the radius grid needs finite values");
            }
            let table = build_certified_accuracy_table(&load_records(&records)?, &grid);
            emit(&output::table_text(&table), &output::table_csv(&table), g.out.as_deref())?;
        }
        Command::Compare { records } => {
            let c = compare_radii(&load_records(&records)?);
            emit(&output::compare_text(&c), &output::compare_csv(&c), g.out.as_deref())?;
        }
        Command::Ood { id, ood } => {
            let id = ood_statistics(&load_records(&id)?);
            let ood = ood_statistics(&load_records(&ood)?);
            if id.samples == 0 || ood.samples == 0 {
                eprintln!("warning: a records file holds no cc-mode rows");
            }
            emit(&output::ood_text(&id, &ood), &output::ood_csv(&id, &ood), g.out.as_deref())?;
        }
        Command::Hist { records } => {
            let h = output::histograms(&load_records(&records)?);
            emit(&output::hist_text(&h), &output::hist_csv(&h), g.out.as_deref())?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
