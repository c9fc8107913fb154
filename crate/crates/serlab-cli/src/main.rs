//! Command-line driver: analytical SER predictions, Monte Carlo sweeps, and
//! Gaussian-mixture fits of tabulated densities.

mod config;
mod run;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::PathBuf;

use config::SweepConfig;
use serlab::distortion::DiscretePdf;
use serlab::fitter::{fit_gmm, fit_report, FitOptions};
use serlab::gmm::{GmmError, GmmSpec};

#[derive(Parser)]
#[command(
    name = "serlab",
    version,
    about = "SER analysis for OFDM under impulsive noise"
)]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the analytical predictors over a sweep config
    Predict(SweepArgs),
    /// Run the Monte Carlo link simulator (plus any analytic methods) over a sweep config
    Simulate(SweepArgs),
    /// Fit a Gaussian mixture to a tabulated symmetric density
    Fit(FitArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the per-point simulation budget (symbols)
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    /// Two-column (amplitude, density) CSV input
    #[arg(long, conflicts_with = "gmm")]
    input: Option<PathBuf>,
    /// Tabulate this mixture config block as the fit target instead
    #[arg(long)]
    gmm: Option<PathBuf>,
    /// Half-span of the tabulation grid (with --gmm)
    #[arg(long, default_value_t = 220.0)]
    span: f64,
    /// Grid points per side (with --gmm)
    #[arg(long, default_value_t = 44000)]
    points: usize,
    /// Knee detection factor
    #[arg(long, default_value_t = 0.9)]
    c0: f64,
    /// Output path for the fitted mixture config block (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output path for the fit quality report CSV
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool not yet initialized");
    }
    let code = match cli.command {
        Command::Predict(args) => sweep_command(&args, false),
        Command::Simulate(args) => sweep_command(&args, true),
        Command::Fit(args) => fit_command(&args),
    };
    match code {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e
                .chain()
                .any(|c| matches!(c.downcast_ref::<GmmError>(), Some(GmmError::FitFailed(_))))
            {
                3
            } else {
                2
            };
            std::process::exit(code);
        }
    }
}

fn sweep_command(args: &SweepArgs, force_sim: bool) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg =
        SweepConfig::parse(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    if force_sim {
        cfg.methods.simulate = true;
    } else {
        cfg.methods.simulate = false;
        if cfg.methods.analytic.is_empty() {
            bail!("config lists no analytic methods for predict");
        }
    }
    let hash = hex16(&text);
    let seed = args.seed.unwrap_or(cfg.seed);
    let out = run::run_sweep(&cfg, args.budget, args.seed)?;
    match &args.out {
        Some(path) => {
            let f = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            run::write_csv(std::io::BufWriter::new(f), &cfg, &hash, seed, &out)?;
        }
        None => {
            let stdout = std::io::stdout();
            run::write_csv(stdout.lock(), &cfg, &hash, seed, &out)?;
        }
    }
    Ok(())
}

fn fit_command(args: &FitArgs) -> Result<()> {
    let (target, source) = match (&args.input, &args.gmm) {
        (Some(path), None) => {
            let f =
                std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            (
                DiscretePdf::from_csv(std::io::BufReader::new(f))?,
                path.display().to_string(),
            )
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let spec = GmmSpec::from_config_block(&text)?;
            let grid = serlab::distortion::Grid::new(args.span, args.points);
            let values = grid.amplitudes().map(|d| spec.pdf(d)).collect();
            (
                DiscretePdf::from_values(grid, values),
                path.display().to_string(),
            )
        }
        _ => bail!("fit needs exactly one of --input or --gmm"),
    };
    let opts = FitOptions {
        c0: args.c0,
        ..FitOptions::default()
    };
    let fit = fit_gmm(&target, None, &opts).map_err(promote_fit_error)?;
    let report = fit_report(&target, &fit);
    let block = fit.mixture.to_config_block();
    match &args.out {
        Some(path) => std::fs::write(path, &block)?,
        None => print!("{block}"),
    }
    let mut report_text = String::new();
    report_text.push_str("# serlab fit report\n");
    report_text.push_str(&format!("# source: {source}\n"));
    report_text.push_str("components,kl,sup_relative_error,raw_weight_sum,d_max\n");
    report_text.push_str(&format!(
        "{},{},{},{},{}\n",
        fit.mixture.component_count(),
        report.kl,
        report.sup_relative_error,
        report.raw_weight_sum,
        fit.d_max
    ));
    match &args.report {
        Some(path) => std::fs::write(path, &report_text)?,
        None => {
            let mut err = std::io::stderr().lock();
            err.write_all(report_text.as_bytes())?;
        }
    }
    Ok(())
}

/// Symmetry/normalization rejections exit with a distinct status.
fn promote_fit_error(e: GmmError) -> anyhow::Error {
    anyhow::Error::new(e)
}

fn hex16(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
