use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adaptive_fermions_cli::output::{
    write_curves, write_profile, write_series, write_sweep, write_with_sidecar,
};
use adaptive_fermions_cli::{
    oracle_check, run_collapse, run_ensemble, run_sweep, CliError, ExperimentConfig, Mode, Result,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "adaptive-fermions",
    version,
    about = "Free fermions under adaptive measurement-and-feedback circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML experiment description.
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `output` in the config. Without either, the
    /// table goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Ensemble size override.
    #[arg(long)]
    trajectories: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian-state trajectories of the adaptive circuit.
    Quantum(RunArgs),
    /// The classical bitstring twin.
    Classical(RunArgs),
    /// Branching annihilating random walk.
    Barw(RunArgs),
    /// Steady-state table over the `[sweep]` grid of (p, r).
    Sweep(RunArgs),
    /// Finite-size-scaling collapse described by `[collapse]`.
    Collapse(RunArgs),
    /// Ensemble-averaged final entropy profile with its chord fit.
    EntropyProfile(RunArgs),
    /// Randomized comparison of the Gaussian simulator with exact Fock states.
    OracleCheck {
        #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 4, 6, 8])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, Option<PathBuf>)> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    if let Some(n) = args.trajectories {
        cfg.trajectories = n;
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate()?;
    let out = cfg.output.clone();
    Ok((cfg, out))
}

fn emit(
    out: Option<&Path>,
    cfg: &ExperimentConfig,
    body: impl FnOnce(&mut Vec<u8>) -> Result<()>,
) -> Result<()> {
    match out {
        Some(path) => write_with_sidecar(path, cfg, body),
        None => {
            let mut buf = Vec::new();
            body(&mut buf)?;
            print!("{}", String::from_utf8_lossy(&buf));
            Ok(())
        }
    }
}

fn run_mode(args: &RunArgs, mode: Mode) -> Result<()> {
    let (cfg, out) = load(args)?;
    if cfg.mode != mode {
        return Err(CliError::Config(format!(
            "config describes a {:?} run",
            cfg.mode
        )));
    }
    let ens = run_ensemble(&cfg, args.threads, false)?;
    emit(out.as_deref(), &cfg, |w| write_series(w, &ens.series))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Quantum(a) => run_mode(&a, Mode::Quantum)?,
        Command::Classical(a) => run_mode(&a, Mode::Classical)?,
        Command::Barw(a) => run_mode(&a, Mode::Barw)?,
        Command::Sweep(a) => {
            let (cfg, out) = load(&a)?;
            let rows = run_sweep(&cfg, a.threads)?;
            for row in rows.iter().filter(|r| r.error.is_some()) {
                eprintln!(
                    "p={} r={}: {}",
                    row.p,
                    row.r,
                    row.error.as_deref().unwrap_or("")
                );
            }
            emit(out.as_deref(), &cfg, |w| write_sweep(w, &rows))?;
        }
        Command::Collapse(a) => {
            let (cfg, out) = load(&a)?;
            let report = run_collapse(&cfg, a.threads)?;
            eprintln!("reference score {:.6e}", report.score);
            for (label, s) in &report.perturbed {
                eprintln!("{label:>10} score {s:.6e}");
            }
            emit(out.as_deref(), &cfg, |w| {
                write_curves(w, &report.transformed)
            })?;
        }
        Command::EntropyProfile(a) => {
            let (cfg, out) = load(&a)?;
            let ens = run_ensemble(&cfg, a.threads, true)?;
            let profile = ens.profile.expect("requested");
            eprintln!(
                "alpha {:.6} intercept {:.6} r^2 {:.6}",
                profile.fit.alpha, profile.fit.intercept, profile.fit.r_squared
            );
            emit(out.as_deref(), &cfg, |w| write_profile(w, &profile))?;
        }
        Command::OracleCheck {
            sizes,
            depth,
            trials,
            seed,
        } => {
            let report = oracle_check(&sizes, depth, trials, seed)?;
            let summary = serde_json::json!({
                "scripts": report.scripts,
                "max_covariance_deviation": report.worst.covariance,
                "max_renyi_deviation": report.worst.renyi,
                "max_born_deviation": report.worst.born,
                "passed": report.passed(),
            });
            println!("{summary}");
            for (script, dev) in &report.failures {
                let failure = serde_json::json!({ "deviation": dev, "script": script });
                eprintln!("{failure}");
            }
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
