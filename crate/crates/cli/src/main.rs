use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use parqo::harness::{
    emit_results, parse_algorithms, run_experiment, selftest, write_csv, ExperimentConfig, OutputFormat,
};
use parqo::ofdm::PlanProfile;
use parqo::Error;

/// Minimum-PAR solutions of underdetermined systems and PAR-aware
/// precoding for massive MU-MIMO-OFDM.
#[derive(Parser)]
#[command(name = "parqo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random complex Gaussian system `A·x = y`.
    Gaussian {
        #[arg(long, default_value_t = 100)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[command(flatten)]
        common: Common,
        /// Minimum DRS iterations behind the trade-off bound.
        #[arg(long, default_value_t = 100_000)]
        bound_iters: usize,
        /// Stop the ℓp−ℓq runs once the objective drops below this value.
        #[arg(long)]
        objective_tol: Option<f64>,
    },
    /// Massive MU-MIMO-OFDM downlink with joint precoding.
    Mimo {
        /// Base-station antennas.
        #[arg(long, default_value_t = 128)]
        b: usize,
        /// Single-antenna users.
        #[arg(long, default_value_t = 16)]
        u: usize,
        /// OFDM tones.
        #[arg(long, default_value_t = 2048)]
        w: usize,
        /// Channel taps.
        #[arg(long, default_value_t = 4)]
        taps: usize,
        /// Tone plan: `lte20` or `centered:<used tones>`.
        #[arg(long, default_value = "lte20", value_parser = parse_plan)]
        plan: PlanProfile,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the built-in invariant checks.
    Selftest,
}

#[derive(Args)]
struct Common {
    /// Comma-separated list of `lplq:<p>:<q>` and `linf`.
    #[arg(long, default_value = "lplq:4:2,lplq:2:1,linf")]
    alg: String,
    /// Iterates per algorithm; iterate 1 is the LS solution.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 99.0)]
    percentile: f64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output file; `.json` selects JSON, anything else CSV. CSV goes to
    /// stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn apply(&self, cfg: &mut ExperimentConfig) -> parqo::Result<()> {
        cfg.algorithms = parse_algorithms(&self.alg)?;
        if let Some(k) = self.iters {
            cfg.k_max = k;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        cfg.percentile = self.percentile;
        cfg.workers = self.workers;
        Ok(())
    }
}

fn parse_plan(s: &str) -> Result<PlanProfile, String> {
    match s.split_once(':') {
        None if s.eq_ignore_ascii_case("lte20") => Ok(PlanProfile::Lte20),
        Some(("centered", n)) => n
            .parse()
            .map(PlanProfile::Centered)
            .map_err(|e| format!("bad tone count {n:?}: {e}")),
        _ => Err(format!("unknown tone plan {s:?}; expected lte20 or centered:<n>")),
    }
}

fn run_config(mut cfg: ExperimentConfig, common: &Common) -> parqo::Result<()> {
    common.apply(&mut cfg)?;
    cfg.validate()?;
    info!("running {:?} with {} trial(s)", cfg.kind, cfg.trials);
    let curve = run_experiment(&cfg)?;
    match &common.out {
        Some(path) => {
            emit_results(&curve, Some(&cfg), path, OutputFormat::from_path(path))?;
            info!("wrote {}", path.display());
        }
        None => write_csv(&curve, std::io::stdout().lock()).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        })?,
    }
    Ok(())
}

fn run(cli: Cli) -> parqo::Result<bool> {
    match cli.command {
        Command::Gaussian {
            m,
            n,
            common,
            bound_iters,
            objective_tol,
        } => {
            let mut cfg = ExperimentConfig::gaussian(m, n, 1000, common.seed);
            cfg.bound_iters = bound_iters;
            cfg.objective_tol = objective_tol;
            run_config(cfg, &common)?;
        }
        Command::Mimo {
            b,
            u,
            w,
            taps,
            plan,
            common,
        } => run_config(ExperimentConfig::mimo(b, u, w, taps, plan, common.seed), &common)?,
        Command::Selftest => {
            let checks = selftest()?;
            let mut out = std::io::stdout().lock();
            for c in &checks {
                let tag = if c.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(out, "{tag} {}: {}", c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::Dimension(_) | Error::Domain(_) => 2,
                e if e.is_numerical() => 3,
                _ => 1,
            })
        }
    }
}
