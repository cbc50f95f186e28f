//! Monte-Carlo experiment runner: random Gaussian systems and massive
//! MU-MIMO-OFDM downlinks, aggregated into percentile PAR/PINC trade-off
//! curves and written as CSV or JSON.
//!
//! Trials draw from [`stream_rng`] keyed by `(seed, trial)`, run in
//! parallel on a private thread pool, and are reduced in trial order, so
//! output depends only on the configuration.

mod emit;
mod selftest;

pub use emit::{emit_results, read_json, write_csv, write_json, OutputFormat, ResultDocument};
pub use selftest::{selftest, SelftestCheck};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jpp::{solve_jpp_with, JppConfig, JppSolver};
use crate::metrics::{db, percentile, tradeoff_constant};
use crate::ofdm::{gen_channel_with, make_tone_plan, ChannelDims, Constellation, PlanProfile, SymbolGrid, ToneConstraints};
use crate::rng::{complex_normal_matrix, complex_normal_vec, stream_rng, Stream};
use crate::solvers::{solve_drs_linf, solve_fbs_lplq, IterTrace, LinearSystem, SolverConfig};

/// Solver run by an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Algorithm {
    Lplq { p: f64, q: f64 },
    Linf,
}

impl Algorithm {
    pub fn label(&self) -> String {
        self.to_string()
    }

    fn jpp_solver(&self) -> JppSolver<f64> {
        match *self {
            Algorithm::Lplq { p, q } => JppSolver::Lplq { p, q },
            Algorithm::Linf => JppSolver::Linf,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Lplq { p, q } => write!(f, "lplq:{p}:{q}"),
            Algorithm::Linf => f.write_str("linf"),
        }
    }
}

/// Parses `linf` or `lplq:P:Q`.
impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "linf" {
            return Ok(Algorithm::Linf);
        }
        let bad = || Error::Config(format!("unknown algorithm {s:?}; expected linf or lplq:P:Q"));
        let mut parts = s.split(':');
        if parts.next() != Some("lplq") {
            return Err(bad());
        }
        let mut order = || -> Result<f64> {
            parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)
        };
        let (p, q) = (order()?, order()?);
        if parts.next().is_some() {
            return Err(bad());
        }
        if !(q >= 1.0 && p > q && p.is_finite()) {
            return Err(Error::Config(format!("need 1 ≤ q < p < ∞, got {s}")));
        }
        Ok(Algorithm::Lplq { p, q })
    }
}

/// Comma-separated list of algorithms, e.g. `lplq:4:2,lplq:2:1,linf`.
pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExperimentKind {
    /// `A ∈ ℂ^{M×N}` and `y ∈ ℂ^M` with i.i.d. `CN(0, 1)` entries.
    Gaussian { m: usize, n: usize },
    /// `B` antennas, `U` users, `W` tones, `L` channel taps.
    Mimo {
        b: usize,
        u: usize,
        w: usize,
        taps: usize,
        plan: PlanProfile,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub algorithms: Vec<Algorithm>,
    /// Iterates per algorithm; iterate 1 is the LS solution.
    pub k_max: usize,
    pub trials: usize,
    pub seed: u64,
    /// Reported percentile of the PAR and PINC distributions.
    pub percentile: f64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// Minimum DRS iterations behind the trade-off constant of the
    /// Gaussian experiment (the run uses `max(k_max, bound_iters)`).
    pub bound_iters: usize,
    /// Early exit for the Gaussian ℓp−ℓq runs once the objective falls
    /// below this value; later rows repeat the final iterate.
    pub objective_tol: Option<f64>,
}

impl ExperimentConfig {
    /// One-instance Gaussian experiment with every algorithm.
    pub fn gaussian(m: usize, n: usize, k_max: usize, seed: u64) -> Self {
        Self {
            kind: ExperimentKind::Gaussian { m, n },
            algorithms: default_algorithms(),
            k_max,
            trials: 1,
            seed,
            percentile: 99.0,
            workers: 0,
            bound_iters: 100_000,
            objective_tol: None,
        }
    }

    /// 100-trial MIMO-OFDM experiment with every algorithm.
    pub fn mimo(b: usize, u: usize, w: usize, taps: usize, plan: PlanProfile, seed: u64) -> Self {
        Self {
            kind: ExperimentKind::Mimo { b, u, w, taps, plan },
            algorithms: default_algorithms(),
            k_max: 20,
            trials: 100,
            seed,
            percentile: 99.0,
            workers: 0,
            bound_iters: 0,
            objective_tol: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithm selected".into()));
        }
        if self.k_max == 0 {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        if !(self.percentile > 0.0 && self.percentile < 100.0) {
            return Err(Error::Config(format!(
                "percentile {} outside (0, 100)",
                self.percentile
            )));
        }
        for alg in &self.algorithms {
            if let Algorithm::Lplq { p, q } = *alg {
                if !(q >= 1.0 && p > q && p.is_finite()) {
                    return Err(Error::Config(format!("invalid algorithm {alg}")));
                }
            }
        }
        match &self.kind {
            ExperimentKind::Gaussian { m, n } => {
                if *m == 0 || m > n {
                    return Err(Error::Config(format!("need 0 < M ≤ N, got M={m} N={n}")));
                }
            }
            ExperimentKind::Mimo { b, u, w, taps, plan } => {
                ChannelDims::new(*b, *u, *w, *taps).validate()?;
                make_tone_plan(*w, plan)?;
            }
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
    }
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![
        Algorithm::Lplq { p: 4.0, q: 2.0 },
        Algorithm::Lplq { p: 2.0, q: 1.0 },
        Algorithm::Linf,
    ]
}

/// One row of a trade-off curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub algorithm: String,
    /// 1-based; iteration 1 is the LS solution.
    pub iteration: usize,
    pub par_db: f64,
    pub pinc_db: f64,
    /// Mean over trials of the algorithm's own objective.
    pub objective_mean: f64,
}

/// Worst constraint violations over every recorded MIMO iterate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_evm_residual: f64,
    pub max_oob_energy: f64,
    pub max_parseval_mismatch: f64,
    /// Largest relative residual `‖A·x − y‖/‖y‖` (Gaussian runs).
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub percentile: f64,
    /// Rows grouped by algorithm (configuration order), then iteration.
    pub points: Vec<CurvePoint>,
    /// `10·log10(c)` of the trade-off constant; for several Gaussian trials
    /// the configured percentile of the per-trial values. Absent for MIMO.
    pub bound_db: Option<f64>,
    /// Number of samples behind each PAR percentile.
    pub par_samples: usize,
    /// Number of samples behind each PINC percentile.
    pub pinc_samples: usize,
    pub diagnostics: Diagnostics,
}

impl TradeoffCurve {
    pub fn algorithm(&self, label: &str) -> Vec<&CurvePoint> {
        self.points.iter().filter(|p| p.algorithm == label).collect()
    }

    pub fn point(&self, label: &str, iteration: usize) -> Option<&CurvePoint> {
        self.points
            .iter()
            .find(|p| p.algorithm == label && p.iteration == iteration)
    }
}

/// Samples of one algorithm at one iteration of one trial.
#[derive(Clone)]
struct AlgorithmSamples {
    par_db: Vec<f64>,
    pinc_db: f64,
    objective: f64,
}

/// `rows[k]` holds iteration `k+1`; runs that stopped early repeat their
/// last row.
fn pad_rows<R: Clone>(mut rows: Vec<R>, k_max: usize) -> Result<Vec<R>> {
    let last = rows
        .last()
        .cloned()
        .ok_or_else(|| Error::domain("solver produced no iterates"))?;
    rows.resize(k_max, last);
    Ok(rows)
}

fn aggregate(
    cfg: &ExperimentConfig,
    trials: &[Vec<Vec<AlgorithmSamples>>],
) -> Result<Vec<CurvePoint>> {
    let mut points = Vec::with_capacity(cfg.algorithms.len() * cfg.k_max);
    for (a, alg) in cfg.algorithms.iter().enumerate() {
        for k in 0..cfg.k_max {
            let samples = trials.iter().map(|t| &t[a][k]);
            let par: Vec<f64> = samples.clone().flat_map(|s| s.par_db.iter().copied()).collect();
            let pinc: Vec<f64> = samples.clone().map(|s| s.pinc_db).collect();
            let objective_mean =
                samples.map(|s| s.objective).sum::<f64>() / trials.len() as f64;
            points.push(CurvePoint {
                algorithm: alg.label(),
                iteration: k + 1,
                par_db: percentile(&par, cfg.percentile)?,
                pinc_db: percentile(&pinc, cfg.percentile)?,
                objective_mean,
            });
        }
    }
    Ok(points)
}

fn gaussian_system(m: usize, n: usize, seed: u64, trial: u64) -> Result<LinearSystem<f64>> {
    let mut rng = stream_rng(seed, trial, Stream::System);
    let a = complex_normal_matrix(&mut rng, m, n, 1.0);
    let y = complex_normal_vec(&mut rng, m, 1.0);
    LinearSystem::new(a, y)
}

/// The system drawn for `trial` of a Gaussian experiment.
pub fn gaussian_instance(cfg: &ExperimentConfig, trial: u64) -> Result<LinearSystem<f64>> {
    match cfg.kind {
        ExperimentKind::Gaussian { m, n } => gaussian_system(m, n, cfg.seed, trial),
        _ => Err(Error::Config("not a Gaussian experiment".into())),
    }
}

fn trace_rows(trace: &IterTrace<f64>, k_max: usize) -> Result<Vec<AlgorithmSamples>> {
    let rows = trace
        .records
        .iter()
        .map(|r| AlgorithmSamples {
            par_db: vec![r.report.par_db],
            pinc_db: r.report.pinc_db,
            objective: r.objective,
        })
        .collect();
    pad_rows(rows, k_max)
}

struct GaussianTrial {
    /// Indexed `[algorithm][iteration]`.
    rows: Vec<Vec<AlgorithmSamples>>,
    bound_db: f64,
    max_residual: f64,
}

fn gaussian_trial(cfg: &ExperimentConfig, m: usize, n: usize, trial: u64) -> Result<GaussianTrial> {
    let sys = gaussian_system(m, n, cfg.seed, trial)?;
    let x_ls = sys.solve_ls();
    let mut rows = Vec::with_capacity(cfg.algorithms.len());
    let mut max_residual = 0.0f64;
    let mut bound_run = None;
    let bound_iters = cfg.k_max.max(cfg.bound_iters);
    for alg in &cfg.algorithms {
        let sol = match *alg {
            Algorithm::Lplq { p, q } => {
                let mut sc = SolverConfig::lplq(p, q, cfg.k_max);
                sc.objective_tol = cfg.objective_tol;
                solve_fbs_lplq(&sys, &sc)?
            }
            Algorithm::Linf => {
                let sc = SolverConfig {
                    k_max: cfg.k_max,
                    ..SolverConfig::default()
                };
                let sol = solve_drs_linf(&sys, &sc)?;
                if bound_iters == cfg.k_max {
                    bound_run = Some(sol.x.clone());
                }
                sol
            }
        };
        max_residual = sol.trace.records.iter().map(|r| r.residual).fold(max_residual, f64::max);
        rows.push(trace_rows(&sol.trace, cfg.k_max)?);
    }
    let x_inf = match bound_run {
        Some(x) => x,
        None => {
            let sc = SolverConfig {
                k_max: bound_iters,
                record_trace: false,
                ..SolverConfig::default()
            };
            solve_drs_linf(&sys, &sc)?.x
        }
    };
    let bound_db = db(tradeoff_constant(&sys, &x_inf, &x_ls)?);
    Ok(GaussianTrial {
        rows,
        bound_db,
        max_residual,
    })
}

/// Runs every configured solver on `trials` random Gaussian systems from
/// the shared LS start and reports per-iteration percentiles, together with
/// the trade-off constant of a converged DRS run.
pub fn run_gaussian_experiment(cfg: &ExperimentConfig) -> Result<TradeoffCurve> {
    cfg.validate()?;
    let (m, n) = match cfg.kind {
        ExperimentKind::Gaussian { m, n } => (m, n),
        _ => return Err(Error::Config("not a Gaussian experiment".into())),
    };
    let results = cfg.pool()?.install(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| gaussian_trial(cfg, m, n, t))
            .collect::<Result<Vec<_>>>()
    })?;
    let bounds: Vec<f64> = results.iter().map(|r| r.bound_db).collect();
    let max_residual = results.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    let rows: Vec<_> = results.into_iter().map(|r| r.rows).collect();
    Ok(TradeoffCurve {
        percentile: cfg.percentile,
        points: aggregate(cfg, &rows)?,
        bound_db: Some(percentile(&bounds, cfg.percentile)?),
        par_samples: cfg.trials,
        pinc_samples: cfg.trials,
        diagnostics: Diagnostics {
            max_residual,
            ..Diagnostics::default()
        },
    })
}

struct MimoTrial {
    rows: Vec<Vec<AlgorithmSamples>>,
    diagnostics: Diagnostics,
}

fn mimo_trial(cfg: &ExperimentConfig, dims: &ChannelDims, plan: &PlanProfile, trial: u64) -> Result<MimoTrial> {
    let plan = make_tone_plan(dims.w, plan)?;
    let chan = gen_channel_with::<f64, _>(dims, &mut stream_rng(cfg.seed, trial, Stream::Channel))?;
    let s = SymbolGrid::random(
        dims.u,
        &plan,
        Constellation::Qam16,
        &mut stream_rng(cfg.seed, trial, Stream::Symbols),
    );
    let constraints = ToneConstraints::new(&s, &chan, &plan)?;
    drop(chan);
    let mut diagnostics = Diagnostics::default();
    let mut rows = Vec::with_capacity(cfg.algorithms.len());
    for alg in &cfg.algorithms {
        let jc = JppConfig {
            k_max: cfg.k_max,
            ..JppConfig::new(alg.jpp_solver())
        };
        let res = solve_jpp_with(&constraints, &jc)?;
        let mut alg_rows = Vec::with_capacity(res.trace.len());
        for r in &res.trace {
            let d = &mut diagnostics;
            d.max_evm_residual = d.max_evm_residual.max(r.evm_residual);
            d.max_oob_energy = d.max_oob_energy.max(r.oob_energy);
            d.max_parseval_mismatch = d.max_parseval_mismatch.max(r.parseval_mismatch);
            alg_rows.push(AlgorithmSamples {
                par_db: r.par.iter().map(|&v| db(v)).collect(),
                pinc_db: db(r.pinc),
                objective: r.objective,
            });
        }
        rows.push(pad_rows(alg_rows, cfg.k_max)?);
    }
    Ok(MimoTrial { rows, diagnostics })
}

/// Runs every configured JPP algorithm on fresh channel and 16-QAM symbol
/// draws per trial. PAR samples are pooled over antennas and trials, PINC
/// samples over trials.
pub fn run_mimo_experiment(cfg: &ExperimentConfig) -> Result<TradeoffCurve> {
    cfg.validate()?;
    let (dims, plan) = match &cfg.kind {
        ExperimentKind::Mimo { b, u, w, taps, plan } => (ChannelDims::new(*b, *u, *w, *taps), plan),
        _ => return Err(Error::Config("not a MIMO experiment".into())),
    };
    let results = cfg.pool()?.install(|| {
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| mimo_trial(cfg, &dims, plan, t))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut diagnostics = Diagnostics::default();
    for r in &results {
        let d = &r.diagnostics;
        diagnostics.max_evm_residual = diagnostics.max_evm_residual.max(d.max_evm_residual);
        diagnostics.max_oob_energy = diagnostics.max_oob_energy.max(d.max_oob_energy);
        diagnostics.max_parseval_mismatch =
            diagnostics.max_parseval_mismatch.max(d.max_parseval_mismatch);
    }
    let rows: Vec<_> = results.into_iter().map(|r| r.rows).collect();
    Ok(TradeoffCurve {
        percentile: cfg.percentile,
        points: aggregate(cfg, &rows)?,
        bound_db: None,
        par_samples: cfg.trials * dims.b,
        pinc_samples: cfg.trials,
        diagnostics,
    })
}

/// Dispatches on the experiment kind.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TradeoffCurve> {
    match cfg.kind {
        ExperimentKind::Gaussian { .. } => run_gaussian_experiment(cfg),
        ExperimentKind::Mimo { .. } => run_mimo_experiment(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_parsing() {
        assert_eq!("linf".parse::<Algorithm>().unwrap(), Algorithm::Linf);
        assert_eq!(
            parse_algorithms("lplq:4:2, lplq:2:1,linf").unwrap(),
            default_algorithms()
        );
        for bad in ["lplq:2:2", "lplq:4", "lplq:4:2:1", "l2", "lplq:a:b", "lplq:2:0.5"] {
            assert!(bad.parse::<Algorithm>().is_err(), "{bad}");
        }
        assert_eq!(Algorithm::Lplq { p: 4.0, q: 2.0 }.label(), "lplq:4:2");
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::gaussian(4, 8, 5, 1).validate().is_ok());
        let mut cfg = ExperimentConfig::gaussian(4, 8, 5, 1);
        cfg.algorithms.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::gaussian(4, 8, 5, 1);
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 1;
        cfg.percentile = 100.0;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::gaussian(9, 8, 5, 1).validate().is_err());
        let cfg = ExperimentConfig::mimo(4, 4, 16, 2, PlanProfile::Centered(8), 1);
        assert!(matches!(run_mimo_experiment(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn square_system_curves_are_constant() {
        let mut cfg = ExperimentConfig::gaussian(6, 6, 8, 3);
        cfg.bound_iters = 8;
        let curve = run_gaussian_experiment(&cfg).unwrap();
        let first = &curve.points[0];
        for p in &curve.points {
            assert!((p.par_db - first.par_db).abs() < 1e-9);
            assert!(p.pinc_db.abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_curve_starts_at_ls() {
        let mut cfg = ExperimentConfig::gaussian(5, 10, 30, 2);
        cfg.bound_iters = 2000;
        cfg.trials = 3;
        let curve = run_gaussian_experiment(&cfg).unwrap();
        assert_eq!(curve.points.len(), 90);
        let ls = curve.point("linf", 1).unwrap().par_db;
        for alg in &cfg.algorithms {
            let p = curve.point(&alg.label(), 1).unwrap();
            assert_eq!(p.pinc_db, 0.0);
            assert_eq!(p.par_db, ls);
        }
        assert!(curve.bound_db.unwrap() > 0.0);
    }

    #[test]
    fn mimo_run_is_order_invariant() {
        let mut cfg = ExperimentConfig::mimo(6, 2, 32, 3, PlanProfile::Centered(20), 5);
        cfg.trials = 3;
        cfg.k_max = 4;
        cfg.workers = 1;
        let serial = run_mimo_experiment(&cfg).unwrap();
        cfg.workers = 3;
        let parallel = run_mimo_experiment(&cfg).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial.par_samples, 18);
        assert!(serial.diagnostics.max_evm_residual < 1e-10);
        assert_eq!(serial.diagnostics.max_oob_energy, 0.0);
        for alg in &cfg.algorithms {
            assert_eq!(serial.point(&alg.label(), 1).unwrap().pinc_db, 0.0);
        }
    }
}
