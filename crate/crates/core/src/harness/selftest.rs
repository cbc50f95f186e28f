//! Quick invariant checks on random data, run by `parqo selftest`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::jpp::{solve_jpp, JppConfig, JppSolver};
use crate::linalg::{dot_conj, norm2, norm_p};
use crate::metrics::{objective_f, par, par_pq};
use crate::ofdm::{gen_channel_with, make_tone_plan, ChannelDims, Constellation, PlanProfile, SymbolGrid};
use crate::rng::{complex_normal_matrix, complex_normal_vec, stream_rng, Stream};
use crate::scalar::C;
use crate::solvers::{grad_lplq, project_l1_ball, prox_linf, solve_drs_linf, LinearSystem, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestCheck {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub detail: String,
}

fn check(name: &str, worst: f64, limit: f64) -> SelftestCheck {
    SelftestCheck {
        name: name.into(),
        passed: worst <= limit,
        detail: format!("worst {worst:.3e} (limit {limit:.1e})"),
    }
}

const SEED: u64 = 0x5e1f_7e57;

fn vectors(count: usize) -> Vec<Vec<C<f64>>> {
    let mut rng = stream_rng(SEED, 0, Stream::Probe);
    (0..count)
        .map(|i| complex_normal_vec(&mut rng, 2 + i % 31, 1.0))
        .collect()
}

/// `‖x‖p ≤ ‖x‖q ≤ N^(1/q−1/p)‖x‖p` for `q < p`.
fn norm_equivalence() -> f64 {
    let mut worst = 0.0f64;
    for x in vectors(500) {
        let n = x.len() as f64;
        for (p, q) in [(4.0, 2.0), (2.0, 1.0), (3.0, 2.0), (f64::INFINITY, 2.0)] {
            let (np, nq) = (norm_p(&x, p), norm_p(&x, q));
            let scale = if p.is_infinite() { 1.0 / q } else { 1.0 / q - 1.0 / p };
            worst = worst.max((np - nq) / nq).max((nq - n.powf(scale) * np) / nq);
        }
    }
    worst
}

/// `1 ≤ PARpq ≤ PAR`.
fn surrogate_bounds() -> Result<f64> {
    let mut worst = 0.0f64;
    for x in vectors(500) {
        let full = par(&x)?;
        for (p, q) in [(4.0, 2.0), (2.0, 1.0)] {
            let s = par_pq(&x, p, q)?;
            worst = worst.max(1.0 - s).max(s - full);
        }
    }
    Ok(worst)
}

/// Central differences of `f` against `2·Re⟨∇f, δ⟩`.
fn gradient_fd() -> Result<f64> {
    let mut worst = 0.0f64;
    let mut rng = stream_rng(SEED, 1, Stream::Probe);
    for x in vectors(30) {
        let dir = complex_normal_vec::<f64, _>(&mut rng, x.len(), 1.0);
        for (p, q) in [(4.0, 2.0), (2.0, 1.0)] {
            let g = grad_lplq(&x, p, q);
            let h = 1e-6;
            let shifted = |s: f64| -> Vec<C<f64>> {
                x.iter().zip(&dir).map(|(a, d)| a + d.scale(s)).collect()
            };
            let fd = (objective_f(&shifted(h), p, q)? - objective_f(&shifted(-h), p, q)?) / (2.0 * h);
            let analytic = 2.0 * dot_conj(&g, &dir).re;
            worst = worst.max((fd - analytic).abs() / analytic.abs().max(1.0));
        }
    }
    Ok(worst)
}

/// `prox_{τ‖·‖∞}(z) + Π_{τ·B1}(z) = z`.
fn moreau() -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, z) in vectors(200).into_iter().enumerate() {
        let tau = 0.1 * (1 + i % 20) as f64;
        let prox = prox_linf(&z, tau)?;
        let proj = project_l1_ball(&z, tau)?;
        let err: Vec<C<f64>> = z.iter().zip(&prox).zip(&proj).map(|((a, b), c)| a - b - c).collect();
        worst = worst.max(norm2(&err) / norm2(&z));
    }
    Ok(worst)
}

/// Converged ℓ∞ solutions of 4×8 systems have `PAR ≤ N/(N−M+1)`.
fn linf_par_bound() -> Result<f64> {
    let mut worst = 0.0f64;
    for trial in 0..5 {
        let mut rng = stream_rng(SEED, trial, Stream::System);
        let a = complex_normal_matrix::<f64, _>(&mut rng, 4, 8, 1.0);
        let y = complex_normal_vec(&mut rng, 4, 1.0);
        let sys = LinearSystem::new(a, y)?;
        let cfg = SolverConfig {
            k_max: 20_000,
            record_trace: false,
            ..SolverConfig::default()
        };
        let x = solve_drs_linf(&sys, &cfg)?.x;
        worst = worst.max(par(&x)? / (8.0 / 5.0) - 1.0);
    }
    Ok(worst)
}

/// Worst EVM residual, OOB energy and Parseval mismatch of a small JPP run.
fn jpp_invariants() -> Result<(f64, f64, f64)> {
    let plan = make_tone_plan(64, &PlanProfile::Centered(40))?;
    let chan = gen_channel_with::<f64, _>(&ChannelDims::new(8, 2, 64, 4), &mut stream_rng(SEED, 0, Stream::Channel))?;
    let s = SymbolGrid::random(2, &plan, Constellation::Qam16, &mut stream_rng(SEED, 0, Stream::Symbols));
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for solver in [JppSolver::Lplq { p: 4.0, q: 2.0 }, JppSolver::Linf] {
        let cfg = JppConfig {
            k_max: 5,
            ..JppConfig::new(solver)
        };
        for r in solve_jpp(&s, &chan, &plan, &cfg)?.trace {
            worst.0 = worst.0.max(r.evm_residual);
            worst.1 = worst.1.max(r.oob_energy);
            worst.2 = worst.2.max(r.parseval_mismatch);
        }
    }
    Ok(worst)
}

/// Runs every check; an `Err` means a check could not run at all.
pub fn selftest() -> Result<Vec<SelftestCheck>> {
    let (evm, oob, parseval) = jpp_invariants()?;
    Ok(vec![
        check("norm equivalence", norm_equivalence(), 1e-12),
        check("surrogate PAR between 1 and PAR", surrogate_bounds()?, 1e-12),
        check("gradient against finite differences", gradient_fd()?, 1e-6),
        check("Moreau decomposition of the l-inf prox", moreau()?, 1e-12),
        check("l-inf solution PAR bound", linf_par_bound()?, 1e-3),
        check("JPP EVM residual", evm, 1e-10),
        check("JPP out-of-band energy", oob, 0.0),
        check("JPP Parseval mismatch", parseval, 1e-12),
    ])
}
