//! Constrained solvers for underdetermined systems `A·x = y`:
//! least squares, ℓp−ℓq minimization by forward-backward splitting, and
//! ℓ∞ minimization by Douglas-Rachford splitting.

mod linf;
mod lplq;
mod system;

pub use linf::{project_l1_ball, prox_linf, solve_drs_linf};
pub(crate) use linf::prox_linf_into;
pub(crate) use lplq::{objective_noise, PROBE_HALVINGS};
pub use lplq::{grad_lplq, grad_lplq_into, probe_step_size, solve_fbs_lplq, StepProbe};
pub use system::{affine_project, condition_limit, solve_ls, LinearSystem};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ParReport;
use crate::scalar::{Real, C};

/// Step size of the forward (gradient) step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepSize<T> {
    /// Halving probe from τ = 1 at the starting point, then held fixed;
    /// halved again (with a restart) if the objective ever increases.
    Auto,
    Fixed(T),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    /// Outer norm order, `q < p < ∞`.
    pub p: T,
    /// Inner norm order, `1 ≤ q < p`.
    pub q: T,
    pub tau: StepSize<T>,
    /// Number of reported iterates; iterate 1 is the LS solution.
    pub k_max: usize,
    /// Relative residual `‖A·x − y‖ / ‖y‖` every iterate must satisfy.
    pub feas_tol: T,
    pub record_trace: bool,
    /// Stop early once the ℓp−ℓq objective drops below this value.
    pub objective_tol: Option<T>,
    /// Weight of the ℓ∞ term inside Douglas-Rachford. Defaults to `‖y‖₂/√M`.
    pub drs_weight: Option<T>,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            p: T::lit(4.0),
            q: T::lit(2.0),
            tau: StepSize::Auto,
            k_max: 20,
            feas_tol: default_feas_tol(),
            record_trace: true,
            objective_tol: None,
            drs_weight: None,
        }
    }
}

pub(crate) fn default_feas_tol<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(1e4))
}

impl<T: Real> SolverConfig<T> {
    pub fn lplq(p: T, q: T, k_max: usize) -> Self {
        Self {
            p,
            q,
            k_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= T::one() && self.p > self.q) {
            return Err(Error::Config(format!(
                "need 1 ≤ q < p, got p={}, q={}",
                self.p, self.q
            )));
        }
        if self.k_max == 0 {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        if !(self.feas_tol > T::zero()) {
            return Err(Error::Config("feas_tol must be positive".into()));
        }
        if let StepSize::Fixed(t) = self.tau {
            if !(t > T::zero() && t.is_finite()) {
                return Err(Error::Config(format!("step size {t} must be positive")));
            }
        }
        if let Some(w) = self.drs_weight {
            if !(w > T::zero() && w.is_finite()) {
                return Err(Error::Config(format!("DRS weight {w} must be positive")));
            }
        }
        Ok(())
    }
}

/// One reported iterate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord<T> {
    /// 1-based; iteration 1 is the LS solution.
    pub iteration: usize,
    /// Value of the solver's own objective (ℓp−ℓq `f` or `‖x‖∞`).
    pub objective: T,
    pub report: ParReport<T>,
    pub residual: T,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterTrace<T> {
    pub records: Vec<TraceRecord<T>>,
}

impl<T> IterTrace<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord<T>> {
        self.records.last()
    }
}

/// Output of an iterative solver.
#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub x: Vec<C<T>>,
    pub trace: IterTrace<T>,
    /// Iterates actually produced (≤ `k_max`).
    pub iterations: usize,
    /// Step size used (FBS) or ℓ∞ weight (DRS).
    pub step: T,
    /// Set when the step-size probe found no decrease from the start point.
    pub near_stationary: bool,
    /// Step halvings after an objective increase (automatic step only).
    pub restarts: usize,
}

/// Records iterate `k` and enforces feasibility.
pub(crate) struct Recorder<'a, T: Real> {
    sys: &'a LinearSystem<T>,
    cfg: &'a SolverConfig<T>,
    x_ls: &'a [C<T>],
    trace: IterTrace<T>,
}

impl<'a, T: Real> Recorder<'a, T> {
    pub(crate) fn new(sys: &'a LinearSystem<T>, cfg: &'a SolverConfig<T>, x_ls: &'a [C<T>]) -> Self {
        Self {
            sys,
            cfg,
            x_ls,
            trace: IterTrace::default(),
        }
    }

    pub(crate) fn check_feasible(&self, k: usize, x: &[C<T>]) -> Result<T> {
        let residual = self.sys.relative_residual(x);
        if !(residual <= self.cfg.feas_tol) {
            return Err(Error::Infeasible {
                iteration: k,
                residual: residual.as_f64(),
                tol: self.cfg.feas_tol.as_f64(),
            });
        }
        Ok(residual)
    }

    pub(crate) fn record(&mut self, k: usize, x: &[C<T>], objective: T) -> Result<()> {
        if !self.cfg.record_trace {
            return Ok(());
        }
        let residual = self.check_feasible(k, x)?;
        let report = ParReport::new(x, self.x_ls, self.cfg.p, self.cfg.q)?;
        self.trace.records.push(TraceRecord {
            iteration: k,
            objective,
            report,
            residual,
        });
        Ok(())
    }

    pub(crate) fn finish(self, k: usize, x: &[C<T>]) -> Result<IterTrace<T>> {
        self.check_feasible(k, x)?;
        Ok(self.trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::<f64>::default().validate().is_ok());
        assert!(SolverConfig::<f64>::lplq(2.0, 2.0, 5).validate().is_err());
        assert!(SolverConfig::<f64>::lplq(2.0, 0.5, 5).validate().is_err());
        assert!(SolverConfig::<f64>::lplq(4.0, 2.0, 0).validate().is_err());
        let mut cfg = SolverConfig::<f64>::default();
        cfg.tau = StepSize::Fixed(-1.0);
        assert!(cfg.validate().is_err());
        cfg.tau = StepSize::Fixed(0.5);
        cfg.feas_tol = 0.0;
        assert!(cfg.validate().is_err());
    }
}
