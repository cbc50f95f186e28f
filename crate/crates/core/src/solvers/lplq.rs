use num_traits::Zero;

use super::{LinearSystem, Recorder, Solution, SolverConfig, StepSize};
use crate::error::{Error, Result};
use crate::linalg::norm_p;
use crate::metrics::{equivalence_exponent, objective_f};
use crate::scalar::{count, Real, C};

/// `|x|^e` given `|x|²`.
#[inline]
fn abs_pow<T: Real>(abs_sq: T, e: T) -> T {
    if e.is_zero() {
        return T::one();
    }
    if e.fract().is_zero() && e.to_i32().is_some_and(|k| k % 2 == 0) {
        return abs_sq.powi(e.to_i32().unwrap_or(0) / 2);
    }
    abs_sq.powf(e / T::lit(2.0))
}

/// Conjugate-coordinate gradient of the ℓp−ℓq objective, written into `out`.
///
/// Entries with `|x_i|` below [`Real::zero_threshold`] get a zero component.
pub fn grad_lplq_into<T: Real>(x: &[C<T>], p: T, q: T, out: &mut [C<T>]) {
    debug_assert_eq!(x.len(), out.len());
    let np = norm_p(x, p);
    if np.is_zero() {
        out.iter_mut().for_each(|o| *o = C::zero());
        return;
    }
    let nq = norm_p(x, q);
    let two = T::lit(2.0);
    let a = count::<T>(x.len()).powf(equivalence_exponent(p, q)) * np.powf(two - p);
    let b = nq.powf(two - q);
    let (ep, eq) = (p - two, q - two);
    let thr = T::zero_threshold();
    for (o, xi) in out.iter_mut().zip(x) {
        let m2 = xi.norm_sqr();
        *o = if m2.sqrt() < thr {
            C::zero()
        } else {
            xi.scale(a * abs_pow(m2, ep) - b * abs_pow(m2, eq))
        };
    }
}

pub fn grad_lplq<T: Real>(x: &[C<T>], p: T, q: T) -> Vec<C<T>> {
    let mut out = vec![C::zero(); x.len()];
    grad_lplq_into(x, p, q, &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepProbe<T> {
    pub tau: T,
    /// No τ down to 2⁻⁴⁰ decreased the objective.
    pub near_stationary: bool,
}

/// Rounding-noise level of the ℓp−ℓq objective at `x`: 64 ulps of its
/// first term. Objective changes below it count as neither increase nor
/// decrease.
pub(crate) fn objective_noise<T: Real>(x: &[C<T>], p: T, q: T) -> T {
    let np = norm_p(x, p);
    T::lit(64.0) * T::epsilon() * count::<T>(x.len()).powf(equivalence_exponent(p, q)) * np * np
}

/// Number of halvings tried by [`probe_step_size`].
pub(crate) const PROBE_HALVINGS: i32 = 40;

/// Largest `τ ∈ {1, 1/2, …, 2⁻⁴⁰}` for which one projected gradient step
/// from `x0` strictly decreases the ℓp−ℓq objective (beyond
/// [`objective_noise`]).
pub fn probe_step_size<T: Real>(
    sys: &LinearSystem<T>,
    x0: &[C<T>],
    cfg: &SolverConfig<T>,
) -> Result<StepProbe<T>> {
    let (p, q) = (cfg.p, cfg.q);
    let f0 = objective_f(x0, p, q)?;
    let noise = objective_noise(x0, p, q);
    let grad = grad_lplq(x0, p, q);
    let mut z = vec![C::zero(); x0.len()];
    let mut scratch = Vec::with_capacity(sys.m());
    let mut tau = T::one();
    for _ in 0..=PROBE_HALVINGS {
        for ((zi, xi), gi) in z.iter_mut().zip(x0).zip(&grad) {
            *zi = xi - gi.scale(tau);
        }
        sys.project_in_place(&mut z, &mut scratch);
        if objective_f(&z, p, q)? < f0 - noise {
            return Ok(StepProbe {
                tau,
                near_stationary: false,
            });
        }
        tau = tau / T::lit(2.0);
    }
    let tau = T::lit(2.0).powi(-PROBE_HALVINGS);
    log::warn!("step-size probe found no decrease (objective {f0}); using τ = {tau}");
    Ok(StepProbe {
        tau,
        near_stationary: true,
    })
}

/// Forward-backward splitting for `min f(x)` subject to `A·x = y`, where
/// `f` is the ℓp−ℓq objective. Iterate 1 is the LS solution; the run
/// produces `k_max` iterates unless `objective_tol` triggers first.
///
/// With [`StepSize::Auto`] the run starts at the probed step; whenever the
/// objective rises above its previous value (beyond rounding noise) the
/// step is halved and the run restarts from the LS solution, so the
/// returned trajectory is non-increasing with a single fixed step.
pub fn solve_fbs_lplq<T: Real>(sys: &LinearSystem<T>, cfg: &SolverConfig<T>) -> Result<Solution<T>> {
    cfg.validate()?;
    if cfg.p.is_infinite() {
        return Err(Error::Config("FBS needs a finite p".into()));
    }
    let x_ls = sys.solve_ls();
    let (mut tau, near_stationary) = match cfg.tau {
        StepSize::Fixed(tau) => (tau, false),
        StepSize::Auto => {
            let probe = probe_step_size(sys, &x_ls, cfg)?;
            (probe.tau, probe.near_stationary)
        }
    };
    let floor = T::lit(2.0).powi(-PROBE_HALVINGS);
    let mut restarts = 0;
    loop {
        let guard = matches!(cfg.tau, StepSize::Auto) && !near_stationary && tau > floor;
        if let Some(mut sol) = run_fbs(sys, cfg, &x_ls, tau, guard)? {
            sol.near_stationary = near_stationary;
            sol.restarts = restarts;
            return Ok(sol);
        }
        log::debug!("objective increased with τ = {tau}; restarting with τ/2");
        tau = tau / T::lit(2.0);
        restarts += 1;
    }
}

/// One FBS run with fixed `tau`; `None` when `guard` is set and the
/// objective increased.
fn run_fbs<T: Real>(
    sys: &LinearSystem<T>,
    cfg: &SolverConfig<T>,
    x_ls: &[C<T>],
    tau: T,
    guard: bool,
) -> Result<Option<Solution<T>>> {
    let (p, q) = (cfg.p, cfg.q);
    let mut x = x_ls.to_vec();
    let mut rec = Recorder::new(sys, cfg, x_ls);
    let track = guard || cfg.record_trace || cfg.objective_tol.is_some();
    let mut objective = if track { objective_f(&x, p, q)? } else { T::nan() };
    rec.record(1, &x, objective)?;

    let mut grad = vec![C::zero(); x.len()];
    let mut scratch = Vec::with_capacity(sys.m());
    let mut k = 1;
    while k < cfg.k_max {
        if cfg.objective_tol.is_some_and(|tol| objective < tol) {
            break;
        }
        grad_lplq_into(&x, p, q, &mut grad);
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi -= gi.scale(tau);
        }
        sys.project_in_place(&mut x, &mut scratch);
        k += 1;
        if track {
            let next = objective_f(&x, p, q)?;
            if guard && !(next <= objective + objective_noise(&x, p, q)) {
                return Ok(None);
            }
            objective = next;
        }
        rec.record(k, &x, objective)?;
    }
    let trace = rec.finish(k, &x)?;
    Ok(Some(Solution {
        x,
        trace,
        iterations: k,
        step: tau,
        near_stationary: false,
        restarts: 0,
    }))
}
