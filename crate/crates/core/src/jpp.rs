//! Joint precoding and PAR reduction: minimize a per-antenna PAR penalty of
//! the time-domain signals while every used tone satisfies `H_w·x_w = s_w`
//! and every unused tone stays exactly zero.
//!
//! The ℓp−ℓq variant takes projected gradient steps (gradient per antenna
//! in time, projection per tone in frequency); the ℓ∞ variant runs
//! Douglas-Rachford with an antenna-separable `Σ_b ‖t_b‖∞` penalty.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, CMatrix};
use crate::metrics::{objective_f, par};
use crate::ofdm::{
    ChannelRealization, FreqDomainGrid, OfdmTransform, SymbolGrid, TimeDomainGrid, ToneConstraints,
    TonePlan,
};
use crate::scalar::{Real, C};
use crate::solvers::{grad_lplq_into, objective_noise, prox_linf_into, StepSize, PROBE_HALVINGS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum JppSolver<T> {
    Lplq { p: T, q: T },
    Linf,
}

impl<T: Real> JppSolver<T> {
    pub fn label(&self) -> String {
        match self {
            JppSolver::Lplq { p, q } => format!("lplq:{p}:{q}"),
            JppSolver::Linf => "linf".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JppConfig<T> {
    pub solver: JppSolver<T>,
    /// Gradient step of the ℓp−ℓq variant.
    pub tau: StepSize<T>,
    /// Reported iterates; iterate 1 is the LS precoder output.
    pub k_max: usize,
    /// Bound on the relative EVM residual of every iterate.
    pub feas_tol: T,
    pub record_trace: bool,
    /// ℓ∞ weight for the DRS variant; see [`default_linf_weight`].
    pub drs_weight: Option<T>,
}

impl<T: Real> JppConfig<T> {
    pub fn new(solver: JppSolver<T>) -> Self {
        Self {
            solver,
            tau: StepSize::Auto,
            k_max: 20,
            feas_tol: T::lit(1e-10).max(T::epsilon() * T::lit(1e4)),
            record_trace: true,
            drs_weight: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let JppSolver::Lplq { p, q } = self.solver {
            if !(q >= T::one() && p > q && p.is_finite()) {
                return Err(Error::Config(format!("need 1 ≤ q < p < ∞, got p={p}, q={q}")));
            }
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

/// Metrics of one JPP iterate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JppRecord<T> {
    pub iteration: usize,
    /// `PAR(t_b)` for every antenna.
    pub par: Vec<T>,
    /// `‖T‖_F² / ‖T_ls‖_F²`.
    pub pinc: T,
    /// The solver's own objective.
    pub objective: T,
    /// Largest relative `‖H_w·x_w − s_w‖` over used tones.
    pub evm_residual: T,
    /// Energy on unused tones; exactly zero for every iterate.
    pub oob_energy: T,
    /// `|‖T‖_F − ‖X‖_F| / ‖X‖_F`.
    pub parseval_mismatch: T,
}

#[derive(Clone, Debug)]
pub struct JppResult<T: Real> {
    pub t: TimeDomainGrid<T>,
    pub x: FreqDomainGrid<T>,
    pub trace: Vec<JppRecord<T>>,
    /// Gradient step (ℓp−ℓq) or ℓ∞ weight (DRS) actually used.
    pub step: T,
}

/// Column-wise ℓp−ℓq gradient of `Σ_b f(t_b)` with `N = W`.
pub fn jpp_gradient<T: Real>(t: &TimeDomainGrid<T>, p: T, q: T) -> TimeDomainGrid<T> {
    let mut out = TimeDomainGrid::zeros(t.num_samples(), t.antennas());
    for b in 0..t.antennas() {
        grad_lplq_into(t.antenna(b), p, q, out.antenna_mut(b));
    }
    out
}

/// Per-tone projection onto `{H_w·x_w = s_w}` on used tones; unused tones
/// are set to zero.
pub fn jpp_project<T: Real>(
    x: &FreqDomainGrid<T>,
    s: &SymbolGrid<T>,
    chan: &ChannelRealization<T>,
    plan: &TonePlan,
) -> Result<FreqDomainGrid<T>> {
    let constraints = ToneConstraints::new(s, chan, plan)?;
    check_grid(x, &constraints)?;
    let mut out = x.clone();
    constraints.project(&mut out);
    Ok(out)
}

fn check_grid<T: Real>(x: &FreqDomainGrid<T>, c: &ToneConstraints<T>) -> Result<()> {
    if x.antennas() != c.antennas() || x.num_tones() != c.plan().num_tones() {
        return Err(Error::Dimension(format!(
            "grid is {}x{}, constraints expect {}x{}",
            x.antennas(),
            x.num_tones(),
            c.antennas(),
            c.plan().num_tones()
        )));
    }
    Ok(())
}

/// Sum of per-antenna ℓp−ℓq objectives.
pub fn jpp_objective<T: Real>(t: &TimeDomainGrid<T>, p: T, q: T) -> T {
    (0..t.antennas())
        .map(|b| objective_f(t.antenna(b), p, q).unwrap_or_else(|_| T::nan()))
        .sum()
}

fn linf_objective<T: Real>(t: &TimeDomainGrid<T>) -> T {
    (0..t.antennas()).map(|b| norm_inf(t.antenna(b))).sum()
}

fn solver_objective<T: Real>(solver: &JppSolver<T>, t: &TimeDomainGrid<T>) -> T {
    match *solver {
        JppSolver::Lplq { p, q } => jpp_objective(t, p, q),
        JppSolver::Linf => linf_objective(t),
    }
}

/// Default ℓ∞ weight: RMS of the symbol entries on used tones, the
/// per-tone analog of the `‖y‖₂/√M` default of
/// [`crate::solvers::solve_drs_linf`] (1 for unit-energy constellations).
pub fn default_linf_weight<T: Real>(constraints: &ToneConstraints<T>) -> T {
    let rms = constraints.symbol_rms();
    if rms.is_zero() {
        T::one()
    } else {
        rms
    }
}

/// Metrics of the iterate `(T, X)` against the constraints.
pub fn evaluate_iterate<T: Real>(
    iteration: usize,
    t: &TimeDomainGrid<T>,
    x: &FreqDomainGrid<T>,
    constraints: &ToneConstraints<T>,
    ls_power: T,
    objective: T,
) -> Result<JppRecord<T>> {
    let par = (0..t.antennas())
        .map(|b| par(t.antenna(b)))
        .collect::<Result<Vec<_>>>()?;
    let t_norm = t.frobenius_norm_sq().sqrt();
    let x_norm = x.frobenius_norm_sq().sqrt();
    Ok(JppRecord {
        iteration,
        par,
        pinc: t.frobenius_norm_sq() / ls_power,
        objective,
        evm_residual: constraints.max_evm_residual(x),
        oob_energy: x.oob_energy(constraints.plan()),
        parseval_mismatch: (t_norm - x_norm).abs() / x_norm,
    })
}

/// Re-evaluates a finished result from scratch against `T_ls`.
pub fn evaluate_jpp<T: Real>(
    result: &JppResult<T>,
    s: &SymbolGrid<T>,
    chan: &ChannelRealization<T>,
    plan: &TonePlan,
    t_ls: &TimeDomainGrid<T>,
    solver: &JppSolver<T>,
) -> Result<JppRecord<T>> {
    let constraints = ToneConstraints::new(s, chan, plan)?;
    check_grid(&result.x, &constraints)?;
    let ls_power = t_ls.frobenius_norm_sq();
    if ls_power.is_zero() {
        return Err(Error::domain("LS reference grid is zero"));
    }
    let iteration = result.trace.last().map_or(0, |r| r.iteration);
    evaluate_iterate(
        iteration,
        &result.t,
        &result.x,
        &constraints,
        ls_power,
        solver_objective(solver, &result.t),
    )
}

struct Run<'a, T: Real> {
    constraints: &'a ToneConstraints<T>,
    transform: OfdmTransform<T>,
    cfg: &'a JppConfig<T>,
    ls_power: T,
    trace: Vec<JppRecord<T>>,
}

impl<T: Real> Run<'_, T> {
    /// Time-domain projection `Fᴴ·Π(F·t)`, returning the projected
    /// frequency grid alongside.
    fn project_time(&self, t: &mut TimeDomainGrid<T>) -> FreqDomainGrid<T> {
        self.transform.time_to_freq_in_place(t.rows_mut());
        let mut x = FreqDomainGrid::from_matrix(std::mem::replace(
            t.rows_mut(),
            CMatrix::zeros(0, 0),
        ));
        self.constraints.project(&mut x);
        let mut rows = x.matrix().clone();
        self.transform.freq_to_time_in_place(&mut rows);
        *t = TimeDomainGrid::from_antenna_rows(rows);
        x
    }

    fn record(&mut self, k: usize, t: &TimeDomainGrid<T>, x: &FreqDomainGrid<T>) -> Result<()> {
        if !self.cfg.record_trace {
            return Ok(());
        }
        let objective = solver_objective(&self.cfg.solver, t);
        let rec = evaluate_iterate(k, t, x, self.constraints, self.ls_power, objective)?;
        if !(rec.evm_residual <= self.cfg.feas_tol) {
            return Err(Error::Infeasible {
                iteration: k,
                residual: rec.evm_residual.as_f64(),
                tol: self.cfg.feas_tol.as_f64(),
            });
        }
        self.trace.push(rec);
        Ok(())
    }

    fn gradient_step(&self, t: &TimeDomainGrid<T>, grad: &TimeDomainGrid<T>, tau: T) -> TimeDomainGrid<T> {
        let mut next = t.clone();
        for (v, g) in next.rows_mut().as_mut_slice().iter_mut().zip(grad.rows().as_slice()) {
            *v -= g.scale(tau);
        }
        next
    }

    /// Largest `τ ∈ {1, 1/2, …, 2⁻⁴⁰}` whose first step strictly decreases
    /// the summed objective, shared by all antennas.
    fn probe(&self, t: &TimeDomainGrid<T>, p: T, q: T) -> (T, bool) {
        let f0 = jpp_objective(t, p, q);
        let noise = summed_noise(t, p, q);
        let grad = jpp_gradient(t, p, q);
        let mut tau = T::one();
        for _ in 0..=PROBE_HALVINGS {
            let mut cand = self.gradient_step(t, &grad, tau);
            self.project_time(&mut cand);
            if jpp_objective(&cand, p, q) < f0 - noise {
                return (tau, false);
            }
            tau = tau / T::lit(2.0);
        }
        let tau = T::lit(2.0).powi(-PROBE_HALVINGS);
        log::warn!("JPP step-size probe found no decrease; using τ = {tau}");
        (tau, true)
    }

    /// `k_max` projected gradient iterates from the LS point with fixed
    /// `tau`; `None` when `guard` is set and the objective increased.
    fn lplq_run(
        &mut self,
        start: &(TimeDomainGrid<T>, FreqDomainGrid<T>),
        p: T,
        q: T,
        tau: T,
        guard: bool,
    ) -> Result<Option<(TimeDomainGrid<T>, FreqDomainGrid<T>)>> {
        self.trace.clear();
        let (mut t, mut x) = start.clone();
        self.record(1, &t, &x)?;
        let mut objective = jpp_objective(&t, p, q);
        for k in 2..=self.cfg.k_max {
            let grad = jpp_gradient(&t, p, q);
            t = self.gradient_step(&t, &grad, tau);
            x = self.project_time(&mut t);
            if guard {
                let next = jpp_objective(&t, p, q);
                if !(next <= objective + summed_noise(&t, p, q)) {
                    return Ok(None);
                }
                objective = next;
            }
            self.record(k, &t, &x)?;
        }
        Ok(Some((t, x)))
    }
}

/// Sum of the per-antenna [`objective_noise`] levels.
fn summed_noise<T: Real>(t: &TimeDomainGrid<T>, p: T, q: T) -> T {
    (0..t.antennas()).map(|b| objective_noise(t.antenna(b), p, q)).sum()
}

/// Runs `cfg.k_max` JPP iterations starting from the LS precoder.
pub fn solve_jpp<T: Real>(
    s: &SymbolGrid<T>,
    chan: &ChannelRealization<T>,
    plan: &TonePlan,
    cfg: &JppConfig<T>,
) -> Result<JppResult<T>> {
    cfg.validate()?;
    let constraints = ToneConstraints::new(s, chan, plan)?;
    solve_jpp_with(&constraints, cfg)
}

/// [`solve_jpp`] with prebuilt per-tone constraints.
pub fn solve_jpp_with<T: Real>(
    constraints: &ToneConstraints<T>,
    cfg: &JppConfig<T>,
) -> Result<JppResult<T>> {
    cfg.validate()?;
    let transform = OfdmTransform::new(constraints.plan().num_tones());
    let mut x = constraints.ls_solution();
    let mut t = transform.freq_to_time(&x);
    let ls_power = t.frobenius_norm_sq();
    if ls_power.is_zero() {
        return Err(Error::domain("LS precoder output is zero"));
    }
    let mut run = Run {
        constraints,
        transform,
        cfg,
        ls_power,
        trace: Vec::with_capacity(cfg.k_max),
    };
    let step = match cfg.solver {
        JppSolver::Lplq { p, q } => {
            let (mut tau, near_stationary) = match cfg.tau {
                StepSize::Fixed(tau) => (tau, false),
                StepSize::Auto if cfg.k_max > 1 => run.probe(&t, p, q),
                StepSize::Auto => (T::one(), false),
            };
            let floor = T::lit(2.0).powi(-PROBE_HALVINGS);
            let start = (t, x);
            loop {
                let guard = matches!(cfg.tau, StepSize::Auto) && !near_stationary && tau > floor;
                if let Some(end) = run.lplq_run(&start, p, q, tau, guard)? {
                    (t, x) = end;
                    break;
                }
                log::debug!("JPP objective increased with τ = {tau}; restarting with τ/2");
                tau = tau / T::lit(2.0);
            }
            tau
        }
        JppSolver::Linf => {
            run.record(1, &t, &x)?;
            let gamma = cfg.drs_weight.unwrap_or_else(|| default_linf_weight(constraints));
            let (w, b) = (t.num_samples(), t.antennas());
            let mut z = TimeDomainGrid::zeros(w, b);
            let mut reflected = vec![C::zero(); w];
            let mut prox = vec![C::zero(); w];
            let mut mags = Vec::with_capacity(w);
            for k in 2..=cfg.k_max {
                for ant in 0..b {
                    for ((r, xi), zi) in reflected.iter_mut().zip(t.antenna(ant)).zip(z.antenna(ant)) {
                        *r = xi.scale(T::lit(2.0)) - zi;
                    }
                    prox_linf_into(&reflected, gamma, &mut prox, &mut mags);
                    for ((zi, pi), xi) in z.antenna_mut(ant).iter_mut().zip(&prox).zip(t.antenna(ant)) {
                        *zi += pi - xi;
                    }
                }
                t = z.clone();
                x = run.project_time(&mut t);
                run.record(k, &t, &x)?;
            }
            gamma
        }
    };
    Ok(JppResult {
        t,
        x,
        trace: run.trace,
        step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{gen_channel, make_tone_plan, ChannelDims, Constellation, PlanProfile};
    use crate::rng::{stream_rng, Stream};

    fn small_case(seed: u64) -> (SymbolGrid<f64>, ChannelRealization<f64>, TonePlan) {
        let plan = make_tone_plan(32, &PlanProfile::Centered(16)).unwrap();
        let chan = gen_channel(&ChannelDims::new(6, 2, 32, 2), seed).unwrap();
        let s = SymbolGrid::random(2, &plan, Constellation::Qam16, &mut stream_rng(seed, 0, Stream::Symbols));
        (s, chan, plan)
    }

    #[test]
    fn projection_of_zero_is_ls_precoder() {
        let (s, chan, plan) = small_case(1);
        let zero = FreqDomainGrid::zeros(6, 32);
        let x = jpp_project(&zero, &s, &chan, &plan).unwrap();
        let ls = crate::ofdm::ls_precode(&s, &chan, &plan).unwrap();
        assert_eq!(x, ls);
        let again = jpp_project(&x, &s, &chan, &plan).unwrap();
        for (a, b) in again.matrix().as_slice().iter().zip(x.matrix().as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gradient_is_separable() {
        let mut t = TimeDomainGrid::<f64>::zeros(8, 3);
        t.antenna_mut(1)
            .iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v = C::new(i as f64 - 3.0, 0.5));
        let g = jpp_gradient(&t, 4.0, 2.0);
        assert!(g.antenna(0).iter().all(|v| v.is_zero()));
        assert!(g.antenna(2).iter().all(|v| v.is_zero()));
        let single = crate::solvers::grad_lplq(t.antenna(1), 4.0, 2.0);
        assert_eq!(g.antenna(1), &single[..]);
    }

    #[test]
    fn constant_envelope_columns_are_stationary() {
        let w = 16;
        let rows = CMatrix::from_fn(2, w, |b, n| {
            C::from_polar(1.0 + b as f64, std::f64::consts::TAU * ((b + 1) * n) as f64 / w as f64)
        });
        let g = jpp_gradient(&TimeDomainGrid::from_antenna_rows(rows), 3.0, 2.0);
        assert!(g.frobenius_norm_sq().sqrt() < 1e-12);
    }

    #[test]
    fn first_iterate_is_ls_and_constraints_hold() {
        let (s, chan, plan) = small_case(4);
        for solver in [JppSolver::Lplq { p: 4.0, q: 2.0 }, JppSolver::Linf] {
            let mut cfg = JppConfig::new(solver);
            cfg.k_max = 6;
            let res = solve_jpp(&s, &chan, &plan, &cfg).unwrap();
            assert_eq!(res.trace.len(), 6);
            assert_eq!(res.trace[0].pinc, 1.0);
            for r in &res.trace {
                assert!(r.evm_residual < 1e-10);
                assert_eq!(r.oob_energy, 0.0);
                assert!(r.parseval_mismatch < 1e-12);
            }
            let t_ls = crate::ofdm::freq_to_time(&crate::ofdm::ls_precode(&s, &chan, &plan).unwrap());
            let rec = evaluate_jpp(&res, &s, &chan, &plan, &t_ls, &solver).unwrap();
            assert!((rec.pinc - res.trace[5].pinc).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let (s, chan, plan) = small_case(2);
        let mut cfg = JppConfig::new(JppSolver::Lplq { p: 2.0, q: 2.0 });
        assert!(solve_jpp(&s, &chan, &plan, &cfg).is_err());
        cfg.solver = JppSolver::Linf;
        cfg.k_max = 0;
        assert!(solve_jpp(&s, &chan, &plan, &cfg).is_err());
    }
}
