use num_traits::Zero;

use super::{LinearSystem, Recorder, Solution, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{norm2, norm_inf};
use crate::scalar::{count, Real, C};

/// Soft-threshold level `θ ≥ 0` with `Σ max(|v_i| − θ, 0) = radius`, or 0
/// when `‖v‖₁ ≤ radius`. Sort-and-scan over the magnitudes.
fn l1_threshold<T: Real>(v: &[C<T>], radius: T, mags: &mut Vec<T>) -> T {
    mags.clear();
    mags.extend(v.iter().map(|x| x.norm()));
    let total: T = mags.iter().copied().sum();
    if total <= radius {
        return T::zero();
    }
    mags.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite magnitudes"));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (j, &u) in mags.iter().enumerate() {
        cumsum = cumsum + u;
        let candidate = (cumsum - radius) / count::<T>(j + 1);
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    theta.max(T::zero())
}

fn shrink_into<T: Real>(v: &[C<T>], theta: T, out: &mut [C<T>]) {
    for (o, x) in out.iter_mut().zip(v) {
        let m = x.norm();
        *o = if m > theta { x.scale((m - theta) / m) } else { C::zero() };
    }
}

/// Euclidean projection onto the complex ℓ1 ball `{u : ‖u‖₁ ≤ radius}`.
/// Phases are kept; magnitudes are soft-thresholded.
pub fn project_l1_ball<T: Real>(v: &[C<T>], radius: T) -> Result<Vec<C<T>>> {
    if !(radius > T::zero()) {
        return Err(Error::domain(format!("ℓ1-ball radius {radius} must be positive")));
    }
    let theta = l1_threshold(v, radius, &mut Vec::with_capacity(v.len()));
    if theta.is_zero() {
        return Ok(v.to_vec());
    }
    let mut out = vec![C::zero(); v.len()];
    shrink_into(v, theta, &mut out);
    Ok(out)
}

/// `argmin_x τ‖x‖∞ + ½‖x − z‖₂²`, via `z − Π_{‖·‖₁ ≤ τ}(z)`.
pub fn prox_linf<T: Real>(z: &[C<T>], tau: T) -> Result<Vec<C<T>>> {
    if !(tau > T::zero()) {
        return Err(Error::domain(format!("prox weight {tau} must be positive")));
    }
    let mut out = vec![C::zero(); z.len()];
    prox_linf_into(z, tau, &mut out, &mut Vec::with_capacity(z.len()));
    Ok(out)
}

/// Allocation-free [`prox_linf`] for positive `tau`: clips magnitudes at
/// the level `max(|z_i| − θ, 0)` leaves behind.
pub(crate) fn prox_linf_into<T: Real>(z: &[C<T>], tau: T, out: &mut [C<T>], mags: &mut Vec<T>) {
    let theta = l1_threshold(z, tau, mags);
    if theta.is_zero() {
        out.iter_mut().for_each(|o| *o = C::zero());
        return;
    }
    for (o, x) in out.iter_mut().zip(z) {
        let m = x.norm();
        *o = if m > theta { x.scale(theta / m) } else { *x };
    }
}

/// Douglas-Rachford splitting for `min ‖x‖∞` subject to `A·x = y`.
///
/// Iterates `x = Π(z)`, `z ← z + prox_{γ‖·‖∞}(2x − z) − x` from `z = 0`,
/// so iterate 1 is the LS solution and every reported iterate is feasible.
/// `p` and `q` of `cfg` only feed the reported metrics.
pub fn solve_drs_linf<T: Real>(sys: &LinearSystem<T>, cfg: &SolverConfig<T>) -> Result<Solution<T>> {
    cfg.validate()?;
    let n = sys.n();
    let x_ls = sys.solve_ls();
    let gamma = match cfg.drs_weight {
        Some(w) => w,
        None => {
            let w = norm2(sys.y()) / count::<T>(sys.m()).sqrt();
            // y = 0 pins the solution at 0; any positive weight works
            if w.is_zero() {
                T::one()
            } else {
                w
            }
        }
    };

    let mut x = x_ls.clone();
    let mut z = vec![C::zero(); n];
    let mut reflected = vec![C::zero(); n];
    let mut prox = vec![C::zero(); n];
    let mut mags = Vec::with_capacity(n);
    let mut scratch = Vec::with_capacity(sys.m());

    let mut rec = Recorder::new(sys, cfg, &x_ls);
    rec.record(1, &x, norm_inf(&x))?;
    let mut k = 1;
    while k < cfg.k_max {
        for ((r, xi), zi) in reflected.iter_mut().zip(&x).zip(&z) {
            *r = xi.scale(T::lit(2.0)) - zi;
        }
        prox_linf_into(&reflected, gamma, &mut prox, &mut mags);
        for ((zi, pi), xi) in z.iter_mut().zip(&prox).zip(&x) {
            *zi += pi - xi;
        }
        x.copy_from_slice(&z);
        sys.project_in_place(&mut x, &mut scratch);
        k += 1;
        rec.record(k, &x, norm_inf(&x))?;
    }
    let trace = rec.finish(k, &x)?;
    Ok(Solution {
        x,
        trace,
        iterations: k,
        step: gamma,
        near_stationary: false,
        restarts: 0,
    })
}
