//! Figures of merit: PAR, PINC, the ℓp−ℓq surrogate PAR and objective,
//! the PAR·PINC trade-off constant, and empirical percentiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_abs, norm_inf, norm_p, norm_sq};
use crate::scalar::{count, Real, C};
use crate::solvers::LinearSystem;

/// `10·log10(v)` for power quantities.
#[inline]
pub fn db<T: Real>(v: T) -> T {
    T::lit(10.0) * v.log10()
}

fn nonzero<T: Real>(x: &[C<T>], what: &str) -> Result<T> {
    if x.is_empty() {
        return Err(Error::domain(format!("{what} is empty")));
    }
    let e = norm_sq(x);
    if e.is_zero() {
        return Err(Error::domain(format!("{what} is the zero vector")));
    }
    Ok(e)
}

/// Exponent `2/q − 2/p` of the norm-equivalence constant, with `2/∞ = 0`.
pub(crate) fn equivalence_exponent<T: Real>(p: T, q: T) -> T {
    let two = T::lit(2.0);
    let inv_p = if p.is_infinite() { T::zero() } else { two / p };
    two / q - inv_p
}

fn check_orders<T: Real>(p: T, q: T, allow_inf: bool) -> Result<()> {
    if !(q >= T::one()) || !(p > q) || p.is_nan() {
        return Err(Error::domain(format!("norm orders need 1 ≤ q < p, got p={p}, q={q}")));
    }
    if !allow_inf && p.is_infinite() {
        return Err(Error::domain("the ℓp−ℓq objective needs finite p"));
    }
    Ok(())
}

/// Peak-to-average power ratio `N·‖x‖∞² / ‖x‖₂²`, in `[1, N]`.
pub fn par<T: Real>(x: &[C<T>]) -> Result<T> {
    let energy = nonzero(x, "PAR argument")?;
    let peak = norm_inf(x);
    Ok(count::<T>(x.len()) * peak * peak / energy)
}

/// True iff all magnitudes agree up to `tol` relative to the peak.
pub fn is_min_par<T: Real>(x: &[C<T>], tol: T) -> Result<bool> {
    nonzero(x, "min-PAR argument")?;
    if tol < T::zero() {
        return Err(Error::domain("tolerance must be non-negative"));
    }
    let peak = norm_inf(x);
    Ok(peak - min_abs(x) <= tol * peak)
}

/// Power increase `‖x‖₂² / ‖x_ls‖₂²` relative to the least-squares solution.
pub fn pinc<T: Real>(x: &[C<T>], x_ls: &[C<T>]) -> Result<T> {
    let reference = nonzero(x_ls, "LS reference")?;
    Ok(norm_sq(x) / reference)
}

/// ℓp−ℓq PAR `N^(2/q−2/p)·‖x‖p² / ‖x‖q²`. `p` may be infinite.
pub fn par_pq<T: Real>(x: &[C<T>], p: T, q: T) -> Result<T> {
    nonzero(x, "PARpq argument")?;
    check_orders(p, q, true)?;
    let n = count::<T>(x.len());
    let ratio = norm_p(x, p) / norm_p(x, q);
    Ok(n.powf(equivalence_exponent(p, q)) * ratio * ratio)
}

/// ℓp−ℓq objective `f(x) = N^(2/q−2/p)·‖x‖p² − ‖x‖q²`; zero exactly on
/// equal-magnitude vectors.
pub fn objective_f<T: Real>(x: &[C<T>], p: T, q: T) -> Result<T> {
    check_orders(p, q, false)?;
    if x.is_empty() {
        return Ok(T::zero());
    }
    let n = count::<T>(x.len());
    let np = norm_p(x, p);
    let nq = norm_p(x, q);
    Ok(n.powf(equivalence_exponent(p, q)) * np * np - nq * nq)
}

/// Lower bound `c = N·‖x_inf‖∞² / ‖x_ls‖₂²` on `PAR·PINC` over the
/// solution set of `sys`, attained by the ℓ∞-minimal solution `x_inf`.
pub fn tradeoff_constant<T: Real>(
    sys: &LinearSystem<T>,
    x_inf: &[C<T>],
    x_ls: &[C<T>],
) -> Result<T> {
    if norm_sq(sys.y()).is_zero() {
        return Err(Error::domain("trade-off constant undefined for y = 0"));
    }
    if x_inf.len() != sys.n() || x_ls.len() != sys.n() {
        return Err(Error::Dimension("solution length differs from N".into()));
    }
    let reference = nonzero(x_ls, "LS reference")?;
    let peak = norm_inf(x_inf);
    Ok(count::<T>(sys.n()) * peak * peak / reference)
}

/// Snapshot of every figure of merit for one iterate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParReport<T> {
    pub par: T,
    pub par_db: T,
    pub pinc: T,
    pub pinc_db: T,
    pub par_pq: T,
    pub objective: T,
}

impl<T: Real> ParReport<T> {
    /// Metrics of `x` against the LS reference, with the ℓp−ℓq pair `(p, q)`.
    pub fn new(x: &[C<T>], x_ls: &[C<T>], p: T, q: T) -> Result<Self> {
        let par = par(x)?;
        let pinc = pinc(x, x_ls)?;
        Ok(Self {
            par,
            par_db: db(par),
            pinc,
            pinc_db: db(pinc),
            par_pq: par_pq(x, p, q)?,
            objective: objective_f(x, p, q)?,
        })
    }
}

/// Empirical distribution of a real statistic, kept sorted ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution<T> {
    sorted: Vec<T>,
}

impl<T: Real> EmpiricalDistribution<T> {
    pub fn new(samples: impl IntoIterator<Item = T>) -> Result<Self> {
        let mut sorted: Vec<T> = samples.into_iter().collect();
        if sorted.is_empty() {
            return Err(Error::domain("empty sample set"));
        }
        if sorted.iter().any(|v| v.is_nan()) {
            return Err(Error::domain("NaN sample"));
        }
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[T] {
        &self.sorted
    }

    /// Nearest-rank percentile: the sample at 1-based rank `⌈pct/100·n⌉`.
    pub fn percentile(&self, pct: T) -> Result<T> {
        if !(pct > T::zero() && pct < T::lit(100.0)) {
            return Err(Error::domain(format!("percentile {pct} outside (0, 100)")));
        }
        let n = self.sorted.len();
        let rank = (pct * count::<T>(n) / T::lit(100.0))
            .ceil()
            .to_usize()
            .unwrap_or(n)
            .clamp(1, n);
        Ok(self.sorted[rank - 1])
    }

    /// `P(Z > z)`.
    pub fn ccdf(&self, z: T) -> T {
        let at_most = self.sorted.partition_point(|v| *v <= z);
        count::<T>(self.sorted.len() - at_most) / count::<T>(self.sorted.len())
    }
}

/// Nearest-rank percentile of an unsorted sample set.
pub fn percentile<T: Real>(samples: &[T], pct: T) -> Result<T> {
    EmpiricalDistribution::new(samples.iter().copied())?.percentile(pct)
}
