//! Dense complex matrices, vector norms, and the Hermitian Cholesky
//! factorization used by every affine projection.

use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{count, Real, C};

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real row-major data.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Self::from_fn(r, c, |i, j| C::new(T::lit(rows[i][j]), T::zero())))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C<T>] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[C<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [C<T>] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[C<T>]) {
        assert_eq!(values.len(), self.rows, "column length");
        for (r, v) in values.iter().enumerate() {
            self[(r, c)] = *v;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.data {
            *v = v.scale(s);
        }
    }

    pub fn frobenius_norm_sq(&self) -> T {
        norm_sq(&self.data)
    }

    pub fn frobenius_norm(&self) -> T {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `out = self · x`.
    pub fn mul_vec_into(&self, x: &[C<T>], out: &mut [C<T>]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot_unconj(self.row(r), x);
        }
    }

    pub fn mul_vec(&self, x: &[C<T>]) -> Vec<C<T>> {
        let mut out = vec![C::zero(); self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `out = selfᴴ · w`.
    pub fn adjoint_mul_vec_into(&self, w: &[C<T>], out: &mut [C<T>]) {
        debug_assert_eq!(w.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = C::zero());
        for (r, wr) in w.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a.conj() * wr;
            }
        }
    }

    pub fn adjoint_mul_vec(&self, w: &[C<T>]) -> Vec<C<T>> {
        let mut out = vec![C::zero(); self.cols];
        self.adjoint_mul_vec_into(w, &mut out);
        out
    }

    /// Gram matrix `self · selfᴴ`.
    pub fn gram(&self) -> Self {
        let m = self.rows;
        let mut g = Self::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = dot_conj(self.row(j), self.row(i));
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for (o, b) in out.row_mut(i).iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<T> {
        &mut self.data[r * self.cols + c]
    }
}

/// `Σ a_i b_i` without conjugation.
#[inline]
pub fn dot_unconj<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(C::zero(), |acc, (x, y)| acc + x * y)
}

/// `Σ conj(a_i) b_i`.
#[inline]
pub fn dot_conj<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(C::zero(), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm_sq<T: Real>(x: &[C<T>]) -> T {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub fn norm2<T: Real>(x: &[C<T>]) -> T {
    norm_sq(x).sqrt()
}

pub fn norm_inf<T: Real>(x: &[C<T>]) -> T {
    x.iter().map(|v| v.norm()).fold(T::zero(), T::max)
}

pub fn min_abs<T: Real>(x: &[C<T>]) -> T {
    x.iter().map(|v| v.norm()).fold(T::infinity(), T::min)
}

/// ℓp-norm for `p ≥ 1`, including `p = ∞`. Scaled by the peak to avoid
/// overflow for large `p`.
pub fn norm_p<T: Real>(x: &[C<T>], p: T) -> T {
    let peak = norm_inf(x);
    if p.is_infinite() || peak.is_zero() {
        return peak;
    }
    if p == T::one() {
        return x.iter().map(|v| v.norm()).sum();
    }
    if p == T::lit(2.0) {
        return norm2(x);
    }
    let s: T = match integer_order(p) {
        Some(k) if k % 2 == 0 => {
            let peak_sq = peak * peak;
            x.iter().map(|v| (v.norm_sqr() / peak_sq).powi(k / 2)).sum()
        }
        Some(k) => x.iter().map(|v| (v.norm() / peak).powi(k)).sum(),
        None => x.iter().map(|v| (v.norm() / peak).powf(p)).sum(),
    };
    peak * s.powf(T::one() / p)
}

/// `Some(k)` when `p` is a small positive integer.
#[inline]
pub(crate) fn integer_order<T: Real>(p: T) -> Option<i32> {
    if p.fract().is_zero() && p > T::zero() && p <= T::lit(64.0) {
        p.to_i32()
    } else {
        None
    }
}

/// Cholesky factor `L` of a Hermitian positive definite matrix, `G = L·Lᴴ`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    n: usize,
    // lower triangle, row-major
    l: Vec<C<T>>,
    cond: T,
}

impl<T: Real> Cholesky<T> {
    /// Factors `g`. Fails with [`Error::IllConditioned`] if `g` is not
    /// numerically positive definite or its estimated 2-norm condition number
    /// exceeds `cond_limit`.
    pub fn factor(g: &CMatrix<T>, cond_limit: T) -> Result<Self> {
        let n = g.rows();
        if g.cols() != n {
            return Err(Error::Dimension(format!("{}x{} Gram matrix", n, g.cols())));
        }
        let ill = |cond: T| Error::IllConditioned {
            cond: cond.as_f64(),
            limit: cond_limit.as_f64(),
        };
        let max_diag = (0..n).map(|i| g[(i, i)].re).fold(T::zero(), T::max);
        if n == 0 || !(max_diag > T::zero()) || !g.is_finite() {
            return Err(ill(T::infinity()));
        }
        let pivot_floor = max_diag * T::epsilon() * count::<T>(n);
        let mut l = vec![C::zero(); n * n];
        for j in 0..n {
            let mut d = g[(j, j)].re;
            for k in 0..j {
                d = d - l[j * n + k].norm_sqr();
            }
            if !(d > pivot_floor) {
                return Err(ill(T::infinity()));
            }
            let djj = d.sqrt();
            l[j * n + j] = C::new(djj, T::zero());
            for i in (j + 1)..n {
                let mut s = g[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s.unscale(djj);
            }
        }
        let mut chol = Self {
            n,
            l,
            cond: T::one(),
        };
        chol.cond = chol.estimate_condition();
        if !(chol.cond <= cond_limit) {
            return Err(ill(chol.cond));
        }
        Ok(chol)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Estimated 2-norm condition number of the factored matrix.
    #[inline]
    pub fn condition(&self) -> T {
        self.cond
    }

    /// Solves `G·x = b` in place.
    pub fn solve_in_place(&self, b: &mut [C<T>]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        // L·z = b
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s = b[i] - dot_unconj(row, &b[..i]);
            b[i] = s.unscale(self.l[i * n + i].re);
        }
        // Lᴴ·x = z
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i].conj() * b[k];
            }
            b[i] = s.unscale(self.l[i * n + i].re);
        }
    }

    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// `G·v = L·(Lᴴ·v)`.
    fn apply(&self, v: &[C<T>]) -> Vec<C<T>> {
        let n = self.n;
        let mut w = vec![C::zero(); n];
        for (i, wi) in w.iter_mut().enumerate() {
            for k in i..n {
                *wi += self.l[k * n + i].conj() * v[k];
            }
        }
        let mut out = vec![C::zero(); n];
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot_unconj(&self.l[i * n..=i * n + i], &w[..=i]);
        }
        out
    }

    /// Power iteration on `G` and on `G⁻¹` from a fixed start vector.
    fn estimate_condition(&self) -> T {
        const STEPS: usize = 40;
        let n = self.n;
        if n == 1 {
            return T::one();
        }
        let start: Vec<C<T>> = (0..n)
            .map(|i| C::new(T::one(), T::lit(0.37) * count::<T>(i % 7)))
            .collect();
        let normalize = |v: &mut Vec<C<T>>| {
            let s = norm2(v);
            v.iter_mut().for_each(|x| *x = x.unscale(s));
            s
        };
        let mut v = start.clone();
        normalize(&mut v);
        let mut lmax = T::zero();
        for _ in 0..STEPS {
            v = self.apply(&v);
            lmax = normalize(&mut v);
        }
        let mut v = start;
        normalize(&mut v);
        let mut inv_lmin = T::zero();
        for _ in 0..STEPS {
            self.solve_in_place(&mut v);
            inv_lmin = normalize(&mut v);
        }
        lmax * inv_lmin
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    #[test]
    fn norms_of_simple_vectors() {
        let x = [c(3.0, 4.0), c(0.0, 0.0), c(-1.0, 0.0)];
        assert_eq!(norm_inf(&x), 5.0);
        assert_eq!(norm_sq(&x), 26.0);
        assert!((norm_p(&x, 1.0) - 6.0).abs() < 1e-15);
        let p4 = (625.0f64 + 1.0).powf(0.25);
        assert!((norm_p(&x, 4.0) - p4).abs() < 1e-12);
        assert_eq!(norm_p(&x, f64::INFINITY), 5.0);
    }

    #[test]
    fn gram_and_cholesky_solve() {
        let a = CMatrix::from_fn(2, 3, |r, k| c((r + 2 * k) as f64 + 1.0, r as f64 - k as f64));
        let g = a.gram();
        let chol = Cholesky::factor(&g, 1e12).unwrap();
        let b = vec![c(1.0, -2.0), c(0.5, 3.0)];
        let x = chol.solve(&b);
        let back = g.mul_vec(&x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12);
        }
        assert!(chol.condition() >= 1.0);
    }

    #[test]
    fn condition_estimate_of_diagonal() {
        let mut g = CMatrix::<f64>::identity(3);
        g[(0, 0)] = c(100.0, 0.0);
        g[(2, 2)] = c(0.5, 0.0);
        let chol = Cholesky::factor(&g, 1e12).unwrap();
        assert!((chol.condition() - 200.0).abs() < 1e-6);
    }

    #[test]
    fn singular_gram_is_rejected() {
        let a = CMatrix::<f64>::from_real_rows(&[&[1.0, 1.0], &[2.0, 2.0]]).unwrap();
        assert!(matches!(
            Cholesky::factor(&a.gram(), 1e12),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn adjoint_matches_conj_transpose() {
        let a = CMatrix::from_fn(3, 2, |r, k| c(r as f64 - 0.5 * k as f64, (r * k) as f64 + 0.25));
        let w = vec![c(1.0, 1.0), c(-2.0, 0.5), c(0.0, 3.0)];
        let lhs = a.adjoint_mul_vec(&w);
        let rhs = a.conj_transpose().mul_vec(&w);
        for (u, v) in lhs.iter().zip(&rhs) {
            assert!((u - v).norm() < 1e-14);
        }
    }
}
