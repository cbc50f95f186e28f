use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{norm2, CMatrix, Cholesky};
use crate::scalar::{Real, C};

/// Upper bound on cond(A·Aᴴ) accepted at construction.
pub fn condition_limit<T: Real>() -> T {
    T::lit(1e12).min(T::lit(1e-2) / T::epsilon())
}

/// The constraint set `{x : A·x = y}` with a cached Cholesky factor of `A·Aᴴ`.
///
/// Immutable after construction; share freely across solver runs.
#[derive(Clone, Debug)]
pub struct LinearSystem<T> {
    a: CMatrix<T>,
    y: Vec<C<T>>,
    gram: Cholesky<T>,
}

impl<T: Real> LinearSystem<T> {
    /// Requires `M ≤ N`, `len(y) = M`, finite entries and a well-conditioned
    /// `A·Aᴴ`.
    pub fn new(a: CMatrix<T>, y: Vec<C<T>>) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if m == 0 || n == 0 {
            return Err(Error::Dimension("empty system matrix".into()));
        }
        if m > n {
            return Err(Error::Dimension(format!(
                "overdetermined system: M={m} > N={n}"
            )));
        }
        if y.len() != m {
            return Err(Error::Dimension(format!("y has length {}, expected {m}", y.len())));
        }
        if !a.is_finite() || y.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::domain("non-finite entries in system"));
        }
        let gram = Cholesky::factor(&a.gram(), condition_limit())?;
        Ok(Self { a, y, gram })
    }

    /// Same matrix, new right-hand side; reuses the factorization.
    pub fn with_rhs(&self, y: Vec<C<T>>) -> Result<Self> {
        if y.len() != self.m() {
            return Err(Error::Dimension(format!(
                "y has length {}, expected {}",
                y.len(),
                self.m()
            )));
        }
        Ok(Self {
            a: self.a.clone(),
            y,
            gram: self.gram.clone(),
        })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    #[inline]
    pub fn a(&self) -> &CMatrix<T> {
        &self.a
    }

    #[inline]
    pub fn y(&self) -> &[C<T>] {
        &self.y
    }

    pub fn gram_condition(&self) -> T {
        self.gram.condition()
    }

    /// Euclidean projection onto the solution set, in place:
    /// `z ← z − Aᴴ(A·Aᴴ)⁻¹(A·z − y)`. `scratch` is resized to `M`.
    pub fn project_in_place(&self, z: &mut [C<T>], scratch: &mut Vec<C<T>>) {
        debug_assert_eq!(z.len(), self.n());
        scratch.resize(self.m(), C::zero());
        self.a.mul_vec_into(z, scratch);
        for (r, y) in scratch.iter_mut().zip(&self.y) {
            *r -= y;
        }
        self.gram.solve_in_place(scratch);
        for (row, w) in scratch.iter().enumerate() {
            for (zi, a) in z.iter_mut().zip(self.a.row(row)) {
                *zi -= a.conj() * w;
            }
        }
    }

    pub fn project(&self, z: &[C<T>]) -> Vec<C<T>> {
        let mut out = z.to_vec();
        self.project_in_place(&mut out, &mut Vec::with_capacity(self.m()));
        out
    }

    /// Minimum-ℓ2-norm solution, the projection of the origin.
    pub fn solve_ls(&self) -> Vec<C<T>> {
        self.project(&vec![C::zero(); self.n()])
    }

    /// `‖A·x − y‖₂ / ‖y‖₂`, or the absolute residual when `y = 0`.
    pub fn relative_residual(&self, x: &[C<T>]) -> T {
        let mut r = self.a.mul_vec(x);
        for (ri, yi) in r.iter_mut().zip(&self.y) {
            *ri -= yi;
        }
        let scale = norm2(&self.y);
        if scale.is_zero() {
            norm2(&r)
        } else {
            norm2(&r) / scale
        }
    }
}

/// Euclidean projection of `z` onto `{x : A·x = y}`.
pub fn affine_project<T: Real>(z: &[C<T>], sys: &LinearSystem<T>) -> Vec<C<T>> {
    sys.project(z)
}

/// Least-squares (minimum-norm) solution of `A·x = y`.
pub fn solve_ls<T: Real>(sys: &LinearSystem<T>) -> Vec<C<T>> {
    sys.solve_ls()
}
