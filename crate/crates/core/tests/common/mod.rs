//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use nalgebra::{DMatrix, DVector};
use parqo::linalg::CMatrix;
use parqo::rng::{complex_normal_matrix, complex_normal_vec, stream_rng, Stream};
use parqo::{Complex64, LinearSystem};

pub fn random_system(seed: u64, trial: u64, m: usize, n: usize) -> LinearSystem {
    let mut rng = stream_rng(seed, trial, Stream::System);
    let a = complex_normal_matrix(&mut rng, m, n, 1.0);
    let y = complex_normal_vec(&mut rng, m, 1.0);
    LinearSystem::new(a, y).expect("Gaussian systems are well conditioned")
}

pub fn to_nalgebra(a: &CMatrix<f64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.rows(), a.cols(), |r, c| a.row(r)[c])
}

pub fn rel_err(x: &[Complex64], reference: &[Complex64]) -> f64 {
    let diff: f64 = x.iter().zip(reference).map(|(a, b)| (a - b).norm_sqr()).sum();
    let base: f64 = reference.iter().map(|v| v.norm_sqr()).sum();
    (diff / base).sqrt()
}

/// Minimum-norm solution `A⁺·y` from a thin SVD.
pub fn pinv_solution(a: &CMatrix<f64>, y: &[Complex64]) -> Vec<Complex64> {
    let svd = to_nalgebra(a).svd(true, true);
    let x = svd
        .solve(&DVector::from_column_slice(y), 1e-12)
        .expect("SVD with both factors");
    x.iter().copied().collect()
}

/// `min ‖x‖∞ s.t. A·x = y`; returns `(‖x‖∞, x)`.
pub fn linf_oracle(a: &CMatrix<f64>, y: &[Complex64]) -> (f64, Vec<Complex64>) {
    grouped_linf_oracle(a, y, &vec![0; a.cols()])
}

/// `min Σ_g max_{i∈g} |x_i| s.t. A·x = y` as a second-order cone program
/// over `(t_g, Re x, Im x)`; `group[i]` names the group of entry `i`.
/// Returns the optimal value and `x`.
pub fn grouped_linf_oracle(a: &CMatrix<f64>, y: &[Complex64], group: &[usize]) -> (f64, Vec<Complex64>) {
    let (m, n) = (a.rows(), a.cols());
    let g = group.iter().max().map_or(0, |v| v + 1);
    let vars = g + 2 * n;
    let (mut ri, mut ci, mut v) = (Vec::new(), Vec::new(), Vec::new());
    let mut push = |r: usize, c: usize, val: f64| {
        if val != 0.0 {
            ri.push(r);
            ci.push(c);
            v.push(val);
        }
    };
    // Re(A·x) = Ar·xr − Ai·xi, Im(A·x) = Ai·xr + Ar·xi.
    for r in 0..m {
        for (c, e) in a.row(r).iter().enumerate() {
            push(r, g + c, e.re);
            push(r, g + n + c, -e.im);
            push(m + r, g + c, e.im);
            push(m + r, g + n + c, e.re);
        }
    }
    // Cone rows: s = (t_g, Re x_i, Im x_i) = 0 − (−I)·(…).
    for i in 0..n {
        let base = 2 * m + 3 * i;
        push(base, group[i], -1.0);
        push(base + 1, g + i, -1.0);
        push(base + 2, g + n + i, -1.0);
    }
    let rows = 2 * m + 3 * n;
    let a_csc = CscMatrix::new_from_triplets(rows, vars, ri, ci, v);
    let mut b = vec![0.0; rows];
    for (r, yv) in y.iter().enumerate() {
        b[r] = yv.re;
        b[m + r] = yv.im;
    }
    let mut cones = vec![SupportedConeT::ZeroConeT(2 * m)];
    cones.extend((0..n).map(|_| SupportedConeT::SecondOrderConeT(3)));
    let mut cost = vec![0.0; vars];
    cost[..g].fill(1.0);
    let settings = DefaultSettings {
        verbose: false,
        tol_gap_abs: 1e-11,
        tol_gap_rel: 1e-11,
        tol_feas: 1e-11,
        ..DefaultSettings::default()
    };
    let p = CscMatrix::zeros((vars, vars));
    let mut solver = DefaultSolver::new(&p, &cost, &a_csc, &b, &cones, settings).expect("valid SOCP");
    solver.solve();
    let status = solver.solution.status;
    assert!(
        matches!(status, SolverStatus::Solved | SolverStatus::AlmostSolved),
        "SOCP oracle status {status:?}"
    );
    let s = &solver.solution.x;
    let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(s[g + i], s[g + n + i])).collect();
    let mut peaks = vec![0.0f64; g];
    for (v, &k) in x.iter().zip(group) {
        peaks[k] = peaks[k].max(v.norm());
    }
    (peaks.iter().sum(), x)
}

/// Projection onto `{u : ‖u‖₁ ≤ radius}` by bisection on the shrinkage
/// threshold.
pub fn l1_projection_bisect(v: &[Complex64], radius: f64) -> Vec<Complex64> {
    let mass = |theta: f64| v.iter().map(|x| (x.norm() - theta).max(0.0)).sum::<f64>();
    if mass(0.0) <= radius {
        return v.to_vec();
    }
    let (mut lo, mut hi) = (0.0, v.iter().map(|x| x.norm()).fold(0.0, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    v.iter()
        .map(|x| {
            let r = x.norm();
            if r > theta {
                x * ((r - theta) / r)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}
