//! Damped Newton iteration with Armijo backtracking and a sparse LU solve.

use std::sync::OnceLock;

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::operator::Discretization;
use super::SolverConfig;

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub converged: bool,
    pub iterations: usize,
    pub residual_max: f64,
    pub u: Vec<f64>,
    pub failure: Option<String>,
    /// Stopped because the Newton correction reached roundoff level while the
    /// residual was still above the tolerance.
    pub roundoff_limited: bool,
}

/// Relative size of a Newton correction treated as roundoff.
pub const STEP_TOL: f64 = 1e-12;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn half_sq(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

/// Solves `J x = rhs` with a sparse LU factorisation.
pub fn sparse_solve(n: usize, trip: &[(usize, usize, f64)], rhs: &[f64]) -> Option<Vec<f64>> {
    sparse_solve_cached(n, trip, rhs, &OnceLock::new())
}

/// As [`sparse_solve`], reusing the symbolic factorisation in `cache` when the
/// sparsity pattern is fixed.
pub fn sparse_solve_cached(
    n: usize,
    trip: &[(usize, usize, f64)],
    rhs: &[f64],
    cache: &OnceLock<SymbolicLu<usize>>,
) -> Option<Vec<f64>> {
    let t: Vec<Triplet<usize, usize, f64>> = trip.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &t).ok()?;
    let symbolic = match cache.get() {
        Some(s) => s.clone(),
        None => {
            let s = SymbolicLu::try_new(a.symbolic()).ok()?;
            cache.get_or_init(|| s).clone()
        }
    };
    let lu = Lu::try_new_with_symbolic(symbolic, a.as_ref()).ok()?;
    let b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Damped Newton on the discrete problem at fixed `tau`, starting from `u0`.
pub fn damped_newton(disc: &Discretization<'_>, u0: Vec<f64>, tau: f64, cfg: &SolverConfig, max_iters: usize) -> NewtonOutcome {
    let n = u0.len();
    let mut u = u0;
    let mut f = match disc.residual(&u, tau) {
        Ok(f) => f,
        Err(e) => {
            return NewtonOutcome {
                converged: false,
                iterations: 0,
                residual_max: f64::INFINITY,
                u,
                failure: Some(e.to_string()),
                roundoff_limited: false,
            }
        }
    };
    let fail = |u: Vec<f64>, it: usize, r: f64, why: String| NewtonOutcome {
        converged: false,
        iterations: it,
        residual_max: r,
        u,
        failure: Some(why),
        roundoff_limited: false,
    };
    for it in 0..=max_iters {
        let r = max_abs(&f);
        if r < cfg.newton_tol {
            return NewtonOutcome {
                converged: true,
                iterations: it,
                residual_max: r,
                u,
                failure: None,
                roundoff_limited: false,
            };
        }
        if it == max_iters {
            return fail(u, it, r, format!("no convergence in {max_iters} iterations"));
        }
        let (_, trip) = match disc.residual_and_jacobian(&u, tau) {
            Ok(v) => v,
            Err(e) => return fail(u, it, r, e.to_string()),
        };
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let Some(delta) = sparse_solve_cached(n, &trip, &rhs, &disc.symbolic) else {
            return fail(u, it, r, "singular Jacobian".into());
        };
        let scale = 1.0 + max_abs(&u);
        if max_abs(&delta) <= STEP_TOL * scale {
            // the raw residual carries terms of size W²/(αh²)·|u|, so its
            // roundoff floor can sit above newton_tol at steep solutions
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let (u, r) = match disc.residual(&trial, tau) {
                Ok(ft) if max_abs(&ft) <= r => (trial, max_abs(&ft)),
                _ => (u, r),
            };
            return NewtonOutcome {
                converged: true,
                iterations: it + 1,
                residual_max: r,
                u,
                failure: None,
                roundoff_limited: true,
            };
        }
        let phi0 = half_sq(&f);
        let mut lambda = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            if let Ok(ft) = disc.residual(&trial, tau) {
                let phi = half_sq(&ft);
                if phi.is_finite() && phi <= (1.0 - 2.0 * cfg.armijo * lambda) * phi0 {
                    break Some((trial, ft));
                }
            }
            lambda *= 0.5;
            if lambda < cfg.min_damping {
                break None;
            }
        };
        match accepted {
            Some((nu, nf)) => {
                u = nu;
                f = nf;
            }
            None => return fail(u, it, r, "line search failed".into()),
        }
    }
    unreachable!()
}
