//! Discrete residual of `(W²σ^{ij} − u^i u^j)∇²_ij u − τ·n·H(x, u)·W³` and its
//! exact Jacobian.

use std::sync::OnceLock;

use faer::sparse::linalg::solvers::SymbolicLu;
use rayon::prelude::*;

use crate::conditions::PrescribedH;
use crate::error::{Error, Result};
use crate::geometry::ManifoldModel;

use super::grid::{Arm, ArmEnd, Grid, UnknownStencil};

/// Coefficients `(c₀, c₊, c₋)` of the first and second derivative along a
/// line with arm fractions `α` (forward) and `β` (backward), in units of the
/// lattice step.
pub fn line_coefficients(alpha: f64, beta: f64) -> ([f64; 3], [f64; 3]) {
    let s = alpha + beta;
    let d1p = beta / (alpha * s);
    let d1m = -alpha / (beta * s);
    let d2p = 2.0 / (alpha * s);
    let d2m = 2.0 / (beta * s);
    ([-(d1p + d1m), d1p, d1m], [-(d2p + d2m), d2p, d2m])
}

/// Pointwise metric data of an unknown.
#[derive(Clone, Copy, Debug)]
struct NodeMetric {
    /// σ^{ij} = s δ^{ij}
    s: f64,
    /// Γ^k_ij
    gamma: [[[f64; 2]; 2]; 2],
}

/// Five derivative stencils (∂₁, ∂₂, ∂₁₁, ∂₂₂, ∂₁₂) as `(center, [(arm, coef)])`.
#[derive(Clone, Debug)]
struct Stencils {
    center: [f64; 5],
    arms: [Vec<(ArmEnd, f64)>; 5],
}

fn build_stencils(st: &UnknownStencil, h: f64) -> Stencils {
    let mut center = [0.0; 5];
    let mut arms: [Vec<(ArmEnd, f64)>; 5] = Default::default();
    let push = |arms: &mut Vec<(ArmEnd, f64)>, a: &Arm, c: f64| arms.push((a.end, c));

    for (l, scale) in [(0usize, 1.0 / h), (1, 1.0 / h)] {
        let [p, m] = &st.arms[l];
        let (d1, _) = line_coefficients(p.frac, m.frac);
        center[l] += d1[0] * scale;
        push(&mut arms[l], p, d1[1] * scale);
        push(&mut arms[l], m, d1[2] * scale);
    }
    for (l, q) in [(0usize, 2usize), (1, 3)] {
        let [p, m] = &st.arms[l];
        let (_, d2) = line_coefficients(p.frac, m.frac);
        let sc = 1.0 / (h * h);
        center[q] += d2[0] * sc;
        push(&mut arms[q], p, d2[1] * sc);
        push(&mut arms[q], m, d2[2] * sc);
    }
    // ∂₁₂ = (D²_diag − D²_anti) / (4h²)
    for (l, sign) in [(2usize, 1.0), (3, -1.0)] {
        let [p, m] = &st.arms[l];
        let (_, d2) = line_coefficients(p.frac, m.frac);
        let sc = sign / (4.0 * h * h);
        center[4] += d2[0] * sc;
        push(&mut arms[4], p, d2[1] * sc);
        push(&mut arms[4], m, d2[2] * sc);
    }
    Stencils { center, arms }
}

/// Local operator value and its partials with respect to the derivative
/// quantities `(p₁, p₂, q₁₁, q₂₂, q₁₂)` and to `u` itself.
#[derive(Clone, Copy, Debug)]
pub struct LocalLinearization {
    pub value: f64,
    pub d_derivs: [f64; 5],
    pub d_u: f64,
    /// `W²` at the node.
    pub w2: f64,
    /// σ-norm of the gradient.
    pub grad_norm: f64,
    /// Smallest eigenvalue of the second-order coefficient matrix.
    pub min_eig: f64,
}

fn local(m: &NodeMetric, d: [f64; 5], nh: f64, n_dhdz: f64) -> LocalLinearization {
    let s = m.s;
    let p = [d[0], d[1]];
    let q = [[d[2], d[4]], [d[4], d[3]]];
    let g2 = s * (p[0] * p[0] + p[1] * p[1]);
    let w2 = 1.0 + g2;
    let w = w2.sqrt();
    let mut a = [[0.0; 2]; 2];
    let mut hc = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] = (if i == j { w2 * s } else { 0.0 }) - s * s * p[i] * p[j];
            hc[i][j] = q[i][j] - m.gamma[0][i][j] * p[0] - m.gamma[1][i][j] * p[1];
        }
    }
    let mut value = -nh * w2 * w;
    for i in 0..2 {
        for j in 0..2 {
            value += a[i][j] * hc[i][j];
        }
    }
    let mut dp = [0.0; 2];
    for (k, dpk) in dp.iter_mut().enumerate() {
        let mut v = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let dik = (i == k) as u8 as f64;
                let djk = (j == k) as u8 as f64;
                let dij = (i == j) as u8 as f64;
                let da = 2.0 * s * s * p[k] * dij - s * s * (dik * p[j] + djk * p[i]);
                v += da * hc[i][j] - a[i][j] * m.gamma[k][i][j];
            }
        }
        v -= nh * 3.0 * w * s * p[k];
        *dpk = v;
    }
    // eigenvalues of σ^{-1}-scaled coefficient matrix: s·W² and s
    LocalLinearization {
        value,
        d_derivs: [dp[0], dp[1], a[0][0], a[1][1], 2.0 * a[0][1]],
        d_u: -n_dhdz * w2 * w,
        w2,
        grad_norm: g2.sqrt(),
        min_eig: s.min(s * w2),
    }
}

/// The discrete problem at fixed grid, model and `H`.
pub struct Discretization<'a> {
    pub grid: &'a Grid,
    pub h_fn: &'a PrescribedH,
    pub n: f64,
    metrics: Vec<NodeMetric>,
    stencils: Vec<Stencils>,
    /// Symbolic LU of the Jacobian pattern, shared by all Newton steps.
    pub(crate) symbolic: OnceLock<SymbolicLu<usize>>,
}

/// Per-unknown diagnostics of a field.
#[derive(Clone, Copy, Debug)]
pub struct NodeDiagnostics {
    pub residual: f64,
    pub grad: [f64; 2],
    pub grad_norm: f64,
    pub min_eig: f64,
}

impl<'a> Discretization<'a> {
    pub fn new(grid: &'a Grid, model: &ManifoldModel, h_fn: &'a PrescribedH) -> Result<Self> {
        let metrics = grid
            .unknowns
            .iter()
            .map(|u| {
                let m = model.metric_at(u.x)?;
                Ok(NodeMetric { s: m.sigma_inv[0][0], gamma: m.christoffel })
            })
            .collect::<Result<Vec<_>>>()?;
        let stencils = grid.unknowns.iter().map(|u| build_stencils(u, grid.h)).collect();
        Ok(Self {
            grid,
            h_fn,
            n: model.dim() as f64,
            metrics,
            stencils,
            symbolic: OnceLock::new(),
        })
    }

    fn derivs(&self, k: usize, u: &[f64], tau: f64) -> [f64; 5] {
        let st = &self.stencils[k];
        let mut d = [0.0; 5];
        for q in 0..5 {
            let mut v = st.center[q] * u[k];
            for (end, c) in &st.arms[q] {
                v += c * match end {
                    ArmEnd::Unknown(j) => u[*j],
                    ArmEnd::Fixed(phi) => tau * phi,
                };
            }
            d[q] = v;
        }
        d
    }

    fn linearize(&self, k: usize, u: &[f64], tau: f64) -> Result<LocalLinearization> {
        let d = self.derivs(k, u, tau);
        let x = self.grid.unknowns[k].x;
        let hj = self.h_fn.jet(x, u[k]);
        let loc = local(&self.metrics[k], d, tau * self.n * hj.value, tau * self.n * hj.grad[2]);
        if !loc.value.is_finite() {
            return Err(Error::NonFinite { node: k, what: "residual".into() });
        }
        Ok(loc)
    }

    pub fn residual(&self, u: &[f64], tau: f64) -> Result<Vec<f64>> {
        (0..self.grid.n_unknowns())
            .into_par_iter()
            .map(|k| self.linearize(k, u, tau).map(|l| l.value))
            .collect()
    }

    /// Residual and Jacobian triplets `(row, col, value)` with duplicates merged.
    pub fn residual_and_jacobian(&self, u: &[f64], tau: f64) -> Result<(Vec<f64>, Vec<(usize, usize, f64)>)> {
        let rows: Vec<(f64, Vec<(usize, usize, f64)>)> = (0..self.grid.n_unknowns())
            .into_par_iter()
            .map(|k| {
                let loc = self.linearize(k, u, tau)?;
                let st = &self.stencils[k];
                let mut row: Vec<(usize, f64)> = Vec::with_capacity(10);
                let mut diag = loc.d_u;
                for q in 0..5 {
                    // zero weights are kept so the sparsity pattern never changes
                    let w = loc.d_derivs[q];
                    diag += w * st.center[q];
                    for (end, c) in &st.arms[q] {
                        if let ArmEnd::Unknown(j) = end {
                            row.push((*j, w * c));
                        }
                    }
                }
                row.push((k, diag));
                row.sort_by_key(|e| e.0);
                let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(row.len());
                for (j, v) in row {
                    match merged.last_mut() {
                        Some(last) if last.1 == j => last.2 += v,
                        _ => merged.push((k, j, v)),
                    }
                }
                Ok((loc.value, merged))
            })
            .collect::<Result<_>>()?;
        let mut res = Vec::with_capacity(rows.len());
        let mut trip = Vec::with_capacity(rows.len() * 9);
        for (r, t) in rows {
            res.push(r);
            trip.extend(t);
        }
        Ok((res, trip))
    }

    pub fn diagnostics(&self, u: &[f64], tau: f64) -> Result<Vec<NodeDiagnostics>> {
        (0..self.grid.n_unknowns())
            .into_par_iter()
            .map(|k| {
                let loc = self.linearize(k, u, tau)?;
                let d = self.derivs(k, u, tau);
                Ok(NodeDiagnostics {
                    residual: loc.value,
                    grad: [d[0], d[1]],
                    grad_norm: loc.grad_norm,
                    min_eig: loc.min_eig,
                })
            })
            .collect()
    }
}

/// Sparse matrix-vector product on merged triplets.
pub fn apply_triplets(n: usize, trip: &[(usize, usize, f64)], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for &(i, j, a) in trip {
        out[i] += a * v[j];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equal_arms_reduce_to_central_differences() {
        let (d1, d2) = line_coefficients(1.0, 1.0);
        assert_eq!(d1, [0.0, 0.5, -0.5]);
        assert_eq!(d2, [-2.0, 1.0, 1.0]);
    }

    #[test]
    fn unequal_arms_are_exact_on_quadratics() {
        let (a, b) = (0.3, 0.8);
        let f = |s: f64| 1.0 + 2.0 * s - 3.0 * s * s;
        let (d1, d2) = line_coefficients(a, b);
        let v1 = d1[0] * f(0.0) + d1[1] * f(a) + d1[2] * f(-b);
        let v2 = d2[0] * f(0.0) + d2[1] * f(a) + d2[2] * f(-b);
        assert_relative_eq!(v1, 2.0, epsilon = 1e-13);
        assert_relative_eq!(v2, -6.0, epsilon = 1e-13);
    }
}
