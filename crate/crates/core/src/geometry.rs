//! Model Riemannian manifolds and their chart-level differential geometry.
//!
//! Two models are supported: the Euclidean space and the hyperbolic space of
//! sectional curvature −1 realised in the Poincaré ball. Chart operations
//! (metric, Christoffel symbols, geodesics) are two-dimensional; the Ricci
//! evaluators accept any dimension `n ≥ 2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the two-dimensional chart.
pub type Point = [f64; 2];

/// Relative slack accepted when a caller hands in a "unit" direction.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Points of the Poincaré disk must satisfy `|x|² < 1 - CHART_MARGIN`.
const CHART_MARGIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Euclidean,
    /// Hyperbolic space (K = −1) in the Poincaré disk chart.
    Hyperbolic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManifoldModel {
    kind: ModelKind,
    dim: usize,
}

/// Metric data at a chart point.
///
/// `christoffel[k][i][j]` stores Γ^k_ij.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricAt {
    pub point: Point,
    pub sigma: [[f64; 2]; 2],
    pub sigma_inv: [[f64; 2]; 2],
    pub christoffel: [[[f64; 2]; 2]; 2],
}

impl MetricAt {
    /// σ-inner product of two chart vectors.
    pub fn inner(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.sigma[i][j] * a[i] * b[j];
            }
        }
        s
    }

    pub fn norm(&self, v: [f64; 2]) -> f64 {
        self.inner(v, v).sqrt()
    }

    /// Norm of the gradient of a function given its partial derivatives,
    /// `sqrt(σ^{ij} ∂_i f ∂_j f)`.
    pub fn covector_norm(&self, df: [f64; 2]) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.sigma_inv[i][j] * df[i] * df[j];
            }
        }
        s.max(0.0).sqrt()
    }

    /// Raise an index: `v^i = σ^{ij} w_j`.
    pub fn raise(&self, w: [f64; 2]) -> [f64; 2] {
        [
            self.sigma_inv[0][0] * w[0] + self.sigma_inv[0][1] * w[1],
            self.sigma_inv[1][0] * w[0] + self.sigma_inv[1][1] * w[1],
        ]
    }

    /// Covariant Hessian `∇²_ij f = ∂_ij f − Γ^k_ij ∂_k f`.
    pub fn covariant_hessian(&self, df: [f64; 2], d2f: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let mut out = d2f;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                for (k, dk) in df.iter().enumerate() {
                    *v -= self.christoffel[k][i][j] * dk;
                }
            }
        }
        out
    }

    /// Laplace–Beltrami trace `σ^{ij} ∇²_ij f` of a covariant Hessian.
    pub fn trace(&self, hess: [[f64; 2]; 2]) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.sigma_inv[i][j] * hess[i][j];
            }
        }
        s
    }

    /// Operator norm of a covariant 2-tensor measured with σ, i.e. the
    /// largest |eigenvalue| of σ^{-1}·T (T symmetric).
    pub fn tensor_norm(&self, t: [[f64; 2]; 2]) -> f64 {
        // σ^{-1} T is self-adjoint w.r.t. σ; its eigenvalues solve a 2x2 problem.
        let m = [
            [
                self.sigma_inv[0][0] * t[0][0] + self.sigma_inv[0][1] * t[1][0],
                self.sigma_inv[0][0] * t[0][1] + self.sigma_inv[0][1] * t[1][1],
            ],
            [
                self.sigma_inv[1][0] * t[0][0] + self.sigma_inv[1][1] * t[1][0],
                self.sigma_inv[1][0] * t[0][1] + self.sigma_inv[1][1] * t[1][1],
            ],
        ];
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        let l1 = 0.5 * tr + disc;
        let l2 = 0.5 * tr - disc;
        l1.abs().max(l2.abs())
    }
}

/// Ricci curvature evaluated along a direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RicciValue {
    pub value: f64,
    /// The supplied direction was within tolerance of unit length and got
    /// normalised before use.
    pub normalized: bool,
}

impl ManifoldModel {
    pub fn new(kind: ModelKind, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("dimension must be >= 2, got {dim}")));
        }
        Ok(Self { kind, dim })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(ModelKind::Euclidean, dim).expect("dimension >= 2")
    }

    pub fn hyperbolic(dim: usize) -> Self {
        Self::new(ModelKind::Hyperbolic, dim).expect("dimension >= 2")
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.kind == ModelKind::Hyperbolic
    }

    /// The constant `R ≥ 0` with `Ricc ≥ −R` in every unit direction.
    pub fn curvature_bound(&self) -> f64 {
        match self.kind {
            ModelKind::Euclidean => 0.0,
            ModelKind::Hyperbolic => (self.dim - 1) as f64,
        }
    }

    /// Lower Ricci value; both models are Einstein so this is exact.
    pub fn ricci_lower(&self) -> f64 {
        -self.curvature_bound()
    }

    fn check_chart(&self, x: &[f64]) -> Result<()> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutsideChart {
                x: x.first().copied().unwrap_or(f64::NAN),
                y: x.get(1).copied().unwrap_or(f64::NAN),
            });
        }
        if self.kind == ModelKind::Hyperbolic {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            if r2 >= 1.0 - CHART_MARGIN {
                return Err(Error::OutsideChart {
                    x: x[0],
                    y: x.get(1).copied().unwrap_or(0.0),
                });
            }
        }
        Ok(())
    }

    pub fn in_chart(&self, x: Point) -> bool {
        self.check_chart(&x).is_ok()
    }

    /// Conformal factor λ with σ = λ² δ. Works in any dimension.
    pub fn conformal_factor(&self, x: &[f64]) -> f64 {
        match self.kind {
            ModelKind::Euclidean => 1.0,
            ModelKind::Hyperbolic => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                2.0 / (1.0 - r2)
            }
        }
    }

    pub fn metric_at(&self, x: Point) -> Result<MetricAt> {
        self.check_chart(&x)?;
        match self.kind {
            ModelKind::Euclidean => Ok(MetricAt {
                point: x,
                sigma: [[1.0, 0.0], [0.0, 1.0]],
                sigma_inv: [[1.0, 0.0], [0.0, 1.0]],
                christoffel: [[[0.0; 2]; 2]; 2],
            }),
            ModelKind::Hyperbolic => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let lam = 2.0 / (1.0 - r2);
                let l2 = lam * lam;
                // f = ln λ, ∂_i f = 2 x_i / (1 − |x|²)
                let df = [2.0 * x[0] / (1.0 - r2), 2.0 * x[1] / (1.0 - r2)];
                let mut gamma = [[[0.0; 2]; 2]; 2];
                for (k, gk) in gamma.iter_mut().enumerate() {
                    for (i, gki) in gk.iter_mut().enumerate() {
                        for (j, g) in gki.iter_mut().enumerate() {
                            let dik = (i == k) as u8 as f64;
                            let djk = (j == k) as u8 as f64;
                            let dij = (i == j) as u8 as f64;
                            *g = dik * df[j] + djk * df[i] - dij * df[k];
                        }
                    }
                }
                Ok(MetricAt {
                    point: x,
                    sigma: [[l2, 0.0], [0.0, l2]],
                    sigma_inv: [[1.0 / l2, 0.0], [0.0, 1.0 / l2]],
                    christoffel: gamma,
                })
            }
        }
    }

    /// Monotone surrogate of the distance: `|p−q|²` (Euclidean) or
    /// `|p−q|² / ((1−|p|²)(1−|q|²))` (hyperbolic). No chart checks.
    pub(crate) fn distance_surrogate(&self, p: Point, q: Point) -> f64 {
        let dx = p[0] - q[0];
        let dy = p[1] - q[1];
        let e2 = dx * dx + dy * dy;
        match self.kind {
            ModelKind::Euclidean => e2,
            ModelKind::Hyperbolic => {
                let a = 1.0 - (p[0] * p[0] + p[1] * p[1]);
                let b = 1.0 - (q[0] * q[0] + q[1] * q[1]);
                e2 / (a * b)
            }
        }
    }

    /// Inverse of [`Self::distance_surrogate`].
    pub(crate) fn surrogate_to_distance(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self.kind {
            ModelKind::Euclidean => s.sqrt(),
            // cosh d = 1 + 2s  ⇔  sinh(d/2) = √s
            ModelKind::Hyperbolic => 2.0 * s.sqrt().asinh(),
        }
    }

    pub fn geodesic_distance(&self, p: Point, q: Point) -> Result<f64> {
        self.check_chart(&p)?;
        self.check_chart(&q)?;
        if p == q {
            return Ok(0.0);
        }
        Ok(self.surrogate_to_distance(self.distance_surrogate(p, q)))
    }

    /// σ-norm of a chart vector at `x` (any dimension).
    pub fn vector_norm(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        self.check_chart(x)?;
        let e: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        Ok(self.conformal_factor(x) * e)
    }

    fn unit_check(norm: f64) -> Result<bool> {
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::NotUnit { norm });
        }
        Ok(norm != 1.0)
    }

    /// The geodesic `t ↦ exp_y(t N)` leaving `y` in direction `n`.
    ///
    /// `n` must be σ-unit at `y` (within [`UNIT_TOLERANCE`]; it is then
    /// normalised).
    pub fn normal_geodesic(&self, y: Point, n: [f64; 2], t: f64) -> Result<Point> {
        self.check_chart(&y)?;
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidInput(format!("geodesic parameter must be finite and >= 0, got {t}")));
        }
        let norm = self.vector_norm(&y, &n)?;
        Self::unit_check(norm)?;
        let e = (n[0] * n[0] + n[1] * n[1]).sqrt();
        let dir = [n[0] / e, n[1] / e];
        let p = match self.kind {
            ModelKind::Euclidean => [y[0] + t * dir[0], y[1] + t * dir[1]],
            ModelKind::Hyperbolic => {
                // Move y to the origin with a disk automorphism; geodesics through
                // the origin are diameters at Euclidean radius tanh(t/2).
                let yc = Complex64::new(y[0], y[1]);
                let w = Complex64::new(dir[0], dir[1]) * (0.5 * t).tanh();
                let z = (w + yc) / (Complex64::new(1.0, 0.0) + yc.conj() * w);
                [z.re, z.im]
            }
        };
        self.check_chart(&p)?;
        Ok(p)
    }

    /// Ricci curvature `Ricc_x(v)` for a σ-unit direction `v` at `x`.
    ///
    /// Both models have constant sectional curvature K, so the value is
    /// `(n−1)K` regardless of direction; the direction is still validated.
    pub fn ricci_along(&self, x: &[f64], v: &[f64]) -> Result<RicciValue> {
        if x.len() != self.dim || v.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "expected {}-dimensional point and direction",
                self.dim
            )));
        }
        let norm = self.vector_norm(x, v)?;
        let normalized = Self::unit_check(norm)?;
        Ok(RicciValue {
            value: self.ricci_lower(),
            normalized,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn euclidean_metric_is_flat() {
        let m = ManifoldModel::euclidean(2).metric_at([3.0, -7.0]).unwrap();
        assert_eq!(m.sigma, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(m.christoffel, [[[0.0; 2]; 2]; 2]);
    }

    #[test]
    fn disk_metric_values() {
        let h = ManifoldModel::hyperbolic(2);
        let m0 = h.metric_at([0.0, 0.0]).unwrap();
        assert_eq!(m0.sigma, [[4.0, 0.0], [0.0, 4.0]]);
        let m = h.metric_at([0.5, 0.0]).unwrap();
        assert_relative_eq!(m.sigma[0][0], 64.0 / 9.0, max_relative = 1e-14);
        assert!(h.metric_at([1.0, 0.0]).is_err());
    }

    #[test]
    fn christoffels_match_finite_differences_of_metric() {
        // Γ^k_ij = ½ σ^{kl}(∂_i σ_jl + ∂_j σ_il − ∂_l σ_ij)
        let h = ManifoldModel::hyperbolic(2);
        let x = [0.3, -0.2];
        let m = h.metric_at(x).unwrap();
        let eps = 1e-6;
        let dsig = |l: usize| {
            let mut xp = x;
            let mut xm = x;
            xp[l] += eps;
            xm[l] -= eps;
            let sp = h.metric_at(xp).unwrap().sigma;
            let sm = h.metric_at(xm).unwrap().sigma;
            let mut d = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    d[i][j] = (sp[i][j] - sm[i][j]) / (2.0 * eps);
                }
            }
            d
        };
        let ds = [dsig(0), dsig(1)];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut g = 0.0;
                    for l in 0..2 {
                        g += 0.5 * m.sigma_inv[k][l] * (ds[i][j][l] + ds[j][i][l] - ds[l][i][j]);
                    }
                    assert_relative_eq!(g, m.christoffel[k][i][j], epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn distances() {
        let e = ManifoldModel::euclidean(2);
        assert_eq!(e.geodesic_distance([0.0, 0.0], [3.0, 4.0]).unwrap(), 5.0);
        let h = ManifoldModel::hyperbolic(2);
        let d = h.geodesic_distance([0.0, 0.0], [0.5, 0.0]).unwrap();
        assert_relative_eq!(d, 3f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(d, (5.0f64 / 3.0).acosh(), max_relative = 1e-14);
        assert_eq!(h.geodesic_distance([0.1, 0.2], [0.1, 0.2]).unwrap(), 0.0);
        assert!(h.geodesic_distance([0.0, 0.0], [0.0, 1.0]).is_err());
    }

    #[test]
    fn normal_geodesic_examples() {
        let e = ManifoldModel::euclidean(2);
        assert_eq!(e.normal_geodesic([1.0, 0.0], [-1.0, 0.0], 0.25).unwrap(), [0.75, 0.0]);
        let h = ManifoldModel::hyperbolic(2);
        // σ-unit inward direction at (0.5, 0): Euclidean length 1/λ = 0.375
        let n = [-0.375, 0.0];
        let p = h.normal_geodesic([0.5, 0.0], n, 3f64.ln()).unwrap();
        assert!(p[0].abs() < 1e-15 && p[1].abs() < 1e-15, "{p:?}");
        assert_eq!(h.normal_geodesic([0.5, 0.0], n, 0.0).unwrap(), [0.5, 0.0]);
        assert!(h.normal_geodesic([0.5, 0.0], [-1.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn ricci_values() {
        let e = ManifoldModel::euclidean(2);
        assert_eq!(e.ricci_along(&[0.0, 0.0], &[1.0, 0.0]).unwrap().value, 0.0);
        let h2 = ManifoldModel::hyperbolic(2);
        assert_eq!(h2.ricci_along(&[0.0, 0.0], &[0.5, 0.0]).unwrap().value, -1.0);
        let h3 = ManifoldModel::hyperbolic(3);
        let r = h3.ricci_along(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.5 + 1e-8]).unwrap();
        assert_eq!(r.value, -2.0);
        assert!(r.normalized);
        assert!(h3.ricci_along(&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn tensor_norm_of_identity_in_disk() {
        let h = ManifoldModel::hyperbolic(2);
        let m = h.metric_at([0.0, 0.0]).unwrap();
        // σ itself has σ-operator norm 1.
        assert_relative_eq!(m.tensor_norm(m.sigma), 1.0, max_relative = 1e-14);
    }
}
