//! The prescribed mean curvature function `H(x, z)` with its z-uniform bounds,
//! and the boundary/interior curvature conditions under which the Dirichlet
//! problem is known to be solvable.

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::expr::{Expr, Jet, Var};
use crate::geometry::{ManifoldModel, Point};

/// Added to sampled suprema of quantities that actually vary over the sample set.
pub const SUP_PADDING: f64 = 1e-9;

/// Margins at or above this value count as satisfied.
pub const VERDICT_TOLERANCE: f64 = -1e-12;

/// z-samples per spatial point when bounding over the z-window.
pub const Z_SAMPLES: usize = 64;

/// `∂_z H` below this is a monotonicity violation.
const MONOTONE_TOLERANCE: f64 = -1e-12;

/// Bounds of `H` over `Ω̄ × z_window`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HBounds {
    /// `sup |H|`
    pub h0: f64,
    /// `sup (‖∇_x H‖ + ∂_z H)`
    pub h1: f64,
    /// `‖H‖₁ = h0 + h1`
    pub h_norm1: f64,
    /// `sup ‖∇_x H‖`
    pub sup_gradx: f64,
    /// `inf H²`
    pub inf_h2: f64,
    /// Smallest sampled `∂_z H`.
    pub min_dz: f64,
}

/// `H(x, z)` defined by an expression, validated to be non-decreasing in `z`.
#[derive(Clone, Debug)]
pub struct PrescribedH {
    expr: Expr,
    z_window: [f64; 2],
    model: ManifoldModel,
    bounds: HBounds,
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

impl PrescribedH {
    /// Parse `text` and validate it over `domain × z_window`.
    pub fn parse(text: &str, z_window: [f64; 2], domain: &DomainSpec) -> Result<Self> {
        Self::from_expr(Expr::parse(text)?, z_window, domain)
    }

    pub fn from_expr(expr: Expr, z_window: [f64; 2], domain: &DomainSpec) -> Result<Self> {
        if !(z_window[0].is_finite() && z_window[1].is_finite() && z_window[0] < z_window[1]) {
            return Err(Error::InvalidInput(format!(
                "z_window must be a finite interval with lo < hi, got {z_window:?}"
            )));
        }
        let mut h = Self {
            expr,
            z_window,
            model: *domain.model(),
            bounds: HBounds {
                h0: 0.0,
                h1: 0.0,
                h_norm1: 0.0,
                sup_gradx: 0.0,
                inf_h2: 0.0,
                min_dz: 0.0,
            },
        };
        h.bounds = h.compute_bounds(domain)?;
        Ok(h)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn z_window(&self) -> [f64; 2] {
        self.z_window
    }

    pub fn bounds(&self) -> &HBounds {
        &self.bounds
    }

    pub fn eval(&self, x: Point, z: f64) -> f64 {
        self.expr.eval(x[0], x[1], z)
    }

    pub fn jet(&self, x: Point, z: f64) -> Jet {
        self.expr.jet(x[0], x[1], z)
    }

    /// `∂_z H(x, z)`
    pub fn dz(&self, x: Point, z: f64) -> f64 {
        self.jet(x, z).grad[2]
    }

    /// Chart partials `(∂_1 H, ∂_2 H)` at fixed `z`.
    pub fn grad_x(&self, x: Point, z: f64) -> [f64; 2] {
        let j = self.jet(x, z);
        [j.grad[0], j.grad[1]]
    }

    /// Metric norm of `∇_x H(x, z)`.
    pub fn grad_x_norm(&self, x: Point, z: f64) -> f64 {
        let g = self.grad_x(x, z);
        let lam = self.model.conformal_factor(&x);
        (g[0] * g[0] + g[1] * g[1]).sqrt() / lam
    }

    pub fn is_constant(&self) -> bool {
        self.expr.as_constant().is_some()
    }

    fn depends_on_z(&self) -> bool {
        self.expr.depends_on(Var::Z)
    }

    fn z_pad(&self) -> f64 {
        if self.depends_on_z() {
            SUP_PADDING
        } else {
            0.0
        }
    }

    /// `sup_z f(z)` over the window: dense samples then golden-section refinement.
    fn sup_z(&self, f: &dyn Fn(f64) -> f64) -> f64 {
        let [lo, hi] = self.z_window;
        if !self.depends_on_z() {
            return f(lo);
        }
        let dz = (hi - lo) / (Z_SAMPLES - 1) as f64;
        let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
        for i in 0..Z_SAMPLES {
            let v = f(lo + dz * i as f64);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        let a = lo + dz * best_i.saturating_sub(1) as f64;
        let b = (lo + dz * (best_i + 1) as f64).min(hi);
        let (_, v) = golden_max(f, a, b, 60);
        best.max(v)
    }

    /// `sup_z |H(x, z)|`, padded when `H` depends on `z`.
    pub fn sup_abs_at(&self, x: Point) -> f64 {
        self.sup_z(&|z| self.eval(x, z).abs()) + self.z_pad()
    }

    /// `sup_z ‖∇_x H(x, z)‖`, padded when `H` depends on `z`.
    pub fn sup_gradx_at(&self, x: Point) -> f64 {
        if !self.expr.depends_on_x() {
            return 0.0;
        }
        self.sup_z(&|z| self.grad_x_norm(x, z)) + self.z_pad()
    }

    /// `inf_z H(x, z)²`, lowered by the padding when `H` depends on `z`.
    pub fn inf_h2_at(&self, x: Point) -> f64 {
        let v = -self.sup_z(&|z| -self.eval(x, z).powi(2));
        (v - self.z_pad()).max(0.0)
    }

    fn compute_bounds(&self, domain: &DomainSpec) -> Result<HBounds> {
        let pts = domain.closure_samples(32, 128);

        let [lo, hi] = self.z_window;
        let dz_step = (hi - lo) / (Z_SAMPLES - 1) as f64;
        let nz = if self.depends_on_z() { Z_SAMPLES } else { 1 };

        // monotonicity on the sample set
        let worst = pts
            .par_iter()
            .map(|&x| {
                let mut w = (f64::INFINITY, x, lo);
                for i in 0..nz {
                    let z = lo + dz_step * i as f64;
                    let d = self.dz(x, z);
                    if d < w.0 || d.is_nan() {
                        w = (d, x, z);
                    }
                }
                if self.depends_on_z() {
                    let i = ((w.2 - lo) / dz_step).round() as usize;
                    let a = lo + dz_step * i.saturating_sub(1) as f64;
                    let b = (lo + dz_step * (i + 1) as f64).min(hi);
                    let (z, v) = golden_max(&|z| -self.dz(x, z), a, b, 60);
                    if -v < w.0 {
                        w = (-v, x, z);
                    }
                }
                w
            })
            .reduce(|| (f64::INFINITY, [0.0, 0.0], lo), |a, b| if b.0 < a.0 || b.0.is_nan() { b } else { a });
        if !(worst.0 >= MONOTONE_TOLERANCE) {
            return Err(Error::NonMonotone {
                x1: worst.1[0],
                x2: worst.1[1],
                z: worst.2,
                dz: worst.0,
            });
        }

        let abs_h = |x: Point| self.sup_z(&|z| self.eval(x, z).abs());
        let h1_at = |x: Point| self.sup_z(&|z| self.grad_x_norm(x, z) + self.dz(x, z));
        let gx = |x: Point| {
            if self.expr.depends_on_x() {
                self.sup_z(&|z| self.grad_x_norm(x, z))
            } else {
                0.0
            }
        };
        let neg_h2 = |x: Point| self.sup_z(&|z| -self.eval(x, z).powi(2));

        let varies = self.expr.depends_on_x() || self.depends_on_z();
        let pad = if varies { SUP_PADDING } else { 0.0 };
        let refine = self.expr.depends_on_x();
        let sup_x = |f: &(dyn Fn(Point) -> f64 + Sync)| domain.sampled_sup(f, &pts, refine);

        let h0 = sup_x(&abs_h) + pad;
        let h1 = if varies { sup_x(&h1_at) + pad } else { 0.0 };
        let sup_gradx = if self.expr.depends_on_x() { sup_x(&gx) + pad } else { 0.0 };
        let inf_h2 = (-sup_x(&neg_h2) - pad).max(0.0);
        Ok(HBounds {
            h0,
            h1,
            h_norm1: h0 + h1,
            sup_gradx,
            inf_h2,
            min_dz: worst.0,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SerrinSample {
    pub s: f64,
    pub y: Point,
    /// `(n−1)·ℋ_∂Ω(y)`
    pub lhs: f64,
    /// `n·sup_z |H(y, z)|`
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SerrinReport {
    pub pass: bool,
    pub worst_margin: f64,
    pub samples: Vec<SerrinSample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RicciSample {
    pub x: Point,
    /// Lower Ricci bound at `x`.
    pub lhs: f64,
    /// `n·sup_z‖∇_x H‖ − n²/(n−1)·inf_z H²`
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RicciReport {
    pub pass: bool,
    pub worst_margin: f64,
    pub samples: Vec<RicciSample>,
}

/// Which set of sufficient conditions for existence is met.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExistenceRoute {
    /// Boundary condition plus the Ricci/gradient condition.
    General,
    /// Hyperbolic model, boundary condition and `sup|H| ≤ (n−1)/n`.
    HyperbolicSmallCurvature,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub serrin: SerrinReport,
    pub ricci: RicciReport,
    pub route: ExistenceRoute,
    /// No sufficient condition holds; a solve is still possible but unsupported.
    pub outside_proven_regime: bool,
    pub h_bounds: HBounds,
    /// `(n−1)/n`, the hyperbolic smallness threshold for `sup|H|`.
    pub smallness_limit: f64,
    /// Hypotheses that are not checked numerically.
    pub unchecked: Vec<String>,
}

fn worst(margins: impl Iterator<Item = f64>) -> f64 {
    margins.fold(f64::INFINITY, f64::min)
}

/// `(n−1)ℋ_∂Ω(y) ≥ n·sup_z|H(y,z)|` at `m` equispaced boundary parameters.
pub fn check_strong_serrin(domain: &DomainSpec, h: &PrescribedH, m: usize) -> Result<SerrinReport> {
    if m < 16 {
        return Err(Error::InvalidInput(format!("need at least 16 boundary samples, got {m}")));
    }
    let n = domain.model().dim() as f64;
    let samples = domain
        .boundary_samples(m)
        .into_par_iter()
        .map(|(s, y)| {
            let lhs = (n - 1.0) * domain.inward_mean_curvature(s)?;
            let rhs = n * h.sup_abs_at(y);
            Ok(SerrinSample { s, y, lhs, rhs, margin: lhs - rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_margin = worst(samples.iter().map(|s| s.margin));
    Ok(SerrinReport {
        pass: worst_margin >= VERDICT_TOLERANCE,
        worst_margin,
        samples,
    })
}

/// `Ricc_x ≥ n·sup_z‖∇_x H‖ − n²/(n−1)·inf_z H²` at the given interior points.
pub fn check_ricci_condition(model: &ManifoldModel, h: &PrescribedH, points: &[Point]) -> Result<RicciReport> {
    let n = model.dim() as f64;
    let samples = points
        .par_iter()
        .map(|&x| {
            let lam = model.conformal_factor(&x);
            let lhs = model.ricci_along(&x, &[1.0 / lam, 0.0])?.value;
            let rhs = n * h.sup_gradx_at(x) - n * n / (n - 1.0) * h.inf_h2_at(x);
            Ok(RicciSample { x, lhs, rhs, margin: lhs - rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_margin = worst(samples.iter().map(|s| s.margin));
    Ok(RicciReport {
        pass: worst_margin >= VERDICT_TOLERANCE,
        worst_margin,
        samples,
    })
}

pub fn route_existence_theorem(
    model: &ManifoldModel,
    serrin: &SerrinReport,
    ricci: &RicciReport,
    h: &PrescribedH,
) -> ExistenceRoute {
    let n = model.dim() as f64;
    if serrin.pass && ricci.pass {
        ExistenceRoute::General
    } else if model.is_hyperbolic() && serrin.pass && h.bounds().h0 <= (n - 1.0) / n - VERDICT_TOLERANCE {
        ExistenceRoute::HyperbolicSmallCurvature
    } else {
        ExistenceRoute::None
    }
}

/// Runs both checks on default sample sets and routes the result.
pub fn evaluate_conditions(domain: &DomainSpec, h: &PrescribedH, boundary_samples: usize) -> Result<ConditionReport> {
    let model = domain.model();
    let serrin = check_strong_serrin(domain, h, boundary_samples)?;
    let points = domain.interior_grid(domain.scale() / 16.0);
    let ricci = check_ricci_condition(model, h, &points)?;
    let route = route_existence_theorem(model, &serrin, &ricci, h);
    let n = model.dim() as f64;
    Ok(ConditionReport {
        serrin,
        ricci,
        route,
        outside_proven_regime: route == ExistenceRoute::None,
        h_bounds: *h.bounds(),
        smallness_limit: (n - 1.0) / n,
        unchecked: vec!["Hölder continuity of the derivatives of H".into()],
    })
}
