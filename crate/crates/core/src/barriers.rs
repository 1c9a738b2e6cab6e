//! Explicit barriers and a priori bounds: the height barrier, the
//! boundary-gradient barrier and the global gradient bound, together with a
//! numerical check of their super/subsolution inequalities.

use rayon::prelude::*;
use serde::Serialize;

use crate::conditions::{PrescribedH, SUP_PADDING};
use crate::domain::{DistanceField, DistanceJet, DomainSpec};
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::geometry::{MetricAt, Point};

/// Absolute slack for the super/subsolution sign checks.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// `Σ (W²σ^{ij} − w^i w^j) ∇²_ij w − n·H·W³` for given chart partials and
/// covariant Hessian of `w`; `nh` is `n·H(x, w)`.
pub fn quasilinear_operator(metric: &MetricAt, dw: [f64; 2], hess: [[f64; 2]; 2], nh: f64) -> f64 {
    let up = metric.raise(dw);
    let g2 = up[0] * dw[0] + up[1] * dw[1];
    let w2 = 1.0 + g2;
    let mut m = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m += (w2 * metric.sigma_inv[i][j] - up[i] * up[j]) * hess[i][j];
        }
    }
    m - nh * w2 * w2.sqrt()
}

/// Boundary data `φ` defined on the closed domain, with sampled norms.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryData {
    #[serde(skip)]
    expr: Expr,
    pub source: String,
    /// `sup_Ω |φ|`
    pub norm0: f64,
    /// `‖φ‖₀ + sup ‖∇φ‖`
    pub norm1: f64,
    /// `‖φ‖₁ + sup ‖Hess φ‖`
    pub norm2: f64,
    /// `sup_∂Ω |φ|`
    pub boundary_sup: f64,
}

/// Value, chart gradient and covariant Hessian of a function of `x`.
#[derive(Clone, Copy, Debug)]
pub struct SpatialJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl BoundaryData {
    pub fn parse(text: &str, domain: &DomainSpec) -> Result<Self> {
        Self::from_expr(Expr::parse(text)?, domain)
    }

    pub fn from_expr(expr: Expr, domain: &DomainSpec) -> Result<Self> {
        if expr.depends_on(Var::Z) {
            return Err(Error::InvalidInput("boundary data may depend on x1 and x2 only".into()));
        }
        let model = *domain.model();
        let jet_at = |x: Point| -> Option<SpatialJet> {
            let m = model.metric_at(x).ok()?;
            Some(jet_with(&expr, &m))
        };
        let varies = expr.depends_on_x();
        let pad = if varies { SUP_PADDING } else { 0.0 };
        let pts = domain.closure_samples(64, 256);
        let val = |x: Point| jet_at(x).map_or(f64::NAN, |j| j.value.abs());
        let grad = |x: Point| {
            let m = model.metric_at(x).ok();
            match (m, jet_at(x)) {
                (Some(m), Some(j)) => m.covector_norm(j.grad),
                _ => f64::NAN,
            }
        };
        let hess = |x: Point| {
            let m = model.metric_at(x).ok();
            match (m, jet_at(x)) {
                (Some(m), Some(j)) => m.tensor_norm(j.hess),
                _ => f64::NAN,
            }
        };
        let norm0 = domain.sampled_sup(&val, &pts, varies) + pad;
        let sup_grad = if varies { domain.sampled_sup(&grad, &pts, true) + pad } else { 0.0 };
        let sup_hess = if varies { domain.sampled_sup(&hess, &pts, true) + pad } else { 0.0 };
        let boundary_sup = domain
            .boundary_samples(1024)
            .iter()
            .map(|(_, p)| expr.eval(p[0], p[1], 0.0).abs())
            .fold(0.0, f64::max)
            + pad;
        for v in [norm0, sup_grad, sup_hess, boundary_sup] {
            if !v.is_finite() {
                return Err(Error::NonFinite { node: 0, what: "boundary data norm".into() });
            }
        }
        Ok(Self {
            source: expr.source().to_string(),
            expr,
            norm0,
            norm1: norm0 + sup_grad,
            norm2: norm0 + sup_grad + sup_hess,
            boundary_sup,
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.expr.eval(x[0], x[1], 0.0)
    }

    pub fn jet(&self, metric: &MetricAt) -> SpatialJet {
        jet_with(&self.expr, metric)
    }
}

fn jet_with(expr: &Expr, metric: &MetricAt) -> SpatialJet {
    let x = metric.point;
    let j = expr.jet(x[0], x[1], 0.0);
    let grad = [j.grad[0], j.grad[1]];
    let d2 = [[j.hess[0][0], j.hess[0][1]], [j.hess[1][0], j.hess[1][1]]];
    SpatialJet {
        value: j.value,
        grad,
        hess: metric.covariant_hessian(grad, d2),
    }
}

/// `w = φ(d) + sup_∂Ω|φ_bd|` with `φ(t) = (e^{μδ}/μ)(1 − e^{−μt})`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeightBarrier {
    pub n: usize,
    pub mu: f64,
    /// Diameter of the domain.
    pub delta: f64,
    pub boundary_sup: f64,
    /// `sup_∂Ω|φ_bd| + (e^{μδ} − 1)/μ`
    pub bound: f64,
}

impl HeightBarrier {
    pub fn from_constants(n: usize, mu: f64, delta: f64, boundary_sup: f64) -> Result<Self> {
        if !(mu > 0.0 && delta > 0.0 && boundary_sup >= 0.0) {
            return Err(Error::InvalidInput("height barrier needs μ > 0, δ > 0, sup|φ| ≥ 0".into()));
        }
        Ok(Self {
            n,
            mu,
            delta,
            boundary_sup,
            bound: boundary_sup + (mu * delta).exp_m1() / mu,
        })
    }

    /// `[φ(t), φ′(t), φ″(t)]`
    pub fn profile(&self, t: f64) -> [f64; 3] {
        let e = (self.mu * self.delta).exp();
        let p1 = (self.mu * (self.delta - t)).exp();
        [-(-self.mu * t).exp_m1() * e / self.mu, p1, -self.mu * p1]
    }

    pub fn value_at_distance(&self, d: f64) -> f64 {
        self.profile(d)[0] + self.boundary_sup
    }
}

/// μ = n·h0·1.01 + 10⁻⁶ and δ = diam(Ω).
pub fn build_height_barrier(domain: &DomainSpec, h: &PrescribedH, data: &BoundaryData) -> Result<HeightBarrier> {
    let n = domain.model().dim();
    let mu = n as f64 * h.bounds().h0 * 1.01 + 1e-6;
    HeightBarrier::from_constants(n, mu, domain.diameter(), data.boundary_sup)
}

/// `ψ(t) = ln(1 + kt)/ν` on the collar `[0, a]`, held in log form so that
/// very large `k` stays representable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientBarrier {
    pub n: usize,
    /// `2n(1 + κ + ‖d‖₂ + 1/τ)`
    pub c: f64,
    pub kappa_extra: f64,
    pub d_c2_norm: f64,
    pub tau: f64,
    pub h_norm1: f64,
    pub phi_norm0: f64,
    pub phi_norm1: f64,
    pub phi_norm2: f64,
    pub u_sup: f64,
    pub u_sup_source: String,
    pub nu: f64,
    /// `ν(‖u‖₀ + ‖φ‖₀)`
    pub exponent: f64,
    pub ln_k: f64,
    /// `k`, or `None` if it overflows.
    pub k: Option<f64>,
    pub a: f64,
    /// `‖φ‖₁ + k/ν`, or `None` if it overflows.
    pub boundary_bound: Option<f64>,
    /// `ln(k/ν) = exponent`, kept for the overflowing case.
    pub ln_boundary_excess: f64,
}

#[allow(clippy::too_many_arguments)]
impl GradientBarrier {
    pub fn from_constants(
        n: usize,
        d_c2_norm: f64,
        tau: f64,
        kappa: f64,
        h_norm1: f64,
        phi: [f64; 3],
        u_sup: f64,
        u_sup_source: &str,
    ) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidInput(format!("collar width must be positive, got {tau}")));
        }
        let c = 2.0 * n as f64 * (1.0 + kappa + d_c2_norm + 1.0 / tau);
        let nu = c * (1.0 + h_norm1 + phi[2]) * (1.0 + phi[1]).powi(3);
        let exponent = nu * (u_sup + phi[0]);
        let ln_k = nu.ln() + exponent;
        let a = -(-exponent).exp_m1() / nu;
        let k = ln_k.exp();
        let excess = exponent.exp();
        let b = Self {
            n,
            c,
            kappa_extra: kappa,
            d_c2_norm,
            tau,
            h_norm1,
            phi_norm0: phi[0],
            phi_norm1: phi[1],
            phi_norm2: phi[2],
            u_sup,
            u_sup_source: u_sup_source.to_string(),
            nu,
            exponent,
            ln_k,
            k: k.is_finite().then_some(k),
            a,
            boundary_bound: excess.is_finite().then_some(phi[1] + excess),
            ln_boundary_excess: exponent,
        };
        b.check_invariants()?;
        Ok(b)
    }

    pub fn psi(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        // ln(1 + kt) with ln(kt) = l
        let l = self.ln_k + t.ln();
        if l < 700.0 {
            l.exp().ln_1p() / self.nu
        } else {
            (l + (-l).exp().ln_1p()) / self.nu
        }
    }

    pub fn psi_prime(&self, t: f64) -> f64 {
        1.0 / (self.nu * ((-self.ln_k).exp() + t))
    }

    pub fn psi_second(&self, t: f64) -> f64 {
        let p = self.psi_prime(t);
        -self.nu * p * p
    }

    /// ψ′ ≥ 1, ψ″ ≤ 0, tψ′ ≤ 1 on a 10³-point grid of `[0, a]`, `a < 1/ν < τ`,
    /// `ψ′(a) = 1` and `ψ(a) = ‖u‖₀ + ‖φ‖₀`.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |what: String| Err(Error::Internal(format!("gradient barrier: {what}")));
        // a = (1 − e^{−X})/ν rounds to 1/ν once e^{−X} drops below machine precision
        if !(self.a <= 1.0 / self.nu && 1.0 / self.nu < self.tau) {
            return fail(format!("a = {} < 1/ν = {} < τ = {} fails", self.a, 1.0 / self.nu, self.tau));
        }
        for i in 0..=1000 {
            let t = self.a * i as f64 / 1000.0;
            let p1 = self.psi_prime(t);
            if p1 < 1.0 - 1e-12 {
                return fail(format!("ψ′({t}) = {p1} < 1"));
            }
            if self.psi_second(t) > 1e-12 {
                return fail(format!("ψ″({t}) > 0"));
            }
            if t * p1 > 1.0 + 1e-12 {
                return fail(format!("tψ′({t}) = {} > 1", t * p1));
            }
        }
        let pa = self.psi_prime(self.a);
        if (pa - 1.0).abs() > 1e-10 {
            return fail(format!("ψ′(a) = {pa}"));
        }
        let target = self.u_sup + self.phi_norm0;
        let psia = self.psi(self.a);
        if (psia - target).abs() > 1e-10 * target.max(1.0) {
            return fail(format!("ψ(a) = {psia}, expected {target}"));
        }
        Ok(())
    }
}

/// Constants from a validated distance field, `H`, `φ` and a height bound.
/// `kappa` is the hyperbolic parallel-curvature constant (`None` for the
/// Euclidean model).
pub fn build_gradient_barrier(
    field: &DistanceField,
    h: &PrescribedH,
    data: &BoundaryData,
    u_sup: f64,
    u_sup_source: &str,
    kappa: Option<f64>,
) -> Result<GradientBarrier> {
    GradientBarrier::from_constants(
        field.domain().model().dim(),
        field.d_c2_norm,
        field.collar_tau,
        kappa.unwrap_or(0.0),
        h.bounds().h_norm1,
        [data.norm0, data.norm1, data.norm2],
        u_sup,
        u_sup_source,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlobalGradientBound {
    /// `1 + 8n(‖H‖₁ + R)`
    pub a_const: f64,
    /// `(√3 + sup_∂Ω‖∇u‖)·exp(2·sup|u|·A)`; `None` on overflow.
    pub value: Option<f64>,
    pub ln_value: f64,
}

pub fn global_gradient_bound(n: usize, h_norm1: f64, r: f64, u_sup: f64, boundary_grad_sup: f64) -> GlobalGradientBound {
    let a_const = 1.0 + 8.0 * n as f64 * (h_norm1 + r);
    let ln_value = (3f64.sqrt() + boundary_grad_sup).ln() + 2.0 * u_sup * a_const;
    let value = (3f64.sqrt() + boundary_grad_sup) * (2.0 * u_sup * a_const).exp();
    GlobalGradientBound {
        a_const,
        value: value.is_finite().then_some(value),
        ln_value,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub barrier: String,
    pub samples: usize,
    /// Largest `𝔔(w⁺)` (should be ≤ 0).
    pub super_max: f64,
    /// Smallest `𝔔(w⁻)` (should be ≥ 0).
    pub sub_min: f64,
    pub hypotheses_hold: bool,
    pub asserted: bool,
    pub pass: bool,
    pub status: String,
}

fn residual_report(name: &str, values: Vec<(f64, f64)>, hypotheses_hold: bool) -> ResidualReport {
    let super_max = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let sub_min = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let signs_ok = super_max <= RESIDUAL_TOLERANCE && sub_min >= -RESIDUAL_TOLERANCE;
    let (pass, status) = if !hypotheses_hold {
        (false, "hypotheses fail; sign not asserted".to_string())
    } else if signs_ok {
        (true, "barrier inequalities hold".to_string())
    } else {
        (false, "barrier inequality violated".to_string())
    };
    ResidualReport {
        barrier: name.to_string(),
        samples: values.len(),
        super_max,
        sub_min,
        hypotheses_hold,
        asserted: hypotheses_hold,
        pass,
        status,
    }
}

/// Applies `eval` at points on inward normal geodesics with depth below `t_max`.
fn collar_residuals(
    field: &DistanceField,
    t_max: f64,
    m: usize,
    k: usize,
    eval: &(dyn Fn(&MetricAt, &DistanceJet) -> (f64, f64) + Sync),
) -> Result<Vec<(f64, f64)>> {
    let pts = field.domain().collar_points(t_max, m, k)?;
    let model = *field.domain().model();
    pts.par_iter()
        .map(|&(x, _, _)| {
            let metric = model.metric_at(x)?;
            let jet = field.jet(x)?;
            Ok(eval(&metric, &jet))
        })
        .collect()
}

/// `±g(d) (+ φ)` with its chart gradient and covariant Hessian.
fn barrier_derivatives(
    jet: &DistanceJet,
    g: [f64; 3],
    sign: f64,
    phi: Option<&SpatialJet>,
) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let mut v = sign * g[0];
    let mut dw = [sign * g[1] * jet.grad[0], sign * g[1] * jet.grad[1]];
    let mut hs = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            hs[i][j] = sign * (g[2] * jet.grad[i] * jet.grad[j] + g[1] * jet.hess[i][j]);
        }
    }
    if let Some(p) = phi {
        v += p.value;
        for i in 0..2 {
            dw[i] += p.grad[i];
            for j in 0..2 {
                hs[i][j] += p.hess[i][j];
            }
        }
    }
    (v, dw, hs)
}

/// Checks `𝔔(w) ≤ 0` and `𝔔(−w) ≥ 0` for the height barrier along inward
/// normal geodesics up to the validated reach.
pub fn verify_height_barrier(
    barrier: &HeightBarrier,
    field: &DistanceField,
    h: &PrescribedH,
    hypotheses_hold: bool,
    m: usize,
    k: usize,
) -> Result<ResidualReport> {
    let n = barrier.n as f64;
    let eval = |metric: &MetricAt, jet: &DistanceJet| {
        let p = barrier.profile(jet.d);
        let g = [p[0] + barrier.boundary_sup, p[1], p[2]];
        let x = metric.point;
        let (v, dw, hs) = barrier_derivatives(jet, g, 1.0, None);
        let sup = quasilinear_operator(metric, dw, hs, n * h.eval(x, v));
        let (v, dw, hs) = barrier_derivatives(jet, g, -1.0, None);
        let sub = quasilinear_operator(metric, dw, hs, n * h.eval(x, v));
        (sup, sub)
    };
    let values = collar_residuals(field, field.reach_tau, m, k, &eval)?;
    Ok(residual_report("height", values, hypotheses_hold))
}

/// Checks `𝔔(ψ∘d + φ) ≤ 0` and `𝔔(−ψ∘d + φ) ≥ 0` on the collar `d < a`.
pub fn verify_gradient_barrier(
    barrier: &GradientBarrier,
    field: &DistanceField,
    h: &PrescribedH,
    data: &BoundaryData,
    hypotheses_hold: bool,
    m: usize,
    k: usize,
) -> Result<ResidualReport> {
    let n = barrier.n as f64;
    let t_max = barrier.a.min(field.reach_tau);
    let eval = |metric: &MetricAt, jet: &DistanceJet| {
        let t = jet.d.max(0.0);
        let g = [barrier.psi(t), barrier.psi_prime(t), barrier.psi_second(t)];
        let x = metric.point;
        let phi = data.jet(metric);
        let (v, dw, hs) = barrier_derivatives(jet, g, 1.0, Some(&phi));
        let sup = quasilinear_operator(metric, dw, hs, n * h.eval(x, v));
        let (v, dw, hs) = barrier_derivatives(jet, g, -1.0, Some(&phi));
        let sub = quasilinear_operator(metric, dw, hs, n * h.eval(x, v));
        (sup, sub)
    };
    let values = collar_residuals(field, t_max, m, k, &eval)?;
    Ok(residual_report("gradient", values, hypotheses_hold))
}
