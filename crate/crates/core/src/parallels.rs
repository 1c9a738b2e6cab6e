//! Mean curvature of parallel hypersurfaces: the Riccati comparison along
//! normal geodesics and the closed-form evolution in hyperbolic space.

use std::sync::Arc;

use serde::Serialize;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tolerance of the comparison assertions.
pub const COMPARISON_TOLERANCE: f64 = 1e-9;

/// Comparison setup along one normal geodesic `γ_y`.
#[derive(Clone)]
pub struct RiccatiProblem {
    pub n: usize,
    /// Comparison function `h(t)`.
    pub h: ScalarFn,
    pub h_prime: ScalarFn,
    /// `Ricc_{γ(t)}(γ′(t))`
    pub ricc: ScalarFn,
    /// Mean curvature of the initial hypersurface at `y`.
    pub h_initial: f64,
    pub t_max: f64,
    pub step: f64,
}

impl std::fmt::Debug for RiccatiProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RiccatiProblem")
            .field("n", &self.n)
            .field("h_initial", &self.h_initial)
            .field("t_max", &self.t_max)
            .field("step", &self.step)
            .finish_non_exhaustive()
    }
}

impl RiccatiProblem {
    /// Constant Ricci curvature and constant comparison function.
    pub fn constant(n: usize, h: f64, ricc: f64, h_initial: f64, t_max: f64, step: f64) -> Self {
        Self {
            n,
            h: Arc::new(move |_| h),
            h_prime: Arc::new(|_| 0.0),
            ricc: Arc::new(move |_| ricc),
            h_initial,
            t_max,
            step,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParallelTrajectory {
    pub t: Vec<f64>,
    pub curvature: Vec<f64>,
    /// First time the curvature magnitude exceeds `1/step`.
    pub blowup_t: Option<f64>,
}

/// RK4 integration of `ℋ′ = ricc(t)/(n−1) + ℋ²` from `ℋ(0) = h_initial`.
pub fn integrate_parallel_mean_curvature(p: &RiccatiProblem) -> Result<ParallelTrajectory> {
    if !(p.step > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {}", p.step)));
    }
    if !(p.t_max > 0.0) {
        return Err(Error::InvalidInput(format!("t_max must be positive, got {}", p.t_max)));
    }
    if p.n < 2 {
        return Err(Error::InvalidInput("dimension must be at least 2".into()));
    }
    let nm1 = (p.n - 1) as f64;
    let f = |t: f64, y: f64| (p.ricc)(t) / nm1 + y * y;
    let limit = 1.0 / p.step;
    let steps = (p.t_max / p.step).ceil() as usize;

    let mut t = vec![0.0];
    let mut curv = vec![p.h_initial];
    let mut blowup_t = None;
    let mut y = p.h_initial;
    for i in 0..steps {
        let t0 = i as f64 * p.step;
        let hs = p.step.min(p.t_max - t0);
        let k1 = f(t0, y);
        let k2 = f(t0 + 0.5 * hs, y + 0.5 * hs * k1);
        let k3 = f(t0 + 0.5 * hs, y + 0.5 * hs * k2);
        let k4 = f(t0 + hs, y + hs * k3);
        y += hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let t1 = t0 + hs;
        if !y.is_finite() || y.abs() > limit {
            blowup_t = Some(t1);
            break;
        }
        t.push(t1);
        curv.push(y);
    }
    Ok(ParallelTrajectory { t, curvature: curv, blowup_t })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// `h_initial − |h(0)|`
    pub initial_margin: f64,
    /// `min_t ricc(t) − (n−1)(|h′(t)| − h(t)²)`
    pub riccati_margin: f64,
    pub hypotheses_hold: bool,
    /// `min_i ℋ(t_i) − |h(t_i)|`; only meaningful when asserted.
    pub bound_margin: f64,
    /// `min_i ℋ(t_{i+1}) − ℋ(t_i)`
    pub monotone_margin: f64,
    /// Conclusions were checked (hypotheses held).
    pub asserted: bool,
    pub pass: bool,
    pub status: String,
}

/// Checks the comparison hypotheses and, when they hold, that `|h| ≤ ℋ` and
/// that `ℋ` does not decrease along the trajectory.
pub fn verify_comparison(p: &RiccatiProblem, traj: &ParallelTrajectory) -> ComparisonReport {
    let nm1 = (p.n - 1) as f64;
    let initial_margin = p.h_initial - (p.h)(0.0).abs();
    let riccati_margin = traj
        .t
        .iter()
        .map(|&t| {
            let h = (p.h)(t);
            (p.ricc)(t) - nm1 * ((p.h_prime)(t).abs() - h * h)
        })
        .fold(f64::INFINITY, f64::min);
    let hypotheses_hold = initial_margin >= -1e-12 && riccati_margin >= -1e-12;

    let bound_margin = traj
        .t
        .iter()
        .zip(&traj.curvature)
        .map(|(&t, &c)| c - (p.h)(t).abs())
        .fold(f64::INFINITY, f64::min);
    let monotone_margin = traj
        .curvature
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);

    if !hypotheses_hold {
        return ComparisonReport {
            initial_margin,
            riccati_margin,
            hypotheses_hold,
            bound_margin,
            monotone_margin,
            asserted: false,
            pass: false,
            status: "hypotheses violated; conclusion not asserted".into(),
        };
    }
    let pass = bound_margin >= -COMPARISON_TOLERANCE && monotone_margin >= -COMPARISON_TOLERANCE;
    ComparisonReport {
        initial_margin,
        riccati_margin,
        hypotheses_hold,
        bound_margin,
        monotone_margin,
        asserted: true,
        pass,
        status: if pass { "comparison holds".into() } else { "comparison violated".into() },
    }
}

/// Time at which a principal curvature `λ₀ > 1` blows up in hyperbolic space.
pub fn focal_time(lambda0: f64) -> Option<f64> {
    (lambda0 > 1.0).then(|| (1.0 / lambda0).atanh())
}

fn focal_check(lambda0: f64, t: f64) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidInput(format!("t must be finite and >= 0, got {t}")));
    }
    if let Some(tc) = focal_time(lambda0) {
        if t >= tc {
            return Err(Error::FocalPoint { t_critical: tc });
        }
    }
    Ok(1.0 - lambda0 * t.tanh())
}

/// Principal curvature at distance `t` of a hypersurface with principal
/// curvature `λ₀` in hyperbolic space: `(λ₀ − tanh t)/(1 − λ₀ tanh t)`.
pub fn hyperbolic_parallel_curvature(lambda0: f64, t: f64) -> Result<f64> {
    let den = focal_check(lambda0, t)?;
    Ok((lambda0 - t.tanh()) / den)
}

/// `d/dt` of [`hyperbolic_parallel_curvature`]:
/// `sech²t (λ₀² − 1)/(1 − λ₀ tanh t)²`.
pub fn hyperbolic_parallel_derivative(lambda0: f64, t: f64) -> Result<f64> {
    let den = focal_check(lambda0, t)?;
    let sech2 = 1.0 / t.cosh().powi(2);
    Ok(sech2 * (lambda0 * lambda0 - 1.0) / (den * den))
}

/// `sup_{t∈[0,T]} |λ′(t)|` for a single principal curvature.
fn sup_derivative(lambda0: f64, collar: f64) -> Result<f64> {
    // |λ′| as a function of u = tanh t has its only critical point at u = λ₀
    let mut ts: Vec<f64> = (0..=64).map(|i| collar * i as f64 / 64.0).collect();
    if lambda0 > 0.0 && lambda0 < collar.tanh() {
        ts.push(lambda0.atanh());
    }
    let mut sup: f64 = 0.0;
    for t in ts {
        sup = sup.max(hyperbolic_parallel_derivative(lambda0, t)?.abs());
    }
    Ok(sup)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KappaReport {
    pub kappa: f64,
    /// Collar actually used (shrunk below any focal point).
    pub collar: f64,
    pub requested_collar: f64,
    pub shrunk: bool,
}

/// Lipschitz constant of the parallel mean curvature across a collar of a
/// domain in the hyperbolic plane.
pub fn kappa_for_domain(domain: &DomainSpec, collar: f64, boundary_samples: usize) -> Result<KappaReport> {
    if !domain.model().is_hyperbolic() {
        return Err(Error::InvalidInput("the parallel-curvature constant is defined for the hyperbolic model".into()));
    }
    if !(collar > 0.0) || !collar.is_finite() {
        return Err(Error::InvalidInput(format!("collar width must be positive, got {collar}")));
    }
    let curvatures = domain
        .boundary_samples(boundary_samples.max(16))
        .iter()
        .map(|(s, _)| domain.inward_mean_curvature(*s))
        .collect::<Result<Vec<_>>>()?;
    let focal = curvatures
        .iter()
        .filter_map(|&k| focal_time(k))
        .fold(f64::INFINITY, f64::min);
    let used = if focal <= collar { 0.9 * focal } else { collar };
    let mut kappa: f64 = 0.0;
    for &k in &curvatures {
        kappa = kappa.max(sup_derivative(k, used)?);
    }
    Ok(KappaReport {
        kappa,
        collar: used,
        requested_collar: collar,
        shrunk: used < collar,
    })
}

/// Same constant for a single principal curvature value.
pub fn kappa_for_curvature(lambda0: f64, collar: f64) -> Result<f64> {
    sup_derivative(lambda0, collar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_blowup_near_one() {
        let p = RiccatiProblem::constant(2, 0.4, 0.0, 1.0, 2.0, 1e-4);
        let tr = integrate_parallel_mean_curvature(&p).unwrap();
        let tb = tr.blowup_t.unwrap();
        assert!((tb - 1.0).abs() < 1e-3, "{tb}");
        for (t, c) in tr.t.iter().zip(&tr.curvature).take(5000) {
            assert_relative_eq!(*c, 1.0 / (1.0 - t), max_relative = 1e-10);
        }
    }

    #[test]
    fn hyperbolic_coth_solution() {
        let p = RiccatiProblem::constant(2, 0.0, -1.0, 1f64.tanh().recip(), 0.8, 1e-4);
        let tr = integrate_parallel_mean_curvature(&p).unwrap();
        assert!(tr.blowup_t.is_none());
        let (t, c) = (tr.t.last().unwrap(), tr.curvature.last().unwrap());
        assert_relative_eq!(*c, (1.0 - t).tanh().recip(), max_relative = 1e-9);
    }

    #[test]
    fn comparison_examples() {
        let p = RiccatiProblem::constant(2, 0.4, 0.0, 1.0, 0.5, 1e-4);
        let r = verify_comparison(&p, &integrate_parallel_mean_curvature(&p).unwrap());
        assert!(r.asserted && r.pass);

        let p = RiccatiProblem::constant(2, 0.0, 0.0, 0.0, 0.5, 1e-3);
        let r = verify_comparison(&p, &integrate_parallel_mean_curvature(&p).unwrap());
        assert!(r.pass);
        assert_eq!(r.bound_margin, 0.0);

        let p = RiccatiProblem {
            h: Arc::new(|t| 0.5 * (1.0 + t)),
            h_prime: Arc::new(|_| 0.5),
            ..RiccatiProblem::constant(2, 0.0, 0.0, 1.0, 0.5, 1e-3)
        };
        let r = verify_comparison(&p, &integrate_parallel_mean_curvature(&p).unwrap());
        assert!(!r.hypotheses_hold && !r.asserted);
        assert_eq!(r.status, "hypotheses violated; conclusion not asserted");
    }

    #[test]
    fn closed_form_examples() {
        assert_relative_eq!(hyperbolic_parallel_curvature(1.0, 3.7).unwrap(), 1.0, epsilon = 1e-15);
        let r: f64 = 1.3;
        for t in [0.0, 0.4, 1.0] {
            assert_relative_eq!(
                hyperbolic_parallel_curvature(r.tanh().recip(), t).unwrap(),
                (r - t).tanh().recip(),
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(hyperbolic_parallel_curvature(2.0, 0.25f64.atanh()).unwrap(), 3.5, epsilon = 1e-12);
        assert!(matches!(
            hyperbolic_parallel_curvature(2.0, 0.6),
            Err(Error::FocalPoint { t_critical }) if (t_critical - 0.5f64.atanh()).abs() < 1e-15
        ));
        assert_eq!(hyperbolic_parallel_derivative(1.0, 2.0).unwrap(), 0.0);
        assert_relative_eq!(hyperbolic_parallel_derivative(0.0, 0.0).unwrap(), -1.0);
        assert_relative_eq!(hyperbolic_parallel_derivative(2.0, 0.0).unwrap(), 3.0);
    }

    #[test]
    fn kappa_examples() {
        let d = DomainSpec::hyperbolic_geodesic_disk(1.0).unwrap();
        let k = kappa_for_domain(&d, 0.25, 64).unwrap();
        let expect = 1.0 / 0.75f64.sinh().powi(2);
        assert_relative_eq!(k.kappa, expect, max_relative = 1e-9);
        assert!(!k.shrunk);
        assert_eq!(kappa_for_curvature(1.0, 0.5).unwrap(), 0.0);
        // |λ′| = 1 − λ² grows on [0, 0.1] for λ₀ = 0.5
        let k = kappa_for_curvature(0.5, 0.1).unwrap();
        let lam = hyperbolic_parallel_curvature(0.5, 0.1).unwrap();
        assert_relative_eq!(k, 1.0 - lam * lam, max_relative = 1e-12);
    }
}
