//! Bounded domains given by closed trigonometric boundary curves, the
//! boundary distance function and its derivatives, and the boundary
//! mean curvature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, Point};

const TWO_PI: f64 = std::f64::consts::TAU;

/// Number of polyline vertices used for scans, winding numbers and crossings.
pub const POLYLINE_SAMPLES: usize = 2048;

/// Two nearest-point candidates whose distances agree this closely make the
/// nearest point non-unique.
pub const UNIQUENESS_TOLERANCE: f64 = 1e-8;

/// Eikonal residual above which a sample is considered off the smooth collar.
pub const EIKONAL_TOLERANCE: f64 = 1e-4;

/// `a0 + Σ_k (cos[k-1] cos(k s) + sin[k-1] sin(k s))` for `s ∈ [0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigSeries {
    pub a0: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TrigSeries {
    pub fn constant(a0: f64) -> Self {
        Self { a0, cos: vec![], sin: vec![] }
    }

    /// Value, first and second derivative at `s`.
    pub fn eval(&self, s: f64) -> [f64; 3] {
        let mut v = [self.a0, 0.0, 0.0];
        let n = self.cos.len().max(self.sin.len());
        for k in 1..=n {
            let a = self.cos.get(k - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(k - 1).copied().unwrap_or(0.0);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let kf = k as f64;
            let (sn, cs) = (kf * s).sin_cos();
            v[0] += a * cs + b * sn;
            v[1] += kf * (-a * sn + b * cs);
            v[2] += -kf * kf * (a * cs + b * sn);
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigCurve {
    pub x: TrigSeries,
    pub y: TrigSeries,
}

/// Derivatives of the boundary curve at one parameter value.
#[derive(Clone, Copy, Debug)]
pub struct CurveJet {
    pub s: f64,
    pub p: Point,
    pub d1: [f64; 2],
    pub d2: [f64; 2],
}

impl TrigCurve {
    pub fn jet(&self, s: f64) -> CurveJet {
        let x = self.x.eval(s);
        let y = self.y.eval(s);
        CurveJet {
            s,
            p: [x[0], y[0]],
            d1: [x[1], y[1]],
            d2: [x[2], y[2]],
        }
    }

    pub fn point(&self, s: f64) -> Point {
        self.jet(s).p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Rotating γ′ by +90° gives the inward normal.
    #[default]
    Ccw,
    Cw,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Ccw => 1.0,
            Orientation::Cw => -1.0,
        }
    }
}

/// Result of a nearest-boundary-point query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NearestPoint {
    pub d: f64,
    pub s: f64,
    pub nearest: Point,
    pub unique: bool,
}

/// A bounded, simply connected domain of a two-dimensional model chart.
#[derive(Clone, Debug)]
pub struct DomainSpec {
    model: ManifoldModel,
    curve: TrigCurve,
    orientation: Orientation,
    polyline: Vec<Point>,
    diameter: f64,
}

fn wrap(s: f64) -> f64 {
    s.rem_euclid(TWO_PI)
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TWO_PI);
    d.min(TWO_PI - d)
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    fn orient(p: Point, q: Point, r: Point) -> f64 {
        (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    }
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

impl DomainSpec {
    pub fn new(model: ManifoldModel, curve: TrigCurve, orientation: Orientation) -> Result<Self> {
        if model.dim() != 2 {
            return Err(Error::InvalidInput(format!(
                "domains live in two-dimensional charts, model has dimension {}",
                model.dim()
            )));
        }
        let n = POLYLINE_SAMPLES;
        let polyline: Vec<Point> = (0..n)
            .map(|i| curve.point(TWO_PI * i as f64 / n as f64))
            .collect();

        for (i, p) in polyline.iter().enumerate() {
            if !model.in_chart(*p) {
                return Err(Error::OutsideChart { x: p[0], y: p[1] });
            }
            let j = curve.jet(TWO_PI * i as f64 / n as f64);
            let speed = (j.d1[0] * j.d1[0] + j.d1[1] * j.d1[1]).sqrt();
            if speed < 1e-10 {
                return Err(Error::DegenerateCurve { s: j.s, speed });
            }
        }

        let start = curve.jet(0.0);
        let end = curve.jet(TWO_PI);
        let gap = (0..2)
            .map(|k| (start.p[k] - end.p[k]).abs().max((start.d1[k] - end.d1[k]).abs()))
            .fold(0.0, f64::max);
        if gap > 1e-10 {
            return Err(Error::InvalidInput(format!("boundary curve does not close (gap {gap:.3e})")));
        }

        // simplicity on a coarser polyline
        let stride = 2;
        let coarse: Vec<Point> = polyline.iter().step_by(stride).copied().collect();
        let m = coarse.len();
        for i in 0..m {
            let (a, b) = (coarse[i], coarse[(i + 1) % m]);
            for j in (i + 2)..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                if segments_cross(a, b, coarse[j], coarse[(j + 1) % m]) {
                    return Err(Error::SelfIntersecting { first: i, second: j });
                }
            }
        }

        let area: f64 = (0..n)
            .map(|i| {
                let p = polyline[i];
                let q = polyline[(i + 1) % n];
                p[0] * q[1] - q[0] * p[1]
            })
            .sum::<f64>()
            * 0.5;
        let detected = if area > 0.0 { Orientation::Ccw } else { Orientation::Cw };
        if detected != orientation {
            return Err(Error::InvalidInput(format!(
                "orientation flag {orientation:?} disagrees with the curve (signed area {area:.6})"
            )));
        }

        let sub: Vec<Point> = polyline.iter().step_by(4).copied().collect();
        let diameter_surrogate = sub
            .par_iter()
            .map(|p| sub.iter().map(|q| model.distance_surrogate(*p, *q)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max);
        let diameter = model.surrogate_to_distance(diameter_surrogate);

        Ok(Self {
            model,
            curve,
            orientation,
            polyline,
            diameter,
        })
    }

    /// Circle of chart radius `radius` centred at `center`.
    pub fn disk(model: ManifoldModel, center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!("disk radius must be positive, got {radius}")));
        }
        let curve = TrigCurve {
            x: TrigSeries { a0: center[0], cos: vec![radius], sin: vec![] },
            y: TrigSeries { a0: center[1], cos: vec![], sin: vec![radius] },
        };
        Self::new(model, curve, Orientation::Ccw)
    }

    /// Hyperbolic geodesic disk of hyperbolic radius `r` centred at the origin.
    pub fn hyperbolic_geodesic_disk(r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidInput(format!("geodesic radius must be positive, got {r}")));
        }
        Self::disk(ManifoldModel::hyperbolic(2), [0.0, 0.0], (0.5 * r).tanh())
    }

    /// Axis-aligned ellipse with chart semi-axes `a` (x) and `b` (y).
    pub fn ellipse(model: ManifoldModel, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidInput("ellipse semi-axes must be positive".into()));
        }
        let curve = TrigCurve {
            x: TrigSeries { a0: 0.0, cos: vec![a], sin: vec![] },
            y: TrigSeries { a0: 0.0, cos: vec![], sin: vec![b] },
        };
        Self::new(model, curve, Orientation::Ccw)
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn curve(&self) -> &TrigCurve {
        &self.curve
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn polyline(&self) -> &[Point] {
        &self.polyline
    }

    /// Geodesic diameter estimated on boundary samples.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn param_step(&self) -> f64 {
        TWO_PI / self.polyline.len() as f64
    }

    pub fn jet(&self, s: f64) -> CurveJet {
        self.curve.jet(s)
    }

    /// Chart bounding box `[xmin, xmax, ymin, ymax]` of the boundary polyline.
    pub fn bounding_box(&self) -> [f64; 4] {
        let mut bb = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in &self.polyline {
            bb[0] = bb[0].min(p[0]);
            bb[1] = bb[1].max(p[0]);
            bb[2] = bb[2].min(p[1]);
            bb[3] = bb[3].max(p[1]);
        }
        bb
    }

    /// Euclidean unit normal in the chart pointing into the domain.
    pub fn inward_chart_normal(&self, s: f64) -> [f64; 2] {
        let j = self.curve.jet(s);
        let len = (j.d1[0] * j.d1[0] + j.d1[1] * j.d1[1]).sqrt();
        let sg = self.orientation.sign();
        [-sg * j.d1[1] / len, sg * j.d1[0] / len]
    }

    /// σ-unit inward normal at `γ(s)`.
    pub fn inward_unit_normal(&self, s: f64) -> [f64; 2] {
        let p = self.curve.point(s);
        let lam = self.model.conformal_factor(&p);
        let n = self.inward_chart_normal(s);
        [n[0] / lam, n[1] / lam]
    }

    /// Inward (geodesic) curvature of the boundary at `γ(s)`, computed from the
    /// covariant acceleration `γ″ + Γ(γ′, γ′)`.
    pub fn inward_mean_curvature(&self, s: f64) -> Result<f64> {
        let j = self.curve.jet(s);
        let speed = (j.d1[0] * j.d1[0] + j.d1[1] * j.d1[1]).sqrt();
        if speed < 1e-10 {
            return Err(Error::DegenerateCurve { s, speed });
        }
        let m = self.model.metric_at(j.p)?;
        let mut acc = j.d2;
        for (k, a) in acc.iter_mut().enumerate() {
            for i in 0..2 {
                for l in 0..2 {
                    *a += m.christoffel[k][i][l] * j.d1[i] * j.d1[l];
                }
            }
        }
        let n = self.inward_unit_normal(s);
        Ok(m.inner(acc, n) / m.inner(j.d1, j.d1))
    }

    /// Winding-number inside test against the boundary polyline.
    pub fn contains(&self, x: Point) -> bool {
        let n = self.polyline.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.polyline[i];
            let b = self.polyline[(i + 1) % n];
            if (a[1] > x[1]) != (b[1] > x[1]) {
                let t = (x[1] - a[1]) / (b[1] - a[1]);
                let xc = a[0] + t * (b[0] - a[0]);
                if x[0] < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Surrogate distance from `x` to `γ(s)` with its first two s-derivatives.
    fn surrogate_jet(&self, x: Point, s: f64) -> [f64; 3] {
        let j = self.curve.jet(s);
        let r = [x[0] - j.p[0], x[1] - j.p[1]];
        let a = r[0] * r[0] + r[1] * r[1];
        let a1 = -2.0 * (r[0] * j.d1[0] + r[1] * j.d1[1]);
        let v2 = j.d1[0] * j.d1[0] + j.d1[1] * j.d1[1];
        let a2 = 2.0 * v2 - 2.0 * (r[0] * j.d2[0] + r[1] * j.d2[1]);
        if !self.model.is_hyperbolic() {
            return [a, a1, a2];
        }
        let c = 1.0 / (1.0 - (x[0] * x[0] + x[1] * x[1]));
        let b = 1.0 - (j.p[0] * j.p[0] + j.p[1] * j.p[1]);
        let b1 = -2.0 * (j.p[0] * j.d1[0] + j.p[1] * j.d1[1]);
        let b2 = -2.0 * v2 - 2.0 * (j.p[0] * j.d2[0] + j.p[1] * j.d2[1]);
        let num = a1 * b - a * b1;
        [
            c * a / b,
            c * num / (b * b),
            c * ((a2 * b - a * b2) / (b * b) - 2.0 * b1 * num / (b * b * b)),
        ]
    }

    /// Local minimisation of the surrogate in `[s0 − hw, s0 + hw]`.
    fn refine(&self, x: Point, s0: f64, hw: f64) -> (f64, f64) {
        let (mut lo, mut hi) = (s0 - hw, s0 + hw);
        let glo = self.surrogate_jet(x, lo)[1];
        let ghi = self.surrogate_jet(x, hi)[1];
        if !(glo < 0.0 && ghi > 0.0) {
            // not bracketed: golden section on the value
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let f = |s: f64| self.surrogate_jet(x, s)[0];
            let (mut a, mut b) = (lo, hi);
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let (mut fc, mut fd) = (f(c), f(d));
            for _ in 0..80 {
                if fc <= fd {
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
            let mut best = (s0, f(s0));
            for s in [a, b, c, d] {
                let v = f(s);
                if v < best.1 {
                    best = (s, v);
                }
            }
            return (wrap(best.0), best.1);
        }
        let mut s = s0;
        for _ in 0..100 {
            let [_, g, h2] = self.surrogate_jet(x, s);
            if g < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let mut next = if h2 > 0.0 { s - g / h2 } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - s).abs() < 1e-15 || hi - lo < 1e-15;
            s = next;
            if done {
                break;
            }
        }
        (wrap(s), self.surrogate_jet(x, s)[0])
    }

    /// Nearest boundary point by coarse scan plus local refinement.
    /// Does not check that `x` lies in the domain.
    pub fn nearest(&self, x: Point) -> NearestPoint {
        let n = self.polyline.len();
        let ds = self.param_step();
        let vals: Vec<f64> = self
            .polyline
            .iter()
            .map(|p| self.model.distance_surrogate(x, *p))
            .collect();
        let mut minima: Vec<usize> = (0..n)
            .filter(|&i| vals[i] <= vals[(i + n - 1) % n] && vals[i] <= vals[(i + 1) % n])
            .collect();
        minima.sort_by(|a, b| vals[*a].total_cmp(&vals[*b]).then(a.cmp(b)));
        let mut picked: Vec<usize> = Vec::new();
        for i in minima {
            let sep_ok = picked.iter().all(|&j| {
                let gap = (i as isize - j as isize).unsigned_abs();
                gap.min(n - gap) > 3
            });
            if sep_ok {
                picked.push(i);
            }
            if picked.len() >= 6 {
                break;
            }
        }
        let refined: Vec<(f64, f64)> = picked
            .iter()
            .map(|&i| self.refine(x, i as f64 * ds, ds))
            .collect();
        let (best_s, best_v) = refined
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("polyline has local minima");
        let d = self.model.surrogate_to_distance(best_v);
        let unique = !refined.iter().any(|&(s, v)| {
            circular_gap(s, best_s) > 3.0 * ds
                && (self.model.surrogate_to_distance(v) - d).abs() < UNIQUENESS_TOLERANCE
        });
        NearestPoint {
            d,
            s: best_s,
            nearest: self.curve.point(best_s),
            unique,
        }
    }

    /// Nearest point by local refinement around a known parameter.
    pub fn nearest_from_hint(&self, x: Point, s_hint: f64) -> NearestPoint {
        let hw = 4.0 * self.param_step();
        let (s, v) = self.refine(x, s_hint, hw);
        NearestPoint {
            d: self.model.surrogate_to_distance(v),
            s,
            nearest: self.curve.point(s),
            unique: true,
        }
    }

    fn signed(&self, x: Point, np: NearestPoint) -> f64 {
        let n = self.inward_chart_normal(np.s);
        let side = (x[0] - np.nearest[0]) * n[0] + (x[1] - np.nearest[1]) * n[1];
        if side >= 0.0 {
            np.d
        } else {
            -np.d
        }
    }

    /// Distance to the boundary, positive inside and negative outside.
    pub fn signed_distance(&self, x: Point) -> f64 {
        self.signed(x, self.nearest(x))
    }

    pub fn signed_distance_from_hint(&self, x: Point, s_hint: f64) -> f64 {
        self.signed(x, self.nearest_from_hint(x, s_hint))
    }

    /// `d(x) = dist(x, ∂Ω)` for `x ∈ Ω`.
    pub fn boundary_distance(&self, x: Point) -> Result<NearestPoint> {
        if !self.model.in_chart(x) {
            return Err(Error::OutsideChart { x: x[0], y: x[1] });
        }
        if !self.contains(x) {
            return Err(Error::OutsideDomain { x: x[0], y: x[1] });
        }
        Ok(self.nearest(x))
    }

    /// `m` equispaced boundary parameters with their points.
    pub fn boundary_samples(&self, m: usize) -> Vec<(f64, Point)> {
        (0..m)
            .map(|i| {
                let s = TWO_PI * i as f64 / m as f64;
                (s, self.curve.point(s))
            })
            .collect()
    }

    /// Points `γ_y(t)` on inward normal geodesics for `m` boundary samples and
    /// `k` depths in `(0, t_max)`. Returns `(point, s, t)`.
    pub fn collar_points(&self, t_max: f64, m: usize, k: usize) -> Result<Vec<(Point, f64, f64)>> {
        let mut out = Vec::with_capacity(m * k);
        for (s, y) in self.boundary_samples(m) {
            let n = self.inward_unit_normal(s);
            for i in 0..k {
                let t = t_max * (i as f64 + 0.5) / k as f64;
                out.push((self.model.normal_geodesic(y, n, t)?, s, t));
            }
        }
        Ok(out)
    }

    /// Largest chart extent of the boundary.
    pub fn scale(&self) -> f64 {
        let bb = self.bounding_box();
        (bb[1] - bb[0]).max(bb[3] - bb[2])
    }

    /// Interior grid at spacing `scale/divisions` together with `boundary`
    /// boundary samples.
    pub fn closure_samples(&self, divisions: usize, boundary: usize) -> Vec<Point> {
        let mut pts = self.interior_grid(self.scale() / divisions as f64);
        pts.extend(self.boundary_samples(boundary).into_iter().map(|(_, p)| p));
        pts
    }

    /// Maximum of `f` over `points`, optionally refined by a compass search
    /// (restricted to the domain) from the four best samples.
    pub fn sampled_sup(&self, f: &(dyn Fn(Point) -> f64 + Sync), points: &[Point], refine: bool) -> f64 {
        let vals: Vec<f64> = points.par_iter().map(|&x| f(x)).collect();
        let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !refine {
            return best;
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|a, b| vals[*b].total_cmp(&vals[*a]));
        let step = self.scale() / 32.0;
        order
            .iter()
            .take(4)
            .map(|&i| self.compass_max(f, points[i], vals[i], step))
            .fold(best, f64::max)
    }

    fn compass_max(&self, f: &(dyn Fn(Point) -> f64 + Sync), start: Point, value: f64, step: f64) -> f64 {
        let (mut x, mut v, mut h) = (start, value, step);
        let min_step = step * 1e-6;
        while h > min_step {
            let mut moved = false;
            for d in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
                let p = [x[0] + h * d[0], x[1] + h * d[1]];
                if !self.contains(p) {
                    continue;
                }
                let fp = f(p);
                if fp > v {
                    x = p;
                    v = fp;
                    moved = true;
                    break;
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        v
    }

    /// Chart grid nodes at integer multiples of `h` that lie inside the domain.
    pub fn interior_grid(&self, h: f64) -> Vec<Point> {
        let bb = self.bounding_box();
        let i0 = (bb[0] / h).floor() as i64;
        let i1 = (bb[1] / h).ceil() as i64;
        let j0 = (bb[2] / h).floor() as i64;
        let j1 = (bb[3] / h).ceil() as i64;
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                let p = [i as f64 * h, j as f64 * h];
                if self.contains(p) {
                    out.push(p);
                }
            }
        }
        out
    }
}

/// Value and metric-aware derivatives of `d` at a point.
#[derive(Clone, Copy, Debug)]
pub struct DistanceJet {
    pub d: f64,
    pub s: f64,
    pub unique: bool,
    /// Chart partials ∂_i d.
    pub grad: [f64; 2],
    /// Covariant Hessian ∇²_ij d.
    pub hess: [[f64; 2]; 2],
    pub grad_norm: f64,
    pub hess_norm: f64,
    pub laplacian: f64,
}

/// Per-sample diagnostics collected while building a [`DistanceField`].
#[derive(Clone, Copy, Debug)]
pub struct FieldSample {
    pub x: Point,
    pub d: f64,
    pub unique: bool,
    pub eikonal_residual: f64,
    pub hess_norm: f64,
}

/// The boundary distance function on a validated collar.
///
/// `reach_tau` is the largest distance up to which all sampled points have a
/// unique nearest boundary point and satisfy the eikonal equation;
/// `collar_tau = reach_tau / 2` is the collar on which `d_c2_norm` (the
/// C²-norm of `d`) is measured.
#[derive(Clone, Debug)]
pub struct DistanceField {
    domain: DomainSpec,
    h: f64,
    fd_grad: f64,
    fd_hess: f64,
    pub samples: Vec<FieldSample>,
    pub reach_tau: f64,
    pub collar_tau: f64,
    pub d_c2_norm: f64,
    pub max_eikonal_residual: f64,
}

impl DistanceField {
    pub fn build(domain: &DomainSpec, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(format!("grid resolution must be positive, got {h}")));
        }
        let bb = domain.bounding_box();
        let scale = (bb[1] - bb[0]).max(bb[3] - bb[2]);
        let mut field = Self {
            domain: domain.clone(),
            h,
            fd_grad: 1e-6 * scale,
            fd_hess: 1e-4 * scale,
            samples: Vec::new(),
            reach_tau: 0.0,
            collar_tau: 0.0,
            d_c2_norm: 0.0,
            max_eikonal_residual: 0.0,
        };
        let nodes = domain.interior_grid(h);
        if nodes.is_empty() {
            return Err(Error::GridTooCoarse(format!("no grid node of spacing {h} inside the domain")));
        }
        let samples: Vec<FieldSample> = nodes
            .par_iter()
            .map(|&x| {
                let jet = field.jet(x)?;
                Ok(FieldSample {
                    x,
                    d: jet.d,
                    unique: jet.unique,
                    eikonal_residual: (jet.grad_norm - 1.0).abs(),
                    hess_norm: jet.hess_norm,
                })
            })
            .collect::<Result<_>>()?;

        let max_d = samples.iter().map(|s| s.d).fold(0.0, f64::max);
        let flagged_min = samples
            .iter()
            .filter(|s| !s.unique || s.eikonal_residual > EIKONAL_TOLERANCE)
            .map(|s| s.d)
            .fold(f64::INFINITY, f64::min);
        let reach = if flagged_min.is_finite() { (flagged_min - h).max(0.0) } else { max_d };
        if reach <= 0.0 {
            return Err(Error::GridTooCoarse("could not validate a collar of positive width".into()));
        }
        let collar = 0.5 * reach;

        // boundary itself: d = 0, |∇d| = 1, |Hess d| = |curvature|
        let boundary_hess = domain
            .boundary_samples(256)
            .iter()
            .map(|(s, _)| domain.inward_mean_curvature(*s).map(f64::abs))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let mut c2 = 1.0 + boundary_hess;
        let mut eik: f64 = 0.0;
        for s in samples.iter().filter(|s| s.d <= collar) {
            c2 = c2.max(s.d + 1.0 + s.eikonal_residual + s.hess_norm);
            eik = eik.max(s.eikonal_residual);
        }
        field.samples = samples;
        field.reach_tau = reach;
        field.collar_tau = collar;
        field.d_c2_norm = c2;
        field.max_eikonal_residual = eik;
        Ok(field)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn resolution(&self) -> f64 {
        self.h
    }

    /// Distance and finite-difference derivatives at `x` (no collar check).
    pub fn jet(&self, x: Point) -> Result<DistanceJet> {
        let model = self.domain.model();
        let metric = model.metric_at(x)?;
        let base = self.domain.nearest(x);
        let sd = |p: Point| self.domain.signed_distance_from_hint(p, base.s);
        let d0 = self.domain.signed(x, base);

        let e = self.fd_grad;
        let grad = [
            (sd([x[0] + e, x[1]]) - sd([x[0] - e, x[1]])) / (2.0 * e),
            (sd([x[0], x[1] + e]) - sd([x[0], x[1] - e])) / (2.0 * e),
        ];
        let k = self.fd_hess;
        let dxx = (sd([x[0] + k, x[1]]) - 2.0 * d0 + sd([x[0] - k, x[1]])) / (k * k);
        let dyy = (sd([x[0], x[1] + k]) - 2.0 * d0 + sd([x[0], x[1] - k])) / (k * k);
        let dxy = (sd([x[0] + k, x[1] + k]) - sd([x[0] + k, x[1] - k]) - sd([x[0] - k, x[1] + k])
            + sd([x[0] - k, x[1] - k]))
            / (4.0 * k * k);
        let hess = metric.covariant_hessian(grad, [[dxx, dxy], [dxy, dyy]]);
        Ok(DistanceJet {
            d: d0,
            s: base.s,
            unique: base.unique,
            grad,
            hess,
            grad_norm: metric.covector_norm(grad),
            hess_norm: metric.tensor_norm(hess),
            laplacian: metric.trace(hess),
        })
    }

    /// Laplace–Beltrami of `d` at a collar point.
    pub fn laplacian_of_distance(&self, x: Point) -> Result<f64> {
        let jet = self.jet(x)?;
        if !(jet.d >= 0.0 && jet.d < self.reach_tau) {
            return Err(Error::OutsideCollar {
                x: x[0],
                y: x[1],
                d: jet.d,
                limit: self.reach_tau,
            });
        }
        Ok(jet.laplacian)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_disk() -> DomainSpec {
        DomainSpec::disk(ManifoldModel::euclidean(2), [0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn trig_series_derivatives_match_finite_differences() {
        let t = TrigSeries { a0: 0.3, cos: vec![1.0, 0.0, 0.2], sin: vec![0.1, -0.3] };
        let s = 0.77;
        let e = 1e-5;
        let v = t.eval(s);
        let vp = t.eval(s + e);
        let vm = t.eval(s - e);
        assert_relative_eq!(v[1], (vp[0] - vm[0]) / (2.0 * e), epsilon = 1e-8);
        assert_relative_eq!(v[2], (vp[1] - vm[1]) / (2.0 * e), epsilon = 1e-8);
    }

    #[test]
    fn distance_examples() {
        let d = unit_disk();
        let c = d.boundary_distance([0.0, 0.0]).unwrap();
        assert_relative_eq!(c.d, 1.0, epsilon = 1e-14);
        assert!(!c.unique);
        let p = d.boundary_distance([0.5, 0.0]).unwrap();
        assert_relative_eq!(p.d, 0.5, epsilon = 1e-14);
        assert!(p.unique);
        assert_relative_eq!(p.nearest[0], 1.0, epsilon = 1e-12);
        assert!(p.nearest[1].abs() < 1e-12);
        assert!(matches!(d.boundary_distance([1.5, 0.0]), Err(Error::OutsideDomain { .. })));

        let hd = DomainSpec::hyperbolic_geodesic_disk(1.0).unwrap();
        let o = hd.boundary_distance([0.0, 0.0]).unwrap();
        assert_relative_eq!(o.d, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn curvature_examples() {
        let d2 = DomainSpec::disk(ManifoldModel::euclidean(2), [0.0, 0.0], 2.0).unwrap();
        for s in [0.0, 1.0, 4.0] {
            assert_relative_eq!(d2.inward_mean_curvature(s).unwrap(), 0.5, epsilon = 1e-14);
        }
        // ellipse with semi-axes (1, b): curvature b at the top
        let flat = DomainSpec::ellipse(ManifoldModel::euclidean(2), 1.0, 1e-3).unwrap();
        let top = flat.inward_mean_curvature(std::f64::consts::FRAC_PI_2).unwrap();
        assert_relative_eq!(top, 1e-3, max_relative = 1e-10);
        let hd = DomainSpec::hyperbolic_geodesic_disk(1.0).unwrap();
        let k = hd.inward_mean_curvature(0.3).unwrap();
        assert_relative_eq!(k, 1.0 / 1f64.tanh(), max_relative = 1e-12);
    }

    #[test]
    fn conformal_curvature_formula_agrees_for_off_center_circle() {
        // k_g = e^{-f}(k_E − ∂_ν f) with ν the inward Euclidean normal.
        let m = ManifoldModel::hyperbolic(2);
        let dom = DomainSpec::disk(m, [0.2, -0.1], 0.3).unwrap();
        for s in [0.0, 1.3, 2.9, 5.0] {
            let p = dom.jet(s).p;
            let r2 = p[0] * p[0] + p[1] * p[1];
            let nu = dom.inward_chart_normal(s);
            let df = [2.0 * p[0] / (1.0 - r2), 2.0 * p[1] / (1.0 - r2)];
            let expect = (1.0 - r2) / 2.0 * (1.0 / 0.3 - (df[0] * nu[0] + df[1] * nu[1]));
            assert_relative_eq!(dom.inward_mean_curvature(s).unwrap(), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_curves() {
        let figure_eight = TrigCurve {
            x: TrigSeries { a0: 0.0, cos: vec![], sin: vec![1.0] },
            y: TrigSeries { a0: 0.0, cos: vec![], sin: vec![0.0, 0.5] },
        };
        assert!(matches!(
            DomainSpec::new(ManifoldModel::euclidean(2), figure_eight, Orientation::Ccw),
            Err(Error::SelfIntersecting { .. }) | Err(Error::InvalidInput(_))
        ));
        let c = unit_disk().curve().clone();
        assert!(DomainSpec::new(ManifoldModel::euclidean(2), c.clone(), Orientation::Cw).is_err());
        assert!(DomainSpec::new(ManifoldModel::hyperbolic(2), c, Orientation::Ccw).is_err());
    }

    #[test]
    fn distance_field_on_unit_disk() {
        let f = DistanceField::build(&unit_disk(), 1.0 / 32.0).unwrap();
        assert!(f.reach_tau > 0.9 && f.reach_tau <= 1.0, "reach {}", f.reach_tau);
        assert!(f.max_eikonal_residual < 1e-6);
        let bound = 1.0 + 1.0 + 1.0 / (1.0 - f.collar_tau);
        assert!(f.d_c2_norm <= bound + 1e-6, "{} vs {}", f.d_c2_norm, bound);
        let lap = f.laplacian_of_distance([0.75, 0.0]).unwrap();
        assert_relative_eq!(lap, -1.0 / 0.75, epsilon = 1e-5);
    }

    #[test]
    fn signed_distance_is_negative_outside() {
        let d = unit_disk();
        assert_relative_eq!(d.signed_distance([1.25, 0.0]), -0.25, epsilon = 1e-12);
        assert_relative_eq!(d.signed_distance([0.0, -0.6]), 0.4, epsilon = 1e-12);
    }
}
