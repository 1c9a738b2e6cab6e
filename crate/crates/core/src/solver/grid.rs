//! Cartesian grid over the chart with Shortley–Weller arms cut at the
//! curved boundary.

use rayon::prelude::*;
use serde::Serialize;

use crate::barriers::BoundaryData;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Arms shorter than this fraction of a grid step turn the node into a
/// Dirichlet node carrying the boundary value at its own position.
pub const MIN_ARM_FRACTION: f64 = 1e-3;

/// Lattice directions `(+e, −e)` for the x, y, diagonal and antidiagonal lines.
pub const LINES: [[i64; 2]; 4] = [[1, 0], [0, 1], [1, 1], [1, -1]];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArmEnd {
    /// Unknown index of the neighbouring node.
    Unknown(usize),
    /// Prescribed boundary value `φ` (scaled by τ at assembly time).
    Fixed(f64),
}

/// One arm of a node's stencil: `frac ∈ (0, 1]` of the lattice step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arm {
    pub frac: f64,
    pub end: ArmEnd,
    /// Chart point at the arm end.
    pub point: Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Interior,
    /// At least one arm is cut by the boundary.
    BoundaryAdjacent,
    /// Within `MIN_ARM_FRACTION·h` of the boundary; value imposed.
    Dirichlet,
}

#[derive(Clone, Debug)]
pub struct GridNode {
    pub ij: [i64; 2],
    pub x: Point,
    pub kind: NodeKind,
    pub unknown: Option<usize>,
    /// `φ` at the node (used for Dirichlet nodes).
    pub phi: f64,
}

/// Stencil data of one unknown: arms `[+L, −L]` for each of [`LINES`].
#[derive(Clone, Debug)]
pub struct UnknownStencil {
    pub node: usize,
    pub x: Point,
    pub arms: [[Arm; 2]; 4],
    pub boundary_adjacent: bool,
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub h: f64,
    pub nodes: Vec<GridNode>,
    pub unknowns: Vec<UnknownStencil>,
}

/// Crossing of the segment `x + t·v`, `t ∈ (0, 1]`, with the boundary curve.
fn crossing(domain: &DomainSpec, x: Point, v: [f64; 2]) -> Option<(f64, Point)> {
    let poly = domain.polyline();
    let n = poly.len();
    let mut best: Option<(f64, usize, f64)> = None;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let e = [b[0] - a[0], b[1] - a[1]];
        let den = v[0] * e[1] - v[1] * e[0];
        if den.abs() < 1e-300 {
            continue;
        }
        let r = [a[0] - x[0], a[1] - x[1]];
        let t = (r[0] * e[1] - r[1] * e[0]) / den;
        let u = (r[0] * v[1] - r[1] * v[0]) / den;
        if (0.0..=1.0).contains(&u) && t > 0.0 && t <= 1.0 + 1e-12 && best.is_none_or(|bb| t < bb.0) {
            best = Some((t, i, u));
        }
    }
    let (mut t, i, u) = best?;
    let ds = domain.param_step();
    let mut s = (i as f64 + u) * ds;
    let (t_poly, s_poly) = (t, s);
    // Newton on γ(s) − x − t v = 0
    let mut ok = false;
    for _ in 0..30 {
        let j = domain.jet(s);
        let f = [j.p[0] - x[0] - t * v[0], j.p[1] - x[1] - t * v[1]];
        if f[0].abs().max(f[1].abs()) < 1e-15 {
            ok = true;
            break;
        }
        // [γ′  −v] [δs δt]ᵀ = −f
        let det = j.d1[0] * (-v[1]) - (-v[0]) * j.d1[1];
        if det.abs() < 1e-300 {
            break;
        }
        let dsn = (-f[0] * (-v[1]) + v[0] * (-f[1])) / det;
        let dtn = (j.d1[0] * (-f[1]) - j.d1[1] * (-f[0])) / det;
        s += dsn;
        t += dtn;
        if dsn.abs() < 1e-16 && dtn.abs() < 1e-16 {
            ok = true;
            break;
        }
    }
    if !ok || !(t > 0.0 && t <= 1.0 + 1e-9) || (s - s_poly).abs() > 4.0 * ds {
        t = t_poly;
        s = s_poly;
    }
    let t = t.min(1.0);
    let p = domain.jet(s).p;
    Some((t, p))
}

impl Grid {
    pub fn build(domain: &DomainSpec, data: &BoundaryData, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {h}")));
        }
        let bb = domain.bounding_box();
        let i0 = (bb[0] / h).floor() as i64 - 1;
        let i1 = (bb[1] / h).ceil() as i64 + 1;
        let j0 = (bb[2] / h).floor() as i64 - 1;
        let j1 = (bb[3] / h).ceil() as i64 + 1;
        let w = (i1 - i0 + 1) as usize;
        let ht = (j1 - j0 + 1) as usize;
        let at = |i: i64, j: i64| (j - j0) as usize * w + (i - i0) as usize;

        let inside: Vec<bool> = (0..w * ht)
            .into_par_iter()
            .map(|k| {
                let i = i0 + (k % w) as i64;
                let j = j0 + (k / w) as i64;
                domain.contains([i as f64 * h, j as f64 * h])
            })
            .collect();

        struct Raw {
            ij: [i64; 2],
            x: Point,
            arms: [[(f64, Option<usize>, Point); 2]; 4],
            cut: bool,
            dirichlet: bool,
        }
        let cells: Vec<usize> = (0..w * ht).filter(|&k| inside[k]).collect();
        let raw: Vec<Raw> = cells
            .par_iter()
            .map(|&k| {
                let i = i0 + (k % w) as i64;
                let j = j0 + (k / w) as i64;
                let x = [i as f64 * h, j as f64 * h];
                let mut arms = [[(1.0, None, x); 2]; 4];
                let mut cut = false;
                let mut dirichlet = false;
                for (l, dir) in LINES.iter().enumerate() {
                    for (side, sg) in [1i64, -1].into_iter().enumerate() {
                        let (di, dj) = (sg * dir[0], sg * dir[1]);
                        let (ni, nj) = (i + di, j + dj);
                        let nb = [ni as f64 * h, nj as f64 * h];
                        if inside[at(ni, nj)] {
                            arms[l][side] = (1.0, Some(at(ni, nj)), nb);
                        } else {
                            cut = true;
                            let v = [di as f64 * h, dj as f64 * h];
                            let (t, p) = crossing(domain, x, v).unwrap_or((1.0, nb));
                            if t < MIN_ARM_FRACTION {
                                dirichlet = true;
                            }
                            arms[l][side] = (t, None, p);
                        }
                    }
                }
                Raw { ij: [i, j], x, arms, cut, dirichlet }
            })
            .collect();

        let mut cell_to_node = vec![usize::MAX; w * ht];
        for (n, &k) in cells.iter().enumerate() {
            cell_to_node[k] = n;
        }
        let mut nodes = Vec::with_capacity(raw.len());
        let mut next = 0;
        for r in &raw {
            let kind = if r.dirichlet {
                NodeKind::Dirichlet
            } else if r.cut {
                NodeKind::BoundaryAdjacent
            } else {
                NodeKind::Interior
            };
            let unknown = (kind != NodeKind::Dirichlet).then(|| {
                next += 1;
                next - 1
            });
            nodes.push(GridNode {
                ij: r.ij,
                x: r.x,
                kind,
                unknown,
                phi: data.eval(r.x),
            });
        }
        if next < 4 {
            return Err(Error::GridTooCoarse(format!("only {next} unknowns at spacing {h}")));
        }

        let mut unknowns = Vec::with_capacity(next);
        for (n, r) in raw.iter().enumerate() {
            if nodes[n].unknown.is_none() {
                continue;
            }
            let mut arms = [[Arm { frac: 1.0, end: ArmEnd::Fixed(0.0), point: r.x }; 2]; 4];
            let mut boundary_adjacent = false;
            for l in 0..4 {
                for side in 0..2 {
                    let (frac, cell, p) = r.arms[l][side];
                    let end = match cell {
                        Some(c) => {
                            let nb = &nodes[cell_to_node[c]];
                            match nb.unknown {
                                Some(u) => ArmEnd::Unknown(u),
                                None => {
                                    boundary_adjacent = true;
                                    ArmEnd::Fixed(nb.phi)
                                }
                            }
                        }
                        None => {
                            boundary_adjacent = true;
                            ArmEnd::Fixed(data.eval(p))
                        }
                    };
                    arms[l][side] = Arm { frac, end, point: p };
                }
            }
            unknowns.push(UnknownStencil { node: n, x: r.x, arms, boundary_adjacent });
        }
        for u in &unknowns {
            if u.boundary_adjacent {
                nodes[u.node].kind = NodeKind::BoundaryAdjacent;
            }
        }
        Ok(Self { h, nodes, unknowns })
    }

    pub fn n_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    /// Node values `τφ` at Dirichlet nodes and `u` elsewhere.
    pub fn node_values(&self, u: &[f64], tau: f64) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|n| match n.unknown {
                Some(k) => u[k],
                None => tau * n.phi,
            })
            .collect()
    }
}
