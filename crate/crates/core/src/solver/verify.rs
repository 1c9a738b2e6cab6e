//! A-posteriori comparison of a computed field against the a-priori bounds.

use serde::Serialize;

use crate::barriers::{global_gradient_bound, GlobalGradientBound, GradientBarrier, HeightBarrier};
use crate::conditions::PrescribedH;
use crate::domain::DomainSpec;

use super::grid::NodeKind;
use super::SolutionField;

/// Slack on the height and comparison checks.
pub const HEIGHT_SLACK: f64 = 1e-6;
/// Boundary gradient slack is `BOUNDARY_SLACK_FACTOR · h`.
pub const BOUNDARY_SLACK_FACTOR: f64 = 10.0;

#[derive(Clone, Copy)]
pub struct EstimateInputs<'a> {
    pub domain: &'a DomainSpec,
    pub h_fn: &'a PrescribedH,
    pub height: &'a HeightBarrier,
    pub gradient: Option<&'a GradientBarrier>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub measured: f64,
    /// `None` when the bound overflows (the check then passes in log form).
    pub bound: Option<f64>,
    pub ln_bound: f64,
    pub ok: bool,
}

impl BoundCheck {
    fn new(measured: f64, bound: Option<f64>, ln_bound: f64) -> Self {
        let ok = match bound {
            Some(b) => measured <= b,
            None => measured <= 0.0 || measured.ln() <= ln_bound,
        };
        Self { measured, bound, ln_bound, ok }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonCheck {
    /// `max(u_h − w)` over the nodes.
    pub upper_excess: f64,
    /// `max(−w − u_h)` over the nodes.
    pub lower_excess: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateChecks {
    pub height: BoundCheck,
    /// Absent when no gradient barrier could be built.
    pub boundary_gradient: Option<BoundCheck>,
    pub global_gradient: BoundCheck,
    pub global_bound: GlobalGradientBound,
    pub comparison: ComparisonCheck,
    pub all_ok: bool,
}

/// Checks the height bound, the nodewise comparison `−w ≤ u_h ≤ w`, the
/// boundary gradient bound and the global gradient bound evaluated with the
/// measured `sup|u_h|` and measured boundary gradient.
pub fn verify_estimates(field: &SolutionField, inp: EstimateInputs<'_>) -> EstimateChecks {
    let hb = inp.height;
    let height = {
        let b = hb.bound + HEIGHT_SLACK;
        BoundCheck::new(field.sup_u, Some(b), b.ln())
    };

    let mut upper: f64 = f64::NEG_INFINITY;
    let mut lower: f64 = f64::NEG_INFINITY;
    for n in &field.nodes {
        let d = if n.kind == NodeKind::Dirichlet {
            0.0
        } else {
            inp.domain.nearest(n.x).d.max(0.0)
        };
        let w = hb.value_at_distance(d);
        upper = upper.max(n.u - w);
        lower = lower.max(-w - n.u);
    }
    let comparison = ComparisonCheck {
        upper_excess: upper,
        lower_excess: lower,
        ok: upper <= HEIGHT_SLACK && lower <= HEIGHT_SLACK,
    };

    let slack = BOUNDARY_SLACK_FACTOR * field.h;
    let boundary_gradient = inp.gradient.map(|g| {
        let bound = g.boundary_bound.map(|b| b + slack);
        // overflowed bound: ln(‖φ‖₁ + k/ν + slack) ≥ ln(k/ν)
        BoundCheck::new(field.boundary_grad_sup, bound, bound.map_or(g.ln_boundary_excess, f64::ln))
    });

    let model = inp.domain.model();
    let global_bound = global_gradient_bound(
        model.dim(),
        inp.h_fn.bounds().h_norm1,
        model.curvature_bound(),
        field.sup_u,
        field.boundary_grad_sup,
    );
    let global_gradient = BoundCheck::new(field.sup_grad, global_bound.value, global_bound.ln_value);

    let all_ok = height.ok
        && comparison.ok
        && global_gradient.ok
        && boundary_gradient.as_ref().is_none_or(|c| c.ok);
    EstimateChecks {
        height,
        boundary_gradient,
        global_gradient,
        global_bound,
        comparison,
        all_ok,
    }
}
