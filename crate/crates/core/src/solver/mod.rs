//! Finite-difference solver for the Dirichlet problem with continuation in
//! the homotopy parameter τ: `div(∇u/W) = τ·n·H(x, u)` in Ω, `u = τφ` on ∂Ω.

pub mod grid;
pub mod newton;
pub mod operator;
pub mod verify;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::barriers::{BoundaryData, HeightBarrier};
use crate::conditions::PrescribedH;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::geometry::Point;

pub use grid::{Grid, NodeKind};
pub use newton::{damped_newton, NewtonOutcome};
pub use operator::Discretization;
pub use verify::{verify_estimates, EstimateChecks, EstimateInputs};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Grid spacing in chart units.
    pub resolution: f64,
    /// Max-norm residual for convergence.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Sufficient-decrease factor of the backtracking line search.
    pub armijo: f64,
    /// Smallest damping factor before a Newton step is declared failed.
    pub min_damping: f64,
    /// Number of uniform τ-steps before any halving.
    pub continuation_steps: usize,
    pub min_dtau: f64,
    /// Run the multi-start uniqueness probe after a converged solve.
    pub uniqueness_probe: bool,
    /// Add a random start of amplitude 10× the height bound to the probe.
    pub random_start: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            resolution: 1.0 / 64.0,
            newton_tol: 1e-10,
            max_newton_iters: 50,
            armijo: 1e-4,
            min_damping: 1.0 / 1_048_576.0,
            continuation_steps: 16,
            min_dtau: 1.0 / 1024.0,
            uniqueness_probe: true,
            random_start: true,
            seed: 7,
        }
    }
}

impl SolverConfig {
    pub fn with_resolution(h: f64) -> Self {
        Self { resolution: h, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("solver.{what}")));
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return bad("resolution must be positive");
        }
        if !(self.newton_tol >= 1e-12 && self.newton_tol.is_finite()) {
            return bad("newton_tol must be at least 1e-12");
        }
        if self.max_newton_iters == 0 || self.continuation_steps == 0 {
            return bad("iteration and step counts must be positive");
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return bad("armijo must lie in (0, 0.5)");
        }
        if !(self.min_damping > 0.0 && self.min_damping < 1.0) {
            return bad("min_damping must lie in (0, 1)");
        }
        if !(self.min_dtau > 0.0 && self.min_dtau <= 1.0 / self.continuation_steps as f64) {
            return bad("min_dtau must be positive and not exceed the initial step");
        }
        Ok(())
    }
}

/// One node of a computed field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeSample {
    pub x: Point,
    pub kind: NodeKind,
    pub u: f64,
    /// σ-norm of the discrete gradient (unknown nodes only).
    pub grad_norm: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionField {
    pub h: f64,
    pub tau: f64,
    #[serde(skip)]
    pub nodes: Vec<NodeSample>,
    /// Values at the unknowns in grid order.
    #[serde(skip)]
    pub unknowns: Vec<f64>,
    pub sup_u: f64,
    pub sup_grad: f64,
    pub boundary_grad_sup: f64,
    pub max_residual: f64,
    /// Smallest eigenvalue of `W²σ^{ij} − u^i u^j` over the unknowns.
    pub min_coefficient_eigenvalue: f64,
}

impl SolutionField {
    fn assemble(disc: &Discretization<'_>, u: &[f64], tau: f64) -> Result<Self> {
        let grid = disc.grid;
        let diag = disc.diagnostics(u, tau)?;
        let values = grid.node_values(u, tau);
        let mut nodes = Vec::with_capacity(grid.nodes.len());
        for (i, n) in grid.nodes.iter().enumerate() {
            let d = n.unknown.map(|k| diag[k]);
            nodes.push(NodeSample {
                x: n.x,
                kind: n.kind,
                u: values[i],
                grad_norm: d.map(|d| d.grad_norm),
                residual: d.map(|d| d.residual),
            });
        }
        let sup_u = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let sup_grad = diag.iter().fold(0.0, |m: f64, d| m.max(d.grad_norm));
        let boundary_grad_sup = grid
            .unknowns
            .iter()
            .zip(&diag)
            .filter(|(s, _)| s.boundary_adjacent)
            .fold(0.0, |m: f64, (_, d)| m.max(d.grad_norm));
        let max_residual = diag.iter().fold(0.0, |m: f64, d| m.max(d.residual.abs()));
        let min_eig = diag.iter().fold(f64::INFINITY, |m, d| m.min(d.min_eig));
        Ok(Self {
            h: grid.h,
            tau,
            nodes,
            unknowns: u.to_vec(),
            sup_u,
            sup_grad,
            boundary_grad_sup,
            max_residual,
            min_coefficient_eigenvalue: min_eig,
        })
    }

    /// CSV with columns `x1,x2,u,grad_norm`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "x1,x2,u,grad_norm")?;
        for n in &self.nodes {
            let g = n.grad_norm.map(|g| format!("{g:.12e}")).unwrap_or_default();
            writeln!(w, "{:.12e},{:.12e},{:.12e},{}", n.x[0], n.x[1], n.u, g)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuationStep {
    pub tau: f64,
    pub dtau: f64,
    pub newton_iterations: usize,
    pub residual: f64,
    pub roundoff_limited: bool,
    /// Largest discrete gradient norm at this τ.
    pub max_grad: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RejectedStep {
    pub tau: f64,
    pub dtau: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    /// Largest τ at which the discrete problem was solved.
    pub tau_reached: f64,
    pub unknowns: usize,
    pub h: f64,
    pub steps: Vec<ContinuationStep>,
    pub rejected: Vec<RejectedStep>,
    pub total_newton_iterations: usize,
    pub final_residual: f64,
    pub estimates: Option<EstimateChecks>,
}

impl SolveReport {
    /// `(τ, max‖∇u_h‖)` over accepted continuation steps.
    pub fn gradient_trajectory(&self) -> Vec<(f64, f64)> {
        self.steps.iter().map(|s| (s.tau, s.max_grad)).collect()
    }
}

fn max_grad(disc: &Discretization<'_>, u: &[f64], tau: f64) -> f64 {
    disc.diagnostics(u, tau)
        .map(|d| d.iter().fold(0.0, |m: f64, x| m.max(x.grad_norm)))
        .unwrap_or(f64::NAN)
}

/// Continuation from `u ≡ 0` at τ = 0 to τ = 1.
pub fn continuation(disc: &Discretization<'_>, cfg: &SolverConfig) -> Result<(SolutionField, SolveReport)> {
    cfg.validate()?;
    let n = disc.grid.n_unknowns();
    let dtau_max = 1.0 / cfg.continuation_steps as f64;
    let mut tau = 0.0;
    let mut u = vec![0.0; n];
    let mut prev: Option<(f64, Vec<f64>)> = None;
    let mut dtau = dtau_max;
    let mut steps = Vec::new();
    let mut rejected = Vec::new();
    let mut total = 0;
    let mut last_residual = 0.0;

    while tau < 1.0 {
        let next = (tau + dtau).min(1.0);
        let mut attempts = Vec::new();
        if let Some((tp, up)) = &prev {
            let r = (next - tau) / (tau - tp);
            attempts.push(u.iter().zip(up).map(|(a, b)| a + r * (a - b)).collect::<Vec<_>>());
        }
        attempts.push(u.clone());
        let mut outcome: Option<NewtonOutcome> = None;
        let mut reason = String::new();
        for start in attempts {
            let o = damped_newton(disc, start, next, cfg, cfg.max_newton_iters);
            total += o.iterations;
            if o.converged {
                outcome = Some(o);
                break;
            }
            reason = o.failure.unwrap_or_default();
        }
        match outcome {
            Some(o) => {
                log::debug!("tau {next:.6} converged in {} iterations", o.iterations);
                steps.push(ContinuationStep {
                    tau: next,
                    dtau: next - tau,
                    newton_iterations: o.iterations,
                    residual: o.residual_max,
                    roundoff_limited: o.roundoff_limited,
                    max_grad: max_grad(disc, &o.u, next),
                });
                last_residual = o.residual_max;
                prev = Some((tau, std::mem::replace(&mut u, o.u)));
                tau = next;
                dtau = (2.0 * dtau).min(dtau_max);
            }
            None => {
                log::debug!("tau {next:.6} rejected: {reason}");
                rejected.push(RejectedStep { tau: next, dtau: next - tau, reason });
                dtau *= 0.5;
                if dtau < cfg.min_dtau {
                    break;
                }
            }
        }
    }
    let converged = tau >= 1.0;
    let field = SolutionField::assemble(disc, &u, tau)?;
    let report = SolveReport {
        converged,
        tau_reached: tau,
        unknowns: n,
        h: disc.grid.h,
        steps,
        rejected,
        total_newton_iterations: total,
        final_residual: if converged { last_residual } else { field.max_residual },
        estimates: None,
    };
    Ok((field, report))
}

/// Builds the grid and runs the continuation.
pub fn solve_dirichlet(
    domain: &DomainSpec,
    h_fn: &PrescribedH,
    data: &BoundaryData,
    cfg: &SolverConfig,
) -> Result<(SolutionField, SolveReport)> {
    cfg.validate()?;
    let grid = Grid::build(domain, data, cfg.resolution)?;
    let disc = Discretization::new(&grid, domain.model(), h_fn)?;
    continuation(&disc, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StartOutcome {
    pub label: String,
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub starts: Vec<StartOutcome>,
    /// `(label, label, max-norm distance)` over converged pairs.
    pub pairwise: Vec<(String, String, f64)>,
    pub max_distance: Option<f64>,
    pub converged_starts: usize,
}

/// Full Newton solves at τ = 1 from each start.
pub fn uniqueness_probe(disc: &Discretization<'_>, starts: Vec<(String, Vec<f64>)>, cfg: &SolverConfig) -> UniquenessReport {
    let mut outs = Vec::new();
    let mut sols: Vec<(String, Vec<f64>)> = Vec::new();
    for (label, u0) in starts {
        let o = damped_newton(disc, u0, 1.0, cfg, cfg.max_newton_iters);
        outs.push(StartOutcome {
            label: label.clone(),
            converged: o.converged,
            iterations: o.iterations,
            residual: o.residual_max,
            failure: o.failure.clone(),
        });
        if o.converged {
            sols.push((label, o.u));
        }
    }
    let mut pairwise = Vec::new();
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            let d = sols[i].1.iter().zip(&sols[j].1).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
            pairwise.push((sols[i].0.clone(), sols[j].0.clone(), d));
        }
    }
    let max_distance = pairwise.iter().map(|p| p.2).reduce(f64::max);
    UniquenessReport {
        converged_starts: sols.len(),
        starts: outs,
        pairwise,
        max_distance,
    }
}

/// Starts `0`, `±w` (height barrier) and optionally a seeded random field of
/// amplitude 10× the height bound.
pub fn default_starts(
    grid: &Grid,
    domain: &DomainSpec,
    barrier: &HeightBarrier,
    random: bool,
    seed: u64,
) -> Vec<(String, Vec<f64>)> {
    let n = grid.n_unknowns();
    let w: Vec<f64> = grid
        .unknowns
        .iter()
        .map(|s| barrier.value_at_distance(domain.nearest(s.x).d))
        .collect();
    let mut starts = vec![
        ("zero".to_string(), vec![0.0; n]),
        ("upper-barrier".to_string(), w.clone()),
        ("lower-barrier".to_string(), w.iter().map(|v| -v).collect()),
    ];
    if random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amp = 10.0 * barrier.bound;
        starts.push(("random".to_string(), (0..n).map(|_| amp * rng.random_range(-1.0..=1.0)).collect()));
    }
    starts
}
