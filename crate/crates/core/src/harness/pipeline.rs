//! conditions → distance field → barriers → parallels → solve → verify.

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::{ScenarioConfig, SCHEMA_VERSION};
use crate::barriers::{
    build_gradient_barrier, build_height_barrier, verify_gradient_barrier, verify_height_barrier, GradientBarrier,
    HeightBarrier, ResidualReport,
};
use crate::conditions::{evaluate_conditions, ConditionReport};
use crate::domain::DistanceField;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::parallels::{
    hyperbolic_parallel_curvature, integrate_parallel_mean_curvature, kappa_for_domain, verify_comparison,
    ComparisonReport, KappaReport, ParallelTrajectory, RiccatiProblem,
};
use crate::solver::{
    continuation, default_starts, uniqueness_probe, verify_estimates, Discretization, EstimateChecks, EstimateInputs,
    Grid, SolutionField, SolveReport, UniquenessReport,
};

/// Agreement required between uniqueness-probe limits in the proven regime.
pub const UNIQUENESS_TOLERANCE: f64 = 1e-8;
/// Boundary gradient beyond this multiple of the global bound counts as blow-up.
pub const BLOWUP_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    /// Curvature conditions only.
    Check,
    Barriers,
    Parallels,
    Solve,
    /// Solve and compare against the estimates.
    Verify,
    /// Everything, including the uniqueness and refinement probes.
    Run,
}

impl Stage {
    fn wants_barriers(self) -> bool {
        matches!(self, Stage::Barriers | Stage::Verify | Stage::Run)
    }

    fn wants_parallels(self) -> bool {
        matches!(self, Stage::Parallels | Stage::Run)
    }

    fn wants_solve(self) -> bool {
        self >= Stage::Solve
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeClass {
    Ok,
    InputError,
    /// Nonconvergence, gradient blow-up or a failed estimate.
    Failure,
    HypothesisRejected,
}

impl OutcomeClass {
    pub fn exit_code(self) -> i32 {
        match self {
            OutcomeClass::Ok => 0,
            OutcomeClass::InputError => 1,
            OutcomeClass::Failure => 2,
            OutcomeClass::HypothesisRejected => 3,
        }
    }
}

/// Outcome class of an error raised before or during the pipeline.
pub fn classify_error(e: &Error) -> OutcomeClass {
    match e {
        Error::NonMonotone { .. } => OutcomeClass::HypothesisRejected,
        Error::NonFinite { .. }
        | Error::FocalPoint { .. }
        | Error::OutsideCollar { .. }
        | Error::GridTooCoarse(_)
        | Error::Internal(_) => OutcomeClass::Failure,
        _ => OutcomeClass::InputError,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub class: OutcomeClass,
    pub exit_code: i32,
    pub messages: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceSummary {
    pub resolution: f64,
    pub samples: usize,
    pub reach: f64,
    pub collar: f64,
    pub c2_norm: f64,
    pub max_eikonal_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BarrierSection {
    pub height: HeightBarrier,
    pub height_residuals: ResidualReport,
    pub kappa: Option<KappaReport>,
    pub gradient: Option<GradientBarrier>,
    pub gradient_residuals: Option<ResidualReport>,
    pub gradient_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParallelSample {
    pub s: f64,
    pub y: Point,
    pub boundary_curvature: f64,
    pub blowup_t: Option<f64>,
    pub comparison: ComparisonReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParallelsSection {
    /// Constant comparison function `n·sup|H|/(n−1)`.
    pub comparison_value: f64,
    pub ricci: f64,
    pub t_max: f64,
    pub step: f64,
    pub asserted: usize,
    pub passed: usize,
    pub min_bound_margin: f64,
    /// RK4 against the closed form (hyperbolic model only).
    pub closed_form_max_error: Option<f64>,
    pub samples: Vec<ParallelSample>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementProbe {
    pub coarse_h: f64,
    pub coarse_converged: bool,
    pub coarse_boundary_gradient: f64,
    /// Fine over coarse boundary gradient: near 1 for a bounded gradient,
    /// near 2 when the discrete solutions form a boundary layer.
    pub growth_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupDiagnostics {
    pub boundary_gradient: f64,
    /// `BLOWUP_FACTOR ×` the global bound at the reached state; `None` on overflow.
    pub threshold: Option<f64>,
    pub exceeded: bool,
    pub refinement: Option<RefinementProbe>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveSection {
    pub report: SolveReport,
    pub field: SolutionField,
    pub blowup: BlowupDiagnostics,
    pub uniqueness: Option<UniquenessReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: String,
    pub stage: Stage,
    pub config: ScenarioConfig,
    pub conditions: ConditionReport,
    pub distance: Option<DistanceSummary>,
    pub barriers: Option<BarrierSection>,
    pub parallels: Option<ParallelsSection>,
    pub solve: Option<SolveSection>,
    pub estimates: Option<EstimateChecks>,
    pub outcome: Outcome,
}

/// Wall-clock seconds per stage, kept out of the report so reports stay
/// byte-identical across runs.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
    pub total: f64,
}

pub struct RunArtifacts {
    pub report: RunReport,
    pub timings: Timings,
    pub field: Option<SolutionField>,
    pub trajectories: Vec<(f64, ParallelTrajectory)>,
}

struct Clock {
    start: Instant,
    last: Instant,
    timings: Timings,
}

impl Clock {
    fn new() -> Self {
        let now = Instant::now();
        Self { start: now, last: now, timings: Timings::default() }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.timings.stages.push((name.into(), (now - self.last).as_secs_f64()));
        self.last = now;
    }

    fn finish(mut self) -> Timings {
        self.timings.total = self.start.elapsed().as_secs_f64();
        self.timings
    }
}

fn parallels_section(
    cfg: &ScenarioConfig,
    field: &DistanceField,
    h0: f64,
) -> Result<(ParallelsSection, Vec<(f64, ParallelTrajectory)>)> {
    let domain = field.domain();
    let model = domain.model();
    let n = model.dim();
    let comparison_value = n as f64 * h0 / (n - 1) as f64;
    let ricci = model.ricci_lower();
    let t_max = field.reach_tau;
    let step = cfg.checks.parallel_step;
    let samples = domain.boundary_samples(cfg.checks.boundary_samples);
    let keep = cfg.checks.parallel_trajectories.min(samples.len());
    let stride = if keep == 0 { usize::MAX } else { samples.len() / keep };

    let mut out = Vec::with_capacity(samples.len());
    let mut trajectories = Vec::new();
    let mut closed_err: Option<f64> = None;
    for (i, (s, y)) in samples.into_iter().enumerate() {
        let k0 = domain.inward_mean_curvature(s)?;
        let p = RiccatiProblem::constant(n, comparison_value, ricci, k0, t_max, step);
        let tr = integrate_parallel_mean_curvature(&p)?;
        if model.is_hyperbolic() && n == 2 {
            for (&t, &c) in tr.t.iter().zip(&tr.curvature) {
                if let Ok(exact) = hyperbolic_parallel_curvature(k0, t) {
                    if exact.abs() < 1e3 {
                        let e = (c - exact).abs() / exact.abs().max(1.0);
                        closed_err = Some(closed_err.map_or(e, |m| m.max(e)));
                    }
                }
            }
        }
        let comparison = verify_comparison(&p, &tr);
        out.push(ParallelSample { s, y, boundary_curvature: k0, blowup_t: tr.blowup_t, comparison });
        if i % stride == 0 && trajectories.len() < keep {
            trajectories.push((s, tr));
        }
    }
    let asserted = out.iter().filter(|s| s.comparison.asserted).count();
    let passed = out.iter().filter(|s| s.comparison.pass).count();
    let min_bound_margin = out.iter().map(|s| s.comparison.bound_margin).fold(f64::INFINITY, f64::min);
    Ok((
        ParallelsSection {
            comparison_value,
            ricci,
            t_max,
            step,
            asserted,
            passed,
            min_bound_margin,
            closed_form_max_error: closed_err,
            samples: out,
        },
        trajectories,
    ))
}

/// Runs the pipeline up to `stage`. Errors are input or hypothesis problems
/// (see [`classify_error`]); numerical failures are reported in the outcome.
pub fn run_pipeline(cfg: &ScenarioConfig, stage: Stage) -> Result<RunArtifacts> {
    cfg.validate()?;
    let mut clock = Clock::new();
    let mut messages = Vec::new();
    let mut failed = false;

    let problem = cfg.build()?;
    let (domain, h, phi) = (&problem.domain, &problem.h, &problem.phi);
    clock.lap("setup");

    let conditions = evaluate_conditions(domain, h, cfg.checks.boundary_samples)?;
    let proven = !conditions.outside_proven_regime;
    if !proven {
        messages.push("no sufficient existence condition holds; estimates are not asserted".into());
    }
    clock.lap("conditions");

    let needs_field = stage.wants_barriers() || stage.wants_parallels();
    let field = if needs_field {
        let res = cfg.checks.distance_resolution * domain.scale();
        Some(DistanceField::build(domain, res)?)
    } else {
        None
    };
    let distance = field.as_ref().map(|f| DistanceSummary {
        resolution: f.resolution(),
        samples: f.samples.len(),
        reach: f.reach_tau,
        collar: f.collar_tau,
        c2_norm: f.d_c2_norm,
        max_eikonal_residual: f.max_eikonal_residual,
    });
    if needs_field {
        clock.lap("distance");
    }

    let height = build_height_barrier(domain, h, phi)?;
    let mut gradient: Option<GradientBarrier> = None;
    let barriers = match (&field, stage.wants_barriers()) {
        (Some(field), true) => {
            let [m, k] = cfg.checks.collar_samples;
            let height_residuals = verify_height_barrier(&height, field, h, proven, m, k)?;
            if height_residuals.asserted && !height_residuals.pass {
                failed = true;
                messages.push(format!("height barrier residual check failed: {}", height_residuals.status));
            }
            let kappa = if domain.model().is_hyperbolic() {
                Some(kappa_for_domain(domain, field.collar_tau, cfg.checks.boundary_samples)?)
            } else {
                None
            };
            let built = build_gradient_barrier(
                field,
                h,
                phi,
                height.bound,
                "height bound",
                kappa.as_ref().map(|k| k.kappa),
            )
            .and_then(|g| g.check_invariants().map(|_| g));
            let (gradient_residuals, gradient_error) = match &built {
                Ok(g) => {
                    let r = verify_gradient_barrier(g, field, h, phi, proven, m, k)?;
                    if r.asserted && !r.pass {
                        failed = true;
                        messages.push(format!("gradient barrier residual check failed: {}", r.status));
                    }
                    (Some(r), None)
                }
                Err(e) => {
                    messages.push(format!("gradient barrier unavailable: {e}"));
                    (None, Some(e.to_string()))
                }
            };
            gradient = built.ok();
            clock.lap("barriers");
            Some(BarrierSection {
                height: height.clone(),
                height_residuals,
                kappa,
                gradient: gradient.clone(),
                gradient_residuals,
                gradient_error,
            })
        }
        _ => None,
    };

    let mut trajectories = Vec::new();
    let parallels = match (&field, stage.wants_parallels()) {
        (Some(field), true) => {
            let (section, tr) = parallels_section(cfg, field, h.bounds().h0)?;
            if section.passed < section.asserted {
                failed = true;
                messages.push(format!(
                    "curvature comparison failed at {} of {} samples",
                    section.asserted - section.passed,
                    section.asserted
                ));
            }
            trajectories = tr;
            clock.lap("parallels");
            Some(section)
        }
        _ => None,
    };

    let mut solve = None;
    let mut estimates = None;
    let mut field_out = None;
    if stage.wants_solve() {
        let grid = Grid::build(domain, phi, cfg.solver.resolution)?;
        let disc = Discretization::new(&grid, domain.model(), h)?;
        let (sol, mut report) = continuation(&disc, &cfg.solver)?;
        clock.lap("solve");
        if !report.converged {
            failed = true;
            messages.push(format!(
                "continuation stopped at tau = {} (step floor {})",
                report.tau_reached, cfg.solver.min_dtau
            ));
        }
        let global = crate::barriers::global_gradient_bound(
            domain.model().dim(),
            h.bounds().h_norm1,
            domain.model().curvature_bound(),
            sol.sup_u,
            sol.boundary_grad_sup,
        );
        let threshold = global.value.map(|v| BLOWUP_FACTOR * v).filter(|v| v.is_finite());
        let exceeded = match threshold {
            Some(t) => sol.boundary_grad_sup > t,
            None => sol.boundary_grad_sup.ln() > global.ln_value + BLOWUP_FACTOR.ln(),
        };
        if exceeded {
            failed = true;
            messages.push("boundary gradient exceeds the blow-up threshold".into());
        }
        let mut blowup = BlowupDiagnostics {
            boundary_gradient: sol.boundary_grad_sup,
            threshold,
            exceeded,
            refinement: None,
        };

        if report.converged && stage >= Stage::Verify {
            let checks = verify_estimates(
                &sol,
                EstimateInputs { domain, h_fn: h, height: &height, gradient: gradient.as_ref() },
            );
            if !checks.all_ok {
                failed = true;
                messages.push("a-posteriori estimate check failed".into());
            }
            report.estimates = Some(checks.clone());
            estimates = Some(checks);
            clock.lap("verify");
        }

        let mut uniqueness = None;
        if stage == Stage::Run {
            if report.converged && cfg.solver.uniqueness_probe {
                let starts = default_starts(&grid, domain, &height, cfg.solver.random_start, cfg.solver.seed);
                let u = uniqueness_probe(&disc, starts, &cfg.solver);
                if proven && u.max_distance.is_some_and(|d| d > UNIQUENESS_TOLERANCE) {
                    failed = true;
                    messages.push("uniqueness probe found distinct limits".into());
                }
                uniqueness = Some(u);
                clock.lap("uniqueness");
            }
            let coarse_h = 2.0 * cfg.solver.resolution;
            if let Ok(cg) = Grid::build(domain, phi, coarse_h) {
                let cd = Discretization::new(&cg, domain.model(), h)?;
                let mut ccfg = cfg.solver.clone();
                ccfg.resolution = coarse_h;
                let (cf, cr) = continuation(&cd, &ccfg)?;
                blowup.refinement = Some(RefinementProbe {
                    coarse_h,
                    coarse_converged: cr.converged,
                    coarse_boundary_gradient: cf.boundary_grad_sup,
                    growth_ratio: (report.converged && cr.converged && cf.boundary_grad_sup > 0.0)
                        .then(|| sol.boundary_grad_sup / cf.boundary_grad_sup),
                });
                clock.lap("refinement");
            }
        }
        field_out = Some(sol.clone());
        solve = Some(SolveSection { report, field: sol, blowup, uniqueness });
    }

    let class = if failed { OutcomeClass::Failure } else { OutcomeClass::Ok };
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        scenario: cfg.name.clone(),
        stage,
        config: cfg.clone(),
        conditions,
        distance,
        barriers,
        parallels,
        solve,
        estimates,
        outcome: Outcome { class, exit_code: class.exit_code(), messages },
    };
    Ok(RunArtifacts { report, timings: clock.finish(), field: field_out, trajectories })
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl RunArtifacts {
    /// Writes `report.json`, `timings.json`, and when present `field.csv`,
    /// `continuation.csv` and `parallels.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        use std::io::Write;
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.report.to_json() + "\n")?;
        let t = serde_json::to_string_pretty(&self.timings).map_err(|e| Error::Internal(e.to_string()))?;
        fs::write(dir.join("timings.json"), t + "\n")?;
        if let Some(f) = &self.field {
            f.write_csv(BufWriter::new(fs::File::create(dir.join("field.csv"))?))?;
        }
        if let Some(s) = &self.report.solve {
            let mut w = BufWriter::new(fs::File::create(dir.join("continuation.csv"))?);
            writeln!(w, "tau,dtau,newton_iterations,residual,max_grad")?;
            for st in &s.report.steps {
                writeln!(
                    w,
                    "{},{},{},{:.6e},{:.12e}",
                    st.tau, st.dtau, st.newton_iterations, st.residual, st.max_grad
                )?;
            }
        }
        if !self.trajectories.is_empty() {
            let mut w = BufWriter::new(fs::File::create(dir.join("parallels.csv"))?);
            writeln!(w, "s,t,curvature")?;
            for (s, tr) in &self.trajectories {
                for (t, c) in tr.t.iter().zip(&tr.curvature) {
                    writeln!(w, "{s:.12e},{t:.12e},{c:.12e}")?;
                }
            }
        }
        Ok(())
    }
}
