use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pmc_core::harness::{builtin_scenarios, classify_error, find_scenario, run_pipeline, RunReport, ScenarioConfig, Stage};
use pmc_core::Error;

/// Prescribed mean curvature Dirichlet problems: condition checks, barrier
/// constants, parallel-curvature comparison and a finite-difference solver.
#[derive(Parser)]
#[command(name = "pmc", version)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, env = "PMC_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the curvature conditions and the existence route.
    Check(RunArgs),
    /// Height and gradient barrier constants with residual checks.
    Barriers(RunArgs),
    /// Parallel-curvature flow and comparison along inward normals.
    Parallels(RunArgs),
    /// Solve by continuation.
    Solve(RunArgs),
    /// Solve and compare the field against the a-priori bounds.
    Verify(RunArgs),
    /// Full pipeline including the uniqueness and refinement probes.
    Run(RunArgs),
    /// List the built-in scenarios.
    ListScenarios,
    /// Print the TOML of a built-in scenario.
    ShowScenario { name: String },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    scenario: Option<String>,
    /// Directory for report.json, timings.json and CSV dumps.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid spacing, overriding solver.resolution.
    #[arg(long)]
    resolution: Option<f64>,
    /// Print the JSON report instead of a summary.
    #[arg(long)]
    json: bool,
}

fn load(args: &RunArgs) -> Result<ScenarioConfig, Error> {
    let mut cfg = match (&args.config, &args.scenario) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            ScenarioConfig::from_toml(&text).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
                other => other,
            })?
        }
        (None, Some(name)) => find_scenario(name)?,
        (None, None) => return Err(Error::Config("either --config or --scenario is required".into())),
    };
    if let Some(h) = args.resolution {
        cfg.solver.resolution = h;
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = Some(dir.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("overflow".into(), |v| format!("{v:.6e}"))
}

fn summary(r: &RunReport) {
    let c = &r.conditions;
    println!("scenario      {}", r.scenario);
    println!(
        "conditions    route {:?}; boundary-curvature margin {:.6}; ricci margin {:.6}",
        c.route, c.serrin.worst_margin, c.ricci.worst_margin
    );
    if let Some(b) = &r.barriers {
        println!("height bound  {:.6} (residuals: {})", b.height.bound, b.height_residuals.status);
        match &b.gradient {
            Some(g) => println!(
                "gradient      boundary bound {} (ln k = {:.3}, a = {:.3e}); residuals: {}",
                fmt_opt(g.boundary_bound),
                g.ln_k,
                g.a,
                b.gradient_residuals.as_ref().map_or("-", |r| r.status.as_str())
            ),
            None => println!("gradient      unavailable: {}", b.gradient_error.as_deref().unwrap_or("-")),
        }
        if let Some(k) = &b.kappa {
            println!("kappa         {:.6} over collar {:.4}", k.kappa, k.collar);
        }
    }
    if let Some(p) = &r.parallels {
        println!(
            "parallels     comparison asserted at {}/{} samples, passed {}; min margin {:.3e}",
            p.asserted,
            p.samples.len(),
            p.passed,
            p.min_bound_margin
        );
    }
    if let Some(s) = &r.solve {
        let rep = &s.report;
        println!(
            "solve         converged {} at tau {}; {} unknowns; {} Newton iterations; residual {:.3e}",
            rep.converged, rep.tau_reached, rep.unknowns, rep.total_newton_iterations, rep.final_residual
        );
        println!(
            "field         sup|u| {:.6}; sup|grad u| {:.6}; boundary |grad u| {:.6}",
            s.field.sup_u, s.field.sup_grad, s.field.boundary_grad_sup
        );
        if let Some(p) = &s.blowup.refinement {
            println!(
                "refinement    boundary gradient at h = {}: {:.6}; growth ratio {}",
                p.coarse_h,
                p.coarse_boundary_gradient,
                p.growth_ratio.map_or("-".into(), |g| format!("{g:.3}"))
            );
        }
        if let Some(u) = &s.uniqueness {
            println!(
                "uniqueness    {}/{} starts converged; max distance {}",
                u.converged_starts,
                u.starts.len(),
                u.max_distance.map_or("-".into(), |d| format!("{d:.3e}"))
            );
        }
    }
    if let Some(e) = &r.estimates {
        println!(
            "estimates     height {}; comparison {}; boundary gradient {}; global gradient {}",
            e.height.ok,
            e.comparison.ok,
            e.boundary_gradient.as_ref().map_or("-".into(), |b| b.ok.to_string()),
            e.global_gradient.ok
        );
    }
    for m in &r.outcome.messages {
        println!("note          {m}");
    }
    println!("outcome       {:?} (exit {})", r.outcome.class, r.outcome.exit_code);
}

fn execute(stage: Stage, args: &RunArgs) -> Result<i32, Error> {
    let cfg = load(args)?;
    let art = run_pipeline(&cfg, stage)?;
    if let Some(dir) = &cfg.output.dir {
        art.write(dir)?;
        log::info!("artifacts written to {}", dir.display());
    }
    if args.json {
        println!("{}", art.report.to_json());
    } else {
        summary(&art.report);
    }
    Ok(art.report.outcome.exit_code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Some(n) = cli.threads.filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    let (stage, args) = match &cli.command {
        Command::ListScenarios => {
            let mut out = std::io::stdout().lock();
            for p in builtin_scenarios() {
                // a closed pipe (e.g. `| head`) is not an error
                if writeln!(out, "{:<26} {}", p.name, p.summary).is_err() {
                    break;
                }
            }
            return ExitCode::SUCCESS;
        }
        Command::ShowScenario { name } => {
            return match builtin_scenarios().into_iter().find(|p| &p.name == name) {
                Some(p) => {
                    print!("{}", p.toml);
                    ExitCode::SUCCESS
                }
                None => {
                    eprintln!("error: unknown scenario `{name}`");
                    ExitCode::from(1)
                }
            };
        }
        Command::Check(a) => (Stage::Check, a),
        Command::Barriers(a) => (Stage::Barriers, a),
        Command::Parallels(a) => (Stage::Parallels, a),
        Command::Solve(a) => (Stage::Solve, a),
        Command::Verify(a) => (Stage::Verify, a),
        Command::Run(a) => (Stage::Run, a),
    };
    match execute(stage, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify_error(&e).exit_code() as u8)
        }
    }
}
