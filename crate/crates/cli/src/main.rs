//! Command-line runner: generate problems, solve them, compute references,
//! certify recorded traces, and compare solvers.
//!
//! Exit codes are part of the contract:
//! 0 success (solve: converged), 1 I/O failure, 2 invalid spec/config or
//! solver-problem mismatch, 3 iteration cap reached (or flagged reference),
//! 4 missing or unusable reference solution, 5 a certification check failed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use ndarray::Array1;
use serde::Deserialize;

use proxalm::certify::{
    certificate_slack, check_contraction, check_ergodic_bound, dual_residual,
    CertificationReport, CheckOutcome,
};
use proxalm::gen::{generate, reference_solve, GenSpec, Reference, SplitMix64};
use proxalm::model::{AnyProblem, ConstrainedProblem, Sense, SeparableProblem};
use proxalm::prox::{project_simplex, ProxKind};
use proxalm::solvers::{
    metric_for, solve_balm, solve_dpalm, solve_npdhg1, solve_npdhg2, solve_palm,
    solve_pdalm, solve_pdhg_classic, BalmParams, DpalmParams, IterControl, Iterate,
    Npdhg1Params, Npdhg2Params, PalmParams, PdalmParams, PdhgParams, QSpec, SolveTrace,
    Status,
};

const EXIT_OK: i32 = 0;
const EXIT_IO: i32 = 1;
const EXIT_INVALID: i32 = 2;
const EXIT_MAX_ITER: i32 = 3;
const EXIT_NO_REFERENCE: i32 = 4;
const EXIT_CHECK_FAILED: i32 = 5;

#[derive(Parser)]
#[command(
    name = "proxalm",
    version,
    about = "First-order solvers for constrained convex programs and saddle problems, \
             with numerical convergence certificates"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a problem instance plus a metadata sidecar (`<out>.meta.json`)
    Generate(GenerateArgs),
    /// Run one solver and write its trace (CSV and/or JSON)
    Solve(SolveArgs),
    /// Compute a high-accuracy reference solution for later certification
    Reference(ReferenceArgs),
    /// Check convergence certificates on a recorded trace
    Certify(CertifyArgs),
    /// Run several solvers on one problem and tabulate their progress
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
struct InlineGen {
    /// basis_pursuit | inequality_lp | matrix_game | rps | multi_block_l1 | quadratic_saddle
    #[arg(long)]
    kind: Option<String>,
    /// Constraint rows (payoff rows for games)
    #[arg(long)]
    m: Option<usize>,
    /// Variables (payoff columns for games)
    #[arg(long)]
    n: Option<usize>,
    /// Nonzeros of the planted basis-pursuit solution
    #[arg(long)]
    sparsity: Option<usize>,
    /// Number of blocks for multi_block_l1
    #[arg(long)]
    blocks: Option<usize>,
    /// Variables per block for multi_block_l1
    #[arg(long)]
    block_n: Option<usize>,
    /// Generator seed
    #[arg(long)]
    seed: Option<u64>,
}

impl InlineGen {
    fn spec(&self) -> anyhow::Result<GenSpec> {
        let seed = self.seed.unwrap_or(0);
        let kind = self.kind.as_deref().ok_or_else(|| anyhow!("--kind is required"))?;
        Ok(match kind {
            "basis_pursuit" => GenSpec::BasisPursuit {
                m: self.m.unwrap_or(50),
                n: self.n.unwrap_or(120),
                sparsity: self.sparsity.unwrap_or(5),
                seed,
            },
            "inequality_lp" => {
                GenSpec::InequalityLp { m: self.m.unwrap_or(30), n: self.n.unwrap_or(60), seed }
            }
            "matrix_game" => {
                GenSpec::MatrixGame { m: self.m.unwrap_or(5), n: self.n.unwrap_or(5), seed }
            }
            "rps" => GenSpec::Rps,
            "multi_block_l1" => GenSpec::MultiBlockL1 {
                p: self.blocks.unwrap_or(3),
                m: self.m.unwrap_or(20),
                block_n: self.block_n.unwrap_or(15),
                seed,
            },
            "quadratic_saddle" => {
                GenSpec::QuadraticSaddle { n: self.n.unwrap_or(10), m: self.m.unwrap_or(7), seed }
            }
            other => bail!("unknown problem kind `{other}`"),
        })
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    gen: InlineGen,
    /// Problem file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone, Default)]
struct SolverFlags {
    /// Penalty / primal parameter r
    #[arg(long)]
    r: Option<f64>,
    /// Prox-form primal weight (palm, pdalm, npdhg1)
    #[arg(long)]
    tau: Option<f64>,
    /// Dual prox weight of npdhg2
    #[arg(long)]
    sigma: Option<f64>,
    /// Dual regularization of balm
    #[arg(long)]
    delta: Option<f64>,
    /// Extra primal weight of dpalm / dual weight of classic pdhg
    #[arg(long)]
    s: Option<f64>,
    /// Relaxation factor in (0, 2)
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Primal-residual tolerance (the weighted-step tolerance defaults to tol/100)
    #[arg(long)]
    tol: Option<f64>,
    /// Weighted-step tolerance
    #[arg(long)]
    tol_step: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem JSON path (alternative: generate inline via --kind ...)
    #[arg(long)]
    problem: Option<PathBuf>,
    #[command(flatten)]
    gen: InlineGen,
    /// palm | balm | pdalm | dpalm | npdhg1 | npdhg2 | pdhg
    #[arg(long)]
    solver: Option<String>,
    /// JSON config file (CLI flags take precedence; PROXALM_DEFAULTS
    /// supplies a lower-precedence defaults file)
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: SolverFlags,
    /// Output stem (writes `<out>.csv` / `<out>.json`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of {csv, json}
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct ReferenceArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Iteration budget (at least 1_000_000)
    #[arg(long, default_value_t = 1_000_000)]
    budget: usize,
}

#[derive(Args)]
struct CertifyArgs {
    /// Trace JSON written by `solve --format json`
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    /// Reference JSON written by `reference` (required for the contraction check)
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Comma-separated subset of {contraction, ergodic, dual-residual, h-positivity}
    #[arg(long)]
    checks: Option<String>,
    /// Report file (default report.json)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    problem: PathBuf,
    /// Comma-separated solver list
    #[arg(long)]
    solvers: String,
    #[command(flatten)]
    flags: SolverFlags,
    /// Output stem (writes `<out>.csv` and `<out>_summary.csv`)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Reference(a) => cmd_reference(a),
        Cmd::Certify(a) => cmd_certify(a),
        Cmd::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.downcast_ref::<std::io::Error>().is_some() {
                EXIT_IO
            } else {
                EXIT_INVALID
            };
            std::process::exit(code);
        }
    }
}

fn read_to_string(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_problem(path: &Path) -> anyhow::Result<AnyProblem> {
    AnyProblem::from_json(&read_to_string(path)?)
        .with_context(|| format!("parsing problem {}", path.display()))
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<i32> {
    let spec = args.gen.spec()?;
    let generated = generate(&spec)?;
    write_file(&args.out, &generated.problem.to_json()?)?;
    let meta_path = args.out.with_extension("meta.json");
    write_file(&meta_path, &serde_json::to_string_pretty(&generated.meta)?)?;
    println!("wrote {} and {}", args.out.display(), meta_path.display());
    Ok(EXIT_OK)
}

/// Defaults file named by PROXALM_DEFAULTS, then an explicit --config file,
/// then command-line flags; later layers win.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    problem: Option<String>,
    solver: Option<String>,
    r: Option<f64>,
    tau: Option<f64>,
    sigma: Option<f64>,
    delta: Option<f64>,
    s: Option<f64>,
    gamma: Option<f64>,
    max_iter: Option<usize>,
    tol: Option<f64>,
    tol_step: Option<f64>,
    out: Option<String>,
    format: Option<String>,
}

impl FileConfig {
    fn load(path: &Path) -> anyhow::Result<Self> {
        serde_json::from_str(&read_to_string(path)?)
            .with_context(|| format!("parsing config {}", path.display()))
    }

    fn overlay(self, higher: FileConfig) -> FileConfig {
        FileConfig {
            problem: higher.problem.or(self.problem),
            solver: higher.solver.or(self.solver),
            r: higher.r.or(self.r),
            tau: higher.tau.or(self.tau),
            sigma: higher.sigma.or(self.sigma),
            delta: higher.delta.or(self.delta),
            s: higher.s.or(self.s),
            gamma: higher.gamma.or(self.gamma),
            max_iter: higher.max_iter.or(self.max_iter),
            tol: higher.tol.or(self.tol),
            tol_step: higher.tol_step.or(self.tol_step),
            out: higher.out.or(self.out),
            format: higher.format.or(self.format),
        }
    }
}

fn flags_as_config(flags: &SolverFlags) -> FileConfig {
    FileConfig {
        problem: None,
        solver: None,
        r: flags.r,
        tau: flags.tau,
        sigma: flags.sigma,
        delta: flags.delta,
        s: flags.s,
        gamma: flags.gamma,
        max_iter: flags.max_iter,
        tol: flags.tol,
        tol_step: flags.tol_step,
        out: None,
        format: None,
    }
}

fn resolved_config(config: Option<&Path>, flags: &SolverFlags) -> anyhow::Result<FileConfig> {
    let mut cfg = FileConfig::default();
    if let Ok(path) = std::env::var("PROXALM_DEFAULTS") {
        cfg = cfg.overlay(FileConfig::load(Path::new(&path))?);
    }
    if let Some(path) = config {
        cfg = cfg.overlay(FileConfig::load(path)?);
    }
    Ok(cfg.overlay(flags_as_config(flags)))
}

fn control_from(cfg: &FileConfig) -> anyhow::Result<IterControl> {
    let mut control = IterControl::default();
    if let Some(m) = cfg.max_iter {
        control.max_iter = m;
    }
    if let Some(t) = cfg.tol {
        control.tol_primal = t;
        control.tol_step = t * 1e-2;
    }
    if let Some(t) = cfg.tol_step {
        control.tol_step = t;
    }
    if let Some(g) = cfg.gamma {
        control.gamma = g;
    }
    Ok(control)
}

fn as_separable(p: &ConstrainedProblem) -> SeparableProblem {
    SeparableProblem {
        blocks: vec![proxalm::model::Block { a: p.a.clone(), theta: p.theta.clone() }],
        b: p.b.clone(),
        sense: p.sense,
    }
}

/// Deterministic start for one variable group: the first vertex for simplex
/// indicators (the zero vector projects straight onto the equilibrium of
/// symmetric games, which would hide the interesting dynamics), zeros
/// otherwise.
fn start_part(theta: &ProxKind, len: usize) -> Array1<f64> {
    match theta {
        ProxKind::SimplexIndicator {} => {
            let mut v = Array1::zeros(len);
            v[0] = 1.0;
            v
        }
        _ => Array1::zeros(len),
    }
}

/// Builds parameters from defaults plus overrides and runs one solver from
/// the zero start.
fn run_solver(problem: &AnyProblem, solver: &str, cfg: &FileConfig) -> anyhow::Result<SolveTrace> {
    let control = control_from(cfg)?;
    let mismatch = || anyhow!("solver `{solver}` does not accept this problem kind");
    let trace = match solver {
        "palm" => {
            let AnyProblem::Constrained(p) = problem else { return Err(mismatch()) };
            let mut params = PalmParams::defaults_with_r(p, cfg.r.unwrap_or(1.0));
            if let Some(tau) = cfg.tau {
                params.q_spec = QSpec::ProxForm(tau);
            }
            params.control = control;
            let (m, n) = p.dims();
            solve_palm(p, &params, Iterate::new(start_part(&p.theta, n), Array1::zeros(m)))?
        }
        "balm" => {
            let AnyProblem::Constrained(p) = problem else { return Err(mismatch()) };
            let mut params = BalmParams::default();
            if let Some(r) = cfg.r {
                params.r = r;
            }
            if let Some(d) = cfg.delta {
                params.delta = d;
            }
            params.control = control;
            let (m, n) = p.dims();
            solve_balm(p, &params, Iterate::new(start_part(&p.theta, n), Array1::zeros(m)))?
        }
        "pdalm" | "dpalm" => {
            let sep = match problem {
                AnyProblem::Separable(p) => p.clone(),
                AnyProblem::Constrained(p) => as_separable(p),
                AnyProblem::Saddle(_) => return Err(mismatch()),
            };
            let m = sep.m();
            let start_x = {
                let parts: Vec<Array1<f64>> =
                    sep.blocks.iter().map(|bl| start_part(&bl.theta, bl.a.ncols())).collect();
                let n: usize = sep.block_dims().iter().sum();
                let mut x = Array1::zeros(n);
                let mut at = 0;
                for part in parts {
                    x.slice_mut(ndarray::s![at..at + part.len()]).assign(&part);
                    at += part.len();
                }
                x
            };
            if solver == "pdalm" {
                let mut params = PdalmParams::defaults_for(&sep);
                for block in &mut params.blocks {
                    if let Some(r) = cfg.r {
                        block.r = r;
                    }
                    if let Some(tau) = cfg.tau {
                        block.q_spec = QSpec::ProxForm(tau);
                    } else if let Some(r) = cfg.r {
                        // re-derive the spectral default for the new r
                        let QSpec::ProxForm(t) = block.q_spec else { unreachable!() };
                        block.q_spec = QSpec::ProxForm(t * r);
                    }
                }
                params.control = control;
                solve_pdalm(&sep, &params, Iterate::new(start_x, Array1::zeros(m)))?
            } else {
                let mut params = DpalmParams::defaults_for(&sep);
                for block in &mut params.blocks {
                    if let Some(r) = cfg.r {
                        block.r = r;
                    }
                    if let Some(s) = cfg.s {
                        block.s = s;
                    }
                }
                params.control = control;
                solve_dpalm(&sep, &params, Iterate::new(start_x, Array1::zeros(m)))?
            }
        }
        "npdhg1" => {
            let AnyProblem::Saddle(p) = problem else { return Err(mismatch()) };
            let mut params = Npdhg1Params::defaults_with_r(p, cfg.r.unwrap_or(1.0));
            if let Some(tau) = cfg.tau {
                params.tau = tau;
            }
            params.control = control;
            let (m, n) = p.dims();
            let start = Iterate::new(start_part(&p.theta1, n), start_part(&p.theta2, m));
            solve_npdhg1(p, &params, start)?
        }
        "npdhg2" => {
            let AnyProblem::Saddle(p) = problem else { return Err(mismatch()) };
            let mut params = Npdhg2Params::defaults_with_r(p, cfg.r.unwrap_or(1.0));
            if let Some(sigma) = cfg.sigma {
                params.sigma = sigma;
            }
            params.control = control;
            let (m, n) = p.dims();
            let start = Iterate::new(start_part(&p.theta1, n), start_part(&p.theta2, m));
            solve_npdhg2(p, &params, start)?
        }
        "pdhg" => {
            let AnyProblem::Saddle(p) = problem else { return Err(mismatch()) };
            let params = PdhgParams {
                r: cfg.r.unwrap_or(1.0),
                s: cfg.s.unwrap_or(1.0),
                control,
            };
            let (m, n) = p.dims();
            let start = Iterate::new(start_part(&p.theta1, n), start_part(&p.theta2, m));
            solve_pdhg_classic(p, &params, start)?
        }
        other => bail!("unknown solver `{other}`"),
    };
    Ok(trace)
}

fn cmd_solve(args: SolveArgs) -> anyhow::Result<i32> {
    let cfg = resolved_config(args.config.as_deref(), &args.flags)?;
    let problem = if let Some(path) = &args.problem {
        load_problem(path)?
    } else if args.gen.kind.is_some() {
        generate(&args.gen.spec()?)?.problem
    } else if let Some(path) = &cfg.problem {
        load_problem(Path::new(path))?
    } else {
        bail!("no problem given: pass --problem, --kind, or a config with `problem`");
    };
    let solver = args
        .solver
        .clone()
        .or_else(|| cfg.solver.clone())
        .ok_or_else(|| anyhow!("no solver given"))?;

    let trace = run_solver(&problem, &solver, &cfg)?;

    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("trace"));
    let formats = args.format.clone().or_else(|| cfg.format.clone()).unwrap_or_else(|| "csv,json".into());
    for fmt in formats.split(',') {
        match fmt.trim() {
            "csv" => write_file(&out.with_extension("csv"), &trace.csv())?,
            "json" => write_file(&out.with_extension("json"), &trace.to_json()?)?,
            "" => {}
            other => bail!("unknown format `{other}` (expected csv or json)"),
        }
    }

    let last = trace.records.last();
    println!(
        "solver={} status={} iterations={} final_primal_residual={} final_objective={}",
        trace.solver_id,
        match trace.status {
            Status::Converged => "converged",
            Status::MaxIter if trace.diverged => "diverged",
            Status::MaxIter => "max_iter",
        },
        trace.iterations(),
        last.map_or(f64::NAN, |r| r.primal_residual),
        last.map_or(f64::NAN, |r| r.objective),
    );
    Ok(if trace.status == Status::Converged { EXIT_OK } else { EXIT_MAX_ITER })
}

fn cmd_reference(args: ReferenceArgs) -> anyhow::Result<i32> {
    let problem = load_problem(&args.problem)?;
    let reference = reference_solve(&problem, args.budget)?;
    write_file(&args.out, &serde_json::to_string(&reference)?)?;
    println!(
        "reference objective={} flagged={} -> {}",
        reference.objective,
        reference.flagged,
        args.out.display()
    );
    Ok(if reference.flagged { EXIT_MAX_ITER } else { EXIT_OK })
}

/// A probe inside `X × Λ` for the ergodic-bound check.
fn feasible_probe(
    problem: &ConstrainedProblem,
    rng: &mut SplitMix64,
) -> Iterate {
    let (m, n) = problem.dims();
    let mut x = Array1::from_shape_fn(n, |_| rng.next_normal());
    match &problem.theta {
        ProxKind::LinearNonneg { .. } => x.mapv_inplace(f64::abs),
        ProxKind::SimplexIndicator {} => x = project_simplex(&x),
        ProxKind::BoxIndicator { lo, hi } => {
            x = Array1::from_shape_fn(n, |i| x[i].max(lo[i]).min(hi[i]))
        }
        _ => {}
    }
    let mut dual = Array1::from_shape_fn(m, |_| rng.next_normal());
    if problem.sense == Sense::Ge {
        dual.mapv_inplace(f64::abs);
    }
    Iterate::new(x, dual)
}

fn cmd_certify(args: CertifyArgs) -> anyhow::Result<i32> {
    let problem = load_problem(&args.problem)?;
    let trace = SolveTrace::from_json(&read_to_string(&args.trace)?)?;
    let metric = metric_for(&problem, &trace.solver_id, &trace.params)?
        .ok_or_else(|| anyhow!("solver `{}` has no certified metric", trace.solver_id))?;

    let is_palm_constrained =
        trace.solver_id == "palm" && matches!(problem, AnyProblem::Constrained(_));
    let default_checks = if is_palm_constrained {
        "contraction,ergodic,dual-residual,h-positivity"
    } else {
        "contraction,h-positivity"
    };
    let checks: Vec<String> = args
        .checks
        .as_deref()
        .unwrap_or(default_checks)
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();

    let mut outcomes: Vec<CheckOutcome> = Vec::new();
    for check in &checks {
        match check.as_str() {
            "h-positivity" => {
                let margin = metric.positivity_margin(1000);
                outcomes.push(CheckOutcome {
                    name: check.clone(),
                    pass: margin > 0.0,
                    worst_margin: margin,
                    worst_iteration: None,
                });
            }
            "contraction" => {
                let Some(ref_path) = &args.reference else {
                    eprintln!(
                        "contraction check needs a reference solution; run \
                         `proxalm reference --problem ... --out ref.json` first"
                    );
                    return Ok(EXIT_NO_REFERENCE);
                };
                let reference: Reference = serde_json::from_str(&read_to_string(ref_path)?)?;
                if reference.flagged {
                    eprintln!("reference in {} is flagged; recompute it", ref_path.display());
                    return Ok(EXIT_NO_REFERENCE);
                }
                let w_star = match (&problem, trace.solver_id.as_str()) {
                    (AnyProblem::Constrained(p), "balm") => {
                        proxalm::solvers::balm::augmented_point(p, &reference.w)
                    }
                    _ => reference.w.clone(),
                };
                let slack = certificate_slack(metric.norm_sq(trace.start()));
                let rep = check_contraction(&trace, &metric, &w_star, slack)?;
                outcomes.push(CheckOutcome {
                    name: check.clone(),
                    pass: rep.pass,
                    worst_margin: rep.worst_margin,
                    worst_iteration: Some(rep.worst_iteration),
                });
            }
            "ergodic" => {
                let AnyProblem::Constrained(p) = &problem else {
                    bail!("ergodic check applies to constrained problems");
                };
                if trace.solver_id != "palm" {
                    bail!("ergodic check supports palm traces");
                }
                let mut rng = SplitMix64::new(0xCE277120);
                let probes: Vec<Iterate> = (0..20).map(|_| feasible_probe(p, &mut rng)).collect();
                let t_window = trace.iterations() - 1;
                let rep = check_ergodic_bound(&trace, p, &metric, 0, t_window, &probes)?;
                outcomes.push(CheckOutcome {
                    name: check.clone(),
                    pass: rep.pass,
                    worst_margin: rep.worst_margin,
                    worst_iteration: None,
                });
            }
            "dual-residual" => {
                let AnyProblem::Constrained(p) = &problem else {
                    bail!("dual-residual check applies to constrained problems");
                };
                if trace.solver_id != "palm" {
                    bail!("dual-residual check supports palm traces");
                }
                let params: PalmParams = serde_json::from_value(trace.params.clone())?;
                let mut worst = f64::INFINITY;
                let mut worst_iter = 0;
                for t in 1..=trace.iterations() {
                    let recomputed = dual_residual(&trace, p, &params, t)?;
                    let recorded = trace.records[t - 1].dual_residual;
                    let tol = 1e-9 * (1.0 + recorded.abs());
                    let margin = tol - (recomputed - recorded).abs();
                    if margin < worst {
                        worst = margin;
                        worst_iter = t;
                    }
                }
                outcomes.push(CheckOutcome {
                    name: check.clone(),
                    pass: worst >= 0.0,
                    worst_margin: worst,
                    worst_iteration: Some(worst_iter),
                });
            }
            other => bail!("unknown check `{other}`"),
        }
    }

    let report = CertificationReport::new(outcomes);
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("report.json"));
    write_file(&out, &serde_json::to_string_pretty(&report)?)?;
    for c in &report.checks {
        println!(
            "check {}: {} (worst margin {:.3e})",
            c.name,
            if c.pass { "pass" } else { "FAIL" },
            c.worst_margin
        );
    }
    if report.all_pass {
        Ok(EXIT_OK)
    } else {
        let failed: Vec<&str> =
            report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        eprintln!("failed checks: {}", failed.join(", "));
        Ok(EXIT_CHECK_FAILED)
    }
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<i32> {
    let problem = load_problem(&args.problem)?;
    let cfg = resolved_config(None, &args.flags)?;
    let solvers: Vec<String> = args
        .solvers
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if solvers.is_empty() {
        bail!("--solvers lists no solver");
    }

    let mut runs: Vec<(String, SolveTrace, f64)> = Vec::new();
    for name in &solvers {
        let t0 = Instant::now();
        let trace = run_solver(&problem, name, &cfg)?;
        runs.push((name.clone(), trace, t0.elapsed().as_secs_f64() * 1e3));
    }

    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("compare"));
    let max_iters = runs.iter().map(|(_, t, _)| t.iterations()).max().unwrap_or(0);
    let mut csv = String::from("k");
    for (name, _, _) in &runs {
        csv.push(',');
        csv.push_str(name);
    }
    csv.push('\n');
    for k in 0..max_iters {
        csv.push_str(&format!("{}", k + 1));
        for (_, trace, _) in &runs {
            csv.push(',');
            if let Some(rec) = trace.records.get(k) {
                csv.push_str(&format!("{}", rec.primal_residual));
            }
        }
        csv.push('\n');
    }
    write_file(&out.with_extension("csv"), &csv)?;

    let mut summary =
        String::from("solver,status,diverged,iterations,iterations_to_1e-6,final_objective,wall_ms\n");
    println!("solver      status     iters   to 1e-6   objective        wall");
    for (name, trace, wall) in &runs {
        let to_tol = trace
            .records
            .iter()
            .find(|r| r.primal_residual <= 1e-6)
            .map(|r| r.k.to_string())
            .unwrap_or_default();
        let status = match trace.status {
            Status::Converged => "converged",
            Status::MaxIter if trace.diverged => "diverged",
            Status::MaxIter => "max_iter",
        };
        let obj = trace.records.last().map_or(f64::NAN, |r| r.objective);
        summary.push_str(&format!(
            "{name},{status},{},{},{to_tol},{obj},{wall:.3}\n",
            trace.diverged,
            trace.iterations()
        ));
        println!(
            "{name:<11} {status:<10} {:<7} {:<9} {obj:<16.8} {wall:.1}ms",
            trace.iterations(),
            if to_tol.is_empty() { "-" } else { &to_tol },
        );
    }
    write_file(Path::new(&format!("{}_summary.csv", out.display())), &summary)?;
    Ok(EXIT_OK)
}
