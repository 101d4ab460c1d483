//! Command-line front end: verification suites, figure reproduction,
//! budget planning and bound tables.
//!
//! Exit status: 0 when everything requested succeeded, 1 when a check failed
//! or output could not be written, 2 on a usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sketchlab::embeddings::EmbeddingKind;
use sketchlab::experiments::{
    classify, figure_grids, run_grid, ExperimentGrid, Figure, InstanceSpec, Scale, Task, TrialSummary,
};
use sketchlab::instances::{Basis, LsqKind, SpectrumKind};
use sketchlab::output::{csv_string, json_string, svg_string};
use sketchlab::theory::{
    budget_for_epsilon, continuous_ratio, default_q_grid, gn_bound, gn_lower_factor, gn_prefactor, plan_split,
    rsvd_bound_hmt, rsvd_bound_sharp, rsvd_lower_factor, ss_dimensions, ss_ratio_gaussian, ss_ratio_haar,
    BoundQuery, BudgetMethod, GammaKind, PlanObjective, SpectrumTail,
};
use sketchlab::verify::{run_suite, Suite, VerifyOptions};
use sketchlab::FieldTag;

#[derive(Parser)]
#[command(name = "sketchlab", version, about = "Randomized sketching: verification suites, figures, planning and bounds")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, env = "SKETCHLAB_SEED", default_value_t = 7)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and print PASS/FAIL per check.
    Verify {
        /// sketch-solve, wishart, beta, algebraic, nystrom, bounds, planner,
        /// universality, determinism or all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Override the trial count of every Monte Carlo check.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Reproduce figure 1 (sketch-and-solve) or 2 (randomized SVD).
    Figure {
        #[arg(long, value_parser = ["1", "2"])]
        id: String,
        #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
        scale: ScaleArg,
        /// Trials per cell (default: 300 desk, 1000 paper).
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a custom grid.
    Run(RunArgs),
    /// Sketch dimensions, budget splits and matvec budgets.
    Plan(PlanArgs),
    /// Evaluate every applicable closed-form bound.
    Bounds(BoundsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Also write an SVG plot of the same rows here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    SketchSolve,
    Rsvd,
    Nystrom,
    GenNystrom,
}

#[derive(Clone, Copy, ValueEnum)]
enum InstanceArg {
    Coherent,
    Incoherent,
    StepCoherent,
    StepIncoherent,
    PolyCoherent,
    PolyIncoherent,
    TwoEig,
    RectHard,
    RandomRect,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    #[arg(long, value_enum)]
    instance: InstanceArg,
    /// Ambient dimension (columns of a rectangular instance).
    #[arg(long, default_value_t = 300)]
    n: usize,
    /// Columns of a least-squares design, rows of a rectangular instance.
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Rank of a two-level or random instance.
    #[arg(long, default_value_t = 50)]
    r: usize,
    /// Number of large singular values of a two-level instance.
    #[arg(long, default_value_t = 5)]
    q: usize,
    /// Large value of a two-level instance.
    #[arg(long, default_value_t = 1e6)]
    a: f64,
    /// Comma-separated sketch dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    ell: Vec<usize>,
    /// Left sketch dimension for generalized Nyström.
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated embedding kinds.
    #[arg(long, value_delimiter = ',', default_value = "gaussian")]
    embeddings: Vec<EmbeddingKind>,
    /// Left sketch kind for generalized Nyström.
    #[arg(long, default_value = "gaussian")]
    psi: EmbeddingKind,
    /// Nonzeros per row for the sparse kinds.
    #[arg(long)]
    zeta: Option<usize>,
    #[arg(long, default_value = "real")]
    field: FieldTag,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct PlanArgs {
    /// Target rank for budget planning.
    #[arg(long)]
    q: Option<usize>,
    /// Total number of matrix-vector products to split as k + ell.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Method for the epsilon budget (both when omitted).
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Rank of the least-squares design for sketch-and-solve dimensions.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value = "real")]
    field: FieldTag,
    /// Objective used to rank splits.
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Complex)]
    objective: ObjectiveArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Gn,
    Rsvd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Complex,
    Real,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value = "real")]
    field: FieldTag,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    /// Left sketch distribution for the generalized Nyström prefactor.
    #[arg(long, value_enum, default_value_t = GammaArg::Gaussian)]
    gamma: GammaArg,
    /// Squared singular values, one per line, descending.
    #[arg(long)]
    spectrum: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GammaArg {
    Gaussian,
    Haar,
}

/// Process exit paths.
enum Failure {
    Usage(String),
    Runtime(String),
}

type CliResult = Result<ExitCode, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { suite, trials } => cmd_verify(&suite, cli.seed, trials),
        Command::Figure { id, scale, trials, out } => cmd_figure(&id, scale, trials, cli.seed, &out),
        Command::Run(args) => cmd_run(&args, cli.seed),
        Command::Plan(args) => cmd_plan(&args),
        Command::Bounds(args) => cmd_bounds(&args),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn cmd_verify(suite: &str, seed: u64, trials: Option<usize>) -> CliResult {
    let suite: Suite = suite.parse().map_err(usage)?;
    if trials.is_some_and(|t| t < 2) {
        return Err(usage("--trials must be at least 2"));
    }
    let checks = run_suite(suite, &VerifyOptions { seed, trials });
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", checks.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(rows: &[TrialSummary], figure: Option<u8>, title: &str, out: &OutputArgs) -> Result<(), Failure> {
    let runtime = |e: sketchlab::Error| Failure::Runtime(e.to_string());
    let text = match out.format {
        Format::Csv => csv_string(figure, rows).map_err(runtime)?,
        Format::Json => json_string(rows).map_err(runtime)?,
        Format::Svg => svg_string(title, rows),
    };
    write_output(out.out.as_deref(), &text)?;
    if let Some(svg) = &out.svg {
        write_output(Some(svg), &svg_string(title, rows))?;
    }
    Ok(())
}

fn cmd_figure(id: &str, scale: ScaleArg, trials: Option<usize>, seed: u64, out: &OutputArgs) -> CliResult {
    let fig: Figure = id.parse().map_err(usage)?;
    let scale = match scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Paper => Scale::Paper,
    };
    let mut rows = Vec::new();
    for grid in figure_grids(fig, scale, seed, trials) {
        rows.extend(run_grid(&grid).map_err(usage)?);
    }
    let title = match fig {
        Figure::Fig1 => "sketch-and-solve: mean epsilon against embedding dimension",
        Figure::Fig2 => "randomized SVD: mean squared error against embedding dimension",
    };
    emit(&rows, Some(fig.number()), title, out)?;
    for v in classify(fig, scale, &rows) {
        let haar = v.haar_deviation.map(|h| format!(", haar {h:.3}")).unwrap_or_default();
        eprintln!(
            "{}/{}: mean relative deviation gaussian {:.3}{haar}; within tolerance: {}",
            v.instance, v.embedding, v.gaussian_deviation, v.within_tolerance
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(args: &RunArgs, seed: u64) -> CliResult {
    let (n, d) = (args.n, args.d);
    let psd = |basis, spectrum| InstanceSpec::Psd { basis, spectrum, n };
    let instance = match args.instance {
        InstanceArg::Coherent => InstanceSpec::Lsq { kind: LsqKind::Coherent, n, d, p: args.p },
        InstanceArg::Incoherent => InstanceSpec::Lsq { kind: LsqKind::Incoherent, n, d, p: args.p },
        InstanceArg::StepCoherent => psd(Basis::Identity, SpectrumKind::Step),
        InstanceArg::StepIncoherent => psd(Basis::Dct, SpectrumKind::Step),
        InstanceArg::PolyCoherent => psd(Basis::Identity, SpectrumKind::Poly),
        InstanceArg::PolyIncoherent => psd(Basis::Dct, SpectrumKind::Poly),
        InstanceArg::TwoEig => InstanceSpec::TwoEig { a: args.a, b: 1.0, q: args.q, r: args.r, n },
        InstanceArg::RectHard => InstanceSpec::RectHard { a: args.a, q: args.q, r: args.r, d, n },
        InstanceArg::RandomRect => InstanceSpec::RandomRect { d, n, rank: args.r, seed },
    };
    let task = match args.task {
        TaskArg::SketchSolve => Task::SketchSolve,
        TaskArg::Rsvd => Task::Rsvd,
        TaskArg::Nystrom => Task::Nystrom,
        TaskArg::GenNystrom => Task::GenNystrom,
    };
    let title = format!("{} on {}", task, instance.label());
    let mut grid = ExperimentGrid::new(task, instance, args.embeddings.clone(), args.ell.clone());
    grid.field = args.field;
    grid.k = args.k;
    grid.psi = args.psi;
    grid.zeta = args.zeta;
    grid.trials = args.trials;
    grid.master_seed = seed;
    let rows = run_grid(&grid).map_err(usage)?;
    emit(&rows, None, &title, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_plan(args: &PlanArgs) -> CliResult {
    let mut printed = false;
    if let (Some(r), Some(eps)) = (args.r, args.epsilon) {
        let (min, sufficient) = ss_dimensions(r, args.field, eps).map_err(usage)?;
        println!("sketch-and-solve (r = {r}, {}, epsilon = {eps}): ell_min = {min}, ell_sufficient = {sufficient}", args.field);
        printed = true;
    }
    if let (Some(q), Some(t)) = (args.q, args.budget) {
        let objective = match args.objective {
            ObjectiveArg::Complex => PlanObjective::Complex,
            ObjectiveArg::Real => PlanObjective::Real,
        };
        let split = plan_split(q, t, objective).map_err(usage)?;
        println!(
            "split (q = {q}, t = {t}): k = {}, ell = {}, objective {:.4} (continuous k/ell = {:.4})",
            split.k,
            split.ell,
            split.bound,
            continuous_ratio(q, t)
        );
        printed = true;
    }
    if let (Some(q), Some(eps)) = (args.q, args.epsilon) {
        let methods: Vec<(&str, BudgetMethod)> = match args.method {
            Some(MethodArg::Gn) => vec![("generalized nystrom", BudgetMethod::GeneralizedNystrom)],
            Some(MethodArg::Rsvd) => vec![("rsvd", BudgetMethod::Rsvd)],
            None => vec![("generalized nystrom", BudgetMethod::GeneralizedNystrom), ("rsvd", BudgetMethod::Rsvd)],
        };
        for (name, m) in methods {
            println!("{name} budget (q = {q}, epsilon = {eps}): {} matvecs", budget_for_epsilon(q, eps, m).map_err(usage)?);
        }
        printed = true;
    }
    if printed {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(usage("plan needs --r with --epsilon, --q with --budget, or --q with --epsilon"))
    }
}

fn read_spectrum(path: &Path) -> Result<SpectrumTail, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|e| usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        values.push(v);
    }
    SpectrumTail::new(values).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_bounds(args: &BoundsArgs) -> CliResult {
    let field = args.field;
    let spectrum = args.spectrum.as_deref().map(read_spectrum).transpose()?;
    let gamma_kind = match args.gamma {
        GammaArg::Gaussian => GammaKind::Gaussian,
        GammaArg::Haar => GammaKind::HaarOrthonormal,
    };
    let r = args.r.or(spectrum.as_ref().map(|s| s.rank()));
    let query = BoundQuery {
        field,
        n: args.n.unwrap_or(0),
        d: args.d.unwrap_or(0),
        r: r.unwrap_or(0),
        ell: args.ell.unwrap_or(0),
        k: args.k.unwrap_or(0),
        q: args.q.unwrap_or(0),
        gamma_kind,
        ..Default::default()
    };
    let mut lines: Vec<(String, Result<f64, String>)> = Vec::new();
    let need = |names: &[(&str, bool)]| -> Option<String> {
        let missing: Vec<&str> = names.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
        (!missing.is_empty()).then(|| format!("requires {}", missing.join(", ")))
    };
    let has = (args.n.is_some(), args.d.is_some(), r.is_some(), args.ell.is_some(), args.k.is_some(), args.q.is_some());
    let mut push = |name: &str, req: Option<String>, eval: &dyn Fn() -> sketchlab::Result<f64>| {
        let value = match req {
            Some(msg) => Err(msg),
            None => eval().map_err(|e| e.to_string()),
        };
        lines.push((name.to_string(), value));
    };
    push("sketch-solve ratio, gaussian", need(&[("--r", has.2), ("--ell", has.3)]), &|| ss_ratio_gaussian(&query));
    push("sketch-solve ratio, haar (minimax)", need(&[("--n", has.0), ("--r", has.2), ("--ell", has.3)]), &|| {
        ss_ratio_haar(&query)
    });
    push("rsvd hmt factor 1 + q/(ell - q - alpha)", need(&[("--ell", has.3), ("--q", has.5)]), &|| {
        let a = field.alpha();
        if query.ell < query.q + a + 2 {
            return Err(sketchlab::Error::InvalidArgument(format!("needs ell >= q + {}", a + 2)));
        }
        Ok(1.0 + query.q as f64 / (query.ell - query.q - a) as f64)
    });
    push("rsvd sharp factor (r - ell)/(r - q)(1 + q/(ell - q - alpha))", need(&[("--r", has.2), ("--ell", has.3), ("--q", has.5)]), &|| {
        rsvd_lower_factor(query.r, query.ell, query.q, field)
    });
    push("generalized nystrom prefactor", need(&[("--ell", has.3), ("--k", has.4)]).or_else(|| {
        (gamma_kind == GammaKind::HaarOrthonormal && !has.1).then(|| "requires --d for a haar psi".to_string())
    }), &|| gn_prefactor(&query));
    push("generalized nystrom lower factor", need(&[("--d", has.1), ("--r", has.2), ("--ell", has.3), ("--k", has.4), ("--q", has.5)]), &|| {
        gn_lower_factor(&query)
    });
    if let Some(tail) = &spectrum {
        let grid = default_q_grid(query.ell, field);
        push("rsvd hmt bound (spectrum)", need(&[("--ell", has.3)]), &|| rsvd_bound_hmt(&grid, query.ell, field, tail));
        push("rsvd sharp bound (spectrum)", need(&[("--ell", has.3)]), &|| {
            rsvd_bound_sharp(&grid, query.r, query.ell, field, tail)
        });
        push("generalized nystrom bound (spectrum)", need(&[("--ell", has.3), ("--k", has.4)]), &|| gn_bound(&query, tail));
    }
    let mut ok = 0;
    for (name, value) in &lines {
        match value {
            Ok(v) => {
                ok += 1;
                println!("{name}: {v:.4}");
            }
            Err(msg) => println!("{name}: n/a ({msg})"),
        }
    }
    if ok == 0 {
        return Err(usage("no bound could be evaluated with the given parameters"));
    }
    Ok(ExitCode::SUCCESS)
}
