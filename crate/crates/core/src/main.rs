use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use presstop::driver::config::{apply, parse_bool, problem_from, read_config};
use presstop::driver::export::{export_results, pressure_csv, sig6};
use presstop::driver::{optimize_with, ProblemSource, RunConfig};
use presstop::flow::FlowSolver;
use presstop::problems::{make_problem, ProblemKind};
use presstop::structure::{assemble_transformation, net_force, pressure_forces};
use presstop::{element::ElementMatrices, Error};

#[derive(Parser)]
#[command(
    name = "presstop",
    version,
    about = "Topology optimization under design-dependent pressure loads"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an optimization and write result files.
    Run(RunArgs),
    /// Solve the flow field of a problem and report the net pressure force.
    Validate(ValidateArgs),
    /// List the built-in problems with their default parameters.
    ListProblems,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    nelx: Option<usize>,
    #[arg(long)]
    nely: Option<usize>,
    #[arg(long)]
    volfrac: Option<f64>,
    #[arg(long)]
    penal: Option<f64>,
    #[arg(long)]
    rmin: Option<f64>,
    #[arg(long)]
    etaf: Option<f64>,
    #[arg(long)]
    betaf: Option<f64>,
    /// Include load sensitivities (true/false).
    #[arg(long)]
    lst: Option<String>,
    #[arg(long)]
    maxit: Option<usize>,
    /// Enables Heaviside projection with this terminal steepness.
    #[arg(long)]
    betamax: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value file; its entries override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Suppress per-iteration output.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value = "sp2")]
    problem: String,
    #[arg(long)]
    nelx: Option<usize>,
    #[arg(long)]
    nely: Option<usize>,
    /// Drainage term on or off.
    #[arg(long, default_value = "true")]
    drainage: String,
    /// Writes pressure.csv here when given.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: &RunArgs) -> Result<RunConfig, Error> {
    let file = match &args.config {
        Some(p) => Some(read_config(p)?),
        None => None,
    };
    let from_file = match &file {
        Some(m) => problem_from(m)?,
        None => None,
    };
    let source = match (from_file, &args.problem) {
        (Some(p), _) => p,
        (None, Some(name)) => ProblemSource::Named { name: name.parse()? },
        (None, None) => ProblemSource::Named {
            name: ProblemKind::Arch,
        },
    };
    let defaults_of = match &source {
        ProblemSource::Named { name } => *name,
        ProblemSource::Custom { .. } => ProblemKind::Arch,
    };
    let mut cfg = RunConfig::for_problem(defaults_of);
    cfg.problem = source;

    macro_rules! flag {
        ($field:ident) => {
            if let Some(v) = args.$field.clone() {
                cfg.$field = v;
            }
        };
    }
    flag!(nelx);
    flag!(nely);
    flag!(volfrac);
    flag!(penal);
    flag!(rmin);
    flag!(etaf);
    flag!(betaf);
    flag!(maxit);
    if let Some(v) = &args.lst {
        cfg.lst = parse_bool(v)?;
    }
    if args.betamax.is_some() {
        cfg.betamax = args.betamax;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    if let Some(m) = &file {
        apply(&mut cfg, m)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<(), Error> {
    let cfg = build_config(&args)?;
    let spec = cfg.build_problem()?;
    let mesh = spec.mesh.clone();
    let quiet = args.quiet;
    let mut observer = |it: usize, h: &presstop::driver::History, _: &[f64]| {
        if !quiet {
            let i = it - 1;
            println!(
                " It.:{it:5} Obj.:{:11.4} Vol.:{:7.3} ch.:{:7.3}",
                h.objective[i], h.volfrac[i], h.change[i]
            );
        }
        true
    };
    let result = match optimize_with(spec, &cfg, &mut observer) {
        Ok(r) => r,
        Err(failure) => {
            eprintln!("run aborted after {} iterations", failure.history.len());
            return Err(failure.error);
        }
    };
    println!(
        "problem {}: objective {} (compliance {}) after {} iterations ({}), M_nd = {}%",
        cfg.problem_name(),
        sig6(result.final_objective()),
        sig6(result.final_compliance()),
        result.iterations,
        if result.converged {
            "converged"
        } else {
            "iteration limit"
        },
        sig6(result.grayness)
    );
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("out-{}", cfg.problem_name())));
    export_results(&result, &cfg, &mesh, &dir)?;
    println!("results written to {}", dir.display());
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<(), Error> {
    let kind: ProblemKind = args.problem.parse()?;
    let d = kind.defaults();
    let (nelx, nely) = (args.nelx.unwrap_or(d.nelx), args.nely.unwrap_or(d.nely));
    let spec = make_problem(kind, nelx, nely)?;
    let mut cfg = RunConfig::for_problem(kind);
    cfg.drainage = parse_bool(&args.drainage)?;
    let params = cfg.material();
    let em = ElementMatrices::reference(params.nu);
    let flow = FlowSolver::new(&spec.mesh, &spec.pressure_bc)?;
    let a = flow.assemble(&em, &spec.frozen_field(), &params)?;
    let (p, _) = flow.solve(&a)?;
    let t = assemble_transformation(&spec.mesh, &em);
    let (fx, fy) = net_force(&pressure_forces(&t, &p));
    println!(
        "problem {kind} ({nelx} x {nely}), drainage {}",
        if cfg.drainage { "on" } else { "off" }
    );
    println!("MFx = {}", sig6(fx.abs()));
    println!("MFy = {}", sig6(fy.abs()));
    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        let path = dir.join("pressure.csv");
        std::fs::write(&path, pressure_csv(&spec.mesh, &p)).map_err(|source| Error::Io { path, source })?;
    }
    Ok(())
}

fn list_problems() {
    println!(
        "{:<10} {:>5} {:>5} {:>7} {:>5} {:>5} {:>5} {:>5} {:>5}  description",
        "name", "nelx", "nely", "volfrac", "penal", "rmin", "etaf", "betaf", "maxit"
    );
    for k in ProblemKind::ALL {
        let d = k.defaults();
        println!(
            "{:<10} {:>5} {:>5} {:>7} {:>5} {:>5} {:>5} {:>5} {:>5}  {}",
            k.name(),
            d.nelx,
            d.nely,
            d.volfrac,
            d.penal,
            d.rmin,
            d.etaf,
            d.betaf,
            d.maxit,
            k.description()
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate(args) => validate(args),
        Command::ListProblems => {
            list_problems();
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
