//! Command-line interface: single solves, table reproductions, and
//! interior evaluation.

use clap::{Args, Parser, Subcommand};
use dlp2d_cli::config::{
    run_solve, ConfigError, GeometryChoice, PrecondChoice, RhsChoice, SolveConfig,
};
use dlp2d_cli::experiments::run_table;
use dlp2d::geometry::write_geometry_csv;
use dlp2d::multigrid::CoarseMode;
use dlp2d::nystrom::eval_interior;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dlp2d",
    about = "Interior Laplace Dirichlet solver via the double-layer boundary integral equation, \
             with FMM-based GMRES preconditioners",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured solve; writes report.csv and residuals.csv.
    Solve(SolveArgs),
    /// Reproduce an experiment table as CSV: aspect-ratio, lobes,
    /// two-level, coarsening, coarse512, single-grid, smoother-spectrum.
    Table(TableArgs),
    /// Solve and evaluate the interior potential at target points from a
    /// CSV file with `x,y` rows; writes eval.csv.
    Eval(EvalArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Boundary curve: ellipse, simple, moderate, flower.
    #[arg(long, default_value = "flower")]
    geometry: String,
    /// Ellipse aspect ratio (>= 1).
    #[arg(long, default_value_t = 2.0)]
    aspect: f64,
    /// Number of flower lobes (>= 2).
    #[arg(long, default_value_t = 4)]
    lobes: u32,
    /// Number of boundary points (power of 2).
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Quadtree leaf capacity; also the half-width of the banded
    /// preconditioner.
    #[arg(long, default_value_t = 10)]
    leaf: usize,
    /// Multipole moments per box for compressed far-field blocks.
    #[arg(long, default_value_t = 4)]
    moments: usize,
    /// Preconditioner: none|picard, banded, blockdiag, ulist[-ilu],
    /// vlist1[-exact], vlist2, fmmschur[-ilu], two-grid-<smoother>,
    /// mg-<smoother>, combined.
    #[arg(long, default_value = "none")]
    precond: String,
    /// Coarsest grid size for two-grid/multigrid preconditioners.
    #[arg(long, default_value_t = 128)]
    nmin: usize,
    /// Coarse operator construction: geometric or projection.
    #[arg(long, default_value = "geometric")]
    coarsening: String,
    /// Pre/post smoothing counts, e.g. "1,0" or "1,1".
    #[arg(long, default_value = "1,0")]
    cycle: String,
    /// Coarse-grid GMRES iterations in projection mode.
    #[arg(long, default_value_t = 20)]
    mcoarse: usize,
    /// Boundary data: harmonic, random, log-trace, charges.
    #[arg(long, default_value = "harmonic")]
    rhs: String,
    /// Seed for random boundary data.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// GMRES relative-residual tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also write the discretized geometry as geometry.csv.
    #[arg(long, default_value_t = false)]
    dump_geometry: bool,
}

#[derive(Args)]
struct TableArgs {
    /// Table name.
    name: String,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for random boundary data.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Include the N = 16384 case of the single-grid table (dense storage
    /// is about 2 GB and the factor SVDs take a while).
    #[arg(long, default_value_t = false)]
    large: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// CSV file of interior target points, one `x,y` pair per line.
    #[arg(long)]
    targets: PathBuf,
}

fn parse_config(c: &CommonArgs) -> Result<SolveConfig, ConfigError> {
    let geometry = match c.geometry.as_str() {
        "ellipse" => GeometryChoice::Ellipse { aspect: c.aspect },
        "simple" => GeometryChoice::Simple,
        "moderate" => GeometryChoice::Moderate,
        "flower" => GeometryChoice::Flower { lobes: c.lobes },
        other => {
            return Err(ConfigError(format!(
                "unknown geometry {other:?} (ellipse|simple|moderate|flower)"
            )))
        }
    };
    let coarsening = match c.coarsening.as_str() {
        "geometric" => CoarseMode::Geometric,
        "projection" => CoarseMode::Projection,
        other => {
            return Err(ConfigError(format!(
                "unknown coarsening {other:?} (geometric|projection)"
            )))
        }
    };
    let cycle = {
        let parts: Vec<_> = c.cycle.split(',').collect();
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| ConfigError(format!("bad cycle spec {:?}", c.cycle)))
        };
        match parts.as_slice() {
            [pre, post] => (parse(pre)?, parse(post)?),
            _ => return Err(ConfigError(format!("bad cycle spec {:?}", c.cycle))),
        }
    };
    let cfg = SolveConfig {
        geometry,
        n: c.n,
        leaf: c.leaf,
        moments: c.moments,
        precond: PrecondChoice::parse(&c.precond)?,
        n_min: c.nmin,
        coarsening,
        cycle,
        m_coarse: c.mcoarse,
        rhs: RhsChoice::parse(&c.rhs)?,
        seed: c.seed,
        tol: c.tol,
        max_iter: 2000,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_solve(args: &SolveArgs) -> Result<bool, ConfigError> {
    let cfg = parse_config(&args.common)?;
    let out = &args.common.out;
    std::fs::create_dir_all(out)
        .map_err(|e| ConfigError(format!("cannot create {out:?}: {e}")))?;
    let outcome = run_solve(&cfg)?;
    let rep = &outcome.report;
    let mut report = String::new();
    report.push_str(
        "geometry,n,preconditioner,rhs,tol,iterations,converged,relres,scaled_matvecs\n",
    );
    report.push_str(&format!(
        "{},{},{},{},{:e},{},{},{:.16e},{}\n",
        cfg.geometry.name(),
        cfg.n,
        args.common.precond,
        outcome.rhs.source,
        cfg.tol,
        rep.iterations,
        rep.converged,
        rep.residual_history.last().copied().unwrap_or(1.0),
        rep.scaled_matvecs
    ));
    std::fs::write(out.join("report.csv"), report)
        .map_err(|e| ConfigError(format!("cannot write report.csv: {e}")))?;
    let mut buf = Vec::new();
    rep.write_residuals_csv(&mut buf).unwrap();
    std::fs::write(out.join("residuals.csv"), buf)
        .map_err(|e| ConfigError(format!("cannot write residuals.csv: {e}")))?;
    if args.dump_geometry {
        let mut buf = Vec::new();
        write_geometry_csv(&outcome.grid, &mut buf).unwrap();
        std::fs::write(out.join("geometry.csv"), buf)
            .map_err(|e| ConfigError(format!("cannot write geometry.csv: {e}")))?;
    }
    println!(
        "{}: n={} precond={} iterations={} converged={} scaled_matvecs={}",
        cfg.geometry.name(),
        cfg.n,
        args.common.precond,
        rep.iterations,
        rep.converged,
        rep.scaled_matvecs
    );
    Ok(rep.converged)
}

fn cmd_eval(args: &EvalArgs) -> Result<bool, ConfigError> {
    let cfg = parse_config(&args.common)?;
    let out = &args.common.out;
    std::fs::create_dir_all(out)
        .map_err(|e| ConfigError(format!("cannot create {out:?}: {e}")))?;
    let text = std::fs::read_to_string(&args.targets)
        .map_err(|e| ConfigError(format!("cannot read {:?}: {e}", args.targets)))?;
    let mut targets = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<_> = line.split(',').collect();
        if parts.len() != 2 {
            return Err(ConfigError(format!("bad target line {line:?}")));
        }
        match (parts[0].trim().parse::<f64>(), parts[1].trim().parse::<f64>()) {
            (Ok(x), Ok(y)) => targets.push((x, y)),
            _ if targets.is_empty() => continue, // header line
            _ => return Err(ConfigError(format!("bad target line {line:?}"))),
        }
    }
    let outcome = run_solve(&cfg)?;
    let values = eval_interior(&outcome.grid, &outcome.solution, &targets);
    let mut buf = String::from("x,y,u\n");
    for (i, &(x, y)) in targets.iter().enumerate() {
        buf.push_str(&format!("{x:.16e},{y:.16e},{:.16e}\n", values[i]));
    }
    std::fs::write(out.join("eval.csv"), buf)
        .map_err(|e| ConfigError(format!("cannot write eval.csv: {e}")))?;
    Ok(outcome.report.converged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Table(args) => {
            run_table(&args.name, &args.out, args.seed, args.large).map(|_| true)
        }
        Command::Eval(args) => cmd_eval(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: solver did not reach the requested tolerance");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
