use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use robust_sensing::analysis::{
    check_uniqueness_rank, falsify_range_condition, mcle_to_rs, recovery_bound_constants, solve_p0_bruteforce,
    solve_rsn_bruteforce, RangeCheck, Uniqueness, DEFAULT_FEAS_TOL,
};
use robust_sensing::experiments::{
    manifest_json, run_mse_curve, run_phase_diagram, run_rs_table, run_rsn_table, write_curve_csv, write_mse_csv,
    write_phase_csv, write_table_csv, ExperimentSpec, HUBER_CONSTANT,
};
use robust_sensing::io::{output_to_json, problem_from_json, problem_to_json, to_canonical_json};
use robust_sensing::linalg::toeplitz;
use robust_sensing::solvers;
use robust_sensing::{Config, Matrix, Problem, RngStream};

#[derive(Parser)]
#[command(name = "robust-sensing", version, about = "Robust estimation from unreliable linear sensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one estimator on a problem file.
    Solve(SolveArgs),
    /// Check the rank condition for uniqueness of a consistent set of size s.
    CheckUnique(CheckArgs),
    /// Search for violations of the range-space recovery condition.
    FalsifyRange(FalsifyArgs),
    /// Print the constants of the probabilistic recovery bound.
    Bound(BoundArgs),
    /// Embed a max-consistent-equations instance as a sensing problem.
    ReduceMcle(ReduceArgs),
    /// Empirical recovery rate over the (gamma, beta) grid.
    PhaseDiagram(PhaseArgs),
    /// Noise-free sensor classification table at (n, m, k) = (20, 4, 16).
    RsTable(TableArgs),
    /// Estimation error versus number of reliable sensors at (20, 4, 16), 10 dB.
    MseCurve(MseArgs),
    /// Noisy sensor classification table at (80, 8, 32), 5 dB, Laplacian outliers.
    RsnTable(RsnTableArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveMethod {
    Ls,
    L1,
    Huber,
    P1,
    P2,
    P3,
    #[value(name = "p3-path")]
    P3Path,
    P4,
    #[value(name = "p3-colored")]
    P3Colored,
    #[value(name = "p4-colored")]
    P4Colored,
    #[value(name = "p0-oracle")]
    P0Oracle,
    #[value(name = "rsn-oracle")]
    RsnOracle,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    method: SolveMethod,
    /// Problem file (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Group penalty λ.
    #[arg(long, conflicts_with = "lambda_auto")]
    lambda: Option<f64>,
    /// Set λ = 1.34 σ √m and τ = 1.34 σ (λ = 1.34 √m / σ for the correlated-noise methods).
    #[arg(long, requires = "sigma")]
    lambda_auto: bool,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    /// Scalar Huber threshold τ.
    #[arg(long)]
    tau: Option<f64>,
    /// Descending penalties for p3-path, comma separated.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Vec<f64>,
    /// Noise covariance file (JSON array of rows) for the correlated-noise methods.
    #[arg(long, conflicts_with = "toeplitz")]
    cov: Option<PathBuf>,
    /// Use the covariance σ² T with T Toeplitz of first column ρ^j (ρ = 0.9 when given without a value).
    #[arg(long, requires = "sigma", num_args = 0..=1, default_missing_value = "0.9")]
    toeplitz: Option<f64>,
    /// Number of consistent sensors for rsn-oracle.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_FEAS_TOL)]
    feas_tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    delta: f64,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1e-8)]
    abs_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    /// Reweighting passes of p2, p4 and p4-colored.
    #[arg(long, default_value_t = 1)]
    outer_iters: usize,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    s: usize,
}

#[derive(Args)]
struct FalsifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

#[derive(Args)]
struct ReduceArgs {
    /// JSON file `{"C": [[...], ...], "d": [...]}`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON manifest (spec, seed, version) to this file.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for trial-level parallelism.
    #[arg(long, env = "ROBUST_SENSING_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Also write the curve β = (√γ + 1)/2 at each grid γ.
    #[arg(long)]
    curve_out: Option<PathBuf>,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args)]
struct RsnTableArgs {
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args)]
struct MseArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Toeplitz-correlated noise instead of white noise.
    #[arg(long)]
    colored: bool,
    #[command(flatten)]
    common: ExperimentArgs,
}

fn usage_error(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ArgumentConflict, msg).exit()
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing output: {}", path.display())),
        None => std::io::stdout().write_all(bytes).context("writing output"),
    }
}

fn load_problem(path: &Path) -> Result<Problem> {
    let text = fs::read_to_string(path).with_context(|| format!("loading problem: {}", path.display()))?;
    let (problem, _) = problem_from_json(&text).with_context(|| format!("loading problem: {}", path.display()))?;
    Ok(problem)
}

fn load_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).with_context(|| format!("loading covariance: {}", path.display()))?;
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(&text).with_context(|| format!("loading covariance: {}", path.display()))?;
    Matrix::from_rows(&rows).context("loading covariance")
}

#[derive(Serialize)]
struct P0Doc<'a> {
    x: &'a [f64],
    support: &'a [usize],
    s: usize,
}

#[derive(Serialize)]
struct RsnDoc<'a> {
    x: &'a [f64],
    support: &'a [usize],
    objective: f64,
    rank_deficient_subsets: usize,
}

fn solve(args: &SolveArgs) -> Result<()> {
    let problem = load_problem(&args.input)?;
    let cfg = Config {
        lambda: 1.0,
        delta: args.delta,
        epsilon: args.epsilon,
        max_iters: args.max_iters,
        rho: args.rho,
        abs_tol: args.abs_tol,
        rel_tol: args.rel_tol,
    };
    let sqrt_m = (problem.m() as f64).sqrt();
    let colored = matches!(args.method, SolveMethod::P3Colored | SolveMethod::P4Colored);
    let lambda = || -> f64 {
        match (args.lambda, args.lambda_auto, args.sigma) {
            (Some(l), _, _) => l,
            (None, true, Some(s)) if colored => HUBER_CONSTANT * sqrt_m / s,
            (None, true, Some(s)) => HUBER_CONSTANT * s * sqrt_m,
            _ => usage_error("this method needs --lambda or --lambda-auto --sigma"),
        }
    };
    let covariance = || -> Result<Matrix> {
        match (&args.cov, args.toeplitz, args.sigma) {
            (Some(path), _, _) => load_matrix(path),
            (None, Some(rho), Some(sigma)) => {
                let len = problem.k() * problem.m();
                let col: Vec<f64> = (0..len).map(|j| rho.powi(j as i32)).collect();
                Ok(toeplitz(&col).scaled(sigma * sigma))
            }
            _ => usage_error("correlated-noise methods need --cov or --toeplitz with --sigma"),
        }
    };

    let json = match args.method {
        SolveMethod::Ls => output_to_json(&solvers::solve_ls(&problem).context("solving")?)?,
        SolveMethod::L1 => output_to_json(&solvers::solve_l1(&problem, &cfg).context("solving")?)?,
        SolveMethod::Huber => {
            let tau = match (args.tau, args.lambda_auto, args.sigma) {
                (Some(t), _, _) => t,
                (None, true, Some(s)) => HUBER_CONSTANT * s,
                _ => usage_error("huber needs --tau or --lambda-auto --sigma"),
            };
            output_to_json(&solvers::solve_huber_scalar(&problem, tau, &cfg).context("solving")?)?
        }
        SolveMethod::P1 => output_to_json(&solvers::solve_p1(&problem, &cfg, None).context("solving")?)?,
        SolveMethod::P2 => output_to_json(&solvers::solve_p2(&problem, &cfg, args.outer_iters).context("solving")?)?,
        SolveMethod::P3 => output_to_json(&solvers::solve_p3(&problem, &cfg.with_lambda(lambda())).context("solving")?)?,
        SolveMethod::P4 => output_to_json(
            &solvers::solve_p4(&problem, &cfg.with_lambda(lambda()), args.outer_iters).context("solving")?,
        )?,
        SolveMethod::P3Path => {
            if args.lambda_grid.is_empty() {
                usage_error("p3-path needs --lambda-grid");
            }
            let path = solvers::solve_p3_path(&problem, &args.lambda_grid, &cfg).context("solving")?;
            let docs = path
                .iter()
                .map(|o| Ok(serde_json::from_str::<serde_json::Value>(&output_to_json(o)?)?))
                .collect::<Result<Vec<_>>>()?;
            to_canonical_json(&docs)?
        }
        SolveMethod::P3Colored => {
            let sigma = covariance()?;
            output_to_json(&solvers::solve_p3_colored(&problem, &sigma, &cfg.with_lambda(lambda())).context("solving")?)?
        }
        SolveMethod::P4Colored => {
            let sigma = covariance()?;
            output_to_json(
                &solvers::solve_p4_colored(&problem, &sigma, &cfg.with_lambda(lambda()), args.outer_iters)
                    .context("solving")?,
            )?
        }
        SolveMethod::P0Oracle => {
            let sol = solve_p0_bruteforce(&problem, args.feas_tol).context("solving")?;
            to_canonical_json(&P0Doc {
                x: &sol.x,
                support: &sol.support,
                s: sol.s,
            })?
        }
        SolveMethod::RsnOracle => {
            let s = args.s.unwrap_or_else(|| usage_error("rsn-oracle needs --s"));
            let sol = solve_rsn_bruteforce(&problem, s).context("solving")?;
            to_canonical_json(&RsnDoc {
                x: &sol.x,
                support: &sol.support,
                objective: sol.objective,
                rank_deficient_subsets: sol.rank_deficient_subsets,
            })?
        }
    };
    write_output(args.out.as_deref(), json.as_bytes())
}

fn check_unique(args: &CheckArgs) -> Result<()> {
    let problem = load_problem(&args.input)?;
    match check_uniqueness_rank(&problem, args.s).context("checking rank condition")? {
        Uniqueness::Unique => println!("unique"),
        Uniqueness::NotUnique { subset } => println!("not unique: rank-deficient sensor subset {subset:?}"),
    }
    Ok(())
}

fn falsify(args: &FalsifyArgs) -> Result<()> {
    let problem = load_problem(&args.input)?;
    let mut rng = RngStream::new(args.seed, 0);
    match falsify_range_condition(&problem, args.s, args.trials, &mut rng).context("searching for a violation")? {
        RangeCheck::NoCounterexample => {
            println!("no counterexample found in {} trials (this does not prove the condition)", args.trials)
        }
        RangeCheck::Counterexample { u, subset, .. } => {
            println!("counterexample: subset {subset:?}");
            println!("u = {}", to_canonical_json(&u)?.trim_end());
        }
    }
    Ok(())
}

fn bound(args: &BoundArgs) -> Result<()> {
    let b = recovery_bound_constants(args.n, args.m, args.k, args.s, args.alpha).context("computing bound")?;
    println!("beta = {}", b.beta);
    println!("gamma = {}", b.gamma);
    println!("beta_star = {}", b.beta_star);
    println!("c0 = {}", b.c0);
    match b.min_m {
        Some(m) => println!("min_m = {m}"),
        None => println!("min_m = n/a"),
    }
    if !b.applicable {
        println!("inapplicable: beta <= beta_star");
    }
    Ok(())
}

#[derive(Deserialize)]
struct McleDoc {
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    d: Vec<f64>,
}

fn reduce(args: &ReduceArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input).with_context(|| format!("loading equations: {}", args.input.display()))?;
    let doc: McleDoc = serde_json::from_str(&text).context("loading equations")?;
    let c = Matrix::from_rows(&doc.c).context("loading equations")?;
    let problem = mcle_to_rs(&c, &doc.d, args.m).context("reducing")?;
    write_output(args.out.as_deref(), problem_to_json(&problem, None)?.as_bytes())
}

fn setup_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        if t == 0 {
            usage_error("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("starting worker threads")?;
    }
    Ok(())
}

fn emit<R: Serialize>(
    common: &ExperimentArgs,
    spec: &ExperimentSpec,
    rows: &[R],
    csv: impl Fn(&mut Vec<u8>, &[R]) -> robust_sensing::Result<()>,
) -> Result<()> {
    let bytes = match common.format {
        Format::Csv => {
            let mut buf = Vec::new();
            csv(&mut buf, rows).context("writing output")?;
            buf
        }
        Format::Json => to_canonical_json(rows)?.into_bytes(),
    };
    write_output(common.out.as_deref(), &bytes)?;
    if let Some(path) = &common.manifest {
        fs::write(path, manifest_json(spec)?).with_context(|| format!("writing manifest: {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => solve(&a),
        Command::CheckUnique(a) => check_unique(&a),
        Command::FalsifyRange(a) => falsify(&a),
        Command::Bound(a) => bound(&a),
        Command::ReduceMcle(a) => reduce(&a),
        Command::PhaseDiagram(a) => {
            setup_threads(a.common.threads)?;
            let spec = ExperimentSpec::phase_diagram(a.n, a.m, a.trials, a.common.seed);
            let diagram = run_phase_diagram(&spec).context("running experiment")?;
            if let Some(path) = &a.curve_out {
                let mut buf = Vec::new();
                write_curve_csv(&mut buf, &diagram.curve)?;
                fs::write(path, buf).with_context(|| format!("writing curve: {}", path.display()))?;
            }
            emit(&a.common, &spec, &diagram.cells, |w, r| write_phase_csv(w, r))
        }
        Command::RsTable(a) => {
            setup_threads(a.common.threads)?;
            let spec = ExperimentSpec::rs_table(a.trials, a.common.seed);
            let rows = run_rs_table(&spec).context("running experiment")?;
            emit(&a.common, &spec, &rows, |w, r| write_table_csv(w, r))
        }
        Command::RsnTable(a) => {
            setup_threads(a.common.threads)?;
            let spec = ExperimentSpec::rsn_table(a.trials, a.common.seed);
            let rows = run_rsn_table(&spec).context("running experiment")?;
            emit(&a.common, &spec, &rows, |w, r| write_table_csv(w, r))
        }
        Command::MseCurve(a) => {
            setup_threads(a.common.threads)?;
            let spec = if a.colored {
                ExperimentSpec::mse_colored(a.trials, a.common.seed)
            } else {
                ExperimentSpec::mse_white(a.trials, a.common.seed)
            };
            let rows = run_mse_curve(&spec).context("running experiment")?;
            emit(&a.common, &spec, &rows, |w, r| write_mse_csv(w, r))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
