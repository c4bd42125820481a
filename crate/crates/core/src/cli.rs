//! The `ksk` command line.
//!
//! Exit codes: 0 success or converged, 1 usage or input error, 2 solve did
//! not converge (max iterations or stagnation), 3 some benchmark cells failed.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, BenchConfig, DRule};
use crate::countsketch::{CountSketch, RangeBasis};
use crate::error::{KskError, Result};
use crate::matrix::io::{load_matrix, load_vector, save_kskm, save_vector};
use crate::matrix::spectral::{spectral_summary, DEFAULT_RANK_TOL};
use crate::matrix::{matvec, Vector};
use crate::rng;
use crate::solvers::{convergence_factor_csk, convergence_factor_mwrk, solve, Method, SolverConfig, Termination};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ksk", version, about = "Count sketch Kaczmarz solver and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a Gaussian consistent system and write a.kskm, b.kskm, xstar.kskm
    Gen(GenArgs),
    /// Solve a system stored in KSKM or Matrix Market files
    Solve(SolveArgs),
    /// Run paired benchmark trials and write table.csv, traces and per-trial JSON
    Bench(BenchArgs),
    /// Write median error traces for one problem size
    Trace(TraceArgs),
    /// Measure the exact embedding distortion of count sketches
    EmbedCheck(EmbedArgs),
    /// Print singular values and the MWRK and CSK contraction factors
    Factors(FactorsArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Reference solution; switches the stopping rule to the relative solution error
    #[arg(long)]
    xstar: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sketch rows (csk only, default n²)
    #[arg(long)]
    d: Option<usize>,
    /// Relaxation parameter (rgrk only, default 0.5)
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 1)]
    trace_every: usize,
    /// Also report the exact distortion of the sketch (csk only)
    #[arg(long)]
    measure_epsilon: bool,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    report: Option<PathBuf>,
    /// Only verify that b equals A·xstar exactly
    #[arg(long, requires = "xstar")]
    check: bool,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    #[arg(long, default_value = "rk,grk,mwrk,csk", value_parser = parse_methods)]
    methods: MethodList,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    /// Sketch rows for csk (default n² per size)
    #[arg(long)]
    d: Option<usize>,
    /// Relaxation parameter for rgrk
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Zero every timing figure so outputs are byte-identical across runs
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated sizes such as 20000x50,20000x100
    #[arg(long, default_value = "20000x50", value_parser = parse_sizes)]
    sizes: SizeList,
    #[command(flatten)]
    suite: SuiteArgs,
    #[arg(long)]
    out_dir: PathBuf,
    /// Record the exact distortion of every csk sketch
    #[arg(long)]
    measure_epsilon: bool,
    /// Failure rate at which the empirical distortion is reported
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    suite: SuiteArgs,
    /// Trace CSV destination (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    seeds: usize,
    /// Seed of the generated matrix; sketch seeds derive from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report the fraction of sketches whose distortion exceeds this value
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Debug, Args)]
struct FactorsArgs {
    #[arg(long)]
    a: PathBuf,
    /// Evaluate the CSK factor at this distortion instead of measuring one
    #[arg(long)]
    epsilon: Option<f64>,
    /// Sketch rows for the measured distortion (default n²)
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Debug)]
struct MethodList(Vec<Method>);

#[derive(Clone, Debug)]
struct SizeList(Vec<(usize, usize)>);

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: KskError| e.to_string())
}

fn parse_methods(s: &str) -> std::result::Result<MethodList, String> {
    s.split(',').map(parse_method).collect::<std::result::Result<_, _>>().map(MethodList)
}

fn parse_sizes(s: &str) -> std::result::Result<SizeList, String> {
    s.split(',')
        .map(|item| {
            let (m, n) = item.trim().split_once(['x', 'X']).ok_or_else(|| format!("size '{item}' is not of the form MxN"))?;
            let m = m.trim().parse().map_err(|_| format!("bad row count in '{item}'"))?;
            let n = n.trim().parse().map_err(|_| format!("bad column count in '{item}'"))?;
            Ok((m, n))
        })
        .collect::<std::result::Result<_, _>>()
        .map(SizeList)
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_INPUT
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a, out),
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Bench(a) => cmd_bench(&a, out, err),
        Command::Trace(a) => cmd_trace(&a, out, err),
        Command::EmbedCheck(a) => cmd_embed_check(&a, out, err),
        Command::Factors(a) => cmd_factors(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    let p = bench::generate_problem(args.m, args.n, args.seed)?;
    fs::create_dir_all(&args.out)?;
    save_kskm(args.out.join("a.kskm"), &p.a)?;
    save_vector(args.out.join("b.kskm"), &p.b)?;
    save_vector(args.out.join("xstar.kskm"), &p.x_star)?;
    writeln!(out, "seed: {}", args.seed)?;
    writeln!(out, "wrote {}x{} system to {}", args.m, args.n, args.out.display())?;
    Ok(EXIT_OK)
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    if args.d.is_some() && args.method != Method::Csk {
        return Err(KskError::InvalidArgument("d applies to csk only".into()));
    }
    if args.theta.is_some() && args.method != Method::Rgrk {
        return Err(KskError::InvalidArgument("theta applies to rgrk only".into()));
    }
    let a = load_matrix(&args.a)?;
    let b = load_vector(&args.b)?;
    let x_star = args.xstar.as_ref().map(load_vector).transpose()?;

    if args.check {
        let xs = x_star.as_ref().expect("clap enforces --xstar");
        let ax = matvec(&a, xs)?;
        if ax.len() == b.len() && ax.iter().zip(b.iter()).all(|(p, q)| p.to_bits() == q.to_bits()) {
            writeln!(out, "check: b equals A*xstar")?;
            return Ok(EXIT_OK);
        }
        writeln!(out, "check: b differs from A*xstar")?;
        return Ok(EXIT_INPUT);
    }

    let mut cfg = SolverConfig::new(args.method)
        .with_tol(args.tol)
        .with_max_iters(args.max_iters)
        .with_seed(args.seed)
        .with_trace_every(args.trace_every)
        .with_measure_epsilon(args.measure_epsilon && args.method == Method::Csk);
    if let Some(d) = args.d {
        cfg = cfg.with_d(d);
    }
    if let Some(t) = args.theta {
        cfg = cfg.with_theta(t);
    }
    let x0 = Vector::zeros(a.cols());
    let report = solve(&a, &b, &x0, x_star.as_ref(), &cfg)?;
    let json = report.to_json()?;
    match &args.report {
        Some(path) => {
            fs::write(path, json + "\n")?;
            writeln!(
                out,
                "{}: {} after {} iterations, final res {:e}",
                report.method, report.termination, report.iterations, report.final_res
            )?;
        }
        None => writeln!(out, "{json}")?,
    }
    Ok(match report.termination {
        Termination::Converged => EXIT_OK,
        Termination::MaxIters | Termination::Stagnated => EXIT_NOT_CONVERGED,
    })
}

fn suite_config(suite: &SuiteArgs, sizes: Vec<(usize, usize)>) -> Result<BenchConfig> {
    if suite.d == Some(0) {
        return Err(KskError::InvalidArgument("d must be at least 1".into()));
    }
    Ok(BenchConfig {
        sizes,
        methods: suite.methods.0.clone(),
        trials: suite.trials,
        tol_res: suite.tol,
        max_iters: suite.max_iters,
        d_rule: suite.d.map_or(DRule::NSquared, DRule::Explicit),
        base_seed: suite.seed,
        theta: suite.theta,
        timing: !suite.no_timing,
        ..BenchConfig::default()
    })
}

fn report_problems(result: &bench::SuiteResult, err: &mut dyn Write) -> Result<i32> {
    if result.max_iters_hits > 0 {
        writeln!(err, "warning: {} solve(s) hit max_iters and are excluded from speedups", result.max_iters_hits)?;
    }
    for f in &result.failures {
        writeln!(err, "failed: {}x{} {} trial {}: {}", f.m, f.n, f.method, f.trial, f.message)?;
    }
    Ok(if result.failures.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

fn cmd_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut cfg = suite_config(&args.suite, args.sizes.0.clone())?;
    cfg.measure_epsilon = args.measure_epsilon;
    cfg.delta_report = args.delta;
    let result = bench::run_suite(&cfg)?;
    bench::write_suite(&result, &args.out_dir)?;
    write!(out, "{}", bench::emit_csv(&result.rows))?;
    for ((m, n), eps) in &result.epsilon_at_delta {
        writeln!(out, "# {m}x{n}: epsilon at delta {} = {eps}", cfg.delta_report)?;
    }
    report_problems(&result, err)
}

fn cmd_trace(args: &TraceArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = suite_config(&args.suite, vec![(args.m, args.n)])?;
    let result = bench::run_suite(&cfg)?;
    let text = bench::emit_traces_csv(&result.traces[0].1);
    match &args.out {
        Some(p) => fs::write(p, text)?,
        None => write!(out, "{text}")?,
    }
    report_problems(&result, err)
}

fn cmd_embed_check(args: &EmbedArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if args.d == 0 || args.d >= args.m {
        return Err(KskError::InvalidArgument(format!(
            "count sketch needs 1 <= d < m (got d={}, m={})",
            args.d, args.m
        )));
    }
    if args.seeds == 0 {
        return Err(KskError::InvalidArgument("seeds must be at least 1".into()));
    }
    let mut seed = args.seed;
    let basis = loop {
        let p = bench::generate_problem(args.m, args.n, seed)?;
        match RangeBasis::new(&p.a) {
            Ok(b) => break b,
            Err(KskError::RankDeficient { .. }) => {
                writeln!(err, "note: matrix from seed {seed} is rank deficient, regenerating with seed {}", seed + 1)?;
                seed += 1;
            }
            Err(e) => return Err(e),
        }
    };
    let mut eps = Vec::with_capacity(args.seeds);
    for s in 0..args.seeds {
        let sketch = CountSketch::new(args.d, args.m, rng::derive_seed(seed, &[s as u64]))?;
        eps.push(basis.distortion(&sketch)?.epsilon_exact);
    }
    let min = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    writeln!(out, "m: {}\nn: {}\nd: {}\nseeds: {}\nmatrix_seed: {seed}", args.m, args.n, args.d, args.seeds)?;
    writeln!(out, "epsilon_min: {min}\nepsilon_median: {}\nepsilon_max: {max}", bench::median(&eps))?;
    if let Some(t) = args.epsilon {
        let above = eps.iter().filter(|&&e| e > t).count();
        writeln!(out, "fraction_above_{t}: {}", above as f64 / eps.len() as f64)?;
    }
    Ok(EXIT_OK)
}

fn cmd_factors(args: &FactorsArgs, out: &mut dyn Write) -> Result<i32> {
    if let Some(e) = args.epsilon {
        if !(0.0..1.0).contains(&e) {
            return Err(KskError::InvalidArgument(format!("epsilon must lie in [0, 1), got {e}")));
        }
    }
    let a = load_matrix(&args.a)?;
    let n = a.cols();
    let summary = spectral_summary(&a, DEFAULT_RANK_TOL)?;
    if summary.rank_estimate < n {
        return Err(KskError::RankDeficient { rank: summary.rank_estimate, cols: n });
    }
    writeln!(out, "sigma_max: {}", summary.sigma_max)?;
    writeln!(out, "sigma_min_nonzero: {}", summary.sigma_min_nonzero)?;
    writeln!(out, "frobenius_sq: {}", summary.frobenius_sq)?;
    writeln!(out, "rank: {}", summary.rank_estimate)?;
    writeln!(out, "mwrk_factor: {}", convergence_factor_mwrk(&a, &summary)?)?;
    let epsilon = match args.epsilon {
        Some(e) => {
            writeln!(out, "epsilon: {e} (given)")?;
            e
        }
        None => {
            let d = args.d.unwrap_or(n * n);
            let sketch = CountSketch::new(d, a.rows(), args.seed)?;
            let e = RangeBasis::new(&a)?.distortion(&sketch)?.epsilon_exact;
            writeln!(out, "epsilon: {e} (measured, d={d}, seed={})", args.seed)?;
            e
        }
    };
    if epsilon < 1.0 {
        writeln!(out, "csk_factor: {}", convergence_factor_csk(&summary, n, epsilon)?)?;
    } else {
        writeln!(out, "csk_factor: undefined (epsilon >= 1)")?;
    }
    Ok(EXIT_OK)
}
