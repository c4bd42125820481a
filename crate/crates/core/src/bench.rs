//! Benchmark harness: synthetic consistent Gaussian systems, paired trials
//! across methods, mean IT/CPU tables and median error traces.
//!
//! Trial `t` of size `(m, n)` draws its problem from
//! `derive_seed(base_seed, [m, n, t])`; every method in that cell solves the
//! same problem from `x0 = 0`. CPU time is the wall time of the solve call,
//! which for CSK includes drawing and applying the sketch. Problem
//! generation is not timed.

use std::fs;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KskError, Result};
use crate::matrix::{matvec, DenseMatrix, Vector};
use crate::rng;
use crate::solvers::{solve, Method, SolveReport, SolverConfig, Termination};

/// Environment variable capping the number of benchmark worker threads.
pub const THREADS_ENV: &str = "KSK_THREADS";

/// A consistent system `A x⋆ = b` with known solution.
#[derive(Clone, Debug)]
pub struct Problem {
    pub a: DenseMatrix,
    pub b: Vector,
    pub x_star: Vector,
    pub seed: u64,
}

/// Draws `A` (row-major) and then `x⋆`, all entries i.i.d. standard normal
/// from the ziggurat sampler of `rand_distr` on the seed's primary stream,
/// and sets `b = A·x⋆`.
pub fn generate_problem(m: usize, n: usize, seed: u64) -> Result<Problem> {
    if n == 0 || m <= n {
        return Err(KskError::InvalidArgument(format!("problem needs m > n >= 1 (got m={m}, n={n})")));
    }
    let mut g = rng::stream(seed);
    let a: Vec<f64> = (0..m * n).map(|_| StandardNormal.sample(&mut g)).collect();
    let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut g)).collect();
    let a = DenseMatrix::new(m, n, a)?;
    let b = matvec(&a, &x)?;
    Ok(Problem { a, b, x_star: Vector::new(x)?, seed })
}

/// How the sketch size is chosen for each problem size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DRule {
    NSquared,
    Explicit(usize),
}

impl DRule {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            DRule::NSquared => n * n,
            DRule::Explicit(d) => d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sizes: Vec<(usize, usize)>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub tol_res: f64,
    pub max_iters: usize,
    pub d_rule: DRule,
    pub base_seed: u64,
    /// Failure-rate level at which the empirical embedding distortion is
    /// reported when `measure_epsilon` is on.
    pub delta_report: f64,
    pub measure_epsilon: bool,
    /// Relaxation parameter handed to `rgrk`.
    pub theta: f64,
    pub trace_every: usize,
    /// Worker threads; `None` reads [`THREADS_ENV`], then uses all cores.
    pub threads: Option<usize>,
    /// When false all CPU figures are zeroed so outputs are byte-reproducible.
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![(20_000, 50)],
            methods: vec![Method::Rk, Method::Grk, Method::Mwrk, Method::Csk],
            trials: 50,
            tol_res: 1e-6,
            max_iters: 20_000,
            d_rule: DRule::NSquared,
            base_seed: 0,
            delta_report: 0.1,
            measure_epsilon: false,
            theta: 0.5,
            trace_every: 1,
            threads: None,
            timing: true,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(KskError::InvalidArgument("trials must be at least 1".into()));
        }
        if self.methods.is_empty() || self.sizes.is_empty() {
            return Err(KskError::InvalidArgument("need at least one size and one method".into()));
        }
        if let Some(&(m, n)) = self.sizes.iter().find(|&&(m, n)| n == 0 || m <= n) {
            return Err(KskError::InvalidArgument(format!("size {m}x{n} does not satisfy m > n >= 1")));
        }
        if !(0.0..=1.0).contains(&self.delta_report) {
            return Err(KskError::InvalidArgument(format!("delta_report must lie in [0, 1], got {}", self.delta_report)));
        }
        Ok(())
    }

    fn solver_config(&self, method: Method, n: usize, seed: u64) -> SolverConfig {
        let mut cfg = SolverConfig::new(method)
            .with_tol(self.tol_res)
            .with_max_iters(self.max_iters)
            .with_seed(seed)
            .with_theta(self.theta)
            .with_trace_every(self.trace_every);
        if method == Method::Csk {
            cfg = cfg.with_d(self.d_rule.resolve(n)).with_measure_epsilon(self.measure_epsilon);
        }
        cfg
    }
}

/// Seed of trial `t` for size `(m, n)`.
pub fn trial_seed(base_seed: u64, m: usize, n: usize, t: usize) -> u64 {
    rng::derive_seed(base_seed, &[m as u64, n as u64, t as u64])
}

/// One solve of one method on one trial problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub method: Method,
    pub trial: usize,
    pub seed: u64,
    pub max_iters_hit: bool,
    pub report: SolveReport,
    pub trace_times_s: Vec<f64>,
}

/// A solve that returned an error instead of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub m: usize,
    pub n: usize,
    pub method: Method,
    pub trial: usize,
    pub message: String,
}

/// One line of the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub method: Method,
    pub mean_it: f64,
    pub mean_cpu_s: f64,
    /// `mean_it(mwrk)/mean_it(csk)`; CSK rows only.
    pub it_speedup: Option<f64>,
    /// `mean_cpu(mwrk)/mean_cpu(csk)`; CSK rows only.
    pub cpu_speedup: Option<f64>,
}

/// Median error and elapsed time across trials at one iteration count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub method: Method,
    pub iteration: usize,
    pub median_res: f64,
    pub median_cpu_s: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SuiteResult {
    pub rows: Vec<BenchRow>,
    /// Size-major, then trial, then method in configuration order.
    pub records: Vec<TrialRecord>,
    /// Median traces per size, in configuration order.
    pub traces: Vec<((usize, usize), Vec<TraceRow>)>,
    pub failures: Vec<CellFailure>,
    /// Number of solves that stopped at `max_iters`; these are excluded
    /// from the speedup ratios.
    pub max_iters_hits: usize,
    /// Per size, the `(1 − delta_report)` empirical quantile of the CSK
    /// sketches' exact distortion, when measured.
    pub epsilon_at_delta: Vec<((usize, usize), f64)>,
}

fn worker_threads(requested: Option<usize>) -> usize {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let env = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
    requested.or(env).unwrap_or(cores).clamp(1, cores)
}

/// Runs every `(size, trial, method)` cell of `cfg`.
///
/// Trials run concurrently on at most one thread per core; the methods of a
/// trial run one after another on the same thread.
pub fn run_suite(cfg: &BenchConfig) -> Result<SuiteResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads(cfg.threads))
        .build()
        .map_err(|e| KskError::InvalidArgument(format!("thread pool: {e}")))?;

    let mut out = SuiteResult::default();
    for &(m, n) in &cfg.sizes {
        let d = cfg.d_rule.resolve(n);
        let cells: Vec<Vec<std::result::Result<TrialRecord, CellFailure>>> = pool.install(|| {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| run_trial(cfg, m, n, d, t))
                .collect()
        });
        let mut size_records = Vec::new();
        for cell in cells.into_iter().flatten() {
            match cell {
                Ok(rec) => size_records.push(rec),
                Err(f) => out.failures.push(f),
            }
        }
        out.max_iters_hits += size_records.iter().filter(|r| r.max_iters_hit).count();
        out.traces.push(((m, n), median_traces(&size_records, &cfg.methods)));
        if cfg.measure_epsilon {
            let eps: Vec<f64> = size_records.iter().filter_map(|r| r.report.epsilon_exact).collect();
            if !eps.is_empty() {
                out.epsilon_at_delta.push(((m, n), empirical_epsilon(&eps, cfg.delta_report)));
            }
        }
        out.records.extend(size_records);
    }
    out.rows = aggregate_rows(&out.records, &cfg.methods);
    Ok(out)
}

fn run_trial(cfg: &BenchConfig, m: usize, n: usize, d: usize, t: usize) -> Vec<std::result::Result<TrialRecord, CellFailure>> {
    let seed = trial_seed(cfg.base_seed, m, n, t);
    let fail = |method: Method, e: &KskError| CellFailure { m, n, method, trial: t, message: e.to_string() };
    let problem = match generate_problem(m, n, seed) {
        Ok(p) => p,
        Err(e) => return cfg.methods.iter().map(|&meth| Err(fail(meth, &e))).collect(),
    };
    let x0 = Vector::zeros(n);
    let solver_seed = rng::derive_seed(seed, &[0x51]);
    cfg.methods
        .iter()
        .map(|&method| {
            let scfg = cfg.solver_config(method, n, solver_seed);
            let mut report = solve(&problem.a, &problem.b, &x0, Some(&problem.x_star), &scfg).map_err(|e| fail(method, &e))?;
            let mut trace_times_s = std::mem::take(&mut report.trace_times_s);
            report.x.clear();
            if !cfg.timing {
                report.wall_time_s = 0.0;
                trace_times_s.iter_mut().for_each(|t| *t = 0.0);
            }
            Ok(TrialRecord {
                m,
                n,
                d,
                method,
                trial: t,
                seed,
                max_iters_hit: report.termination == Termination::MaxIters,
                report,
                trace_times_s,
            })
        })
        .collect()
}

/// Median, averaging the two middle values for even counts. NaN for empty input.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    if v.len() % 2 == 1 {
        v[h]
    } else {
        0.5 * (v[h - 1] + v[h])
    }
}

/// Smallest measured `ε` exceeded by at most a `delta` fraction of sketches.
pub fn empirical_epsilon(eps: &[f64], delta: f64) -> f64 {
    let mut v = eps.to_vec();
    v.sort_by(f64::total_cmp);
    let keep = ((1.0 - delta) * v.len() as f64).ceil() as usize;
    v[keep.clamp(1, v.len()) - 1]
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut k) = (0.0, 0usize);
    for v in values {
        s += v;
        k += 1;
    }
    if k == 0 { f64::NAN } else { s / k as f64 }
}

/// Table rows from trial records: size-major in order of first appearance,
/// method-minor in `methods` order. Recomputing from archived records gives
/// the same rows.
pub fn aggregate_rows(records: &[TrialRecord], methods: &[Method]) -> Vec<BenchRow> {
    let mut sizes: Vec<(usize, usize, usize)> = Vec::new();
    for r in records {
        if !sizes.contains(&(r.m, r.n, r.d)) {
            sizes.push((r.m, r.n, r.d));
        }
    }
    let mut rows = Vec::new();
    for (m, n, d) in sizes {
        let cell: Vec<&TrialRecord> = records.iter().filter(|r| (r.m, r.n, r.d) == (m, n, d)).collect();
        for &method in methods {
            let mine: Vec<&&TrialRecord> = cell.iter().filter(|r| r.method == method).collect();
            if mine.is_empty() {
                continue;
            }
            let mean_it = mean(mine.iter().map(|r| r.report.iterations as f64));
            let mean_cpu_s = mean(mine.iter().map(|r| r.report.wall_time_s));
            let (it_speedup, cpu_speedup) = if method == Method::Csk {
                speedups(&cell)
            } else {
                (None, None)
            };
            rows.push(BenchRow { m, n, d, method, mean_it, mean_cpu_s, it_speedup, cpu_speedup });
        }
    }
    rows
}

fn speedups(cell: &[&TrialRecord]) -> (Option<f64>, Option<f64>) {
    let find = |method: Method, trial: usize| cell.iter().find(|r| r.method == method && r.trial == trial);
    let pairs: Vec<(&TrialRecord, &TrialRecord)> = cell
        .iter()
        .filter(|r| r.method == Method::Csk && !r.max_iters_hit)
        .filter_map(|c| find(Method::Mwrk, c.trial).filter(|w| !w.max_iters_hit).map(|w| (*w, *c)))
        .collect();
    if pairs.is_empty() {
        return (None, None);
    }
    let ratio = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
    let it = ratio(
        mean(pairs.iter().map(|p| p.0.report.iterations as f64)),
        mean(pairs.iter().map(|p| p.1.report.iterations as f64)),
    );
    let cpu = ratio(
        mean(pairs.iter().map(|p| p.0.report.wall_time_s)),
        mean(pairs.iter().map(|p| p.1.report.wall_time_s)),
    );
    (Some(it), Some(cpu))
}

/// Median error and elapsed time per iteration across the trials of one
/// size. A trial that stopped early contributes its final values to later
/// iterations.
pub fn median_traces(records: &[TrialRecord], methods: &[Method]) -> Vec<TraceRow> {
    let mut out = Vec::new();
    for &method in methods {
        let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.method == method).collect();
        let mut points: Vec<usize> = mine.iter().flat_map(|r| r.report.res_trace.iter().map(|e| e.0)).collect();
        points.sort_unstable();
        points.dedup();
        for &k in &points {
            let mut res = Vec::with_capacity(mine.len());
            let mut cpu = Vec::with_capacity(mine.len());
            for r in &mine {
                let trace = &r.report.res_trace;
                let at = trace.partition_point(|e| e.0 <= k);
                if at == 0 {
                    continue;
                }
                res.push(trace[at - 1].1);
                cpu.push(r.trace_times_s.get(at - 1).copied().unwrap_or(0.0));
            }
            out.push(TraceRow { method, iteration: k, median_res: median(&res), median_cpu_s: median(&cpu) });
        }
    }
    out
}

/// `x` rounded to `sig` significant digits in fixed notation.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { format!("{:.*}", sig.saturating_sub(1), 0.0) } else { x.to_string() };
    }
    let mut exp = x.abs().log10().floor() as i32;
    loop {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let rounded: f64 = s.parse().expect("formatted float parses");
        if rounded.abs() >= 10f64.powi(exp + 1) && decimals > 0 {
            exp += 1;
            continue;
        }
        return s;
    }
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| format_sig(x, 6)).unwrap_or_default()
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory csv writer");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

pub const TABLE_HEADER: [&str; 8] = ["m", "n", "d", "method", "mean_it", "mean_cpu_s", "it_speedup", "cpu_speedup"];
pub const TRACE_HEADER: [&str; 4] = ["method", "iteration", "median_res", "median_cpu_s"];

/// Results table as CSV; reals carry 6 significant digits and absent
/// speedups are empty fields.
pub fn emit_csv(rows: &[BenchRow]) -> String {
    let mut w = csv_writer();
    w.write_record(TABLE_HEADER).expect("write to memory");
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.n.to_string(),
            r.d.to_string(),
            r.method.to_string(),
            format_sig(r.mean_it, 6),
            format_sig(r.mean_cpu_s, 6),
            opt_field(r.it_speedup),
            opt_field(r.cpu_speedup),
        ])
        .expect("write to memory");
    }
    finish(w)
}

/// Parses [`emit_csv`] output.
pub fn parse_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != TABLE_HEADER {
        return Err(KskError::Format(format!("unexpected table header {header:?}")));
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| KskError::Format(format!("bad number '{s}'"))) };
    let int = |s: &str| -> Result<usize> { s.parse().map_err(|_| KskError::Format(format!("bad count '{s}'"))) };
    let opt = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(BenchRow {
                m: int(&rec[0])?,
                n: int(&rec[1])?,
                d: int(&rec[2])?,
                method: rec[3].parse()?,
                mean_it: num(&rec[4])?,
                mean_cpu_s: num(&rec[5])?,
                it_speedup: opt(&rec[6])?,
                cpu_speedup: opt(&rec[7])?,
            })
        })
        .collect()
}

/// Trace CSV with header `method,iteration,median_res,median_cpu_s`.
pub fn emit_traces_csv(rows: &[TraceRow]) -> String {
    let mut w = csv_writer();
    w.write_record(TRACE_HEADER).expect("write to memory");
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.iteration.to_string(),
            format!("{:e}", r.median_res),
            format!("{:e}", r.median_cpu_s),
        ])
        .expect("write to memory");
    }
    finish(w)
}

/// File name of a trial's archived JSON record.
pub fn trial_file_name(r: &TrialRecord) -> String {
    format!("{}x{}_{}_{:04}.json", r.m, r.n, r.method, r.trial)
}

/// Writes `table.csv`, the traces and one JSON per trial under `dir`.
///
/// `traces.csv` holds the first configured size; every size also gets
/// `traces_<m>x<n>.csv`. Records go to `dir/trials/`.
pub fn write_suite(result: &SuiteResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("trials"))?;
    fs::write(dir.join("table.csv"), emit_csv(&result.rows))?;
    for (i, ((m, n), rows)) in result.traces.iter().enumerate() {
        let text = emit_traces_csv(rows);
        if i == 0 {
            fs::write(dir.join("traces.csv"), &text)?;
        }
        fs::write(dir.join(format!("traces_{m}x{n}.csv")), &text)?;
    }
    for r in &result.records {
        fs::write(dir.join("trials").join(trial_file_name(r)), serde_json::to_string_pretty(r)?)?;
    }
    Ok(())
}

/// Reads back every archived trial record under `dir/trials`, ordered as
/// [`run_suite`] produced them.
pub fn load_trial_records(dir: &Path, methods: &[Method]) -> Result<Vec<TrialRecord>> {
    let mut records = Vec::new();
    for entry in fs::read_dir(dir.join("trials"))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            records.push(serde_json::from_str::<TrialRecord>(&fs::read_to_string(&path)?)?);
        }
    }
    let order = |m: Method| methods.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    records.sort_by_key(|r| (r.m, r.n, r.trial, order(r.method)));
    Ok(records)
}
