//! Kaczmarz iterations behind one driver.
//!
//! | method | iterated system | row rule |
//! |--------|-----------------|----------|
//! | `rk`   | `(A, b)`        | sample `i` with probability `‖A⁽ⁱ⁾‖²/‖A‖²_F` |
//! | `grk`  | `(A, b)`        | greedy randomized, `θ = 1/2` |
//! | `rgrk` | `(A, b)`        | relaxed greedy randomized, `θ` from the config |
//! | `mwrk` | `(A, b)`        | `argmax |rᵢ|/‖A⁽ⁱ⁾‖` |
//! | `csk`  | `(SA, Sb)`      | `argmax |r̃ᵢ|/‖Ã⁽ⁱ⁾‖` on the count-sketched system |
//!
//! Every step is the orthogonal projection of the iterate onto the selected
//! row's hyperplane. The residual of the iterated system is updated in
//! `O(rows·n)` per step and recomputed from scratch every
//! `recompute_every` steps.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::countsketch::{distortion_exact, CountSketch};
use crate::error::{KskError, Result};
use crate::matrix::{norm_sq, row_norms_squared, DenseMatrix, Vector};
use crate::rng;

pub mod factors;
pub mod kernels;

pub use factors::{convergence_factor_csk, convergence_factor_mwrk};
pub use kernels::{
    grk_candidates, project_step, residual, select_grk, select_mwrk, select_rk, update_residual, RowSampler,
};

/// Relaxation parameter of the plain greedy randomized method.
pub const GRK_THETA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk,
    Grk,
    Rgrk,
    Mwrk,
    Csk,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Rk, Method::Grk, Method::Rgrk, Method::Mwrk, Method::Csk];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rk => "rk",
            Method::Grk => "grk",
            Method::Rgrk => "rgrk",
            Method::Mwrk => "mwrk",
            Method::Csk => "csk",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = KskError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| KskError::InvalidArgument(format!("unknown method '{s}' (expected rk, grk, rgrk, mwrk or csk)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    /// Stop once the monitored error measure drops to this value.
    pub tol_res: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Relaxation parameter; read by `rgrk` only.
    pub theta: f64,
    /// Sketch rows for `csk`; `None` means `n²`.
    pub d: Option<usize>,
    /// Record the error measure every this many iterations.
    pub trace_every: usize,
    /// Full residual recomputation period.
    pub recompute_every: usize,
    /// For `csk`, also report the exact embedding distortion of the sketch used.
    pub measure_epsilon: bool,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            tol_res: 1e-6,
            max_iters: 20_000,
            seed: 0,
            theta: GRK_THETA,
            d: None,
            trace_every: 1,
            recompute_every: 1000,
            measure_epsilon: false,
        }
    }

    pub fn with_tol(mut self, tol_res: f64) -> Self {
        self.tol_res = tol_res;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_d(mut self, d: usize) -> Self {
        self.d = Some(d);
        self
    }

    pub fn with_trace_every(mut self, k: usize) -> Self {
        self.trace_every = k;
        self
    }

    pub fn with_recompute_every(mut self, k: usize) -> Self {
        self.recompute_every = k;
        self
    }

    pub fn with_measure_epsilon(mut self, on: bool) -> Self {
        self.measure_epsilon = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_res > 0.0) {
            return Err(KskError::InvalidArgument(format!("tol_res must be positive, got {}", self.tol_res)));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(KskError::InvalidArgument(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if self.trace_every == 0 || self.recompute_every == 0 {
            return Err(KskError::InvalidArgument("trace_every and recompute_every must be at least 1".into()));
        }
        if self.d.is_some() && self.method != Method::Csk {
            return Err(KskError::InvalidArgument("d applies to csk only".into()));
        }
        Ok(())
    }

    fn effective_theta(&self) -> f64 {
        match self.method {
            Method::Rgrk => self.theta,
            _ => GRK_THETA,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIters,
    Stagnated,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Outcome of one [`solve`] call.
///
/// `final_res` and `res_trace` hold the relative solution error
/// `‖x_k − x⋆‖²/‖x⋆‖²` when a reference solution was supplied and the
/// relative residual `‖r_k‖²/‖b‖²` of the iterated system otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_res: f64,
    pub res_trace: Vec<(usize, f64)>,
    pub wall_time_s: f64,
    pub termination: Termination,
    pub method: Method,
    pub epsilon_exact: Option<f64>,
    /// Seconds since the start of the solve at each `res_trace` entry.
    #[serde(skip)]
    pub trace_times_s: Vec<f64>,
    /// Final iterate.
    #[serde(skip)]
    pub x: Vec<f64>,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The system a Kaczmarz iteration actually sweeps: `(SA, Sb)` for CSK,
/// `(A, b)` borrowed as-is for the baselines.
#[derive(Clone, Debug)]
pub struct SketchedSystem<'a> {
    a_tilde: Cow<'a, DenseMatrix>,
    b_tilde: Cow<'a, Vector>,
    row_norms_sq: Vector,
    zero_row_mask: Vec<bool>,
    frobenius_sq: f64,
}

impl<'a> SketchedSystem<'a> {
    pub fn new(a_tilde: Cow<'a, DenseMatrix>, b_tilde: Cow<'a, Vector>) -> Result<Self> {
        if a_tilde.rows() != b_tilde.len() {
            return Err(KskError::DimensionMismatch(format!(
                "{} rows but right-hand side of length {}",
                a_tilde.rows(),
                b_tilde.len()
            )));
        }
        let row_norms_sq = row_norms_squared(&a_tilde);
        let zero_row_mask: Vec<bool> = row_norms_sq.iter().map(|&v| v == 0.0).collect();
        if zero_row_mask.iter().all(|&z| z) {
            return Err(KskError::AllRowsMasked);
        }
        let frobenius_sq = row_norms_sq.iter().sum();
        Ok(Self { a_tilde, b_tilde, row_norms_sq, zero_row_mask, frobenius_sq })
    }

    /// `(S·A, S·b)`.
    pub fn from_sketch(sketch: &CountSketch, a: &DenseMatrix, b: &Vector) -> Result<SketchedSystem<'static>> {
        let a_tilde = sketch.apply_to_matrix(a)?;
        let b_tilde = sketch.apply_to_vector(b)?;
        SketchedSystem::new(Cow::Owned(a_tilde), Cow::Owned(b_tilde))
    }

    pub fn a_tilde(&self) -> &DenseMatrix {
        &self.a_tilde
    }

    pub fn b_tilde(&self) -> &Vector {
        &self.b_tilde
    }

    pub fn row_norms_sq(&self) -> &[f64] {
        &self.row_norms_sq
    }

    pub fn zero_row_mask(&self) -> &[bool] {
        &self.zero_row_mask
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.frobenius_sq
    }

    /// True when some zero row carries a right-hand side entry above
    /// `1e-12·‖b̃‖`, i.e. the iterated system is inconsistent.
    pub fn has_inconsistent_zero_row(&self) -> bool {
        let limit = 1e-12 * self.b_tilde.norm();
        self.zero_row_mask
            .iter()
            .zip(self.b_tilde.iter())
            .any(|(&z, b)| z && b.abs() > limit)
    }
}

/// One projection step as seen by an observer passed to [`solve_observed`].
#[derive(Debug)]
pub struct StepEvent<'s> {
    /// `k` for the step `x_k → x_{k+1}`.
    pub iteration: usize,
    pub index: usize,
    pub system: &'s SketchedSystem<'s>,
    /// Maintained residual of the iterated system at `x_k`; absent for
    /// `rk` with a reference solution, which never needs it.
    pub residual_before: Option<&'s [f64]>,
    pub x_before: &'s [f64],
    pub x_after: &'s [f64],
}

impl StepEvent<'_> {
    pub fn row(&self) -> &[f64] {
        self.system.a_tilde().row(self.index)
    }

    pub fn rhs(&self) -> f64 {
        self.system.b_tilde()[self.index]
    }

    pub fn row_norm_sq(&self) -> f64 {
        self.system.row_norms_sq()[self.index]
    }
}

/// Runs `cfg.method` from `x0`. With `x_star` the stopping rule is the
/// relative solution error, otherwise the relative residual of the
/// iterated system.
pub fn solve(a: &DenseMatrix, b: &Vector, x0: &Vector, x_star: Option<&Vector>, cfg: &SolverConfig) -> Result<SolveReport> {
    run(a, b, x0, x_star, cfg, None)
}

/// [`solve`] with a callback after every projection step.
pub fn solve_observed(
    a: &DenseMatrix,
    b: &Vector,
    x0: &Vector,
    x_star: Option<&Vector>,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&StepEvent<'_>),
) -> Result<SolveReport> {
    run(a, b, x0, x_star, cfg, Some(observer))
}

fn run(
    a: &DenseMatrix,
    b: &Vector,
    x0: &Vector,
    x_star: Option<&Vector>,
    cfg: &SolverConfig,
    mut observer: Option<&mut dyn FnMut(&StepEvent<'_>)>,
) -> Result<SolveReport> {
    cfg.validate()?;
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(KskError::DimensionMismatch(format!("{m} rows but b has length {}", b.len())));
    }
    if x0.len() != n {
        return Err(KskError::DimensionMismatch(format!("{n} columns but x0 has length {}", x0.len())));
    }
    if let Some(xs) = x_star {
        if xs.len() != n {
            return Err(KskError::DimensionMismatch(format!("{n} columns but x_star has length {}", xs.len())));
        }
    }

    let start = Instant::now();
    let sketch = match cfg.method {
        Method::Csk => Some(CountSketch::new(cfg.d.unwrap_or(n * n), m, cfg.seed)?),
        _ => None,
    };
    let sys = match &sketch {
        Some(s) => SketchedSystem::from_sketch(s, a, b)?,
        None => SketchedSystem::new(Cow::Borrowed(a), Cow::Borrowed(b))?,
    };

    let mut x = x0.to_vec();
    let needs_residual = !(cfg.method == Method::Rk && x_star.is_some());
    let mut r = if needs_residual { residual(sys.a_tilde(), sys.b_tilde(), &x)?.into_inner() } else { Vec::new() };

    let error_measure = |x: &[f64], r: &[f64]| -> f64 {
        match x_star {
            Some(xs) => {
                let mut e = 0.0;
                for (xi, si) in x.iter().zip(xs.iter()) {
                    e += (xi - si) * (xi - si);
                }
                let s = xs.norm_sq();
                if s > 0.0 { e / s } else { e }
            }
            None => {
                let bb = sys.b_tilde().norm_sq();
                let rr = norm_sq(r);
                if bb > 0.0 { rr / bb } else { rr }
            }
        }
    };

    let mut res = error_measure(&x, &r);
    let mut res_trace = vec![(0, res)];
    let mut trace_times_s = vec![start.elapsed().as_secs_f64()];
    let mut iterations = 0;
    let termination;

    if sys.has_inconsistent_zero_row() {
        termination = Termination::Stagnated;
    } else if res <= cfg.tol_res {
        termination = Termination::Converged;
    } else {
        let sampler = match cfg.method {
            Method::Rk => Some(RowSampler::new(sys.row_norms_sq())?),
            _ => None,
        };
        let mut rng = rng::substream(cfg.seed, 2);
        let theta = cfg.effective_theta();
        let norms = sys.row_norms_sq();
        let mask = sys.zero_row_mask();
        let mut x_before = Vec::new();
        let mut r_before = Vec::new();

        let mut outcome = Termination::MaxIters;
        for k in 0..cfg.max_iters {
            let i_k = match cfg.method {
                Method::Rk => sampler.as_ref().expect("rk sampler").sample(&mut rng),
                Method::Grk | Method::Rgrk => {
                    match select_grk(&r, norms, mask, sys.frobenius_sq(), theta, &mut rng) {
                        Ok(i) => i,
                        Err(KskError::AlreadyConverged) => {
                            outcome = Termination::Stagnated;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                Method::Mwrk | Method::Csk => {
                    let i = select_mwrk(&r, norms, mask)?;
                    if r[i] == 0.0 {
                        outcome = Termination::Stagnated;
                        break;
                    }
                    i
                }
            };

            if observer.is_some() {
                x_before.clone_from(&x);
                r_before.clone_from(&r);
            }
            let lambda = kernels::project_in_place(&mut x, sys.a_tilde().row(i_k), sys.b_tilde()[i_k], norms[i_k]);
            if needs_residual {
                if (k + 1) % cfg.recompute_every == 0 {
                    r = residual(sys.a_tilde(), sys.b_tilde(), &x)?.into_inner();
                } else {
                    update_residual(&mut r, &sys, i_k, lambda);
                }
            }
            if let Some(obs) = observer.as_deref_mut() {
                obs(&StepEvent {
                    iteration: k,
                    index: i_k,
                    system: &sys,
                    residual_before: needs_residual.then_some(&r_before[..]),
                    x_before: &x_before,
                    x_after: &x,
                });
            }

            iterations = k + 1;
            res = error_measure(&x, &r);
            let done = res <= cfg.tol_res;
            if done || iterations % cfg.trace_every == 0 {
                res_trace.push((iterations, res));
                trace_times_s.push(start.elapsed().as_secs_f64());
            }
            if done {
                outcome = Termination::Converged;
                break;
            }
        }
        termination = outcome;
    }

    if res_trace.last().map(|e| e.0) != Some(iterations) {
        res_trace.push((iterations, res));
        trace_times_s.push(start.elapsed().as_secs_f64());
    }
    let wall_time_s = start.elapsed().as_secs_f64();

    let epsilon_exact = match (&sketch, cfg.measure_epsilon) {
        (Some(s), true) => Some(distortion_exact(s, a)?.epsilon_exact),
        _ => None,
    };

    Ok(SolveReport {
        iterations,
        final_res: res,
        res_trace,
        wall_time_s,
        termination,
        method: cfg.method,
        epsilon_exact,
        trace_times_s,
        x,
    })
}
