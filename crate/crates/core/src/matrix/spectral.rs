//! Singular value estimates for desk-scale matrices.
//!
//! [`spectral_summary`] forms the `n × n` Gram matrix and diagonalizes it by
//! cyclic Jacobi, which is `O(m n² + n³)`; it is meant for `n` up to a couple
//! of thousand and stays out of the solver hot path. [`spectral_norm`] is a
//! power iteration on `MᵀM` for when only `σ₁` is needed.

use rand_distr::{Distribution, StandardNormal};

use super::{matvec, matvec_transpose, norm_sq, row_norms_squared, DenseMatrix};
use crate::error::{KskError, Result};
use crate::rng;

/// Default relative threshold below which a singular value counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;
const POWER_RESTART_SEED: u64 = 0x5eed_5eed_5eed;

/// Largest and smallest nonzero singular values of a matrix, plus its
/// squared Frobenius norm and numerical rank.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSummary {
    /// `σ₁`.
    pub sigma_max: f64,
    /// `σ_r`, the smallest singular value above the rank threshold.
    pub sigma_min_nonzero: f64,
    /// `‖M‖²_F`, the sum of squared row norms.
    pub frobenius_sq: f64,
    pub rank_estimate: usize,
    /// Relative threshold actually applied, see [`spectral_summary`].
    pub tolerance_used: f64,
    /// All `cols` singular values in descending order.
    pub singular_values: Vec<f64>,
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted in
/// descending order. Only the upper triangle is trusted to be symmetric
/// with the lower one; no check is made.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(KskError::DimensionMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut w = a.data().to_vec();
    let idx = |i: usize, j: usize| i * n + j;

    let total: f64 = norm_sq(&w);
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += w[idx(p, q)] * w[idx(p, q)];
            }
        }
        if off == 0.0 || off <= 1e-32 * total {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[idx(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[idx(q, q)] - w[idx(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = w[idx(k, p)];
                    let akq = w[idx(k, q)];
                    w[idx(k, p)] = c * akp - s * akq;
                    w[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[idx(p, k)];
                    let aqk = w[idx(q, k)];
                    w[idx(p, k)] = c * apk - s * aqk;
                    w[idx(q, k)] = s * apk + c * aqk;
                }
                w[idx(p, q)] = 0.0;
                w[idx(q, p)] = 0.0;
            }
        }
    }
    if !converged {
        return Err(KskError::NotConverged { iterations: JACOBI_MAX_SWEEPS, estimate: f64::NAN });
    }
    let mut eig: Vec<f64> = (0..n).map(|i| w[idx(i, i)]).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}

/// Singular values of `m` in descending order, as square roots of the Gram
/// eigenvalues (negative round-off is clamped to zero).
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(symmetric_eigenvalues(&m.gram())?.into_iter().map(|l| l.max(0.0).sqrt()).collect())
}

/// `σ₁(M)` by power iteration on `MᵀM`.
///
/// Starts from the normalized all-ones vector and restarts from a seeded
/// Gaussian vector if the iterate collapses to zero. Stops once the Rayleigh
/// quotient changes by at most `tol` relative between sweeps.
pub fn spectral_norm(m: &DenseMatrix, tol: f64, max_iters: usize) -> Result<f64> {
    if m.is_empty() {
        return Err(KskError::InvalidArgument("spectral norm of an empty matrix".into()));
    }
    if !(tol > 0.0) {
        return Err(KskError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if m.data().iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let n = m.cols();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut restart_rng = rng::stream(POWER_RESTART_SEED);
    let mut prev = f64::NAN;
    let mut best = 0.0f64;

    for _ in 0..max_iters {
        let y = matvec(m, &x)?;
        let rayleigh = y.norm_sq();
        best = best.max(rayleigh);
        let z = matvec_transpose(m, &y)?;
        let z_norm = z.norm();
        if z_norm == 0.0 {
            for v in x.iter_mut() {
                *v = StandardNormal.sample(&mut restart_rng);
            }
            let s = norm_sq(&x).sqrt();
            x.iter_mut().for_each(|v| *v /= s);
            prev = f64::NAN;
            continue;
        }
        for (xi, zi) in x.iter_mut().zip(z.iter()) {
            *xi = zi / z_norm;
        }
        if (rayleigh - prev).abs() <= tol * rayleigh {
            return Ok(rayleigh.sqrt());
        }
        prev = rayleigh;
    }
    Err(KskError::NotConverged { iterations: max_iters, estimate: best.sqrt() })
}

/// Full singular spectrum summary of `m`.
///
/// A singular value counts as nonzero when it exceeds `tol · σ₁`, where
/// `tol = max(rank_tol, 4·sqrt(cols·ε_mach))`. The floor is the noise level
/// of singular values recovered from Gram eigenvalues; below it a zero
/// singular value is indistinguishable from round-off.
pub fn spectral_summary(m: &DenseMatrix, rank_tol: f64) -> Result<SpectralSummary> {
    if m.data().iter().all(|&v| v == 0.0) {
        return Err(KskError::ZeroMatrix);
    }
    let sv = singular_values(m)?;
    let frobenius_sq: f64 = row_norms_squared(m).iter().sum();
    let sigma_max = sv[0];
    let tolerance_used = rank_tol.max(gram_noise_floor(m.cols()));
    let rank_estimate = sv.iter().take_while(|&&s| s > tolerance_used * sigma_max).count();
    let sigma_min_nonzero = sv[rank_estimate.max(1) - 1];
    Ok(SpectralSummary {
        sigma_max,
        sigma_min_nonzero,
        frobenius_sq,
        rank_estimate,
        tolerance_used,
        singular_values: sv,
    })
}

fn gram_noise_floor(cols: usize) -> f64 {
    4.0 * (cols as f64 * f64::EPSILON).sqrt()
}
