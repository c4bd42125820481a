//! Per-iteration contraction factors bounding `‖x_{k+1}−x⋆‖²/‖x_k−x⋆‖²`.

use crate::error::{KskError, Result};
use crate::matrix::{row_norms_squared, DenseMatrix, SpectralSummary};

/// `1 − ((1−ε)³/n)·σ_r²(A)/‖A‖₂²`, the count sketch Kaczmarz factor for a
/// sketch with distortion `ε`.
pub fn convergence_factor_csk(summary: &SpectralSummary, n: usize, epsilon: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(KskError::InvalidArgument(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    if n == 0 {
        return Err(KskError::InvalidArgument("n must be at least 1".into()));
    }
    let shrink = (1.0 - epsilon).powi(3) / n as f64;
    let ratio = (summary.sigma_min_nonzero / summary.sigma_max).powi(2);
    Ok(1.0 - shrink * ratio)
}

/// `1 − σ_r²(A) / max_i Σ_{j≠i} ‖A⁽ʲ⁾‖²`, the maximal weighted residual
/// Kaczmarz factor. The denominator is `‖A‖²_F − min_i ‖A⁽ⁱ⁾‖²`.
pub fn convergence_factor_mwrk(a: &DenseMatrix, summary: &SpectralSummary) -> Result<f64> {
    if a.rows() < 2 {
        return Err(KskError::InvalidArgument(format!("need at least 2 rows, got {}", a.rows())));
    }
    let min_row = row_norms_squared(a).iter().copied().fold(f64::INFINITY, f64::min);
    let denom = summary.frobenius_sq - min_row;
    Ok(1.0 - summary.sigma_min_nonzero.powi(2) / denom)
}
