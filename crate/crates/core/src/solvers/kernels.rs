//! Per-step building blocks shared by all five iterations.

use rand::Rng;

use super::SketchedSystem;
use crate::error::{KskError, Result};
use crate::matrix::{dot, matvec, DenseMatrix, Vector};

/// `b − A·x`.
pub fn residual(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Result<Vector> {
    if b.len() != a.rows() {
        return Err(KskError::DimensionMismatch(format!(
            "right-hand side of length {} for {} rows",
            b.len(),
            a.rows()
        )));
    }
    let mut r = matvec(a, x)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    Ok(r)
}

/// Smallest index maximizing `r[i]² / ‖row i‖²` over unmasked rows.
pub fn select_mwrk(r: &[f64], row_norms_sq: &[f64], mask: &[bool]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..r.len() {
        if mask[i] {
            continue;
        }
        let ratio = r[i] * r[i] / row_norms_sq[i];
        match best {
            Some((_, b)) if ratio <= b => {}
            _ => best = Some((i, ratio)),
        }
    }
    best.map(|(i, _)| i).ok_or(KskError::AllRowsMasked)
}

/// Samples rows with probability `‖A⁽ⁱ⁾‖² / ‖A‖²_F` by inverse CDF over the
/// running sums of squared row norms.
#[derive(Clone, Debug)]
pub struct RowSampler {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl RowSampler {
    pub fn new(weights: &[f64]) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        let mut last_positive = None;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                last_positive = Some(i);
            }
            acc += w;
            cumulative.push(acc);
        }
        let last_positive = last_positive.ok_or(KskError::AllRowsMasked)?;
        Ok(Self { cumulative, last_positive })
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("sampler is nonempty")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.total();
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.last_positive)
    }
}

/// One draw of the randomized Kaczmarz row rule.
pub fn select_rk<R: Rng + ?Sized>(row_norms_sq: &[f64], frob_sq: f64, rng: &mut R) -> Result<usize> {
    if !(frob_sq > 0.0) {
        return Err(KskError::InvalidArgument(format!("squared Frobenius norm must be positive, got {frob_sq}")));
    }
    let sampler = RowSampler::new(row_norms_sq)?;
    let u = rng.random::<f64>() * frob_sq;
    Ok(sampler.cumulative.partition_point(|&c| c <= u).min(sampler.last_positive))
}

/// The greedy candidate set `U_k` of the (relaxed) greedy randomized rule:
/// rows with `r_i²/‖A⁽ⁱ⁾‖² ≥ θ·max_j r_j²/‖A⁽ʲ⁾‖² + (1−θ)·‖r‖²/‖A‖²_F`.
///
/// The threshold is clamped to the maximum ratio so the maximizer always
/// qualifies; with `θ = 1` the set is exactly the argmax set.
pub fn grk_candidates(r: &[f64], row_norms_sq: &[f64], mask: &[bool], frob_sq: f64, theta: f64) -> Result<Vec<usize>> {
    let mut r_sq = 0.0;
    let mut max_ratio = 0.0f64;
    for i in 0..r.len() {
        if mask[i] {
            continue;
        }
        r_sq += r[i] * r[i];
        max_ratio = max_ratio.max(r[i] * r[i] / row_norms_sq[i]);
    }
    if r_sq == 0.0 {
        return Err(KskError::AlreadyConverged);
    }
    let threshold = (theta * max_ratio + (1.0 - theta) * (r_sq / frob_sq)).min(max_ratio);
    Ok((0..r.len())
        .filter(|&i| !mask[i] && r[i] * r[i] / row_norms_sq[i] >= threshold)
        .collect())
}

/// Samples from [`grk_candidates`] with probability proportional to `r_i²`.
pub fn select_grk<R: Rng + ?Sized>(
    r: &[f64],
    row_norms_sq: &[f64],
    mask: &[bool],
    frob_sq: f64,
    theta: f64,
    rng: &mut R,
) -> Result<usize> {
    let cands = grk_candidates(r, row_norms_sq, mask, frob_sq, theta)?;
    if cands.len() == 1 {
        // still consume one draw so the stream position does not depend on |U_k|
        let _ = rng.random::<f64>();
        return Ok(cands[0]);
    }
    let weights: Vec<f64> = cands.iter().map(|&i| r[i] * r[i]).collect();
    let sampler = RowSampler::new(&weights)?;
    Ok(cands[sampler.sample(rng)])
}

/// Projects `x` onto `{y : row·y = b_i}` in place and returns the step
/// length `λ = (b_i − row·x)/‖row‖²`.
#[inline]
pub fn project_in_place(x: &mut [f64], row: &[f64], b_i: f64, row_norm_sq: f64) -> f64 {
    let lambda = (b_i - dot(row, x)) / row_norm_sq;
    for (xi, ai) in x.iter_mut().zip(row) {
        *xi += lambda * ai;
    }
    lambda
}

/// Orthogonal projection of `x` onto the hyperplane `row·y = b_i`.
pub fn project_step(x: &[f64], row: &[f64], b_i: f64, row_norm_sq: f64) -> Result<Vector> {
    if row.len() != x.len() {
        return Err(KskError::DimensionMismatch(format!("row of length {} for x of length {}", row.len(), x.len())));
    }
    if !(row_norm_sq > 0.0) {
        return Err(KskError::ZeroRow);
    }
    let mut out = x.to_vec();
    project_in_place(&mut out, row, b_i, row_norm_sq);
    Vector::new(out)
}

/// `r ← r − λ·Ã·(Ã⁽ⁱᵏ⁾)ᵀ` after a step on row `i_k`, with `r[i_k]` set to 0.
pub fn update_residual(r: &mut [f64], sys: &SketchedSystem<'_>, i_k: usize, lambda: f64) {
    let a = sys.a_tilde();
    let pivot = a.row(i_k);
    let mask = sys.zero_row_mask();
    for (j, row) in a.row_iter().enumerate() {
        if !mask[j] {
            r[j] -= lambda * dot(row, pivot);
        }
    }
    r[i_k] = 0.0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::borrow::Cow;

    #[test]
    fn residual_examples() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let b = matvec(&a, &[1.0, 1.0]).unwrap();
        assert_eq!(residual(&a, &b, &[1.0, 1.0]).unwrap().as_slice(), &[0.0; 3]);
        let i2 = DenseMatrix::identity(2);
        assert_eq!(residual(&i2, &[1.0, 2.0], &[0.0, 0.0]).unwrap().as_slice(), &[1.0, 2.0]);
        assert!(residual(&i2, &[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn residual_hand_value() {
        // b − A x with b = A·(1,1), x = (1,0) is A·(0,1), the second column
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let b = matvec(&a, &[1.0, 1.0]).unwrap();
        let r = residual(&a, &b, &[1.0, 0.0]).unwrap();
        assert_eq!(r.as_slice(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn mwrk_selection_examples() {
        assert_eq!(select_mwrk(&[3.0, -4.0], &[1.0, 4.0], &[false, false]).unwrap(), 0);
        assert_eq!(select_mwrk(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0], &[false; 3]).unwrap(), 0);
        assert_eq!(select_mwrk(&[2.0, 2.0], &[1.0, 1.0], &[false, false]).unwrap(), 0);
        assert_eq!(select_mwrk(&[9.0, 1.0], &[1.0, 1.0], &[true, false]).unwrap(), 1);
        assert!(matches!(select_mwrk(&[1.0], &[0.0], &[true]), Err(KskError::AllRowsMasked)));
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_step(&[0.0, 0.0], &[1.0, 0.0], 5.0, 1.0).unwrap().as_slice(), &[5.0, 0.0]);
        let p = project_step(&[0.0, 0.0], &[3.0, 4.0], 5.0, 25.0).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        let on = [1.0, 0.5];
        assert_eq!(project_step(&on, &[3.0, 4.0], 5.0, 25.0).unwrap().as_slice(), &on);
        assert!(matches!(project_step(&on, &[0.0, 0.0], 1.0, 0.0), Err(KskError::ZeroRow)));
    }

    fn system(rows: &[[f64; 2]], b: &[f64]) -> SketchedSystem<'static> {
        let a = DenseMatrix::from_rows(rows).unwrap();
        SketchedSystem::new(Cow::Owned(a), Cow::Owned(Vector::new(b.to_vec()).unwrap())).unwrap()
    }

    #[test]
    fn incremental_residual_matches_full_recompute() {
        let sys = system(&[[1.0, 2.0], [3.0, -1.0], [0.5, 4.0]], &[1.0, 2.0, 3.0]);
        let mut x = vec![0.0, 0.0];
        let mut r = residual(sys.a_tilde(), sys.b_tilde(), &x).unwrap().into_inner();
        for i_k in [2, 0, 1, 2] {
            let lambda = project_in_place(&mut x, sys.a_tilde().row(i_k), sys.b_tilde()[i_k], sys.row_norms_sq()[i_k]);
            update_residual(&mut r, &sys, i_k, lambda);
            let full = residual(sys.a_tilde(), sys.b_tilde(), &x).unwrap();
            for j in 0..3 {
                assert!((r[j] - full[j]).abs() <= 1e-12, "{r:?} vs {full:?}");
            }
        }
    }

    #[test]
    fn orthogonal_rows_touch_one_entry() {
        let sys = system(&[[1.0, 0.0], [0.0, 2.0]], &[1.0, 1.0]);
        let mut r = vec![1.0, 1.0];
        update_residual(&mut r, &sys, 0, 1.0);
        assert_eq!(r, vec![0.0, 1.0]);
        let mut r = vec![0.0, 3.0];
        update_residual(&mut r, &sys, 0, 0.0);
        assert_eq!(r, vec![0.0, 3.0]);
    }

    #[test]
    fn rk_degenerate_and_biased_weights() {
        let mut g = rng::stream(1);
        for _ in 0..100 {
            assert_eq!(select_rk(&[0.0, 2.0, 0.0], 2.0, &mut g).unwrap(), 1);
        }
        assert!(select_rk(&[1.0], 0.0, &mut g).is_err());
    }

    #[test]
    fn grk_single_row_and_zero_residual() {
        let mut g = rng::stream(2);
        assert_eq!(select_grk(&[3.0], &[2.0], &[false], 2.0, 0.5, &mut g).unwrap(), 0);
        assert!(matches!(
            select_grk(&[0.0, 0.0], &[1.0, 1.0], &[false, false], 2.0, 0.5, &mut g),
            Err(KskError::AlreadyConverged)
        ));
    }

    #[test]
    fn grk_theta_one_is_argmax() {
        let r = [1.0, -3.0, 2.0, 0.5];
        let n = [1.0, 2.0, 1.0, 0.25];
        let mask = [false; 4];
        assert_eq!(grk_candidates(&r, &n, &mask, 4.25, 1.0).unwrap(), vec![1]);
        let mut g = rng::stream(3);
        for _ in 0..50 {
            assert_eq!(select_grk(&r, &n, &mask, 4.25, 1.0, &mut g).unwrap(), select_mwrk(&r, &n, &mask).unwrap());
        }
    }

    #[test]
    fn grk_candidates_match_threshold_oracle() {
        // ratios r²/‖a‖² = 4, 4.5, 4 ; ‖r‖² = 17 ; ‖A‖²_F = 6
        let r = [2.0, 3.0, 2.0];
        let n = [1.0, 2.0, 1.0];
        let mask = [false; 3];
        let frob = 6.0;
        let r_sq = 17.0;
        let max_ratio: f64 = 4.5;
        let eps_k = 0.5 * max_ratio / r_sq + 0.5 / frob;
        let oracle: Vec<usize> = (0..3).filter(|&i| r[i] * r[i] >= eps_k * r_sq * n[i]).collect();
        assert_eq!(grk_candidates(&r, &n, &mask, frob, 0.5).unwrap(), oracle);
        assert_eq!(oracle, vec![0, 1, 2]);

        let r = [0.5, 3.0, 1.0];
        let r_sq = 10.25;
        let max_ratio: f64 = 4.5;
        let eps_k = 0.5 * max_ratio / r_sq + 0.5 / frob;
        let oracle: Vec<usize> = (0..3).filter(|&i| r[i] * r[i] >= eps_k * r_sq * n[i]).collect();
        assert_eq!(grk_candidates(&r, &n, &mask, frob, 0.5).unwrap(), oracle);
        assert_eq!(oracle, vec![1]);
    }
}
