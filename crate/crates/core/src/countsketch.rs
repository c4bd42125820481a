//! Count sketch transform `S = ΦD ∈ R^{d×m}`.
//!
//! `Φ` has a single 1 per column at row `h(i)` and `D` is a random ±1
//! diagonal, so `S` is stored as the pair `(bucket, sign)` and applied in
//! one pass over the input. Bucket indices are drawn from the primary
//! [`rng::stream`] of the seed and signs from its first long-jump substream.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KskError, Result};
use crate::matrix::spectral::{spectral_summary, symmetric_eigenvalues, DEFAULT_RANK_TOL};
use crate::matrix::{dot, DenseMatrix, Vector};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountSketch {
    d: usize,
    m: usize,
    seed: u64,
    bucket: Vec<usize>,
    sign: Vec<i8>,
}

impl CountSketch {
    /// Draws a fresh sketch. Requires `1 ≤ d < m`.
    pub fn new(d: usize, m: usize, seed: u64) -> Result<Self> {
        if d == 0 || d >= m {
            return Err(KskError::InvalidArgument(format!(
                "count sketch needs 1 <= d < m (got d={d}, m={m})"
            )));
        }
        let mut hrng = rng::substream(seed, 0);
        let bucket = (0..m).map(|_| hrng.random_range(0..d)).collect();
        let mut drng = rng::substream(seed, 1);
        let sign = (0..m).map(|_| if drng.random::<bool>() { 1 } else { -1 }).collect();
        Ok(Self { d, m, seed, bucket, sign })
    }

    /// Builds a sketch from explicit arrays. Unlike [`CountSketch::new`]
    /// this accepts `d ≥ m`, so signed permutations can be expressed.
    pub fn from_parts(d: usize, bucket: Vec<usize>, sign: Vec<i8>) -> Result<Self> {
        if d == 0 {
            return Err(KskError::InvalidArgument("count sketch needs d >= 1".into()));
        }
        if bucket.len() != sign.len() {
            return Err(KskError::DimensionMismatch(format!(
                "{} buckets but {} signs",
                bucket.len(),
                sign.len()
            )));
        }
        if let Some(i) = bucket.iter().position(|&b| b >= d) {
            return Err(KskError::InvalidArgument(format!("bucket[{i}] = {} is not below d = {d}", bucket[i])));
        }
        if let Some(i) = sign.iter().position(|&s| s != 1 && s != -1) {
            return Err(KskError::InvalidArgument(format!("sign[{i}] = {} is not ±1", sign[i])));
        }
        Ok(Self { d, m: bucket.len(), seed: 0, bucket, sign })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Seed the sketch was drawn from; 0 for [`CountSketch::from_parts`].
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bucket(&self) -> &[usize] {
        &self.bucket
    }

    pub fn sign(&self) -> &[i8] {
        &self.sign
    }

    /// `S·A`, accumulating source rows into their buckets in source order.
    pub fn apply_to_matrix(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        if a.rows() != self.m {
            return Err(KskError::DimensionMismatch(format!(
                "sketch expects {} rows, matrix has {}",
                self.m,
                a.rows()
            )));
        }
        let mut out = DenseMatrix::zeros(self.d, a.cols());
        for (i, src) in a.row_iter().enumerate() {
            let dst = out.row_mut(self.bucket[i]);
            if self.sign[i] > 0 {
                for (o, v) in dst.iter_mut().zip(src) {
                    *o += v;
                }
            } else {
                for (o, v) in dst.iter_mut().zip(src) {
                    *o -= v;
                }
            }
        }
        Ok(out)
    }

    /// `S·b`.
    pub fn apply_to_vector(&self, b: &[f64]) -> Result<Vector> {
        if b.len() != self.m {
            return Err(KskError::DimensionMismatch(format!(
                "sketch expects length {}, vector has {}",
                self.m,
                b.len()
            )));
        }
        let mut out = vec![0.0; self.d];
        for (i, v) in b.iter().enumerate() {
            if self.sign[i] > 0 {
                out[self.bucket[i]] += v;
            } else {
                out[self.bucket[i]] -= v;
            }
        }
        Vector::new(out)
    }

    /// Dense `d × m` form of `S`. Test scale only.
    pub fn materialize_dense(&self) -> DenseMatrix {
        let mut s = DenseMatrix::zeros(self.d, self.m);
        for i in 0..self.m {
            s.set(self.bucket[i], i, f64::from(self.sign[i]));
        }
        s
    }

    /// Seed-only JSON form `{"d", "m", "seed"}`.
    pub fn to_json_seeded(&self) -> Result<String> {
        Ok(serde_json::to_string(&SketchJson::Seeded { d: self.d, m: self.m, seed: self.seed })?)
    }

    /// Explicit JSON form `{"d", "m", "bucket", "sign"}`.
    pub fn to_json_explicit(&self) -> Result<String> {
        Ok(serde_json::to_string(&SketchJson::Explicit {
            d: self.d,
            m: self.m,
            bucket: self.bucket.clone(),
            sign: self.sign.clone(),
        })?)
    }

    /// Parses either JSON form. The seeded form regenerates the sketch.
    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str(text)? {
            SketchJson::Explicit { d, m, bucket, sign } => {
                if bucket.len() != m {
                    return Err(KskError::DimensionMismatch(format!("m = {m} but {} buckets", bucket.len())));
                }
                Self::from_parts(d, bucket, sign)
            }
            SketchJson::Seeded { d, m, seed } => Self::new(d, m, seed),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SketchJson {
    Explicit { d: usize, m: usize, bucket: Vec<usize>, sign: Vec<i8> },
    Seeded { d: usize, m: usize, seed: u64 },
}

/// Exact subspace-embedding distortion of a sketch on `range(A)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// Smallest `ε ≥ 0` with `(1−ε)‖Ax‖² ≤ ‖SAx‖² ≤ (1+ε)‖Ax‖²` for all `x`.
    pub epsilon_exact: f64,
    /// Smallest singular value of `S·Q`, `Q` an orthonormal basis of `range(A)`.
    #[serde(rename = "sigma_min_SQ")]
    pub sketched_sigma_min: f64,
    /// Largest singular value of `S·Q`.
    #[serde(rename = "sigma_max_SQ")]
    pub sketched_sigma_max: f64,
    pub d: usize,
    pub n: usize,
}

/// Orthonormal basis of the column space of a full-column-rank matrix,
/// reused across many sketches of the same `A`.
#[derive(Clone, Debug)]
pub struct RangeBasis {
    q: DenseMatrix,
}

impl RangeBasis {
    /// Thin QR by modified Gram–Schmidt with one reorthogonalization pass.
    ///
    /// Fails with [`KskError::RankDeficient`] when the spectral summary
    /// reports rank below `cols`, or when a column loses all but `1e-10` of
    /// its norm to the previous ones.
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        let summary = spectral_summary(a, DEFAULT_RANK_TOL)?;
        if summary.rank_estimate < n {
            return Err(KskError::RankDeficient { rank: summary.rank_estimate, cols: n });
        }
        let at = a.transpose();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let col = at.row(j);
            let original = dot(col, col).sqrt();
            let mut v = col.to_vec();
            for _pass in 0..2 {
                for q in &basis {
                    let c = dot(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let norm = dot(&v, &v).sqrt();
            if !(norm > 1e-10 * original) {
                return Err(KskError::RankDeficient { rank: j, cols: n });
            }
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
        let mut q = DenseMatrix::zeros(m, n);
        for (j, col) in basis.iter().enumerate() {
            for i in 0..m {
                q.set(i, j, col[i]);
            }
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    /// Distortion of `sketch` on this subspace. `‖SQy‖²/‖Qy‖²` ranges over the
    /// squared singular values of `SQ`, so the extremes give `ε` exactly.
    pub fn distortion(&self, sketch: &CountSketch) -> Result<DistortionReport> {
        let sq = sketch.apply_to_matrix(&self.q)?;
        let eig = symmetric_eigenvalues(&sq.gram())?;
        let smax = eig[0].max(0.0).sqrt();
        let smin = eig[eig.len() - 1].max(0.0).sqrt();
        let epsilon_exact = (1.0 - smin * smin).max(smax * smax - 1.0).max(0.0);
        Ok(DistortionReport {
            epsilon_exact,
            sketched_sigma_min: smin,
            sketched_sigma_max: smax,
            d: sketch.d(),
            n: self.q.cols(),
        })
    }
}

/// Exact distortion of `sketch` on `range(a)`; `a` must have full column rank.
pub fn distortion_exact(sketch: &CountSketch, a: &DenseMatrix) -> Result<DistortionReport> {
    if a.rows() != sketch.m() {
        return Err(KskError::DimensionMismatch(format!(
            "sketch expects {} rows, matrix has {}",
            sketch.m(),
            a.rows()
        )));
    }
    RangeBasis::new(a)?.distortion(sketch)
}
