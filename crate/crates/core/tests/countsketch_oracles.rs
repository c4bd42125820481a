use ksk::bench::generate_problem;
use ksk::countsketch::{distortion_exact, CountSketch, RangeBasis};
use ksk::matrix::{DenseMatrix, Vector};
use ksk::rng::stream;
use ksk::solvers::kernels::{select_rk, RowSampler};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

// Lower-triangular Cholesky factor of an SPD matrix, row-major.
fn cholesky(g: &DenseMatrix) -> Vec<f64> {
    let n = g.rows();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = if i == j { s.sqrt() } else { s / l[j * n + j] };
        }
    }
    l
}

// Solves L y = v in place.
fn forward(l: &[f64], n: usize, v: &mut [f64]) {
    for i in 0..n {
        let mut s = v[i];
        for k in 0..i {
            s -= l[i * n + k] * v[k];
        }
        v[i] = s / l[i * n + i];
    }
}

// Solves L^T y = v in place.
fn backward(l: &[f64], n: usize, v: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = v[i];
        for k in i + 1..n {
            s -= l[k * n + i] * v[k];
        }
        v[i] = s / l[i * n + i];
    }
}

fn gram(m: &DenseMatrix) -> DenseMatrix {
    let n = m.cols();
    let mut g = DenseMatrix::zeros(n, n);
    for r in 0..m.rows() {
        let row = m.row(r);
        for i in 0..n {
            for j in 0..n {
                g.set(i, j, g.get(i, j) + row[i] * row[j]);
            }
        }
    }
    g
}

fn mat_vec(g: &DenseMatrix, v: &[f64]) -> Vec<f64> {
    (0..g.rows()).map(|i| (0..g.cols()).map(|j| g.get(i, j) * v[j]).sum()).collect()
}

fn quad(g: &DenseMatrix, v: &[f64]) -> f64 {
    mat_vec(g, v).iter().zip(v).map(|(a, b)| a * b).sum()
}

// Largest eigenvalue of the symmetric operator v -> shift*v + sign*L^{-1} H L^{-T} v.
fn power(l: &[f64], h: &DenseMatrix, n: usize, shift: f64, sign: f64) -> f64 {
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..20_000 {
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        let mut w = v.clone();
        backward(l, n, &mut w);
        let mut hw = mat_vec(h, &w);
        forward(l, n, &mut hw);
        let next: Vec<f64> = v.iter().zip(&hw).map(|(a, b)| shift * a + sign * b).collect();
        let est: f64 = next.iter().zip(&v).map(|(a, b)| a * b).sum();
        let done = (est - lambda).abs() <= 1e-13 * est.abs().max(1.0);
        lambda = est;
        v = next;
        if done {
            break;
        }
    }
    lambda
}

// Distortion from the generalized problem H v = mu G v, independent of any QR.
fn whitened_epsilon(sketch: &CountSketch, a: &DenseMatrix) -> f64 {
    let n = a.cols();
    let g = gram(a);
    let h = gram(&sketch.apply_to_matrix(a).unwrap());
    let l = cholesky(&g);
    let mu_max = power(&l, &h, n, 0.0, 1.0);
    let mu_min = mu_max - power(&l, &h, n, mu_max, -1.0);
    (1.0 - mu_min).max(mu_max - 1.0).max(0.0)
}

#[test]
fn whitened_oracle_agrees_with_exact_distortion() {
    let p = generate_problem(500, 8, 31).unwrap();
    let basis = RangeBasis::new(&p.a).unwrap();
    let mut agree = 0;
    for s in 0..200u64 {
        let sketch = CountSketch::new(64, 500, 7000 + s).unwrap();
        let exact = basis.distortion(&sketch).unwrap().epsilon_exact;
        let oracle = whitened_epsilon(&sketch, &p.a);
        if (exact - oracle).abs() <= 0.02 {
            agree += 1;
        }
    }
    assert!(agree >= 198, "only {agree}/200 within 0.02");
}

#[test]
fn sampled_ratios_never_exceed_exact_distortion() {
    let p = generate_problem(400, 6, 5).unwrap();
    let g = gram(&p.a);
    let mut rng = stream(12);
    for s in 0..20u64 {
        let sketch = CountSketch::new(40, 400, s).unwrap();
        let h = gram(&sketch.apply_to_matrix(&p.a).unwrap());
        let exact = distortion_exact(&sketch, &p.a).unwrap().epsilon_exact;
        let mut sampled: f64 = 0.0;
        for _ in 0..2000 {
            let x: Vec<f64> = (0..6).map(|_| StandardNormal.sample(&mut rng)).collect();
            let ratio = quad(&h, &x) / quad(&g, &x);
            sampled = sampled.max((ratio - 1.0).abs());
        }
        assert!(sampled <= exact + 1e-9, "sampled {sampled} > exact {exact}");
        assert!(sampled >= 0.5 * exact, "sampled {sampled} far below exact {exact}");
    }
}

#[test]
fn distortion_depends_only_on_column_space() {
    let p = generate_problem(300, 5, 77).unwrap();
    let mut r = DenseMatrix::zeros(5, 5);
    let mut rng = stream(3);
    for i in 0..5 {
        r.set(i, i, 1.0 + rng.random::<f64>());
        for j in i + 1..5 {
            r.set(i, j, rng.random::<f64>() - 0.5);
        }
    }
    let ar = p.a.matmul(&r).unwrap();
    for s in 0..10u64 {
        let sketch = CountSketch::new(30, 300, s).unwrap();
        let e1 = distortion_exact(&sketch, &p.a).unwrap().epsilon_exact;
        let e2 = distortion_exact(&sketch, &ar).unwrap().epsilon_exact;
        assert!((e1 - e2).abs() <= 1e-8, "{e1} vs {e2}");
    }
}

#[test]
fn sketch_has_one_signed_entry_per_column() {
    let s = CountSketch::new(17, 200, 4).unwrap();
    let dense = s.materialize_dense();
    for c in 0..200 {
        let nz: Vec<f64> = (0..17).map(|r| dense.get(r, c)).filter(|v| *v != 0.0).collect();
        assert_eq!(nz.len(), 1);
        assert_eq!(nz[0].abs(), 1.0);
    }
    assert_eq!(s.bucket(), CountSketch::new(17, 200, 4).unwrap().bucket());
    assert_ne!(s.bucket(), CountSketch::new(17, 200, 5).unwrap().bucket());
}

#[test]
fn json_forms_rebuild_the_same_sketch() {
    let s = CountSketch::new(7, 30, 1234).unwrap();
    assert_eq!(s.to_json_seeded().unwrap(), r#"{"d":7,"m":30,"seed":1234}"#);
    for text in [s.to_json_seeded().unwrap(), s.to_json_explicit().unwrap()] {
        let back = CountSketch::from_json(&text).unwrap();
        assert_eq!(back.bucket(), s.bucket());
        assert_eq!(back.sign(), s.sign());
    }
}

#[test]
fn sketch_rejects_bad_shapes() {
    assert!(CountSketch::new(0, 10, 1).is_err());
    assert!(CountSketch::new(10, 10, 1).is_err());
    let s = CountSketch::new(3, 10, 1).unwrap();
    assert!(s.apply_to_vector(&[1.0; 9]).is_err());
    assert!(s.apply_to_matrix(&DenseMatrix::zeros(9, 2)).is_err());
}

#[test]
fn rank_deficient_input_is_rejected() {
    let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0], vec![0.0, 0.0]]).unwrap();
    let s = CountSketch::new(2, 4, 0).unwrap();
    assert!(distortion_exact(&s, &a).is_err());
}

#[test]
fn isometry_in_expectation() {
    let b = Vector::new((0..100).map(|i| (i as f64 * 0.37).sin() + 0.2).collect()).unwrap();
    let bb = b.norm_sq();
    let n = 4000u64;
    let ratios: Vec<f64> = (0..n).map(|s| CountSketch::new(10, 100, s).unwrap().apply_to_vector(&b).unwrap().norm_sq() / bb).collect();
    let mean = ratios.iter().sum::<f64>() / n as f64;
    let var = ratios.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    assert!((mean - 1.0).abs() <= 5.0 * (var / n as f64).sqrt(), "mean {mean}");
}

#[test]
fn rk_selection_follows_row_norms() {
    let mut rng = stream(2024);
    let draws = 100_000;
    let hits = (0..draws).filter(|_| select_rk(&[1.0, 3.0], 4.0, &mut rng).unwrap() == 1).count();
    let p = hits as f64 / draws as f64;
    let sd = (0.75f64 * 0.25 / draws as f64).sqrt();
    assert!((p - 0.75).abs() <= 3.0 * sd, "p = {p}");

    let weights = [1.0, 2.0, 3.0, 4.0];
    let sampler = RowSampler::new(&weights).unwrap();
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        counts[sampler.sample(&mut rng)] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&weights)
        .map(|(&c, w)| {
            let e = draws as f64 * w / 10.0;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    // 0.999 quantile of chi-square with 3 degrees of freedom
    assert!(chi2 < 16.27, "chi2 = {chi2}");
}

#[test]
fn zero_weight_rows_are_never_drawn() {
    let mut rng = stream(1);
    let sampler = RowSampler::new(&[0.0, 2.0, 0.0, 1.0, 0.0]).unwrap();
    for _ in 0..10_000 {
        let i = sampler.sample(&mut rng);
        assert!(i == 1 || i == 3);
    }
}
