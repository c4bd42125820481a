// Exact subspace-embedding distortion as the sketch grows.
//
// ```bash
// cargo run --release --example embedding_distortion
// ```

use ksk::bench::{empirical_epsilon, generate_problem, median};
use ksk::countsketch::RangeBasis;
use ksk::CountSketch;

pub fn run_example() -> ksk::Result<()> {
    let (m, n, seeds) = (3000, 15, 50u64);
    let p = generate_problem(m, n, 4)?;
    // One QR, reused for every sketch.
    let basis = RangeBasis::new(&p.a)?;
    println!("{:>6} {:>10} {:>10} {:>10}", "d", "median", "eps@0.1", "max");
    for d in [n * n / 4, n * n, 4 * n * n, 12 * n * n] {
        let eps = (0..seeds)
            .map(|s| Ok(basis.distortion(&CountSketch::new(d, m, s)?)?.epsilon_exact))
            .collect::<ksk::Result<Vec<f64>>>()?;
        let max = eps.iter().copied().fold(0.0, f64::max);
        println!("{d:>6} {:>10.4} {:>10.4} {max:>10.4}", median(&eps), empirical_epsilon(&eps, 0.1));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
