// Spectral summary and the MWRK / CSK contraction factors for one matrix.

use ksk::bench::generate_problem;
use ksk::countsketch::RangeBasis;
use ksk::matrix::spectral::{spectral_summary, DEFAULT_RANK_TOL};
use ksk::solvers::{convergence_factor_csk, convergence_factor_mwrk};
use ksk::CountSketch;

pub fn run_example() -> ksk::Result<()> {
    let (m, n) = (1000, 10);
    let p = generate_problem(m, n, 21)?;
    let summary = spectral_summary(&p.a, DEFAULT_RANK_TOL)?;
    println!("sigma_max         {:.6}", summary.sigma_max);
    println!("sigma_min_nonzero {:.6}", summary.sigma_min_nonzero);
    println!("frobenius_sq      {:.3}", summary.frobenius_sq);
    println!("rank              {}", summary.rank_estimate);

    let mwrk = convergence_factor_mwrk(&p.a, &summary)?;
    println!("mwrk factor       {mwrk:.8}");

    let eps = RangeBasis::new(&p.a)?.distortion(&CountSketch::new(n * n, m, 0)?)?.epsilon_exact;
    println!("measured eps      {eps:.4}");
    for e in [0.0, 0.25, eps.min(0.99), 0.9] {
        println!("csk factor @ {e:.3}  {:.8}", convergence_factor_csk(&summary, n, e)?);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
