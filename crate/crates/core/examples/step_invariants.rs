// Watch individual projection steps through the observer hook and check
// that every step lands on its row's hyperplane and shrinks the error.

use ksk::bench::generate_problem;
use ksk::matrix::dot;
use ksk::solvers::solve_observed;
use ksk::{Method, SolverConfig, Vector};

pub fn run_example() -> ksk::Result<()> {
    let p = generate_problem(500, 8, 9)?;
    let err = |x: &[f64]| x.iter().zip(p.x_star.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    for method in [Method::Mwrk, Method::Csk] {
        let mut worst_plane: f64 = 0.0;
        let mut increases = 0;
        let mut first = Vec::new();
        let cfg = SolverConfig::new(method).with_tol(1e-10);
        let rep = solve_observed(&p.a, &p.b, &Vector::zeros(8), Some(&p.x_star), &cfg, &mut |ev| {
            worst_plane = worst_plane.max((ev.rhs() - dot(ev.row(), ev.x_after)).abs());
            if err(ev.x_after) > err(ev.x_before) {
                increases += 1;
            }
            if first.len() < 5 {
                first.push(ev.index);
            }
        })?;
        println!(
            "{method}: {} steps, first rows {first:?}, max |b_i - a_i.x| {worst_plane:.1e}, error increases {increases}",
            rep.iterations
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
