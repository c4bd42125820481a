// All five Kaczmarz variants on the same problem.
//
// ```bash
// cargo run --release --example compare_solvers
// ```

use ksk::bench::generate_problem;
use ksk::{solve, Method, SolverConfig, Vector};

pub fn run_example() -> ksk::Result<()> {
    let (m, n) = (4000, 30);
    let p = generate_problem(m, n, 11)?;
    println!("{:<6} {:>10} {:>12} {:>10}  termination", "method", "iterations", "final_res", "time_ms");
    for method in Method::ALL {
        let mut cfg = SolverConfig::new(method).with_seed(3);
        if method == Method::Rgrk {
            cfg = cfg.with_theta(0.8);
        }
        let rep = solve(&p.a, &p.b, &Vector::zeros(n), Some(&p.x_star), &cfg)?;
        println!(
            "{:<6} {:>10} {:>12.3e} {:>10.3}  {}",
            method.as_str(),
            rep.iterations,
            rep.final_res,
            rep.wall_time_s * 1e3,
            rep.termination
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
