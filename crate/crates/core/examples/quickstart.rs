// Generate a tall Gaussian system and solve it with the count-sketch solver.
//
// ```bash
// cargo run --release --example quickstart
// ```

use ksk::bench::generate_problem;
use ksk::{solve, Method, SolverConfig, Vector};

pub fn run_example() -> ksk::Result<()> {
    let p = generate_problem(5000, 20, 1)?;
    let cfg = SolverConfig::new(Method::Csk).with_seed(7).with_measure_epsilon(true);
    let report = solve(&p.a, &p.b, &Vector::zeros(20), Some(&p.x_star), &cfg)?;

    println!("method:      {}", report.method);
    println!("termination: {}", report.termination);
    println!("iterations:  {}", report.iterations);
    println!("final RES:   {:e}", report.final_res);
    if let Some(eps) = report.epsilon_exact {
        println!("sketch eps:  {eps:.4}");
    }
    println!("x[0..3]:     {:?}", &report.x[..3]);
    println!("x*[0..3]:    {:?}", &p.x_star[..3]);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
