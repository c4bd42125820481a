// Round-trip a system through the KSKM binary format and Matrix Market.

use ksk::bench::generate_problem;
use ksk::matrix::io::{load_matrix, load_vector, save_kskm, save_matrix_market, save_vector};
use ksk::{solve, Method, SolverConfig, Vector};

pub fn run_example() -> ksk::Result<()> {
    let dir = std::env::temp_dir().join(format!("ksk_matrix_files_{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let p = generate_problem(200, 6, 3)?;

    save_kskm(dir.join("a.kskm"), &p.a)?;
    save_matrix_market(dir.join("a.mtx"), &p.a)?;
    save_vector(dir.join("b.kskm"), &p.b)?;

    let from_bin = load_matrix(dir.join("a.kskm"))?;
    let from_mtx = load_matrix(dir.join("a.mtx"))?;
    println!("kskm exact:  {}", from_bin == p.a);
    println!("mtx exact:   {}", from_mtx == p.a);
    for f in ["a.kskm", "a.mtx"] {
        println!("{f:<6} {} bytes", std::fs::metadata(dir.join(f))?.len());
    }

    let b = load_vector(dir.join("b.kskm"))?;
    let rep = solve(&from_mtx, &b, &Vector::zeros(6), None, &SolverConfig::new(Method::Mwrk))?;
    println!("mwrk from a.mtx: {} after {} iterations, RES {:e}", rep.termination, rep.iterations, rep.final_res);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
