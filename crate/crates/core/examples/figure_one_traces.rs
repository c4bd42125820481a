// Median RES-versus-iteration traces for RK, GRK, MWRK and CSK.
//
// Writes CSV to stdout; pipe it into any plotting tool.
//
// ```bash
// cargo run --release --example figure_one_traces > traces.csv
// ```

use ksk::bench::{emit_traces_csv, run_suite, BenchConfig};
use ksk::solvers::Method;

pub fn run_example() -> ksk::Result<()> {
    let trials = std::env::var("KSK_EXAMPLE_TRIALS").ok().and_then(|t| t.parse().ok()).unwrap_or(5);
    let cfg = BenchConfig {
        sizes: vec![(10_000, 50)],
        methods: vec![Method::Rk, Method::Grk, Method::Mwrk, Method::Csk],
        trials,
        threads: Some(1),
        ..BenchConfig::default()
    };
    let result = run_suite(&cfg)?;
    for ((m, n), rows) in &result.traces {
        eprintln!("{m}x{n}: {} trace points", rows.len());
        print!("{}", emit_traces_csv(rows));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
