// Desk-scale version of the CSK vs MWRK iteration/time table.
//
// ```bash
// cargo run --release --example table_one
// KSK_EXAMPLE_TRIALS=50 KSK_EXAMPLE_SIZES=100000x50,100000x100 cargo run --release --example table_one
// ```

use ksk::bench::{emit_csv, run_suite, BenchConfig};
use ksk::solvers::Method;

fn sizes_from_env() -> Vec<(usize, usize)> {
    std::env::var("KSK_EXAMPLE_SIZES")
        .ok()
        .map(|s| {
            s.split(',')
                .filter_map(|t| t.split_once('x'))
                .filter_map(|(m, n)| Some((m.parse().ok()?, n.parse().ok()?)))
                .collect()
        })
        .unwrap_or_else(|| vec![(20_000, 50)])
}

pub fn run_example() -> ksk::Result<()> {
    let trials = std::env::var("KSK_EXAMPLE_TRIALS").ok().and_then(|t| t.parse().ok()).unwrap_or(20);
    let cfg = BenchConfig {
        sizes: sizes_from_env(),
        methods: vec![Method::Mwrk, Method::Csk],
        trials,
        threads: Some(1),
        ..BenchConfig::default()
    };
    let result = run_suite(&cfg)?;
    print!("{}", emit_csv(&result.rows));
    if result.max_iters_hits > 0 {
        eprintln!("{} solve(s) hit the iteration cap", result.max_iters_hits);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
