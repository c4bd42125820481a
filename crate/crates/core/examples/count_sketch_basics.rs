// Build a count sketch, look at it densely, apply it and serialize it.

use ksk::matrix::DenseMatrix;
use ksk::CountSketch;

pub fn run_example() -> ksk::Result<()> {
    let s = CountSketch::new(3, 8, 2024)?;
    println!("buckets: {:?}", s.bucket());
    println!("signs:   {:?}", s.sign());

    let dense = s.materialize_dense();
    for r in 0..dense.rows() {
        let line: Vec<String> = dense.row(r).iter().map(|v| format!("{v:+.0}")).collect();
        println!("  [{}]", line.join(" "));
    }

    let a = DenseMatrix::new(8, 2, (0..16).map(|v| v as f64).collect())?;
    let sa = s.apply_to_matrix(&a)?;
    println!("SA = {:?}", sa.data());
    println!("Sb = {:?}", s.apply_to_vector(&[1.0; 8])?.as_slice());

    // Seeded form is compact; explicit form also works for hand-built sketches.
    println!("{}", s.to_json_seeded()?);
    let hand = CountSketch::from_parts(2, vec![0, 1, 0], vec![1, -1, 1])?;
    println!("{}", hand.to_json_explicit()?);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
