//! Count sketch Kaczmarz (CSK) and friends for large consistent
//! overdetermined systems `Ax = b`, `A ∈ R^{m×n}`, `m ≫ n`.
//!
//! CSK compresses the rows of `(A, b)` once with a count sketch
//! `S ∈ R^{d×m}` and then runs the maximal weighted residual Kaczmarz
//! iteration on `(SA, Sb)`. Each step costs `O(dn)` instead of `O(mn)`.
//!
//! The crate is organised as:
//!
//! * [`matrix`]: dense storage, kernels, singular value estimates, file I/O.
//! * [`countsketch`]: the sketch itself and exact distortion measurement.
//! * [`solvers`]: RK, GRK, RGRK, MWRK and CSK behind [`solvers::solve`], plus
//!   the theoretical contraction factors.
//! * [`bench`]: the paired-trial benchmark harness and its CSV outputs.
//! * [`cli`]: the `ksk` command-line front end.
//!
//! ```
//! use ksk::bench::generate_problem;
//! use ksk::matrix::Vector;
//! use ksk::solvers::{solve, Method, SolverConfig, Termination};
//!
//! let p = generate_problem(2_000, 10, 7).unwrap();
//! let cfg = SolverConfig::new(Method::Csk).with_seed(1);
//! let report = solve(&p.a, &p.b, &Vector::zeros(10), Some(&p.x_star), &cfg).unwrap();
//! assert_eq!(report.termination, Termination::Converged);
//! ```

pub mod bench;
pub mod cli;
pub mod countsketch;
pub mod error;
pub mod matrix;
pub mod rng;
pub mod solvers;

pub use countsketch::{distortion_exact, CountSketch, DistortionReport};
pub use error::{KskError, Result};
pub use matrix::{DenseMatrix, Vector};
pub use solvers::{solve, Method, SolveReport, SolverConfig, Termination};
