//! Prints the empirical four-point defect of the half-plane sampler.

use horolab::spaces::{check_hyperbolicity, UpperHalfPlane};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_261_016);
    let samples: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(1_000_000);
    let report = check_hyperbolicity(&UpperHalfPlane::with_delta(0.0), 0.0, samples, seed);
    println!("seed {seed} samples {samples} max defect {:.6}", report.max_violation);
}
