//! Drift cross-checks and the two statistical experiments built on walks:
//! continuity of the drift in the measure and large-deviation decay.

mod continuity;
mod ldt;

pub use continuity::{continuity_sweep, weight_tilt, ContinuityParams, ContinuityRecord, ContinuitySweep, Perturbation};
pub use ldt::{ldt_fit, LdtReport, RateFit};

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::comparison_bound_check;
use crate::error::{HoroError, Result};
use crate::groups::FiniteSupportMeasure;
use crate::markov::EmpiricalBoundaryMeasure;
use crate::rng::stream_rng;
use crate::spaces::Space;
use crate::walks::{run_walk, IncrementSampler};

/// `Σ_g Σ_ξ μ(g) ν̂(ξ) h_ξ(gx₀)`.
pub fn furstenberg_drift<S: Space>(
    space: &S,
    mu: &FiniteSupportMeasure<S>,
    nu: &EmpiricalBoundaryMeasure<S>,
) -> Result<f64> {
    if nu.is_empty() {
        return Err(HoroError::InvalidMeasure("the boundary measure has no atoms".into()));
    }
    Ok(mu
        .iter()
        .map(|(g, wg)| {
            let z = space.orbit_point(g);
            wg * nu.atoms.iter().zip(&nu.weights).map(|(xi, w)| w * space.busemann(xi, &z)).sum::<f64>()
        })
        .sum())
}

/// Worst slack of `max_i h_i(ωⁿx₀) ≤ d(ωⁿx₀, x₀) ≤ max_i h_i(ωⁿx₀) + K` over
/// sampled walks.
#[derive(Debug, Clone, Serialize)]
pub struct BridgeReport {
    pub n: usize,
    pub samples: usize,
    pub constant: f64,
    pub min_lower_slack: f64,
    pub min_upper_slack: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Samples `samples` walks of length `n` and evaluates both comparison
/// inequalities at each endpoint. On spaces with `δ > 0` a deficit up to
/// `2δ + 1e−6` is tolerated.
pub fn comparison_bridge_check<S: Space>(
    space: &S,
    mu: &FiniteSupportMeasure<S>,
    xi: &S::Ideal,
    eta: &S::Ideal,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<BridgeReport> {
    if space.ideals_close(xi, eta) {
        return Err(HoroError::InvalidPair("the bridge needs two distinct boundary points".into()));
    }
    let sampler = IncrementSampler::new(mu)?;
    let reports = (0..samples as u64)
        .into_par_iter()
        .map(|t| {
            let g = run_walk(space, &sampler, &mut stream_rng(seed, t), n, &[], |_, _| {});
            comparison_bound_check(space, xi, eta, &g)
        })
        .collect::<Result<Vec<_>>>()?;
    let constant = comparison_bound_check(space, xi, eta, &space.identity())?.constant;
    let min_lower_slack = reports.iter().map(|r| r.lower_slack).fold(f64::INFINITY, f64::min);
    let min_upper_slack = reports.iter().map(|r| r.upper_slack).fold(f64::INFINITY, f64::min);
    let tolerance = if space.delta() > 0.0 { 2.0 * space.delta() + 1e-6 } else { 1e-9 };
    Ok(BridgeReport {
        n,
        samples,
        constant,
        min_lower_slack,
        min_upper_slack,
        tolerance,
        holds: min_lower_slack >= -tolerance && min_upper_slack >= -tolerance,
    })
}
