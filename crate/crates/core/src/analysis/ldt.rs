//! Exceedance frequencies `P(|d(ωⁿx₀, x₀)/n − ℓ| > ε)` on a grid of `n` and
//! their log-linear decay fit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HoroError, Result};
use crate::groups::FiniteSupportMeasure;
use crate::rng::stream_rng;
use crate::spaces::Space;
use crate::stats::{ols, wilson_interval, MeanEstimate, Z95};
use crate::walks::{run_walk, IncrementSampler};

/// Cells with fewer exceedances than this are left out of the fit.
pub const MIN_EXCEEDANCES: u64 = 5;

/// Decay of the exceedance frequency in `n` for one `ε`.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub epsilon: f64,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub exceedances: Vec<u64>,
    pub frequencies: Vec<f64>,
    pub wilson: Vec<(f64, f64)>,
    pub censored: Vec<bool>,
    /// Natural-log slope per unit `n`, over the uncensored cells.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    /// `−slope / (ε² ln b)`.
    pub k_hat: Option<f64>,
    /// Adjacent cells whose Wilson intervals show a certified increase.
    pub increases: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LdtReport {
    pub seed: u64,
    /// Drift the deviations are measured from.
    pub drift: f64,
    pub displacement: Vec<RateFit>,
    /// Same fits for `h_ξ(ωⁿx₀)/n` when a probe was given.
    pub horofunction: Vec<RateFit>,
}

fn fit_cells(epsilon: f64, n_grid: &[usize], values: &[Vec<f64>], drift: f64, ln_b: f64) -> RateFit {
    let trials = values.len();
    let exceedances: Vec<u64> = (0..n_grid.len())
        .map(|j| values.iter().filter(|row| (row[j] - drift).abs() > epsilon).count() as u64)
        .collect();
    let frequencies: Vec<f64> = exceedances.iter().map(|&k| k as f64 / trials as f64).collect();
    let wilson: Vec<(f64, f64)> = exceedances.iter().map(|&k| wilson_interval(k, trials as u64, Z95)).collect();
    let censored: Vec<bool> = exceedances.iter().map(|&k| k < MIN_EXCEEDANCES).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = (0..n_grid.len())
        .filter(|&j| !censored[j])
        .map(|j| (n_grid[j] as f64, frequencies[j].ln()))
        .unzip();
    let fit = ols(&x, &y);
    let increases = wilson.windows(2).filter(|w| w[1].0 > w[0].1).count();
    RateFit {
        epsilon,
        n_grid: n_grid.to_vec(),
        trials,
        exceedances,
        frequencies,
        wilson,
        censored,
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
        r_squared: fit.map(|f| f.r_squared),
        k_hat: fit.map(|f| -f.slope / (epsilon * epsilon * ln_b)),
        increases,
    }
}

/// Runs `trials` walks to the largest `n` of the grid, reading the
/// displacement rate (and the probe horofunction rate) at every grid point,
/// and fits `ln P ≈ c + slope·n` per `ε`. The drift defaults to the mean rate
/// at the largest `n`.
#[allow(clippy::too_many_arguments)]
pub fn ldt_fit<S: Space>(
    space: &S,
    mu: &FiniteSupportMeasure<S>,
    epsilons: &[f64],
    n_grid: &[usize],
    trials: usize,
    seed: u64,
    probe: Option<&S::Ideal>,
    drift: Option<f64>,
    b: f64,
) -> Result<LdtReport> {
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HoroError::Config("the n grid must be positive and strictly increasing".into()));
    }
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0)) {
        return Err(HoroError::Config(format!("deviation size {e} must be positive")));
    }
    if trials < 2 {
        return Err(HoroError::InsufficientTrials("large-deviation fits need at least 2 trials".into()));
    }
    let sampler = IncrementSampler::new(mu)?;
    let x0 = space.basepoint();
    let n_max = *n_grid.last().expect("nonempty grid");
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rates = Vec::with_capacity(n_grid.len());
            let mut horo = Vec::new();
            run_walk(space, &sampler, &mut stream_rng(seed, t), n_max, n_grid, |k, g| {
                let z = space.orbit_point(g);
                rates.push(space.distance(&z, &x0) / k as f64);
                if let Some(xi) = probe {
                    horo.push(space.busemann(xi, &z) / k as f64);
                }
            });
            (rates, horo)
        })
        .collect();
    let (rates, horo): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
    if rates.iter().flatten().any(|r| !r.is_finite()) {
        return Err(HoroError::Unsupported(format!("walks of length {n_max} left the representable range")));
    }
    let last: Vec<f64> = rates.iter().map(|r| r[n_grid.len() - 1]).collect();
    let estimate = MeanEstimate::from_samples(&last);
    if !estimate.excludes_zero() {
        return Err(HoroError::NoDrift { mean: estimate.mean, half_width: estimate.half_width });
    }
    let drift = drift.unwrap_or(estimate.mean);
    let ln_b = b.ln();
    let displacement: Vec<RateFit> = epsilons.iter().map(|&e| fit_cells(e, n_grid, &rates, drift, ln_b)).collect();
    let horofunction: Vec<RateFit> = match probe {
        Some(_) => epsilons.iter().map(|&e| fit_cells(e, n_grid, &horo, drift, ln_b)).collect(),
        None => Vec::new(),
    };
    let observed_but_censored =
        |fits: &[RateFit]| fits.iter().any(|f| f.exceedances.iter().any(|&k| k > 0) && f.slope.is_none());
    if observed_but_censored(&displacement) && displacement.iter().all(|f| f.slope.is_none()) {
        return Err(HoroError::InsufficientTrials(format!(
            "every (epsilon, n) cell has fewer than {MIN_EXCEEDANCES} exceedances"
        )));
    }
    Ok(LdtReport { seed, drift, displacement, horofunction })
}
