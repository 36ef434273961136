//! Empirical local Lipschitz constant of the drift with respect to `W_α`.
//!
//! Every measure in a sweep is walked with the same streams as the base
//! measure. Increments are drawn by inverse-CDF over atoms listed in the same
//! order, so a small reweighting changes only a small fraction of steps and
//! the drift difference is estimated from paired trials.

use serde::Serialize;

use crate::error::{HoroError, Result};
use crate::groups::{wasserstein_alpha, FiniteSupportMeasure, GroupMetric, LambdaBound};
use crate::markov::irreducibility_check;
use crate::stats::MeanEstimate;
use crate::spaces::Space;
use crate::walks::displacement_rates;

/// Records with `W_α` below this multiple of the paired drift half-width are
/// excluded from the maximum ratio.
pub const EXCLUSION_FACTOR: f64 = 3.0;

pub struct Perturbation<S: Space> {
    pub label: String,
    pub measure: FiniteSupportMeasure<S>,
}

/// Weights `w_i + t·direction_i` on the same atoms.
pub fn weight_tilt<S: Space>(
    space: &S,
    mu: &FiniteSupportMeasure<S>,
    direction: &[f64],
    t: f64,
) -> Result<FiniteSupportMeasure<S>> {
    if direction.len() != mu.len() {
        return Err(HoroError::InvalidMeasure(format!(
            "tilt direction has {} entries for {} atoms",
            direction.len(),
            mu.len()
        )));
    }
    if direction.iter().sum::<f64>().abs() > 1e-12 {
        return Err(HoroError::InvalidMeasure("tilt direction must sum to zero".into()));
    }
    let weights = mu.weights().iter().zip(direction).map(|(w, d)| w + t * d).collect();
    FiniteSupportMeasure::new(space, mu.atoms().to_vec(), weights)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContinuityParams {
    pub alpha: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityRecord {
    pub label: String,
    pub w_alpha: f64,
    pub drift: f64,
    /// `ℓ̂(μ′) − ℓ̂(μ)`, from paired trials.
    pub delta_ell: f64,
    pub half_width: f64,
    pub ratio: Option<f64>,
    pub included: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuitySweep {
    pub base_drift: MeanEstimate,
    pub records: Vec<ContinuityRecord>,
    /// Largest included `|Δℓ| / W_α`.
    pub max_ratio: Option<f64>,
}

pub fn continuity_sweep<S: Space>(
    metric: &GroupMetric<'_, S>,
    base: &FiniteSupportMeasure<S>,
    family: &[Perturbation<S>],
    params: ContinuityParams,
) -> Result<ContinuitySweep> {
    let space = metric.space();
    let config = metric.config();
    let lambda = LambdaBound::new(params.lambda)?;
    lambda.require(space, config, base)?;
    let irreducible = irreducibility_check(space, base, &[]);
    if !irreducible.irreducible {
        return Err(HoroError::InvalidMeasure(format!(
            "base measure fixes the horofunction(s) {}",
            irreducible.fixed.join(", ")
        )));
    }
    let base_rates = displacement_rates(space, base, params.n, params.trials, params.seed)?;
    let base_drift = MeanEstimate::from_samples(&base_rates);
    if !base_drift.excludes_zero() {
        return Err(HoroError::NoDrift { mean: base_drift.mean, half_width: base_drift.half_width });
    }
    let mut records = Vec::with_capacity(family.len());
    for p in family {
        lambda.require(space, config, &p.measure)?;
        let w_alpha = wasserstein_alpha(metric, base, &p.measure, params.alpha)?;
        let rates = displacement_rates(space, &p.measure, params.n, params.trials, params.seed)?;
        let diffs: Vec<f64> = rates.iter().zip(&base_rates).map(|(a, b)| a - b).collect();
        let paired = MeanEstimate::from_samples(&diffs);
        let included = w_alpha > 0.0 && w_alpha >= EXCLUSION_FACTOR * paired.half_width;
        records.push(ContinuityRecord {
            label: p.label.clone(),
            w_alpha,
            drift: MeanEstimate::from_samples(&rates).mean,
            delta_ell: paired.mean,
            half_width: paired.half_width,
            ratio: (w_alpha > 0.0).then(|| paired.mean.abs() / w_alpha),
            included,
        });
    }
    let max_ratio = records.iter().filter(|r| r.included).filter_map(|r| r.ratio).reduce(f64::max);
    Ok(ContinuitySweep { base_drift, records, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::VisualConfig;
    use crate::groups::orbit_net;
    use crate::spaces::FreeGroupTree;

    /// Drift of a nearest-neighbour walk on F₂ from first-passage
    /// probabilities: `F_s = μ(s) + Σ_{t≠s} μ(t) F_{t⁻¹} F_s`, exit law
    /// `ν[s] = F_s(1 − F_{s⁻¹}) / (1 − F_s F_{s⁻¹})` and `ℓ = 1 − 2 Σ μ(s) ν[s]`.
    /// Weights are given for `a, A, b, B`.
    fn nearest_neighbour_drift(w: [f64; 4]) -> f64 {
        let inv = [1, 0, 3, 2];
        let mut f = [0.0f64; 4];
        for _ in 0..10_000 {
            let mut next = [0.0; 4];
            for s in 0..4 {
                next[s] = w[s] + (0..4).filter(|&t| t != s).map(|t| w[t] * f[inv[t]] * f[s]).sum::<f64>();
            }
            f = next;
        }
        let nu: Vec<f64> = (0..4).map(|s| f[s] * (1.0 - f[inv[s]]) / (1.0 - f[s] * f[inv[s]])).collect();
        1.0 - 2.0 * (0..4).map(|s| w[s] * nu[s]).sum::<f64>()
    }

    #[test]
    fn drift_oracle_reference_values() {
        assert!((nearest_neighbour_drift([0.25; 4]) - 0.5).abs() < 1e-12);
        // Walk on a only: recurrent on a line.
        assert!(nearest_neighbour_drift([0.5, 0.5, 0.0, 0.0]).abs() < 1e-2);
    }

    fn setup(t: &FreeGroupTree) -> (FiniteSupportMeasure<FreeGroupTree>, Vec<crate::spaces::BordOf<FreeGroupTree>>) {
        let mu = FiniteSupportMeasure::uniform(t, t.generators()).unwrap();
        let net = orbit_net(t, &mu, 2);
        (mu, net)
    }

    fn params(seed: u64) -> ContinuityParams {
        ContinuityParams { alpha: 0.5, n: 400, trials: 1000, seed, lambda: 2.5 }
    }

    #[test]
    fn zero_perturbation_is_excluded() {
        let t = FreeGroupTree::new(2).unwrap();
        let (mu, net) = setup(&t);
        let metric = GroupMetric::new(&t, VisualConfig::for_space(&t), net).unwrap();
        let same = Perturbation { label: "zero".into(), measure: mu.clone() };
        let sweep = continuity_sweep(&metric, &mu, &[same], params(1)).unwrap();
        let r = &sweep.records[0];
        assert_eq!((r.w_alpha, r.delta_ell, r.ratio, r.included), (0.0, 0.0, None, false));
        assert_eq!(sweep.max_ratio, None);
    }

    #[test]
    fn reducible_or_unbounded_bases_are_rejected() {
        let t = FreeGroupTree::new(2).unwrap();
        let (_, net) = setup(&t);
        let metric = GroupMetric::new(&t, VisualConfig::for_space(&t), net).unwrap();
        let ab = FiniteSupportMeasure::dirac(t.parse_word("ab").unwrap());
        assert!(continuity_sweep(&metric, &ab, &[], ContinuityParams { lambda: 5.0, ..params(1) }).is_err());
        let mu = FiniteSupportMeasure::uniform(&t, t.generators()).unwrap();
        let far = Perturbation { label: "far".into(), measure: ab };
        let r = continuity_sweep(&metric, &mu, &[far], params(1));
        assert!(matches!(r, Err(HoroError::LambdaViolation(_))), "{r:?}");
    }

    #[test]
    fn tilt_ratios_are_bounded_and_track_the_oracle() {
        let t = FreeGroupTree::new(2).unwrap();
        let (mu, net) = setup(&t);
        let metric = GroupMetric::new(&t, VisualConfig::for_space(&t), net).unwrap();
        let direction = [1.0, 1.0, -1.0, -1.0];
        let family: Vec<_> = [0.01, 0.02, 0.05]
            .iter()
            .map(|&s| Perturbation { label: format!("t={s}"), measure: weight_tilt(&t, &mu, &direction, s).unwrap() })
            .collect();
        let sweep = continuity_sweep(&metric, &mu, &family, params(7)).unwrap();
        for (r, s) in sweep.records.iter().zip([0.01, 0.02, 0.05]) {
            let exact = nearest_neighbour_drift([0.25 + s, 0.25 + s, 0.25 - s, 0.25 - s]) - 0.5;
            assert!((r.delta_ell - exact).abs() < 4.0 * r.half_width + 1e-3, "{r:?} vs {exact}");
            assert!(r.w_alpha > 0.0 && r.ratio.unwrap().is_finite());
        }
        assert!(sweep.max_ratio.unwrap().is_finite());
    }
}
