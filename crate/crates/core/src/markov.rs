//! The boundary Markov operator `Q_μ f(ξ) = Σ μ(g) f(g⁻¹ξ)`, empirical
//! stationary measures, the average Hölder constant `k_α^n`, the contraction
//! upper bound and irreducibility diagnostics.
//!
//! Suprema over the boundary or over horofunctions are taken over declared
//! finite nets. Boundary ratios use the two-point upper bracket `ρ_b` in both
//! numerator and denominator; on 0-hyperbolic spaces `ρ_b` is an ultrametric,
//! so that bracket is exact there.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{bord_eq, horo_action, rho_b, Horofunction, VisualConfig};
use crate::error::{HoroError, Result};
use crate::groups::{convolve, optimal_transport, power, FiniteSupportMeasure};
use crate::rng::stream_rng;
use crate::spaces::{Bord, BordOf, Space};
use crate::walks::{run_walk, IncrementSampler};

/// Atoms per parallel task when summing over a measure.
const ATOM_CHUNK: usize = 64;
/// Relative slack for the submultiplicativity comparison.
const SUBMULT_TOLERANCE: f64 = 1e-12;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(HoroError::InvalidAlpha(alpha))
    }
}

/// `{1/2, 1/4, …, 2^{−j_max}}`.
pub fn dyadic_alpha_grid(j_max: u32) -> Vec<f64> {
    (1..=j_max).map(|j| 0.5f64.powi(j as i32)).collect()
}

/// A real function on the boundary.
#[derive(Debug, Clone)]
pub enum BoundaryObservable<S: Space> {
    Constant(f64),
    /// `ξ ↦ b^{−⟨ξ, anchor⟩}`, zero at the anchor.
    VisualKernel(S::Ideal),
    /// `ξ ↦ h_ξ(z)` for a fixed interior point `z`.
    BusemannAt(S::Point),
    /// `ξ ↦ min(⟨ξ, anchor⟩, cap)`.
    ClippedProduct { anchor: S::Ideal, cap: f64 },
}

impl<S: Space> BoundaryObservable<S> {
    pub fn eval(&self, space: &S, config: &VisualConfig, xi: &S::Ideal) -> f64 {
        match self {
            BoundaryObservable::Constant(c) => *c,
            BoundaryObservable::VisualKernel(anchor) => {
                rho_b(space, config, &Bord::Ideal(xi.clone()), &Bord::Ideal(anchor.clone()))
            }
            BoundaryObservable::BusemannAt(z) => space.busemann(xi, z),
            BoundaryObservable::ClippedProduct { anchor, cap } => {
                let product = if space.ideals_close(xi, anchor) {
                    f64::INFINITY
                } else {
                    space.extended_product(&Bord::Ideal(xi.clone()), &Bord::Ideal(anchor.clone()), &space.basepoint())
                };
                product.min(*cap)
            }
        }
    }
}

/// `(Q_μ f)(ξ) = Σ μ(g) f(g⁻¹ξ)`.
pub fn markov_apply<S: Space>(
    space: &S,
    config: &VisualConfig,
    mu: &FiniteSupportMeasure<S>,
    f: &BoundaryObservable<S>,
    xi: &S::Ideal,
) -> f64 {
    mu.iter().map(|(g, w)| w * f.eval(space, config, &space.apply_ideal(&space.inverse(g), xi))).sum()
}

/// `(Q_μ^n f)(ξ)` by `n` nested applications of the one-step operator.
pub fn markov_iterate<S: Space>(
    space: &S,
    config: &VisualConfig,
    mu: &FiniteSupportMeasure<S>,
    n: usize,
    f: &BoundaryObservable<S>,
    xi: &S::Ideal,
) -> f64 {
    if n == 0 {
        return f.eval(space, config, xi);
    }
    mu.iter()
        .map(|(g, w)| w * markov_iterate(space, config, mu, n - 1, f, &space.apply_ideal(&space.inverse(g), xi)))
        .sum()
}

/// Law of the boundary chain after `n` steps, estimated from `trials` runs.
#[derive(Debug, Clone)]
pub struct EmpiricalBoundaryMeasure<S: Space> {
    pub atoms: Vec<S::Ideal>,
    pub weights: Vec<f64>,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub start: S::Ideal,
}

impl<S: Space> EmpiricalBoundaryMeasure<S> {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn integrate(&self, space: &S, config: &VisualConfig, f: &BoundaryObservable<S>) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(xi, w)| w * f.eval(space, config, xi)).sum()
    }

    /// `|∫ Q_μ f dν̂ − ∫ f dν̂|`.
    pub fn stationarity_residual(
        &self,
        space: &S,
        config: &VisualConfig,
        mu: &FiniteSupportMeasure<S>,
        f: &BoundaryObservable<S>,
    ) -> f64 {
        let pushed: f64 =
            self.atoms.iter().zip(&self.weights).map(|(xi, w)| w * markov_apply(space, config, mu, f, xi)).sum();
        (pushed - self.integrate(space, config, f)).abs()
    }
}

/// Runs `ξ_{k+1} = g_k⁻¹ ξ_k` from `start` for `n` steps in each of `trials`
/// seeded trials and returns the empirical law of `ξ_n`.
pub fn stationary_estimate<S: Space>(
    space: &S,
    mu: &FiniteSupportMeasure<S>,
    n: usize,
    trials: usize,
    start: &S::Ideal,
    seed: u64,
) -> Result<EmpiricalBoundaryMeasure<S>> {
    if trials == 0 {
        return Err(HoroError::InsufficientTrials("the boundary chain needs at least one trial".into()));
    }
    let inverses: Vec<S::Isometry> = mu.atoms().iter().map(|g| space.inverse(g)).collect();
    let index = WeightedIndex::new(mu.weights())
        .map_err(|e| HoroError::InvalidMeasure(format!("cannot sample from measure: {e}")))?;
    let ends: Vec<S::Ideal> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial);
            let mut xi = start.clone();
            for _ in 0..n {
                xi = space.apply_ideal(&inverses[index.sample(&mut rng)], &xi);
            }
            xi
        })
        .collect();
    let share = 1.0 / trials as f64;
    let mut merged: BTreeMap<S::IdealKey, (S::Ideal, f64)> = BTreeMap::new();
    for xi in ends {
        merged.entry(space.ideal_key(&xi)).or_insert((xi, 0.0)).1 += share;
    }
    let (atoms, weights) = merged.into_values().unzip();
    Ok(EmpiricalBoundaryMeasure { atoms, weights, n, trials, seed, start: start.clone() })
}

/// Transport distance between two empirical boundary measures with cost
/// `min(1, ρ_b)^α`, after snapping atoms to resolution-`level` cells. Atoms
/// in the same cell cost nothing.
pub fn boundary_discrepancy<S: Space>(
    space: &S,
    config: &VisualConfig,
    first: &EmpiricalBoundaryMeasure<S>,
    second: &EmpiricalBoundaryMeasure<S>,
    alpha: f64,
    level: u32,
) -> Result<f64> {
    check_alpha(alpha)?;
    let coarsen = |m: &EmpiricalBoundaryMeasure<S>| {
        let mut cells: BTreeMap<S::IdealKey, (S::Ideal, f64)> = BTreeMap::new();
        for (xi, w) in m.atoms.iter().zip(&m.weights) {
            let rep = space.coarse_ideal(xi, level);
            cells.entry(space.ideal_key(&rep)).or_insert((rep, 0.0)).1 += w;
        }
        cells.into_iter().map(|(k, (rep, w))| (k, Bord::Ideal(rep), w)).collect::<Vec<_>>()
    };
    let a = coarsen(first);
    let b = coarsen(second);
    let wa: Vec<f64> = a.iter().map(|c| c.2).collect();
    let wb: Vec<f64> = b.iter().map(|c| c.2).collect();
    optimal_transport(&wa, &wb, |i, j| {
        if a[i].0 == b[j].0 {
            0.0
        } else {
            rho_b(space, config, &a[i].1, &b[j].1).min(1.0).powf(alpha)
        }
    })
}

/// Distinct boundary pairs over which boundary suprema are taken.
#[derive(Debug, Clone)]
pub struct PairNet<S: Space> {
    ideals: Vec<S::Ideal>,
    pairs: Vec<(usize, usize)>,
}

impl<S: Space> PairNet<S> {
    /// Every unordered pair of distinct ideals in the list.
    pub fn all_pairs(space: &S, ideals: Vec<S::Ideal>) -> Self {
        let mut distinct: Vec<S::Ideal> = Vec::new();
        for xi in ideals {
            if !distinct.iter().any(|eta| space.ideals_close(&xi, eta)) {
                distinct.push(xi);
            }
        }
        let n = distinct.len();
        let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        PairNet { ideals: distinct, pairs }
    }

    pub fn from_pairs(space: &S, list: Vec<(S::Ideal, S::Ideal)>) -> Result<Self> {
        let mut ideals: Vec<S::Ideal> = Vec::new();
        let mut position = |xi: S::Ideal| match ideals.iter().position(|eta| space.ideals_close(&xi, eta)) {
            Some(i) => i,
            None => {
                ideals.push(xi);
                ideals.len() - 1
            }
        };
        let mut pairs = Vec::with_capacity(list.len());
        for (xi, eta) in list {
            let (i, j) = (position(xi), position(eta));
            if i == j {
                return Err(HoroError::InvalidPair("a pair net needs distinct boundary points".into()));
            }
            pairs.push((i, j));
        }
        Ok(PairNet { ideals, pairs })
    }

    pub fn ideals(&self) -> &[S::Ideal] {
        &self.ideals
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, k: usize) -> (&S::Ideal, &S::Ideal) {
        let (i, j) = self.pairs[k];
        (&self.ideals[i], &self.ideals[j])
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The sub-net of pairs whose index satisfies `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        let pairs = self.pairs.iter().enumerate().filter(|(k, _)| keep(*k)).map(|(_, p)| *p).collect();
        PairNet { ideals: self.ideals.clone(), pairs }
    }
}

/// `μⁿ` by enumeration when every convolution step stays within `cap`
/// products, otherwise the empirical law of `samples` seeded `n`-step walks.
/// The flag is `true` for the exact measure.
pub fn power_or_sample<S: Space>(
    space: &S,
    mu: &FiniteSupportMeasure<S>,
    n: usize,
    cap: usize,
    samples: usize,
    seed: u64,
) -> Result<(FiniteSupportMeasure<S>, bool)> {
    match power(space, mu, n, cap) {
        Ok(m) => Ok((m, true)),
        Err(HoroError::SupportExplosion { .. }) => Ok((sample_power(space, mu, n, samples, seed)?, false)),
        Err(e) => Err(e),
    }
}

/// Empirical law of `ωⁿ` over `samples` walks; walk `t` uses stream `t`.
pub fn sample_power<S: Space>(
    space: &S,
    mu: &FiniteSupportMeasure<S>,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<FiniteSupportMeasure<S>> {
    let sampler = IncrementSampler::new(mu)?;
    let draws: Vec<S::Isometry> = (0..samples as u64)
        .into_par_iter()
        .map(|t| run_walk(space, &sampler, &mut stream_rng(seed, t), n, &[], |_, _| {}))
        .collect();
    FiniteSupportMeasure::empirical(space, draws)
}

/// Sums `term(atom, weight)` (a vector of fixed length) over the measure in
/// fixed-size atom chunks, reducing the chunks in order.
fn chunked_sum<S: Space>(
    measure: &FiniteSupportMeasure<S>,
    len: usize,
    term: impl Fn(&S::Isometry, f64, &mut [f64]) + Sync,
) -> Vec<f64> {
    let atoms = measure.atoms();
    let weights = measure.weights();
    let partial: Vec<Vec<f64>> = (0..atoms.len().div_ceil(ATOM_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; len];
            for i in c * ATOM_CHUNK..((c + 1) * ATOM_CHUNK).min(atoms.len()) {
                term(&atoms[i], weights[i], &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; len];
    for acc in partial {
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
    }
    total
}

/// `Σ_g μ(g) (ρ_b(g⁻¹ξ, g⁻¹η) / ρ_b(ξ, η))^α` for every pair of the net.
pub fn ratio_expectations<S: Space>(
    space: &S,
    config: &VisualConfig,
    measure: &FiniteSupportMeasure<S>,
    net: &PairNet<S>,
    alpha: f64,
) -> Vec<f64> {
    let bords: Vec<BordOf<S>> = net.ideals.iter().cloned().map(Bord::Ideal).collect();
    let base: Vec<f64> = net.pairs.iter().map(|&(i, j)| rho_b(space, config, &bords[i], &bords[j]).powf(alpha)).collect();
    chunked_sum(measure, net.len(), |g, w, acc| {
        let inv = space.inverse(g);
        let images: Vec<BordOf<S>> = net.ideals.iter().map(|xi| Bord::Ideal(space.apply_ideal(&inv, xi))).collect();
        for (k, &(i, j)) in net.pairs.iter().enumerate() {
            acc[k] += w * rho_b(space, config, &images[i], &images[j]).powf(alpha) / base[k];
        }
    })
}

/// Net estimate of `k_α^n(μ)`.
#[derive(Debug, Clone, Serialize)]
pub struct KAlphaEstimate {
    pub n: usize,
    pub alpha: f64,
    pub value: f64,
    /// Range of the true net maximum given the `D̄_b ∈ [ρ_b/4, ρ_b]` brackets.
    pub bracket_lower: f64,
    pub bracket_upper: f64,
    pub bracket_width: f64,
    pub argmax: usize,
    pub pairs: usize,
    pub exact: bool,
}

fn k_alpha_from_measure<S: Space>(
    space: &S,
    config: &VisualConfig,
    measure: &FiniteSupportMeasure<S>,
    n: usize,
    alpha: f64,
    net: &PairNet<S>,
    exact: bool,
) -> KAlphaEstimate {
    let values = ratio_expectations(space, config, measure, net, alpha);
    let (argmax, value) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best });
    let spread = if config.delta == 0.0 { 1.0 } else { 4f64.powf(alpha) };
    KAlphaEstimate {
        n,
        alpha,
        value,
        bracket_lower: value / spread,
        bracket_upper: value * spread,
        bracket_width: value * (spread - 1.0 / spread),
        argmax,
        pairs: net.len(),
        exact,
    }
}

/// Max over the pair net of the `μⁿ`-expected `α`-power distortion ratio.
#[allow(clippy::too_many_arguments)]
pub fn k_alpha_estimate<S: Space>(
    space: &S,
    config: &VisualConfig,
    mu: &FiniteSupportMeasure<S>,
    n: usize,
    alpha: f64,
    net: &PairNet<S>,
    cap: usize,
    samples: usize,
    seed: u64,
) -> Result<KAlphaEstimate> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(HoroError::InvalidMeasure("k_alpha is defined for n ≥ 1".into()));
    }
    if net.is_empty() {
        return Err(HoroError::InvalidNet("the pair net is empty".into()));
    }
    let (measure, exact) = power_or_sample(space, mu, n, cap, samples, seed)?;
    Ok(k_alpha_from_measure(space, config, &measure, n, alpha, net, exact))
}

#[derive(Debug, Clone, Serialize)]
pub struct SubmultiplicativityReport {
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
    pub k_m: f64,
    pub k_n: f64,
    pub k_m_plus_n: f64,
    /// `k^m k^n − k^{m+n}`.
    pub slack: f64,
    pub holds: bool,
}

/// Compares the exact net estimates `k^{m+n}` and `k^m k^n`.
#[allow(clippy::too_many_arguments)]
pub fn submultiplicativity_check<S: Space>(
    space: &S,
    config: &VisualConfig,
    mu: &FiniteSupportMeasure<S>,
    alpha: f64,
    m: usize,
    n: usize,
    net: &PairNet<S>,
    cap: usize,
) -> Result<SubmultiplicativityReport> {
    check_alpha(alpha)?;
    if m == 0 || n == 0 {
        return Err(HoroError::InvalidMeasure("k_alpha is defined for n ≥ 1".into()));
    }
    if net.is_empty() {
        return Err(HoroError::InvalidNet("the pair net is empty".into()));
    }
    let k = |j: usize| -> Result<f64> {
        let measure = power(space, mu, j, cap)?;
        Ok(k_alpha_from_measure(space, config, &measure, j, alpha, net, true).value)
    };
    let (k_m, k_n, k_m_plus_n) = (k(m)?, k(n)?, k(m + n)?);
    let product = k_m * k_n;
    Ok(SubmultiplicativityReport {
        m,
        n,
        alpha,
        k_m,
        k_n,
        k_m_plus_n,
        slack: product - k_m_plus_n,
        holds: k_m_plus_n <= product * (1.0 + SUBMULT_TOLERANCE),
    })
}

/// Submultiplicativity for every `1 ≤ m ≤ n` with `m + n ≤ max_total`, each
/// `k^j` enumerated once.
pub fn submultiplicativity_table<S: Space>(
    space: &S,
    config: &VisualConfig,
    mu: &FiniteSupportMeasure<S>,
    alpha: f64,
    max_total: usize,
    net: &PairNet<S>,
    cap: usize,
) -> Result<Vec<SubmultiplicativityReport>> {
    check_alpha(alpha)?;
    if net.is_empty() {
        return Err(HoroError::InvalidNet("the pair net is empty".into()));
    }
    let mut k = vec![f64::NAN];
    let mut current = mu.clone();
    for j in 1..=max_total {
        if j > 1 {
            let products = current.len().saturating_mul(mu.len());
            if products > cap {
                return Err(HoroError::SupportExplosion { projected: products, cap });
            }
            current = convolve(space, &current, mu);
        }
        k.push(k_alpha_from_measure(space, config, &current, j, alpha, net, true).value);
    }
    let mut out = Vec::new();
    for m in 1..max_total {
        for n in m..=max_total - m {
            let product = k[m] * k[n];
            out.push(SubmultiplicativityReport {
                m,
                n,
                alpha,
                k_m: k[m],
                k_n: k[n],
                k_m_plus_n: k[m + n],
                slack: product - k[m + n],
                holds: k[m + n] <= product * (1.0 + SUBMULT_TOLERANCE),
            });
        }
    }
    Ok(out)
}

/// `Σ_g μ(g) b^{−α h(gx₀)}` for every horofunction and every `α`, indexed
/// `[alpha][horofunction]`.
pub fn horofunction_expectations<S: Space>(
    space: &S,
    config: &VisualConfig,
    measure: &FiniteSupportMeasure<S>,
    horofunctions: &[Horofunction<S>],
    alphas: &[f64],
) -> Vec<Vec<f64>> {
    let h = horofunctions.len();
    let flat = chunked_sum(measure, alphas.len() * h, |g, w, acc| {
        let z = space.orbit_point(g);
        for (k, hf) in horofunctions.iter().enumerate() {
            let value = hf.eval(space, &z);
            for (a, alpha) in alphas.iter().enumerate() {
                acc[a * h + k] += w * config.b.powf(-alpha * value);
            }
        }
    });
    flat.chunks(h.max(1)).map(|c| c.to_vec()).take(alphas.len()).collect()
}

/// `C(δ)^α · max_h Σ μⁿ(g) b^{−α h(gx₀)}` at one `(n, α)`.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionBound {
    pub n: usize,
    pub alpha: f64,
    pub value: f64,
    pub constant: f64,
    /// Index of the maximizing horofunction in the net.
    pub argmax: usize,
    pub exact: bool,
}

fn bound_from_expectations(config: &VisualConfig, n: usize, alpha: f64, sums: &[f64], exact: bool) -> ContractionBound {
    let (argmax, max) =
        sums.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best });
    let constant = config.distortion_constant().powf(alpha);
    ContractionBound { n, alpha, value: constant * max, constant, argmax, exact }
}

#[allow(clippy::too_many_arguments)]
pub fn contraction_upper_bound<S: Space>(
    space: &S,
    config: &VisualConfig,
    mu: &FiniteSupportMeasure<S>,
    n: usize,
    alpha: f64,
    horofunctions: &[Horofunction<S>],
    cap: usize,
    samples: usize,
    seed: u64,
) -> Result<ContractionBound> {
    check_alpha(alpha)?;
    if horofunctions.is_empty() {
        return Err(HoroError::InvalidNet("the horofunction net is empty".into()));
    }
    if n == 0 {
        return Err(HoroError::InvalidMeasure("convolution powers start at n = 1".into()));
    }
    let (measure, exact) = power_or_sample(space, mu, n, cap, samples, seed)?;
    let sums = horofunction_expectations(space, config, &measure, horofunctions, &[alpha]);
    Ok(bound_from_expectations(config, n, alpha, &sums[0], exact))
}

/// Outcome of scanning `n = 1, 2, …, n_max` over an `α` grid.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionSearch {
    pub alphas: Vec<f64>,
    /// Bound values per scanned `n`, one entry per grid `α`.
    pub table: Vec<(usize, Vec<f64>)>,
    /// The smallest `n` with some bound below 1, at the `α` minimizing it.
    pub found: Option<ContractionBound>,
}

/// Scans `n` upward and stops at the first `n` where some grid `α` gives a
/// bound below 1. Powers are enumerated while they fit under `cap` and
/// sampled with `samples` walks afterwards.
#[allow(clippy::too_many_arguments)]
pub fn contraction_search<S: Space>(
    space: &S,
    config: &VisualConfig,
    mu: &FiniteSupportMeasure<S>,
    n_max: usize,
    alphas: &[f64],
    horofunctions: &[Horofunction<S>],
    cap: usize,
    samples: usize,
    seed: u64,
) -> Result<ContractionSearch> {
    for &alpha in alphas {
        check_alpha(alpha)?;
    }
    if horofunctions.is_empty() {
        return Err(HoroError::InvalidNet("the horofunction net is empty".into()));
    }
    let mut table = Vec::new();
    let mut exact_power = Some(mu.clone());
    for n in 1..=n_max {
        if n > 1 {
            exact_power = exact_power.filter(|p| p.len().saturating_mul(mu.len()) <= cap).map(|p| convolve(space, &p, mu));
        }
        let (measure, exact) = match &exact_power {
            Some(p) => (p.clone(), true),
            None => (sample_power(space, mu, n, samples, seed)?, false),
        };
        let sums = horofunction_expectations(space, config, &measure, horofunctions, alphas);
        let bounds: Vec<ContractionBound> =
            alphas.iter().zip(&sums).map(|(&alpha, s)| bound_from_expectations(config, n, alpha, s, exact)).collect();
        table.push((n, bounds.iter().map(|b| b.value).collect()));
        let best = bounds.into_iter().min_by(|a, b| a.value.total_cmp(&b.value));
        if let Some(best) = best.filter(|b| b.value < 1.0) {
            return Ok(ContractionSearch { alphas: alphas.to_vec(), table, found: Some(best) });
        }
    }
    Ok(ContractionSearch { alphas: alphas.to_vec(), table, found: None })
}

#[derive(Debug, Clone, Serialize)]
pub struct IrreducibilityReport {
    pub candidates_checked: usize,
    /// Anchors of horofunctions fixed by every atom.
    pub fixed: Vec<String>,
    pub irreducible: bool,
}

/// Searches `candidates`, plus the fixed points of the atoms themselves, for
/// a horofunction fixed by every atom.
pub fn irreducibility_check<S: Space>(
    space: &S,
    mu: &FiniteSupportMeasure<S>,
    candidates: &[Horofunction<S>],
) -> IrreducibilityReport {
    let mut pool: Vec<Horofunction<S>> = candidates.to_vec();
    for g in mu.atoms() {
        pool.extend(space.fixed_ideals(g).into_iter().map(Horofunction::boundary));
        pool.extend(space.fixed_points(g).into_iter().map(Horofunction::finite));
    }
    if mu.atoms().iter().all(|g| space.is_identity(g)) {
        pool.push(Horofunction::finite(space.basepoint()));
    }
    let mut fixed: Vec<Horofunction<S>> = Vec::new();
    for h in &pool {
        let is_fixed = mu.atoms().iter().all(|g| bord_eq(space, &horo_action(space, g, h).anchor, &h.anchor));
        if is_fixed && !fixed.iter().any(|f| bord_eq(space, &f.anchor, &h.anchor)) {
            fixed.push(h.clone());
        }
    }
    IrreducibilityReport {
        candidates_checked: pool.len(),
        irreducible: fixed.is_empty(),
        fixed: fixed.iter().map(|h| h.anchor.to_string()).collect(),
    }
}

/// `max |f(ξ) − f(η)| / ρ_b(ξ, η)^α` over the pair net.
pub fn holder_constant<S: Space>(
    space: &S,
    config: &VisualConfig,
    f: impl Fn(&S::Ideal) -> f64 + Sync,
    net: &PairNet<S>,
    alpha: f64,
) -> f64 {
    let values: Vec<f64> = net.ideals.iter().map(&f).collect();
    net.pairs
        .iter()
        .map(|&(i, j)| {
            let rho = rho_b(space, config, &Bord::Ideal(net.ideals[i].clone()), &Bord::Ideal(net.ideals[j].clone()));
            (values[i] - values[j]).abs() / rho.powf(alpha)
        })
        .fold(0.0, f64::max)
}

/// `υ_α(Q_{μⁿ} f) ≤ k_α^n υ_α(f)` on a net: the left side and `k` over the
/// net, `υ_α(f)` over the net together with its images under `supp μⁿ`.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorContractionReport {
    pub lhs: f64,
    pub k: f64,
    pub holder_on_images: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn operator_contraction_check<S: Space>(
    space: &S,
    config: &VisualConfig,
    mu: &FiniteSupportMeasure<S>,
    n: usize,
    alpha: f64,
    f: &BoundaryObservable<S>,
    net: &PairNet<S>,
    cap: usize,
) -> Result<OperatorContractionReport> {
    check_alpha(alpha)?;
    let measure = power(space, mu, n, cap)?;
    let k = k_alpha_from_measure(space, config, &measure, n, alpha, net, true).value;
    let lhs = holder_constant(space, config, |xi| markov_apply(space, config, &measure, f, xi), net, alpha);
    let mut images: Vec<(S::Ideal, S::Ideal)> = Vec::new();
    for g in measure.atoms() {
        let inv = space.inverse(g);
        for k in 0..net.len() {
            let (xi, eta) = net.pair(k);
            images.push((space.apply_ideal(&inv, xi), space.apply_ideal(&inv, eta)));
        }
    }
    let closed = PairNet::from_pairs(space, images)?;
    let holder_on_images = holder_constant(space, config, |xi| f.eval(space, config, xi), &closed, alpha);
    let rhs = k * holder_on_images;
    Ok(OperatorContractionReport { lhs, k, holder_on_images, rhs, holds: lhs <= rhs * (1.0 + 1e-9) + 1e-12 })
}
