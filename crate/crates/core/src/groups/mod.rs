//! Finitely supported measures on the isometry group, convolution, the
//! bordification-induced metric `d_G` and the Hölder–Wasserstein distance.
//!
//! `d_G(g₁, g₂)` is a supremum of `D_b` over the whole bordification. It is
//! estimated as a maximum over a declared net, using for each pair the
//! two-point chain bound `min{log(b)·d, ρ_b}`. Growing the net can only raise
//! the estimate.

mod transport;

pub use transport::optimal_transport;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{bord_action, d_b_pair, VisualConfig};
use crate::error::{HoroError, Result};
use crate::spaces::{Bord, BordOf, Space};

/// Tolerance on the total mass of a declared measure.
const MASS_TOLERANCE: f64 = 1e-12;
/// Default limit on the number of atoms a convolution power may produce.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

/// A probability measure with finitely many atoms.
pub struct FiniteSupportMeasure<S: Space> {
    atoms: Vec<S::Isometry>,
    weights: Vec<f64>,
}

impl<S: Space> Clone for FiniteSupportMeasure<S> {
    fn clone(&self) -> Self {
        FiniteSupportMeasure { atoms: self.atoms.clone(), weights: self.weights.clone() }
    }
}

impl<S: Space> std::fmt::Debug for FiniteSupportMeasure<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiniteSupportMeasure").field("atoms", &self.atoms).field("weights", &self.weights).finish()
    }
}

impl<S: Space> FiniteSupportMeasure<S> {
    pub fn new(space: &S, atoms: Vec<S::Isometry>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(HoroError::InvalidMeasure("a measure needs at least one atom".into()));
        }
        if atoms.len() != weights.len() {
            return Err(HoroError::InvalidMeasure(format!("{} atoms but {} weights", atoms.len(), weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(HoroError::InvalidMeasure(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(HoroError::InvalidMeasure(format!("weights sum to {total}, expected 1")));
        }
        for (i, g) in atoms.iter().enumerate() {
            if atoms[..i].iter().any(|h| space.isometries_close(g, h)) {
                return Err(HoroError::InvalidMeasure(format!("atom {g:?} is listed twice")));
            }
        }
        Ok(FiniteSupportMeasure { atoms, weights })
    }

    pub fn dirac(g: S::Isometry) -> Self {
        FiniteSupportMeasure { atoms: vec![g], weights: vec![1.0] }
    }

    pub fn uniform(space: &S, atoms: Vec<S::Isometry>) -> Result<Self> {
        let n = atoms.len().max(1);
        Self::new(space, atoms, vec![1.0 / n as f64; n])
    }

    /// Empirical law of `draws`, with repeated isometries merged.
    pub fn empirical(space: &S, draws: Vec<S::Isometry>) -> Result<Self> {
        if draws.is_empty() {
            return Err(HoroError::InvalidMeasure("an empirical measure needs at least one draw".into()));
        }
        let share = 1.0 / draws.len() as f64;
        let mut merged: BTreeMap<S::IsometryKey, (S::Isometry, f64)> = BTreeMap::new();
        for g in draws {
            merged.entry(space.isometry_key(&g)).or_insert((g, 0.0)).1 += share;
        }
        let (atoms, weights) = merged.into_values().unzip();
        Ok(FiniteSupportMeasure { atoms, weights })
    }

    pub fn atoms(&self) -> &[S::Isometry] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S::Isometry, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `μ(g)` for an atom, matched through the space's isometry key.
    pub fn mass_of(&self, space: &S, g: &S::Isometry) -> f64 {
        let key = space.isometry_key(g);
        self.iter().filter(|(h, _)| space.isometry_key(h) == key).map(|(_, w)| w).sum()
    }

    /// `max_g b^{d(gx₀, x₀)}` over the support; the measure lies in `G_λ`
    /// for every `λ` strictly above this value.
    pub fn lambda_floor(&self, space: &S, config: &VisualConfig) -> f64 {
        self.atoms.iter().map(|g| config.b.powf(space.displacement(g))).fold(0.0, f64::max)
    }

    /// `E_μ d(gx₀, x₀)`.
    pub fn mean_displacement(&self, space: &S) -> f64 {
        self.iter().map(|(g, w)| w * space.displacement(g)).sum()
    }
}

/// The truncation level `λ > 1` of `G_λ = {g : b^{d(gx₀, x₀)} < λ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaBound {
    pub lambda: f64,
}

impl LambdaBound {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 1.0 && lambda.is_finite()) {
            return Err(HoroError::Config(format!("lambda must exceed 1, got {lambda}")));
        }
        Ok(LambdaBound { lambda })
    }

    pub fn admits<S: Space>(&self, space: &S, config: &VisualConfig, mu: &FiniteSupportMeasure<S>) -> bool {
        in_g_lambda(space, config, mu, self.lambda)
    }

    pub fn require<S: Space>(&self, space: &S, config: &VisualConfig, mu: &FiniteSupportMeasure<S>) -> Result<()> {
        if self.admits(space, config, mu) {
            Ok(())
        } else {
            Err(HoroError::LambdaViolation(format!(
                "support reaches b^d = {} but lambda is {}",
                mu.lambda_floor(space, config),
                self.lambda
            )))
        }
    }
}

/// Whether every atom satisfies `b^{d(gx₀, x₀)} < λ`.
pub fn in_g_lambda<S: Space>(space: &S, config: &VisualConfig, mu: &FiniteSupportMeasure<S>, lambda: f64) -> bool {
    mu.atoms.iter().all(|g| config.b.powf(space.displacement(g)) < lambda)
}

/// `μ ⋆ ν`: the law of `g·g′` with `g ~ μ`, `g′ ~ ν` independent.
pub fn convolve<S: Space>(space: &S, mu: &FiniteSupportMeasure<S>, nu: &FiniteSupportMeasure<S>) -> FiniteSupportMeasure<S> {
    let mut merged: BTreeMap<S::IsometryKey, (S::Isometry, f64)> = BTreeMap::new();
    for (g, wg) in mu.iter() {
        for (h, wh) in nu.iter() {
            let gh = space.compose(g, h);
            merged.entry(space.isometry_key(&gh)).or_insert((gh, 0.0)).1 += wg * wh;
        }
    }
    let (atoms, weights) = merged.into_values().unzip();
    FiniteSupportMeasure { atoms, weights }
}

/// `μⁿ` by repeated convolution, refusing to materialize more than `cap`
/// products in a single step.
pub fn power<S: Space>(space: &S, mu: &FiniteSupportMeasure<S>, n: usize, cap: usize) -> Result<FiniteSupportMeasure<S>> {
    if n == 0 {
        return Err(HoroError::InvalidMeasure("convolution powers start at n = 1".into()));
    }
    let projected = (mu.len() as f64).powi(n as i32);
    if projected > cap as f64 {
        log::warn!("|supp|^n = {projected:.3e} exceeds the support cap {cap}; merging may still keep it below");
    }
    let mut current = mu.clone();
    for _ in 1..n {
        let products = current.len().saturating_mul(mu.len());
        if products > cap {
            return Err(HoroError::SupportExplosion { projected: products, cap });
        }
        current = convolve(space, &current, mu);
    }
    Ok(current)
}

/// Estimate of `d_G` over a finite net.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMetricEstimate {
    pub value: f64,
    pub net_size: usize,
    /// `(prefix size, running max)` at doubling prefix sizes of the net.
    pub history: Vec<(usize, f64)>,
}

/// Images `g·p` and `g⁻¹·p` of every net point.
pub struct NetImages<S: Space> {
    forward: Vec<BordOf<S>>,
    backward: Vec<BordOf<S>>,
}

/// `d_G` restricted to a declared net of bordification points.
pub struct GroupMetric<'a, S: Space> {
    space: &'a S,
    config: VisualConfig,
    net: Vec<BordOf<S>>,
}

impl<'a, S: Space> GroupMetric<'a, S> {
    pub fn new(space: &'a S, config: VisualConfig, net: Vec<BordOf<S>>) -> Result<Self> {
        if net.is_empty() {
            return Err(HoroError::InvalidNet("the d_G net is empty".into()));
        }
        if !net.iter().any(|p| p.is_ideal()) || net.iter().all(|p| p.is_ideal()) {
            log::warn!("d_G net should contain both interior and boundary points");
        }
        Ok(GroupMetric { space, config, net })
    }

    pub fn space(&self) -> &S {
        self.space
    }

    pub fn config(&self) -> &VisualConfig {
        &self.config
    }

    pub fn net(&self) -> &[BordOf<S>] {
        &self.net
    }

    pub fn images(&self, g: &S::Isometry) -> NetImages<S> {
        let inv = self.space.inverse(g);
        NetImages {
            forward: self.net.iter().map(|p| bord_action(self.space, g, p)).collect(),
            backward: self.net.iter().map(|p| bord_action(self.space, &inv, p)).collect(),
        }
    }

    fn pointwise(&self, a: &NetImages<S>, b: &NetImages<S>, k: usize) -> f64 {
        let f = d_b_pair(self.space, &self.config, &a.forward[k], &b.forward[k]).upper;
        let r = d_b_pair(self.space, &self.config, &a.backward[k], &b.backward[k]).upper;
        f.max(r)
    }

    pub fn distance_from_images(&self, a: &NetImages<S>, b: &NetImages<S>) -> f64 {
        (0..self.net.len()).map(|k| self.pointwise(a, b, k)).fold(0.0, f64::max)
    }

    pub fn distance(&self, g1: &S::Isometry, g2: &S::Isometry) -> f64 {
        self.distance_from_images(&self.images(g1), &self.images(g2))
    }

    pub fn estimate(&self, g1: &S::Isometry, g2: &S::Isometry) -> GroupMetricEstimate {
        let (a, b) = (self.images(g1), self.images(g2));
        let mut history = Vec::new();
        let mut value: f64 = 0.0;
        let mut next = 1;
        for k in 0..self.net.len() {
            value = value.max(self.pointwise(&a, &b, k));
            if k + 1 == next || k + 1 == self.net.len() {
                history.push((k + 1, value));
                next *= 2;
            }
        }
        GroupMetricEstimate { value, net_size: self.net.len(), history }
    }
}

/// `d_G(g₁, g₂)` estimated over `net`.
pub fn d_g_estimate<S: Space>(
    space: &S,
    config: &VisualConfig,
    g1: &S::Isometry,
    g2: &S::Isometry,
    net: &[BordOf<S>],
) -> Result<GroupMetricEstimate> {
    Ok(GroupMetric::new(space, *config, net.to_vec())?.estimate(g1, g2))
}

/// Orbit points `ωx₀` for `ω` in the supports of `μ, μ², …, μ^depth`, plus the
/// boundary fixed points of those `ω`.
pub fn orbit_net<S: Space>(space: &S, mu: &FiniteSupportMeasure<S>, depth: usize) -> Vec<BordOf<S>> {
    let mut isometries: BTreeMap<S::IsometryKey, S::Isometry> = BTreeMap::new();
    isometries.insert(space.isometry_key(&space.identity()), space.identity());
    let mut frontier = vec![space.identity()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for w in &frontier {
            for g in mu.atoms() {
                let wg = space.compose(w, g);
                if let std::collections::btree_map::Entry::Vacant(e) = isometries.entry(space.isometry_key(&wg)) {
                    e.insert(wg.clone());
                    next.push(wg);
                }
            }
        }
        frontier = next;
    }
    let mut net: Vec<BordOf<S>> = Vec::new();
    let mut ideals: BTreeMap<S::IdealKey, S::Ideal> = BTreeMap::new();
    for w in isometries.values() {
        let p = Bord::Point(space.orbit_point(w));
        if !net.contains(&p) {
            net.push(p);
        }
        for xi in space.fixed_ideals(w) {
            ideals.entry(space.ideal_key(&xi)).or_insert(xi);
        }
    }
    net.extend(ideals.into_values().map(Bord::Ideal));
    net
}

/// `W_α(μ, ν)` with cost `d_G^α`, solved exactly as a transport problem.
pub fn wasserstein_alpha<S: Space>(
    metric: &GroupMetric<'_, S>,
    mu: &FiniteSupportMeasure<S>,
    nu: &FiniteSupportMeasure<S>,
    alpha: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(HoroError::InvalidAlpha(alpha));
    }
    let mu_images: Vec<_> = mu.atoms().par_iter().map(|g| metric.images(g)).collect();
    let nu_images: Vec<_> = nu.atoms().par_iter().map(|g| metric.images(g)).collect();
    let cost: Vec<Vec<f64>> = mu_images
        .par_iter()
        .map(|a| nu_images.iter().map(|b| metric.distance_from_images(a, b).powf(alpha)).collect())
        .collect();
    optimal_transport(mu.weights(), nu.weights(), |i, j| cost[i][j])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerBound {
    pub n: usize,
    /// `W_α(μⁿ, νⁿ)`.
    pub lhs: f64,
    /// `W_α(μ, ν) Σ_{i<n} (C λ)^{iα}`.
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvolutionReport {
    /// `W_α(μ₁⋆μ₂, ν₁⋆ν₂)`.
    pub lhs: f64,
    /// `W_α(μ₁, ν₁) + C^α λ^α W_α(μ₂, ν₂)`.
    pub rhs: f64,
    pub slack: f64,
    pub powers: Vec<PowerBound>,
    pub violated: bool,
}

/// Evaluates the convolution bound for `(μ₁, μ₂, ν₁, ν₂)` and its iterated
/// form for `(μ₁, ν₁)` up to `max_power`, with every `W_α` computed against
/// the same net.
#[allow(clippy::too_many_arguments)]
pub fn convolution_wasserstein_check<S: Space>(
    metric: &GroupMetric<'_, S>,
    mu1: &FiniteSupportMeasure<S>,
    mu2: &FiniteSupportMeasure<S>,
    nu1: &FiniteSupportMeasure<S>,
    nu2: &FiniteSupportMeasure<S>,
    alpha: f64,
    lambda: LambdaBound,
    max_power: usize,
    cap: usize,
) -> Result<ConvolutionReport> {
    let space = metric.space();
    let config = metric.config();
    for m in [mu1, mu2, nu1, nu2] {
        lambda.require(space, config, m)?;
    }
    let factor = (config.distortion_constant() * lambda.lambda).powf(alpha);
    let w1 = wasserstein_alpha(metric, mu1, nu1, alpha)?;
    let w2 = wasserstein_alpha(metric, mu2, nu2, alpha)?;
    let lhs = wasserstein_alpha(metric, &convolve(space, mu1, mu2), &convolve(space, nu1, nu2), alpha)?;
    let rhs = w1 + factor * w2;
    let tol = 1e-9;
    let mut violated = lhs > rhs + tol;

    let mut powers = Vec::new();
    for n in 1..=max_power {
        let lhs_n = wasserstein_alpha(metric, &power(space, mu1, n, cap)?, &power(space, nu1, n, cap)?, alpha)?;
        let rhs_n = w1 * (0..n).map(|i| factor.powi(i as i32)).sum::<f64>();
        violated |= lhs_n > rhs_n + tol;
        powers.push(PowerBound { n, lhs: lhs_n, rhs: rhs_n, slack: rhs_n - lhs_n });
    }
    Ok(ConvolutionReport { lhs, rhs, slack: rhs - lhs, powers, violated })
}
