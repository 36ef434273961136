//! Seeded right random walks `ωⁿ = g₀g₁⋯g_{n−1}`, drift estimation and the
//! horofunction growth check along sample paths.
//!
//! Trial `t` under master seed `s` draws its increments from the stream
//! `stream_rng(s, t)`. Trials run in parallel, results are collected in trial
//! order and reduced sequentially, so estimates are identical for any number
//! of workers.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HoroError, Result};
use crate::groups::{power, FiniteSupportMeasure, DEFAULT_SUPPORT_CAP};
use crate::rng::stream_rng;
use crate::spaces::{Bord, Space};
use crate::stats::MeanEstimate;

/// Draws increments from a finitely supported measure.
pub struct IncrementSampler<'a, S: Space> {
    measure: &'a FiniteSupportMeasure<S>,
    index: WeightedIndex<f64>,
}

impl<'a, S: Space> IncrementSampler<'a, S> {
    pub fn new(measure: &'a FiniteSupportMeasure<S>) -> Result<Self> {
        let index = WeightedIndex::new(measure.weights())
            .map_err(|e| HoroError::InvalidMeasure(format!("cannot sample from measure: {e}")))?;
        Ok(IncrementSampler { measure, index })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &'a S::Isometry {
        &self.measure.atoms()[self.index.sample(rng)]
    }
}

/// Runs `n` steps, calling `visit(k, ωᵏ)` after step `k` for every `k` in the
/// increasing list `stops`.
pub fn run_walk<S: Space, R: Rng + ?Sized>(
    space: &S,
    sampler: &IncrementSampler<'_, S>,
    rng: &mut R,
    n: usize,
    stops: &[usize],
    mut visit: impl FnMut(usize, &S::Isometry),
) -> S::Isometry {
    let mut product = space.identity();
    let mut next = stops.iter().copied().peekable();
    while next.peek() == Some(&0) {
        visit(0, &product);
        next.next();
    }
    for k in 1..=n {
        space.right_multiply(&mut product, sampler.sample(rng));
        while next.peek() == Some(&k) {
            visit(k, &product);
            next.next();
        }
    }
    product
}

/// Steps `⌈n/32⌉, 2⌈n/32⌉, …` up to and including `n`.
pub fn default_checkpoints(n: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let every = n.div_ceil(32);
    let mut stops: Vec<usize> = (1..).map(|k| k * every).take_while(|&k| k < n).collect();
    stops.push(n);
    stops
}

/// One realized trajectory.
#[derive(Debug, Clone)]
pub struct WalkSample<S: Space> {
    pub seed: u64,
    pub trial: u64,
    pub steps: usize,
    pub product: S::Isometry,
    /// `(k, ωᵏ)` at the checkpoints.
    pub checkpoints: Vec<(usize, S::Isometry)>,
    /// `d(ωⁿx₀, x₀)`.
    pub displacement: f64,
}

pub fn sample_walk<S: Space>(
    space: &S,
    mu: &FiniteSupportMeasure<S>,
    n: usize,
    seed: u64,
    trial: u64,
) -> Result<WalkSample<S>> {
    let sampler = IncrementSampler::new(mu)?;
    let mut rng = stream_rng(seed, trial);
    let mut checkpoints = Vec::new();
    let product = run_walk(space, &sampler, &mut rng, n, &default_checkpoints(n), |k, g| {
        checkpoints.push((k, g.clone()));
    });
    let displacement = space.displacement(&product);
    Ok(WalkSample { seed, trial, steps: n, product, checkpoints, displacement })
}

/// Boundary representative of the direction in which the walk escapes.
pub fn forward_limit<S: Space>(space: &S, walk: &WalkSample<S>, depth: usize) -> Result<S::Ideal> {
    space.forward_limit(&walk.product, depth)
}

/// `(1/m) E_{μᵐ} d(gx₀, x₀)`, an upper bound for the drift by subadditivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeketeBound {
    pub m: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub std_dev: f64,
    pub trials: usize,
    pub n: usize,
    pub seed: u64,
    pub fekete: Vec<FeketeBound>,
}

fn require_finite(value: f64, n: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(HoroError::Unsupported(format!("walk of length {n} left the representable range of the model")))
    }
}

/// Per-trial displacement rates `d(ωⁿx₀, x₀)/n`, in trial order.
pub fn displacement_rates<S: Space>(
    space: &S,
    mu: &FiniteSupportMeasure<S>,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = IncrementSampler::new(mu)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let g = run_walk(space, &sampler, &mut rng, n, &[], |_, _| {});
            require_finite(space.displacement(&g) / n as f64, n)
        })
        .collect()
}

/// Exact `(1/m) E_{μᵐ} d` for `m = 1..=max_m`, stopping once enumeration
/// would exceed `cap` products.
pub fn fekete_bounds<S: Space>(space: &S, mu: &FiniteSupportMeasure<S>, max_m: usize, cap: usize) -> Vec<FeketeBound> {
    let mut out = Vec::new();
    for m in 1..=max_m {
        match power(space, mu, m, cap) {
            Ok(p) => out.push(FeketeBound { m, value: p.mean_displacement(space) / m as f64 }),
            Err(_) => break,
        }
    }
    out
}

pub fn drift_estimate<S: Space>(
    space: &S,
    mu: &FiniteSupportMeasure<S>,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<DriftEstimate> {
    if n == 0 {
        return Err(HoroError::Config("drift needs n >= 1".into()));
    }
    if trials < 2 {
        return Err(HoroError::Config("drift needs at least 2 trials".into()));
    }
    let rates = displacement_rates(space, mu, n, trials, seed)?;
    let est = MeanEstimate::from_samples(&rates);
    Ok(DriftEstimate {
        mean: est.mean,
        half_width: est.half_width,
        std_dev: est.std_dev,
        trials,
        n,
        seed,
        fekete: fekete_bounds(space, mu, 6, DEFAULT_SUPPORT_CAP.min(100_000)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HmetReport {
    pub n: usize,
    /// Step at which the walk's own boundary point is tested.
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    /// Drift estimated from the same trajectories.
    pub drift: MeanEstimate,
    /// Mean of `(1/n) h_probe(ωⁿx₀)`.
    pub plus: MeanEstimate,
    /// Mean of `(1/m) h_{ξ_ω}(ωᵐx₀)`.
    pub minus: MeanEstimate,
    /// Average depth `⟨ω_m⁻¹x₀, τx₀⟩_{x₀}` at which the tail's limit point is
    /// read, where `τ = g_m⋯g_{n−1}`.
    pub mean_depth: f64,
}

/// Horofunction growth along the walk.
///
/// `plus` evaluates a fixed probe horofunction at `ωⁿx₀`. `minus` evaluates,
/// at the earlier step `m`, the horofunction of the walk's own boundary point
/// `ξ_ω = ωᵐ·η` with `η` the escape direction of the tail product `τ`, through
/// `h_ξ(ωᵐx₀) = −h_η(ω_m⁻¹x₀)`. Neither side of that identity needs the
/// orbit point to be resolved against `ξ_ω` itself, which in the half-plane
/// would sit far below floating-point resolution.
pub fn hmet_check<S: Space>(
    space: &S,
    mu: &FiniteSupportMeasure<S>,
    probe: &S::Ideal,
    n: usize,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<HmetReport> {
    if !(1 <= m && m < n) {
        return Err(HoroError::Config(format!("checkpoint m = {m} must lie in 1..n (n = {n})")));
    }
    if trials < 2 {
        return Err(HoroError::Config("hmet needs at least 2 trials".into()));
    }
    let sampler = IncrementSampler::new(mu)?;
    let x0 = space.basepoint();
    let per_trial: Vec<(f64, f64, f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let mut g_n = space.identity();
            let mut tail = space.identity();
            let mut g_m = space.identity();
            for k in 1..=n {
                let step = sampler.sample(&mut rng);
                space.right_multiply(&mut g_n, step);
                if k > m {
                    space.right_multiply(&mut tail, step);
                }
                if k == m {
                    g_m = g_n.clone();
                }
            }
            let z_n = space.orbit_point(&g_n);
            let back = space.orbit_point(&space.inverse(&g_m));
            let displacement = require_finite(space.distance(&z_n, &x0), n)?;
            let shared = space.extended_product(&Bord::Point(back.clone()), &Bord::Point(space.orbit_point(&tail)), &x0);
            let depth = (shared.max(0.0).floor() as usize + 1).min(space.displacement(&tail).floor() as usize);
            let eta = space.forward_limit(&tail, depth)?;
            let plus = space.busemann(probe, &z_n) / n as f64;
            let minus = -space.busemann(&eta, &back) / m as f64;
            Ok((displacement / n as f64, plus, minus, depth as f64))
        })
        .collect::<Result<_>>()?;
    let column = |f: fn(&(f64, f64, f64, f64)) -> f64| per_trial.iter().map(f).collect::<Vec<_>>();
    let drift = MeanEstimate::from_samples(&column(|r| r.0));
    if drift.mean - drift.half_width <= 0.0 {
        return Err(HoroError::NoDrift { mean: drift.mean, half_width: drift.half_width });
    }
    let depths = column(|r| r.3);
    Ok(HmetReport {
        n,
        m,
        trials,
        seed,
        drift,
        plus: MeanEstimate::from_samples(&column(|r| r.1)),
        minus: MeanEstimate::from_samples(&column(|r| r.2)),
        mean_depth: depths.iter().sum::<f64>() / depths.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{FreeGroupTree, InfiniteWord, Word};

    fn f2() -> FreeGroupTree {
        FreeGroupTree::new(2).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::parse(s, 2).unwrap()
    }

    fn simple(t: &FreeGroupTree) -> FiniteSupportMeasure<FreeGroupTree> {
        FiniteSupportMeasure::uniform(t, t.generators()).unwrap()
    }

    #[test]
    fn sample_walk_examples() {
        let t = f2();
        let mu = FiniteSupportMeasure::<FreeGroupTree>::dirac(w("ab"));
        let walk = sample_walk(&t, &mu, 0, 1, 0).unwrap();
        assert_eq!((walk.product.clone(), walk.displacement), (w("e"), 0.0));
        let walk = sample_walk(&t, &mu, 5, 1, 0).unwrap();
        assert_eq!((walk.product.clone(), walk.displacement), (w("ab").pow(5), 10.0));
        let xi = forward_limit(&t, &sample_walk(&t, &mu, 50, 1, 0).unwrap(), 20).unwrap();
        assert_eq!(xi, InfiniteWord::parse("abababababababababab(b)", 2).unwrap());
        assert!(matches!(forward_limit(&t, &sample_walk(&t, &mu, 0, 1, 0).unwrap(), 1), Err(HoroError::InsufficientEscape { .. })));

        let mu = simple(&t);
        let a = sample_walk(&t, &mu, 300, 42, 7).unwrap();
        let b = sample_walk(&t, &mu, 300, 42, 7).unwrap();
        assert_eq!(a.product, b.product);
        assert_eq!(a.checkpoints.len(), 30);
        assert_eq!(a.checkpoints.last().unwrap().1, a.product);
        for (k, g) in &a.checkpoints {
            assert!(g.len() <= *k);
        }
    }

    #[test]
    fn checkpoints_cover_the_walk() {
        assert_eq!(default_checkpoints(0), Vec::<usize>::new());
        assert_eq!(default_checkpoints(5), vec![1, 2, 3, 4, 5]);
        let stops = default_checkpoints(2000);
        assert_eq!(stops[0], 63);
        assert_eq!(*stops.last().unwrap(), 2000);
        assert!(stops.len() <= 33);
    }

    #[test]
    fn drift_examples() {
        let t = f2();
        let id = FiniteSupportMeasure::<FreeGroupTree>::dirac(w("e"));
        assert_eq!(drift_estimate(&t, &id, 10, 4, 1).unwrap().mean, 0.0);
        let ab = FiniteSupportMeasure::<FreeGroupTree>::dirac(w("ab"));
        let d = drift_estimate(&t, &ab, 100, 4, 1).unwrap();
        assert_eq!((d.mean, d.half_width), (2.0, 0.0));
        assert!(drift_estimate(&t, &ab, 100, 1, 1).is_err());
    }

    #[test]
    fn fekete_bounds_are_subadditive() {
        let t = f2();
        let mu = FiniteSupportMeasure::new(&t, t.generators(), vec![0.4, 0.1, 0.3, 0.2]).unwrap();
        let mean = |m: usize| power(&t, &mu, m, 1_000_000).unwrap().mean_displacement(&t);
        for m in 1..=3 {
            for k in 1..=3 {
                assert!(mean(m + k) <= mean(m) + mean(k) + 1e-12);
            }
        }
        let bounds = fekete_bounds(&t, &simple(&t), 6, 1_000_000);
        assert_eq!(bounds.len(), 6);
        assert_eq!(bounds[0].value, 1.0);
        assert!(bounds.iter().all(|b| b.value >= 0.5));
    }

    #[test]
    fn hmet_deterministic_walk() {
        let t = f2();
        let ab = FiniteSupportMeasure::<FreeGroupTree>::dirac(w("ab"));
        let probe = InfiniteWord::parse("(a)", 2).unwrap();
        let r = hmet_check(&t, &ab, &probe, 100, 50, 2, 3).unwrap();
        // ⟨(ab)ⁿ, a^∞⟩ = 1, so h = 2n − 2.
        assert_eq!(r.plus.mean, (200.0 - 2.0) / 100.0);
        assert_eq!(r.minus.mean, -2.0);
        let id = FiniteSupportMeasure::<FreeGroupTree>::dirac(w("e"));
        assert!(matches!(hmet_check(&t, &id, &probe, 10, 5, 2, 3), Err(HoroError::NoDrift { .. })));
    }

    #[test]
    fn hmet_half_plane_resolves_the_own_limit() {
        use crate::spaces::{ExtendedReal, Mobius, UpperHalfPlane};
        let s = UpperHalfPlane::default();
        let mu = FiniteSupportMeasure::uniform(&s, vec![Mobius::diagonal(2.0), Mobius::new(1.25, 0.75, 0.75, 1.25).unwrap()])
            .unwrap();
        let r = hmet_check(&s, &mu, &ExtendedReal::Infinity, 300, 150, 400, 2).unwrap();
        assert!((r.minus.mean + r.drift.mean).abs() < 0.05, "{r:?}");
        assert!((r.plus.mean - r.drift.mean).abs() < 0.05, "{r:?}");
    }

    #[test]
    fn horofunctions_are_bounded_by_displacement() {
        let t = f2();
        let mu = simple(&t);
        let probe = InfiniteWord::parse("(ab)", 2).unwrap();
        for trial in 0..50 {
            let walk = sample_walk(&t, &mu, 200, 9, trial).unwrap();
            let z = t.orbit_point(&walk.product);
            assert!(t.busemann(&probe, &z).abs() <= walk.displacement);
            let own = forward_limit(&t, &walk, walk.product.len() / 2).unwrap();
            assert!(t.busemann(&own, &z).abs() <= walk.displacement);
        }
    }

    #[test]
    fn forward_limits_stabilize() {
        let t = f2();
        let mu = simple(&t);
        let sampler = IncrementSampler::new(&mu).unwrap();
        let depth = 10;
        let mut agree = 0;
        for trial in 0..200 {
            let mut rng = stream_rng(5, trial);
            let mut early = None;
            let late = run_walk(&t, &sampler, &mut rng, 400, &[200], |_, g| early = Some(g.clone()));
            let early = early.unwrap();
            if early.len() >= depth && t.forward_limit(&early, depth).unwrap() == t.forward_limit(&late, depth).unwrap() {
                agree += 1;
            }
        }
        assert!(agree >= 195, "{agree}");
    }

    #[test]
    fn estimates_do_not_depend_on_worker_count() {
        let t = f2();
        let mu = simple(&t);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| drift_estimate(&t, &mu, 200, 64, 11).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
