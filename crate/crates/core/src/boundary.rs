//! Visual quasi-metric, chain metric brackets, horofunctions and the
//! bound checks that relate them to displacement.
//!
//! The chain metric `D̄_b` is an infimum over all finite chains and cannot be
//! computed exactly. It is reported as a [`Bracket`]: the upper end is the
//! shortest chain through a declared finite net, the lower end is `ρ_b / 4`.
//! Checks built on brackets flag a violation only when the brackets certify it.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HoroError, Result};
use crate::rng::stream_rng;
use crate::spaces::{Bord, BordOf, Space};

/// Relative slack allowed before a floating-point comparison is called a violation.
const CHECK_TOLERANCE: f64 = 1e-9;

/// Base of the visual quasi-metric together with the space's four-point constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisualConfig {
    pub b: f64,
    pub delta: f64,
}

impl VisualConfig {
    pub fn new(b: f64, delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(HoroError::Config(format!("delta must be finite and nonnegative, got {delta}")));
        }
        if !(b > 1.0 && b.is_finite()) {
            return Err(HoroError::Config(format!("visual base b must exceed 1, got {b}")));
        }
        if delta > 0.0 && b > 2f64.powf(1.0 / delta) * (1.0 + 1e-12) {
            return Err(HoroError::Config(format!("visual base {b} exceeds 2^(1/delta) for delta = {delta}")));
        }
        Ok(VisualConfig { b, delta })
    }

    /// `b = 2` for trees, `min(2^{1/δ}, 2)` otherwise.
    pub fn default_for(delta: f64) -> Result<Self> {
        let b = if delta == 0.0 { 2.0 } else { 2f64.powf(1.0 / delta).min(2.0) };
        Self::new(b, delta)
    }

    pub fn for_space<S: Space>(space: &S) -> Self {
        Self::default_for(space.delta()).expect("model spaces carry a valid delta")
    }

    /// `C(δ) = 4 b^{6δ}`.
    pub fn distortion_constant(&self) -> f64 {
        4.0 * self.b.powf(6.0 * self.delta)
    }

    /// `b^{−p}` for a Gromov product `p`, with `b^{−∞} = 0`.
    pub fn rho_from_product(&self, product: f64) -> f64 {
        if product.is_infinite() {
            0.0
        } else {
            self.b.powf(-product)
        }
    }

    pub fn ln_b(&self) -> f64 {
        self.b.ln()
    }
}

/// Certified enclosure `lower ≤ value ≤ upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub const ZERO: Bracket = Bracket { lower: 0.0, upper: 0.0 };

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn min_with(self, value: f64) -> Bracket {
        Bracket { lower: self.lower.min(value), upper: self.upper.min(value) }
    }
}

/// Equality on the bordification, up to the representation's tolerance for
/// boundary points.
pub fn bord_eq<S: Space>(space: &S, x: &BordOf<S>, y: &BordOf<S>) -> bool {
    match (x, y) {
        (Bord::Point(p), Bord::Point(q)) => p == q,
        (Bord::Ideal(a), Bord::Ideal(b)) => space.ideals_close(a, b),
        _ => false,
    }
}

fn net_position<S: Space>(space: &S, net: &[BordOf<S>], x: &BordOf<S>) -> Result<usize> {
    net.iter()
        .position(|p| bord_eq(space, p, x))
        .ok_or_else(|| HoroError::InvalidNet(format!("{x:?} is not a member of the net")))
}

/// Extended Gromov product `⟨x, y⟩_base` on `X ∪ ∂X`.
pub fn boundary_gromov_product<S: Space>(space: &S, x: &BordOf<S>, y: &BordOf<S>, base: &S::Point) -> f64 {
    if bord_eq(space, x, y) && x.is_ideal() {
        return f64::INFINITY;
    }
    space.extended_product(x, y, base)
}

/// `ρ_b(x, y) = b^{−⟨x, y⟩_{x₀}}`.
pub fn rho_b<S: Space>(space: &S, config: &VisualConfig, x: &BordOf<S>, y: &BordOf<S>) -> f64 {
    config.rho_from_product(boundary_gromov_product(space, x, y, &space.basepoint()))
}

/// Bracket for the chain metric `D̄_b(x, y)` using chains through `net`.
pub fn bar_d_b<S: Space>(
    space: &S,
    config: &VisualConfig,
    x: &BordOf<S>,
    y: &BordOf<S>,
    net: &[BordOf<S>],
) -> Result<Bracket> {
    let source = net_position(space, net, x)?;
    let target = net_position(space, net, y)?;
    if bord_eq(space, x, y) && x.is_ideal() {
        return Ok(Bracket::ZERO);
    }
    let direct = rho_b(space, config, x, y);
    let upper = shortest_chain(net.len(), source, target, |i, j| rho_b(space, config, &net[i], &net[j]));
    Ok(Bracket { lower: direct / 4.0, upper: upper.min(direct) })
}

/// Dijkstra on the complete graph with the given edge weights.
fn shortest_chain(n: usize, source: usize, target: usize, weight: impl Fn(usize, usize) -> f64) -> f64 {
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&i| !done[i]).min_by(|&a, &b| dist[a].total_cmp(&dist[b])) else {
            break;
        };
        if u == target {
            break;
        }
        done[u] = true;
        for v in (0..n).filter(|&v| !done[v]) {
            let candidate = dist[u] + weight(u, v);
            if candidate < dist[v] {
                dist[v] = candidate;
            }
        }
    }
    dist[target]
}

/// `log(b)·d(x, y)`, infinite when either argument lies on the boundary.
fn log_distance<S: Space>(space: &S, config: &VisualConfig, x: &BordOf<S>, y: &BordOf<S>) -> f64 {
    match (x, y) {
        (Bord::Point(p), Bord::Point(q)) => config.ln_b() * space.distance(p, q),
        _ => f64::INFINITY,
    }
}

/// Bracket for the bordification metric `D_b = min{log(b)·d, D̄_b}`.
pub fn d_b<S: Space>(
    space: &S,
    config: &VisualConfig,
    x: &BordOf<S>,
    y: &BordOf<S>,
    net: &[BordOf<S>],
) -> Result<Bracket> {
    Ok(bar_d_b(space, config, x, y, net)?.min_with(log_distance(space, config, x, y)))
}

/// `D_b` bracket computed on the two-point net `{x, y}`.
pub fn d_b_pair<S: Space>(space: &S, config: &VisualConfig, x: &BordOf<S>, y: &BordOf<S>) -> Bracket {
    if bord_eq(space, x, y) {
        return Bracket::ZERO;
    }
    let direct = rho_b(space, config, x, y);
    Bracket { lower: direct / 4.0, upper: direct }.min_with(log_distance(space, config, x, y))
}

/// A horofunction anchored at an interior point (`h_x`) or at a boundary
/// point (the Busemann function `h_ξ`).
#[derive(Debug, Clone, PartialEq)]
pub struct Horofunction<S: Space> {
    pub anchor: BordOf<S>,
}

impl<S: Space> Horofunction<S> {
    pub fn finite(x: S::Point) -> Self {
        Horofunction { anchor: Bord::Point(x) }
    }

    pub fn boundary(xi: S::Ideal) -> Self {
        Horofunction { anchor: Bord::Ideal(xi) }
    }

    pub fn eval(&self, space: &S, z: &S::Point) -> f64 {
        horofunction_eval(space, self, z)
    }
}

/// `h_x(z) = d(z, x) − d(x, x₀)` or `h_ξ(z) = d(z, x₀) − 2⟨z, ξ⟩_{x₀}`.
pub fn horofunction_eval<S: Space>(space: &S, h: &Horofunction<S>, z: &S::Point) -> f64 {
    match &h.anchor {
        Bord::Point(x) => space.distance(z, x) - space.distance(x, &space.basepoint()),
        Bord::Ideal(xi) => space.busemann(xi, z),
    }
}

pub fn boundary_action<S: Space>(space: &S, g: &S::Isometry, xi: &S::Ideal) -> S::Ideal {
    space.apply_ideal(g, xi)
}

/// `g·x` on the bordification.
pub fn bord_action<S: Space>(space: &S, g: &S::Isometry, x: &BordOf<S>) -> BordOf<S> {
    match x {
        Bord::Point(p) => Bord::Point(space.apply(g, p)),
        Bord::Ideal(xi) => Bord::Ideal(space.apply_ideal(g, xi)),
    }
}

/// `(g·h)(z) = h(g⁻¹z) − h(g⁻¹x₀)`, realized by moving the anchor.
pub fn horo_action<S: Space>(space: &S, g: &S::Isometry, h: &Horofunction<S>) -> Horofunction<S> {
    Horofunction { anchor: bord_action(space, g, &h.anchor) }
}

/// Outcome of `max_i h_i(gx₀) ≤ d(gx₀, x₀) ≤ max_i h_i(gx₀) + K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub displacement: f64,
    pub max_horofunction: f64,
    /// `K = 2⟨ξ, η⟩_{x₀} + 4δ`.
    pub constant: f64,
    /// `d − max h`; nonnegative when the left inequality holds.
    pub lower_slack: f64,
    /// `max h + K − d`; nonnegative when the right inequality holds.
    pub upper_slack: f64,
    pub violated: bool,
}

pub fn comparison_bound_check<S: Space>(
    space: &S,
    xi: &S::Ideal,
    eta: &S::Ideal,
    g: &S::Isometry,
) -> Result<ComparisonReport> {
    if space.ideals_close(xi, eta) {
        return Err(HoroError::InvalidPair("comparison bounds need two distinct boundary points".into()));
    }
    let x0 = space.basepoint();
    let z = space.orbit_point(g);
    let displacement = space.distance(&z, &x0);
    let max_horofunction = space.busemann(xi, &z).max(space.busemann(eta, &z));
    let product = space.extended_product(&Bord::Ideal(xi.clone()), &Bord::Ideal(eta.clone()), &x0);
    let constant = 2.0 * product + 4.0 * space.delta();
    let lower_slack = displacement - max_horofunction;
    let upper_slack = max_horofunction + constant - displacement;
    let tol = CHECK_TOLERANCE * (1.0 + displacement);
    Ok(ComparisonReport {
        displacement,
        max_horofunction,
        constant,
        lower_slack,
        upper_slack,
        violated: lower_slack < -tol || upper_slack < -tol,
    })
}

/// Outcome of the distortion bound for `D̄_b(gξ, gη) / D̄_b(ξ, η)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VisualRatioReport {
    /// Enclosure of the ratio implied by the two brackets.
    pub ratio_lower: f64,
    pub ratio_upper: f64,
    /// Ratio of the two upper ends; a point estimate, not certified.
    pub ratio_estimate: f64,
    /// `C⁻¹ b^{−½[h_ξ(g⁻¹x₀) + h_η(g⁻¹x₀)]}` and `C b^{…}`.
    pub bound_lower: f64,
    pub bound_upper: f64,
    /// The whole ratio enclosure lies outside the bounds.
    pub certified_violation: bool,
}

pub fn visual_ratio_check<S: Space>(
    space: &S,
    config: &VisualConfig,
    g: &S::Isometry,
    xi: &S::Ideal,
    eta: &S::Ideal,
    net: &[BordOf<S>],
) -> Result<VisualRatioReport> {
    if space.ideals_close(xi, eta) {
        return Err(HoroError::InvalidPair("visual ratio needs two distinct boundary points".into()));
    }
    let (a, b) = (Bord::Ideal(xi.clone()), Bord::Ideal(eta.clone()));
    let (ga, gb) = (bord_action(space, g, &a), bord_action(space, g, &b));
    let moved = bar_d_b(space, config, &ga, &gb, net)?;
    let original = bar_d_b(space, config, &a, &b, net)?;

    let back = space.orbit_point(&space.inverse(g));
    let exponent = -0.5 * (space.busemann(xi, &back) + space.busemann(eta, &back));
    let c = config.distortion_constant();
    let scale = config.b.powf(exponent);
    let (bound_lower, bound_upper) = (scale / c, scale * c);

    let ratio_lower = moved.lower / original.upper;
    let ratio_upper = moved.upper / original.lower;
    let certified_violation = ratio_upper < bound_lower * (1.0 - CHECK_TOLERANCE)
        || ratio_lower > bound_upper * (1.0 + CHECK_TOLERANCE);
    Ok(VisualRatioReport {
        ratio_lower,
        ratio_upper,
        ratio_estimate: moved.upper / original.upper,
        bound_lower,
        bound_upper,
        certified_violation,
    })
}

/// Tally of the visual-ratio and comparison checks over random instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheckSummary {
    pub samples: u64,
    pub visual_violations: u64,
    pub comparison_violations: u64,
    /// Smallest `bound_upper / ratio_lower` and `ratio_upper / bound_lower`.
    pub visual_margin: f64,
    /// Smallest slack of either comparison inequality.
    pub comparison_margin: f64,
}

/// Runs both checks on `samples` random `(g, ξ, η)`; instance `k` uses stream
/// `k`. Chains for `D̄_b` run through `ξ, η, gξ, gη` and four more random
/// boundary points.
pub fn sampled_bound_checks<S: Space>(space: &S, config: &VisualConfig, samples: u64, seed: u64) -> BoundCheckSummary {
    let results: Vec<(bool, bool, f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let xi = space.random_ideal(&mut rng);
            let mut eta = space.random_ideal(&mut rng);
            while space.ideals_close(&xi, &eta) {
                eta = space.random_ideal(&mut rng);
            }
            let g = space.random_isometry(&mut rng);
            let mut net: Vec<BordOf<S>> =
                vec![xi.clone(), eta.clone(), space.apply_ideal(&g, &xi), space.apply_ideal(&g, &eta)]
                    .into_iter()
                    .map(Bord::Ideal)
                    .collect();
            net.extend((0..4).map(|_| Bord::Ideal(space.random_ideal(&mut rng))));
            let visual = visual_ratio_check(space, config, &g, &xi, &eta, &net).expect("net holds every endpoint");
            let comparison = comparison_bound_check(space, &xi, &eta, &g).expect("endpoints are distinct");
            let visual_margin = (visual.bound_upper / visual.ratio_lower).min(visual.ratio_upper / visual.bound_lower);
            (
                visual.certified_violation,
                comparison.violated,
                visual_margin,
                comparison.lower_slack.min(comparison.upper_slack),
            )
        })
        .collect();
    BoundCheckSummary {
        samples,
        visual_violations: results.iter().filter(|r| r.0).count() as u64,
        comparison_violations: results.iter().filter(|r| r.1).count() as u64,
        visual_margin: results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min),
        comparison_margin: results.iter().map(|r| r.3).fold(f64::INFINITY, f64::min),
    }
}
