//! Model hyperbolic spaces behind a common interface.
//!
//! Three spaces are provided: the Cayley tree of a free group, the upper
//! half-plane with its curvature −1 metric and the star space of finitely
//! many half-lines glued at an origin. Each exposes exact (or closed-form)
//! distances, isometries with exact inverses, Gromov boundary points and the
//! extended Gromov product.

mod half_plane;
mod star;
mod tree;

pub use half_plane::{ExtendedReal, Mobius, UpperHalfPlane};
pub use star::{Ray, RayPermutation, RayPoint, StarSpace};
pub use tree::{FreeGroupTree, InfiniteWord, Letter, Word};

use std::fmt::{self, Debug, Display};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    FreeGroupTree,
    UpperHalfPlane,
    StarSpace,
}

/// A point of the bordification `X ∪ ∂X`.
#[derive(Debug, Clone, PartialEq)]
pub enum Bord<P, I> {
    Point(P),
    Ideal(I),
}

impl<P, I> Bord<P, I> {
    pub fn is_ideal(&self) -> bool {
        matches!(self, Bord::Ideal(_))
    }
}

impl<P: Display, I: Display> Display for Bord<P, I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bord::Point(p) => write!(f, "{p}"),
            Bord::Ideal(xi) => write!(f, "{xi}"),
        }
    }
}

pub type BordOf<S> = Bord<<S as Space>::Point, <S as Space>::Ideal>;

/// A geodesic δ-hyperbolic model space together with its isometry group.
///
/// Implementations must keep every operation a pure function of its inputs;
/// the experiment layers evaluate them from many workers at once.
pub trait Space: Clone + Debug + Send + Sync {
    type Point: Clone + Debug + Display + PartialEq + Send + Sync;
    type Isometry: Clone + Debug + Display + Send + Sync;
    type Ideal: Clone + Debug + Display + PartialEq + Send + Sync;
    /// Exact (tree, star) or tolerance-snapped (half-plane) identity of an isometry.
    type IsometryKey: Ord + Clone + Debug + Send + Sync;
    type IdealKey: Ord + Clone + Debug + Send + Sync;

    fn kind(&self) -> SpaceKind;
    /// Four-point hyperbolicity constant.
    fn delta(&self) -> f64;
    fn basepoint(&self) -> Self::Point;
    fn distance(&self, x: &Self::Point, y: &Self::Point) -> f64;

    fn identity(&self) -> Self::Isometry;
    fn apply(&self, g: &Self::Isometry, x: &Self::Point) -> Self::Point;
    fn compose(&self, g: &Self::Isometry, h: &Self::Isometry) -> Self::Isometry;
    fn inverse(&self, g: &Self::Isometry) -> Self::Isometry;
    fn isometry_key(&self, g: &Self::Isometry) -> Self::IsometryKey;

    /// `acc ← acc · h`, in place where the representation allows it.
    fn right_multiply(&self, acc: &mut Self::Isometry, h: &Self::Isometry) {
        *acc = self.compose(acc, h);
    }

    fn orbit_point(&self, g: &Self::Isometry) -> Self::Point {
        self.apply(g, &self.basepoint())
    }

    /// `d(g x₀, x₀)`.
    fn displacement(&self, g: &Self::Isometry) -> f64 {
        self.distance(&self.orbit_point(g), &self.basepoint())
    }

    /// Whether two isometries are the same group element up to tolerance.
    fn isometries_close(&self, g: &Self::Isometry, h: &Self::Isometry) -> bool {
        self.isometry_key(g) == self.isometry_key(h)
    }

    fn is_identity(&self, g: &Self::Isometry) -> bool {
        self.isometry_key(g) == self.isometry_key(&self.identity())
    }

    fn apply_ideal(&self, g: &Self::Isometry, xi: &Self::Ideal) -> Self::Ideal;
    fn ideal_key(&self, xi: &Self::Ideal) -> Self::IdealKey;

    /// Equality of boundary points up to the representation's tolerance.
    fn ideals_close(&self, a: &Self::Ideal, b: &Self::Ideal) -> bool {
        a == b
    }

    /// Gromov product on the bordification, `+∞` exactly when both arguments
    /// are the same boundary point.
    fn extended_product(&self, x: &BordOf<Self>, y: &BordOf<Self>, base: &Self::Point) -> f64;

    /// Boundary horofunction `h_ξ(z) = d(z, x₀) − 2⟨z, ξ⟩_{x₀}`.
    fn busemann(&self, xi: &Self::Ideal, z: &Self::Point) -> f64 {
        let x0 = self.basepoint();
        self.distance(z, &x0)
            - 2.0 * self.extended_product(&Bord::Point(z.clone()), &Bord::Ideal(xi.clone()), &x0)
    }

    /// Boundary points fixed by `g` (empty for the identity).
    fn fixed_ideals(&self, g: &Self::Isometry) -> Vec<Self::Ideal>;
    /// Interior points fixed by `g` (empty for the identity).
    fn fixed_points(&self, g: &Self::Isometry) -> Vec<Self::Point>;

    /// Boundary representative for the direction in which `g x₀` escapes.
    fn forward_limit(&self, g: &Self::Isometry, depth: usize) -> Result<Self::Ideal>;

    /// Representative of the resolution-`level` cell containing `xi`.
    fn coarse_ideal(&self, xi: &Self::Ideal, level: u32) -> Self::Ideal;

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point;
    fn random_isometry<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Isometry;
    fn random_ideal<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Ideal;
}

/// `⟨x, z⟩_base = ½(d(x, base) + d(z, base) − d(x, z))`.
pub fn gromov_product<S: Space>(space: &S, x: &S::Point, z: &S::Point, base: &S::Point) -> f64 {
    0.5 * (space.distance(x, base) + space.distance(z, base) - space.distance(x, z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub delta: f64,
    pub samples: u64,
    /// Largest `min{⟨x,y⟩_w, ⟨y,z⟩_w} − δ − ⟨x,z⟩_w` seen over the sample.
    pub max_violation: f64,
    pub holds: bool,
}

const QUADRUPLE_BATCH: u64 = 4096;

/// Samples quadruples and checks the four-point condition with constant `delta`.
///
/// All three role assignments of each quadruple around the base `w` are
/// tested, so a single quadruple covers every pairing.
pub fn check_hyperbolicity<S: Space>(space: &S, delta: f64, samples: u64, seed: u64) -> HyperbolicityReport {
    let batches = samples.div_ceil(QUADRUPLE_BATCH);
    let worst = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = stream_rng(seed, batch);
            let count = QUADRUPLE_BATCH.min(samples - batch * QUADRUPLE_BATCH);
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..count {
                let x = space.random_point(&mut rng);
                let y = space.random_point(&mut rng);
                let z = space.random_point(&mut rng);
                let w = space.random_point(&mut rng);
                worst = worst.max(four_point_defect(space, &x, &y, &z, &w));
            }
            worst
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let max_violation = worst - delta;
    HyperbolicityReport { delta, samples, max_violation, holds: max_violation <= 0.0 }
}

/// Smallest δ for which the four-point condition holds on `(x, y, z)` at base `w`.
pub fn four_point_defect<S: Space>(space: &S, x: &S::Point, y: &S::Point, z: &S::Point, w: &S::Point) -> f64 {
    let xy = gromov_product(space, x, y, w);
    let yz = gromov_product(space, y, z, w);
    let xz = gromov_product(space, x, z, w);
    (xy.min(yz) - xz).max(xy.min(xz) - yz).max(xz.min(yz) - xy)
}

/// Calibrates a four-point constant: the empirical maximum defect plus `margin`.
pub fn calibrate_delta<S: Space>(space: &S, samples: u64, seed: u64, margin: f64) -> f64 {
    let report = check_hyperbolicity(space, 0.0, samples, seed);
    report.max_violation.max(0.0) + margin
}

/// Frozen four-point constant of the upper half-plane sampler.
///
/// `calibrate_delta(&UpperHalfPlane::with_delta(0.0), 1_000_000, 20_261_016,
/// 0.05)` gives 0.7431 (empirical maximum defect 0.6931, with the same value
/// to four digits on seeds 1, 2 and 3); rounded up to 0.75.
pub const HALF_PLANE_DELTA: f64 = 0.75;

/// A configured model space.
#[derive(Debug, Clone)]
pub enum SpaceModel {
    Tree(FreeGroupTree),
    HalfPlane(UpperHalfPlane),
    Star(StarSpace),
}

impl SpaceModel {
    pub fn kind(&self) -> SpaceKind {
        match self {
            SpaceModel::Tree(s) => s.kind(),
            SpaceModel::HalfPlane(s) => s.kind(),
            SpaceModel::Star(s) => s.kind(),
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            SpaceModel::Tree(s) => s.delta(),
            SpaceModel::HalfPlane(s) => s.delta(),
            SpaceModel::Star(s) => s.delta(),
        }
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Metric axioms, isometry invariance and the Gromov product identity on
    /// random samples.
    pub fn check_metric_and_isometries<S: Space>(space: &S, samples: u64, tol: f64, seed: u64) {
        let mut rng = stream_rng(seed, 0);
        for _ in 0..samples {
            let x = space.random_point(&mut rng);
            let y = space.random_point(&mut rng);
            let z = space.random_point(&mut rng);
            let dxy = space.distance(&x, &y);
            assert!(dxy >= 0.0);
            assert!((dxy - space.distance(&y, &x)).abs() <= tol);
            assert!(space.distance(&x, &x) <= tol);
            assert!(dxy <= space.distance(&x, &z) + space.distance(&z, &y) + tol, "triangle");

            let g = space.random_isometry(&mut rng);
            let gx = space.apply(&g, &x);
            let gy = space.apply(&g, &y);
            assert!((space.distance(&gx, &gy) - dxy).abs() <= tol * (1.0 + dxy), "isometry");
            let back = space.apply(&space.inverse(&g), &gx);
            assert!(space.distance(&back, &x) <= tol * (1.0 + space.distance(&x, &space.basepoint())));

            let lhs = gromov_product(space, &x, &z, &y) + gromov_product(space, &x, &y, &z);
            assert!((lhs - space.distance(&y, &z)).abs() <= tol * (1.0 + lhs), "product identity");
        }
    }
}
