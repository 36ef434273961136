//! Finitely many half-lines glued at a common origin.
//!
//! Distances run along a ray when both points share it and through the origin
//! otherwise, so the space is a metric tree with one branch point. Isometries
//! are the permutations of the rays.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Bord, BordOf, Space, SpaceKind};
use crate::error::{HoroError, Result};

/// Sampled radii are multiples of `1 / RADIUS_GRID`.
const RADIUS_GRID: f64 = 1024.0;

/// A point at distance `radius` from the origin along ray `ray`.
///
/// The origin itself is stored with `ray = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPoint {
    ray: u32,
    radius: f64,
}

impl RayPoint {
    pub const ORIGIN: RayPoint = RayPoint { ray: 0, radius: 0.0 };

    pub fn ray(&self) -> u32 {
        self.ray
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn on_ray(&self, ray: u32) -> bool {
        self.radius == 0.0 || self.ray == ray
    }
}

impl fmt::Display for RayPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.ray, self.radius)
    }
}

/// The boundary point at the far end of a ray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ray(pub u32);

/// Ray `i` is sent to ray `images[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RayPermutation(Vec<u32>);

impl RayPermutation {
    pub fn images(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ray {}", self.0)
    }
}

impl fmt::Display for RayPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let images: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "[{}]", images.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarSpace {
    rays: u32,
    max_random_radius: f64,
}

impl StarSpace {
    pub fn new(rays: u32) -> Result<Self> {
        if rays < 2 {
            return Err(HoroError::Config(format!("a star space needs at least 2 rays, got {rays}")));
        }
        Ok(StarSpace { rays, max_random_radius: 10.0 })
    }

    pub fn rays(&self) -> u32 {
        self.rays
    }

    pub fn point(&self, ray: u32, radius: f64) -> Result<RayPoint> {
        if ray >= self.rays {
            return Err(HoroError::InvalidPoint(format!("ray {ray} out of range 0..{}", self.rays)));
        }
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(HoroError::InvalidPoint(format!("radius {radius} must be finite and nonnegative")));
        }
        Ok(if radius == 0.0 { RayPoint::ORIGIN } else { RayPoint { ray, radius } })
    }

    pub fn ideal(&self, ray: u32) -> Result<Ray> {
        if ray >= self.rays {
            return Err(HoroError::InvalidPoint(format!("ray {ray} out of range 0..{}", self.rays)));
        }
        Ok(Ray(ray))
    }

    pub fn permutation(&self, images: Vec<u32>) -> Result<RayPermutation> {
        let mut seen = vec![false; self.rays as usize];
        if images.len() != self.rays as usize {
            return Err(HoroError::InvalidPoint(format!("permutation needs {} images", self.rays)));
        }
        for &i in &images {
            if i >= self.rays || std::mem::replace(&mut seen[i as usize], true) {
                return Err(HoroError::InvalidPoint(format!("{images:?} is not a permutation")));
            }
        }
        Ok(RayPermutation(images))
    }
}

impl Space for StarSpace {
    type Point = RayPoint;
    type Isometry = RayPermutation;
    type Ideal = Ray;
    type IsometryKey = RayPermutation;
    type IdealKey = Ray;

    fn kind(&self) -> SpaceKind {
        SpaceKind::StarSpace
    }

    fn delta(&self) -> f64 {
        0.0
    }

    fn basepoint(&self) -> RayPoint {
        RayPoint::ORIGIN
    }

    fn distance(&self, x: &RayPoint, y: &RayPoint) -> f64 {
        if x.on_ray(y.ray) && y.on_ray(x.ray) {
            (x.radius - y.radius).abs()
        } else {
            x.radius + y.radius
        }
    }

    fn identity(&self) -> RayPermutation {
        RayPermutation((0..self.rays).collect())
    }

    fn apply(&self, g: &RayPermutation, x: &RayPoint) -> RayPoint {
        if x.radius == 0.0 {
            RayPoint::ORIGIN
        } else {
            RayPoint { ray: g.0[x.ray as usize], radius: x.radius }
        }
    }

    fn compose(&self, g: &RayPermutation, h: &RayPermutation) -> RayPermutation {
        RayPermutation(h.0.iter().map(|&i| g.0[i as usize]).collect())
    }

    fn inverse(&self, g: &RayPermutation) -> RayPermutation {
        let mut inv = vec![0; g.0.len()];
        for (i, &j) in g.0.iter().enumerate() {
            inv[j as usize] = i as u32;
        }
        RayPermutation(inv)
    }

    fn isometry_key(&self, g: &RayPermutation) -> RayPermutation {
        g.clone()
    }

    fn apply_ideal(&self, g: &RayPermutation, xi: &Ray) -> Ray {
        Ray(g.0[xi.0 as usize])
    }

    fn ideal_key(&self, xi: &Ray) -> Ray {
        *xi
    }

    fn extended_product(&self, x: &BordOf<Self>, y: &BordOf<Self>, base: &RayPoint) -> f64 {
        if let (Bord::Ideal(a), Bord::Ideal(b)) = (x, y) {
            if a == b {
                return f64::INFINITY;
            }
        }
        // Past every finite radius involved, moving further out along a ray
        // changes both distances to the base equally, so truncation is exact.
        let radius_of = |p: &BordOf<Self>| match p {
            Bord::Point(q) => q.radius,
            Bord::Ideal(_) => 0.0,
        };
        let reach = radius_of(x).max(radius_of(y)).max(base.radius) + 1.0;
        let truncate = |p: &BordOf<Self>| match p {
            Bord::Point(q) => *q,
            Bord::Ideal(r) => RayPoint { ray: r.0, radius: reach },
        };
        super::gromov_product(self, &truncate(x), &truncate(y), base)
    }

    fn fixed_ideals(&self, g: &RayPermutation) -> Vec<Ray> {
        if self.is_identity(g) {
            return Vec::new();
        }
        (0..self.rays).filter(|&i| g.0[i as usize] == i).map(Ray).collect()
    }

    fn fixed_points(&self, g: &RayPermutation) -> Vec<RayPoint> {
        if self.is_identity(g) {
            Vec::new()
        } else {
            vec![RayPoint::ORIGIN]
        }
    }

    fn forward_limit(&self, _g: &RayPermutation, _depth: usize) -> Result<Ray> {
        Err(HoroError::Unsupported("ray permutations fix the origin, so orbits never escape".into()))
    }

    fn coarse_ideal(&self, xi: &Ray, _level: u32) -> Ray {
        *xi
    }

    /// Radii are drawn on a dyadic grid so that sums and halvings of
    /// distances, and hence the four-point test, are exact in floating point.
    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> RayPoint {
        let ray = rng.gen_range(0..self.rays);
        let steps = (self.max_random_radius * RADIUS_GRID) as u32;
        let radius = rng.gen_range(0..=steps) as f64 / RADIUS_GRID;
        if radius == 0.0 {
            RayPoint::ORIGIN
        } else {
            RayPoint { ray, radius }
        }
    }

    fn random_isometry<R: Rng + ?Sized>(&self, rng: &mut R) -> RayPermutation {
        let mut images: Vec<u32> = (0..self.rays).collect();
        images.shuffle(rng);
        RayPermutation(images)
    }

    fn random_ideal<R: Rng + ?Sized>(&self, rng: &mut R) -> Ray {
        Ray(rng.gen_range(0..self.rays))
    }
}
