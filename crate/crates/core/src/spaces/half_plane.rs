//! The upper half-plane `{z : Im z > 0}` with its curvature −1 metric, acted
//! on by `PSL₂(ℝ)` through Möbius transformations.
//!
//! Boundary points live on `ℝ ∪ {∞}`. Busemann functions and boundary Gromov
//! products use closed forms obtained by pushing everything to the disc model
//! through the Cayley map `z ↦ (z − i)/(z + i)`, which sends the basepoint `i`
//! to the origin.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use super::{Bord, BordOf, Space, SpaceKind, HALF_PLANE_DELTA};
use crate::error::{HoroError, Result};

/// Finite coordinates beyond this magnitude are treated as `∞`.
const INFINITY_THRESHOLD: f64 = 1e150;
/// Chordal separation below which two boundary points are identified.
const IDEAL_TOLERANCE: f64 = 1e-9;
/// Grid used to snap matrix entries when keying isometries.
const KEY_GRID: f64 = 1e-9;

/// A point of `ℝ ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinity,
}

impl ExtendedReal {
    pub fn finite(x: f64) -> Self {
        if !x.is_finite() || x.abs() > INFINITY_THRESHOLD {
            ExtendedReal::Infinity
        } else if x == 0.0 {
            // Fold -0.0 into +0.0 so equality and keys agree.
            ExtendedReal::Finite(0.0)
        } else {
            ExtendedReal::Finite(x)
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(ExtendedReal::Infinity),
            t => t
                .parse::<f64>()
                .map(ExtendedReal::finite)
                .map_err(|_| HoroError::InvalidPoint(format!("'{t}' is neither a real number nor 'inf'"))),
        }
    }

    /// Angle of the corresponding point on the unit circle, in `[0, 2π)`.
    pub fn angle(&self) -> f64 {
        match *self {
            ExtendedReal::Infinity => 0.0,
            ExtendedReal::Finite(x) => {
                let w = Complex64::new(x, -1.0) / Complex64::new(x, 1.0);
                w.arg().rem_euclid(TAU)
            }
        }
    }

    /// Inverse of [`ExtendedReal::angle`].
    pub fn from_angle(theta: f64) -> Self {
        let half = 0.5 * theta.rem_euclid(TAU);
        if half.sin().abs() < 1e-300 {
            return ExtendedReal::Infinity;
        }
        ExtendedReal::finite(-half.cos() / half.sin())
    }

    /// Half the chordal distance between the two points on the circle.
    pub fn half_chordal(&self, other: &ExtendedReal) -> f64 {
        match (*self, *other) {
            (ExtendedReal::Infinity, ExtendedReal::Infinity) => 0.0,
            (ExtendedReal::Infinity, ExtendedReal::Finite(x)) | (ExtendedReal::Finite(x), ExtendedReal::Infinity) => {
                1.0 / x.hypot(1.0)
            }
            (ExtendedReal::Finite(x), ExtendedReal::Finite(y)) => (x - y).abs() / (x.hypot(1.0) * y.hypot(1.0)),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(x) => write!(f, "{x}"),
            ExtendedReal::Infinity => f.write_str("inf"),
        }
    }
}

/// The Möbius map `z ↦ (az + b)/(cz + d)` stored as `[a, b, c, d]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius(pub [f64; 4]);

impl Mobius {
    pub const IDENTITY: Mobius = Mobius([1.0, 0.0, 0.0, 1.0]);

    /// Validates a user-supplied matrix and rescales it to determinant 1.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = Mobius([a, b, c, d]);
        let det = m.det();
        if !m.0.iter().all(|v| v.is_finite()) || !(det > 0.0) {
            return Err(HoroError::InvalidPoint(format!("matrix {m} must have positive determinant")));
        }
        if (det - 1.0).abs() > 1e-9 {
            return Err(HoroError::InvalidPoint(format!("matrix {m} has determinant {det}, expected 1")));
        }
        Ok(m.scaled(1.0 / det.sqrt()))
    }

    pub fn diagonal(lambda: f64) -> Self {
        Mobius([lambda, 0.0, 0.0, 1.0 / lambda])
    }

    /// Rotation by angle `2φ` about `i`.
    pub fn rotation(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Mobius([c, s, -s, c])
    }

    pub fn det(&self) -> f64 {
        let [a, b, c, d] = self.0;
        a * d - b * c
    }

    /// `ad − bc`, or 1 once the products `ad`, `bc` are so large that their
    /// difference is dominated by rounding. Every stored matrix is unimodular
    /// up to that rounding.
    pub fn effective_det(&self) -> f64 {
        let [a, b, c, d] = self.0;
        let det = a * d - b * c;
        if det > 0.0 && (a * d).abs() + (b * c).abs() < 1e6 * det {
            det
        } else {
            1.0
        }
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[3]
    }

    fn scaled(&self, s: f64) -> Self {
        Mobius(self.0.map(|v| v * s))
    }

    fn mul(&self, other: &Mobius) -> Mobius {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = other.0;
        Mobius([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }

    /// Entrywise max distance, up to the sign ambiguity of `PSL₂`.
    pub fn distance_max(&self, other: &Mobius) -> f64 {
        let plus = self.0.iter().zip(other.0).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let minus = self.0.iter().zip(other.0).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
        plus.min(minus)
    }
}

impl fmt::Display for Mobius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "(({a},{b}),({c},{d}))")
    }
}

/// The hyperbolic plane in the upper half-plane model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperHalfPlane {
    delta: f64,
    max_random_radius: f64,
    max_random_translation: f64,
}

impl Default for UpperHalfPlane {
    fn default() -> Self {
        Self::with_delta(HALF_PLANE_DELTA)
    }
}

impl UpperHalfPlane {
    /// A half-plane carrying a caller-chosen four-point constant.
    pub fn with_delta(delta: f64) -> Self {
        UpperHalfPlane { delta, max_random_radius: 10.0, max_random_translation: 3.0 }
    }

    pub fn point(x: f64, y: f64) -> Result<Complex64> {
        if !(x.is_finite() && y.is_finite() && y > 0.0) {
            return Err(HoroError::InvalidPoint(format!("{x}+{y}i is not in the upper half-plane")));
        }
        Ok(Complex64::new(x, y))
    }

    /// Busemann function of `xi`, normalized to vanish at `i`.
    pub fn busemann_at_i(xi: &ExtendedReal, z: &Complex64) -> f64 {
        match *xi {
            ExtendedReal::Infinity => -z.im.ln(),
            ExtendedReal::Finite(a) => 2.0 * (z.re - a).hypot(z.im).ln() - z.im.ln() - 2.0 * a.hypot(1.0).ln(),
        }
    }

    /// `⟨ξ, η⟩_i` for boundary points.
    fn ideal_product_at_i(xi: &ExtendedReal, eta: &ExtendedReal) -> f64 {
        let s = xi.half_chordal(eta);
        if s == 0.0 {
            f64::INFINITY
        } else {
            -s.ln()
        }
    }

    /// Point at distance `t` from `i` on the ray towards `from_angle(theta)`.
    pub fn polar_point(theta: f64, t: f64) -> Complex64 {
        // The rotation by θ about i carries the ray towards ∞ onto the ray
        // towards −cot(θ/2).
        Self::apply_unchecked(&Mobius::rotation(0.5 * theta), &Complex64::new(0.0, t.exp()))
    }

    /// Boundary point at the end of the ray from `i` through `z`.
    pub fn shadow(z: &Complex64) -> ExtendedReal {
        let w = (z - Complex64::i()) / (z + Complex64::i());
        if w.norm() == 0.0 {
            return ExtendedReal::Infinity;
        }
        ExtendedReal::from_angle(w.arg())
    }

    fn apply_unchecked(g: &Mobius, z: &Complex64) -> Complex64 {
        let [a, b, c, d] = g.0;
        let den = c * z + d;
        let w = (a * z + b) / den;
        // The imaginary part has the exact form det·y/|cz+d|²; using it avoids
        // cancellation for points close to the boundary.
        Complex64::new(w.re, g.effective_det() * z.im / den.norm_sqr())
    }

    /// Fixed points of `g` on `ℝ ∪ {∞}`, attracting first.
    fn boundary_fixed_points(g: &Mobius) -> Vec<ExtendedReal> {
        let [a, b, c, d] = g.0;
        let tr = a + d;
        let disc = tr * tr - 4.0 * g.effective_det();
        let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs()).max(1.0);
        let parabolic_tol = 1e-12 * scale * scale;
        if c == 0.0 {
            if (a - d).abs() <= 1e-12 * scale {
                // Parabolic (or identity) fixing ∞ only.
                return if b == 0.0 { Vec::new() } else { vec![ExtendedReal::Infinity] };
            }
            let other = ExtendedReal::finite(b / (d - a));
            return if a.abs() > d.abs() {
                vec![ExtendedReal::Infinity, other]
            } else {
                vec![other, ExtendedReal::Infinity]
            };
        }
        if disc < -parabolic_tol {
            return Vec::new();
        }
        if disc <= parabolic_tol {
            return vec![ExtendedReal::finite((a - d) / (2.0 * c))];
        }
        // Roots of c z² + (d − a) z − b = 0, in the cancellation-free form.
        let bb = d - a;
        let sign = if bb >= 0.0 { 1.0 } else { -1.0 };
        let q = -0.5 * (bb + sign * disc.sqrt());
        let mut roots = vec![q / c, -b / q];
        let derivative = |p: f64| (c * p + d).abs();
        if derivative(roots[1]) > derivative(roots[0]) {
            roots.swap(0, 1);
        }
        roots.into_iter().map(ExtendedReal::finite).collect()
    }
}

impl Space for UpperHalfPlane {
    type Point = Complex64;
    type Isometry = Mobius;
    type Ideal = ExtendedReal;
    type IsometryKey = [i64; 4];
    type IdealKey = i64;

    fn kind(&self) -> SpaceKind {
        SpaceKind::UpperHalfPlane
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn basepoint(&self) -> Complex64 {
        Complex64::i()
    }

    fn distance(&self, x: &Complex64, y: &Complex64) -> f64 {
        let u = (x - y).norm() / (2.0 * (x.im * y.im).sqrt());
        2.0 * u.asinh()
    }

    fn identity(&self) -> Mobius {
        Mobius::IDENTITY
    }

    fn apply(&self, g: &Mobius, x: &Complex64) -> Complex64 {
        Self::apply_unchecked(g, x)
    }

    fn compose(&self, g: &Mobius, h: &Mobius) -> Mobius {
        let m = g.mul(h);
        let det = m.effective_det();
        if det == 1.0 {
            m
        } else {
            m.scaled(1.0 / det.sqrt())
        }
    }

    fn inverse(&self, g: &Mobius) -> Mobius {
        let [a, b, c, d] = g.0;
        Mobius([d, -b, -c, a])
    }

    fn isometry_key(&self, g: &Mobius) -> [i64; 4] {
        let sign = g.0.iter().copied().find(|v| (v / KEY_GRID).round() != 0.0).map_or(1.0, f64::signum);
        g.0.map(|v| (sign * v / KEY_GRID).round() as i64)
    }

    fn isometries_close(&self, g: &Mobius, h: &Mobius) -> bool {
        g.distance_max(h) <= KEY_GRID
    }

    fn displacement(&self, g: &Mobius) -> f64 {
        let norm2: f64 = g.0.iter().map(|v| v * v).sum();
        (0.5 * norm2 / g.effective_det()).max(1.0).acosh()
    }

    fn apply_ideal(&self, g: &Mobius, xi: &ExtendedReal) -> ExtendedReal {
        let [a, b, c, d] = g.0;
        match *xi {
            ExtendedReal::Infinity => {
                if c == 0.0 {
                    ExtendedReal::Infinity
                } else {
                    ExtendedReal::finite(a / c)
                }
            }
            ExtendedReal::Finite(x) => {
                let den = c * x + d;
                if den == 0.0 {
                    ExtendedReal::Infinity
                } else {
                    ExtendedReal::finite((a * x + b) / den)
                }
            }
        }
    }

    fn ideal_key(&self, xi: &ExtendedReal) -> i64 {
        let steps = (TAU / IDEAL_TOLERANCE).round() as i64;
        ((xi.angle() / IDEAL_TOLERANCE).round() as i64).rem_euclid(steps)
    }

    fn ideals_close(&self, a: &ExtendedReal, b: &ExtendedReal) -> bool {
        2.0 * a.half_chordal(b) < IDEAL_TOLERANCE
    }

    fn extended_product(&self, x: &BordOf<Self>, y: &BordOf<Self>, base: &Complex64) -> f64 {
        match (x, y) {
            (Bord::Point(p), Bord::Point(q)) => super::gromov_product(self, p, q, base),
            (Bord::Point(p), Bord::Ideal(xi)) | (Bord::Ideal(xi), Bord::Point(p)) => {
                let value = 0.5
                    * (self.distance(p, base) - Self::busemann_at_i(xi, p) + Self::busemann_at_i(xi, base));
                value.max(0.0)
            }
            (Bord::Ideal(xi), Bord::Ideal(eta)) => {
                let at_i = Self::ideal_product_at_i(xi, eta);
                if at_i.is_infinite() {
                    return at_i;
                }
                let shift = 0.5 * (Self::busemann_at_i(xi, base) + Self::busemann_at_i(eta, base));
                (at_i + shift).max(0.0)
            }
        }
    }

    fn busemann(&self, xi: &ExtendedReal, z: &Complex64) -> f64 {
        Self::busemann_at_i(xi, z)
    }

    fn fixed_ideals(&self, g: &Mobius) -> Vec<ExtendedReal> {
        Self::boundary_fixed_points(g)
    }

    fn fixed_points(&self, g: &Mobius) -> Vec<Complex64> {
        let [a, _, c, d] = g.0;
        let disc = g.trace().powi(2) - 4.0 * g.effective_det();
        if c == 0.0 || disc >= 0.0 {
            return Vec::new();
        }
        let z = Complex64::new(a - d, (-disc).sqrt()) / (2.0 * c);
        vec![if z.im > 0.0 { z } else { z.conj() }]
    }

    fn forward_limit(&self, g: &Mobius, _depth: usize) -> Result<ExtendedReal> {
        Ok(Self::shadow(&self.orbit_point(g)))
    }

    fn coarse_ideal(&self, xi: &ExtendedReal, level: u32) -> ExtendedReal {
        let bins = (1u64 << level.min(52)) as f64;
        let width = TAU / bins;
        let bin = (xi.angle() / width).floor().min(bins - 1.0);
        ExtendedReal::from_angle((bin + 0.5) * width)
    }

    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let r = rng.gen_range(0.0..self.max_random_radius);
        let phi = rng.gen_range(0.0..PI);
        Self::apply_unchecked(&Mobius::rotation(phi), &Complex64::new(0.0, r.exp()))
    }

    fn random_isometry<R: Rng + ?Sized>(&self, rng: &mut R) -> Mobius {
        let t = rng.gen_range(0.0..self.max_random_translation);
        let k1 = Mobius::rotation(rng.gen_range(0.0..PI));
        let k2 = Mobius::rotation(rng.gen_range(0.0..PI));
        k1.mul(&Mobius::diagonal((0.5 * t).exp())).mul(&k2)
    }

    fn random_ideal<R: Rng + ?Sized>(&self, rng: &mut R) -> ExtendedReal {
        ExtendedReal::from_angle(rng.gen_range(0.0..TAU))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::spaces::{gromov_product, test_support};

    fn hp() -> UpperHalfPlane {
        UpperHalfPlane::default()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Length of the vertical segment from `i` to `2i`, by midpoint quadrature
    /// of the line element `|dz|/y`.
    fn vertical_length(y0: f64, y1: f64, steps: usize) -> f64 {
        let h = (y1 - y0) / steps as f64;
        (0..steps).map(|k| h / (y0 + (k as f64 + 0.5) * h)).sum()
    }

    #[test]
    fn distance_examples() {
        let s = hp();
        let i = Complex64::i();
        assert_eq!(s.distance(&i, &i), 0.0);
        let d = s.distance(&i, &Complex64::new(0.0, 2.0));
        assert!(close(d, 2f64.ln(), 1e-15));
        assert!(close(d, vertical_length(1.0, 2.0, 100_000), 1e-9));
    }

    #[test]
    fn mobius_examples() {
        let s = hp();
        let t = Mobius([1.0, 1.0, 0.0, 1.0]);
        let z = s.apply(&t, &Complex64::i());
        assert!(close(z.re, 1.0, 1e-15) && close(z.im, 1.0, 1e-15));
        assert_eq!(s.inverse(&Mobius::diagonal(2.0)), Mobius([0.5, 0.0, 0.0, 2.0]));
        assert_eq!(s.apply_ideal(&t, &ExtendedReal::Finite(0.0)), ExtendedReal::Finite(1.0));
        assert_eq!(s.apply_ideal(&t, &ExtendedReal::Infinity), ExtendedReal::Infinity);
        assert!(s.is_identity(&s.compose(&t, &s.inverse(&t))));
        assert!(Mobius::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(Mobius::new(1.25, 0.75, 0.75, 1.25).is_ok());
    }

    #[test]
    fn angle_chart_round_trips() {
        for x in [-1e6, -3.0, -1.0, 0.0, 0.5, 2.0, 1e6] {
            let back = ExtendedReal::from_angle(ExtendedReal::Finite(x).angle());
            let ExtendedReal::Finite(y) = back else { panic!("lost {x}") };
            assert!(close(x, y, 1e-9 * x.abs().max(1.0)));
        }
        assert_eq!(ExtendedReal::from_angle(0.0), ExtendedReal::Infinity);
        assert_eq!(ExtendedReal::Finite(0.0).angle(), PI);
    }

    /// Oracle for the boundary closed forms: Gromov products of points far
    /// along geodesic rays from the base.
    fn ray_point(base: &Complex64, xi: &ExtendedReal, t: f64) -> Complex64 {
        // Move base to i with a translation-dilation, walk along the ray, move back.
        let m = Mobius([base.im.sqrt(), base.re / base.im.sqrt(), 0.0, 1.0 / base.im.sqrt()]);
        let s = hp();
        let local = s.apply_ideal(&s.inverse(&m), xi);
        s.apply(&m, &UpperHalfPlane::polar_point(local.angle(), t))
    }

    #[test]
    fn boundary_products_match_ray_limits() {
        let s = hp();
        let mut rng = stream_rng(21, 0);
        for _ in 0..300 {
            let base = s.random_point(&mut rng);
            let xi = s.random_ideal(&mut rng);
            let eta = s.random_ideal(&mut rng);
            let z = s.random_point(&mut rng);
            let t = 30.0;
            let rx = ray_point(&base, &xi, t);
            let ry = ray_point(&base, &eta, t);

            let exact = s.extended_product(&Bord::Ideal(xi), &Bord::Ideal(eta), &base);
            let approx = gromov_product(&s, &rx, &ry, &base);
            if exact < 10.0 {
                assert!(close(exact, approx, 1e-6), "ideal-ideal {exact} vs {approx}");
            }

            let exact = s.extended_product(&Bord::Point(z), &Bord::Ideal(xi), &base);
            let approx = gromov_product(&s, &z, &rx, &base);
            assert!(close(exact, approx, 1e-6), "point-ideal {exact} vs {approx}");

            let h = s.busemann(&xi, &z);
            let limit = s.distance(&z, &ray_point(&Complex64::i(), &xi, t)) - t;
            assert!(close(h, limit, 1e-6), "busemann {h} vs {limit}");
        }
        let same = s.extended_product(
            &Bord::Ideal(ExtendedReal::Finite(1.0)),
            &Bord::Ideal(ExtendedReal::Finite(1.0)),
            &Complex64::i(),
        );
        assert_eq!(same, f64::INFINITY);
    }

    #[test]
    fn fixed_points_are_fixed() {
        let s = hp();
        let mut rng = stream_rng(4, 0);
        for _ in 0..1000 {
            let g = s.random_isometry(&mut rng);
            for p in s.fixed_ideals(&g) {
                assert!(2.0 * s.apply_ideal(&g, &p).half_chordal(&p) < 1e-7);
            }
            for z in s.fixed_points(&g) {
                assert!(s.distance(&s.apply(&g, &z), &z) < 1e-7);
            }
        }
        let a = Mobius::diagonal(2.0);
        assert_eq!(s.fixed_ideals(&a), vec![ExtendedReal::Infinity, ExtendedReal::Finite(0.0)]);
        assert_eq!(s.fixed_ideals(&Mobius([1.0, 1.0, 0.0, 1.0])), vec![ExtendedReal::Infinity]);
        assert_eq!(s.fixed_ideals(&Mobius([1.0, 0.0, 1.0, 1.0])), vec![ExtendedReal::Finite(0.0)]);
    }

    #[test]
    fn forward_limit_attracts() {
        let s = hp();
        let g = Mobius([1.25, 0.75, 0.75, 1.25]);
        let attracting = UpperHalfPlane::boundary_fixed_points(&g)[0];
        assert!(close(attracting.angle(), ExtendedReal::Finite(1.0).angle(), 1e-12));
        let far = (0..30).fold(Mobius::IDENTITY, |acc, _| s.compose(&acc, &g));
        let xi = s.forward_limit(&far, 0).unwrap();
        assert!(2.0 * xi.half_chordal(&attracting) < 1e-9);
    }

    #[test]
    fn displacement_matches_distance() {
        let s = hp();
        let mut rng = stream_rng(8, 0);
        for _ in 0..1000 {
            let g = s.random_isometry(&mut rng);
            let d = s.distance(&s.orbit_point(&g), &s.basepoint());
            assert!(close(s.displacement(&g), d, 1e-9 * (1.0 + d)));
        }
    }

    #[test]
    fn long_products_stay_unimodular() {
        let s = hp();
        let mut rng = stream_rng(9, 0);
        let mut g = Mobius::IDENTITY;
        let mut inv = Mobius::IDENTITY;
        for _ in 0..400 {
            let h = Mobius::rotation(rng.gen_range(0.0..PI)).mul(&Mobius::diagonal(1.3));
            g = s.compose(&g, &h);
            inv = s.compose(&s.inverse(&h), &inv);
        }
        let back = s.apply(&inv, &s.orbit_point(&g));
        assert!(s.distance(&back, &s.basepoint()) < 1e-6);
    }

    #[test]
    fn metric_axioms() {
        test_support::check_metric_and_isometries(&hp(), 10_000, 1e-9, 3);
    }
}
