//! Chart points, chart vectors and the two domain modes (plane window, flat torus).

use std::collections::HashMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point of the 2-D chart.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub x: f64,
    pub y: f64,
}

impl ChartPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Components of a chart vector (tangent vector, displacement or acceleration).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    /// Euclidean chart length, used only for chart-space tolerances.
    pub fn chart_len(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_zero(self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A tangent vector together with its base point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: ChartPoint,
    pub v: Vec2,
}

impl Add<Vec2> for ChartPoint {
    type Output = ChartPoint;
    fn add(self, v: Vec2) -> ChartPoint {
        ChartPoint::new(self.x + v.x, self.y + v.y)
    }
}

impl Sub<Vec2> for ChartPoint {
    type Output = ChartPoint;
    fn sub(self, v: Vec2) -> ChartPoint {
        ChartPoint::new(self.x - v.x, self.y - v.y)
    }
}

impl Sub for ChartPoint {
    type Output = Vec2;
    fn sub(self, o: ChartPoint) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// Integer lattice shift of the torus (always `(0, 0)` on the plane).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Shift(pub i32, pub i32);

/// The chart domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    /// Open rectangular window of the plane (non-compact).
    Plane { min: ChartPoint, max: ChartPoint },
    /// Flat torus: the rectangle `[origin, origin + period)` with periodic wrap.
    Torus { origin: ChartPoint, period: Vec2 },
}

impl Domain {
    pub fn plane(min: (f64, f64), max: (f64, f64)) -> Self {
        Domain::Plane { min: ChartPoint::new(min.0, min.1), max: ChartPoint::new(max.0, max.1) }
    }

    pub fn torus(origin: (f64, f64), period: (f64, f64)) -> Self {
        Domain::Torus { origin: ChartPoint::new(origin.0, origin.1), period: Vec2::new(period.0, period.1) }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Domain::Torus { .. })
    }

    /// Lower-left corner and extent of the chart rectangle.
    pub fn bounds(&self) -> (ChartPoint, Vec2) {
        match *self {
            Domain::Plane { min, max } => (min, max - min),
            Domain::Torus { origin, period } => (origin, period),
        }
    }

    pub fn period(&self) -> Option<Vec2> {
        match *self {
            Domain::Torus { period, .. } => Some(period),
            Domain::Plane { .. } => None,
        }
    }

    /// Canonical representative of `p` (identity on the plane).
    pub fn wrap(&self, p: ChartPoint) -> ChartPoint {
        match *self {
            Domain::Plane { .. } => p,
            Domain::Torus { origin, period } => {
                let wx = (p.x - origin.x).rem_euclid(period.x);
                let wy = (p.y - origin.y).rem_euclid(period.y);
                // rem_euclid can round up to the period itself
                let wx = if wx >= period.x { 0.0 } else { wx };
                let wy = if wy >= period.y { 0.0 } else { wy };
                ChartPoint::new(origin.x + wx, origin.y + wy)
            }
        }
    }

    /// Whether `p` lies in the closed window (plane) or anywhere (torus).
    pub fn contains(&self, p: ChartPoint) -> bool {
        match *self {
            Domain::Plane { min, max } => {
                let e = 1e-12 * (1.0 + (max - min).chart_len());
                p.x >= min.x - e && p.x <= max.x + e && p.y >= min.y - e && p.y <= max.y + e
            }
            Domain::Torus { .. } => p.is_finite(),
        }
    }

    /// Lattice vector of a shift.
    pub fn shift_vec(&self, s: Shift) -> Vec2 {
        match *self {
            Domain::Plane { .. } => Vec2::ZERO,
            Domain::Torus { period, .. } => Vec2::new(s.0 as f64 * period.x, s.1 as f64 * period.y),
        }
    }

    /// Minimal-image displacement from `a` to `b`.
    pub fn displacement(&self, a: ChartPoint, b: ChartPoint) -> Vec2 {
        let d = b - a;
        match *self {
            Domain::Plane { .. } => d,
            Domain::Torus { period, .. } => {
                Vec2::new(d.x - period.x * (d.x / period.x).round(), d.y - period.y * (d.y / period.y).round())
            }
        }
    }

    /// Chart distance between minimal images.
    pub fn chart_dist(&self, a: ChartPoint, b: ChartPoint) -> f64 {
        self.displacement(a, b).chart_len()
    }

    /// All lattice shifts with `|k| <= radius` componentwise (just `(0,0)` on the plane).
    pub fn shifts(&self, radius: i32) -> Vec<Shift> {
        if !self.is_periodic() {
            return vec![Shift(0, 0)];
        }
        let mut out = Vec::with_capacity(((2 * radius + 1) * (2 * radius + 1)) as usize);
        for i in -radius..=radius {
            for j in -radius..=radius {
                out.push(Shift(i, j));
            }
        }
        out
    }

    /// Distance from `p` to the window boundary (infinite on the torus).
    pub fn boundary_distance(&self, p: ChartPoint) -> f64 {
        match *self {
            Domain::Plane { min, max } => (p.x - min.x).min(max.x - p.x).min(p.y - min.y).min(max.y - p.y),
            Domain::Torus { .. } => f64::INFINITY,
        }
    }

    /// Chart diameter of the window, or half the shortest period on the torus.
    pub fn scale(&self) -> f64 {
        match *self {
            Domain::Plane { min, max } => (max - min).chart_len(),
            Domain::Torus { period, .. } => 0.5 * period.x.min(period.y),
        }
    }
}

/// Unsigned angle between two chart directions in `[0, π]`.
pub fn chart_angle(a: Vec2, b: Vec2) -> f64 {
    a.cross(b).atan2(a.dot(b)).abs()
}

/// Bucket index of chart points, wrapping on the torus.
pub struct PointIndex {
    origin: ChartPoint,
    cell: Vec2,
    wrap: Option<(i64, i64)>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl PointIndex {
    pub fn new(domain: &Domain, cell: f64) -> Self {
        let (origin, _) = domain.bounds();
        match domain.period() {
            Some(p) => {
                let (nx, ny) = (((p.x / cell).floor() as i64).max(1), ((p.y / cell).floor() as i64).max(1));
                Self {
                    origin,
                    cell: Vec2::new(p.x / nx as f64, p.y / ny as f64),
                    wrap: Some((nx, ny)),
                    buckets: HashMap::new(),
                }
            }
            None => Self { origin, cell: Vec2::new(cell, cell), wrap: None, buckets: HashMap::new() },
        }
    }

    fn key(&self, p: ChartPoint) -> (i64, i64) {
        let k = (
            ((p.x - self.origin.x) / self.cell.x).floor() as i64,
            ((p.y - self.origin.y) / self.cell.y).floor() as i64,
        );
        self.norm(k)
    }

    fn norm(&self, k: (i64, i64)) -> (i64, i64) {
        match self.wrap {
            Some((nx, ny)) => (k.0.rem_euclid(nx), k.1.rem_euclid(ny)),
            None => k,
        }
    }

    pub fn insert(&mut self, id: usize, p: ChartPoint) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(id);
    }

    /// Ids in buckets that may hold points within `r` of `p` (each id once).
    pub fn near(&self, p: ChartPoint, r: f64) -> impl Iterator<Item = usize> + '_ {
        let (kx, ky) = self.key(p);
        let rx = (r / self.cell.x).ceil() as i64;
        let ry = (r / self.cell.y).ceil() as i64;
        let mut keys: Vec<(i64, i64)> = Vec::new();
        for dy in -ry..=ry {
            for dx in -rx..=rx {
                let k = self.norm((kx + dx, ky + dy));
                if !keys.contains(&k) {
                    keys.push(k);
                }
            }
        }
        keys.into_iter().filter_map(move |k| self.buckets.get(&k)).flatten().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_wrap_and_displacement() {
        let d = Domain::torus((0.0, 0.0), (1.0, 1.0));
        let w = d.wrap(ChartPoint::new(1.2, -0.1));
        assert!((w.x - 0.2).abs() < 1e-12 && (w.y - 0.9).abs() < 1e-12);
        let disp = d.displacement(ChartPoint::new(0.0, 0.0), ChartPoint::new(0.9, 0.0));
        assert!((disp.x + 0.1).abs() < 1e-12);
        assert_eq!(d.shifts(1).len(), 9);
    }

    #[test]
    fn plane_contains_and_boundary_distance() {
        let d = Domain::plane((-1.0, -1.0), (1.0, 2.0));
        assert!(d.contains(ChartPoint::new(1.0, 2.0)));
        assert!(!d.contains(ChartPoint::new(1.1, 0.0)));
        assert!((d.boundary_distance(ChartPoint::new(0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert_eq!(d.wrap(ChartPoint::new(5.0, 5.0)), ChartPoint::new(5.0, 5.0));
    }
}
