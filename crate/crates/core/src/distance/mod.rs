//! Distances between points, distance fields of closed sets, their minimizing segments,
//! gradients and first-variation limits.

mod closed_set;
mod field;
mod segments;

pub use closed_set::{notch_holes, ClosedSet, Element, Foot, Hole, Primitive};
pub use field::{read_binary, BinaryGrid, DistanceField, FieldOptions, Grid, NodeRecord, Probe};
pub use segments::{
    first_variation_probe, grad_dn, n_segments, segment_clusters, Clusters, Gradient, LimitDirections, NSegment,
    SegmentSet,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geodesic::{self, GeodesicError, TRANSLATE_RADIUS};
use crate::geom::{ChartPoint, Vec2};
use crate::manifold::Manifold;
use crate::metric::{LocalNorm, MetricError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistanceError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error("closed set is empty")]
    EmptySet,
    #[error("invalid primitive: {0}")]
    InvalidPrimitive(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("approach sequence has {0} points, need at least 3")]
    SequenceTooShort(usize),
    #[error("approach directions do not settle: {0}")]
    NoLimit(String),
}

/// Forward distance `d(p, q)`; on the torus the minimum over lattice translates of `q`.
pub fn distance(m: &Manifold, p: ChartPoint, q: ChartPoint) -> Result<f64, DistanceError> {
    if m.domain.chart_dist(p, q) == 0.0 {
        return Ok(0.0);
    }
    if m.is_homogeneous() {
        let local = m.local(p)?;
        let q = m.domain.wrap(q);
        let p = m.domain.wrap(p);
        return Ok(m
            .domain
            .shifts(TRANSLATE_RADIUS)
            .into_iter()
            .map(|s| local.norm(q + m.domain.shift_vec(s) - p))
            .fold(f64::INFINITY, f64::min));
    }
    Ok(geodesic::minimal_geodesic(m, p, q)?.total_length)
}

/// Empirical reversibility constant over `sample_count` seeded random pairs in the box.
pub fn reversibility(
    m: &Manifold,
    region: (ChartPoint, ChartPoint),
    sample_count: usize,
    seed: u64,
) -> Result<f64, DistanceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = region;
    let mut lambda = 1.0f64;
    let pick = |rng: &mut ChaCha8Rng| ChartPoint::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y));
    for _ in 0..sample_count {
        let x = pick(&mut rng);
        let y = pick(&mut rng);
        if m.domain.chart_dist(x, y) < 1e-9 {
            continue;
        }
        let a = distance(m, x, y)?;
        let b = distance(m, y, x)?;
        lambda = lambda.max(a / b).max(b / a);
    }
    Ok(lambda)
}

/// Angle between unit vectors `x` and `y` measured in `g_x`.
pub fn g_angle(local: &LocalNorm, x: Vec2, y: Vec2) -> f64 {
    let g = local.tensor(x);
    let c = g.apply(x, y) / (g.apply(x, x) * g.apply(y, y)).sqrt();
    c.clamp(-1.0, 1.0).acos()
}

/// A foot of N together with its distance to a query point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FootHit {
    pub foot: Foot,
    pub dist: f64,
    /// Parameter of the closest point on the element.
    pub param: f64,
    /// Closest point of the translated element (lifted chart coordinates).
    pub point: ChartPoint,
}

impl FootHit {
    /// Smaller distance wins; near-ties go to the smaller foot.
    pub fn better(&self, other: &FootHit) -> bool {
        let tie = 1e-12 * (1.0 + self.dist.abs().max(other.dist.abs()));
        if (self.dist - other.dist).abs() <= tie {
            self.foot < other.foot
        } else {
            self.dist < other.dist
        }
    }
}

/// Point-to-element distances on one manifold.
pub(crate) struct Kernel<'a> {
    pub m: &'a Manifold,
    pub set: &'a ClosedSet,
    constant: Option<LocalNorm>,
}

impl<'a> Kernel<'a> {
    pub fn new(m: &'a Manifold, set: &'a ClosedSet) -> Result<Self, MetricError> {
        let constant = if m.is_homogeneous() { Some(m.local(ChartPoint::default())?) } else { None };
        Ok(Self { m, set, constant })
    }

    /// Forward length from `a` to `x` along the straight chart segment (exact when homogeneous).
    pub fn chord(&self, a: ChartPoint, x: ChartPoint) -> Result<f64, MetricError> {
        match &self.constant {
            Some(n) => Ok(n.norm(x - a)),
            None => geodesic::chord_length(self.m, a, x - a),
        }
    }

    /// Distance from the foot's translated element to the chart point `x`.
    pub fn hit(&self, foot: Foot, x: ChartPoint) -> Result<FootHit, MetricError> {
        let sv = self.m.domain.shift_vec(foot.shift);
        let (param, point, dist) = match *self.set.element(foot.element) {
            Element::Point(p) => {
                let p = p + sv;
                (0.0, p, self.chord(p, x)?)
            }
            Element::Segment(a, b) => {
                let (a, b) = (a + sv, b + sv);
                let s = self.segment_param(a, b, x)?;
                let p = a + (b - a) * s;
                (s, p, self.chord(p, x)?)
            }
        };
        Ok(FootHit { foot, dist, param, point })
    }

    fn segment_param(&self, a: ChartPoint, b: ChartPoint, x: ChartPoint) -> Result<f64, MetricError> {
        let d = b - a;
        if d.is_zero() {
            return Ok(0.0);
        }
        match &self.constant {
            Some(n) if n.b.is_zero() => {
                let ad = |u: Vec2, v: Vec2| n.a[0] * u.x * v.x + n.a[1] * (u.x * v.y + u.y * v.x) + n.a[2] * u.y * v.y;
                Ok((ad(x - a, d) / ad(d, d)).clamp(0.0, 1.0))
            }
            Some(n) => {
                // F(x - p(s)) is convex in s; bisect on the sign of its derivative
                let slope = |s: f64| {
                    let r = x - (a + d * s);
                    if r.is_zero() {
                        0.0
                    } else {
                        -n.grad(r).dot(d)
                    }
                };
                if slope(0.0) >= 0.0 {
                    return Ok(0.0);
                }
                if slope(1.0) <= 0.0 {
                    return Ok(1.0);
                }
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let g = slope(mid);
                    if g == 0.0 {
                        return Ok(mid);
                    }
                    if g < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
            None => {
                let f = |s: f64| self.chord(a + d * s, x);
                let r = 0.5 * (5f64.sqrt() - 1.0);
                let (mut lo, mut hi) = (0.0, 1.0);
                let mut c = hi - r * (hi - lo);
                let mut e = lo + r * (hi - lo);
                let (mut fc, mut fe) = (f(c)?, f(e)?);
                for _ in 0..40 {
                    if fc < fe {
                        hi = e;
                        e = c;
                        fe = fc;
                        c = hi - r * (hi - lo);
                        fc = f(c)?;
                    } else {
                        lo = c;
                        c = e;
                        fc = fe;
                        e = lo + r * (hi - lo);
                        fe = f(e)?;
                    }
                }
                let s = 0.5 * (lo + hi);
                let (f0, f1, fs) = (f(0.0)?, f(1.0)?, f(s)?);
                Ok(if f0 <= fs && f0 <= f1 {
                    0.0
                } else if f1 <= fs {
                    1.0
                } else {
                    s
                })
            }
        }
    }

    /// Unit terminal velocity at `x` of the segment from the hit (chord direction for
    /// non-constant metrics).
    pub fn terminal(&self, hit: &FootHit, x: ChartPoint) -> Result<Vec2, MetricError> {
        let d = x - hit.point;
        if d.is_zero() {
            return Ok(Vec2::ZERO);
        }
        Ok(d * (1.0 / self.m.norm(x, d)?))
    }

    /// Follows the element chain from `start` while the distance decreases.
    pub fn descend(&self, start: FootHit, x: ChartPoint) -> Result<FootHit, MetricError> {
        let mut best = start;
        loop {
            let mut moved = false;
            for next in self.set.links(best.foot.element).into_iter().flatten() {
                let h = self.hit(Foot { element: next, shift: best.foot.shift }, x)?;
                if h.dist < best.dist - 1e-15 * (1.0 + best.dist) {
                    best = h;
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Ok(best);
            }
        }
    }
}

/// Clusters unit directions (indexed in order of preference) by `g`-angle: directions are
/// swept by chart angle starting after the widest gap, and a new cluster opens once the
/// angle to the current cluster's first member exceeds `theta_sep`. Returns the preferred
/// member of each cluster, and whether `cap` clusters were reached.
pub fn cluster_directions(local: &LocalNorm, dirs: &[Vec2], theta_sep: f64, cap: usize) -> (Vec<usize>, bool) {
    let mut order: Vec<usize> = (0..dirs.len()).filter(|&k| !dirs[k].is_zero()).collect();
    if order.is_empty() {
        return (Vec::new(), false);
    }
    order.sort_by(|&a, &b| dirs[a].angle().total_cmp(&dirs[b].angle()).then(a.cmp(&b)));
    let n = order.len();
    let tau = std::f64::consts::TAU;
    let mut widest = (f64::NEG_INFINITY, 0);
    for k in 0..n {
        let a = dirs[order[k]].angle();
        let b = dirs[order[(k + 1) % n]].angle();
        let gap = if k + 1 == n { b + tau - a } else { b - a };
        if gap > widest.0 {
            widest = (gap, (k + 1) % n);
        }
    }
    let mut reps: Vec<usize> = Vec::new();
    let mut first = order[widest.1];
    let mut best = first;
    for step in 1..n {
        let k = order[(widest.1 + step) % n];
        if g_angle(local, dirs[first], dirs[k]) > theta_sep {
            reps.push(best);
            first = k;
            best = k;
        } else if k < best {
            best = k;
        }
    }
    reps.push(best);
    reps.sort_unstable();
    if reps.len() >= cap {
        reps.truncate(cap);
        return (reps, true);
    }
    (reps, false)
}
