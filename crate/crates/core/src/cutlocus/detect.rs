//! Cut point detection: interface roots along grid edges and loss of minimality along
//! extended segments.

use rayon::prelude::*;

use crate::distance::{segment_clusters, DistanceField, Foot, Kernel};
use crate::geodesic;
use crate::geom::{ChartPoint, PointIndex, Shift, Vec2};

use super::{CutError, CutPoint, Detection};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectOptions {
    /// Relative near-minimality threshold for N-segments.
    pub eta: f64,
    /// Directions closer than this `g`-angle belong to one segment cluster.
    pub theta_sep: f64,
    /// Cluster count at which a point is reported as a continuum.
    pub cap: usize,
    /// Extension length of the endpoint test, in grid spacings.
    pub extension: f64,
}

impl DetectOptions {
    pub fn from_field(field: &DistanceField) -> Self {
        Self { eta: field.options.eta, theta_sep: field.options.theta_sep, cap: 64, extension: 2.0 }
    }
}

pub(crate) fn shifted(f: Foot, w: Shift) -> Foot {
    Foot { element: f.element, shift: Shift(f.shift.0 + w.0, f.shift.1 + w.1) }
}

/// Cut points of N found on the grid of `field`: (a) roots of the distance difference of
/// two node feet along grid edges whose terminal directions differ by more than
/// `theta_sep`, and (b) points where the segment through a node, extended beyond it, stops
/// minimizing. Every reported point carries at least two segment clusters or a continuum.
pub fn detect(field: &DistanceField, opts: &DetectOptions) -> Result<Vec<CutPoint>, CutError> {
    let mut roots = interface_roots(field, opts)?;
    dedupe(field, &mut roots, 1e-6 * field.spacing());
    let mut ends = extension_points(field, opts)?;
    dedupe(field, &mut ends, field.spacing());
    let h = field.spacing();
    let domain = &field.manifold().domain;
    let mut index = PointIndex::new(domain, h);
    for (k, r) in roots.iter().enumerate() {
        index.insert(k, r.pos);
    }
    ends.retain(|e| special(e) || index.near(e.pos, h).all(|k| domain.chart_dist(roots[k].pos, e.pos) > h));
    roots.extend(ends);
    Ok(roots)
}

pub(crate) fn special(p: &CutPoint) -> bool {
    p.continuum || p.multiplicity >= 3
}

fn validated(
    field: &DistanceField,
    x: ChartPoint,
    opts: &DetectOptions,
    source: Detection,
) -> Result<Option<CutPoint>, CutError> {
    let c = segment_clusters(field, x, opts.eta, opts.cap)?;
    if c.count() >= 2 || c.continuum {
        let m = field.manifold();
        return Ok(Some(CutPoint::new(m, m.domain.wrap(x), &c, opts.theta_sep, source)?));
    }
    Ok(None)
}

fn interface_roots(field: &DistanceField, opts: &DetectOptions) -> Result<Vec<CutPoint>, CutError> {
    let m = field.manifold();
    let grid = &field.grid;
    let found: Vec<Vec<CutPoint>> = (0..grid.len())
        .into_par_iter()
        .map(|k| -> Result<Vec<CutPoint>, CutError> {
            let kernel = Kernel::new(m, field.set())?;
            let mut out = Vec::new();
            let a = &field.nodes[k];
            let Some(fa) = a.foot else { return Ok(out) };
            let (i, j) = grid.ij(k);
            for (di, dj) in [(1, 0), (0, 1)] {
                let Some((n, w)) = grid.offset(i, j, di, dj) else { continue };
                let b = &field.nodes[n];
                let Some(fb) = b.foot else { continue };
                let fb = shifted(fb, w);
                if fa == fb {
                    continue;
                }
                let xa = grid.point(k);
                let local = m.local(xa)?;
                if crate::distance::g_angle(&local, a.direction, b.direction) <= opts.theta_sep {
                    continue;
                }
                let step = Vec2::new(di as f64, dj as f64) * grid.spacing;
                let phi = |s: f64| -> Result<f64, CutError> {
                    let x = xa + step * s;
                    let ha = kernel.descend(kernel.hit(fa, x)?, x)?;
                    let hb = kernel.descend(kernel.hit(fb, x)?, x)?;
                    Ok(ha.dist - hb.dist)
                };
                let (mut lo, mut hi) = (0.0, 1.0);
                let (p0, p1) = (phi(lo)?, phi(hi)?);
                if p0 > 0.0 || p1 < 0.0 {
                    continue;
                }
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if phi(mid)? <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if let Some(p) = validated(field, xa + step * (0.5 * (lo + hi)), opts, Detection::Interface)? {
                    out.push(p);
                }
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    Ok(found.into_iter().flatten().collect())
}

fn extension_points(field: &DistanceField, opts: &DetectOptions) -> Result<Vec<CutPoint>, CutError> {
    let m = field.manifold();
    let grid = &field.grid;
    let dt = opts.extension * grid.spacing;
    let homogeneous = m.is_homogeneous();
    let slack = field.field_tol();
    let found: Vec<Option<CutPoint>> = (0..grid.len())
        .into_par_iter()
        .map(|k| -> Result<Option<CutPoint>, CutError> {
            let r = &field.nodes[k];
            if r.inside || r.foot.is_none() || r.direction.is_zero() {
                return Ok(None);
            }
            let x = grid.point(k);
            let v = r.direction * (1.0 / m.norm(x, r.direction)?);
            let path = if homogeneous {
                None
            } else {
                match geodesic::integrate(m, x, v, dt, 1e-8) {
                    Ok(p) => Some(p),
                    Err(_) => return Ok(None),
                }
            };
            let at = |t: f64| match &path {
                None => x + v * t,
                Some(p) => p.lift_at(t),
            };
            let lost = |t: f64| -> Result<bool, CutError> {
                let d = field.eval(at(t))?.value;
                Ok(if homogeneous { d < (r.value + t) * (1.0 - opts.eta) } else { d < r.value + t - slack })
            };
            if !m.domain.contains(at(dt)) || !lost(dt)? {
                return Ok(None);
            }
            let (mut lo, mut hi) = (0.0, dt);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if lost(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            validated(field, at(0.5 * (lo + hi)), opts, Detection::Extension)
        })
        .collect::<Result<_, _>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// Keeps the first of every group of points closer than `radius`, preferring continuum and
/// higher multiplicity.
pub(crate) fn dedupe(field: &DistanceField, points: &mut Vec<CutPoint>, radius: f64) {
    let domain = &field.manifold().domain;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (&points[a], &points[b]);
        q.continuum.cmp(&p.continuum).then(q.multiplicity.cmp(&p.multiplicity)).then(a.cmp(&b))
    });
    let mut index = PointIndex::new(domain, radius.max(field.spacing()));
    let mut keep = vec![false; points.len()];
    for &k in &order {
        let p = points[k].pos;
        if index.near(p, radius).all(|o| domain.chart_dist(points[o].pos, p) > radius) {
            keep[k] = true;
            index.insert(k, p);
        }
    }
    let mut k = 0;
    points.retain(|_| {
        k += 1;
        keep[k - 1]
    });
}
