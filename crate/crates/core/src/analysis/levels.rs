//! Level sets of `d_N` by marching squares, and the criticality test.

use std::collections::{BTreeMap, HashMap};

use crate::distance::{segment_clusters, DistanceField};
use crate::geom::{ChartPoint, Vec2};

use super::AnalysisError;

/// One connected piece of a level set.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelCurve {
    /// Lifted chart points; closed curves repeat the first point at the end.
    pub points: Vec<ChartPoint>,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelSet {
    pub t: f64,
    pub components: Vec<LevelCurve>,
    pub critical: bool,
    /// Largest segment-cluster count over the extracted points.
    pub max_multiplicity: usize,
}

/// Directions of the criticality fan.
pub const CRITICAL_FAN: usize = 32;
/// Tolerance of the criticality test.
pub const CRITICAL_TOL: f64 = 1e-3;

/// Crossing id: node index and axis (0 = +x edge, 1 = +y edge).
type EdgeId = (usize, u8);

/// Marching-squares extraction of `d_N^{-1}(t)` with the criticality test at each point.
pub fn level_sets(field: &DistanceField, t: f64) -> Result<LevelSet, AnalysisError> {
    let max = field.max_value();
    if !(t > 0.0 && t < max) {
        return Err(AnalysisError::TOutOfRange { t, max });
    }
    let grid = &field.grid;
    let domain = &field.manifold().domain;
    let val = |k: usize| field.nodes[k].value;
    let (cx, cy) = if grid.periodic { (grid.nx, grid.ny) } else { (grid.nx - 1, grid.ny - 1) };

    // crossing positions on edges
    let mut pos: BTreeMap<EdgeId, ChartPoint> = BTreeMap::new();
    let mut crossing = |k: usize, axis: u8| -> Option<EdgeId> {
        let (i, j) = grid.ij(k);
        let (di, dj) = if axis == 0 { (1, 0) } else { (0, 1) };
        let (n, _) = grid.offset(i, j, di, dj)?;
        let (a, b) = (val(k), val(n));
        if (a >= t) == (b >= t) {
            return None;
        }
        let s = (t - a) / (b - a);
        let p = grid.point(k) + Vec2::new(di as f64, dj as f64) * (grid.spacing * s);
        pos.insert((k, axis), domain.wrap(p));
        Some((k, axis))
    };
    let mut links: Vec<(EdgeId, EdgeId)> = Vec::new();
    for j in 0..cy {
        for i in 0..cx {
            let corner = |di, dj| grid.offset(i, j, di, dj).map(|(n, _)| n);
            let (Some(bl), Some(br), Some(tr), Some(tl)) = (corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1))
            else {
                continue;
            };
            // bottom, right, top, left
            let e = [crossing(bl, 0), crossing(br, 1), crossing(tl, 0), crossing(bl, 1)];
            let hits: Vec<EdgeId> = e.iter().flatten().copied().collect();
            match hits.len() {
                2 => links.push((hits[0], hits[1])),
                4 => {
                    let centre = 0.25 * (val(bl) + val(br) + val(tr) + val(tl)) >= t;
                    let (b, r, tp, l) = (e[0].unwrap(), e[1].unwrap(), e[2].unwrap(), e[3].unwrap());
                    // cut off the corners whose side differs from the centre's
                    if (val(bl) >= t) != centre {
                        links.push((l, b));
                        links.push((r, tp));
                    } else {
                        links.push((b, r));
                        links.push((tp, l));
                    }
                }
                _ => {}
            }
        }
    }

    let ids: Vec<EdgeId> = pos.keys().copied().collect();
    let index: HashMap<EdgeId, usize> = ids.iter().enumerate().map(|(k, e)| (*e, k)).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    for (a, b) in &links {
        let (a, b) = (index[a], index[b]);
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; ids.len()];
    let mut components = Vec::new();
    let trace = |start: usize, seen: &mut Vec<bool>| {
        let mut pts = vec![pos[&ids[start]]];
        seen[start] = true;
        let (mut prev, mut cur) = (usize::MAX, start);
        loop {
            let next = adj[cur].iter().copied().find(|&n| n != prev && !seen[n]);
            match next {
                Some(n) => {
                    let last = *pts.last().unwrap();
                    pts.push(last + domain.displacement(last, pos[&ids[n]]));
                    seen[n] = true;
                    prev = cur;
                    cur = n;
                }
                None => {
                    let closed = adj[cur].len() == 2 && adj[cur].contains(&start) && pts.len() > 2;
                    if closed {
                        let last = *pts.last().unwrap();
                        pts.push(last + domain.displacement(last, pts[0]));
                    }
                    return LevelCurve { points: pts, closed };
                }
            }
        }
    };
    for k in 0..ids.len() {
        if !seen[k] && adj[k].len() == 1 {
            components.push(trace(k, &mut seen));
        }
    }
    for k in 0..ids.len() {
        if !seen[k] {
            components.push(trace(k, &mut seen));
        }
    }

    let m = field.manifold();
    let eta = field.options.eta;
    let mut critical = false;
    let mut max_multiplicity = 0;
    for p in pos.values() {
        let c = segment_clusters(field, *p, eta, 64)?;
        max_multiplicity = max_multiplicity.max(c.count());
        if c.count() < 2 && !c.continuum {
            continue;
        }
        let local = m.local(*p)?;
        let all = (0..CRITICAL_FAN).all(|k| {
            let v = Vec2::from_angle(std::f64::consts::TAU * k as f64 / CRITICAL_FAN as f64);
            c.directions.iter().map(|y| local.g_pair(*y, v)).fold(f64::INFINITY, f64::min) <= CRITICAL_TOL
        });
        critical |= all;
    }
    Ok(LevelSet { t, components, critical, max_multiplicity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{ClosedSet, FieldOptions, Primitive};
    use crate::geom::Domain;
    use crate::manifold::Manifold;
    use crate::metric::MetricSpec;

    fn two_points() -> DistanceField {
        let m = Manifold::new(MetricSpec::euclidean(), Domain::plane((-3.0, -3.0), (3.0, 3.0))).unwrap();
        let set = ClosedSet::new(
            vec![
                Primitive::Point { at: ChartPoint::new(-1.0, 0.0) },
                Primitive::Point { at: ChartPoint::new(1.0, 0.0) },
            ],
            1.0 / 64.0,
        )
        .unwrap();
        DistanceField::compute(&m, &set, 1.0 / 32.0, FieldOptions::default()).unwrap()
    }

    #[test]
    fn two_point_levels() {
        let f = two_points();
        let a = level_sets(&f, 0.5).unwrap();
        assert_eq!(a.components.len(), 2);
        assert!(a.components.iter().all(|c| c.closed));
        assert!(!a.critical);
        let b = level_sets(&f, 1.5).unwrap();
        assert_eq!(b.components.len(), 1);
        assert!(!b.critical);
        assert!(b.max_multiplicity <= 2);
        assert!(level_sets(&f, 1.0).unwrap().critical);
        assert!(matches!(level_sets(&f, 0.0), Err(AnalysisError::TOutOfRange { .. })));
        assert!(matches!(level_sets(&f, 100.0), Err(AnalysisError::TOutOfRange { .. })));
    }

    #[test]
    fn circle_level_is_round() {
        let f = two_points();
        let a = level_sets(&f, 0.5).unwrap();
        for c in &a.components {
            for p in &c.points {
                let r = (p.x - 1.0).hypot(p.y).min((p.x + 1.0).hypot(p.y));
                assert!((r - 0.5).abs() < 0.01, "{r}");
            }
        }
    }
}
