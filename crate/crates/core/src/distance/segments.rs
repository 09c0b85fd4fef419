//! N-segments at a point, the gradient of `d_N`, and first-variation limits along approach
//! sequences.

use crate::geodesic::{self, GeodesicPath, IntegrateOptions};
use crate::geom::{ChartPoint, Vec2};

use super::{cluster_directions, distance, DistanceError, DistanceField, Foot, FootHit, Kernel};

/// A unit-speed minimizing geodesic from N to a point.
#[derive(Clone, Debug, PartialEq)]
pub struct NSegment {
    /// Foot point on N (canonical chart coordinates).
    pub foot: ChartPoint,
    pub foot_id: Foot,
    pub path: GeodesicPath,
    pub length: f64,
    pub terminal_velocity: Vec2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentSet {
    pub distance: f64,
    pub segments: Vec<NSegment>,
    /// Set when the cluster cap was reached.
    pub continuum: bool,
}

/// Near-minimal feet at a point grouped by terminal direction, without building paths.
#[derive(Clone, Debug, PartialEq)]
pub struct Clusters {
    pub distance: f64,
    /// One representative hit per cluster, by increasing distance.
    pub hits: Vec<FootHit>,
    pub directions: Vec<Vec2>,
    /// Terminal directions of every near-minimal foot before clustering.
    pub all_directions: Vec<Vec2>,
    pub continuum: bool,
}

impl Clusters {
    pub fn count(&self) -> usize {
        self.hits.len()
    }

    fn empty() -> Self {
        Self { distance: 0.0, hits: Vec::new(), directions: Vec::new(), all_directions: Vec::new(), continuum: false }
    }
}

/// Clusters of near-minimal feet at `q` (empty when `q` lies in N).
pub fn segment_clusters(field: &DistanceField, q: ChartPoint, eta: f64, cap: usize) -> Result<Clusters, DistanceError> {
    let m = field.manifold();
    let set = field.set();
    let q = m.domain.wrap(q);
    if set.contains(&m.domain, q) {
        return Ok(Clusters::empty());
    }
    let upper = field.eval(q)?.value;
    let radius = upper * (1.0 + eta) / m.min_speed() + 2.0 * set.epsilon;
    let kernel = Kernel::new(m, set)?;
    let mut hits = Vec::new();
    for f in set.query(&m.domain, q, radius) {
        hits.push(kernel.hit(f, q)?);
    }
    let d = hits.iter().map(|h| h.dist).fold(f64::INFINITY, f64::min);
    if !d.is_finite() {
        return Ok(Clusters::empty());
    }
    hits.retain(|h| h.dist <= d * (1.0 + eta) + 1e-14);
    hits.sort_by(|a, b| a.dist.total_cmp(&b.dist).then(a.foot.cmp(&b.foot)));
    let dirs: Vec<Vec2> = hits.iter().map(|h| kernel.terminal(h, q)).collect::<Result<_, _>>()?;
    let local = m.local(q)?;
    let (reps, continuum) = cluster_directions(&local, &dirs, field.options.theta_sep, cap);
    Ok(Clusters {
        distance: d,
        hits: reps.iter().map(|&r| hits[r]).collect(),
        directions: reps.iter().map(|&r| dirs[r]).collect(),
        all_directions: dirs,
        continuum,
    })
}

/// All N-segments to `q` with length within `d_N(q)(1 + eta)`, one per direction cluster.
pub fn n_segments(field: &DistanceField, q: ChartPoint, eta: f64, cap: usize) -> Result<SegmentSet, DistanceError> {
    let m = field.manifold();
    let q = m.domain.wrap(q);
    let clusters = segment_clusters(field, q, eta, cap)?;
    let opts = IntegrateOptions::default();
    let mut segments = Vec::with_capacity(clusters.count());
    for (hit, dir) in clusters.hits.iter().zip(&clusters.directions) {
        let (v, length) = if m.is_homogeneous() {
            (*dir * (1.0 / m.norm(hit.point, *dir)?), hit.dist)
        } else {
            let v = geodesic::shoot(m, hit.point, q + (hit.point - m.domain.wrap(hit.point)), q - hit.point, 1e-9)?;
            let len = m.norm(hit.point, v)?;
            (v * (1.0 / len), len)
        };
        let path = geodesic::integrate_with(m, hit.point, v, length, opts)?;
        segments.push(NSegment {
            foot: m.domain.wrap(hit.point),
            foot_id: hit.foot,
            terminal_velocity: path.terminal_velocity(),
            length,
            path,
        });
    }
    Ok(SegmentSet { distance: clusters.distance, segments, continuum: clusters.continuum })
}

/// Covectors `v ↦ g_X(X, v)` of the segments at `q`; `unique` when there is exactly one.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub unique: bool,
    pub functionals: Vec<Vec2>,
}

impl Gradient {
    pub fn apply(&self, v: Vec2) -> Option<f64> {
        if self.unique {
            Some(self.functionals[0].dot(v))
        } else {
            None
        }
    }
}

pub fn grad_dn(field: &DistanceField, q: ChartPoint) -> Result<Gradient, DistanceError> {
    let m = field.manifold();
    let c = segment_clusters(field, q, field.options.eta, 64)?;
    let local = m.local(q)?;
    let functionals: Vec<Vec2> = c.directions.iter().map(|&x| local.legendre(x)).collect();
    Ok(Gradient { unique: functionals.len() == 1 && !c.continuum, functionals })
}

/// Estimated limits along an approach sequence `q_i → x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitDirections {
    /// Forward limit direction of `log_x(q_i)`.
    pub v_f: Vec2,
    /// Backward limit direction of `log_{q_i}(x)`.
    pub v_b: Vec2,
    /// Limit of `(d_N(q_i) − d_N(x)) / d(x, q_i)`.
    pub limit_dn: f64,
    /// Limit of `(d_N(q_i) − d_N(x)) / d(q_i, x)`.
    pub limit_dn_backward: f64,
    /// Terminal velocity of the limiting segment at `x`.
    pub w: Vec2,
    /// `|limit_dn − g_w(w, v_f)|`.
    pub residual: f64,
    /// `|limit_dn_backward − g_w(w, −v_b)|`.
    pub residual_backward: f64,
    /// Forward residual at each iterate.
    pub history: Vec<f64>,
}

pub fn first_variation_probe(
    field: &DistanceField,
    x: ChartPoint,
    approach: &[ChartPoint],
) -> Result<LimitDirections, DistanceError> {
    if approach.len() < 3 {
        return Err(DistanceError::SequenceTooShort(approach.len()));
    }
    let m = field.manifold();
    let kernel = Kernel::new(m, field.set())?;
    let dx = field.eval(x)?.value;
    let local_x = m.local(x)?;
    let mut history = Vec::with_capacity(approach.len());
    let mut last = None;
    let mut prev_dirs: Vec<Vec2> = Vec::new();
    for &q in approach {
        let vf = geodesic::log(m, x, q, 1e-10)?;
        let vf = vf * (1.0 / m.norm(x, vf)?);
        let vb = geodesic::log(m, q, x, 1e-10)?;
        let vb = vb * (1.0 / m.norm(q, vb)?);
        let probe = field.eval(q)?;
        let dq = probe.value;
        let fwd = distance(m, x, q)?;
        let bwd = distance(m, q, x)?;
        let dn = (dq - dx) / fwd;
        let dn_b = (dq - dx) / bwd;
        // segment from the foot of q_i, seen at x
        let hit = probe.hit.ok_or_else(|| DistanceError::NoLimit("approach point lies in N".into()))?;
        let at_x = kernel.hit(hit.foot, x)?;
        let w = kernel.terminal(&at_x, x)?;
        let expected = local_x.g_pair(w, vf);
        history.push((dn - expected).abs());
        prev_dirs.push(vf);
        last = Some((vf, vb, dn, dn_b, w));
    }
    let n = prev_dirs.len();
    let step_a = (prev_dirs[n - 1] - prev_dirs[n - 2]).chart_len();
    let step_b = (prev_dirs[n - 2] - prev_dirs[n - 3]).chart_len();
    if step_a > 0.1 && step_a >= step_b {
        return Err(DistanceError::NoLimit(format!("direction steps {step_b} then {step_a}")));
    }
    let (v_f, v_b, limit_dn, limit_dn_backward, w) = last.unwrap();
    let residual = (limit_dn - local_x.g_pair(w, v_f)).abs();
    let residual_backward = (limit_dn_backward - local_x.g_pair(w, -v_b)).abs();
    Ok(LimitDirections { v_f, v_b, limit_dn, limit_dn_backward, w, residual, residual_backward, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{ClosedSet, FieldOptions, Primitive};
    use crate::geom::Domain;
    use crate::manifold::Manifold;
    use crate::metric::{make_zermelo, MetricSpec, TensorField, VectorField};

    fn field(metric: Option<(f64, f64)>, set: Vec<Primitive>, h: f64) -> DistanceField {
        let d = Domain::plane((-2.0, -2.0), (2.0, 2.0));
        let spec = match metric {
            None => MetricSpec::euclidean(),
            Some((w1, w2)) => make_zermelo(TensorField::identity(), VectorField::constant(w1, w2), &d).unwrap(),
        };
        let m = Manifold::new(spec, d).unwrap();
        let set = ClosedSet::new(set, h / 2.0).unwrap();
        DistanceField::compute(&m, &set, h, FieldOptions::default()).unwrap()
    }

    fn pt(x: f64, y: f64) -> Primitive {
        Primitive::Point { at: ChartPoint::new(x, y) }
    }

    #[test]
    fn two_point_segments() {
        let f = field(None, vec![pt(-1.0, 0.0), pt(1.0, 0.0)], 1.0 / 32.0);
        let s = n_segments(&f, ChartPoint::new(0.0, 1.0), 1e-5, 64).unwrap();
        assert_eq!(s.segments.len(), 2);
        let mut feet: Vec<f64> = s.segments.iter().map(|g| g.foot.x).collect();
        feet.sort_by(f64::total_cmp);
        assert_eq!(feet, vec![-1.0, 1.0]);
        for seg in &s.segments {
            assert!((seg.length - 2f64.sqrt()).abs() < 1e-12);
            // defining property of an N-segment
            for k in 0..=10 {
                let t = seg.length * k as f64 / 10.0;
                let p = seg.path.lift_at(t);
                assert!((f.eval(p).unwrap().value - t).abs() < 1e-9);
            }
        }
        let s = n_segments(&f, ChartPoint::new(0.5, 0.0), 1e-5, 64).unwrap();
        assert_eq!(s.segments.len(), 1);
        assert_eq!(s.segments[0].foot, ChartPoint::new(1.0, 0.0));
    }

    #[test]
    fn circle_center_is_continuum() {
        let f = field(None, vec![Primitive::Circle { center: ChartPoint::default(), radius: 1.0 }], 1.0 / 32.0);
        let s = segment_clusters(&f, ChartPoint::default(), 1e-5, 64).unwrap();
        assert!(s.continuum);
        assert_eq!(s.count(), 64);
    }

    #[test]
    fn gradients() {
        let f = field(None, vec![pt(0.0, 0.0)], 1.0 / 32.0);
        let g = grad_dn(&f, ChartPoint::new(1.2, 1.6)).unwrap();
        assert!(g.unique);
        assert!((g.apply(Vec2::new(1.0, 0.0)).unwrap() - 0.6).abs() < 1e-12);
        let f2 = field(None, vec![pt(-1.0, 0.0), pt(1.0, 0.0)], 1.0 / 32.0);
        let g = grad_dn(&f2, ChartPoint::new(0.0, 1.0)).unwrap();
        assert!(!g.unique);
        assert_eq!(g.functionals.len(), 2);
        // finite-difference oracle on the computed field, Randers case
        let fr = field(Some((0.5, 0.0)), vec![pt(0.0, 0.0)], 1.0 / 32.0);
        let q = ChartPoint::new(0.7, -0.4);
        let g = grad_dn(&fr, q).unwrap();
        let e = 1e-5;
        for v in [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)] {
            let fd = (fr.eval(q + v * e).unwrap().value - fr.eval(q - v * e).unwrap().value) / (2.0 * e);
            let an = g.apply(v).unwrap();
            assert!((fd - an).abs() < 1e-3 * an.abs().max(1e-3), "{fd} vs {an}");
        }
    }

    #[test]
    fn probe_examples() {
        let f = field(None, vec![pt(0.0, 0.0)], 1.0 / 32.0);
        let x = ChartPoint::new(1.0, 0.0);
        let radial: Vec<ChartPoint> = (4..12).map(|i| ChartPoint::new(1.0 + 1.0 / (i * i) as f64, 0.0)).collect();
        let r = first_variation_probe(&f, x, &radial).unwrap();
        assert!((r.limit_dn - 1.0).abs() < 1e-9 && r.residual < 1e-9);
        let tangential: Vec<ChartPoint> =
            (4..12).map(|i| ChartPoint::new((1.0 / (i * i) as f64).cos(), (1.0 / (i * i) as f64).sin())).collect();
        let r = first_variation_probe(&f, x, &tangential).unwrap();
        assert!(r.limit_dn.abs() < 1e-9);
        assert!(r.residual < 1e-2);
        let h = &r.history;
        assert!(h[h.len() - 1] < h[h.len() - 2] && h[h.len() - 2] < h[h.len() - 3]);
        assert!(matches!(first_variation_probe(&f, x, &radial[..2]), Err(DistanceError::SequenceTooShort(2))));
    }

    #[test]
    fn randers_tangential_probe() {
        let f = field(Some((0.5, 0.0)), vec![pt(0.0, 0.0)], 1.0 / 32.0);
        let t0 = 2.0 / 3.0;
        let w = Vec2::new(0.5, 0.0);
        let x = ChartPoint::default() + (w + Vec2::new(1.0, 0.0)) * t0;
        let seq: Vec<ChartPoint> =
            (6..14).map(|i| ChartPoint::default() + (w + Vec2::from_angle(0.5f64.powi(i))) * t0).collect();
        let r = first_variation_probe(&f, x, &seq).unwrap();
        assert!(r.residual < 1e-3, "{}", r.residual);
        assert!(r.residual_backward < 1e-3, "{}", r.residual_backward);
    }
}
