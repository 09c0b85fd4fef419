//! Discretized closed sets: primitives are reduced to chart points and short segments with
//! vertex spacing at most `epsilon`, plus an exact membership test for filled regions.

use serde::{Deserialize, Serialize};

use crate::geom::{ChartPoint, Domain, Shift, Vec2};

use super::DistanceError;

/// An open ball removed from a filled disc.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub center: ChartPoint,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    Point {
        at: ChartPoint,
    },
    Polyline {
        points: Vec<ChartPoint>,
        closed: bool,
    },
    /// The circle itself (not the disc).
    Circle {
        center: ChartPoint,
        radius: f64,
    },
    /// Closed filled disc.
    Disc {
        center: ChartPoint,
        radius: f64,
    },
    /// Closed disc minus a union of open balls.
    DiscWithHoles {
        center: ChartPoint,
        radius: f64,
        holes: Vec<Hole>,
    },
}

impl Primitive {
    /// Disc of radius `r` with a notch between each consecutive pair of boundary angles: the
    /// removed ball has radius `r` and its circle passes through both boundary points.
    pub fn notched_disc(center: ChartPoint, radius: f64, angles: &[f64]) -> Primitive {
        Primitive::DiscWithHoles { center, radius, holes: notch_holes(center, radius, angles) }
    }

    fn is_filled(&self) -> bool {
        matches!(self, Primitive::Disc { .. } | Primitive::DiscWithHoles { .. })
    }

    fn filled_contains(&self, q: ChartPoint) -> bool {
        match self {
            Primitive::Disc { center, radius } => (q - *center).chart_len() <= *radius,
            Primitive::DiscWithHoles { center, radius, holes } => {
                (q - *center).chart_len() <= *radius && holes.iter().all(|h| (q - h.center).chart_len() >= h.radius)
            }
            _ => false,
        }
    }
}

/// Hole centers for [`Primitive::notched_disc`].
pub fn notch_holes(center: ChartPoint, radius: f64, angles: &[f64]) -> Vec<Hole> {
    angles
        .windows(2)
        .map(|w| {
            let delta = (w[0] - w[1]).abs();
            let phi = 0.5 * (w[0] + w[1]);
            Hole { center: center + Vec2::from_angle(phi) * (2.0 * radius * (0.5 * delta).cos()), radius }
        })
        .collect()
}

/// One piece of the discretized set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Element {
    Point(ChartPoint),
    Segment(ChartPoint, ChartPoint),
}

impl Element {
    pub fn midpoint(&self) -> ChartPoint {
        match *self {
            Element::Point(p) => p,
            Element::Segment(a, b) => a + (b - a) * 0.5,
        }
    }

    pub fn at(&self, s: f64) -> ChartPoint {
        match *self {
            Element::Point(p) => p,
            Element::Segment(a, b) => a + (b - a) * s,
        }
    }

    fn bbox(&self) -> (ChartPoint, ChartPoint) {
        match *self {
            Element::Point(p) => (p, p),
            Element::Segment(a, b) => {
                (ChartPoint::new(a.x.min(b.x), a.y.min(b.y)), ChartPoint::new(a.x.max(b.x), a.y.max(b.y)))
            }
        }
    }

    /// Chart distance from `q` to the element.
    pub fn chart_dist(&self, q: ChartPoint) -> f64 {
        match *self {
            Element::Point(p) => (q - p).chart_len(),
            Element::Segment(a, b) => {
                let d = b - a;
                let l2 = d.dot(d);
                let s = if l2 > 0.0 { ((q - a).dot(d) / l2).clamp(0.0, 1.0) } else { 0.0 };
                (q - (a + d * s)).chart_len()
            }
        }
    }
}

/// A point of N: element index plus the lattice copy it is taken from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Foot {
    pub element: usize,
    pub shift: Shift,
}

#[derive(Clone, Debug)]
struct BucketIndex {
    origin: ChartPoint,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl BucketIndex {
    fn new(elements: &[Element]) -> Self {
        let mut lo = ChartPoint::new(f64::INFINITY, f64::INFINITY);
        let mut hi = ChartPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut total = 0.0;
        for e in elements {
            let (a, b) = e.bbox();
            lo = ChartPoint::new(lo.x.min(a.x), lo.y.min(a.y));
            hi = ChartPoint::new(hi.x.max(b.x), hi.y.max(b.y));
            total += (b - a).chart_len();
        }
        let ext = (hi - lo).x.max((hi - lo).y);
        let typical = (total / elements.len() as f64).max(ext / 512.0);
        let cell = (4.0 * typical).max(1e-9);
        let nx = ((hi.x - lo.x) / cell).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for (k, e) in elements.iter().enumerate() {
            let (a, b) = e.bbox();
            let (i0, j0) = (((a.x - lo.x) / cell) as usize, ((a.y - lo.y) / cell) as usize);
            let (i1, j1) = (((b.x - lo.x) / cell) as usize, ((b.y - lo.y) / cell) as usize);
            for j in j0..=j1.min(ny - 1) {
                for i in i0..=i1.min(nx - 1) {
                    buckets[j * nx + i].push(k);
                }
            }
        }
        Self { origin: lo, cell, nx, ny, buckets }
    }

    fn query(&self, q: ChartPoint, r: f64, out: &mut Vec<usize>) {
        let fx0 = ((q.x - r - self.origin.x) / self.cell).floor();
        let fy0 = ((q.y - r - self.origin.y) / self.cell).floor();
        let fx1 = ((q.x + r - self.origin.x) / self.cell).floor();
        let fy1 = ((q.y + r - self.origin.y) / self.cell).floor();
        if fx1 < 0.0 || fy1 < 0.0 || fx0 >= self.nx as f64 || fy0 >= self.ny as f64 {
            return;
        }
        let (i0, j0) = (fx0.max(0.0) as usize, fy0.max(0.0) as usize);
        let (i1, j1) = ((fx1 as usize).min(self.nx - 1), (fy1 as usize).min(self.ny - 1));
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend_from_slice(&self.buckets[j * self.nx + i]);
            }
        }
    }
}

/// The closed set N, discretized with vertex spacing `<= epsilon`.
#[derive(Clone, Debug)]
pub struct ClosedSet {
    pub primitives: Vec<Primitive>,
    pub epsilon: f64,
    elements: Vec<Element>,
    /// Chain neighbours of each element along its polyline.
    links: Vec<[Option<usize>; 2]>,
    index: BucketIndex,
}

impl ClosedSet {
    pub fn new(primitives: Vec<Primitive>, epsilon: f64) -> Result<Self, DistanceError> {
        if !(epsilon > 0.0) {
            return Err(DistanceError::InvalidPrimitive(format!("sample spacing {epsilon} must be positive")));
        }
        let mut elements = Vec::new();
        let mut links = Vec::new();
        for p in &primitives {
            match p {
                Primitive::Point { at } => {
                    if !at.is_finite() {
                        return Err(DistanceError::InvalidPrimitive("non-finite point".into()));
                    }
                    elements.push(Element::Point(*at));
                    links.push([None, None]);
                }
                Primitive::Polyline { points, closed } => {
                    if points.is_empty() {
                        return Err(DistanceError::InvalidPrimitive("empty polyline".into()));
                    }
                    let mut pts = points.clone();
                    if *closed && pts.len() > 2 {
                        pts.push(pts[0]);
                    }
                    push_chain(&refine(&pts, epsilon), *closed && points.len() > 2, &mut elements, &mut links);
                }
                Primitive::Circle { center, radius } | Primitive::Disc { center, radius } => {
                    check_radius(*radius)?;
                    let pts = arc_points(*center, *radius, 0.0, std::f64::consts::TAU, epsilon);
                    push_chain(&pts, true, &mut elements, &mut links);
                }
                Primitive::DiscWithHoles { center, radius, holes } => {
                    check_radius(*radius)?;
                    for h in holes {
                        check_radius(h.radius)?;
                    }
                    let outer = Hole { center: *center, radius: *radius };
                    let circles: Vec<Hole> = std::iter::once(outer).chain(holes.iter().copied()).collect();
                    for (k, c) in circles.iter().enumerate() {
                        let keep = |t: f64| {
                            let q = c.center + Vec2::from_angle(t) * c.radius;
                            let in_outer = k == 0 || (q - *center).chart_len() <= *radius * (1.0 + 1e-12);
                            in_outer
                                && holes
                                    .iter()
                                    .enumerate()
                                    .all(|(j, h)| j + 1 == k || (q - h.center).chart_len() >= h.radius * (1.0 - 1e-12))
                        };
                        for (a0, a1) in kept_arcs(keep) {
                            let pts = arc_points(c.center, c.radius, a0, a1, epsilon);
                            let full = (a1 - a0 - std::f64::consts::TAU).abs() < 1e-12;
                            push_chain(&pts, full, &mut elements, &mut links);
                        }
                    }
                }
            }
        }
        if elements.is_empty() {
            return Err(DistanceError::EmptySet);
        }
        let index = BucketIndex::new(&elements);
        Ok(Self { primitives, epsilon, elements, links, index })
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, k: usize) -> &Element {
        &self.elements[k]
    }

    pub fn links(&self, k: usize) -> [Option<usize>; 2] {
        self.links[k]
    }

    /// Vertex cloud of the discretization.
    pub fn samples(&self) -> Vec<ChartPoint> {
        let mut out = Vec::with_capacity(self.elements.len() + 1);
        for e in &self.elements {
            match *e {
                Element::Point(p) => out.push(p),
                Element::Segment(a, b) => {
                    out.push(a);
                    out.push(b);
                }
            }
        }
        out.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        out.dedup();
        out
    }

    pub fn has_filled(&self) -> bool {
        self.primitives.iter().any(Primitive::is_filled)
    }

    /// Exact membership for filled regions, `1e-9` chart tolerance for points and curves.
    pub fn contains(&self, domain: &Domain, q: ChartPoint) -> bool {
        let shifts = domain.shifts(1);
        shifts.iter().any(|&s| {
            let q = q - domain.shift_vec(s);
            self.primitives.iter().any(|p| p.is_filled() && p.filled_contains(q))
                || self.near_elements(q, 1e-9).into_iter().any(|k| self.elements[k].chart_dist(q) <= 1e-9)
        })
    }

    fn near_elements(&self, q: ChartPoint, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.index.query(q, r, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Feet whose (translated) element comes within chart distance `r` of the lifted point `q`.
    pub fn query(&self, domain: &Domain, q: ChartPoint, r: f64) -> Vec<Foot> {
        let Some(period) = domain.period() else {
            return self
                .near_elements(q, r)
                .into_iter()
                .filter(|&k| self.elements[k].chart_dist(q) <= r)
                .map(|element| Foot { element, shift: Shift(0, 0) })
                .collect();
        };
        let (origin, _) = domain.bounds();
        let kx = ((q.x - origin.x) / period.x).floor() as i32;
        let ky = ((q.y - origin.y) / period.y).floor() as i32;
        let mx = (r / period.x).ceil() as i32 + 1;
        let my = (r / period.y).ceil() as i32 + 1;
        let mut out = Vec::new();
        for sx in kx - mx..=kx + mx {
            for sy in ky - my..=ky + my {
                let shift = Shift(sx, sy);
                let local = q - domain.shift_vec(shift);
                for k in self.near_elements(local, r) {
                    if self.elements[k].chart_dist(local) <= r {
                        out.push(Foot { element: k, shift });
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn check_radius(r: f64) -> Result<(), DistanceError> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(DistanceError::InvalidPrimitive(format!("radius {r} must be positive")))
    }
}

fn refine(points: &[ChartPoint], eps: f64) -> Vec<ChartPoint> {
    let mut out = vec![points[0]];
    for w in points.windows(2) {
        let n = ((w[1] - w[0]).chart_len() / eps).ceil().max(1.0) as usize;
        for k in 1..=n {
            out.push(w[0] + (w[1] - w[0]) * (k as f64 / n as f64));
        }
    }
    out
}

fn arc_points(c: ChartPoint, r: f64, a0: f64, a1: f64, eps: f64) -> Vec<ChartPoint> {
    let n = ((r * (a1 - a0)).abs() / eps).ceil().max(1.0) as usize;
    (0..=n).map(|k| c + Vec2::from_angle(a0 + (a1 - a0) * k as f64 / n as f64) * r).collect()
}

fn push_chain(pts: &[ChartPoint], closed: bool, elements: &mut Vec<Element>, links: &mut Vec<[Option<usize>; 2]>) {
    if pts.len() == 1 {
        elements.push(Element::Point(pts[0]));
        links.push([None, None]);
        return;
    }
    let first = elements.len();
    let n = pts.len() - 1;
    for k in 0..n {
        elements.push(Element::Segment(pts[k], pts[k + 1]));
        let prev = if k > 0 {
            Some(first + k - 1)
        } else if closed {
            Some(first + n - 1)
        } else {
            None
        };
        let next = if k + 1 < n {
            Some(first + k + 1)
        } else if closed {
            Some(first)
        } else {
            None
        };
        links.push([prev, next]);
    }
}

/// Maximal angular intervals where `keep` holds, found by sampling and bisection.
fn kept_arcs(keep: impl Fn(f64) -> bool) -> Vec<(f64, f64)> {
    const M: usize = 4096;
    let tau = std::f64::consts::TAU;
    let flags: Vec<bool> = (0..M).map(|k| keep(tau * k as f64 / M as f64)).collect();
    if flags.iter().all(|&f| f) {
        return vec![(0.0, tau)];
    }
    let edge = |lo: f64, hi: f64, lo_val: bool| {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if keep(m) == lo_val {
                a = m;
            } else {
                b = m;
            }
        }
        if lo_val {
            a
        } else {
            b
        }
    };
    // rotate so the scan starts at a dropped sample
    let start = flags.iter().position(|&f| !f).unwrap();
    let mut arcs = Vec::new();
    let mut open: Option<f64> = None;
    for step in 1..=M {
        let k = (start + step) % M;
        let prev = (start + step - 1) % M;
        let t_prev = tau * (start + step - 1) as f64 / M as f64;
        let t = tau * (start + step) as f64 / M as f64;
        match (flags[prev], flags[k]) {
            (false, true) => open = Some(edge(t_prev, t, false)),
            (true, false) => {
                if let Some(a0) = open.take() {
                    arcs.push((a0, edge(t_prev, t, true)));
                }
            }
            _ => {}
        }
    }
    arcs
}
