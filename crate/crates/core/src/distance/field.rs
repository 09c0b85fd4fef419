//! Grid distance field `d_N`: label-correcting propagation of feet over a 16-neighbour
//! stencil, followed by polish sweeps that re-minimize over the feet of neighbouring nodes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{ChartPoint, Domain, Shift, Vec2};
use crate::manifold::Manifold;

use super::{cluster_directions, ClosedSet, DistanceError, Foot, FootHit, Kernel};

/// Node lattice over the chart window (periodic on the torus).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: ChartPoint,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub periodic: bool,
}

impl Grid {
    pub fn new(domain: &Domain, h: f64) -> Result<Self, DistanceError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(DistanceError::InvalidGrid(format!("spacing {h} must be positive")));
        }
        let (origin, ext) = domain.bounds();
        let count = |len: f64| {
            let c = (len / h).round();
            if c < 2.0 || (c * h - len).abs() > 1e-6 * len {
                Err(DistanceError::InvalidGrid(format!("extent {len} is not a multiple of spacing {h}")))
            } else {
                Ok(c as usize)
            }
        };
        let (cx, cy) = (count(ext.x)?, count(ext.y)?);
        let periodic = domain.is_periodic();
        let (nx, ny) = if periodic { (cx, cy) } else { (cx + 1, cy + 1) };
        Ok(Self { origin, spacing: h, nx, ny, periodic })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn node(&self, i: usize, j: usize) -> ChartPoint {
        ChartPoint::new(self.origin.x + i as f64 * self.spacing, self.origin.y + j as f64 * self.spacing)
    }

    pub fn point(&self, k: usize) -> ChartPoint {
        let (i, j) = self.ij(k);
        self.node(i, j)
    }

    /// Neighbour of `(i, j)` at offset `(di, dj)`; on the torus also the lattice shift `w` with
    /// `node(i, j) + (di, dj) h = node(result) + w · period`.
    pub fn offset(&self, i: usize, j: usize, di: i64, dj: i64) -> Option<(usize, Shift)> {
        let (a, b) = (i as i64 + di, j as i64 + dj);
        if self.periodic {
            let (nx, ny) = (self.nx as i64, self.ny as i64);
            let w = Shift(a.div_euclid(nx) as i32, b.div_euclid(ny) as i32);
            Some((self.index(a.rem_euclid(nx) as usize, b.rem_euclid(ny) as usize), w))
        } else if a < 0 || b < 0 || a >= self.nx as i64 || b >= self.ny as i64 {
            None
        } else {
            Some((self.index(a as usize, b as usize), Shift(0, 0)))
        }
    }

    /// Lower-left node of the cell containing `x` (clamped to the window on the plane).
    pub fn cell_of(&self, x: ChartPoint) -> (usize, usize) {
        let fx = ((x.x - self.origin.x) / self.spacing).floor();
        let fy = ((x.y - self.origin.y) / self.spacing).floor();
        if self.periodic {
            ((fx as i64).rem_euclid(self.nx as i64) as usize, (fy as i64).rem_euclid(self.ny as i64) as usize)
        } else {
            (fx.clamp(0.0, (self.nx - 2) as f64) as usize, fy.clamp(0.0, (self.ny - 2) as f64) as usize)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldOptions {
    /// Relative slack for near-minimal segments.
    pub eta: f64,
    /// Angular separation (radians, in the `g`-angle) of distinct segments.
    pub theta_sep: f64,
    pub max_sweeps: usize,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self { eta: 1e-5, theta_sep: 5f64.to_radians(), max_sweeps: 64 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeRecord {
    pub value: f64,
    pub foot: Option<Foot>,
    /// Closest point of the foot element (lifted relative to the node).
    pub foot_point: ChartPoint,
    /// Unit terminal velocity of the segment from the foot (zero inside N).
    pub direction: Vec2,
    /// Distinct segment clusters among the node's local candidates.
    pub multiplicity: u32,
    pub inside: bool,
}

impl NodeRecord {
    fn empty() -> Self {
        Self {
            value: f64::INFINITY,
            foot: None,
            foot_point: ChartPoint::default(),
            direction: Vec2::ZERO,
            multiplicity: 0,
            inside: false,
        }
    }

    fn set_hit(&mut self, hit: &FootHit) {
        self.value = hit.dist;
        self.foot = Some(hit.foot);
        self.foot_point = hit.point;
    }
}

/// Value of `d_N` at an arbitrary point together with the realizing foot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub value: f64,
    pub hit: Option<FootHit>,
}

#[derive(Clone, Debug)]
pub struct DistanceField {
    pub grid: Grid,
    pub nodes: Vec<NodeRecord>,
    pub options: FieldOptions,
    manifold: Manifold,
    set: ClosedSet,
}

const STENCIL: [(i64, i64); 16] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
    (1, 2),
    (2, 1),
    (-1, 2),
    (-2, 1),
    (1, -2),
    (2, -1),
    (-1, -2),
    (-2, -1),
];

#[derive(PartialEq)]
struct Queued(f64, usize);

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on value, then index
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

fn shifted(f: Foot, w: Shift) -> Foot {
    Foot { element: f.element, shift: Shift(f.shift.0 + w.0, f.shift.1 + w.1) }
}

impl DistanceField {
    /// Computes `d_N` on the grid of spacing `h` over the manifold's window.
    pub fn compute(
        m: &Manifold,
        set: &ClosedSet,
        h: f64,
        options: FieldOptions,
    ) -> Result<DistanceField, DistanceError> {
        let grid = Grid::new(&m.domain, h)?;
        check_resolution(m, &grid)?;
        let kernel = Kernel::new(m, set)?;
        let domain = m.domain;
        let mut nodes: Vec<NodeRecord> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let mut r = NodeRecord::empty();
                if set.contains(&domain, grid.point(k)) {
                    r.inside = true;
                    r.value = 0.0;
                }
                r
            })
            .collect();

        // exact values on nodes near each element
        let reach = 2.0 * h;
        let shifts = domain.shifts(1);
        for (e, element) in set.elements().iter().enumerate() {
            let (lo, hi) = match *element {
                super::Element::Point(p) => (p, p),
                super::Element::Segment(a, b) => {
                    (ChartPoint::new(a.x.min(b.x), a.y.min(b.y)), ChartPoint::new(a.x.max(b.x), a.y.max(b.y)))
                }
            };
            for &s in &shifts {
                let sv = domain.shift_vec(s);
                let i0 = ((lo.x + sv.x - reach - grid.origin.x) / h).ceil().max(0.0) as i64;
                let j0 = ((lo.y + sv.y - reach - grid.origin.y) / h).ceil().max(0.0) as i64;
                let i1 = (((hi.x + sv.x + reach - grid.origin.x) / h).floor() as i64).min(grid.nx as i64 - 1);
                let j1 = (((hi.y + sv.y + reach - grid.origin.y) / h).floor() as i64).min(grid.ny as i64 - 1);
                for j in j0..=j1 {
                    for i in i0..=i1 {
                        let k = grid.index(i as usize, j as usize);
                        let hit = kernel.hit(Foot { element: e, shift: s }, grid.point(k))?;
                        let r = &mut nodes[k];
                        let current =
                            r.foot.map(|f| FootHit { foot: f, dist: r.value, param: 0.0, point: r.foot_point });
                        if current.is_none_or(|c| hit.better(&c)) {
                            let inside = r.inside;
                            r.set_hit(&hit);
                            if inside {
                                r.value = 0.0;
                            }
                        }
                    }
                }
            }
        }
        let mut heap = BinaryHeap::new();
        for (k, r) in nodes.iter().enumerate() {
            if r.foot.is_some() && !r.inside {
                heap.push(Queued(r.value, k));
            }
        }
        if heap.is_empty() {
            // N lies away from every node: seed the node closest to some element by brute force
            let target = set.element(0).midpoint();
            let k = (0..grid.len())
                .min_by(|&a, &b| {
                    domain.chart_dist(grid.point(a), target).total_cmp(&domain.chart_dist(grid.point(b), target))
                })
                .unwrap();
            let x = grid.point(k);
            let mut best: Option<FootHit> = None;
            for f in set.query(&domain, x, f64::MAX.sqrt()) {
                let hit = kernel.hit(f, x)?;
                if best.is_none_or(|b| hit.better(&b)) {
                    best = Some(hit);
                }
            }
            nodes[k].set_hit(&best.ok_or(DistanceError::EmptySet)?);
            heap.push(Queued(nodes[k].value, k));
        }

        // label-correcting propagation
        let homogeneous = m.is_homogeneous();
        while let Some(Queued(v, k)) = heap.pop() {
            if v > nodes[k].value {
                continue;
            }
            let foot = nodes[k].foot.unwrap();
            let (i, j) = grid.ij(k);
            for &(di, dj) in &STENCIL {
                let Some((n, w)) = grid.offset(i, j, di, dj) else { continue };
                if nodes[n].inside {
                    continue;
                }
                let cand_foot = shifted(foot, Shift(-w.0, -w.1));
                let x = grid.point(n);
                let hit = if homogeneous {
                    kernel.hit(cand_foot, x)?
                } else {
                    let from = grid.point(k);
                    let to = from + Vec2::new(di as f64 * h, dj as f64 * h);
                    let shift_back = domain.shift_vec(w);
                    FootHit {
                        foot: cand_foot,
                        dist: v + kernel.chord(from, to)?,
                        param: 0.0,
                        point: nodes[k].foot_point - shift_back,
                    }
                };
                let r = &nodes[n];
                let current = r.foot.map(|f| FootHit { foot: f, dist: r.value, param: 0.0, point: r.foot_point });
                if current.is_none_or(|c| hit.dist < c.dist - 1e-14 * (1.0 + c.dist)) {
                    nodes[n].set_hit(&hit);
                    heap.push(Queued(hit.dist, n));
                }
            }
        }

        let mut field = DistanceField { grid, nodes, options, manifold: m.clone(), set: set.clone() };
        if homogeneous {
            for _ in 0..options.max_sweeps {
                if !field.sweep()? {
                    break;
                }
            }
        }
        field.finish()?;
        Ok(field)
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn set(&self) -> &ClosedSet {
        &self.set
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing
    }

    /// `3 h Lip`, the accuracy scale of the field.
    pub fn field_tol(&self) -> f64 {
        3.0 * self.grid.spacing * self.manifold.max_speed()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.nodes[self.grid.index(i, j)].value
    }

    pub fn max_value(&self) -> f64 {
        self.nodes.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    /// Feet of the node and its 8 neighbours, expressed relative to the node.
    fn neighbour_feet(&self, k: usize, out: &mut Vec<Foot>) {
        let (i, j) = self.grid.ij(k);
        for dj in -1..=1 {
            for di in -1..=1 {
                if let Some((n, w)) = self.grid.offset(i, j, di, dj) {
                    if let Some(f) = self.nodes[n].foot {
                        out.push(shifted(f, w));
                    }
                }
            }
        }
    }

    /// Local candidate hits at `x` seeded by `feet`: chain descent plus nearby elements.
    fn local_hits(&self, kernel: &Kernel, feet: &mut Vec<Foot>, x: ChartPoint) -> Result<Vec<FootHit>, DistanceError> {
        feet.sort_unstable();
        feet.dedup();
        let h = self.grid.spacing;
        let mut hits: Vec<FootHit> = Vec::with_capacity(feet.len() * 2);
        let mut seen: Vec<Foot> = Vec::new();
        for &f in feet.iter() {
            let start = kernel.hit(f, x)?;
            let best = kernel.descend(start, x)?;
            for g in self.set.query(&self.manifold.domain, best.point, 2.0 * h) {
                if !seen.contains(&g) {
                    seen.push(g);
                    hits.push(kernel.descend(kernel.hit(g, x)?, x)?);
                }
            }
            if !seen.contains(&best.foot) {
                seen.push(best.foot);
                hits.push(best);
            }
        }
        hits.sort_by_key(|a| a.foot);
        hits.dedup_by(|a, b| a.foot == b.foot);
        Ok(hits)
    }

    /// One Jacobi sweep; returns whether any foot changed.
    fn sweep(&mut self) -> Result<bool, DistanceError> {
        let kernel = Kernel::new(&self.manifold, &self.set)?;
        let updates: Vec<Option<FootHit>> = (0..self.grid.len())
            .into_par_iter()
            .map(|k| {
                let r = &self.nodes[k];
                if r.inside {
                    return Ok(None);
                }
                let mut feet = Vec::with_capacity(9);
                self.neighbour_feet(k, &mut feet);
                let x = self.grid.point(k);
                let hits = self.local_hits(&kernel, &mut feet, x)?;
                let mut best: Option<FootHit> = None;
                for hit in hits {
                    if best.is_none_or(|b| hit.better(&b)) {
                        best = Some(hit);
                    }
                }
                Ok(best.filter(|b| Some(b.foot) != r.foot || b.dist != r.value))
            })
            .collect::<Result<_, DistanceError>>()?;
        let mut changed = false;
        for (k, u) in updates.into_iter().enumerate() {
            if let Some(hit) = u {
                if Some(hit.foot) != self.nodes[k].foot {
                    changed = true;
                }
                self.nodes[k].set_hit(&hit);
            }
        }
        Ok(changed)
    }

    /// Terminal directions and local multiplicities.
    fn finish(&mut self) -> Result<(), DistanceError> {
        let kernel = Kernel::new(&self.manifold, &self.set)?;
        let opts = self.options;
        let homogeneous = self.manifold.is_homogeneous();
        let results: Vec<(Vec2, u32)> = (0..self.grid.len())
            .into_par_iter()
            .map(|k| {
                let r = &self.nodes[k];
                if r.inside || r.foot.is_none() {
                    return Ok((Vec2::ZERO, 0));
                }
                let x = self.grid.point(k);
                let mut feet = Vec::with_capacity(9);
                self.neighbour_feet(k, &mut feet);
                let mut hits = if homogeneous {
                    self.local_hits(&kernel, &mut feet, x)?
                } else {
                    feet.sort_unstable();
                    feet.dedup();
                    feet.iter().map(|&f| kernel.hit(f, x)).collect::<Result<Vec<_>, _>>()?
                };
                let own = FootHit { foot: r.foot.unwrap(), dist: r.value, param: 0.0, point: r.foot_point };
                let dir = kernel.terminal(&own, x)?;
                let d = hits.iter().map(|h| h.dist).fold(r.value, f64::min);
                hits.retain(|h| h.dist <= d * (1.0 + opts.eta) + 1e-14);
                hits.sort_by(|a, b| a.dist.total_cmp(&b.dist).then(a.foot.cmp(&b.foot)));
                let dirs: Vec<Vec2> = hits.iter().map(|h| kernel.terminal(h, x)).collect::<Result<_, _>>()?;
                let local = self.manifold.local(x)?;
                let (reps, _) = cluster_directions(&local, &dirs, opts.theta_sep, usize::MAX);
                Ok((dir, reps.len().max(1) as u32))
            })
            .collect::<Result<_, DistanceError>>()?;
        for (r, (dir, mult)) in self.nodes.iter_mut().zip(results) {
            r.direction = dir;
            r.multiplicity = mult;
        }
        Ok(())
    }

    /// `d_N(x)` at an arbitrary point, minimizing over the feet of the surrounding nodes.
    pub fn eval(&self, x: ChartPoint) -> Result<Probe, DistanceError> {
        let domain = &self.manifold.domain;
        let x = domain.wrap(x);
        if self.set.contains(domain, x) {
            return Ok(Probe { value: 0.0, hit: None });
        }
        let kernel = Kernel::new(&self.manifold, &self.set)?;
        let (i0, j0) = self.grid.cell_of(x);
        // x expressed relative to node (i0, j0): on the torus the cell index may have wrapped
        let base = self.grid.node(i0, j0);
        let x_rel = if self.grid.periodic { base + domain.displacement(base, x) } else { x };
        let mut feet = Vec::with_capacity(16);
        for dj in -1..=2 {
            for di in -1..=2 {
                if let Some((n, w)) = self.grid.offset(i0, j0, di, dj) {
                    if let Some(f) = self.nodes[n].foot {
                        feet.push(shifted(f, w));
                    }
                }
            }
        }
        let hits = if self.manifold.is_homogeneous() {
            self.local_hits(&kernel, &mut feet, x_rel)?
        } else {
            feet.sort_unstable();
            feet.dedup();
            feet.iter().map(|&f| kernel.hit(f, x_rel)).collect::<Result<Vec<_>, _>>()?
        };
        let mut best: Option<FootHit> = None;
        for hit in hits {
            if best.is_none_or(|b| hit.better(&b)) {
                best = Some(hit);
            }
        }
        let Some(mut best) = best else {
            return Ok(Probe { value: self.interpolate(x), hit: None });
        };
        // report the foot relative to the canonical x
        let lift = x_rel - x;
        if !lift.is_zero() {
            let p = domain.period().unwrap();
            let w = Shift((lift.x / p.x).round() as i32, (lift.y / p.y).round() as i32);
            best.foot = shifted(best.foot, Shift(-w.0, -w.1));
            best.point = best.point - domain.shift_vec(w);
        }
        if !self.manifold.is_homogeneous() {
            return Ok(Probe { value: self.interpolate(x).min(best.dist), hit: Some(best) });
        }
        Ok(Probe { value: best.dist, hit: Some(best) })
    }

    /// Bilinear interpolation of node values.
    pub fn interpolate(&self, x: ChartPoint) -> f64 {
        let x = self.manifold.domain.wrap(x);
        let (i0, j0) = self.grid.cell_of(x);
        let base = self.grid.node(i0, j0);
        let d = if self.grid.periodic { self.manifold.domain.displacement(base, x) } else { x - base };
        let (u, v) = ((d.x / self.grid.spacing).clamp(0.0, 1.0), (d.y / self.grid.spacing).clamp(0.0, 1.0));
        let val = |di, dj| self.grid.offset(i0, j0, di, dj).map(|(n, _)| self.nodes[n].value).unwrap_or(0.0);
        (1.0 - u) * (1.0 - v) * val(0, 0) + u * (1.0 - v) * val(1, 0) + (1.0 - u) * v * val(0, 1) + u * v * val(1, 1)
    }

    /// CSV with header `i,j,x,y,d,multiplicity`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j,x,y,d,multiplicity")?;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let p = self.grid.node(i, j);
                let r = &self.nodes[self.grid.index(i, j)];
                writeln!(w, "{i},{j},{},{},{},{}", p.x, p.y, r.value, r.multiplicity)?;
            }
        }
        Ok(())
    }

    /// Little-endian `u64 nx, u64 ny, f64 spacing, f64 origin_x, f64 origin_y`, then the
    /// values row by row.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.grid.nx as u64).to_le_bytes())?;
        w.write_all(&(self.grid.ny as u64).to_le_bytes())?;
        for v in [self.grid.spacing, self.grid.origin.x, self.grid.origin.y] {
            w.write_all(&v.to_le_bytes())?;
        }
        for r in &self.nodes {
            w.write_all(&r.value.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Contents of a binary field file.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryGrid {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub origin: ChartPoint,
    pub values: Vec<f64>,
}

pub fn read_binary<R: Read>(mut r: R) -> std::io::Result<BinaryGrid> {
    let mut b8 = [0u8; 8];
    let mut next = |r: &mut R| -> std::io::Result<[u8; 8]> {
        r.read_exact(&mut b8)?;
        Ok(b8)
    };
    let nx = u64::from_le_bytes(next(&mut r)?) as usize;
    let ny = u64::from_le_bytes(next(&mut r)?) as usize;
    let spacing = f64::from_le_bytes(next(&mut r)?);
    let ox = f64::from_le_bytes(next(&mut r)?);
    let oy = f64::from_le_bytes(next(&mut r)?);
    let mut values = Vec::with_capacity(nx * ny);
    for _ in 0..nx * ny {
        values.push(f64::from_le_bytes(next(&mut r)?));
    }
    Ok(BinaryGrid { nx, ny, spacing, origin: ChartPoint::new(ox, oy), values })
}

/// Rejects spacings too coarse for the window or for the metric's variation.
fn check_resolution(m: &Manifold, grid: &Grid) -> Result<(), DistanceError> {
    let h = grid.spacing;
    if h > m.domain.scale() / 16.0 {
        return Err(DistanceError::GridTooCoarse(format!(
            "spacing {h} exceeds 1/16 of the window scale {}",
            m.domain.scale()
        )));
    }
    if m.is_homogeneous() {
        return Ok(());
    }
    let stride = (grid.nx / 16).max(1);
    for j in (0..grid.ny).step_by(stride) {
        for i in (0..grid.nx).step_by(stride) {
            let Some((n, _)) = grid.offset(i, j, 1, 1) else { continue };
            let (a, b) = (m.local(grid.node(i, j))?, m.local(grid.point(n))?);
            for k in 0..8 {
                let u = Vec2::from_angle(k as f64 * std::f64::consts::PI / 4.0);
                let (fa, fb) = (a.norm(u), b.norm(u));
                if (fa - fb).abs() > 0.25 * fa.min(fb) {
                    return Err(DistanceError::GridTooCoarse(format!(
                        "metric changes by more than 25% across one cell near {:?}",
                        grid.node(i, j)
                    )));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::Primitive;
    use crate::metric::{make_zermelo, ExprField, MetricSpec, ScalarField, TensorField, VectorField};

    fn points(ps: &[(f64, f64)], eps: f64) -> ClosedSet {
        ClosedSet::new(ps.iter().map(|&(x, y)| Primitive::Point { at: ChartPoint::new(x, y) }).collect(), eps).unwrap()
    }

    #[test]
    fn two_points_euclidean() {
        let d = Domain::plane((-2.0, -2.0), (2.0, 2.0));
        let m = Manifold::new(MetricSpec::euclidean(), d).unwrap();
        let f = DistanceField::compute(
            &m,
            &points(&[(-1.0, 0.0), (1.0, 0.0)], 1.0 / 64.0),
            1.0 / 32.0,
            FieldOptions::default(),
        )
        .unwrap();
        let k = f.grid.index(64, 96);
        assert_eq!(f.grid.point(k), ChartPoint::new(0.0, 1.0));
        assert!((f.nodes[k].value - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(f.nodes[k].multiplicity, 2);
        let p = f.eval(ChartPoint::new(0.5, 0.0)).unwrap();
        assert!((p.value - 0.5).abs() < 1e-14);
        for (k, r) in f.nodes.iter().enumerate() {
            let x = f.grid.point(k);
            let exact = ((x.x + 1.0).hypot(x.y)).min((x.x - 1.0).hypot(x.y));
            assert!((r.value - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_values() {
        let d = Domain::plane((-2.0, -2.0), (2.0, 2.0));
        let m = Manifold::new(MetricSpec::euclidean(), d).unwrap();
        let set =
            ClosedSet::new(vec![Primitive::Circle { center: ChartPoint::default(), radius: 1.0 }], 1.0 / 64.0).unwrap();
        let f = DistanceField::compute(&m, &set, 1.0 / 32.0, FieldOptions::default()).unwrap();
        assert!((f.value(64, 64) - 1.0).abs() < 1e-4);
        assert!((f.value(128, 64) - 1.0).abs() < 1e-12);
        for (k, r) in f.nodes.iter().enumerate() {
            let x = f.grid.point(k);
            let exact = ((x - ChartPoint::default()).chart_len() - 1.0).abs();
            assert!((r.value - exact).abs() < 1e-4, "{x:?}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn randers_point() {
        let d = Domain::plane((-2.0, -2.0), (2.0, 2.0));
        let metric = make_zermelo(TensorField::identity(), VectorField::constant(0.5, 0.0), &d).unwrap();
        let m = Manifold::new(metric, d).unwrap();
        let f = DistanceField::compute(&m, &points(&[(0.0, 0.0)], 1.0 / 64.0), 1.0 / 16.0, FieldOptions::default())
            .unwrap();
        assert!((f.value(48, 32) - 2.0 / 3.0).abs() < 1e-12);
        assert!((f.value(16, 32) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn torus_point() {
        let d = Domain::torus((0.0, 0.0), (1.0, 1.0));
        let m = Manifold::new(MetricSpec::euclidean(), d).unwrap();
        let f = DistanceField::compute(&m, &points(&[(0.0, 0.0)], 1.0 / 64.0), 1.0 / 32.0, FieldOptions::default())
            .unwrap();
        assert!((f.value(16, 16) - 0.5f64.sqrt()).abs() < 1e-14);
        assert_eq!(f.nodes[f.grid.index(16, 16)].multiplicity, 4);
        assert!((f.value(31, 0) - 1.0 / 32.0).abs() < 1e-14);
        let p = f.eval(ChartPoint::new(0.9, 0.95)).unwrap();
        assert!((p.value - 0.1f64.hypot(0.05)).abs() < 1e-14);
    }

    #[test]
    fn filled_disc_is_zero_inside() {
        let d = Domain::plane((-2.0, -2.0), (2.0, 2.0));
        let m = Manifold::new(MetricSpec::euclidean(), d).unwrap();
        let set =
            ClosedSet::new(vec![Primitive::Disc { center: ChartPoint::default(), radius: 1.0 }], 1.0 / 64.0).unwrap();
        let f = DistanceField::compute(&m, &set, 1.0 / 16.0, FieldOptions::default()).unwrap();
        assert_eq!(f.value(32, 32), 0.0);
        assert!(f.nodes[f.grid.index(32, 32)].inside);
        assert!((f.value(64, 32) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn curved_metric_upper_bound() {
        // conformal metric (1 + x²/4)·I: chord lengths bound the distance from above
        let d = Domain::plane((-1.0, -1.0), (1.0, 1.0));
        let c = || ScalarField::Expr(ExprField::parse("1 + x*x/4").unwrap());
        let metric = MetricSpec::riemannian(TensorField { g11: c(), g12: 0.0.into(), g22: c() });
        let m = Manifold::new(metric, d).unwrap();
        let f = DistanceField::compute(&m, &points(&[(0.0, 0.0)], 1.0 / 32.0), 1.0 / 16.0, FieldOptions::default())
            .unwrap();
        let v = f.value(32, 16);
        // along the x axis the conformal factor gives length ∫ sqrt(1 + x²/4) dx
        let exact = {
            let n = 1000;
            (0..n).map(|i| (1.0 + ((i as f64 + 0.5) / n as f64).powi(2) / 4.0).sqrt()).sum::<f64>() / n as f64
        };
        assert!((v - exact).abs() < 5e-3, "{v} vs {exact}");
    }

    #[test]
    fn invalid_grids() {
        let d = Domain::plane((-2.0, -2.0), (2.0, 2.0));
        let m = Manifold::new(MetricSpec::euclidean(), d).unwrap();
        let set = points(&[(0.0, 0.0)], 0.1);
        assert!(matches!(
            DistanceField::compute(&m, &set, 0.3, FieldOptions::default()),
            Err(DistanceError::InvalidGrid(_))
        ));
        assert!(matches!(
            DistanceField::compute(&m, &set, 1.0, FieldOptions::default()),
            Err(DistanceError::GridTooCoarse(_))
        ));
    }

    #[test]
    fn binary_round_trip() {
        let d = Domain::plane((-1.0, -1.0), (1.0, 1.0));
        let m = Manifold::new(MetricSpec::euclidean(), d).unwrap();
        let f = DistanceField::compute(&m, &points(&[(0.0, 0.0)], 0.05), 0.125, FieldOptions::default()).unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 40 + 8 * 17 * 17);
        let g = read_binary(&buf[..]).unwrap();
        assert_eq!((g.nx, g.ny, g.spacing), (17, 17, 0.125));
        assert_eq!(g.values, f.nodes.iter().map(|r| r.value).collect::<Vec<_>>());
        let mut csv = Vec::new();
        f.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("i,j,x,y,d,multiplicity\n0,0,-1,-1,"));
    }
}
