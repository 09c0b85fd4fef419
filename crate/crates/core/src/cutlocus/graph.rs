//! Assembly of cut points into a graph of polyline arcs, the intrinsic metric on it, and
//! branch classification.

use std::collections::{BTreeMap, BinaryHeap, HashMap};

use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::unionfind::UnionFind;

use crate::distance::{g_angle, segment_clusters, DistanceField, Foot, Kernel};
use crate::geom::{ChartPoint, Domain, PointIndex, Shift, Vec2};
use crate::manifold::Manifold;

use super::detect::{dedupe, shifted, special};
use super::{pair_distance, CutError, CutPoint, Detection, NodeKind};

/// Near-minimality slack of the fans used to link special points.
const LINK_ETA: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct GraphNode {
    pub id: usize,
    pub point: CutPoint,
    /// Arc end clipped by the window, not an endpoint of the cut locus.
    pub synthetic: bool,
    /// Number of incident edge ends.
    pub degree: usize,
    pub component: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphEdge {
    pub id: usize,
    pub n0: usize,
    pub n1: usize,
    /// Lifted chart points from node `n0` to node `n1`.
    pub polyline: Vec<ChartPoint>,
    pub len_fwd: f64,
    pub len_bwd: f64,
    pub component: usize,
    /// Cumulative forward and backward lengths from the first vertex.
    cum_fwd: Vec<f64>,
    cum_bwd: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    pub domain: Domain,
    pub spacing: f64,
}

struct Reg {
    id: usize,
    lift: ChartPoint,
    w: Shift,
}

/// Cells (lower-left node indices) whose closed square contains each point.
fn register(field: &DistanceField, points: &[CutPoint]) -> BTreeMap<(usize, usize), Vec<Reg>> {
    let grid = &field.grid;
    let domain = &field.manifold().domain;
    let h = grid.spacing;
    let (cx, cy) =
        if grid.periodic { (grid.nx as i64, grid.ny as i64) } else { (grid.nx as i64 - 1, grid.ny as i64 - 1) };
    let mut cells: BTreeMap<(usize, usize), Vec<Reg>> = BTreeMap::new();
    let span = |f: f64| {
        let b = f.floor();
        let mut out = vec![b as i64];
        if f - b < 1e-7 {
            out.push(b as i64 - 1);
        }
        out
    };
    for (id, p) in points.iter().enumerate() {
        let fx = (p.pos.x - grid.origin.x) / h;
        let fy = (p.pos.y - grid.origin.y) / h;
        for &ci in &span(fx) {
            for &cj in &span(fy) {
                let (ci, cj) = if grid.periodic {
                    (ci.rem_euclid(cx), cj.rem_euclid(cy))
                } else if ci < 0 || cj < 0 || ci >= cx || cj >= cy {
                    continue;
                } else {
                    (ci, cj)
                };
                let corner = grid.node(ci as usize, cj as usize);
                let lift = corner + domain.displacement(corner, p.pos);
                let w = match domain.period() {
                    Some(per) => {
                        Shift(((lift.x - p.pos.x) / per.x).round() as i32, ((lift.y - p.pos.y) / per.y).round() as i32)
                    }
                    None => Shift(0, 0),
                };
                cells.entry((ci as usize, cj as usize)).or_default().push(Reg { id, lift, w });
            }
        }
    }
    cells
}

/// Point equidistant from three feet, by Gauss-Newton from `x0`.
fn equidistant(kernel: &Kernel, feet: [Foot; 3], x0: ChartPoint, h: f64) -> Result<Option<ChartPoint>, CutError> {
    let res = |x: ChartPoint| -> Result<(f64, f64, f64), CutError> {
        let d: Vec<f64> =
            feet.iter().map(|&f| Ok(kernel.descend(kernel.hit(f, x)?, x)?.dist)).collect::<Result<_, CutError>>()?;
        Ok((d[0] - d[1], d[0] - d[2], d[0]))
    };
    let e = 1e-4 * h;
    let mut x = x0;
    for _ in 0..50 {
        let (r1, r2, _) = res(x)?;
        let (a1, a2, _) = res(x + Vec2::new(e, 0.0))?;
        let (b1, b2, _) = res(x + Vec2::new(0.0, e))?;
        let (j11, j21, j12, j22) = ((a1 - r1) / e, (a2 - r2) / e, (b1 - r1) / e, (b2 - r2) / e);
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-14 {
            return Ok(None);
        }
        let mut step = Vec2::new(-(j22 * r1 - j12 * r2) / det, -(-j21 * r1 + j11 * r2) / det);
        let len = step.chart_len();
        if len > h {
            step = step * (h / len);
        }
        x = x + step;
        if len < 1e-13 * (1.0 + x.x.abs() + x.y.abs()) {
            break;
        }
    }
    let (r1, r2, d) = res(x)?;
    let ok = r1.abs().max(r2.abs()) <= 1e-9 * (1.0 + d) && (x - x0).chart_len() <= 1.5 * h;
    Ok(ok.then_some(x))
}

/// Junction points of cells whose vertices carry three or more direction families.
fn junctions(field: &DistanceField, points: &[CutPoint]) -> Result<Vec<CutPoint>, CutError> {
    let m = field.manifold();
    let h = field.spacing();
    let theta = field.options.theta_sep;
    let kernel = Kernel::new(m, field.set())?;
    let mut out = Vec::new();
    for ((ci, cj), regs) in register(field, points) {
        if regs.iter().any(|r| special(&points[r.id])) {
            continue;
        }
        let centre = field.grid.node(ci, cj) + Vec2::new(0.5 * h, 0.5 * h);
        let local = m.local(centre)?;
        let mut families: Vec<(Foot, Vec2)> = Vec::new();
        for r in &regs {
            let p = &points[r.id];
            for (f, d) in p.feet.iter().zip(&p.directions) {
                if families.iter().all(|(_, e)| g_angle(&local, *e, *d) > 2.0 * theta) {
                    families.push((shifted(*f, r.w), *d));
                }
            }
        }
        if families.len() < 3 {
            continue;
        }
        let feet = [families[0].0, families[1].0, families[2].0];
        let Some(x) = equidistant(&kernel, feet, centre, h)? else { continue };
        let c = segment_clusters(field, x, field.options.eta, 64)?;
        if c.count() >= 3 || c.continuum {
            out.push(CutPoint::new(m, m.domain.wrap(x), &c, theta, Detection::Junction)?);
        }
    }
    Ok(out)
}

/// Number of directions of `u` within `tol` (`g`-angle at `u`) of some direction in `dirs`.
fn matches(m: &Manifold, u: &CutPoint, dirs: &[Vec2], tol: f64) -> Result<usize, CutError> {
    let local = m.local(u.pos)?;
    Ok(u.directions.iter().filter(|d| dirs.iter().any(|e| g_angle(&local, **d, *e) <= tol)).count())
}

/// Lifted displacement along the shortest path from `a` to `b` in `adj`, if its chart length
/// is below `limit`.
fn path_within(adj: &[Vec<(usize, Vec2)>], a: usize, b: usize, limit: f64) -> Option<Vec2> {
    #[derive(PartialEq)]
    struct Q(f64, usize);
    impl Eq for Q {}
    impl PartialOrd for Q {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Q {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
        }
    }
    let mut dist: HashMap<usize, (f64, Vec2)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(a, (0.0, Vec2::ZERO));
    heap.push(Q(0.0, a));
    while let Some(Q(d, v)) = heap.pop() {
        let (dv, lift) = dist[&v];
        if v == b {
            return Some(lift);
        }
        if d > dv {
            continue;
        }
        for &(n, disp) in &adj[v] {
            let nd = d + disp.chart_len();
            if nd <= limit && dist.get(&n).is_none_or(|&(o, _)| nd < o) {
                dist.insert(n, (nd, lift + disp));
                heap.push(Q(nd, n));
            }
        }
    }
    None
}

/// Chains cut points into polyline arcs. Points carrying three or more clusters or a
/// continuum absorb the points within `1.5h` and become nodes; other points are linked
/// within grid cells when they share two segment directions. Contractible cycles shorter
/// than `40h` are broken (local tree); longer or non-contractible ones are kept.
pub fn extract_graph(points: Vec<CutPoint>, field: &DistanceField) -> Result<CutGraph, CutError> {
    let m = field.manifold();
    let domain = m.domain;
    let h = field.spacing();
    let theta = field.options.theta_sep;

    let mut points = points;
    let extra = junctions(field, &points)?;
    points.extend(extra);
    let (mut specials, regular): (Vec<CutPoint>, Vec<CutPoint>) = points.into_iter().partition(special);
    dedupe(field, &mut specials, 1.5 * h);
    let mut index = PointIndex::new(&domain, h);
    for (k, s) in specials.iter().enumerate() {
        index.insert(k, s.pos);
    }
    let mut verts = Vec::with_capacity(specials.len() + regular.len());
    for p in regular {
        if index.near(p.pos, 1.5 * h).all(|k| domain.chart_dist(specials[k].pos, p.pos) > 1.5 * h) {
            verts.push(p);
        }
    }
    let n_special = specials.len();
    specials.append(&mut verts);
    let verts = specials;

    // candidate links
    let cells = register(field, &verts);
    let mut cand: BTreeMap<(usize, usize), Vec2> = BTreeMap::new();
    for ((ci, cj), regs) in &cells {
        let count = regs.iter().filter(|r| !special(&verts[r.id])).count();
        if count > 8 {
            let c = field.grid.node(*ci, *cj);
            return Err(CutError::AmbiguousJunction { x: c.x, y: c.y, count });
        }
        for (a, ra) in regs.iter().enumerate() {
            for rb in &regs[a + 1..] {
                let (u, v) = (&verts[ra.id], &verts[rb.id]);
                if ra.id == rb.id || special(u) || special(v) {
                    continue;
                }
                if matches(m, u, &v.directions, 2.0 * theta)? >= 2 {
                    let (i, j, d) = if ra.id < rb.id {
                        (ra.id, rb.id, rb.lift - ra.lift)
                    } else {
                        (rb.id, ra.id, ra.lift - rb.lift)
                    };
                    cand.entry((i, j)).or_insert(d);
                }
            }
        }
    }
    let mut all = PointIndex::new(&domain, h);
    for (k, v) in verts.iter().enumerate() {
        all.insert(k, v.pos);
    }
    for s in 0..n_special {
        // specials sit off their exact position by the bisection accuracy, which trims the
        // near-minimal fan; links use a looser slack
        let fan = segment_clusters(field, verts[s].pos, LINK_ETA, 64)?.all_directions;
        let near: Vec<usize> = all.near(verts[s].pos, 3.0 * h).collect();
        for u in near {
            if u == s || domain.chart_dist(verts[u].pos, verts[s].pos) > 3.0 * h {
                continue;
            }
            if matches(m, &verts[u], &fan, 2.0 * theta)? >= 2 {
                let (i, j) = (s.min(u), s.max(u));
                cand.entry((i, j)).or_insert(domain.displacement(verts[i].pos, verts[j].pos));
            }
        }
    }

    // spanning forest by length, keeping only long cycles
    let mut order: Vec<((usize, usize), Vec2)> = cand.into_iter().collect();
    order.sort_by(|a, b| a.1.chart_len().total_cmp(&b.1.chart_len()).then(a.0.cmp(&b.0)));
    let mut uf = UnionFind::<usize>::new(verts.len());
    let mut adj: Vec<Vec<(usize, Vec2)>> = vec![Vec::new(); verts.len()];
    for ((i, j), d) in order {
        if !uf.union(i, j) {
            // a short contractible cycle is tracing noise; cycles winding the torus are kept
            if let Some(lift) = path_within(&adj, i, j, 40.0 * h) {
                if (lift - d).chart_len() < 0.5 * h {
                    continue;
                }
            }
        }
        adj[i].push((j, d));
        adj[j].push((i, -d));
    }

    let keep: Vec<bool> = (0..verts.len()).map(|k| !adj[k].is_empty() || k < n_special).collect();
    compress(m, &domain, h, &verts, &adj, &keep, n_special)
}

fn compress(
    m: &Manifold,
    domain: &Domain,
    h: f64,
    verts: &[CutPoint],
    adj: &[Vec<(usize, Vec2)>],
    keep: &[bool],
    n_special: usize,
) -> Result<CutGraph, CutError> {
    let is_node = |v: usize| keep[v] && (adj[v].len() != 2 || v < n_special);
    let mut node_of: Vec<Option<usize>> = vec![None; verts.len()];
    let mut nodes: Vec<GraphNode> = Vec::new();
    let add_node = |v: usize, nodes: &mut Vec<GraphNode>, node_of: &mut Vec<Option<usize>>| {
        let id = nodes.len();
        node_of[v] = Some(id);
        let synthetic = adj[v].len() == 1 && domain.boundary_distance(verts[v].pos) <= 2.0 * h;
        nodes.push(GraphNode { id, point: verts[v].clone(), synthetic, degree: 0, component: 0 });
        id
    };
    for v in 0..verts.len() {
        if is_node(v) {
            add_node(v, &mut nodes, &mut node_of);
        }
    }
    let mut used: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut chains: Vec<(usize, usize, Vec<ChartPoint>)> = Vec::new();
    let walk = |start: usize,
                node_of: &Vec<Option<usize>>,
                used: &mut std::collections::HashSet<(usize, usize)>,
                chains: &mut Vec<(usize, usize, Vec<ChartPoint>)>| {
        for &(first, d0) in &adj[start] {
            if used.contains(&key(start, first)) {
                continue;
            }
            used.insert(key(start, first));
            let mut poly = vec![verts[start].pos, verts[start].pos + d0];
            let (mut prev, mut cur) = (start, first);
            while node_of[cur].is_none() {
                let Some(&(next, d)) =
                    adj[cur].iter().find(|(n, _)| !used.contains(&key(cur, *n)) && (*n != prev || adj[cur].len() == 1))
                else {
                    break;
                };
                used.insert(key(cur, next));
                poly.push(*poly.last().unwrap() + d);
                prev = cur;
                cur = next;
            }
            chains.push((node_of[start].unwrap(), node_of[cur].unwrap_or(node_of[start].unwrap()), poly));
        }
    };
    for v in 0..verts.len() {
        if node_of[v].is_some() {
            walk(v, &node_of, &mut used, &mut chains);
        }
    }
    // pure cycles
    for v in 0..verts.len() {
        if keep[v] && node_of[v].is_none() && adj[v].iter().any(|(n, _)| !used.contains(&key(v, *n))) {
            add_node(v, &mut nodes, &mut node_of);
            walk(v, &node_of, &mut used, &mut chains);
        }
    }

    let mut uf = UnionFind::<usize>::new(nodes.len());
    let mut edges = Vec::with_capacity(chains.len());
    for (id, (n0, n1, polyline)) in chains.into_iter().enumerate() {
        let mut cum_fwd = vec![0.0];
        let mut cum_bwd = vec![0.0];
        for w in polyline.windows(2) {
            cum_fwd.push(cum_fwd.last().unwrap() + pair_distance(m, w[0], w[1])?);
            cum_bwd.push(cum_bwd.last().unwrap() + pair_distance(m, w[1], w[0])?);
        }
        nodes[n0].degree += 1;
        nodes[n1].degree += 1;
        uf.union(n0, n1);
        edges.push(GraphEdge {
            id,
            n0,
            n1,
            len_fwd: *cum_fwd.last().unwrap(),
            len_bwd: *cum_bwd.last().unwrap(),
            polyline,
            component: 0,
            cum_fwd,
            cum_bwd,
        });
    }
    let labels = uf.into_labeling();
    let mut comp_ids: BTreeMap<usize, usize> = BTreeMap::new();
    for n in nodes.iter_mut() {
        let next = comp_ids.len();
        n.component = *comp_ids.entry(labels[n.id]).or_insert(next);
    }
    for e in edges.iter_mut() {
        e.component = nodes[e.n0].component;
    }
    Ok(CutGraph { nodes, edges, domain: *domain, spacing: h })
}

/// Position on the graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Location {
    Node(usize),
    /// Edge, segment index and parameter in `[0, 1]` along that segment.
    Edge(usize, usize, f64),
}

impl CutGraph {
    pub fn component_count(&self) -> usize {
        self.nodes.iter().map(|n| n.component + 1).max().unwrap_or(0)
    }

    /// Polyline vertices (wrapped) and the segments between them; edge ends map to node ids.
    pub fn skeleton(&self) -> (Vec<ChartPoint>, Vec<(usize, usize)>) {
        let mut pts: Vec<ChartPoint> = self.nodes.iter().map(|n| n.point.pos).collect();
        let mut segs = Vec::new();
        for e in &self.edges {
            let last = e.polyline.len() - 1;
            let mut prev = e.n0;
            for (k, p) in e.polyline.iter().enumerate().skip(1) {
                let id = if k == last {
                    e.n1
                } else {
                    pts.push(self.domain.wrap(*p));
                    pts.len() - 1
                };
                segs.push((prev, id));
                prev = id;
            }
        }
        (pts, segs)
    }

    /// Nearest graph position within `2h` of `y`.
    pub fn locate(&self, y: ChartPoint) -> Result<Location, CutError> {
        let mut best = (f64::INFINITY, Location::Node(0));
        for n in &self.nodes {
            let d = self.domain.chart_dist(n.point.pos, y);
            if d < best.0 {
                best = (d, Location::Node(n.id));
            }
        }
        for e in &self.edges {
            for (k, w) in e.polyline.windows(2).enumerate() {
                let (a, b) = (w[0], w[1]);
                let yl = a + self.domain.displacement(a, y);
                let ab = b - a;
                let len2 = ab.dot(ab);
                let s = if len2 > 0.0 { ((yl - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
                let d = ((a + ab * s) - yl).chart_len();
                if d < best.0 - 1e-12 * self.spacing {
                    best = (d, Location::Edge(e.id, k, s));
                }
            }
        }
        if best.0 > 2.0 * self.spacing {
            return Err(CutError::PointNotOnGraph(y.x, y.y));
        }
        Ok(match best.1 {
            Location::Edge(e, 0, s) if s == 0.0 => Location::Node(self.edges[e].n0),
            Location::Edge(e, k, s) if s == 1.0 && k + 2 == self.edges[e].polyline.len() => {
                Location::Node(self.edges[e].n1)
            }
            l => l,
        })
    }

    /// Forward and backward length from the start of edge `e` to the location.
    fn along(&self, e: usize, k: usize, s: f64) -> (f64, f64) {
        let ed = &self.edges[e];
        (
            ed.cum_fwd[k] + s * (ed.cum_fwd[k + 1] - ed.cum_fwd[k]),
            ed.cum_bwd[k] + s * (ed.cum_bwd[k + 1] - ed.cum_bwd[k]),
        )
    }
}

/// Intrinsic distance `δ(y1, y2)`: shortest directed path along the graph, `+∞` when
/// `y2` is not reachable from `y1`.
pub fn intrinsic_distance(g: &CutGraph, y1: ChartPoint, y2: ChartPoint) -> Result<f64, CutError> {
    let (l1, l2) = (g.locate(y1)?, g.locate(y2)?);
    let mut dg: DiGraph<(), f64> = DiGraph::new();
    let ids: Vec<NodeIndex> = g.nodes.iter().map(|_| dg.add_node(())).collect();
    for e in &g.edges {
        dg.add_edge(ids[e.n0], ids[e.n1], e.len_fwd);
        dg.add_edge(ids[e.n1], ids[e.n0], e.len_bwd);
    }
    let src = match l1 {
        Location::Node(n) => ids[n],
        Location::Edge(e, k, s) => {
            let v = dg.add_node(());
            let (f, b) = g.along(e, k, s);
            let ed = &g.edges[e];
            dg.add_edge(v, ids[ed.n1], ed.len_fwd - f);
            dg.add_edge(v, ids[ed.n0], b);
            v
        }
    };
    let dst = match l2 {
        Location::Node(n) => ids[n],
        Location::Edge(e, k, s) => {
            let v = dg.add_node(());
            let (f, b) = g.along(e, k, s);
            let ed = &g.edges[e];
            dg.add_edge(ids[ed.n0], v, f);
            dg.add_edge(ids[ed.n1], v, ed.len_bwd - b);
            if let Location::Edge(e1, k1, s1) = l1 {
                if e1 == e {
                    let (f1, b1) = g.along(e1, k1, s1);
                    dg.add_edge(src, v, if f1 <= f { f - f1 } else { b1 - b });
                }
            }
            v
        }
    };
    if src == dst {
        return Ok(0.0);
    }
    let dist = petgraph::algo::dijkstra(&dg, src, Some(dst), |e| e.weight().max(0.0));
    Ok(dist.get(&dst).copied().unwrap_or(f64::INFINITY))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchInfo {
    pub node: usize,
    pub pos: ChartPoint,
    pub min_mu: f64,
    /// Smallest `n` with `min_mu ≤ 1 − 1/n`.
    pub n: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub kinds: Vec<NodeKind>,
    pub branches: Vec<BranchInfo>,
    pub endpoints: usize,
    /// Ball radius of the local finiteness count.
    pub r0: f64,
    /// Largest number of branch points in a ball of radius `r0` centred at a branch point.
    pub max_branches_per_ball: usize,
}

pub fn classify(g: &CutGraph) -> Classification {
    let kinds: Vec<NodeKind> = g.nodes.iter().map(|n| n.point.kind).collect();
    let mut branches = Vec::new();
    for n in &g.nodes {
        if n.point.kind != NodeKind::Branch {
            continue;
        }
        let min_mu = n.point.sectors.iter().map(|s| s.mu).fold(f64::INFINITY, f64::min);
        let n_index = if min_mu < 1.0 { (1.0 / (1.0 - min_mu)).ceil().max(1.0) as u64 } else { u64::MAX };
        branches.push(BranchInfo { node: n.id, pos: n.point.pos, min_mu, n: n_index });
    }
    let r0 = 10.0 * g.spacing;
    let max_branches_per_ball = branches
        .iter()
        .map(|b| branches.iter().filter(|c| g.domain.chart_dist(b.pos, c.pos) <= r0).count())
        .max()
        .unwrap_or(0);
    let endpoints = g.nodes.iter().filter(|n| n.point.kind == NodeKind::Endpoint && !n.synthetic).count();
    Classification { kinds, branches, endpoints, r0, max_branches_per_ball }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutlocus::cut_locus;
    use crate::distance::{ClosedSet, FieldOptions, Primitive};
    use crate::metric::MetricSpec;

    fn field(domain: Domain, prims: Vec<Primitive>, h: f64) -> DistanceField {
        let m = Manifold::new(MetricSpec::euclidean(), domain).unwrap();
        let set = ClosedSet::new(prims, h / 2.0).unwrap();
        DistanceField::compute(&m, &set, h, FieldOptions::default()).unwrap()
    }

    fn pts(ps: &[(f64, f64)]) -> Vec<Primitive> {
        ps.iter().map(|&(x, y)| Primitive::Point { at: ChartPoint::new(x, y) }).collect()
    }

    #[test]
    fn two_points_bisector() {
        let h = 1.0 / 16.0;
        let f = field(Domain::plane((-2.0, -2.0), (2.0, 2.0)), pts(&[(-1.0, 0.0), (1.0, 0.0)]), h);
        let g = cut_locus(&f).unwrap();
        assert_eq!(g.edges.len(), 1, "{:?}", g.nodes.iter().map(|n| n.point.pos).collect::<Vec<_>>());
        assert!(g.nodes.iter().all(|n| n.synthetic));
        for p in &g.edges[0].polyline {
            assert!(p.x.abs() < 2.0 * h);
        }
        let d = intrinsic_distance(&g, ChartPoint::new(0.0, 0.2), ChartPoint::new(0.0, 0.7)).unwrap();
        assert!((d - 0.5).abs() < 1e-9, "{d}");
        assert!((g.edges[0].len_fwd - 4.0).abs() < 1e-9);
        assert!(classify(&g).branches.is_empty());
        assert!(matches!(g.locate(ChartPoint::new(1.0, 1.0)), Err(CutError::PointNotOnGraph(..))));
        let s = &g.edges[0].polyline;
        let mid = s[s.len() / 2];
        let q = f.manifold().local(mid).unwrap();
        let node = g.nodes.iter().find(|n| n.point.kind == NodeKind::Regular);
        assert!(node.is_some() || q.a[0] > 0.0);
    }

    #[test]
    fn single_point_has_no_cut_locus() {
        let f = field(Domain::plane((-1.0, -1.0), (1.0, 1.0)), pts(&[(0.0, 0.0)]), 1.0 / 16.0);
        let g = cut_locus(&f).unwrap();
        assert!(g.nodes.is_empty() && g.edges.is_empty());
    }

    #[test]
    fn circle_centre_is_one_continuum_node() {
        let h = 1.0 / 32.0;
        let f = field(
            Domain::plane((-1.5, -1.5), (1.5, 1.5)),
            vec![Primitive::Circle { center: ChartPoint::default(), radius: 1.0 }],
            h,
        );
        let g = cut_locus(&f).unwrap();
        let interior: Vec<_> = g.nodes.iter().filter(|n| !n.synthetic).collect();
        assert_eq!(interior.len(), 1, "{:?}", interior.iter().map(|n| n.point.pos).collect::<Vec<_>>());
        assert!(interior[0].point.continuum);
        assert!(interior[0].point.pos.x.hypot(interior[0].point.pos.y) < 2.0 * h);
    }

    #[test]
    fn three_points_branch() {
        let h = 1.0 / 16.0;
        let f = field(Domain::plane((-2.0, -2.0), (2.0, 2.0)), pts(&[(-1.0, -0.5), (1.0, -0.5), (0.2, 1.0)]), h);
        let g = cut_locus(&f).unwrap();
        let c = classify(&g);
        assert_eq!(c.branches.len(), 1);
        assert_eq!(g.edges.len(), 3);
        // circumcentre
        let b = c.branches[0].pos;
        let d1 = (b - ChartPoint::new(-1.0, -0.5)).chart_len();
        let d2 = (b - ChartPoint::new(1.0, -0.5)).chart_len();
        let d3 = (b - ChartPoint::new(0.2, 1.0)).chart_len();
        assert!((d1 - d2).abs() < 1e-6 && (d1 - d3).abs() < 1e-6);
        assert_eq!(g.nodes[c.branches[0].node].degree, 3);
    }

    #[test]
    fn torus_cross() {
        let h = 1.0 / 32.0;
        let f = field(Domain::torus((0.0, 0.0), (1.0, 1.0)), pts(&[(0.0, 0.0)]), h);
        let g = cut_locus(&f).unwrap();
        assert_eq!(
            g.nodes.len(),
            1,
            "{:?}",
            g.nodes.iter().map(|n| (n.point.pos, n.point.multiplicity)).collect::<Vec<_>>()
        );
        let n = &g.nodes[0];
        assert_eq!(n.point.multiplicity, 4);
        assert!((n.point.pos - ChartPoint::new(0.5, 0.5)).chart_len() < 1e-6);
        assert_eq!(n.degree, 4);
        assert_eq!(g.edges.len(), 2);
        assert_eq!(n.point.sectors.len(), 4);
        assert!(n.point.sectors.iter().all(|s| s.mu.abs() < 1e-6));
        let d = intrinsic_distance(&g, ChartPoint::new(0.5, 0.0), ChartPoint::new(0.0, 0.5)).unwrap();
        assert!((d - 1.0).abs() < 0.02, "{d}");
        assert_eq!(classify(&g).branches.len(), 1);
    }

    #[test]
    fn components_are_unreachable() {
        let h = 1.0 / 16.0;
        // two far pairs give two parallel bisectors
        let f =
            field(Domain::plane((-2.0, -2.0), (2.0, 2.0)), pts(&[(-1.5, 0.0), (-0.5, 0.0), (0.5, 0.0), (1.5, 0.0)]), h);
        let g = cut_locus(&f).unwrap();
        assert_eq!(g.component_count(), 3);
        let d = intrinsic_distance(&g, ChartPoint::new(-1.0, 0.5), ChartPoint::new(0.0, 0.5)).unwrap();
        assert!(d.is_infinite());
    }
}
