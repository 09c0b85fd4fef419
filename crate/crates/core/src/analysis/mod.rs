//! Executable checks of the structure results: differentiability of `d_N`, lengths, level
//! sets, the cut locus as a local tree, the intrinsic metric and the Lipschitz calculus.

mod levels;

pub use levels::{level_sets, LevelCurve, LevelSet, CRITICAL_FAN, CRITICAL_TOL};

use petgraph::unionfind::UnionFind;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::cutlocus::{arc_length, classify, intrinsic_distance, CutError, CutGraph, CutPoint};
use crate::distance::{distance, reversibility, segment_clusters, DistanceError, DistanceField};
use crate::geodesic::{self, GeodesicError, GeodesicPath, IntegrateOptions};
use crate::geom::{ChartPoint, PointIndex, Vec2};
use crate::manifold::Manifold;
use crate::metric::MetricError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("level {t} outside (0, {max})")]
    TOutOfRange { t: f64, max: f64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error(transparent)]
    Cut(#[from] CutError),
}

fn finite<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(serialize_with = "finite")]
    pub residual: f64,
    #[serde(serialize_with = "finite")]
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Check {
    /// Passes iff `residual ≤ tolerance`.
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, residual, tolerance, detail: detail.into() }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Numeric evidence behind a report, written out as CSV.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Self { name: name.to_string(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl VerificationReport {
    pub fn new(scenario: impl Into<String>) -> Self {
        Self { scenario: scenario.into(), ..Default::default() }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.artifacts.extend(other.artifacts);
        self.tables.extend(other.tables);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// One line per check.
    pub fn to_text(&self) -> String {
        let mut s = format!("scenario {}\n", self.scenario);
        for c in &self.checks {
            let tag = if c.passed() { "PASS" } else { "FAIL" };
            s.push_str(&format!("{tag} {} residual={:.6e} tol={:.6e} {}\n", c.name, c.residual, c.tolerance, c.detail));
        }
        s
    }
}

/// Polyline vertices of the cut graph with their segments and components.
struct Skeleton {
    pts: Vec<ChartPoint>,
    segs: Vec<(usize, usize)>,
    comp: Vec<usize>,
    adj: Vec<Vec<usize>>,
    nodes: usize,
}

impl Skeleton {
    fn new(g: &CutGraph) -> Self {
        let (pts, segs) = g.skeleton();
        let mut uf = UnionFind::<usize>::new(pts.len());
        let mut adj = vec![Vec::new(); pts.len()];
        for &(a, b) in &segs {
            uf.union(a, b);
            adj[a].push(b);
            adj[b].push(a);
        }
        let comp = uf.into_labeling();
        Self { pts, segs, comp, adj, nodes: g.nodes.len() }
    }
}

/// Unit terminal velocity of the nearest N-segment at `x`, if unique.
fn unique_direction(field: &DistanceField, x: ChartPoint) -> Result<Option<Vec2>, AnalysisError> {
    let c = segment_clusters(field, x, field.options.eta, 64)?;
    if c.count() != 1 {
        return Ok(None);
    }
    let m = field.manifold();
    let d = c.directions[0];
    Ok(Some(d * (1.0 / m.norm(x, d)?)))
}

/// Differentiability of `d_N` away from C_N and N (finite-difference gradient against
/// `v ↦ g_X(X, v)`), and a non-differentiability witness at multi-segment nodes.
pub fn verify_theorem_a(
    field: &DistanceField,
    graph: &CutGraph,
    samples: usize,
    seed: u64,
    witness_min: f64,
) -> Result<VerificationReport, AnalysisError> {
    let m = field.manifold();
    let h = field.spacing();
    let grid = &field.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pts, _) = graph.skeleton();
    let mut index = PointIndex::new(&m.domain, h);
    for (k, p) in pts.iter().enumerate() {
        index.insert(k, *p);
    }
    let far_from_cut = |x: ChartPoint| index.near(x, 3.0 * h).all(|k| m.domain.chart_dist(pts[k], x) >= 3.0 * h);
    let regular: Vec<usize> = (0..grid.len())
        .filter(|&k| {
            let r = &field.nodes[k];
            let x = grid.point(k);
            !r.inside
                && r.multiplicity == 1
                && r.value >= 3.0 * h * m.max_speed()
                && m.domain.boundary_distance(x) > h
                && far_from_cut(x)
        })
        .collect();
    let witnesses: Vec<usize> = (0..grid.len())
        .filter(|&k| {
            !field.nodes[k].inside && field.nodes[k].multiplicity >= 2 && m.domain.boundary_distance(grid.point(k)) > h
        })
        .collect();
    let pick = |pool: &[usize], n: usize, rng: &mut ChaCha8Rng| -> Vec<usize> {
        let mut s: Vec<usize> = sample(rng, pool.len(), n.min(pool.len())).into_iter().map(|i| pool[i]).collect();
        s.sort_unstable();
        s
    };
    let delta = h / 16.0;
    let e = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
    let d = |x: ChartPoint| -> Result<f64, AnalysisError> { Ok(field.eval(x)?.value) };

    let mut table = Table::new("theorem_a", &["x", "y", "witness", "residual", "gap"]);
    let mut ok = 0usize;
    let reg = pick(&regular, samples, &mut rng);
    let mut worst = 0.0f64;
    for &k in &reg {
        let x = grid.point(k);
        let Some(xv) = unique_direction(field, x)? else { continue };
        let local = m.local(x)?;
        let mut res = 0.0f64;
        for v in e {
            let fd = (d(x + v * delta)? - d(x - v * delta)?) / (2.0 * delta);
            res = res.max((fd - local.g_pair(xv, v)).abs() / local.norm(v));
        }
        worst = worst.max(res);
        if res < 1e-3 {
            ok += 1;
        }
        table.rows.push(vec![x.x, x.y, 0.0, res, 0.0]);
    }
    let frac = if reg.is_empty() { 1.0 } else { ok as f64 / reg.len() as f64 };
    let mut report = VerificationReport::default();
    report.push(Check::new(
        "gradient_functional_match",
        1.0 - frac,
        0.01,
        format!("{ok}/{} regular nodes with residual < 1e-3, worst {worst:.3e}", reg.len()),
    ));

    let wit = pick(&witnesses, samples, &mut rng);
    let mut hit = 0usize;
    let mut min_gap = f64::INFINITY;
    for &k in &wit {
        let x = grid.point(k);
        let dx = d(x)?;
        let mut gap = 0.0f64;
        for v in e {
            let fwd = (d(x + v * delta)? - dx) / delta;
            let bwd = (dx - d(x - v * delta)?) / delta;
            gap = gap.max((fwd - bwd).abs());
        }
        min_gap = min_gap.min(gap);
        if gap >= witness_min {
            hit += 1;
        }
        table.rows.push(vec![x.x, x.y, 1.0, 0.0, gap]);
    }
    let frac = if wit.is_empty() { 1.0 } else { hit as f64 / wit.len() as f64 };
    report.push(Check::new(
        "nondifferentiability_witness",
        1.0 - frac,
        0.0,
        format!("{hit}/{} multi-segment nodes with one-sided gap >= {witness_min}, min {min_gap:.3}", wit.len()),
    ));
    report.tables.push(table);
    Ok(report)
}

/// A sampled curve with velocities.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub times: Vec<f64>,
    pub points: Vec<ChartPoint>,
    pub velocities: Vec<Vec2>,
}

impl From<&GeodesicPath> for Curve {
    fn from(p: &GeodesicPath) -> Self {
        Curve {
            times: p.samples.iter().map(|s| s.t).collect(),
            points: p.samples.iter().map(|s| s.lift).collect(),
            velocities: p.samples.iter().map(|s| s.velocity).collect(),
        }
    }
}

/// `count` seeded unit-speed geodesics of length up to `length` inside the window.
pub fn geodesic_curves(m: &Manifold, count: usize, length: f64, seed: u64) -> Result<Vec<Curve>, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, ext) = m.domain.bounds();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 50 * count {
        attempts += 1;
        let p = ChartPoint::new(lo.x + ext.x * rng.gen_range(0.1..0.9), lo.y + ext.y * rng.gen_range(0.1..0.9));
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = m.local(p)?.unit_at_angle(theta);
        let (path, _) = geodesic::integrate_truncated(m, p, v, length, IntegrateOptions::default())?;
        if path.samples.len() >= 3 && path.samples.last().unwrap().t > 0.1 * length {
            out.push(Curve::from(&path));
        }
    }
    Ok(out)
}

/// Partition length `l` against the integral length `L` of each curve.
pub fn verify_lengths(m: &Manifold, curves: &[Curve], tol: f64) -> Result<VerificationReport, AnalysisError> {
    let mut worst = 0.0f64;
    let mut speed = 0.0f64;
    let mut table = Table::new("lengths", &["curve", "l", "L", "rel"]);
    for (k, c) in curves.iter().enumerate() {
        let l = arc_length(m, &c.points)?;
        let mut big_l = 0.0;
        for i in 1..c.points.len() {
            let a = m.norm(m.domain.wrap(c.points[i - 1]), c.velocities[i - 1])?;
            let b = m.norm(m.domain.wrap(c.points[i]), c.velocities[i])?;
            big_l += 0.5 * (a + b) * (c.times[i] - c.times[i - 1]);
        }
        for (p, v) in c.points.iter().zip(&c.velocities) {
            speed = speed.max((m.norm(m.domain.wrap(*p), *v)? - 1.0).abs());
        }
        let rel = (l - big_l).abs() / big_l;
        worst = worst.max(rel);
        table.rows.push(vec![k as f64, l, big_l, rel]);
    }
    let mut r = VerificationReport::default();
    r.push(Check::new("length_l_equals_L", worst, tol, format!("{} curves, max |F(v)-1| = {speed:.2e}", curves.len())));
    r.tables.push(table);
    Ok(r)
}

/// Level-set checks at the requested levels: multiplicity at most two at non-critical levels
/// and a component count stable under `t ± h/2`. Levels within `2h` of a critical level are
/// not tested.
pub fn verify_levels(
    field: &DistanceField,
    levels: &[f64],
) -> Result<(VerificationReport, Vec<LevelSet>), AnalysisError> {
    let h = field.spacing();
    let sets: Vec<LevelSet> = levels.iter().map(|&t| level_sets(field, t)).collect::<Result<_, _>>()?;
    let flagged: Vec<f64> = sets.iter().filter(|s| s.critical).map(|s| s.t).collect();
    let mut worst_mult = 0usize;
    let mut unstable = 0usize;
    let mut tested = 0usize;
    let mut table = Table::new("levels", &["t", "components", "critical", "max_multiplicity"]);
    for s in &sets {
        table.rows.push(vec![s.t, s.components.len() as f64, s.critical as u8 as f64, s.max_multiplicity as f64]);
        if flagged.iter().any(|&c| (c - s.t).abs() < 2.0 * h) {
            continue;
        }
        tested += 1;
        worst_mult = worst_mult.max(s.max_multiplicity);
        let max = field.max_value();
        for t in [s.t - 0.5 * h, s.t + 0.5 * h] {
            if t > 0.0 && t < max && level_sets(field, t)?.components.len() != s.components.len() {
                unstable += 1;
            }
        }
    }
    let mut r = VerificationReport::default();
    r.push(Check::new(
        "level_multiplicity_at_most_two",
        worst_mult.saturating_sub(2) as f64,
        0.0,
        format!("{tested} non-critical levels, max multiplicity {worst_mult}"),
    ));
    r.push(Check::new(
        "level_count_stable",
        unstable as f64,
        0.0,
        format!("{tested} non-critical levels perturbed by h/2"),
    ));
    r.tables.push(table);
    Ok((r, sets))
}

/// Expected component count and criticality of one level.
pub fn expect_level(set: &LevelSet, components: Option<usize>, critical: Option<bool>) -> Vec<Check> {
    let mut out = Vec::new();
    if let Some(n) = components {
        let got = set.components.len();
        out.push(Check::new(
            format!("level_{}_components", set.t),
            (got as f64 - n as f64).abs(),
            0.0,
            format!("{got} (expected {n})"),
        ));
    }
    if let Some(c) = critical {
        out.push(Check::new(
            format!("level_{}_critical", set.t),
            (set.critical != c) as u8 as f64,
            0.0,
            format!("{} (expected {c})", set.critical),
        ));
    }
    out
}

/// The cut locus invariant suite: local-tree balls, density, avoidance of N, `δ ≥ d`, the
/// topology and completeness surrogates, arc count and local finiteness of branch points.
pub fn structure_report(
    graph: &CutGraph,
    field: &DistanceField,
    seed: u64,
    topology_k: f64,
) -> Result<VerificationReport, AnalysisError> {
    let m = field.manifold();
    let h = field.spacing();
    let domain = &m.domain;
    let sk = Skeleton::new(graph);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = VerificationReport::default();
    let r0 = 10.0 * h;

    // local tree
    let eligible: Vec<usize> = (0..sk.pts.len()).filter(|&k| domain.boundary_distance(sk.pts[k]) >= r0).collect();
    let (lo, ext) = domain.bounds();
    let mut violations = 0;
    for _ in 0..50 {
        let c = if eligible.is_empty() {
            let inner = if domain.is_periodic() { 0.0 } else { r0 };
            ChartPoint::new(
                lo.x + inner + rng.gen::<f64>() * (ext.x - 2.0 * inner).max(0.0),
                lo.y + inner + rng.gen::<f64>() * (ext.y - 2.0 * inner).max(0.0),
            )
        } else {
            sk.pts[eligible[rng.gen_range(0..eligible.len())]]
        };
        let inside: Vec<bool> = sk.pts.iter().map(|p| domain.chart_dist(*p, c) <= r0).collect();
        let mut uf = UnionFind::<usize>::new(sk.pts.len());
        if sk.segs.iter().any(|&(a, b)| inside[a] && inside[b] && !uf.union(a, b)) {
            violations += 1;
        }
    }
    r.push(Check::new("local_tree_balls", violations as f64, 0.0, format!("50 balls of radius {r0}")));

    // density and avoidance of N
    let eps = field.set().epsilon;
    let mut multi = PointIndex::new(domain, h);
    let mut near_n = 0;
    for (k, p) in sk.pts.iter().enumerate() {
        let c = segment_clusters(field, *p, field.options.eta, 64)?;
        if c.count() >= 2 || c.continuum {
            multi.insert(k, *p);
        }
        if c.distance < eps * m.min_speed() {
            near_n += 1;
        }
    }
    let lonely =
        sk.pts.iter().filter(|p| multi.near(**p, 2.0 * h).all(|k| domain.chart_dist(sk.pts[k], **p) > 2.0 * h)).count();
    r.push(Check::new("density_multi_segment", lonely as f64, 0.0, format!("{} cut points", sk.pts.len())));
    r.push(Check::new("cut_points_avoid_n", near_n as f64, 0.0, format!("points within {eps} of N")));

    // δ ≥ d - 2 field_tol on same-component pairs
    let ft = field.field_tol();
    let mut worst = 0.0f64;
    let mut pairs = 0;
    let mut unreachable = 0;
    if sk.pts.len() >= 2 {
        let mut tries = 0;
        while pairs < 500 && tries < 5000 {
            tries += 1;
            let (a, b) = (rng.gen_range(0..sk.pts.len()), rng.gen_range(0..sk.pts.len()));
            if a == b || sk.comp[a] != sk.comp[b] {
                continue;
            }
            pairs += 1;
            let delta = intrinsic_distance(graph, sk.pts[a], sk.pts[b])?;
            if !delta.is_finite() {
                unreachable += 1;
                continue;
            }
            let dd = distance(m, sk.pts[a], sk.pts[b])?;
            worst = worst.max(dd - 2.0 * ft - delta);
        }
    }
    r.push(Check::new("delta_at_least_d", worst.max(0.0), 0.0, format!("{pairs} same-component pairs")));
    r.push(Check::new(
        "delta_finite_within_component",
        unreachable as f64,
        0.0,
        format!("{pairs} same-component pairs"),
    ));

    // disconnected pairs
    let mut cross = 0;
    let mut finite_cross = 0;
    for a in 0..graph.nodes.len() {
        for b in 0..graph.nodes.len() {
            if graph.nodes[a].component != graph.nodes[b].component && cross < 200 {
                cross += 1;
                if intrinsic_distance(graph, graph.nodes[a].point.pos, graph.nodes[b].point.pos)?.is_finite() {
                    finite_cross += 1;
                }
            }
        }
    }
    r.push(Check::new(
        "delta_infinite_across_components",
        finite_cross as f64,
        0.0,
        format!("{cross} cross-component pairs"),
    ));

    // topology surrogate
    let mut index = PointIndex::new(domain, h);
    for (k, p) in sk.pts.iter().enumerate() {
        index.insert(k, *p);
    }
    let mut k_max = 0.0f64;
    let starts: Vec<usize> =
        if sk.pts.is_empty() { Vec::new() } else { (0..100).map(|_| rng.gen_range(0..sk.pts.len())).collect() };
    for a in starts {
        let near: Vec<usize> = index.near(sk.pts[a], 3.0 * h).filter(|&b| b != a && sk.comp[b] == sk.comp[a]).collect();
        for b in near {
            if distance(m, sk.pts[a], sk.pts[b])? <= 3.0 * h {
                let delta = intrinsic_distance(graph, sk.pts[a], sk.pts[b])?;
                k_max = k_max.max(delta / h);
            }
        }
    }
    r.push(Check::new("topology_delta_over_h", k_max, topology_k, "max δ/h over pairs with d ≤ 3h"));

    // completeness surrogate: walks along arcs stop at a graph node
    let mut stuck = 0;
    let walks = if sk.pts.is_empty() { 0 } else { 20 };
    for _ in 0..walks {
        let start = rng.gen_range(0..sk.pts.len());
        let mut seen = vec![false; sk.pts.len()];
        let mut cur = start;
        seen[cur] = true;
        while cur == start || cur >= sk.nodes {
            let next = sk.adj[cur].iter().copied().filter(|&n| !seen[n] || n < sk.nodes).min_by(|&a, &b| {
                domain.chart_dist(sk.pts[cur], sk.pts[a]).total_cmp(&domain.chart_dist(sk.pts[cur], sk.pts[b]))
            });
            match next {
                Some(n) => {
                    seen[n] = true;
                    cur = n;
                }
                None => break,
            }
            if cur == start {
                break;
            }
        }
        if cur >= sk.nodes && sk.nodes > 0 {
            stuck += 1;
        }
    }
    r.push(Check::new("completeness_walks", stuck as f64, 0.0, format!("{walks} walks")));

    // finite arc decomposition and local finiteness of branch points
    r.push(Check::new(
        "finite_arc_decomposition",
        graph.edges.len() as f64,
        sk.segs.len().max(1) as f64,
        format!("{} arcs, {} nodes", graph.edges.len(), graph.nodes.len()),
    ));
    let c = classify(graph);
    r.push(Check::new(
        "branch_points_locally_finite",
        c.max_branches_per_ball as f64,
        10.0,
        format!("{} branch points, at most {} per ball of radius {}", c.branches.len(), c.max_branches_per_ball, c.r0),
    ));
    Ok(r)
}

/// Fundamental theorem of calculus along random chart lines for `f(t) = d_N(γ(t))`, with
/// `f′ = g_X(X, γ̇)` at single-segment points, and the bound `f′ ≤ F(γ̇)`.
pub fn lipschitz_calculus_check(
    field: &DistanceField,
    lines: usize,
    seed: u64,
) -> Result<VerificationReport, AnalysisError> {
    let m = field.manifold();
    let (lo, ext) = m.domain.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1000;
    let mut worst_ftc = 0.0f64;
    let mut worst_bound = f64::INFINITY;
    let mut bound_samples = 0;
    let mut table = Table::new("lipschitz", &["line", "integral", "difference"]);
    let point = |rng: &mut ChaCha8Rng| {
        ChartPoint::new(lo.x + ext.x * rng.gen_range(0.05..0.95), lo.y + ext.y * rng.gen_range(0.05..0.95))
    };
    for line in 0..lines {
        let a = point(&mut rng);
        let b = point(&mut rng);
        let v = b - a;
        let dt = 1.0 / n as f64;
        let f = |t: f64| -> Result<f64, AnalysisError> { Ok(field.eval(a + v * t)?.value) };
        let mut deriv = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let t = i as f64 * dt;
            let x = a + v * t;
            let p = field.eval(x)?;
            let fp = if p.value == 0.0 {
                0.0
            } else if let Some(xv) = unique_direction(field, x)? {
                let local = m.local(x)?;
                let fp = local.g_pair(xv, v);
                if i % 10 == 0 {
                    bound_samples += 1;
                    worst_bound = worst_bound.min(local.norm(v) - fp);
                }
                fp
            } else {
                let (t0, t1) = ((t - dt).max(0.0), (t + dt).min(1.0));
                (f(t1)? - f(t0)?) / (t1 - t0)
            };
            deriv.push(fp);
        }
        let integral: f64 = deriv.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();
        let diff = f(1.0)? - f(0.0)?;
        worst_ftc = worst_ftc.max((integral - diff).abs());
        table.rows.push(vec![line as f64, integral, diff]);
    }
    let mut r = VerificationReport::default();
    r.push(Check::new("lipschitz_ftc", worst_ftc, field.field_tol(), format!("{lines} lines, {n} steps each")));
    r.push(Check::new(
        "derivative_bounded_by_speed",
        (-worst_bound).max(0.0),
        1e-9,
        format!("{bound_samples} differentiable samples, min margin {worst_bound:.3e}"),
    ));
    r.tables.push(table);
    Ok(r)
}

/// Each target has a detected cut point within `tol`.
pub fn point_matches(points: &[CutPoint], targets: &[ChartPoint], tol: f64, m: &Manifold) -> Check {
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for t in targets {
        let d = points.iter().map(|p| m.domain.chart_dist(p.pos, *t)).fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
        detail.push(format!("({:.4},{:.4}):{d:.4}", t.x, t.y));
    }
    Check::new("cut_point_matches", worst, tol, detail.join(" "))
}

/// Segment-cluster count at `p` equals `expected`.
pub fn multiplicity_check(field: &DistanceField, p: ChartPoint, expected: usize) -> Result<Check, AnalysisError> {
    let c = segment_clusters(field, p, field.options.eta, 64)?;
    Ok(Check::new(
        format!("multiplicity_at_{}_{}", p.x, p.y),
        (c.count() as f64 - expected as f64).abs(),
        0.0,
        format!("{} clusters (expected {expected})", c.count()),
    ))
}

/// Empirical reversibility constant within `[lo, hi]`.
pub fn verify_reversibility(
    m: &Manifold,
    region: (ChartPoint, ChartPoint),
    count: usize,
    seed: u64,
    range: (f64, f64),
) -> Result<Check, AnalysisError> {
    let lambda = reversibility(m, region, count, seed)?;
    let miss = (range.0 - lambda).max(lambda - range.1).max(0.0);
    Ok(Check::new(
        "reversibility",
        miss,
        0.0,
        format!("lambda = {lambda:.4} over {count} pairs, expected in [{}, {}]", range.0, range.1),
    ))
}

/// Richardson ratios of finite-difference Jacobi fields at `p` within `range`.
pub fn verify_jacobi(
    m: &Manifold,
    p: ChartPoint,
    thetas: &[f64],
    t: f64,
    h_theta: f64,
    range: (f64, f64),
) -> Result<Check, AnalysisError> {
    let mut miss = 0.0f64;
    let mut ratios = Vec::new();
    for &th in thetas {
        let q = geodesic::jacobi_richardson(m, p, th, t, h_theta)?;
        miss = miss.max((range.0 - q).max(q - range.1).max(0.0));
        ratios.push(format!("{q:.3}"));
    }
    Ok(Check::new("jacobi_richardson", miss, 0.0, format!("ratios {}", ratios.join(" "))))
}

/// Field against the constant-wind travel time from point sources: the `t` solving
/// `|q - p - tW| = t`, minimized over the sources. Nodes with `d = 0` are skipped.
pub fn zermelo_check(field: &DistanceField, sources: &[ChartPoint], wind: Vec2, tol: f64) -> Check {
    let w2 = wind.dot(wind);
    let travel = |d: Vec2| {
        let b = d.dot(wind);
        (-b + (b * b + (1.0 - w2) * d.dot(d)).sqrt()) / (1.0 - w2)
    };
    let grid = &field.grid;
    let mut worst = 0.0f64;
    let mut at = ChartPoint::default();
    for k in 0..grid.len() {
        let q = grid.point(k);
        let exact = sources.iter().map(|p| travel(q - *p)).fold(f64::INFINITY, f64::min);
        if exact <= 0.0 {
            continue;
        }
        let rel = (field.nodes[k].value - exact).abs() / exact;
        if rel > worst {
            worst = rel;
            at = q;
        }
    }
    Check::new(
        "zermelo_travel_time",
        worst,
        tol,
        format!("max relative error at ({:.4},{:.4}) over {} nodes", at.x, at.y, grid.len()),
    )
}

/// Hausdorff distance between the cut graph and the line through `p` along `dir`, clipped
/// to the window.
pub fn hausdorff_to_line(graph: &CutGraph, field: &DistanceField, p: ChartPoint, dir: Vec2, tol: f64) -> Check {
    let m = field.manifold();
    let h = field.spacing();
    let u = dir * (1.0 / dir.chart_len());
    let off = |x: ChartPoint| (x - p).cross(u).abs();
    let (pts, segs) = graph.skeleton();
    let graph_side = pts.iter().map(|x| off(*x)).fold(0.0, f64::max);
    let mut line_side = 0.0f64;
    if pts.is_empty() {
        line_side = f64::INFINITY;
    } else {
        let reach = m.domain.bounds().1.chart_len();
        let n = (2.0 * reach / h).ceil() as i64;
        for k in -n..=n {
            let x = p + u * (k as f64 * h);
            if !m.domain.contains(x) {
                continue;
            }
            let d = segs
                .iter()
                .map(|&(a, b)| point_segment(x, pts[a], pts[a] + m.domain.displacement(pts[a], pts[b])))
                .chain(pts.iter().map(|q| m.domain.chart_dist(x, *q)))
                .fold(f64::INFINITY, f64::min);
            line_side = line_side.max(d);
        }
    }
    let hd = graph_side.max(line_side);
    Check::new("hausdorff_to_line", hd, tol, format!("graph side {graph_side:.3e}, line side {line_side:.3e}"))
}

fn point_segment(x: ChartPoint, a: ChartPoint, b: ChartPoint) -> f64 {
    let ab = b - a;
    let l2 = ab.dot(ab);
    let s = if l2 == 0.0 { 0.0 } else { ((x - a).dot(ab) / l2).clamp(0.0, 1.0) };
    (x - (a + ab * s)).chart_len()
}

/// Exactly one non-synthetic node, flagged continuum, within `radius` of `at`.
pub fn continuum_node_check(graph: &CutGraph, at: ChartPoint, radius: f64, m: &Manifold) -> Check {
    let interior: Vec<_> = graph.nodes.iter().filter(|n| !n.synthetic).collect();
    let dist = interior.first().map_or(f64::INFINITY, |n| m.domain.chart_dist(n.point.pos, at));
    let ok = interior.len() == 1 && interior[0].point.continuum && dist < radius;
    Check::new(
        "single_continuum_node",
        if ok { 0.0 } else { 1.0 },
        0.0,
        format!("{} interior nodes, first at distance {dist:.3e}", interior.len()),
    )
}

/// Intrinsic distance between two points against an expected value.
pub fn delta_check(
    graph: &CutGraph,
    a: ChartPoint,
    b: ChartPoint,
    expected: f64,
    tol: f64,
) -> Result<Check, AnalysisError> {
    let delta = intrinsic_distance(graph, a, b)?;
    Ok(Check::new(
        format!("delta_{}_{}_to_{}_{}", a.x, a.y, b.x, b.y),
        (delta - expected).abs(),
        tol,
        format!("delta = {delta:.6} (expected {expected})"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutlocus::cut_locus;
    use crate::distance::{ClosedSet, FieldOptions, Primitive};
    use crate::geom::Domain;
    use crate::metric::{make_zermelo, MetricSpec, TensorField, VectorField};

    fn two_points(h: f64) -> DistanceField {
        let m = Manifold::new(MetricSpec::euclidean(), Domain::plane((-2.0, -2.0), (2.0, 2.0))).unwrap();
        let set = ClosedSet::new(
            vec![
                Primitive::Point { at: ChartPoint::new(-1.0, 0.0) },
                Primitive::Point { at: ChartPoint::new(1.0, 0.0) },
            ],
            h / 2.0,
        )
        .unwrap();
        DistanceField::compute(&m, &set, h, FieldOptions::default()).unwrap()
    }

    #[test]
    fn theorem_a_on_two_points() {
        let f = two_points(1.0 / 16.0);
        let g = cut_locus(&f).unwrap();
        let r = verify_theorem_a(&f, &g, 200, 7, 0.5).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        assert!(r.tables[0].rows.iter().any(|row| row[2] == 1.0));
    }

    #[test]
    fn structure_of_two_points() {
        let f = two_points(1.0 / 16.0);
        let g = cut_locus(&f).unwrap();
        let r = structure_report(&g, &f, 3, 6.0).unwrap();
        assert!(r.passed(), "{}", r.to_text());
    }

    #[test]
    fn lipschitz_on_two_points() {
        let f = two_points(1.0 / 16.0);
        let r = lipschitz_calculus_check(&f, 5, 11).unwrap();
        assert!(r.passed(), "{}", r.to_text());
    }

    #[test]
    fn lengths_on_randers_geodesics() {
        let d = Domain::plane((-2.0, -2.0), (2.0, 2.0));
        let m = Manifold::new(make_zermelo(TensorField::identity(), VectorField::constant(0.5, 0.0), &d).unwrap(), d)
            .unwrap();
        let curves = geodesic_curves(&m, 5, 1.0, 1).unwrap();
        assert_eq!(curves.len(), 5);
        let r = verify_lengths(&m, &curves, 1e-3).unwrap();
        assert!(r.passed(), "{}", r.to_text());
    }

    #[test]
    fn doubling_density_shrinks_gap() {
        let m = Manifold::new(MetricSpec::euclidean(), Domain::plane((-2.0, -2.0), (2.0, 2.0))).unwrap();
        // unit circle arc: l from chords, L = arc length
        let arc = |n: usize| -> f64 {
            let pts: Vec<ChartPoint> = (0..=n)
                .map(|k| {
                    let a = k as f64 / n as f64;
                    ChartPoint::new(a.cos(), a.sin())
                })
                .collect();
            (arc_length(&m, &pts).unwrap() - 1.0).abs()
        };
        assert!(arc(8) > arc(16) && arc(16) > arc(32));
    }

    #[test]
    fn two_point_bisector_oracles() {
        let f = two_points(1.0 / 16.0);
        let g = cut_locus(&f).unwrap();
        let c = hausdorff_to_line(&g, &f, ChartPoint::new(0.0, 0.0), Vec2::new(0.0, 1.0), 2.0 / 16.0);
        assert!(c.passed(), "{c:?}");
        let c = hausdorff_to_line(&g, &f, ChartPoint::new(0.5, 0.0), Vec2::new(0.0, 1.0), 2.0 / 16.0);
        assert!(!c.passed());
    }

    #[test]
    fn zermelo_oracle_without_wind_is_euclidean() {
        let f = two_points(1.0 / 16.0);
        let c = zermelo_check(&f, &[ChartPoint::new(-1.0, 0.0), ChartPoint::new(1.0, 0.0)], Vec2::ZERO, 1e-9);
        assert!(c.passed(), "{c:?}");
    }

    #[test]
    fn report_status_follows_tolerance() {
        assert!(Check::new("a", 1.0, 1.0, "").passed());
        assert!(!Check::new("a", 1.0 + 1e-12, 1.0, "").passed());
        let mut r = VerificationReport::new("s");
        r.push(Check::new("a", 0.0, 0.0, ""));
        assert!(r.passed());
        r.push(Check::new("b", 2.0, 1.0, ""));
        assert!(!r.passed());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"status\":\"fail\""));
    }
}
