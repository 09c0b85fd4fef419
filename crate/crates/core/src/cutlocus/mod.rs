//! Cut points of N, the cut locus as a graph of polyline arcs, sectors and `μ`, arc lengths
//! and the intrinsic metric `δ`.

mod detect;
mod export;
mod graph;

pub use detect::{detect, DetectOptions};
pub use export::{render_svg, EdgeJson, GraphJson, NodeJson};
pub use graph::{
    classify, extract_graph, intrinsic_distance, BranchInfo, Classification, CutGraph, GraphEdge, GraphNode, Location,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::{Clusters, DistanceError, Foot};
use crate::geodesic;
use crate::geom::{ChartPoint, Vec2};
use crate::manifold::Manifold;
use crate::metric::LocalNorm;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CutError {
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error("point ({0}, {1}) is not on the cut graph")]
    PointNotOnGraph(f64, f64),
    #[error("{count} cut vertices in the cell at ({x}, {y}); refine the grid")]
    AmbiguousJunction { x: f64, y: f64, count: usize },
}

impl From<crate::metric::MetricError> for CutError {
    fn from(e: crate::metric::MetricError) -> Self {
        CutError::Distance(e.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Endpoint,
    Regular,
    Branch,
}

/// Angular interval between two consecutive terminal velocities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub a0: f64,
    pub a1: f64,
    pub mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detection {
    /// Root of the distance difference between two feet along a grid edge.
    Interface,
    /// Loss of minimality along an extended segment.
    Extension,
    /// Equidistant point of three or more feet.
    Junction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutPoint {
    pub pos: ChartPoint,
    /// `d_N(pos)`.
    pub distance: f64,
    pub multiplicity: usize,
    pub continuum: bool,
    /// Cluster representatives: feet (relative to `pos`) and unit terminal velocities.
    pub feet: Vec<Foot>,
    pub directions: Vec<Vec2>,
    /// Terminal directions of every near-minimal foot.
    pub fan: Vec<Vec2>,
    pub sectors: Vec<Sector>,
    pub kind: NodeKind,
    pub source: Detection,
}

impl CutPoint {
    pub(crate) fn new(
        m: &Manifold,
        pos: ChartPoint,
        c: &Clusters,
        theta_sep: f64,
        source: Detection,
    ) -> Result<Self, CutError> {
        let local = m.local(pos)?;
        let sectors = sectors(&local, &c.all_directions, theta_sep);
        Ok(CutPoint {
            pos,
            distance: c.distance,
            multiplicity: c.count(),
            continuum: c.continuum,
            feet: c.hits.iter().map(|h| h.foot).collect(),
            directions: c.directions.clone(),
            fan: c.all_directions.clone(),
            kind: kind_of(sectors.len()),
            sectors,
            source,
        })
    }
}

fn kind_of(sectors: usize) -> NodeKind {
    match sectors {
        0 | 1 => NodeKind::Endpoint,
        2 => NodeKind::Regular,
        _ => NodeKind::Branch,
    }
}

/// Sectors between angularly consecutive terminal velocities separated by more than
/// `theta_sep`; a single direction gives one full sector with `μ = 1`.
pub fn sectors(local: &LocalNorm, directions: &[Vec2], theta_sep: f64) -> Vec<Sector> {
    let mut dirs: Vec<Vec2> = directions.iter().copied().filter(|d| !d.is_zero()).collect();
    if dirs.is_empty() {
        return Vec::new();
    }
    dirs.sort_by(|a, b| a.angle().total_cmp(&b.angle()));
    if dirs.len() == 1 {
        let a = dirs[0].angle();
        return vec![Sector { a0: a, a1: a, mu: 1.0 }];
    }
    let tau = std::f64::consts::TAU;
    let n = dirs.len();
    let mut out = Vec::new();
    for k in 0..n {
        let (x, y) = (dirs[k], dirs[(k + 1) % n]);
        let mut gap = y.angle() - x.angle();
        if k + 1 == n {
            gap += tau;
        }
        if gap > theta_sep {
            let mu = local.g_pair(x, y).max(local.g_pair(y, x));
            out.push(Sector { a0: x.angle(), a1: x.angle() + gap, mu });
        }
    }
    if out.is_empty() && n > 1 {
        // a tight fan: one sector is its complement
        return Vec::new();
    }
    out
}

/// Detection followed by graph extraction with default options.
pub fn cut_locus(field: &crate::distance::DistanceField) -> Result<CutGraph, CutError> {
    let points = detect(field, &DetectOptions::from_field(field))?;
    extract_graph(points, field)
}

/// Forward distance between nearby points: exact for constant metrics, shooting otherwise,
/// with the chord length as fallback.
pub fn pair_distance(m: &Manifold, a: ChartPoint, b: ChartPoint) -> Result<f64, CutError> {
    let d = m.domain.displacement(a, b);
    if d.is_zero() {
        return Ok(0.0);
    }
    if m.is_homogeneous() {
        return Ok(m.norm(a, d)?);
    }
    match geodesic::log(m, a, b, 1e-10) {
        Ok(v) => Ok(m.norm(a, v)?),
        Err(_) => Ok(geodesic::chord_length(m, a, d)?),
    }
}

/// `Σ d(c_{i-1}, c_i)` over consecutive polyline vertices.
pub fn arc_length(m: &Manifold, polyline: &[ChartPoint]) -> Result<f64, CutError> {
    let mut s = 0.0;
    for w in polyline.windows(2) {
        s += pair_distance(m, w[0], w[1])?;
    }
    Ok(s)
}
