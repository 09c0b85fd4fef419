//! JSON and SVG output of cut graphs.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::distance::{DistanceField, Element};
use crate::geom::ChartPoint;

use super::{CutGraph, NodeKind, Sector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub multiplicity: usize,
    pub kind: NodeKind,
    pub sectors: Vec<Sector>,
    pub continuum: bool,
    pub synthetic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub id: usize,
    pub n0: usize,
    pub n1: usize,
    pub polyline: Vec<[f64; 2]>,
    pub len_fwd: f64,
    pub len_bwd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: Vec<NodeJson>,
    pub edges: Vec<EdgeJson>,
}

impl From<&CutGraph> for GraphJson {
    fn from(g: &CutGraph) -> Self {
        GraphJson {
            nodes: g
                .nodes
                .iter()
                .map(|n| NodeJson {
                    id: n.id,
                    x: n.point.pos.x,
                    y: n.point.pos.y,
                    multiplicity: n.point.multiplicity,
                    kind: n.point.kind,
                    sectors: n.point.sectors.clone(),
                    continuum: n.point.continuum,
                    synthetic: n.synthetic,
                })
                .collect(),
            edges: g
                .edges
                .iter()
                .map(|e| EdgeJson {
                    id: e.id,
                    n0: e.n0,
                    n1: e.n1,
                    polyline: e.polyline.iter().map(|p| [p.x, p.y]).collect(),
                    len_fwd: e.len_fwd,
                    len_bwd: e.len_bwd,
                })
                .collect(),
        }
    }
}

impl GraphJson {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }
}

/// SVG of the window with the set N, level-set contours and the cut graph overlaid.
pub fn render_svg(field: &DistanceField, graph: &CutGraph, contours: &[Vec<ChartPoint>]) -> String {
    let (origin, extent) = field.manifold().domain.bounds();
    let px = 800.0;
    let scale = px / extent.x.max(extent.y);
    let tx = |p: ChartPoint| ((p.x - origin.x) * scale, (origin.y + extent.y - p.y) * scale);
    let (w, h) = (extent.x * scale, extent.y * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let line = |s: &mut String, pts: &[ChartPoint], style: &str| {
        let coords: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = tx(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" {style}/>"#, coords.join(" "));
    };
    for c in contours {
        line(&mut s, c, r##"stroke="#8899aa" stroke-width="0.7""##);
    }
    for e in field.set().elements() {
        match *e {
            Element::Point(p) => {
                let (x, y) = tx(p);
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="black"/>"#);
            }
            Element::Segment(a, b) => line(&mut s, &[a, b], r#"stroke="black" stroke-width="1.5""#),
        }
    }
    for e in &graph.edges {
        line(&mut s, &e.polyline, r##"stroke="#d62728" stroke-width="1.5""##);
    }
    for n in &graph.nodes {
        let (x, y) = tx(n.point.pos);
        let fill = if n.synthetic {
            "#bbbbbb"
        } else {
            match n.point.kind {
                NodeKind::Branch => "#1f77b4",
                NodeKind::Regular => "#2ca02c",
                NodeKind::Endpoint => "#ff7f0e",
            }
        };
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{fill}"/>"#);
    }
    s.push_str("</svg>\n");
    s
}
