//! Scenario orchestration and artifact export.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use finsler_cut::analysis::{
    self, continuum_node_check, delta_check, expect_level, geodesic_curves, hausdorff_to_line, level_sets,
    multiplicity_check, point_matches, structure_report, verify_jacobi, verify_lengths, verify_levels,
    verify_reversibility, verify_theorem_a, zermelo_check, AnalysisError, Check, LevelSet, VerificationReport,
};
use finsler_cut::cutlocus::{cut_locus, render_svg, CutGraph, CutPoint, GraphJson, NodeKind};
use finsler_cut::distance::DistanceField;
use finsler_cut::Manifold;
use serde::Serialize;
use thiserror::Error;

use crate::config::{pt, vec2, CheckKind, ConfigError, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Field,
    Cutlocus,
    Levels,
    Verify,
    All,
}

impl Command {
    fn graph(self) -> bool {
        matches!(self, Command::Cutlocus | Command::Verify | Command::All)
    }

    fn levels(self) -> bool {
        matches!(self, Command::Levels | Command::All)
    }

    fn verify(self) -> bool {
        matches!(self, Command::Verify | Command::All)
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("scenario {scenario}: {source}")]
    Numeric { scenario: String, source: AnalysisError },
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Everything one command computes.
pub struct Products {
    pub manifold: Manifold,
    pub field: DistanceField,
    pub graph: Option<CutGraph>,
    pub levels: Vec<LevelSet>,
    pub report: VerificationReport,
}

pub fn compute(s: &Scenario, cmd: Command) -> Result<Products, RunError> {
    let numeric = |source: AnalysisError| RunError::Numeric { scenario: s.name.clone(), source };
    let manifold = s.manifold()?;
    let set = s.closed_set()?;
    let field = DistanceField::compute(&manifold, &set, s.grid.h, s.field_options()).map_err(|e| numeric(e.into()))?;
    let graph = if cmd.graph() { Some(cut_locus(&field).map_err(|e| numeric(e.into()))?) } else { None };
    let levels = if cmd.levels() {
        s.analysis.levels.iter().map(|&t| level_sets(&field, t)).collect::<Result<_, _>>().map_err(numeric)?
    } else {
        Vec::new()
    };
    let mut report = VerificationReport::new(s.name.clone());
    if let (true, Some(g)) = (cmd.verify(), &graph) {
        report.merge(verify(s, &manifold, &field, g).map_err(numeric)?);
    }
    Ok(Products { manifold, field, graph, levels, report })
}

/// The checks requested by the scenario.
pub fn verify(
    s: &Scenario,
    m: &Manifold,
    field: &DistanceField,
    g: &CutGraph,
) -> Result<VerificationReport, AnalysisError> {
    let a = &s.analysis;
    let h = field.spacing();
    let mut r = VerificationReport::new(s.name.clone());
    for kind in &a.checks {
        match kind {
            CheckKind::TheoremA => r.merge(verify_theorem_a(field, g, a.samples, s.seed, a.witness_gap)?),
            CheckKind::Lengths => {
                let curves = geodesic_curves(m, a.geodesics, a.geodesic_length, s.seed)?;
                r.push(Check::new(
                    "geodesic_count",
                    (a.geodesics - curves.len()) as f64,
                    0.0,
                    format!("{} of {} geodesics integrated", curves.len(), a.geodesics),
                ));
                r.merge(verify_lengths(m, &curves, a.length_tol)?);
            }
            CheckKind::Levels => {
                let (rep, _) = verify_levels(field, &a.levels)?;
                r.merge(rep);
                for e in &a.level {
                    for c in expect_level(&level_sets(field, e.t)?, e.components, e.critical) {
                        r.push(c);
                    }
                }
            }
            CheckKind::Structure => r.merge(structure_report(g, field, s.seed, a.topology_k)?),
            CheckKind::Lipschitz => r.merge(analysis::lipschitz_calculus_check(field, a.lipschitz_lines, s.seed)?),
        }
    }
    if let Some(n) = a.branch_nodes {
        let got = g.nodes.iter().filter(|v| !v.synthetic && v.point.kind == NodeKind::Branch).count();
        r.push(Check::new("branch_node_count", (got as f64 - n as f64).abs(), 0.0, format!("{got} (expected {n})")));
    }
    if let Some(n) = a.arcs {
        let got = g.edges.len();
        r.push(Check::new("arc_count", (got as f64 - n as f64).abs(), 0.0, format!("{got} (expected {n})")));
    }
    if let Some(z) = &a.zermelo {
        let sources: Vec<_> = z.sources.iter().map(|p| pt(*p)).collect();
        r.push(zermelo_check(field, &sources, vec2(z.wind), z.tol));
    }
    if let Some(l) = &a.hausdorff_line {
        r.push(hausdorff_to_line(g, field, pt(l.point), vec2(l.direction), l.tol_h * h));
    }
    if let Some(c) = &a.continuum_node {
        r.push(continuum_node_check(g, pt(c.at), c.radius_h * h, m));
    }
    let nodes: Vec<CutPoint> = g.nodes.iter().map(|n| n.point.clone()).collect();
    if let Some(p) = &a.cut_points {
        let targets: Vec<_> = p.targets.iter().map(|t| pt(*t)).collect();
        r.push(point_matches(&nodes, &targets, p.tol, m));
    }
    if let Some(n) = &a.notch_centers {
        let mut c = point_matches(&nodes, &s.notch_centers(n.count), n.tol, m);
        c.name = "notch_center_matches".into();
        r.push(c);
    }
    for e in &a.multiplicity {
        r.push(multiplicity_check(field, pt(e.at), e.expected)?);
    }
    for e in &a.delta {
        r.push(delta_check(g, pt(e.a), pt(e.b), e.expected, e.tol)?);
    }
    if let Some(e) = &a.reversibility {
        r.push(verify_reversibility(m, (pt(e.min), pt(e.max)), e.pairs, s.seed, (e.range[0], e.range[1]))?);
    }
    if let Some(e) = &a.jacobi {
        r.push(verify_jacobi(m, pt(e.point), &e.thetas, e.t, e.h_theta, (e.range[0], e.range[1]))?);
    }
    Ok(r)
}

#[derive(Serialize)]
struct LevelJson<'a> {
    t: f64,
    critical: bool,
    max_multiplicity: usize,
    components: Vec<CurveJson<'a>>,
}

#[derive(Serialize)]
struct CurveJson<'a> {
    closed: bool,
    #[serde(serialize_with = "points")]
    points: &'a [finsler_cut::ChartPoint],
}

fn points<S: serde::Serializer>(p: &&[finsler_cut::ChartPoint], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(p.iter().map(|q| [q.x, q.y]))
}

/// Writes the artifacts of `cmd` under `out` and records them in the report.
pub fn write(s: &Scenario, p: &mut Products, cmd: Command, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| RunError::Io { path, source }
    };
    fs::create_dir_all(out).map_err(io(out))?;
    let mut files: Vec<PathBuf> = Vec::new();
    let put = |files: &mut Vec<PathBuf>, name: &str, bytes: &[u8]| -> Result<(), RunError> {
        let path = out.join(name);
        fs::write(&path, bytes).map_err(io(&path))?;
        files.push(path);
        Ok(())
    };
    put(&mut files, "scenario.toml", s.to_toml().as_bytes())?;

    let mut csv = Vec::new();
    p.field.write_csv(BufWriter::new(&mut csv)).map_err(io(out))?;
    put(&mut files, "field.csv", &csv)?;
    let mut bin = Vec::new();
    p.field.write_binary(&mut bin).map_err(io(out))?;
    put(&mut files, "field.bin", &bin)?;

    if let Some(g) = &p.graph {
        put(&mut files, "cutgraph.json", GraphJson::from(g).to_json().as_bytes())?;
    }
    for l in &p.levels {
        let json = LevelJson {
            t: l.t,
            critical: l.critical,
            max_multiplicity: l.max_multiplicity,
            components: l.components.iter().map(|c| CurveJson { closed: c.closed, points: &c.points }).collect(),
        };
        put(
            &mut files,
            &format!("levels_{}.json", l.t),
            serde_json::to_string_pretty(&json).expect("level serializes").as_bytes(),
        )?;
    }
    if let Some(g) = &p.graph {
        let contours: Vec<_> = p.levels.iter().flat_map(|l| l.components.iter().map(|c| c.points.clone())).collect();
        put(&mut files, "render.svg", render_svg(&p.field, g, &contours).as_bytes())?;
    }
    if cmd.verify() {
        for t in &p.report.tables {
            put(&mut files, &format!("evidence_{}.csv", t.name), t.to_csv().as_bytes())?;
        }
        let mut names: Vec<String> =
            files.iter().filter_map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned())).collect();
        names.push("report.txt".into());
        names.sort();
        p.report.artifacts = names;
        put(&mut files, "report.txt", p.report.to_text().as_bytes())?;
        put(&mut files, "report.json", serde_json::to_string_pretty(&p.report).expect("report serializes").as_bytes())?;
    }
    Ok(files)
}
