//! Scenario files: TOML with typed sections. Unknown keys are rejected.

use std::path::Path;

use finsler_cut::distance::{ClosedSet, FieldOptions, Primitive};
use finsler_cut::metric::{make_zermelo, ExprField, ScalarField, TensorField, VectorField};
use finsler_cut::{ChartPoint, Domain, Manifold, MetricSpec, Vec2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn invalid(key: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.to_string() }
}

pub const DEFAULT_H: f64 = 1.0 / 128.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub domain: DomainConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub metric: MetricConfig,
    pub set: SetConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Plane { min: [f64; 2], max: [f64; 2] },
    Torus { origin: [f64; 2], period: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub h: f64,
    pub eta: f64,
    pub theta_sep_deg: f64,
    pub max_sweeps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let o = FieldOptions::default();
        Self { h: DEFAULT_H, eta: o.eta, theta_sep_deg: o.theta_sep.to_degrees(), max_sweeps: o.max_sweeps }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[default]
    Euclidean,
    Riemannian,
    /// Zermelo navigation on the background `g` with wind `wind`.
    Randers,
}

/// A coefficient: a number or an expression in `x`, `y` (and `pi`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coef {
    Number(f64),
    Expr(String),
}

impl Coef {
    fn field(&self, key: &str) -> Result<ScalarField, ConfigError> {
        match self {
            Coef::Number(v) => Ok((*v).into()),
            Coef::Expr(s) => ExprField::parse(s).map(ScalarField::Expr).map_err(|e| invalid(key, e)),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default)]
    pub kind: MetricKind,
    /// `[g11, g12, g22]` of the background tensor.
    pub g: Option<[Coef; 3]>,
    pub wind: Option<[Coef; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetConfig {
    /// Sample spacing of curves; defaults to `h/2`.
    pub epsilon: Option<f64>,
    pub primitives: Vec<PrimitiveConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrimitiveConfig {
    Point {
        at: [f64; 2],
    },
    Polyline {
        points: Vec<[f64; 2]>,
        #[serde(default)]
        closed: bool,
    },
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Disc {
        center: [f64; 2],
        radius: f64,
    },
    /// Disc with one removed ball of the same radius between consecutive boundary angles.
    NotchedDisc {
        center: [f64; 2],
        radius: f64,
        angles: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    TheoremA,
    Lengths,
    Levels,
    Structure,
    Lipschitz,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub checks: Vec<CheckKind>,
    pub levels: Vec<f64>,
    pub level: Vec<LevelExpect>,
    pub samples: usize,
    pub witness_gap: f64,
    pub geodesics: usize,
    pub geodesic_length: f64,
    pub length_tol: f64,
    pub lipschitz_lines: usize,
    pub topology_k: f64,
    pub branch_nodes: Option<usize>,
    pub arcs: Option<usize>,
    pub zermelo: Option<ZermeloExpect>,
    pub hausdorff_line: Option<LineExpect>,
    pub continuum_node: Option<ContinuumExpect>,
    pub cut_points: Option<PointsExpect>,
    pub notch_centers: Option<NotchExpect>,
    pub multiplicity: Vec<MultiplicityExpect>,
    pub delta: Vec<DeltaExpect>,
    pub reversibility: Option<ReversibilityExpect>,
    pub jacobi: Option<JacobiExpect>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            checks: Vec::new(),
            levels: Vec::new(),
            level: Vec::new(),
            samples: 200,
            witness_gap: 0.5,
            geodesics: 20,
            geodesic_length: 1.0,
            length_tol: 1e-3,
            lipschitz_lines: 10,
            topology_k: 8.0,
            branch_nodes: None,
            arcs: None,
            zermelo: None,
            hausdorff_line: None,
            continuum_node: None,
            cut_points: None,
            notch_centers: None,
            multiplicity: Vec::new(),
            delta: Vec::new(),
            reversibility: None,
            jacobi: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelExpect {
    pub t: f64,
    pub components: Option<usize>,
    pub critical: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZermeloExpect {
    pub sources: Vec<[f64; 2]>,
    pub wind: [f64; 2],
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineExpect {
    pub point: [f64; 2],
    pub direction: [f64; 2],
    /// Tolerance in grid spacings.
    pub tol_h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuumExpect {
    pub at: [f64; 2],
    pub radius_h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsExpect {
    pub targets: Vec<[f64; 2]>,
    pub tol: f64,
}

/// Targets are the centers of the first `count` notches of the first notched disc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NotchExpect {
    pub count: usize,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplicityExpect {
    pub at: [f64; 2],
    pub expected: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaExpect {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub expected: f64,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReversibilityExpect {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub pairs: usize,
    pub range: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobiExpect {
    pub point: [f64; 2],
    pub thetas: Vec<f64>,
    pub t: f64,
    pub h_theta: f64,
    pub range: [f64; 2],
}

pub fn pt(p: [f64; 2]) -> ChartPoint {
    ChartPoint::new(p[0], p[1])
}

pub fn vec2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

/// Bundled scenario files by name.
pub const BUNDLED: [(&str, &str); 6] = [
    ("euclid-two-points", include_str!("../scenarios/euclid-two-points.toml")),
    ("euclid-circle", include_str!("../scenarios/euclid-circle.toml")),
    ("randers-wind05-point", include_str!("../scenarios/randers-wind05-point.toml")),
    ("torus-point", include_str!("../scenarios/torus-point.toml")),
    ("example26", include_str!("../scenarios/example26.toml")),
    ("euclid-three-points", include_str!("../scenarios/euclid-three-points.toml")),
];

pub fn bundled_scenarios() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

pub fn bundled(name: &str) -> Option<Scenario> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| Scenario::parse(s).expect("bundled scenario parses"))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// A file path, or the name of a bundled scenario.
    pub fn load(source: &str) -> Result<Self, ConfigError> {
        let path = Path::new(source);
        if !path.exists() {
            if let Some(s) = bundled(source) {
                return Ok(s);
            }
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: source.to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.grid.h > 0.0 && self.grid.h.is_finite()) {
            return Err(invalid("grid.h", "must be positive"));
        }
        if !(self.grid.eta > 0.0) {
            return Err(invalid("grid.eta", "must be positive"));
        }
        if !(self.grid.theta_sep_deg > 0.0 && self.grid.theta_sep_deg < 90.0) {
            return Err(invalid("grid.theta_sep_deg", "must lie in (0, 90)"));
        }
        match self.domain {
            DomainConfig::Plane { min, max } if !(min[0] < max[0] && min[1] < max[1]) => {
                return Err(invalid("domain.max", "must exceed domain.min"));
            }
            DomainConfig::Torus { period, .. } if !(period[0] > 0.0 && period[1] > 0.0) => {
                return Err(invalid("domain.period", "must be positive"));
            }
            _ => {}
        }
        if self.set.primitives.is_empty() {
            return Err(invalid("set.primitives", "at least one primitive is required"));
        }
        if self.metric.kind == MetricKind::Randers && self.metric.wind.is_none() {
            return Err(invalid("metric.wind", "required for kind = \"randers\""));
        }
        if self.metric.kind == MetricKind::Euclidean && (self.metric.g.is_some() || self.metric.wind.is_some()) {
            return Err(invalid("metric.kind", "euclidean takes no coefficients"));
        }
        Ok(())
    }

    pub fn domain(&self) -> Domain {
        match self.domain {
            DomainConfig::Plane { min, max } => Domain::plane((min[0], min[1]), (max[0], max[1])),
            DomainConfig::Torus { origin, period } => Domain::torus((origin[0], origin[1]), (period[0], period[1])),
        }
    }

    pub fn manifold(&self) -> Result<Manifold, ConfigError> {
        let domain = self.domain();
        let background = match &self.metric.g {
            None => TensorField::identity(),
            Some([a, b, c]) => {
                TensorField { g11: a.field("metric.g")?, g12: b.field("metric.g")?, g22: c.field("metric.g")? }
            }
        };
        let spec = match self.metric.kind {
            MetricKind::Euclidean => MetricSpec::euclidean(),
            MetricKind::Riemannian => MetricSpec::riemannian(background),
            MetricKind::Randers => {
                let [w1, w2] = self.metric.wind.as_ref().expect("validated");
                let wind = VectorField { w1: w1.field("metric.wind")?, w2: w2.field("metric.wind")? };
                make_zermelo(background, wind, &domain).map_err(|e| invalid("metric.wind", e))?
            }
        };
        Manifold::new(spec, domain).map_err(|e| invalid("metric", e))
    }

    pub fn epsilon(&self) -> f64 {
        self.set.epsilon.unwrap_or(0.5 * self.grid.h)
    }

    pub fn closed_set(&self) -> Result<ClosedSet, ConfigError> {
        let prims = self
            .set
            .primitives
            .iter()
            .map(|p| match p {
                PrimitiveConfig::Point { at } => Primitive::Point { at: pt(*at) },
                PrimitiveConfig::Polyline { points, closed } => {
                    Primitive::Polyline { points: points.iter().map(|p| pt(*p)).collect(), closed: *closed }
                }
                PrimitiveConfig::Circle { center, radius } => {
                    Primitive::Circle { center: pt(*center), radius: *radius }
                }
                PrimitiveConfig::Disc { center, radius } => Primitive::Disc { center: pt(*center), radius: *radius },
                PrimitiveConfig::NotchedDisc { center, radius, angles } => {
                    Primitive::notched_disc(pt(*center), *radius, angles)
                }
            })
            .collect();
        ClosedSet::new(prims, self.epsilon()).map_err(|e| invalid("set.primitives", e))
    }

    pub fn field_options(&self) -> FieldOptions {
        FieldOptions {
            eta: self.grid.eta,
            theta_sep: self.grid.theta_sep_deg.to_radians(),
            max_sweeps: self.grid.max_sweeps,
        }
    }

    /// Circle centers through consecutive notch boundary points, on the far side from the
    /// disc center.
    pub fn notch_centers(&self, count: usize) -> Vec<ChartPoint> {
        let Some((c, r, angles)) = self.set.primitives.iter().find_map(|p| match p {
            PrimitiveConfig::NotchedDisc { center, radius, angles } => Some((pt(*center), *radius, angles)),
            _ => None,
        }) else {
            return Vec::new();
        };
        angles
            .windows(2)
            .take(count)
            .map(|w| {
                let a = c + Vec2::from_angle(w[0]) * r;
                let b = c + Vec2::from_angle(w[1]) * r;
                let mid = a + (b - a) * 0.5;
                let half = (b - a).chart_len() * 0.5;
                let out = (mid - c) * (1.0 / (mid - c).chart_len());
                mid + out * (r * r - half * half).sqrt()
            })
            .collect()
    }

    /// The scenario with every default spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_names() {
        assert_eq!(
            bundled_scenarios(),
            [
                "euclid-two-points",
                "euclid-circle",
                "randers-wind05-point",
                "torus-point",
                "example26",
                "euclid-three-points"
            ]
        );
        for name in bundled_scenarios() {
            let s = bundled(name).unwrap();
            assert_eq!(s.name, name);
            s.manifold().unwrap();
            s.closed_set().unwrap();
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let text = BUNDLED[0].1.replace("[grid]", "[grid]\nspacing = 0.1");
        let e = Scenario::parse(&text).unwrap_err().to_string();
        assert!(e.contains("spacing"), "{e}");
    }

    #[test]
    fn semantic_errors_name_the_key() {
        let text = BUNDLED[0].1.replace("h = 0.015625", "h = -1.0");
        let e = Scenario::parse(&text).unwrap_err().to_string();
        assert!(e.contains("grid.h"), "{e}");
        let s = Scenario::parse(&BUNDLED[2].1.replace("wind = [0.5, 0.0]", "wind = [1.5, 0.0]")).unwrap();
        let e = s.manifold().unwrap_err().to_string();
        assert!(e.contains("metric.wind"), "{e}");
    }

    #[test]
    fn example26_encoding() {
        let s = bundled("example26").unwrap();
        let PrimitiveConfig::NotchedDisc { angles, radius, .. } = &s.set.primitives[0] else { panic!() };
        assert_eq!(*radius, 1.0);
        assert_eq!(angles.len(), 7);
        for (n, a) in angles.iter().enumerate() {
            assert!((a - std::f64::consts::PI / 2f64.powi(n as i32 + 1)).abs() < 1e-15);
        }
        let q = s.notch_centers(6);
        assert_eq!(q.len(), 6);
        for w in q.windows(2) {
            assert!((w[1] - ChartPoint::new(2.0, 0.0)).chart_len() < (w[0] - ChartPoint::new(2.0, 0.0)).chart_len());
        }
    }

    #[test]
    fn randers_encoding() {
        let s = bundled("randers-wind05-point").unwrap();
        assert_eq!(s.metric.kind, MetricKind::Randers);
        assert_eq!(s.metric.wind, Some([Coef::Number(0.5), Coef::Number(0.0)]));
        assert_eq!(s.set.primitives, vec![PrimitiveConfig::Point { at: [0.0, 0.0] }]);
    }

    #[test]
    fn defaults_round_trip() {
        let s = bundled("euclid-circle").unwrap();
        assert_eq!(Scenario::parse(&s.to_toml()).unwrap(), s);
    }
}
