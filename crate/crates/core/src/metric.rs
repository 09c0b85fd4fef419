//! Finsler norms on a 2-D chart: Euclidean, Riemannian and Randers (Zermelo navigation).
//!
//! Every supported norm has the Randers shape `F(x, y) = sqrt(a_x(y, y)) + b_x(y)`, with
//! `b = 0` for the Riemannian kinds. The Zermelo construction produces `(a, b)` from a
//! Riemannian background `h` and a wind `W` with `|W|_h < 1`; the unit ball of `F` at `x`
//! is then the `h`-unit ball translated by `W(x)`.

use evalexpr::{Context, EvalexprError, EvalexprResult, Node, Value};
use thiserror::Error;

use crate::geom::{ChartPoint, Domain, Vec2};

/// Smallest admissible eigenvalue of a fundamental tensor.
pub const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("Randers norm ill-posed at ({x}, {y}): wind norm {wind_norm} >= 1")]
    RandersIllPosed { x: f64, y: f64, wind_norm: f64 },
    #[error("wind too strong: |W|_h = {wind_norm} at ({x}, {y})")]
    WindTooStrong { x: f64, y: f64, wind_norm: f64 },
    #[error("degenerate fundamental tensor at ({x}, {y}): min eigenvalue {min_eigenvalue}")]
    DegenerateTensor { x: f64, y: f64, min_eigenvalue: f64 },
    #[error("background tensor not positive definite at ({x}, {y})")]
    NotPositiveDefinite { x: f64, y: f64 },
    #[error("zero tangent vector")]
    ZeroVector,
    #[error("expression `{expr}`: {message}")]
    Expression { expr: String, message: String },
    #[error("raster: {0}")]
    Raster(String),
}

/// Variables `x`, `y`, `pi` and a handful of plain-named math functions.
struct PointContext {
    x: Value,
    y: Value,
    pi: Value,
}

impl Context for PointContext {
    fn get_value(&self, identifier: &str) -> Option<&Value> {
        match identifier {
            "x" => Some(&self.x),
            "y" => Some(&self.y),
            "pi" => Some(&self.pi),
            _ => None,
        }
    }

    fn call_function(&self, identifier: &str, argument: &Value) -> EvalexprResult<Value> {
        let f: fn(f64) -> f64 = match identifier {
            "sin" => f64::sin,
            "cos" => f64::cos,
            "tan" => f64::tan,
            "exp" => f64::exp,
            "ln" => f64::ln,
            "sqrt" => f64::sqrt,
            "sinh" => f64::sinh,
            "cosh" => f64::cosh,
            "tanh" => f64::tanh,
            "atan" => f64::atan,
            "abs" => f64::abs,
            _ => return Err(EvalexprError::FunctionIdentifierNotFound(identifier.to_string())),
        };
        Ok(Value::Float(f(argument.as_number()?)))
    }

    fn are_builtin_functions_disabled(&self) -> bool {
        false
    }

    fn set_builtin_functions_disabled(&mut self, _disabled: bool) -> EvalexprResult<()> {
        Ok(())
    }
}

/// A closed-form expression in the chart coordinates `x`, `y`.
#[derive(Debug, Clone)]
pub struct ExprField {
    source: String,
    tree: Node,
}

impl ExprField {
    pub fn parse(source: &str) -> Result<Self, MetricError> {
        let tree = evalexpr::build_operator_tree(source)
            .map_err(|e| MetricError::Expression { expr: source.to_string(), message: e.to_string() })?;
        let field = Self { source: source.to_string(), tree };
        // surface unknown identifiers at parse time
        field.try_eval(ChartPoint::new(0.25, 0.5))?;
        Ok(field)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn try_eval(&self, p: ChartPoint) -> Result<f64, MetricError> {
        let ctx = PointContext { x: Value::Float(p.x), y: Value::Float(p.y), pi: Value::Float(std::f64::consts::PI) };
        self.tree
            .eval_number_with_context(&ctx)
            .map_err(|e| MetricError::Expression { expr: self.source.clone(), message: e.to_string() })
    }

    fn eval(&self, p: ChartPoint) -> f64 {
        self.try_eval(p).unwrap_or(f64::NAN)
    }
}

/// Samples on a regular grid, bilinearly interpolated and clamped at the edges.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterField {
    pub origin: ChartPoint,
    pub spacing: Vec2,
    pub nx: usize,
    pub ny: usize,
    /// Row-major: `values[j * nx + i]` is the sample at `origin + (i dx, j dy)`.
    pub values: Vec<f64>,
}

impl RasterField {
    pub fn new(origin: ChartPoint, spacing: Vec2, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self, MetricError> {
        if nx < 2 || ny < 2 {
            return Err(MetricError::Raster(format!("need at least 2x2 samples, got {nx}x{ny}")));
        }
        if values.len() != nx * ny {
            return Err(MetricError::Raster(format!("expected {} values, got {}", nx * ny, values.len())));
        }
        if !(spacing.x > 0.0 && spacing.y > 0.0) {
            return Err(MetricError::Raster("spacing must be positive".into()));
        }
        Ok(Self { origin, spacing, nx, ny, values })
    }

    fn eval(&self, p: ChartPoint) -> f64 {
        let fx = ((p.x - self.origin.x) / self.spacing.x).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.origin.y) / self.spacing.y).clamp(0.0, (self.ny - 1) as f64);
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let v = |i: usize, j: usize| self.values[j * self.nx + i];
        (1.0 - ty) * ((1.0 - tx) * v(i, j) + tx * v(i + 1, j)) + ty * ((1.0 - tx) * v(i, j + 1) + tx * v(i + 1, j + 1))
    }
}

/// A real-valued coefficient field on the chart.
#[derive(Debug, Clone)]
pub enum ScalarField {
    Constant(f64),
    Expr(ExprField),
    Raster(RasterField),
}

impl ScalarField {
    pub fn eval(&self, p: ChartPoint) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Expr(e) => e.eval(p),
            ScalarField::Raster(r) => r.eval(p),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScalarField::Constant(_))
    }
}

impl From<f64> for ScalarField {
    fn from(c: f64) -> Self {
        ScalarField::Constant(c)
    }
}

/// Symmetric 2x2 tensor field `h_ij(x)`.
#[derive(Debug, Clone)]
pub struct TensorField {
    pub g11: ScalarField,
    pub g12: ScalarField,
    pub g22: ScalarField,
}

impl TensorField {
    pub fn identity() -> Self {
        Self::constant(1.0, 0.0, 1.0)
    }

    pub fn constant(g11: f64, g12: f64, g22: f64) -> Self {
        Self { g11: g11.into(), g12: g12.into(), g22: g22.into() }
    }

    fn eval(&self, p: ChartPoint) -> [f64; 3] {
        [self.g11.eval(p), self.g12.eval(p), self.g22.eval(p)]
    }

    fn is_constant(&self) -> bool {
        self.g11.is_constant() && self.g12.is_constant() && self.g22.is_constant()
    }
}

/// Vector field `W(x)` (the wind of Zermelo navigation).
#[derive(Debug, Clone)]
pub struct VectorField {
    pub w1: ScalarField,
    pub w2: ScalarField,
}

impl VectorField {
    pub fn constant(w1: f64, w2: f64) -> Self {
        Self { w1: w1.into(), w2: w2.into() }
    }

    pub fn eval(&self, p: ChartPoint) -> Vec2 {
        Vec2::new(self.w1.eval(p), self.w2.eval(p))
    }

    fn is_constant(&self) -> bool {
        self.w1.is_constant() && self.w2.is_constant()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Euclidean,
    Riemannian,
    Randers,
}

/// A Finsler norm on the chart.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    kind: MetricKind,
    background: TensorField,
    wind: Option<VectorField>,
    homogeneous: bool,
}

impl MetricSpec {
    pub fn euclidean() -> Self {
        Self { kind: MetricKind::Euclidean, background: TensorField::identity(), wind: None, homogeneous: true }
    }

    pub fn riemannian(h: TensorField) -> Self {
        let homogeneous = h.is_constant();
        Self { kind: MetricKind::Riemannian, background: h, wind: None, homogeneous }
    }

    /// Randers norm from Zermelo data without checking the wind bound.
    pub fn randers_unchecked(h: TensorField, wind: VectorField) -> Self {
        let homogeneous = h.is_constant() && wind.is_constant();
        Self { kind: MetricKind::Randers, background: h, wind: Some(wind), homogeneous }
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn background(&self) -> &TensorField {
        &self.background
    }

    pub fn wind(&self) -> Option<&VectorField> {
        self.wind.as_ref()
    }

    /// All coefficient fields are literal constants, so geodesics are chart lines.
    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    /// The norm data at `p`.
    pub fn at(&self, p: ChartPoint) -> Result<LocalNorm, MetricError> {
        let [h11, h12, h22] = self.background.eval(p);
        if self.kind != MetricKind::Euclidean && !(h11 > 0.0 && h11 * h22 - h12 * h12 > 0.0) {
            return Err(MetricError::NotPositiveDefinite { x: p.x, y: p.y });
        }
        let Some(wind) = &self.wind else {
            return Ok(LocalNorm { a: [h11, h12, h22], b: Vec2::ZERO });
        };
        let w = wind.eval(p);
        // W lowered with h
        let wl = Vec2::new(h11 * w.x + h12 * w.y, h12 * w.x + h22 * w.y);
        let w2 = w.dot(wl);
        if !(w2 < 1.0) {
            return Err(MetricError::RandersIllPosed { x: p.x, y: p.y, wind_norm: w2.max(0.0).sqrt() });
        }
        let lam = 1.0 - w2;
        let a = [
            h11 / lam + wl.x * wl.x / (lam * lam),
            h12 / lam + wl.x * wl.y / (lam * lam),
            h22 / lam + wl.y * wl.y / (lam * lam),
        ];
        Ok(LocalNorm { a, b: wl * (-1.0 / lam) })
    }

    /// Checks the strong-convexity prerequisites on a sample grid of the domain.
    pub fn validate(&self, domain: &Domain, samples_per_axis: usize) -> Result<(), MetricError> {
        let (lo, ext) = domain.bounds();
        let n = samples_per_axis.max(2);
        for i in 0..n {
            for j in 0..n {
                let p =
                    ChartPoint::new(lo.x + ext.x * i as f64 / (n - 1) as f64, lo.y + ext.y * j as f64 / (n - 1) as f64);
                match self.at(p) {
                    Ok(_) => {}
                    Err(MetricError::RandersIllPosed { x, y, wind_norm }) => {
                        return Err(MetricError::WindTooStrong { x, y, wind_norm })
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(())
    }
}

/// Randers data `(a, b)` frozen at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalNorm {
    /// `a11, a12, a22`.
    pub a: [f64; 3],
    pub b: Vec2,
}

impl LocalNorm {
    fn a_apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.a[0] * v.x + self.a[1] * v.y, self.a[1] * v.x + self.a[2] * v.y)
    }

    fn alpha(&self, v: Vec2) -> f64 {
        v.dot(self.a_apply(v)).max(0.0).sqrt()
    }

    pub fn norm(&self, v: Vec2) -> f64 {
        if v.is_zero() {
            return 0.0;
        }
        self.alpha(v) + self.b.dot(v)
    }

    /// Fiber gradient of `F` at `v != 0`.
    pub fn grad(&self, v: Vec2) -> Vec2 {
        self.a_apply(v) * (1.0 / self.alpha(v)) + self.b
    }

    /// The covector `g_v(v, ·) = F(v) ∂F/∂y(v)` (Legendre transform of `v`).
    pub fn legendre(&self, v: Vec2) -> Vec2 {
        self.grad(v) * self.norm(v)
    }

    /// `g_x(x, v)` without forming the tensor.
    pub fn g_pair(&self, x: Vec2, v: Vec2) -> f64 {
        self.legendre(x).dot(v)
    }

    /// Closed-form Randers fundamental tensor at `v != 0`.
    pub fn tensor(&self, v: Vec2) -> FundamentalTensor {
        let alpha = self.alpha(v);
        let l = self.a_apply(v) * (1.0 / alpha);
        let f = alpha + self.b.dot(v);
        let s = f / alpha;
        let gr = l + self.b;
        FundamentalTensor {
            g11: s * (self.a[0] - l.x * l.x) + gr.x * gr.x,
            g12: s * (self.a[1] - l.x * l.y) + gr.x * gr.y,
            g22: s * (self.a[2] - l.y * l.y) + gr.y * gr.y,
        }
    }

    /// `F(v)` for `v` on the unit chart circle at angle `theta`, rescaled to `F = 1`.
    pub fn unit_at_angle(&self, theta: f64) -> Vec2 {
        let u = Vec2::from_angle(theta);
        u * (1.0 / self.norm(u))
    }
}

/// Symmetric 2x2 matrix `g_ij(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalTensor {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl FundamentalTensor {
    pub fn apply(&self, u: Vec2, v: Vec2) -> f64 {
        u.x * (self.g11 * v.x + self.g12 * v.y) + u.y * (self.g12 * v.x + self.g22 * v.y)
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.g11 + self.g22;
        let det = self.g11 * self.g22 - self.g12 * self.g12;
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        (0.5 * tr - disc, 0.5 * tr + disc)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    /// Solves `g z = rhs`.
    pub fn solve(&self, rhs: Vec2) -> Vec2 {
        let det = self.g11 * self.g22 - self.g12 * self.g12;
        Vec2::new((self.g22 * rhs.x - self.g12 * rhs.y) / det, (self.g11 * rhs.y - self.g12 * rhs.x) / det)
    }
}

/// `F(x, v)`; zero for the zero vector.
pub fn norm(m: &MetricSpec, x: ChartPoint, v: Vec2) -> Result<f64, MetricError> {
    Ok(m.at(x)?.norm(v))
}

/// The fundamental tensor `g_v` at `x`.
pub fn fundamental_tensor(m: &MetricSpec, x: ChartPoint, v: Vec2) -> Result<FundamentalTensor, MetricError> {
    if v.is_zero() {
        return Err(MetricError::ZeroVector);
    }
    let g = m.at(x)?.tensor(v);
    let min_eigenvalue = g.min_eigenvalue();
    if !(min_eigenvalue > EIGEN_FLOOR) {
        return Err(MetricError::DegenerateTensor { x: x.x, y: x.y, min_eigenvalue });
    }
    Ok(g)
}

/// Geodesic acceleration `(ẍ, ÿ)` at `(x, v)`: the Euler-Lagrange equations of `F²/2`
/// solved for the second derivative.
pub fn spray(m: &MetricSpec, x: ChartPoint, v: Vec2) -> Result<Vec2, MetricError> {
    if v.is_zero() {
        return Err(MetricError::ZeroVector);
    }
    if m.is_homogeneous() {
        return Ok(Vec2::ZERO);
    }
    let g = fundamental_tensor(m, x, v)?;
    let step = 1e-5 * (1.0 + x.x.abs().max(x.y.abs()));
    let mut dl_dx = [0.0; 2];
    let mut mixed = Vec2::ZERO;
    for (k, e) in [Vec2::new(step, 0.0), Vec2::new(0.0, step)].into_iter().enumerate() {
        let plus = m.at(x + e)?;
        let minus = m.at(x - e)?;
        let (fp, fm) = (plus.norm(v), minus.norm(v));
        dl_dx[k] = 0.5 * (fp * fp - fm * fm) / (2.0 * step);
        let dp = (plus.legendre(v) - minus.legendre(v)) * (1.0 / (2.0 * step));
        mixed += dp * if k == 0 { v.x } else { v.y };
    }
    Ok(g.solve(Vec2::new(dl_dx[0], dl_dx[1]) - mixed))
}

/// Randers norm of Zermelo navigation on background `h` with wind `wind`, checked on a
/// 65x65 sample of `domain`.
pub fn make_zermelo(h: TensorField, wind: VectorField, domain: &Domain) -> Result<MetricSpec, MetricError> {
    let m = MetricSpec::randers_unchecked(h, wind);
    m.validate(domain, 65)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wind05() -> MetricSpec {
        make_zermelo(TensorField::identity(), VectorField::constant(0.5, 0.0), &Domain::plane((-2.0, -2.0), (2.0, 2.0)))
            .unwrap()
    }

    const O: ChartPoint = ChartPoint::new(0.0, 0.0);

    #[test]
    fn euclidean_norm_and_tensor() {
        let m = MetricSpec::euclidean();
        assert_eq!(norm(&m, O, Vec2::new(3.0, 4.0)).unwrap(), 5.0);
        let g = fundamental_tensor(&m, O, Vec2::new(0.3, -2.0)).unwrap();
        assert!((g.g11 - 1.0).abs() < 1e-15 && g.g12.abs() < 1e-15 && (g.g22 - 1.0).abs() < 1e-15);
        assert_eq!(spray(&m, O, Vec2::new(1.0, 2.0)).unwrap(), Vec2::ZERO);
    }

    #[test]
    fn zermelo_travel_time_values() {
        let m = wind05();
        let f = |v| norm(&m, O, v).unwrap();
        assert!((f(Vec2::new(1.0, 0.0)) - 2.0 / 3.0).abs() < 1e-14);
        assert!((f(Vec2::new(-1.0, 0.0)) - 2.0).abs() < 1e-14);
        assert!((f(Vec2::new(0.0, 1.0)) - 2.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((f(Vec2::new(1.5, 0.0)) - 1.0).abs() < 1e-14);
        let g = fundamental_tensor(&m, O, Vec2::new(1.0, 0.0)).unwrap();
        let v = Vec2::new(1.0, 0.0);
        assert!((g.apply(v, v) - 4.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn no_wind_is_background_norm() {
        let h = TensorField::constant(2.0, 0.0, 1.0);
        let m = make_zermelo(h, VectorField::constant(0.0, 0.0), &Domain::plane((0.0, 0.0), (1.0, 1.0))).unwrap();
        let v = Vec2::new(1.0, 1.0);
        assert!((norm(&m, O, v).unwrap() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_rules() {
        let m = wind05();
        assert_eq!(norm(&m, O, Vec2::ZERO).unwrap(), 0.0);
        assert_eq!(fundamental_tensor(&m, O, Vec2::ZERO), Err(MetricError::ZeroVector));
        assert_eq!(spray(&m, O, Vec2::ZERO), Err(MetricError::ZeroVector));
    }

    #[test]
    fn strong_wind_rejected() {
        let err = make_zermelo(
            TensorField::identity(),
            VectorField { w1: ScalarField::Expr(ExprField::parse("x").unwrap()), w2: 0.0.into() },
            &Domain::plane((-2.0, -1.0), (2.0, 1.0)),
        )
        .unwrap_err();
        assert!(matches!(err, MetricError::WindTooStrong { .. }));
        let m = MetricSpec::randers_unchecked(TensorField::identity(), VectorField::constant(1.0, 0.0));
        assert!(matches!(norm(&m, O, Vec2::new(1.0, 0.0)), Err(MetricError::RandersIllPosed { .. })));
    }

    #[test]
    fn expressions_and_rasters() {
        let e = ExprField::parse("0.1 * sin(pi * x) + y * y").unwrap();
        let p = ChartPoint::new(0.5, 2.0);
        assert!((ScalarField::Expr(e).eval(p) - 4.1).abs() < 1e-12);
        assert!(ExprField::parse("foo(x)").is_err());
        assert!(ExprField::parse("x +* 2").is_err());
        let r = RasterField::new(O, Vec2::new(1.0, 1.0), 2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let r = ScalarField::Raster(r);
        assert!((r.eval(ChartPoint::new(0.5, 0.5)) - 1.5).abs() < 1e-15);
        assert!((r.eval(ChartPoint::new(5.0, -5.0)) - 1.0).abs() < 1e-15);
        assert!(RasterField::new(O, Vec2::new(1.0, 1.0), 2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn nonconstant_metric_not_homogeneous() {
        let m = MetricSpec::riemannian(TensorField {
            g11: ScalarField::Expr(ExprField::parse("1 + 0.1 * x").unwrap()),
            g12: 0.0.into(),
            g22: 1.0.into(),
        });
        assert!(!m.is_homogeneous());
        assert!(wind05().is_homogeneous());
    }
}
