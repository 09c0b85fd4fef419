//! Geodesic integration, the exponential map and its local inverse, Jacobi fields from
//! finite differences of the exponential family, and two-point minimal geodesics.
//!
//! Paths are integrated in lifted (unwrapped) chart coordinates; on the torus the metric is
//! evaluated at the wrapped point, and each sample stores both.

use std::io::Write;

use thiserror::Error;

use crate::geom::{ChartPoint, Shift, Vec2};
use crate::manifold::Manifold;
use crate::metric::MetricError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesicError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("geodesic left the window at t = {t} near ({x}, {y})")]
    LeftDomain { t: f64, x: f64, y: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("shooting did not converge: {0}")]
    NoConvergence(String),
    #[error("no minimizing geodesic found: {0}")]
    NotFound(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    /// Local error tolerance of the 5(4) pair.
    pub tol: f64,
    /// Largest accepted step in arclength.
    pub max_step: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_step: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub t: f64,
    /// Canonical (wrapped) chart point.
    pub point: ChartPoint,
    /// Unwrapped point, continuous along the path.
    pub lift: ChartPoint,
    pub velocity: Vec2,
}

/// A unit-speed geodesic sampled at the accepted integrator steps.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub samples: Vec<PathSample>,
    pub total_length: f64,
}

impl GeodesicPath {
    pub fn start(&self) -> ChartPoint {
        self.samples[0].point
    }

    pub fn end(&self) -> ChartPoint {
        self.samples.last().unwrap().point
    }

    pub fn end_lift(&self) -> ChartPoint {
        self.samples.last().unwrap().lift
    }

    pub fn initial_velocity(&self) -> Vec2 {
        self.samples[0].velocity
    }

    pub fn terminal_velocity(&self) -> Vec2 {
        self.samples.last().unwrap().velocity
    }

    /// Lifted position at arclength `t` (cubic Hermite between samples).
    pub fn lift_at(&self, t: f64) -> ChartPoint {
        let s = &self.samples;
        if t <= s[0].t {
            return s[0].lift;
        }
        let k = s.partition_point(|p| p.t < t);
        if k >= s.len() {
            return s[s.len() - 1].lift;
        }
        let (a, b) = (&s[k - 1], &s[k]);
        let h = b.t - a.t;
        if h <= 0.0 {
            return b.lift;
        }
        let u = (t - a.t) / h;
        let (h00, h10, h01, h11) = (
            2.0 * u * u * u - 3.0 * u * u + 1.0,
            u * u * u - 2.0 * u * u + u,
            -2.0 * u * u * u + 3.0 * u * u,
            u * u * u - u * u,
        );
        let pa = a.lift - ChartPoint::default();
        let pb = b.lift - ChartPoint::default();
        let v = pa * h00 + a.velocity * (h10 * h) + pb * h01 + b.velocity * (h11 * h);
        ChartPoint::new(v.x, v.y)
    }

    /// CSV with header `t,x,y,v1,v2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,y,v1,v2")?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{},{}", s.t, s.point.x, s.point.y, s.velocity.x, s.velocity.y)?;
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau; the spray is autonomous so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

type State = [f64; 4];

fn rhs(m: &Manifold, s: &State) -> Result<State, MetricError> {
    let v = Vec2::new(s[2], s[3]);
    let a = m.spray(ChartPoint::new(s[0], s[1]), v)?;
    Ok([v.x, v.y, a.x, a.y])
}

fn combine(s: &State, k: &[State; 7], coeffs: &[f64], h: f64) -> State {
    let mut out = *s;
    for (j, c) in coeffs.iter().enumerate() {
        if *c != 0.0 {
            for i in 0..4 {
                out[i] += h * c * k[j][i];
            }
        }
    }
    out
}

enum Stop {
    Error,
    Truncate,
}

/// Integrates the spray from `start` (lifted) with unit-speed `v` for arclength `length`.
/// Returns the path and whether it was truncated at the window boundary.
fn run(
    m: &Manifold,
    start: ChartPoint,
    v: Vec2,
    length: f64,
    opts: IntegrateOptions,
    checkpoints: &[f64],
    on_exit: Stop,
) -> Result<(GeodesicPath, bool), GeodesicError> {
    let sample = |t: f64, s: &State| PathSample {
        t,
        point: m.domain.wrap(ChartPoint::new(s[0], s[1])),
        lift: ChartPoint::new(s[0], s[1]),
        velocity: Vec2::new(s[2], s[3]),
    };
    let mut state: State = [start.x, start.y, v.x, v.y];
    let mut samples = vec![sample(0.0, &state)];
    if length <= 0.0 {
        return Ok((GeodesicPath { samples, total_length: 0.0 }, false));
    }
    let mut t = 0.0;
    let mut h = opts.max_step.min(length);
    let mut next_cp = checkpoints.iter().copied().filter(|&c| c > 0.0 && c < length);
    let mut cp = next_cp.next();
    let min_h = 1e-13 * (1.0 + length);
    let mut k: [State; 7] = [[0.0; 4]; 7];
    k[0] = rhs(m, &state)?;
    while t < length {
        let target = cp.unwrap_or(length);
        let mut step = h.min(target - t);
        let last = step >= target - t - 1e-15 * (1.0 + length);
        if last {
            step = target - t;
        }
        for st in 1..7 {
            let y = combine(&state, &k, &A[st][..st], step);
            k[st] = rhs(m, &y)?;
        }
        let y5 = combine(&state, &k, &A[6], step);
        let mut err = 0.0;
        for i in 0..4 {
            let mut e = 0.0;
            for (j, ej) in E.iter().enumerate() {
                e += ej * k[j][i];
            }
            let sc = opts.tol * (1.0 + state[i].abs().max(y5[i].abs()));
            err += (step * e / sc).powi(2);
        }
        let err = (err / 4.0).sqrt();
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err <= 1.0 {
            let mut next = y5;
            let p = ChartPoint::new(next[0], next[1]);
            let f = m.norm(p, Vec2::new(next[2], next[3]))?;
            next[2] /= f;
            next[3] /= f;
            t = if last { target } else { t + step };
            if last && cp.is_some() {
                cp = next_cp.next();
            }
            if !m.domain.contains(p) {
                match on_exit {
                    Stop::Error => return Err(GeodesicError::LeftDomain { t, x: p.x, y: p.y }),
                    Stop::Truncate => {
                        let total_length = samples.last().unwrap().t;
                        return Ok((GeodesicPath { samples, total_length }, true));
                    }
                }
            }
            state = next;
            samples.push(sample(t, &state));
            // FSAL does not survive the renormalisation
            k[0] = rhs(m, &state)?;
            if !last || step >= h {
                h = (step * factor).min(opts.max_step);
            }
        } else {
            h = step * factor;
            if h < min_h {
                return Err(GeodesicError::StepUnderflow { t });
            }
        }
    }
    Ok((GeodesicPath { samples, total_length: length }, false))
}

/// Integrates the geodesic from `p` with unit initial velocity `v` for arclength `length`.
pub fn integrate(m: &Manifold, p: ChartPoint, v: Vec2, length: f64, tol: f64) -> Result<GeodesicPath, GeodesicError> {
    integrate_with(m, p, v, length, IntegrateOptions { tol, ..Default::default() })
}

pub fn integrate_with(
    m: &Manifold,
    p: ChartPoint,
    v: Vec2,
    length: f64,
    opts: IntegrateOptions,
) -> Result<GeodesicPath, GeodesicError> {
    check_unit(m, p, v)?;
    Ok(run(m, p, v, length, opts, &[], Stop::Error)?.0)
}

/// Like [`integrate_with`], but a path leaving a plane window is cut at the last sample inside.
pub fn integrate_truncated(
    m: &Manifold,
    p: ChartPoint,
    v: Vec2,
    length: f64,
    opts: IntegrateOptions,
) -> Result<(GeodesicPath, bool), GeodesicError> {
    check_unit(m, p, v)?;
    run(m, p, v, length, opts, &[], Stop::Truncate)
}

/// Lifted positions at the requested arclengths (sorted, within `[0, t_max]`).
fn positions_at(
    m: &Manifold,
    p: ChartPoint,
    v: Vec2,
    times: &[f64],
    opts: IntegrateOptions,
) -> Result<Vec<ChartPoint>, GeodesicError> {
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let (path, _) = run(m, p, v, t_max, opts, times, Stop::Error)?;
    Ok(times
        .iter()
        .map(|&t| {
            path.samples
                .iter()
                .find(|s| (s.t - t).abs() <= 1e-12 * (1.0 + t_max))
                .map(|s| s.lift)
                .unwrap_or_else(|| path.lift_at(t))
        })
        .collect())
}

fn check_unit(m: &Manifold, p: ChartPoint, v: Vec2) -> Result<(), GeodesicError> {
    let f = m.norm(p, v)?;
    if (f - 1.0).abs() > 1e-6 {
        return Err(GeodesicError::Degenerate(format!("initial velocity has F = {f}, expected 1")));
    }
    Ok(())
}

/// `exp_p(v)` as a lifted point (unwrapped on the torus).
pub fn exp_lift(m: &Manifold, p: ChartPoint, v: Vec2, opts: IntegrateOptions) -> Result<ChartPoint, GeodesicError> {
    let f = m.norm(p, v)?;
    if f == 0.0 {
        return Ok(p);
    }
    if m.is_homogeneous() {
        return Ok(p + v);
    }
    Ok(run(m, p, v * (1.0 / f), f, opts, &[], Stop::Error)?.0.end_lift())
}

/// `exp_p(v)` wrapped into the domain.
pub fn exp(m: &Manifold, p: ChartPoint, v: Vec2, tol: f64) -> Result<ChartPoint, GeodesicError> {
    let opts = IntegrateOptions { tol, ..Default::default() };
    Ok(m.domain.wrap(exp_lift(m, p, v, opts)?))
}

/// Newton shooting for `v` with `exp_p(v) = target` (lifted), starting from `v0`.
pub fn shoot(m: &Manifold, p: ChartPoint, target: ChartPoint, v0: Vec2, tol: f64) -> Result<Vec2, GeodesicError> {
    if m.is_homogeneous() {
        return Ok(target - p);
    }
    let opts = IntegrateOptions { tol: (tol * 1e-2).clamp(1e-12, 1e-8), ..Default::default() };
    let residual = |v: Vec2| -> Result<Vec2, GeodesicError> { Ok(exp_lift(m, p, v, opts)? - target) };
    let mut v = v0;
    let mut r = residual(v)?;
    for _ in 0..40 {
        let rn = r.chart_len();
        if rn <= tol {
            return Ok(v);
        }
        let dv = 1e-6 * v.chart_len().max(1e-3);
        let jx = (residual(v + Vec2::new(dv, 0.0))? - residual(v - Vec2::new(dv, 0.0))?) * (0.5 / dv);
        let jy = (residual(v + Vec2::new(0.0, dv))? - residual(v - Vec2::new(0.0, dv))?) * (0.5 / dv);
        let det = jx.x * jy.y - jy.x * jx.y;
        if det.abs() < 1e-300 {
            return Err(GeodesicError::NoConvergence("singular shooting Jacobian".into()));
        }
        let step = Vec2::new(-(jy.y * r.x - jy.x * r.y) / det, -(-jx.y * r.x + jx.x * r.y) / det);
        let mut alpha = 1.0;
        loop {
            let cand = v + step * alpha;
            match residual(cand) {
                Ok(rc) if rc.chart_len() < rn => {
                    v = cand;
                    r = rc;
                    break;
                }
                _ if alpha > 1.0 / 64.0 => alpha *= 0.5,
                Ok(_) | Err(_) => {
                    return Err(GeodesicError::NoConvergence(format!("line search stalled at residual {rn}")))
                }
            }
        }
    }
    if r.chart_len() <= tol {
        Ok(v)
    } else {
        Err(GeodesicError::NoConvergence(format!("residual {} after 40 iterations", r.chart_len())))
    }
}

/// Local inverse of the exponential map at `p`.
pub fn log(m: &Manifold, p: ChartPoint, q: ChartPoint, tol: f64) -> Result<Vec2, GeodesicError> {
    let disp = m.domain.displacement(p, q);
    if disp.is_zero() {
        return Ok(Vec2::ZERO);
    }
    let chord = m.norm(p, disp)?;
    if chord > m.convex_radius() * (1.0 + 1e-9) {
        return Err(GeodesicError::NoConvergence(format!(
            "target at chord length {chord} beyond convex radius {}",
            m.convex_radius()
        )));
    }
    shoot(m, p, p + disp, disp, tol)
}

/// Variation field of the family `t -> exp_p(t v(θ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiSample {
    pub t: f64,
    pub y: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiField {
    pub samples: Vec<JacobiSample>,
    /// `sup_t F(Y(t))`, the empirical bound on the family's spreading.
    pub sup_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiOptions {
    pub h_theta: f64,
    pub samples: usize,
    /// Largest admissible `t_max`.
    pub bound: f64,
    pub integrate: IntegrateOptions,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self {
            h_theta: 1e-2,
            samples: 32,
            bound: f64::INFINITY,
            integrate: IntegrateOptions { tol: 1e-10, max_step: 0.05 },
        }
    }
}

/// Unit vector of the indicatrix at `p` in chart direction `theta`.
pub fn indicatrix(m: &Manifold, p: ChartPoint, theta: f64) -> Result<Vec2, GeodesicError> {
    Ok(m.local(p)?.unit_at_angle(theta))
}

/// `Y(t) = ∂/∂θ exp_p(t v(θ))` by central differences in `θ`.
pub fn jacobi(
    m: &Manifold,
    p: ChartPoint,
    theta: f64,
    t_max: f64,
    opts: JacobiOptions,
) -> Result<JacobiField, GeodesicError> {
    if t_max > opts.bound {
        return Err(GeodesicError::Degenerate(format!("t_max {t_max} exceeds bound {}", opts.bound)));
    }
    let n = opts.samples.max(2);
    let times: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
    let h = opts.h_theta;
    let plus = positions_at(m, p, indicatrix(m, p, theta + h)?, &times, opts.integrate)?;
    let minus = positions_at(m, p, indicatrix(m, p, theta - h)?, &times, opts.integrate)?;
    let center = positions_at(m, p, indicatrix(m, p, theta)?, &times, opts.integrate)?;
    let mut samples = Vec::with_capacity(n);
    let mut sup_norm = 0.0f64;
    for i in 0..n {
        let y = (plus[i] - minus[i]) * (0.5 / h);
        sup_norm = sup_norm.max(m.norm(center[i], y)?);
        samples.push(JacobiSample { t: times[i], y });
    }
    Ok(JacobiField { samples, sup_norm })
}

/// Richardson ratio `|Y_h - Y_{h/2}| / |Y_{h/2} - Y_{h/4}|` at arclength `t`; about 4 for an
/// `O(h²)` central difference.
pub fn jacobi_richardson(m: &Manifold, p: ChartPoint, theta: f64, t: f64, h_theta: f64) -> Result<f64, GeodesicError> {
    let ys: Vec<Vec2> = [h_theta, h_theta / 2.0, h_theta / 4.0]
        .iter()
        .map(|&h| {
            let opts = JacobiOptions { h_theta: h, samples: 2, ..Default::default() };
            jacobi(m, p, theta, t, opts).map(|j| j.samples[1].y)
        })
        .collect::<Result<_, _>>()?;
    Ok((ys[0] - ys[1]).chart_len() / (ys[1] - ys[2]).chart_len())
}

/// Fan size for two-point shooting on non-constant metrics.
pub const FAN_DIRECTIONS: usize = 720;
/// Lattice translates searched on the torus.
pub const TRANSLATE_RADIUS: i32 = 2;

/// Length of the straight chart segment from `a` along `d` (Simpson, 16 panels).
pub fn chord_length(m: &Manifold, a: ChartPoint, d: Vec2) -> Result<f64, MetricError> {
    if m.is_homogeneous() {
        return m.norm(a, d);
    }
    let n = 16;
    let mut s = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * m.norm(a + d * (i as f64 / n as f64), d)?;
    }
    Ok(s / (3.0 * n as f64))
}

/// Shortest geodesic from `p` to `q` (all lattice translates of `q` on the torus).
pub fn minimal_geodesic(m: &Manifold, p: ChartPoint, q: ChartPoint) -> Result<GeodesicPath, GeodesicError> {
    let opts = IntegrateOptions::default();
    let p = m.domain.wrap(p);
    let q = m.domain.wrap(q);
    if m.domain.chart_dist(p, q) < 1e-14 {
        return Err(GeodesicError::Degenerate("p and q coincide".into()));
    }
    let targets: Vec<ChartPoint> =
        m.domain.shifts(TRANSLATE_RADIUS).into_iter().map(|s: Shift| q + m.domain.shift_vec(s)).collect();
    if m.is_homogeneous() {
        let (best, len) = targets
            .iter()
            .map(|&t| (t - p, m.norm(p, t - p)))
            .filter_map(|(d, f)| f.ok().map(|f| (d, f)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| GeodesicError::NotFound("no translate".into()))?;
        return integrate_with(m, p, best * (1.0 / len), len, opts);
    }
    let mut upper = f64::INFINITY;
    for &t in &targets {
        upper = upper.min(chord_length(m, p, t - p)?);
    }
    let horizon = upper * 1.05 + 1e-9;
    let fan_opts = IntegrateOptions { tol: 1e-7, max_step: 0.1 };
    // per direction: (miss distance, time of closest approach, target index)
    let mut fan = Vec::with_capacity(FAN_DIRECTIONS);
    let local = m.local(p)?;
    for k in 0..FAN_DIRECTIONS {
        let u = local.unit_at_angle(k as f64 * std::f64::consts::TAU / FAN_DIRECTIONS as f64);
        let (path, _) = run(m, p, u, horizon, fan_opts, &[], Stop::Truncate)?;
        let mut best = (f64::INFINITY, 0.0, 0usize);
        for w in path.samples.windows(2) {
            let seg = w[1].lift - w[0].lift;
            let l2 = seg.dot(seg);
            for (ti, &t) in targets.iter().enumerate() {
                let s = if l2 > 0.0 { ((t - w[0].lift).dot(seg) / l2).clamp(0.0, 1.0) } else { 0.0 };
                let miss = (w[0].lift + seg * s - t).chart_len();
                if miss < best.0 {
                    best = (miss, w[0].t + s * (w[1].t - w[0].t), ti);
                }
            }
        }
        fan.push((best, u));
    }
    let n = fan.len();
    let mut seeds: Vec<usize> = (0..n)
        .filter(|&k| {
            let m0 = fan[k].0 .0;
            m0.is_finite() && m0 <= fan[(k + n - 1) % n].0 .0 && m0 <= fan[(k + 1) % n].0 .0
        })
        .collect();
    seeds.sort_by(|&a, &b| fan[a].0 .0.total_cmp(&fan[b].0 .0));
    seeds.truncate(6);
    let mut best: Option<(f64, Vec2)> = None;
    for k in seeds {
        let ((_, t_star, ti), u) = fan[k];
        let Ok(v) = shoot(m, p, targets[ti], u * t_star.max(1e-9), 1e-9) else {
            continue;
        };
        let len = m.norm(p, v)?;
        if best.is_none_or(|(b, _)| len < b) {
            best = Some((len, v));
        }
    }
    let (len, v) = best.ok_or_else(|| GeodesicError::NotFound("no shooting bracket converged".into()))?;
    integrate_with(m, p, v * (1.0 / len), len, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Domain;
    use crate::metric::{make_zermelo, ExprField, MetricSpec, ScalarField, TensorField, VectorField};

    fn plane() -> Domain {
        Domain::plane((-3.0, -3.0), (3.0, 3.0))
    }

    fn euclid() -> Manifold {
        Manifold::new(MetricSpec::euclidean(), plane()).unwrap()
    }

    fn wind05() -> Manifold {
        let m = make_zermelo(TensorField::identity(), VectorField::constant(0.5, 0.0), &plane()).unwrap();
        Manifold::new(m, plane()).unwrap()
    }

    /// Hyperbolic half-plane `h = I / y²`; geodesics through (0,1) with horizontal start are
    /// the unit semicircle, `x = tanh s`, `y = sech s`.
    fn half_plane() -> Manifold {
        let inv = || ScalarField::Expr(ExprField::parse("1.0 / (y * y)").unwrap());
        let m = MetricSpec::riemannian(TensorField { g11: inv(), g12: 0.0.into(), g22: inv() });
        Manifold::new(m, Domain::plane((-2.0, 0.2), (2.0, 3.0))).unwrap()
    }

    const O: ChartPoint = ChartPoint::new(0.0, 0.0);

    #[test]
    fn straight_lines() {
        let path = integrate(&euclid(), O, Vec2::new(1.0, 0.0), 2.0, 1e-8).unwrap();
        assert!((path.end() - ChartPoint::new(2.0, 0.0)).chart_len() < 1e-12);
        let path = integrate(&wind05(), O, Vec2::new(1.5, 0.0), 1.0, 1e-8).unwrap();
        assert!((path.end() - ChartPoint::new(1.5, 0.0)).chart_len() < 1e-12);
    }

    #[test]
    fn torus_wraps() {
        let m = Manifold::new(MetricSpec::euclidean(), Domain::torus((0.0, 0.0), (1.0, 1.0))).unwrap();
        let path = integrate(&m, ChartPoint::new(0.9, 0.0), Vec2::new(1.0, 0.0), 0.3, 1e-8).unwrap();
        assert!((path.end() - ChartPoint::new(0.2, 0.0)).chart_len() < 1e-12);
        assert!((path.end_lift().x - 1.2).abs() < 1e-12);
    }

    #[test]
    fn leaving_window_is_an_error() {
        let err = integrate(&euclid(), O, Vec2::new(1.0, 0.0), 5.0, 1e-8).unwrap_err();
        assert!(matches!(err, GeodesicError::LeftDomain { .. }));
        let (path, cut) =
            integrate_truncated(&euclid(), O, Vec2::new(1.0, 0.0), 5.0, IntegrateOptions::default()).unwrap();
        assert!(cut && path.end().x <= 3.0);
    }

    #[test]
    fn rejects_non_unit_velocity() {
        assert!(matches!(integrate(&euclid(), O, Vec2::new(2.0, 0.0), 1.0, 1e-8), Err(GeodesicError::Degenerate(_))));
    }

    #[test]
    fn hyperbolic_semicircle() {
        let m = half_plane();
        let p = ChartPoint::new(0.0, 1.0);
        let path = integrate(&m, p, Vec2::new(1.0, 0.0), 1.0, 1e-10).unwrap();
        let end = path.end();
        assert!((end.x - 1f64.tanh()).abs() < 1e-7, "{end:?}");
        assert!((end.y - 1.0 / 1f64.cosh()).abs() < 1e-7, "{end:?}");
        for s in &path.samples {
            assert!((m.norm(s.lift, s.velocity).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn log_examples() {
        let v = log(&euclid(), O, ChartPoint::new(2.0, 0.0), 1e-9).unwrap();
        assert!((v - Vec2::new(2.0, 0.0)).chart_len() < 1e-14);
        let m = wind05();
        let v = log(&m, O, ChartPoint::new(1.0, 0.0), 1e-9).unwrap();
        assert!((m.norm(O, v).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(log(&m, O, O, 1e-9).unwrap(), Vec2::ZERO);
    }

    #[test]
    fn log_inverts_exp_on_curved_metric() {
        let m = half_plane();
        let p = ChartPoint::new(0.1, 1.2);
        for q in [ChartPoint::new(0.5, 1.0), ChartPoint::new(-0.3, 1.6), ChartPoint::new(0.2, 0.8)] {
            let v = log(&m, p, q, 1e-9).unwrap();
            let back = exp(&m, p, v, 1e-10).unwrap();
            assert!((back - q).chart_len() < 1e-8, "{q:?} -> {back:?}");
        }
    }

    #[test]
    fn minimal_geodesic_examples() {
        let path = minimal_geodesic(&euclid(), O, ChartPoint::new(1.0, 1.0)).unwrap();
        assert!((path.total_length - 2f64.sqrt()).abs() < 1e-12);
        let path = minimal_geodesic(&wind05(), O, ChartPoint::new(0.0, 1.0)).unwrap();
        assert!((path.total_length - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        let torus = Manifold::new(MetricSpec::euclidean(), Domain::torus((0.0, 0.0), (1.0, 1.0))).unwrap();
        let path = minimal_geodesic(&torus, O, ChartPoint::new(0.9, 0.0)).unwrap();
        assert!((path.total_length - 0.1).abs() < 1e-12);
        assert!(matches!(minimal_geodesic(&torus, O, O), Err(GeodesicError::Degenerate(_))));
    }

    #[test]
    fn fan_search_on_curved_metric() {
        let m = half_plane();
        let p = ChartPoint::new(-0.5, 1.0);
        let q = ChartPoint::new(0.5, 1.0);
        let path = minimal_geodesic(&m, p, q).unwrap();
        // hyperbolic distance between (-a, 1) and (a, 1): arccosh(1 + (2a)² / 2)
        let exact = (1.0f64 + 0.5).acosh();
        assert!((path.total_length - exact).abs() < 1e-6, "{} vs {exact}", path.total_length);
        assert!((path.end() - q).chart_len() < 1e-6);
    }

    #[test]
    fn jacobi_euclidean_and_richardson() {
        let m = euclid();
        let j = jacobi(&m, O, 0.3, 2.0, JacobiOptions { h_theta: 1e-3, ..Default::default() }).unwrap();
        assert_eq!(j.samples[0].y, Vec2::ZERO);
        for s in &j.samples {
            assert!((s.y.chart_len() - s.t).abs() < 1e-6 * (1.0 + s.t));
        }
        assert!((j.sup_norm - 2.0).abs() < 1e-6);
        let r = jacobi_richardson(&m, O, 0.3, 2.0, 0.2).unwrap();
        assert!((3.5..=4.5).contains(&r), "{r}");
        let err = jacobi(&m, O, 0.3, 2.0, JacobiOptions { bound: 1.0, ..Default::default() });
        assert!(err.is_err());
    }

    #[test]
    fn csv_export() {
        let path = integrate(&euclid(), O, Vec2::new(0.0, 1.0), 0.1, 1e-8).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,y,v1,v2\n0,0,0,0,1\n"));
    }
}
