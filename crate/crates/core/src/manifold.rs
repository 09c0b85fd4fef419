//! A metric on a chart domain, plus the bounds derived from sampling it.

use crate::geom::{ChartPoint, Domain, Vec2};
use crate::metric::{self, LocalNorm, MetricError, MetricSpec};

/// Safety factor applied to sampled speed bounds of non-constant metrics.
const BOUND_MARGIN: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct Manifold {
    pub metric: MetricSpec,
    pub domain: Domain,
    min_speed: f64,
    max_speed: f64,
    convex_radius: f64,
}

impl Manifold {
    pub fn new(metric: MetricSpec, domain: Domain) -> Result<Self, MetricError> {
        metric.validate(&domain, 33)?;
        let (lo, ext) = domain.bounds();
        let n = if metric.is_homogeneous() { 1 } else { 33 };
        let mut min_speed = f64::INFINITY;
        let mut max_speed = 0.0f64;
        let mut max_spray = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let p = if n == 1 {
                    lo + ext * 0.5
                } else {
                    lo + Vec2::new(ext.x * i as f64 / (n - 1) as f64, ext.y * j as f64 / (n - 1) as f64)
                };
                let local = metric.at(p)?;
                for k in 0..72 {
                    let u = Vec2::from_angle(k as f64 * std::f64::consts::TAU / 72.0);
                    let f = local.norm(u);
                    min_speed = min_speed.min(f);
                    max_speed = max_speed.max(f);
                    if !metric.is_homogeneous() && i % 4 == 0 && j % 4 == 0 && k % 4 == 0 {
                        let acc = metric::spray(&metric, p, u * (1.0 / f))?;
                        max_spray = max_spray.max(acc.chart_len());
                    }
                }
            }
        }
        if !metric.is_homogeneous() {
            min_speed *= BOUND_MARGIN;
            max_speed /= BOUND_MARGIN;
        } else {
            // the 72-direction sample misses the exact extremes slightly
            min_speed *= 0.99;
            max_speed /= 0.99;
        }
        let convex_radius = domain.scale() / (1.0 + max_spray);
        Ok(Self { metric, domain, min_speed, max_speed, convex_radius })
    }

    pub fn is_homogeneous(&self) -> bool {
        self.metric.is_homogeneous()
    }

    /// Norm data at the canonical representative of `p`.
    pub fn local(&self, p: ChartPoint) -> Result<LocalNorm, MetricError> {
        self.metric.at(self.domain.wrap(p))
    }

    pub fn norm(&self, p: ChartPoint, v: Vec2) -> Result<f64, MetricError> {
        Ok(self.local(p)?.norm(v))
    }

    pub fn spray(&self, p: ChartPoint, v: Vec2) -> Result<Vec2, MetricError> {
        metric::spray(&self.metric, self.domain.wrap(p), v)
    }

    /// Lower bound `c` with `F(x, u) >= c |u|` on the domain.
    pub fn min_speed(&self) -> f64 {
        self.min_speed
    }

    /// Upper bound `C` with `F(x, u) <= C |u|`; the chart Lipschitz constant of `d_N`.
    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    /// Estimated radius (in `F`-length) inside which the exponential map is inverted.
    pub fn convex_radius(&self) -> f64 {
        self.convex_radius
    }
}
