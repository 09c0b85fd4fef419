//! Numerical engine for distance functions to closed sets on 2-D Finsler manifolds:
//! geodesics, distance fields with their minimizing segments, cut locus graphs and the
//! intrinsic metric on the cut locus.

pub mod analysis;
pub mod cutlocus;
pub mod distance;
pub mod geodesic;
pub mod geom;
pub mod manifold;
pub mod metric;

pub use geom::{ChartPoint, Domain, PointIndex, Shift, TangentVector, Vec2};
pub use manifold::Manifold;
pub use metric::{MetricError, MetricSpec};
