use thiserror::Error;

use crate::expr::ExprError;

/// Errors raised by the geometric and numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point (r={r}, phi={phi}) lies outside the chart validity interval [{lo}, {hi}]")]
    OutOfChart { r: f64, phi: f64, lo: f64, hi: f64 },

    #[error("metric coefficient g={g:e} is below the degeneracy threshold at r={r}")]
    DegenerateMetric { r: f64, g: f64 },

    #[error("geodesic left the chart at arc parameter {exit}")]
    TruncatedArc { exit: f64 },

    #[error("geodesic connection did not converge after {iterations} iterations (miss {miss:e})")]
    ConnectionFailure { iterations: usize, miss: f64 },

    #[error("points are too far apart for a unique minimal geodesic (distance {distance}, bound {bound})")]
    IllConditioned { distance: f64, bound: f64 },

    #[error("connecting vertex {index} to vertex {next}: {source}", next = index + 1)]
    Connection {
        index: usize,
        #[source]
        source: Box<GeomError>,
    },

    #[error("curve pieces do not connect: gap {gap:e} after piece {index}")]
    Gap { index: usize, gap: f64 },

    #[error("zero-length arc at polygonal corner {index}")]
    DegenerateCorner { index: usize },

    #[error("repeated vertex at index {index}")]
    RepeatedVertex { index: usize },

    #[error("requested resolution {target:e} is below the sampling resolution of the curve ({achieved:e})")]
    ResolutionLimit { target: f64, achieved: f64 },

    #[error("BV structure is inconsistent: residual {residual:e} exceeds tolerance {tolerance:e}")]
    InconsistentStructure { residual: f64, tolerance: f64 },

    #[error("curve self-intersects between segments {first} and {second}")]
    SelfIntersection { first: usize, second: usize },

    #[error("enclosed region is not contained in the chart: {0}")]
    RegionOutsideChart(String),

    #[error("chart has non-zero Gauss curvature K={k:e}; development needs a flat chart")]
    NonZeroCurvature { k: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub type Result<T, E = GeomError> = std::result::Result<T, E>;
