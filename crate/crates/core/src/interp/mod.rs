//! Interpolation: five 1-D methods over time-ordered knots and three methods
//! over scattered N-D points (nearest, Delaunay-linear in 2-D, radial basis).

mod delaunay;
mod nd;
mod one_d;
mod rbf;

use thiserror::Error;

pub use delaunay::{interp_linear_2d, Triangulation};
pub use nd::{interp_nearest_nd, ScatterND};
pub use one_d::{interp1d, Interpolant1D, Knots1D, Method1D};
pub use rbf::{interp_rbf, RbfInterpolant, RbfKernel, RbfKernelKind, MAX_RBF_POINTS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error("{method} needs at least {need} knots, got {got}")]
    TooFewKnots {
        method: &'static str,
        need: usize,
        got: usize,
    },
    #[error("x must be strictly increasing (violated at index {0})")]
    NonIncreasingX(usize),
    #[error("x and y lengths differ ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },
    #[error("spline degree {0} is not supported (only 3)")]
    UnsupportedDegree(u32),
    #[error("unknown interpolation method {0:?}")]
    UnknownMethod(String),
    #[error("non-finite coordinate or value at index {0}")]
    NonFinite(usize),
    #[error("no data points")]
    EmptyData,
    #[error("expected {expected}-dimensional points, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("scattered data needs at least 2 dimensions, got {0}")]
    DimensionTooSmall(usize),
    #[error("duplicate data point at indices {0} and {1}")]
    DuplicatePoint(usize, usize),
    #[error("points are collinear or too few for a triangulation")]
    DegenerateGeometry,
    #[error("interpolation system is singular")]
    SingularSystem,
    #[error("{0} points exceed the dense solver limit")]
    TooManyPoints(usize),
    #[error("kernel {0} requires a positive shape parameter")]
    MissingShape(&'static str),
    #[error("kernel {0} takes no shape parameter")]
    UnexpectedShape(&'static str),
    #[error("smoothing must be finite and non-negative")]
    InvalidSmoothing,
}
