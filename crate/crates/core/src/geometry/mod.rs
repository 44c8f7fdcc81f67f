//! Closed-form curve mathematics: Bernstein bases, the rational Bézier
//! sampling layer, the Kumaraswamy parameter warp and the symmetry operators
//! used to build full curves from a prim.

mod bernstein;
mod kumaraswamy;
mod rational;
mod symmetry;

use thiserror::Error;

pub use bernstein::{bernstein_basis, log_binomials, MAX_DEGREE};
pub use kumaraswamy::{kumaraswamy_cdf, kumaraswamy_transform, uniform_grid, KumaraswamyMixture};
pub use rational::{decasteljau_eval, rational_bezier_sample, validate_parameters, BezierParams, MIN_DENOMINATOR};
pub use symmetry::{
    assemble_full_curve, mirror_params, part_params, part_point_counts, rotate_params, rotation_matrix, Axis,
    SymmetrySpec,
};

pub(crate) mod kernels {
    pub(crate) use super::kumaraswamy::{backward_batch as kumaraswamy_backward, forward_batch as kumaraswamy_forward};
    pub(crate) use super::rational::{backward_batch as bezier_backward, forward_batch as bezier_forward};
}

/// A 2-D Cartesian point.
pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("curve degree {0} outside 1..={MAX_DEGREE}")]
    DegreeOutOfRange(usize),
    #[error("parameter value {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("{what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("weight {0} is not strictly positive")]
    NonPositiveWeight(f64),
    #[error("parameter vector must run from 0 to 1, got {first}..{last}")]
    BadParameterEndpoints { first: f64, last: f64 },
    #[error("parameter vector decreases at index {0}")]
    NotMonotone(usize),
    #[error("need at least 2 sampling locations, got {0}")]
    TooFewSamples(usize),
    #[error("degenerate denominator {value:e} at sample {sample}, point {point}")]
    DegenerateDenominator { sample: usize, point: usize, value: f64 },
    #[error("invalid Kumaraswamy mixture: {0}")]
    InvalidMixture(String),
    #[error("invalid symmetry: {0}")]
    InvalidSymmetry(String),
    #[error("assembled curve has {actual} points, dataset representation needs {expected}")]
    PointCountMismatch { expected: usize, actual: usize },
}

/// An ordered sequence of 2-D points representing one design.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    points: Vec<Point>,
}

impl Curve {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    /// Builds a curve from interleaved `x0 y0 x1 y1 ...` coordinates.
    pub fn from_flat(coords: &[f64]) -> Self {
        Self::new(coords.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Point {
        self.points[0]
    }

    pub fn last(&self) -> Point {
        self.points[self.points.len() - 1]
    }

    /// Interleaved coordinates, the flattened `(m+1)×2` matrix.
    pub fn flatten(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| *p).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p[0].is_finite() && p[1].is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Curve {
        Curve::new(self.points.iter().map(|p| [p[0] * factor, p[1] * factor]).collect())
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }
}
