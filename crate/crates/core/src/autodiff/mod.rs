//! Minimal reverse-mode differentiation over dense `f64` arrays.
//!
//! A [`Graph`] is built once from primitives over named inputs, then evaluated
//! against [`Bindings`]. [`Graph::backward`] replays the cached [`Trace`] in
//! reverse and returns exact gradients for the requested inputs.

pub mod gradcheck;
mod graph;
pub mod kernels;

use thiserror::Error;

pub use graph::{Bindings, Gradients, Graph, Trace, Var, STABILITY_EPS};

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("shape mismatch at node {node}: {detail}")]
    ShapeMismatch { node: String, detail: String },
    #[error("input `{0}` is not bound")]
    Unbound(String),
    #[error("input `{0}` is not part of the graph")]
    UnknownInput(String),
    #[error("gradient needs a scalar output, got shape {0:?}")]
    NonScalarOutput(Vec<usize>),
    #[error("node {0} was not evaluated in this trace")]
    NotEvaluated(String),
    #[error("geometry failure at node {node}: {source}")]
    Geometry {
        node: String,
        #[source]
        source: GeometryError,
    },
}
