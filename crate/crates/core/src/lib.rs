//! Curve synthesis with a GAN whose generator emits rational Bézier
//! parameters and samples them into smooth point sequences.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`] and [`autodiff`]: dense arrays and a reverse-mode graph.
//! - [`geometry`]: Bernstein bases, the rational Bézier layer, the
//!   Kumaraswamy parameter warp, symmetry operators.
//! - [`networks`]: generator and discriminator (with its latent-code head).
//! - [`training`]: losses, regularizers, Adam, the alternating loop and
//!   checkpoints.
//! - [`datasets`]: superformula and waterline families, spline resampling,
//!   point-file loaders.
//! - [`metrics`]: mean log likelihood, variance of difference, latent
//!   consistency.

pub mod autodiff;
pub mod datasets;
pub mod geometry;
pub mod metrics;
pub mod networks;
pub mod tensor;
pub mod training;

pub use geometry::{Curve, Point};
pub use tensor::Tensor;

/// Number of points in every curve of the dataset representation.
pub const CURVE_POINTS: usize = 64;
