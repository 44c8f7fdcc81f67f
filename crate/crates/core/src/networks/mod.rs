//! Generator and discriminator networks expressed as autodiff graphs.

mod discriminator;
mod generator;
mod params;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

pub use discriminator::{DiscriminatorConfig, DiscriminatorModel, DiscriminatorOutputs, LOGVAR_RANGE};
pub use generator::{
    Constraint, GeneratedDesign, GeneratorConfig, GeneratorModel, GeneratorOutputs, OutputKind, WEIGHT_FLOOR,
};
pub use params::ParamSet;

use crate::autodiff::AutodiffError;
use crate::geometry::{Curve, GeometryError};
use crate::tensor::Tensor;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("invalid network configuration: {0}")]
    Config(String),
    #[error("bad input shape: {0}")]
    InputShape(String),
    #[error("missing parameter {0}")]
    MissingParameter(String),
    #[error("parameter {name} has shape {actual:?}, expected {expected:?}")]
    ParameterShape {
        name: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Anything that maps latent codes and noise to curves.
pub trait CurveGenerator {
    fn latent_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    /// `c` is `[B, latent_dim]`, `z` is `[B, noise_dim]`.
    fn generate(&self, c: &Tensor, z: &Tensor) -> Result<Vec<Curve>, NetworkError>;
}

/// Draws `c ~ U(0, 1)^latent` and `z ~ N(0, I)^noise` for `batch` samples.
pub fn sample_latent(rng: &mut impl Rng, batch: usize, latent_dim: usize, noise_dim: usize) -> (Tensor, Tensor) {
    let c = Tensor::from_fn(&[batch, latent_dim], |_| rng.random::<f64>());
    let z = sample_noise(rng, batch, noise_dim);
    (c, z)
}

/// Standard-normal noise `[batch, noise_dim]`.
pub fn sample_noise(rng: &mut impl Rng, batch: usize, noise_dim: usize) -> Tensor {
    Tensor::from_fn(&[batch, noise_dim], |_| StandardNormal.sample(rng))
}
