//! Single-design generation shared by `generate` and the service, so both
//! produce identical curves for the same latent code and noise seed.

use beziergan::networks::{sample_noise, GeneratedDesign, GeneratorModel};
use beziergan::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Expands a seed into the generator's Gaussian noise vector.
pub fn noise_from_seed(seed: u64, noise_dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_noise(&mut rng, 1, noise_dim).into_data()
}

/// Clamps every coordinate into `[0, 1]`; the flag reports whether any
/// value moved.
pub fn clamp_latent(latent: &[f64]) -> (Vec<f64>, bool) {
    let clamped: Vec<f64> = latent.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let moved = clamped.iter().zip(latent).any(|(a, b)| a != b);
    (clamped, moved)
}

/// Generates a batch of designs, one per latent row, all sharing `noise`.
pub fn generate_designs(
    model: &GeneratorModel,
    latents: &[Vec<f64>],
    noise: &[f64],
) -> anyhow::Result<Vec<GeneratedDesign>> {
    let (d, nd) = (model.config().latent_dim, model.config().noise_dim);
    let c = Tensor::new(vec![latents.len(), d], latents.concat())?;
    let z = Tensor::from_fn(&[latents.len(), nd], |i| noise[i % nd]);
    Ok(model.forward(&c, &z)?)
}
