use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::networks::{sample_noise, CurveGenerator};
use crate::tensor::Tensor;

/// Outcome of [`lsc_proxy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LscResult {
    /// Mean absolute Pearson correlation over the usable lines, in `[0, 1]`.
    pub value: f64,
    pub lines_used: usize,
    /// Lines whose curve distances had zero variance.
    pub lines_skipped: usize,
}

/// Latent-space consistency proxy.
///
/// Draws `n_lines` random segments in the latent box, each with its own
/// fixed noise vector, generates `points_per_line` evenly spaced curves along
/// each, and correlates latent distance with curve distance over all pairs
/// of positions. The result is the mean of `|r|` over lines.
pub fn lsc_proxy<G: CurveGenerator + ?Sized>(
    gen: &G,
    n_lines: usize,
    points_per_line: usize,
    seed: u64,
) -> Result<LscResult, MetricError> {
    if n_lines < 10 {
        return Err(MetricError::Config(format!(
            "need at least 10 latent lines, got {n_lines}"
        )));
    }
    if points_per_line < 3 {
        return Err(MetricError::Config(format!(
            "need at least 3 points per line, got {points_per_line}"
        )));
    }
    let (dim, noise_dim) = (gen.latent_dim(), gen.noise_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    let mut used = 0;
    for _ in 0..n_lines {
        let start: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
        let end: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
        let noise = sample_noise(&mut rng, 1, noise_dim);
        let span = start
            .iter()
            .zip(&end)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        let steps: Vec<f64> = (0..points_per_line)
            .map(|k| k as f64 / (points_per_line - 1) as f64)
            .collect();
        let c = Tensor::from_fn(&[points_per_line, dim], |i| {
            let (k, d) = (i / dim, i % dim);
            start[d] + steps[k] * (end[d] - start[d])
        });
        let z = Tensor::from_fn(&[points_per_line, noise_dim], |i| noise.data()[i % noise_dim]);
        let flat: Vec<Vec<f64>> = gen.generate(&c, &z)?.iter().map(|c| c.flatten()).collect();
        let mut latent = Vec::new();
        let mut curve = Vec::new();
        for i in 0..points_per_line {
            for j in i + 1..points_per_line {
                latent.push((steps[j] - steps[i]) * span);
                curve.push(
                    flat[i]
                        .iter()
                        .zip(&flat[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt(),
                );
            }
        }
        if let Some(r) = pearson(&latent, &curve) {
            total += r.abs().min(1.0);
            used += 1;
        }
    }
    if used == 0 {
        return Err(MetricError::AllLinesDegenerate { lines: n_lines });
    }
    Ok(LscResult {
        value: total / used as f64,
        lines_used: used,
        lines_skipped: n_lines - used,
    })
}

/// Pearson correlation, or `None` when either side has zero variance.
fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    // Relative threshold so rounding noise on constant output counts as zero.
    let tiny = |s: f64, m: f64| s <= 1e-24 * n * m.max(f64::MIN_POSITIVE).powi(2) || s == 0.0;
    if tiny(sxx, mx) || tiny(syy, my) {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
