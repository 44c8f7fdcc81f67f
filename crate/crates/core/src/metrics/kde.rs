use std::f64::consts::PI;

use rand::Rng;

use super::MetricError;
use crate::geometry::Curve;

/// Candidate bandwidths: `count` values log-spaced over `[0.01, 1]`.
pub fn bandwidth_grid(count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![0.1];
    }
    (0..count)
        .map(|k| 10f64.powf(-2.0 + 2.0 * k as f64 / (count - 1) as f64))
        .collect()
}

fn flatten_all(curves: &[Curve], what: &'static str) -> Result<Vec<Vec<f64>>, MetricError> {
    let first = curves.first().ok_or(MetricError::Empty(what))?.len();
    curves
        .iter()
        .map(|c| {
            if c.len() == first {
                Ok(c.flatten())
            } else {
                Err(MetricError::DimensionMismatch(first, c.len()))
            }
        })
        .collect()
}

/// Squared distances `[test][generated]` plus the flattened dimension.
fn squared_distances(generated: &[Curve], test: &[Curve]) -> Result<(Vec<Vec<f64>>, usize), MetricError> {
    let g = flatten_all(generated, "generated")?;
    let t = flatten_all(test, "test")?;
    if g[0].len() != t[0].len() {
        return Err(MetricError::DimensionMismatch(g[0].len() / 2, t[0].len() / 2));
    }
    let d2 = t
        .iter()
        .map(|x| {
            g.iter()
                .map(|y| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect()
        })
        .collect();
    Ok((d2, g[0].len()))
}

fn mll_from_distances(d2: &[Vec<f64>], dim: usize, bandwidth: f64) -> f64 {
    let n = d2[0].len() as f64;
    let norm = -0.5 * dim as f64 * (2.0 * PI * bandwidth * bandwidth).ln() - n.ln();
    let scale = -0.5 / (bandwidth * bandwidth);
    let total: f64 = d2
        .iter()
        .map(|row| {
            let top = row.iter().fold(f64::INFINITY, |m, &d| m.min(d)) * scale;
            let s: f64 = row.iter().map(|&d| (d * scale - top).exp()).sum();
            top + s.ln()
        })
        .sum();
    total / d2.len() as f64 + norm
}

fn check_bandwidth(b: f64) -> Result<(), MetricError> {
    if b > 0.0 && b.is_finite() {
        Ok(())
    } else {
        Err(MetricError::InvalidBandwidth(b))
    }
}

/// Mean log-density of `test` under an isotropic Gaussian KDE centred on
/// the flattened `generated` curves.
pub fn mll(generated: &[Curve], test: &[Curve], bandwidth: f64) -> Result<f64, MetricError> {
    check_bandwidth(bandwidth)?;
    let (d2, dim) = squared_distances(generated, test)?;
    Ok(mll_from_distances(&d2, dim, bandwidth))
}

/// [`mll`] at every bandwidth in `grid`, sharing the distance computation.
pub fn mll_grid(generated: &[Curve], test: &[Curve], grid: &[f64]) -> Result<Vec<f64>, MetricError> {
    for &b in grid {
        check_bandwidth(b)?;
    }
    let (d2, dim) = squared_distances(generated, test)?;
    Ok(grid.iter().map(|&b| mll_from_distances(&d2, dim, b)).collect())
}

/// The grid bandwidth with the highest likelihood of `validation`.
pub fn select_bandwidth(generated: &[Curve], validation: &[Curve], grid: &[f64]) -> Result<f64, MetricError> {
    if grid.is_empty() {
        return Err(MetricError::Config("empty bandwidth grid".into()));
    }
    let scores = mll_grid(generated, validation, grid)?;
    let best = scores
        .iter()
        .enumerate()
        .fold(0, |best, (i, s)| if *s > scores[best] { i } else { best });
    Ok(grid[best])
}

/// Curves whose points are drawn uniformly from the bounding box of
/// `reference`. Serves as the no-skill likelihood baseline.
pub fn uniform_noise_curves(reference: &[Curve], count: usize, rng: &mut impl Rng) -> Result<Vec<Curve>, MetricError> {
    let points = reference.first().ok_or(MetricError::Empty("reference"))?.len();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in reference.iter().flat_map(|c| c.points()) {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let draw = |rng: &mut dyn rand::RngCore, a: usize| lo[a] + (hi[a] - lo[a]) * rng.random::<f64>();
    Ok((0..count)
        .map(|_| Curve::new((0..points).map(|_| [draw(rng, 0), draw(rng, 1)]).collect()))
        .collect())
}
