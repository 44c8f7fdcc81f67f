use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CurveDataset, DatasetError, Provenance};
use crate::geometry::Curve;

/// Shape parameters of one superformula curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperformulaParams {
    pub s1: f64,
    pub s2: f64,
    /// Lobe count `m`.
    pub m: u32,
}

pub const SUPERFORMULA_RANGE: (f64, f64) = (1.0, 10.0);

impl SuperformulaParams {
    pub fn new(s1: f64, s2: f64, m: u32) -> Result<Self, DatasetError> {
        let (lo, hi) = SUPERFORMULA_RANGE;
        if !(lo..=hi).contains(&s1) || !(lo..=hi).contains(&s2) {
            return Err(DatasetError::InvalidParameters(format!(
                "s1 = {s1}, s2 = {s2} outside [{lo}, {hi}]"
            )));
        }
        if m == 0 {
            return Err(DatasetError::InvalidParameters("lobe count must be positive".into()));
        }
        Ok(Self { s1, s2, m })
    }

    /// Radius at polar angle `theta`.
    pub fn radius(&self, theta: f64) -> f64 {
        let n1 = self.s1;
        let n2 = self.s1 + self.s2;
        let arg = self.m as f64 * theta / 4.0;
        (arg.cos().abs().powf(n2) + arg.sin().abs().powf(n2)).powf(-1.0 / n1)
    }
}

/// Samples the curve at `num_points` evenly spaced angles in `[0, 2π)`.
pub fn superformula_curve(p: &SuperformulaParams, num_points: usize) -> Curve {
    Curve::new(
        (0..num_points)
            .map(|k| {
                let theta = TAU * k as f64 / num_points as f64;
                let r = p.radius(theta);
                [r * theta.cos(), r * theta.sin()]
            })
            .collect(),
    )
}

/// Settings for [`generate_superformula_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuperformulaSpec {
    pub count: usize,
    pub s1_range: (f64, f64),
    pub s2_range: (f64, f64),
    pub m: u32,
    pub points: usize,
    pub seed: u64,
}

impl Default for SuperformulaSpec {
    fn default() -> Self {
        Self {
            count: 1000,
            s1_range: SUPERFORMULA_RANGE,
            s2_range: SUPERFORMULA_RANGE,
            m: 3,
            points: crate::CURVE_POINTS,
            seed: 0,
        }
    }
}

/// Draws `s1`, `s2` uniformly from their ranges and samples each curve.
///
/// Returns the dataset along with the parameters of every sample.
pub fn generate_superformula_dataset(
    spec: &SuperformulaSpec,
) -> Result<(CurveDataset, Vec<SuperformulaParams>), DatasetError> {
    if spec.count == 0 {
        return Err(DatasetError::InvalidParameters("count must be at least 1".into()));
    }
    let (lo, hi) = SUPERFORMULA_RANGE;
    for (name, (a, b)) in [("s1", spec.s1_range), ("s2", spec.s2_range)] {
        if !(lo <= a && a <= b && b <= hi) {
            return Err(DatasetError::InvalidParameters(format!(
                "{name} range [{a}, {b}] is not inside [{lo}, {hi}]"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw = |(a, b): (f64, f64)| if a == b { a } else { rng.random_range(a..=b) };
    let mut params = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let s1 = draw(spec.s1_range);
        let s2 = draw(spec.s2_range);
        params.push(SuperformulaParams::new(s1, s2, spec.m)?);
    }
    let samples = params.iter().map(|p| superformula_curve(p, spec.points)).collect();
    let dataset = CurveDataset {
        name: format!("superformula-m{}", spec.m),
        provenance: Provenance::SyntheticSuperformula,
        normalization: None,
        samples,
    };
    Ok((dataset, params))
}
