use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{resample_curve, CurveDataset, DatasetError, Provenance};
use crate::geometry::Point;

/// Settings for the synthetic half-hull waterline family.
///
/// Each curve runs from the stern at `x = 0` (half-width `tail_width` times
/// the beam) along a flat midsection to the bow at `(1, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaterlineSpec {
    pub count: usize,
    /// Half-beam range.
    pub beam: (f64, f64),
    /// Range of the flat midsection length as a fraction of the hull length.
    pub midsection: (f64, f64),
    /// Stern half-width relative to the half-beam.
    pub tail_width: f64,
    pub points: usize,
    pub curvature_weight: f64,
    pub seed: u64,
}

impl Default for WaterlineSpec {
    fn default() -> Self {
        Self {
            count: 200,
            beam: (0.08, 0.16),
            midsection: (0.1, 0.5),
            tail_width: 0.6,
            points: crate::CURVE_POINTS,
            curvature_weight: 1.0,
            seed: 0,
        }
    }
}

/// Raw half-breadth polyline for one hull, stern to bow.
pub fn waterline_polyline(beam: f64, midsection: f64, tail_width: f64, samples: usize) -> Vec<Point> {
    // The remaining length is split between a shorter run aft and a longer entrance forward.
    let rest = 1.0 - midsection;
    let (aft, fore) = (0.35 * rest, 0.65 * rest);
    let tail = tail_width * beam;
    (0..samples)
        .map(|k| {
            let x = k as f64 / (samples - 1) as f64;
            let y = if k + 1 == samples {
                0.0
            } else if x < aft {
                tail + (beam - tail) * (FRAC_PI_2 * x / aft).sin()
            } else if x <= aft + midsection {
                beam
            } else {
                let u = ((x - aft - midsection) / fore).min(1.0);
                beam * (FRAC_PI_2 * u).cos()
            };
            [x, y]
        })
        .collect()
}

pub fn generate_waterline_dataset(spec: &WaterlineSpec) -> Result<CurveDataset, DatasetError> {
    let ordered = |(a, b): (f64, f64)| a <= b && a > 0.0;
    if spec.count == 0 || !ordered(spec.beam) || !ordered(spec.midsection) || spec.midsection.1 >= 1.0 {
        return Err(DatasetError::InvalidParameters(
            "waterline ranges must be positive, ordered and below 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.tail_width) {
        return Err(DatasetError::InvalidParameters(format!(
            "tail width {} outside [0, 1]",
            spec.tail_width
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw = |(a, b): (f64, f64)| if a == b { a } else { rng.random_range(a..=b) };
    let mut samples = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let beam = draw(spec.beam);
        let mid = draw(spec.midsection);
        let raw = waterline_polyline(beam, mid, spec.tail_width, 401);
        samples.push(resample_curve(&raw, spec.points, spec.curvature_weight)?);
    }
    Ok(CurveDataset {
        name: "waterline".into(),
        provenance: Provenance::SyntheticWaterline,
        normalization: None,
        samples,
    })
}
