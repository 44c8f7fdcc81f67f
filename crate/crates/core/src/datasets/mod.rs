//! Training sets: superformula families, synthetic waterlines, and loaders
//! for external point-sequence files.

mod io;
mod spline;
mod superformula;
mod waterline;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{
    load_point_sequences, normalize_chord, parse_point_sequence, read_dataset, write_dataset, FileFormat, LoadOptions,
    Manifest, MANIFEST_FILE,
};
pub use spline::{resample_curve, CubicSpline};
pub use superformula::{
    generate_superformula_dataset, superformula_curve, SuperformulaParams, SuperformulaSpec, SUPERFORMULA_RANGE,
};
pub use waterline::{generate_waterline_dataset, waterline_polyline, WaterlineSpec};

use crate::geometry::Curve;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("invalid dataset parameters: {0}")]
    InvalidParameters(String),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("{file}: sequence too short (need at least {needed} points, got {got})")]
    SequenceTooShort { file: String, needed: usize, got: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("{file}, line {line}: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("bad manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    SyntheticSuperformula,
    SyntheticWaterline,
    FileLoaded,
}

/// Normalization applied to loaded shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Translated and uniformly scaled so x spans `[0, 1]`.
    UnitChord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveDataset {
    pub name: String,
    pub provenance: Provenance,
    pub normalization: Option<Normalization>,
    pub samples: Vec<Curve>,
}

impl CurveDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Point count shared by every sample, or `None` when they differ.
    pub fn points(&self) -> Option<usize> {
        let n = self.samples.first()?.len();
        self.samples.iter().all(|c| c.len() == n).then_some(n)
    }

    /// Splits off the last `fraction` of samples as a held-out set.
    pub fn split(&self, fraction: f64) -> (Vec<Curve>, Vec<Curve>) {
        let held = ((self.samples.len() as f64 * fraction).round() as usize).min(self.samples.len());
        let cut = self.samples.len() - held;
        (self.samples[..cut].to_vec(), self.samples[cut..].to_vec())
    }
}

/// Root-mean-square coordinate magnitude over a set of curves.
pub fn coordinate_rms(curves: &[Curve]) -> f64 {
    let (sum, n) = curves
        .iter()
        .flat_map(|c| c.points().iter())
        .fold((0.0, 0usize), |(s, n), p| (s + p[0] * p[0] + p[1] * p[1], n + 2));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}
