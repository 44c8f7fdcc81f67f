//! Quantitative evaluation: kernel-density log likelihood, variance of
//! difference (smoothness) and a latent-consistency proxy.

mod consistency;
mod kde;
mod report;
mod smoothness;

use thiserror::Error;

pub use consistency::{lsc_proxy, LscResult};
pub use kde::{bandwidth_grid, mll, mll_grid, select_bandwidth, uniform_noise_curves};
pub use report::{evaluate, sample_curves, EvalConfig, MetricReport, Summary, TABLE_HEADER};
pub use smoothness::{mean_vod, rvod, vod, MIN_GENERATED_VOD};

use crate::networks::NetworkError;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("{0} set is empty")]
    Empty(&'static str),
    #[error("curve has {got} points, need at least {needed}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("curves have different point counts ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("generated curves have mean VOD {0:e}, below the degenerate-output threshold")]
    DegenerateGenerated(f64),
    #[error("all {lines} latent lines had zero-variance curve distances")]
    AllLinesDegenerate { lines: usize },
    #[error("invalid evaluation settings: {0}")]
    Config(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}
