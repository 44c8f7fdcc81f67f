use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bandwidth_grid, lsc_proxy, mll, rvod, select_bandwidth, MetricError};
use crate::geometry::Curve;
use crate::networks::{sample_latent, CurveGenerator};

/// Column header of the comparison table export.
pub const TABLE_HEADER: &str = "example,model,MLL,RVOD,LSC,train-minutes";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub runs: usize,
    /// Generated curves per run.
    pub samples: usize,
    pub seed: u64,
    /// Fixed KDE bandwidth; selected on the reference data when absent.
    pub bandwidth: Option<f64>,
    pub bandwidth_candidates: usize,
    /// Cap on reference curves used for bandwidth selection.
    pub validation_limit: usize,
    pub lsc_lines: usize,
    pub lsc_points: usize,
    /// Generator batch size while sampling.
    pub batch: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            runs: 10,
            samples: 1000,
            seed: 0,
            bandwidth: None,
            bandwidth_candidates: 13,
            validation_limit: 500,
            lsc_lines: 50,
            lsc_points: 20,
            batch: 250,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.runs == 0 || self.samples == 0 || self.batch == 0 {
            return Err(MetricError::Config("runs, samples and batch must be positive".into()));
        }
        if let Some(b) = self.bandwidth {
            if !(b > 0.0 && b.is_finite()) {
                return Err(MetricError::InvalidBandwidth(b));
            }
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|r| self.seed.wrapping_add(r)).collect()
    }
}

/// Mean and sample standard deviation over runs (0 for a single run).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mll: Summary,
    pub rvod: Summary,
    /// Latent-consistency proxy, not the published LSC.
    pub lsc: Summary,
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub bandwidth: f64,
    pub samples_per_run: usize,
    /// Degenerate latent lines skipped over all runs.
    pub lsc_skipped_lines: usize,
}

impl MetricReport {
    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "mll={}", self.mll.mean);
        let _ = writeln!(s, "mll_std={}", self.mll.std);
        let _ = writeln!(s, "rvod={}", self.rvod.mean);
        let _ = writeln!(s, "rvod_std={}", self.rvod.std);
        let _ = writeln!(s, "lsc_proxy={}", self.lsc.mean);
        let _ = writeln!(s, "lsc_proxy_std={}", self.lsc.std);
        let _ = writeln!(s, "lsc_skipped_lines={}", self.lsc_skipped_lines);
        let _ = writeln!(s, "bandwidth={}", self.bandwidth);
        let _ = writeln!(s, "samples_per_run={}", self.samples_per_run);
        let _ = writeln!(s, "runs={}", self.runs);
        let _ = writeln!(s, "seeds={}", seeds.join(" "));
        s
    }

    /// One row under [`TABLE_HEADER`]; cells read `mean ± std`.
    pub fn table_row(&self, example: &str, model: &str, train_minutes: Option<f64>) -> String {
        let cell = |s: Summary| format!("{:.3} ± {:.3}", s.mean, s.std);
        let minutes = train_minutes.map_or_else(|| "-".to_string(), |m| format!("{m:.2}"));
        format!(
            "{example},{model},{},{},{},{minutes}",
            cell(self.mll),
            cell(self.rvod),
            cell(self.lsc)
        )
    }
}

/// Draws `count` curves with latent codes and noise from `rng`.
pub fn sample_curves<G: CurveGenerator + ?Sized>(
    gen: &G,
    count: usize,
    batch: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Curve>, MetricError> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let b = batch.min(count - out.len());
        let (c, z) = sample_latent(rng, b, gen.latent_dim(), gen.noise_dim());
        out.extend(gen.generate(&c, &z)?);
    }
    Ok(out)
}

/// Runs every metric once per seed. `data` is the reference set for RVOD
/// and bandwidth selection; `test` is scored by the likelihood estimate.
pub fn evaluate<G: CurveGenerator + ?Sized>(
    gen: &G,
    data: &[Curve],
    test: &[Curve],
    cfg: &EvalConfig,
) -> Result<MetricReport, MetricError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(MetricError::Empty("data"));
    }
    if test.is_empty() {
        return Err(MetricError::Empty("test"));
    }
    let seeds = cfg.seeds();
    let (mut mlls, mut rvods, mut lscs) = (Vec::new(), Vec::new(), Vec::new());
    let mut bandwidth = cfg.bandwidth;
    let mut skipped = 0;
    for &seed in &seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let generated = sample_curves(gen, cfg.samples, cfg.batch, &mut rng)?;
        let b = match bandwidth {
            Some(b) => b,
            None => {
                let validation = &data[..data.len().min(cfg.validation_limit)];
                let b = select_bandwidth(&generated, validation, &bandwidth_grid(cfg.bandwidth_candidates))?;
                log::debug!("selected KDE bandwidth {b}");
                *bandwidth.insert(b)
            }
        };
        mlls.push(mll(&generated, test, b)?);
        rvods.push(rvod(data, &generated)?);
        let lsc = lsc_proxy(gen, cfg.lsc_lines, cfg.lsc_points, seed)?;
        skipped += lsc.lines_skipped;
        lscs.push(lsc.value);
    }
    Ok(MetricReport {
        mll: Summary::of(&mlls),
        rvod: Summary::of(&rvods),
        lsc: Summary::of(&lscs),
        runs: cfg.runs,
        seeds,
        bandwidth: bandwidth.expect("set in the first run"),
        samples_per_run: cfg.samples,
        lsc_skipped_lines: skipped,
    })
}
