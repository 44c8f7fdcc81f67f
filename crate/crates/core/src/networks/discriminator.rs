use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::generator::check_params;
use super::params::{conv, dense, ParamSet};
use super::NetworkError;
use crate::autodiff::{Bindings, Graph, Var};
use crate::tensor::Tensor;

/// Bounds on the predicted log-variance of the latent posterior.
pub const LOGVAR_RANGE: (f64, f64) = (-7.0, 2.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscriminatorConfig {
    pub latent_dim: usize,
    pub points: usize,
    /// Output channels of each stride-2 convolution.
    pub conv_channels: Vec<usize>,
    pub kernel_size: usize,
    pub hidden: usize,
    pub leaky_alpha: f64,
    /// Inputs are divided by this before the first layer.
    pub input_scale: f64,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self {
            latent_dim: 2,
            points: crate::CURVE_POINTS,
            conv_channels: vec![16, 32],
            kernel_size: 5,
            hidden: 64,
            leaky_alpha: 0.2,
            input_scale: 1.0,
        }
    }
}

impl DiscriminatorConfig {
    fn flat_len(&self) -> usize {
        let mut len = self.points;
        for _ in &self.conv_channels {
            len = len.div_ceil(2);
        }
        len * self.conv_channels.last().copied().unwrap_or(2)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |m: &str| Err(NetworkError::Config(m.to_string()));
        if self.latent_dim == 0 || self.points < 2 {
            return bad("latent dimension and point count must be positive");
        }
        if self.conv_channels.contains(&0) || self.hidden == 0 {
            return bad("layer widths must be positive");
        }
        if self.kernel_size % 2 == 0 {
            return bad("kernel size must be odd");
        }
        if !(self.input_scale > 0.0) {
            return bad("input scale must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DiscriminatorOutputs {
    /// Real/fake logit, `[B, 1]`.
    pub logit: Var,
    /// Posterior mean of the latent code, in `(0, 1)`, `[B, d]`.
    pub q_mean: Var,
    /// Posterior log-variance, `[B, d]`.
    pub q_logvar: Var,
}

/// Shared convolutional trunk with a source head and a latent-code head.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorModel {
    config: DiscriminatorConfig,
    params: ParamSet,
}

impl DiscriminatorModel {
    pub fn new(config: DiscriminatorConfig, seed: u64) -> Result<Self, NetworkError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let mut cin = 2;
        for (i, &cout) in config.conv_channels.iter().enumerate() {
            params.init_conv(
                &mut rng,
                &format!("disc.conv{i}"),
                config.kernel_size,
                cin,
                cout,
                cin * config.kernel_size,
            );
            cin = cout;
        }
        params.init_dense(&mut rng, "disc.fc", config.flat_len(), config.hidden);
        params.init_dense(&mut rng, "disc.src", config.hidden, 1);
        params.init_dense(&mut rng, "disc.q", config.hidden, 2 * config.latent_dim);
        // Heads start silent: logits 0, posterior N(0.5, 1).
        for head in ["disc.src.w", "disc.q.w"] {
            if let Some(w) = params.get_mut(head) {
                w.data_mut().iter_mut().for_each(|v| *v = 0.0);
            }
        }
        Ok(Self { config, params })
    }

    pub fn from_parts(config: DiscriminatorConfig, params: ParamSet) -> Result<Self, NetworkError> {
        let template = Self::new(config.clone(), 0)?;
        check_params(&template.params, &params)?;
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &DiscriminatorConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Adds the discriminator applied to curves `x` (`[B, points, 2]`) to `g`.
    pub fn build(&self, g: &mut Graph, x: Var) -> DiscriminatorOutputs {
        let cfg = &self.config;
        let mut h = g.scale(x, 1.0 / cfg.input_scale);
        for i in 0..cfg.conv_channels.len() {
            h = conv(g, h, &format!("disc.conv{i}"), 2, false);
            h = g.leaky_relu(h, cfg.leaky_alpha);
        }
        let h = g.reshape(h, &[-1, cfg.flat_len() as isize]);
        let h = dense(g, h, "disc.fc");
        let h = g.leaky_relu(h, cfg.leaky_alpha);
        let logit = dense(g, h, "disc.src");
        let q = dense(g, h, "disc.q");
        let d = cfg.latent_dim;
        let mean = g.slice(q, 1, 0, d);
        let q_mean = g.sigmoid(mean);
        let logvar = g.slice(q, 1, d, 2 * d);
        let q_logvar = g.clamp(logvar, LOGVAR_RANGE.0, LOGVAR_RANGE.1);
        DiscriminatorOutputs {
            logit,
            q_mean,
            q_logvar,
        }
    }

    /// Evaluates `(logits [B], posterior means [B, d], log-variances [B, d])`.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Tensor, Tensor), NetworkError> {
        if x.rank() != 3 || x.shape()[1] != self.config.points || x.shape()[2] != 2 {
            return Err(NetworkError::InputShape(format!(
                "expected curves [B, {}, 2], got {:?}",
                self.config.points,
                x.shape()
            )));
        }
        let mut g = Graph::new();
        let xv = g.input("x");
        let out = self.build(&mut g, xv);
        let mut bindings = Bindings::new().with("x", x);
        self.params.bind_into(&mut bindings);
        let trace = g.forward(&bindings, &[out.logit, out.q_mean, out.q_logvar])?;
        let batch = x.shape()[0];
        let logits = trace
            .value(out.logit)
            .clone()
            .reshaped(vec![batch])
            .expect("one logit per sample");
        Ok((
            logits,
            trace.value(out.q_mean).clone(),
            trace.value(out.q_logvar).clone(),
        ))
    }
}
