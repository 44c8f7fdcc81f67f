use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::networks::ParamSet;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for every parameter of one network.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub t: u64,
    pub m: BTreeMap<String, Tensor>,
    pub v: BTreeMap<String, Tensor>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// One bias-corrected Adam update of every parameter that has a gradient.
///
/// Moments are created lazily at zero, so a fresh state matches the textbook
/// initialisation.
pub fn adam_step(params: &mut ParamSet, grads: &BTreeMap<String, Tensor>, state: &mut AdamState, cfg: &AdamConfig) {
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (name, param) in params.iter_mut() {
        let Some(grad) = grads.get(name) else { continue };
        let m = state
            .m
            .entry(name.clone())
            .or_insert_with(|| Tensor::zeros(param.shape()));
        let v = state
            .v
            .entry(name.clone())
            .or_insert_with(|| Tensor::zeros(param.shape()));
        let (pd, md, vd) = (param.data_mut(), m.data_mut(), v.data_mut());
        for (i, &g) in grad.data().iter().enumerate() {
            md[i] = cfg.beta1 * md[i] + (1.0 - cfg.beta1) * g;
            vd[i] = cfg.beta2 * vd[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = md[i] / c1;
            let v_hat = vd[i] / c2;
            pd[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}
