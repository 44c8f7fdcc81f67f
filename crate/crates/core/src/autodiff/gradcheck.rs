//! Central finite-difference checks for graph gradients.

use std::collections::HashMap;

use super::{AutodiffError, Bindings, Graph, Var};
use crate::tensor::Tensor;

/// Tolerances for comparing analytic and numeric derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub step: f64,
    pub relative: f64,
    pub absolute: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            step: 1e-5,
            relative: 1e-4,
            absolute: 1e-6,
        }
    }
}

/// Worst-case comparison over every checked coordinate.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checked: usize,
    pub failures: usize,
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|)` among
    /// coordinates outside the absolute floor.
    pub max_relative_error: f64,
    pub worst: Option<(String, usize, f64, f64)>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Compares `graph.gradient` against central differences of `graph.evaluate`
/// for every coordinate of every input named in `wrt`.
pub fn check_gradients(
    graph: &Graph,
    output: Var,
    values: &HashMap<String, Tensor>,
    wrt: &[&str],
    tol: Tolerance,
) -> Result<GradCheckReport, AutodiffError> {
    let bindings: Bindings<'_> = values.iter().map(|(k, v)| (k.as_str(), v)).collect();
    let analytic = graph.gradient(output, &bindings, wrt)?;

    let mut report = GradCheckReport {
        checked: 0,
        failures: 0,
        max_relative_error: 0.0,
        worst: None,
    };
    for name in wrt {
        let base = values
            .get(*name)
            .ok_or_else(|| AutodiffError::Unbound(name.to_string()))?;
        let grad = &analytic[*name];
        for idx in 0..base.numel() {
            let eval_at = |delta: f64| -> Result<f64, AutodiffError> {
                let mut probe = base.clone();
                probe.data_mut()[idx] += delta;
                let mut b = bindings.clone();
                b.bind(*name, &probe);
                Ok(graph.evaluate(output, &b)?.item())
            };
            let numeric = (eval_at(tol.step)? - eval_at(-tol.step)?) / (2.0 * tol.step);
            let a = grad.data()[idx];
            let diff = (a - numeric).abs();
            let scale = a.abs().max(numeric.abs());
            report.checked += 1;
            if diff <= tol.absolute {
                continue;
            }
            let rel = diff / scale;
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = Some((name.to_string(), idx, a, numeric));
            }
            if rel > tol.relative {
                report.failures += 1;
            }
        }
    }
    Ok(report)
}
