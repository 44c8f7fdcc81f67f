use std::f64::consts::PI;

use crate::autodiff::kernels::softplus;
use crate::autodiff::{Graph, Var, STABILITY_EPS};
use crate::tensor::Tensor;

/// Penalty weights of the combined generator objective.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Lambdas {
    /// Mutual-information bound.
    pub info: f64,
    /// Mean adjacent control-point distance.
    pub r1: f64,
    /// Mean maximum adjacent distance.
    pub r2: f64,
    /// Mean weight magnitude.
    pub r3: f64,
    /// Kumaraswamy shapes away from 1.
    pub r4: f64,
}

// The distance penalties act on raw coordinates, so weights of order 10
// shrink unit-scale shapes several-fold; 0.1 keeps generated roughness at
// the data's level on the superformula desk run.
impl Default for Lambdas {
    fn default() -> Self {
        Self {
            info: 1.0,
            r1: 0.1,
            r2: 0.1,
            r3: 1.0,
            r4: 0.1,
        }
    }
}

impl Lambdas {
    pub fn zero() -> Self {
        Self {
            info: 0.0,
            r1: 0.0,
            r2: 0.0,
            r3: 0.0,
            r4: 0.0,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.info, self.r1, self.r2, self.r3, self.r4]
    }
}

/// `(L_D, L_G)` for logit vectors, with the non-saturating generator loss.
///
/// `log σ(x) = -softplus(-x)` and `log(1 - σ(x)) = -softplus(x)` keep every
/// term finite for large logits.
pub fn gan_losses(real_logits: &[f64], fake_logits: &[f64]) -> (f64, f64) {
    let mean = |v: &[f64], f: &dyn Fn(f64) -> f64| v.iter().map(|x| f(*x)).sum::<f64>() / v.len() as f64;
    let d = mean(real_logits, &|x| softplus(-x)) + mean(fake_logits, &softplus);
    let g = mean(fake_logits, &|x| softplus(-x));
    (d, g)
}

/// Mean over the batch of `log Q(c | x)` under a factored Gaussian with the
/// given means and log-variances, summed over latent dimensions.
pub fn mutual_info_lower_bound(q_mean: &Tensor, q_logvar: &Tensor, c: &Tensor) -> f64 {
    let batch = c.shape()[0] as f64;
    let total: f64 = q_mean
        .data()
        .iter()
        .zip(q_logvar.data())
        .zip(c.data())
        .map(|((m, lv), c)| -0.5 * (2.0 * PI).ln() - 0.5 * lv - 0.5 * (c - m).powi(2) / lv.exp())
        .sum();
    total / batch
}

/// `(R1, R2, R3, R4)` for control points `[B, n+1, 2]`, weights `[B, n+1]`
/// and Kumaraswamy shapes `[B, K]`.
pub fn regularizers(p: &Tensor, w: &Tensor, a: &Tensor, b: &Tensor) -> [f64; 4] {
    let batch = p.shape()[0];
    let ncp = p.shape()[1];
    let (mut r1, mut r2) = (0.0, 0.0);
    for s in 0..batch {
        let row = p.row(s);
        let dists: Vec<f64> = (0..ncp - 1)
            .map(|i| ((row[2 * i + 2] - row[2 * i]).powi(2) + (row[2 * i + 3] - row[2 * i + 1]).powi(2)).sqrt())
            .collect();
        r1 += dists.iter().sum::<f64>() / dists.len() as f64;
        r2 += dists.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    let r3 = w.data().iter().map(|v| v.abs()).sum::<f64>() / w.numel() as f64;
    let r4 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(a, b)| (a - 1.0).abs() + (b - 1.0).abs())
        .sum::<f64>()
        / a.numel() as f64;
    [r1 / batch as f64, r2 / batch as f64, r3, r4]
}

/// `L_G - λ0 L_I + λ1 R1 + λ2 R2 + λ3 R3 + λ4 R4`.
pub fn combined_generator_objective(l_g: f64, l_i: f64, r: [f64; 4], lambdas: &Lambdas) -> f64 {
    l_g - lambdas.info * l_i + lambdas.r1 * r[0] + lambdas.r2 * r[1] + lambdas.r3 * r[2] + lambdas.r4 * r[3]
}

/// Graph form of [`gan_losses`]; logits are `[B, 1]`.
pub(crate) fn gan_loss_nodes(g: &mut Graph, real: Option<Var>, fake: Var) -> (Option<Var>, Var) {
    let neg_fake = g.neg(fake);
    let sp = g.softplus(neg_fake);
    let l_g = g.mean(sp);
    let l_d = real.map(|real| {
        let neg = g.neg(real);
        let a = g.softplus(neg);
        let a = g.mean(a);
        let b = g.softplus(fake);
        let b = g.mean(b);
        g.add(a, b)
    });
    (l_d, l_g)
}

/// Graph form of [`mutual_info_lower_bound`].
pub(crate) fn info_node(g: &mut Graph, q_mean: Var, q_logvar: Var, c: Var, batch: usize, latent_dim: usize) -> Var {
    let diff = g.sub(c, q_mean);
    let sq = g.mul(diff, diff);
    let neg_lv = g.neg(q_logvar);
    let precision = g.exp(neg_lv);
    let quad = g.mul(sq, precision);
    let terms = g.add(quad, q_logvar);
    let total = g.sum(terms);
    let per_sample = g.scale(total, -0.5 / batch as f64);
    g.offset(per_sample, -0.5 * (2.0 * PI).ln() * latent_dim as f64)
}

/// Graph form of [`regularizers`].
pub(crate) fn regularizer_nodes(g: &mut Graph, p: Var, w: Var, a: Var, b: Var, ncp: usize) -> [Var; 4] {
    let head = g.slice(p, 1, 1, ncp);
    let tail = g.slice(p, 1, 0, ncp - 1);
    let d = g.sub(head, tail);
    let sq = g.mul(d, d);
    let sq = g.sum_axis(sq, 2);
    // The shift keeps the square root differentiable at coincident points.
    let sq = g.offset(sq, STABILITY_EPS);
    let dist = g.pow(sq, 0.5);
    let r1 = g.mean(dist);
    let max = g.max_axis(dist, 1);
    let r2 = g.mean(max);
    let aw = g.abs(w);
    let r3 = g.mean(aw);
    let da = g.offset(a, -1.0);
    let da = g.abs(da);
    let db = g.offset(b, -1.0);
    let db = g.abs(db);
    let s = g.add(da, db);
    let r4 = g.mean(s);
    [r1, r2, r3, r4]
}
