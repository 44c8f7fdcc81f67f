//! Loop kernels for the array-shaped primitives.

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Splits `shape` around `axis` into `(outer, len, inner)` extents.
pub fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

/// `[m, k] x [k, n]`.
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            for (o, bv) in row.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += av * bv;
            }
        }
    }
    out
}

/// `g [m, n] x b^T [n, k]`, the adjoint with respect to the left factor.
pub fn matmul_grad_left(g: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * k];
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            out[i * k + p] = grow.iter().zip(&b[p * n..(p + 1) * n]).map(|(x, y)| x * y).sum();
        }
    }
    out
}

/// `a^T [k, m] x g [m, n]`, the adjoint with respect to the right factor.
pub fn matmul_grad_right(a: &[f64], g: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; k * n];
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            for (o, gv) in out[p * n..(p + 1) * n].iter_mut().zip(grow) {
                *o += av * gv;
            }
        }
    }
    out
}

/// Geometry shared by the strided convolution and its transpose.
#[derive(Debug, Clone, Copy)]
pub struct ConvDims {
    pub batch: usize,
    /// Length of the short (strided) side.
    pub short_len: usize,
    /// Length of the long (unstrided) side.
    pub long_len: usize,
    pub taps: usize,
    pub stride: usize,
}

impl ConvDims {
    /// Position on the long side touched by short-side position `o` and tap `j`.
    fn position(&self, o: usize, j: usize) -> Option<usize> {
        let pad = (self.taps - 1) / 2;
        let pos = (o * self.stride + j).checked_sub(pad)?;
        (pos < self.long_len).then_some(pos)
    }
}

/// Strided cross-correlation, `long [B, long_len, ci]` → `short [B, short_len, co]`.
/// Kernel is `[taps, ci, co]`; output position `o` is centred on input `o * stride`.
pub fn conv1d(x: &[f64], k: &[f64], d: ConvDims, ci: usize, co: usize) -> Vec<f64> {
    let mut out = vec![0.0; d.batch * d.short_len * co];
    for b in 0..d.batch {
        for o in 0..d.short_len {
            let orow = &mut out[(b * d.short_len + o) * co..(b * d.short_len + o + 1) * co];
            for j in 0..d.taps {
                let Some(pos) = d.position(o, j) else { continue };
                let xrow = &x[(b * d.long_len + pos) * ci..(b * d.long_len + pos + 1) * ci];
                for (c, &xv) in xrow.iter().enumerate() {
                    let krow = &k[(j * ci + c) * co..(j * ci + c + 1) * co];
                    for (ov, kv) in orow.iter_mut().zip(krow) {
                        *ov += xv * kv;
                    }
                }
            }
        }
    }
    out
}

/// Transposed convolution, `short [B, short_len, ci]` → `long [B, long_len, co]`.
pub fn conv_transpose1d(x: &[f64], k: &[f64], d: ConvDims, ci: usize, co: usize) -> Vec<f64> {
    let mut out = vec![0.0; d.batch * d.long_len * co];
    for b in 0..d.batch {
        for o in 0..d.short_len {
            let xrow = &x[(b * d.short_len + o) * ci..(b * d.short_len + o + 1) * ci];
            for j in 0..d.taps {
                let Some(pos) = d.position(o, j) else { continue };
                let orow = &mut out[(b * d.long_len + pos) * co..(b * d.long_len + pos + 1) * co];
                for (c, &xv) in xrow.iter().enumerate() {
                    let krow = &k[(j * ci + c) * co..(j * ci + c + 1) * co];
                    for (ov, kv) in orow.iter_mut().zip(krow) {
                        *ov += xv * kv;
                    }
                }
            }
        }
    }
    out
}

/// Gradients of [`conv1d`]: `g` is `[B, short_len, co]`.
pub fn conv1d_backward(
    x: &[f64],
    k: &[f64],
    g: &[f64],
    d: ConvDims,
    ci: usize,
    co: usize,
    need_x: bool,
    need_k: bool,
) -> (Vec<f64>, Vec<f64>) {
    let mut gx = if need_x { vec![0.0; x.len()] } else { Vec::new() };
    let mut gk = if need_k { vec![0.0; k.len()] } else { Vec::new() };
    for b in 0..d.batch {
        for o in 0..d.short_len {
            let grow = &g[(b * d.short_len + o) * co..(b * d.short_len + o + 1) * co];
            for j in 0..d.taps {
                let Some(pos) = d.position(o, j) else { continue };
                let base = (b * d.long_len + pos) * ci;
                for c in 0..ci {
                    let kidx = (j * ci + c) * co;
                    let krow = &k[kidx..kidx + co];
                    if need_x {
                        gx[base + c] += grow.iter().zip(krow).map(|(a, b)| a * b).sum::<f64>();
                    }
                    if need_k {
                        let xv = x[base + c];
                        for (gkv, gv) in gk[kidx..kidx + co].iter_mut().zip(grow) {
                            *gkv += xv * gv;
                        }
                    }
                }
            }
        }
    }
    (gx, gk)
}

/// Gradients of [`conv_transpose1d`]: `g` is `[B, long_len, co]`.
pub fn conv_transpose1d_backward(
    x: &[f64],
    k: &[f64],
    g: &[f64],
    d: ConvDims,
    ci: usize,
    co: usize,
    need_x: bool,
    need_k: bool,
) -> (Vec<f64>, Vec<f64>) {
    let mut gx = if need_x { vec![0.0; x.len()] } else { Vec::new() };
    let mut gk = if need_k { vec![0.0; k.len()] } else { Vec::new() };
    for b in 0..d.batch {
        for o in 0..d.short_len {
            let base = (b * d.short_len + o) * ci;
            for j in 0..d.taps {
                let Some(pos) = d.position(o, j) else { continue };
                let grow = &g[(b * d.long_len + pos) * co..(b * d.long_len + pos + 1) * co];
                for c in 0..ci {
                    let kidx = (j * ci + c) * co;
                    if need_x {
                        gx[base + c] += grow.iter().zip(&k[kidx..kidx + co]).map(|(a, b)| a * b).sum::<f64>();
                    }
                    if need_k {
                        let xv = x[base + c];
                        for (gkv, gv) in gk[kidx..kidx + co].iter_mut().zip(grow) {
                            *gkv += xv * gv;
                        }
                    }
                }
            }
        }
    }
    (gx, gk)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_extremes() {
        assert_eq!(sigmoid(800.0), 1.0);
        assert!(sigmoid(-800.0) >= 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
    }
}
