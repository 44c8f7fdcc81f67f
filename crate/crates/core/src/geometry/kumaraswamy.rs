use super::GeometryError;

/// A convex combination of Kumaraswamy CDFs used to warp a uniform grid of
/// sampling locations into a monotone, non-uniform one.
#[derive(Debug, Clone, PartialEq)]
pub struct KumaraswamyMixture {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl KumaraswamyMixture {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self, GeometryError> {
        if a.is_empty() || a.len() != b.len() || a.len() != c.len() {
            return Err(GeometryError::LengthMismatch {
                what: "mixture components",
                expected: a.len(),
                actual: if b.len() != a.len() { b.len() } else { c.len() },
            });
        }
        if let Some(&v) = a.iter().chain(&b).find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(GeometryError::InvalidMixture(format!(
                "shape parameter {v} is not positive"
            )));
        }
        if c.iter().any(|v| !(*v >= 0.0)) {
            return Err(GeometryError::InvalidMixture("negative mixture weight".into()));
        }
        let total: f64 = c.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(GeometryError::InvalidMixture(format!("mixture weights sum to {total}")));
        }
        Ok(Self { a, b, c })
    }

    /// The single-component identity mixture (a = b = 1).
    pub fn identity() -> Self {
        Self {
            a: vec![1.0],
            b: vec![1.0],
            c: vec![1.0],
        }
    }

    pub fn components(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }
}

/// `[0, 1/m, ..., 1]`.
pub fn uniform_grid(m: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
    grid[m] = 1.0;
    grid
}

/// Kumaraswamy CDF `1 - (1 - x^a)^b`.
pub fn kumaraswamy_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else if b == 1.0 {
        x.powf(a)
    } else {
        1.0 - (1.0 - x.powf(a)).powf(b)
    }
}

/// Maps the uniform grid `u_prime` through the mixture CDF.
pub fn kumaraswamy_transform(u_prime: &[f64], mix: &KumaraswamyMixture) -> Vec<f64> {
    forward_batch(u_prime, &mix.a, &mix.b, &mix.c, 1, mix.components())
}

/// Batched transform: `a`, `b`, `c` are `[batch, k]`, the result `[batch, grid.len()]`.
///
/// The weighted sum is divided by `sum(c)` so the last location is exactly 1
/// whenever the grid ends at 1.
pub(crate) fn forward_batch(grid: &[f64], a: &[f64], b: &[f64], c: &[f64], batch: usize, k: usize) -> Vec<f64> {
    let npts = grid.len();
    let mut out = vec![0.0; batch * npts];
    for s in 0..batch {
        let (ab, bb, cb) = (&a[s * k..(s + 1) * k], &b[s * k..(s + 1) * k], &c[s * k..(s + 1) * k]);
        let total: f64 = cb.iter().sum();
        for (j, &x) in grid.iter().enumerate() {
            let mut acc = 0.0;
            for i in 0..k {
                acc += cb[i] * kumaraswamy_cdf(x, ab[i], bb[i]);
            }
            out[s * npts + j] = acc / total;
        }
    }
    out
}

/// Adjoint of [`forward_batch`]; returns gradients for `(a, b, c)`.
pub(crate) fn backward_batch(
    grid: &[f64],
    a: &[f64],
    b: &[f64],
    c: &[f64],
    out: &[f64],
    gout: &[f64],
    batch: usize,
    k: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let npts = grid.len();
    let mut ga = vec![0.0; a.len()];
    let mut gb = vec![0.0; b.len()];
    let mut gc = vec![0.0; c.len()];
    for s in 0..batch {
        let total: f64 = c[s * k..(s + 1) * k].iter().sum();
        for (j, &x) in grid.iter().enumerate() {
            let g = gout[s * npts + j];
            if g == 0.0 {
                continue;
            }
            let u = out[s * npts + j];
            for i in 0..k {
                let idx = s * k + i;
                let (ai, bi, ci) = (a[idx], b[idx], c[idx]);
                let cdf = kumaraswamy_cdf(x, ai, bi);
                gc[idx] += g * (cdf - u) / total;
                // The CDF is pinned at both ends of the support.
                if x <= 0.0 || x >= 1.0 {
                    continue;
                }
                let xa = x.powf(ai);
                let tail = 1.0 - xa;
                let d_a = bi * tail.powf(bi - 1.0) * xa * x.ln();
                let d_b = -tail.powf(bi) * tail.ln();
                ga[idx] += g * ci * d_a / total;
                gb[idx] += g * ci * d_b / total;
            }
        }
    }
    (ga, gb, gc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_cdf_is_identity() {
        let grid = uniform_grid(10);
        assert_eq!(kumaraswamy_transform(&grid, &KumaraswamyMixture::identity()), grid);
    }

    #[test]
    fn closed_forms() {
        let mix = KumaraswamyMixture::new(vec![2.0], vec![1.0], vec![1.0]).unwrap();
        let u = kumaraswamy_transform(&[0.0, 0.5, 1.0], &mix);
        assert!((u[1] - 0.25).abs() < 1e-15);

        let mix = KumaraswamyMixture::new(vec![2.0, 1.0], vec![1.0, 2.0], vec![0.5, 0.5]).unwrap();
        let u = kumaraswamy_transform(&[0.0, 0.5, 1.0], &mix);
        assert!((u[1] - 0.5).abs() < 1e-15);
        assert_eq!((u[0], u[2]), (0.0, 1.0));
    }

    #[test]
    fn rejects_invalid_mixtures() {
        assert!(KumaraswamyMixture::new(vec![0.0], vec![1.0], vec![1.0]).is_err());
        assert!(KumaraswamyMixture::new(vec![1.0], vec![1.0], vec![0.7]).is_err());
        assert!(KumaraswamyMixture::new(vec![1.0, 1.0], vec![1.0], vec![1.0]).is_err());
    }
}
