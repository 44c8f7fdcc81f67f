use super::bernstein::{basis_into, check_degree, log_binomials};
use super::{Curve, GeometryError, Point};

/// Denominators below this are treated as degenerate weights.
pub const MIN_DENOMINATOR: f64 = 1e-12;

/// Control points, weights and sampling locations of one rational Bézier curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierParams {
    control_points: Vec<Point>,
    weights: Vec<f64>,
    u: Vec<f64>,
}

impl BezierParams {
    pub fn new(control_points: Vec<Point>, weights: Vec<f64>, u: Vec<f64>) -> Result<Self, GeometryError> {
        if control_points.len() < 2 {
            return Err(GeometryError::DegreeOutOfRange(control_points.len().saturating_sub(1)));
        }
        check_degree(control_points.len() - 1)?;
        if weights.len() != control_points.len() {
            return Err(GeometryError::LengthMismatch {
                what: "weights",
                expected: control_points.len(),
                actual: weights.len(),
            });
        }
        if let Some(&w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(GeometryError::NonPositiveWeight(w));
        }
        validate_parameters(&u)?;
        Ok(Self {
            control_points,
            weights,
            u,
        })
    }

    /// Unit weights sampled on the uniform grid of `points` locations.
    pub fn polynomial(control_points: Vec<Point>, points: usize) -> Result<Self, GeometryError> {
        let weights = vec![1.0; control_points.len()];
        Self::new(
            control_points,
            weights,
            super::uniform_grid(points.saturating_sub(1).max(1)),
        )
    }

    pub fn degree(&self) -> usize {
        self.control_points.len() - 1
    }

    pub fn control_points(&self) -> &[Point] {
        &self.control_points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }
}

/// Checks the sampling-location invariants: `u[0] == 0`, `u[last] == 1`,
/// nondecreasing in between.
pub fn validate_parameters(u: &[f64]) -> Result<(), GeometryError> {
    if u.len() < 2 {
        return Err(GeometryError::TooFewSamples(u.len()));
    }
    if u[0] != 0.0 || u[u.len() - 1] != 1.0 {
        return Err(GeometryError::BadParameterEndpoints {
            first: u[0],
            last: u[u.len() - 1],
        });
    }
    if let Some(j) = u.windows(2).position(|p| !(p[1] >= p[0])) {
        return Err(GeometryError::NotMonotone(j + 1));
    }
    Ok(())
}

/// Samples the rational Bézier curve at every parameter location.
pub fn rational_bezier_sample(params: &BezierParams) -> Result<Curve, GeometryError> {
    let ncp = params.control_points.len();
    let npts = params.u.len();
    let flat: Vec<f64> = params.control_points.iter().flat_map(|p| *p).collect();
    let out = forward_batch(&flat, &params.weights, &params.u, 1, ncp, npts)?;
    Ok(Curve::new(out.chunks_exact(2).map(|c| [c[0], c[1]]).collect()))
}

/// Batched curve sampling.
///
/// `p` is `[batch, ncp, 2]`, `w` is `[batch, ncp]`, `u` is `[batch, npts]`;
/// the result is `[batch, npts, 2]`. Parameter values must lie in `[0, 1]`.
pub(crate) fn forward_batch(
    p: &[f64],
    w: &[f64],
    u: &[f64],
    batch: usize,
    ncp: usize,
    npts: usize,
) -> Result<Vec<f64>, GeometryError> {
    let n = ncp - 1;
    check_degree(n)?;
    let log_binom = log_binomials(n);
    let mut basis = vec![0.0; ncp];
    let mut out = vec![0.0; batch * npts * 2];
    for b in 0..batch {
        let pb = &p[b * ncp * 2..(b + 1) * ncp * 2];
        let wb = &w[b * ncp..(b + 1) * ncp];
        for j in 0..npts {
            let uj = u[b * npts + j];
            if !(0.0..=1.0).contains(&uj) {
                return Err(GeometryError::ParameterOutOfRange(uj));
            }
            basis_into(n, uj, &log_binom, &mut basis);
            let (mut nx, mut ny, mut den) = (0.0, 0.0, 0.0);
            for i in 0..ncp {
                let bw = basis[i] * wb[i];
                nx += bw * pb[2 * i];
                ny += bw * pb[2 * i + 1];
                den += bw;
            }
            if !(den >= MIN_DENOMINATOR) {
                return Err(GeometryError::DegenerateDenominator {
                    sample: b,
                    point: j,
                    value: den,
                });
            }
            let o = (b * npts + j) * 2;
            out[o] = nx / den;
            out[o + 1] = ny / den;
        }
    }
    Ok(out)
}

/// Adjoint of [`forward_batch`]; `x` is the forward output and `gx` its upstream
/// gradient. Returns gradients for `(p, w, u)`.
pub(crate) fn backward_batch(
    p: &[f64],
    w: &[f64],
    u: &[f64],
    x: &[f64],
    gx: &[f64],
    batch: usize,
    ncp: usize,
    npts: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = ncp - 1;
    let log_binom = log_binomials(n);
    let log_binom_lower = if n >= 2 { log_binomials(n - 1) } else { vec![0.0] };
    let mut basis = vec![0.0; ncp];
    let mut lower = vec![0.0; ncp];
    let mut gp = vec![0.0; p.len()];
    let mut gw = vec![0.0; w.len()];
    let mut gu = vec![0.0; u.len()];
    for b in 0..batch {
        let pb = &p[b * ncp * 2..(b + 1) * ncp * 2];
        let wb = &w[b * ncp..(b + 1) * ncp];
        for j in 0..npts {
            let o = (b * npts + j) * 2;
            let (gxx, gxy) = (gx[o], gx[o + 1]);
            if gxx == 0.0 && gxy == 0.0 {
                continue;
            }
            let uj = u[b * npts + j];
            basis_into(n, uj, &log_binom, &mut basis);
            // dB_{n,i}/du = n (B_{n-1,i-1} - B_{n-1,i})
            if n >= 2 {
                basis_into(n - 1, uj, &log_binom_lower, &mut lower);
            } else {
                lower[0] = 1.0;
            }
            let den: f64 = (0..ncp).map(|i| basis[i] * wb[i]).sum();
            let (xx, xy) = (x[o], x[o + 1]);
            let mut du = 0.0;
            for i in 0..ncp {
                let (dx, dy) = (pb[2 * i] - xx, pb[2 * i + 1] - xy);
                let proj = dx * gxx + dy * gxy;
                let coef = basis[i] * wb[i] / den;
                gp[(b * ncp + i) * 2] += coef * gxx;
                gp[(b * ncp + i) * 2 + 1] += coef * gxy;
                gw[b * ncp + i] += basis[i] * proj / den;
                let left = if i > 0 { lower[i - 1] } else { 0.0 };
                let right = if i < n { lower[i] } else { 0.0 };
                let dbasis = n as f64 * (left - right);
                du += dbasis * wb[i] * proj;
            }
            gu[b * npts + j] = du / den;
        }
    }
    (gp, gw, gu)
}

/// Evaluates a polynomial Bézier curve by repeated linear interpolation.
pub fn decasteljau_eval(control_points: &[Point], u: f64) -> Result<Point, GeometryError> {
    if control_points.is_empty() {
        return Err(GeometryError::TooFewSamples(0));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(GeometryError::ParameterOutOfRange(u));
    }
    let mut work = control_points.to_vec();
    for level in (1..work.len()).rev() {
        for i in 0..level {
            work[i] = [
                (1.0 - u) * work[i][0] + u * work[i + 1][0],
                (1.0 - u) * work[i][1] + u * work[i + 1][1],
            ];
        }
    }
    Ok(work[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_segment() {
        let params = BezierParams::new(vec![[0.0, 0.0], [1.0, 0.0]], vec![1.0, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        let curve = rational_bezier_sample(&params).unwrap();
        assert_eq!(curve.points(), &[[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn quarter_circle_is_exact() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u: Vec<f64> = (0..=20).map(|j| j as f64 / 20.0).collect();
        let params = BezierParams::new(vec![[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], vec![1.0, h, 1.0], u).unwrap();
        let curve = rational_bezier_sample(&params).unwrap();
        for p in curve.points() {
            assert!((p[0] * p[0] + p[1] * p[1] - 1.0).abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn decasteljau_hand_cases() {
        assert_eq!(decasteljau_eval(&[[0.0, 0.0], [1.0, 0.0]], 0.25).unwrap(), [0.25, 0.0]);
        assert_eq!(
            decasteljau_eval(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]], 1.0).unwrap(),
            [1.0, 1.0]
        );
        assert!(decasteljau_eval(&[[0.0, 0.0]], -0.1).is_err());
    }

    #[test]
    fn invariant_violations_are_rejected() {
        let cp = vec![[0.0, 0.0], [1.0, 0.0]];
        assert!(matches!(
            BezierParams::new(cp.clone(), vec![1.0, 0.0], vec![0.0, 1.0]),
            Err(GeometryError::NonPositiveWeight(_))
        ));
        assert!(matches!(
            BezierParams::new(cp.clone(), vec![1.0, 1.0], vec![0.1, 1.0]),
            Err(GeometryError::BadParameterEndpoints { .. })
        ));
        assert!(matches!(
            BezierParams::new(cp, vec![1.0, 1.0], vec![0.0, 0.6, 0.4, 1.0]),
            Err(GeometryError::NotMonotone(2))
        ));
    }

    #[test]
    fn degenerate_weights_error() {
        let p = [0.0, 0.0, 1.0, 0.0];
        let err = forward_batch(&p, &[1e-14, 1e-14], &[0.0, 1.0], 1, 2, 2).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateDenominator { point: 0, .. }));
    }
}
