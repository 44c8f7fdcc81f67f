use super::GeometryError;

/// Largest supported curve degree.
pub const MAX_DEGREE: usize = 63;

/// `ln C(n, i)` for `i = 0..=n`, accumulated term by term so no factorial is
/// ever formed.
pub fn log_binomials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(acc);
    for i in 1..=n {
        acc += ((n - i + 1) as f64).ln() - (i as f64).ln();
        out.push(acc);
    }
    out
}

pub(crate) fn check_degree(n: usize) -> Result<(), GeometryError> {
    if (1..=MAX_DEGREE).contains(&n) {
        Ok(())
    } else {
        Err(GeometryError::DegreeOutOfRange(n))
    }
}

/// Degree-`n` Bernstein coefficients at `u`, written into `out[..=n]`.
///
/// `log_binom` must come from [`log_binomials`] for the same `n`. The interior
/// is evaluated in log space, which stays finite for every supported degree.
pub(crate) fn basis_into(n: usize, u: f64, log_binom: &[f64], out: &mut [f64]) {
    debug_assert_eq!(log_binom.len(), n + 1);
    if u <= 0.0 {
        out[..=n].fill(0.0);
        out[0] = 1.0;
        return;
    }
    if u >= 1.0 {
        out[..=n].fill(0.0);
        out[n] = 1.0;
        return;
    }
    let ln_u = u.ln();
    let ln_v = (-u).ln_1p();
    for (i, slot) in out[..=n].iter_mut().enumerate() {
        *slot = (log_binom[i] + i as f64 * ln_u + (n - i) as f64 * ln_v).exp();
    }
}

/// The `n + 1` Bernstein polynomials of degree `n` evaluated at `u`.
pub fn bernstein_basis(n: usize, u: f64) -> Result<Vec<f64>, GeometryError> {
    check_degree(n)?;
    if !(0.0..=1.0).contains(&u) {
        return Err(GeometryError::ParameterOutOfRange(u));
    }
    let log_binom = log_binomials(n);
    let mut out = vec![0.0; n + 1];
    basis_into(n, u, &log_binom, &mut out);
    Ok(out)
}
