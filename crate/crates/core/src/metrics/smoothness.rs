use super::MetricError;
use crate::geometry::Curve;

/// Mean VOD of generated curves below this is treated as constant output.
pub const MIN_GENERATED_VOD: f64 = 1e-15;

/// Variance of difference: the population variance of the two coordinates
/// of each step `x[i+1] - x[i]`, averaged over steps.
pub fn vod(curve: &Curve) -> Result<f64, MetricError> {
    let p = curve.points();
    if p.len() < 2 {
        return Err(MetricError::TooFewPoints {
            needed: 2,
            got: p.len(),
        });
    }
    let total: f64 = p
        .windows(2)
        .map(|w| {
            let (dx, dy) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
            // Var of {dx, dy} around their mean is ((dx - dy) / 2)^2.
            0.25 * (dx - dy) * (dx - dy)
        })
        .sum();
    Ok(total / (p.len() - 1) as f64)
}

pub fn mean_vod(curves: &[Curve]) -> Result<f64, MetricError> {
    if curves.is_empty() {
        return Err(MetricError::Empty("curve"));
    }
    let mut sum = 0.0;
    for c in curves {
        sum += vod(c)?;
    }
    Ok(sum / curves.len() as f64)
}

/// Relative VOD: mean VOD of the data over mean VOD of the generated set.
pub fn rvod(data: &[Curve], generated: &[Curve]) -> Result<f64, MetricError> {
    if data.is_empty() {
        return Err(MetricError::Empty("data"));
    }
    if generated.is_empty() {
        return Err(MetricError::Empty("generated"));
    }
    let gen = mean_vod(generated)?;
    if !(gen >= MIN_GENERATED_VOD) {
        return Err(MetricError::DegenerateGenerated(gen));
    }
    Ok(mean_vod(data)? / gen)
}
