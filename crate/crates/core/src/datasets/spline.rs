//! Interpolating cubic splines and curvature-weighted resampling.

use super::DatasetError;
use crate::geometry::{Curve, Point};

/// A chord-length parameterized interpolating cubic spline through 2-D
/// points, stored as knot values and second derivatives per coordinate.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: [Vec<f64>; 2],
    second: [Vec<f64>; 2],
}

impl CubicSpline {
    /// Fits a spline through `points`. A sequence whose first and last points
    /// coincide is treated as a closed loop and gets periodic end conditions;
    /// otherwise the not-a-knot condition is used at both ends.
    pub fn fit(points: &[Point]) -> Result<Self, DatasetError> {
        if points.len() < 4 {
            return Err(DatasetError::TooFewPoints {
                needed: 4,
                got: points.len(),
            });
        }
        let scale = points
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        let mut knots = vec![0.0];
        for (i, w) in points.windows(2).enumerate() {
            let h = dist(w[0], w[1]);
            if h <= 1e-12 * scale {
                return Err(DatasetError::Degenerate(format!("points {i} and {} coincide", i + 1)));
            }
            knots.push(knots[i] + h);
        }
        let closed = dist(points[0], points[points.len() - 1]) <= 1e-9 * scale;
        if closed && points.len() < 5 {
            return Err(DatasetError::TooFewPoints {
                needed: 5,
                got: points.len(),
            });
        }
        let h: Vec<f64> = knots.windows(2).map(|k| k[1] - k[0]).collect();
        let mut values = [Vec::new(), Vec::new()];
        let mut second = [Vec::new(), Vec::new()];
        for axis in 0..2 {
            let y: Vec<f64> = points.iter().map(|p| p[axis]).collect();
            second[axis] = if closed {
                periodic_moments(&h, &y)
            } else {
                not_a_knot_moments(&h, &y)
            };
            values[axis] = y;
        }
        Ok(Self { knots, values, second })
    }

    /// Total parameter length (the input polygon's length).
    pub fn length(&self) -> f64 {
        *self.knots.last().expect("at least two knots")
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.knots.len() - 1;
        match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    /// Position, first and second derivative at parameter `t`.
    pub fn eval(&self, t: f64) -> [Point; 3] {
        let i = self.segment(t);
        let (t0, t1) = (self.knots[i], self.knots[i + 1]);
        let h = t1 - t0;
        let (a, b) = (t1 - t, t - t0);
        let mut out = [[0.0; 2]; 3];
        for axis in 0..2 {
            let (y0, y1) = (self.values[axis][i], self.values[axis][i + 1]);
            let (m0, m1) = (self.second[axis][i], self.second[axis][i + 1]);
            out[0][axis] = m0 * a.powi(3) / (6.0 * h)
                + m1 * b.powi(3) / (6.0 * h)
                + (y0 / h - m0 * h / 6.0) * a
                + (y1 / h - m1 * h / 6.0) * b;
            out[1][axis] = -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) + (y1 - y0) / h - (m1 - m0) * h / 6.0;
            out[2][axis] = (m0 * a + m1 * b) / h;
        }
        out
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Second derivatives for not-a-knot ends (third derivative continuous at
/// the second and second-to-last knots).
fn not_a_knot_moments(h: &[f64], y: &[f64]) -> Vec<f64> {
    let n = h.len();
    let d: Vec<f64> = (0..n).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    // Unknowns M1..M_{n-1}; M0 and Mn are eliminated with the end conditions.
    let k = n - 1;
    let (mut sub, mut diag, mut sup, mut rhs) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    for r in 0..k {
        let i = r + 1;
        sub[r] = h[i - 1];
        diag[r] = 2.0 * (h[i - 1] + h[i]);
        sup[r] = h[i];
        rhs[r] = 6.0 * (d[i] - d[i - 1]);
    }
    // M0 = ((h0 + h1) M1 - h0 M2) / h1
    let (h0, h1) = (h[0], h[1]);
    diag[0] += h0 * (h0 + h1) / h1;
    sup[0] -= h0 * h0 / h1;
    // Mn = ((h_{n-2} + h_{n-1}) M_{n-1} - h_{n-1} M_{n-2}) / h_{n-2}
    let (ha, hb) = (h[n - 2], h[n - 1]);
    diag[k - 1] += hb * (ha + hb) / ha;
    sub[k - 1] -= hb * hb / ha;
    let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs);
    let mut m = Vec::with_capacity(n + 1);
    m.push(((h0 + h1) * inner[0] - h0 * inner.get(1).copied().unwrap_or(inner[0])) / h1);
    m.extend_from_slice(&inner);
    let last = inner[k - 1];
    let before = if k >= 2 { inner[k - 2] } else { m[0] };
    m.push(((ha + hb) * last - hb * before) / ha);
    m
}

/// Second derivatives of a periodic spline; the last point repeats the first.
fn periodic_moments(h: &[f64], y: &[f64]) -> Vec<f64> {
    let n = h.len();
    let d: Vec<f64> = (0..n).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let (mut sub, mut diag, mut sup, mut rhs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        sub[i] = h[prev];
        diag[i] = 2.0 * (h[prev] + h[i]);
        sup[i] = h[i];
        rhs[i] = 6.0 * (d[i] - d[prev]);
    }
    let mut m = solve_cyclic(&sub, &diag, &sup, &rhs);
    m.push(m[0]);
    m
}

/// Thomas algorithm; `sub[0]` and `sup[n-1]` are ignored.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Cyclic tridiagonal solve via Sherman-Morrison; `sub[0]` couples to the
/// last unknown and `sup[n-1]` to the first.
fn solve_cyclic(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let (alpha, beta) = (sup[n - 1], sub[0]);
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;
    let x = solve_tridiagonal(sub, &b, sup, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(sub, &b, sup, &u);
    let factor = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(x, z)| x - factor * z).collect()
}

/// Dense evaluation steps per spline segment when integrating the density.
const STEPS_PER_SEGMENT: usize = 64;

/// Cumulative density mass of a spline on a dense parameter grid. Each
/// segment has its own sub-grid so knots are grid points.
struct MassTable {
    params: Vec<f64>,
    density: Vec<f64>,
    mass: Vec<f64>,
}

impl MassTable {
    fn new(spline: &CubicSpline, curvature_weight: f64) -> Self {
        let segments = spline.knots.len() - 1;
        let mut params = Vec::with_capacity(segments * STEPS_PER_SEGMENT + 1);
        for s in 0..segments {
            let (t0, t1) = (spline.knots[s], spline.knots[s + 1]);
            for j in 0..STEPS_PER_SEGMENT {
                params.push(t0 + (t1 - t0) * j as f64 / STEPS_PER_SEGMENT as f64);
            }
        }
        params.push(spline.length());
        let density: Vec<f64> = params
            .iter()
            .map(|&t| {
                let [_, d1, d2] = spline.eval(t);
                let speed = d1[0].hypot(d1[1]);
                let kappa = if speed > 0.0 {
                    (d1[0] * d2[1] - d1[1] * d2[0]).abs() / speed.powi(3)
                } else {
                    0.0
                };
                speed * (1.0 + curvature_weight * kappa)
            })
            .collect();
        let mut mass = vec![0.0; params.len()];
        for i in 1..params.len() {
            mass[i] = mass[i - 1] + 0.5 * (density[i] + density[i - 1]) * (params[i] - params[i - 1]);
        }
        Self { params, density, mass }
    }

    fn total(&self) -> f64 {
        self.mass[self.mass.len() - 1]
    }

    /// Mass fraction reached at each knot.
    fn knot_fractions(&self) -> Vec<f64> {
        let total = self.total();
        self.mass.iter().step_by(STEPS_PER_SEGMENT).map(|m| m / total).collect()
    }

    /// Parameter whose mass fraction is `u`.
    fn param_at(&self, u: f64) -> f64 {
        let goal = self.total() * u.clamp(0.0, 1.0);
        let last = self.mass.len() - 2;
        let i = self.mass.partition_point(|&m| m < goal).saturating_sub(1).min(last);
        invert_mass(&self.params, &self.density, &self.mass, i, goal)
    }
}

/// Fixed-point iterations used to equalize the output's own spacing.
const MAX_REFINEMENTS: usize = 60;
const REFINE_TOLERANCE: f64 = 1e-13;

/// Resamples a point sequence to `target` points along an interpolating
/// cubic spline, with point density proportional to
/// `1 + curvature_weight * |κ|` per unit arc length. Both end points of the
/// input are kept.
///
/// The points are placed on the input spline so that they are evenly
/// distributed in density mass along the spline through the output points
/// themselves. Resampling the result again therefore reproduces it.
pub fn resample_curve(points: &[Point], target: usize, curvature_weight: f64) -> Result<Curve, DatasetError> {
    if target < 2 {
        return Err(DatasetError::InvalidParameters(format!(
            "target of {target} points is below 2"
        )));
    }
    if !(curvature_weight >= 0.0 && curvature_weight.is_finite()) {
        return Err(DatasetError::InvalidParameters(format!(
            "curvature weight {curvature_weight} must be nonnegative"
        )));
    }
    let spline = CubicSpline::fit(points)?;
    let table = MassTable::new(&spline, curvature_weight);
    if !(table.total() > 0.0) {
        return Err(DatasetError::Degenerate("curve has zero length".into()));
    }
    let (first, last) = (points[0], points[points.len() - 1]);
    let place = |u: &[f64]| -> Vec<Point> {
        let mut out: Vec<Point> = u.iter().map(|&u| spline.eval(table.param_at(u))[0]).collect();
        out[0] = first;
        out[target - 1] = last;
        out
    };
    let ideal: Vec<f64> = (0..target).map(|j| j as f64 / (target - 1) as f64).collect();
    let mut u = ideal.clone();
    let mut out = place(&u);
    // The refinement needs a spline through the output.
    let min_fit = if first == last { 5 } else { 4 };
    if target < min_fit {
        return Ok(Curve::new(out));
    }
    let mut step = 1.0;
    let mut best_err = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        let Ok(own) = CubicSpline::fit(&out) else { break };
        let frac = MassTable::new(&own, curvature_weight).knot_fractions();
        let err = frac.iter().zip(&ideal).map(|(f, i)| (f - i).abs()).fold(0.0, f64::max);
        if err <= REFINE_TOLERANCE {
            break;
        }
        if err >= best_err {
            step *= 0.5;
            if step < 1e-3 {
                break;
            }
        }
        best_err = best_err.min(err);
        let next: Vec<f64> = u
            .iter()
            .zip(frac.iter().zip(&ideal))
            .map(|(u, (f, i))| u - step * (f - i))
            .collect();
        if next.windows(2).any(|w| w[1] <= w[0]) {
            break;
        }
        u = next;
        out = place(&u);
    }
    Ok(Curve::new(out))
}
/// Finds `t` in `[params[i], params[i+1]]` whose cumulative mass is `goal`,
/// exactly inverting the trapezoid rule: with linearly interpolated density
/// the mass is quadratic in `t` inside the cell.
fn invert_mass(params: &[f64], density: &[f64], mass: &[f64], i: usize, goal: f64) -> f64 {
    let (t0, t1) = (params[i], params[i + 1]);
    if mass[i + 1] <= mass[i] {
        return t0;
    }
    let (f0, f1) = (density[i], density[i + 1]);
    let h = t1 - t0;
    let target = goal - mass[i];
    let slope = (f1 - f0) / h;
    // Solve f0 s + slope s² / 2 = target; this form is stable for slope -> 0.
    let disc = (f0 * f0 + 2.0 * slope * target).max(0.0);
    let s = 2.0 * target / (f0 + disc.sqrt());
    t0 + s.clamp(0.0, h)
}
