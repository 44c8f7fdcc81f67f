use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::rational::{forward_batch, validate_parameters};
use super::{Curve, GeometryError, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    /// Diagonal of the reflection matrix applied to row-vector points.
    pub fn reflection(self) -> [f64; 2] {
        match self {
            Axis::X => [1.0, -1.0],
            Axis::Y => [-1.0, 1.0],
        }
    }

    /// Index of the coordinate that is zero on the axis.
    pub fn normal_coordinate(self) -> usize {
        match self {
            Axis::X => 1,
            Axis::Y => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SymmetrySpec {
    None,
    /// Prim plus its mirror image about a coordinate axis.
    Axis {
        axis: Axis,
    },
    /// `parts` copies of the prim, copy `i` rotated by `i * angle`.
    Rotational {
        parts: usize,
        angle: f64,
    },
}

impl SymmetrySpec {
    /// A closed rotational figure: `parts * angle == 2π`.
    pub fn rotational(parts: usize) -> Result<Self, GeometryError> {
        if parts < 2 {
            return Err(GeometryError::InvalidSymmetry(format!(
                "rotational symmetry needs at least 2 parts, got {parts}"
            )));
        }
        Ok(SymmetrySpec::Rotational {
            parts,
            angle: TAU / parts as f64,
        })
    }

    pub fn parts(&self) -> usize {
        match self {
            SymmetrySpec::None => 1,
            SymmetrySpec::Axis { .. } => 2,
            SymmetrySpec::Rotational { parts, .. } => *parts,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match *self {
            SymmetrySpec::Rotational { parts, angle } => {
                if parts < 2 {
                    return Err(GeometryError::InvalidSymmetry(format!(
                        "rotational symmetry needs at least 2 parts, got {parts}"
                    )));
                }
                if !angle.is_finite() {
                    return Err(GeometryError::InvalidSymmetry("rotation angle is not finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// True for a rotational figure whose copies close up into a full turn.
    pub fn closes_rotation(&self) -> bool {
        match *self {
            SymmetrySpec::Rotational { parts, angle } => (parts as f64 * angle - TAU).abs() < 1e-9,
            _ => false,
        }
    }
}

/// Reversed, reflected copy of a prim's control points and weights.
pub fn mirror_params(control_points: &[Point], weights: &[f64], axis: Axis) -> (Vec<Point>, Vec<f64>) {
    let s = axis.reflection();
    let p = control_points
        .iter()
        .rev()
        .map(|q| [q[0] * s[0], q[1] * s[1]])
        .collect();
    let w = weights.iter().rev().copied().collect();
    (p, w)
}

/// The 2×2 matrix `[[cos θ, -sin θ], [sin θ, cos θ]]`, applied on the right of
/// row-vector points.
pub fn rotation_matrix(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, -s], [s, c]]
}

/// Right-multiplies every control point by the rotation matrix for `theta`.
pub fn rotate_params(control_points: &[Point], theta: f64) -> Vec<Point> {
    let r = rotation_matrix(theta);
    control_points
        .iter()
        .map(|p| [p[0] * r[0][0] + p[1] * r[1][0], p[0] * r[0][1] + p[1] * r[1][1]])
        .collect()
}

/// How `total` sampled points split over `parts`, earlier parts taking the remainder.
pub fn part_point_counts(total: usize, parts: usize) -> Vec<usize> {
    let base = total / parts;
    let extra = total % parts;
    (0..parts).map(|i| base + usize::from(i < extra)).collect()
}

/// Control points and weights of every part, in traversal order.
pub fn part_params(control_points: &[Point], weights: &[f64], spec: &SymmetrySpec) -> Vec<(Vec<Point>, Vec<f64>)> {
    match *spec {
        SymmetrySpec::None => vec![(control_points.to_vec(), weights.to_vec())],
        SymmetrySpec::Axis { axis } => vec![
            (control_points.to_vec(), weights.to_vec()),
            mirror_params(control_points, weights, axis),
        ],
        SymmetrySpec::Rotational { parts, angle } => (0..parts)
            .map(|i| (rotate_params(control_points, angle * i as f64), weights.to_vec()))
            .collect(),
    }
}

/// Samples every part of a symmetric curve with its own parameter vector and
/// concatenates the parts in traversal order.
pub fn assemble_full_curve(
    control_points: &[Point],
    weights: &[f64],
    spec: &SymmetrySpec,
    per_part_u: &[Vec<f64>],
    expected_points: usize,
) -> Result<Curve, GeometryError> {
    spec.validate()?;
    if per_part_u.len() != spec.parts() {
        return Err(GeometryError::LengthMismatch {
            what: "per-part parameter vectors",
            expected: spec.parts(),
            actual: per_part_u.len(),
        });
    }
    let total: usize = per_part_u.iter().map(Vec::len).sum();
    if total != expected_points {
        return Err(GeometryError::PointCountMismatch {
            expected: expected_points,
            actual: total,
        });
    }
    let mut points = Vec::with_capacity(total);
    for ((cp, w), u) in part_params(control_points, weights, spec).iter().zip(per_part_u) {
        validate_parameters(u)?;
        let flat: Vec<f64> = cp.iter().flat_map(|p| *p).collect();
        let sampled = forward_batch(&flat, w, u, 1, cp.len(), u.len())?;
        points.extend(sampled.chunks_exact(2).map(|c| [c[0], c[1]]));
    }
    Ok(Curve::new(points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn mirror_hand_cases() {
        let (p, _) = mirror_params(&[[0.0, 1.0], [1.0, 2.0]], &[1.0, 1.0], Axis::X);
        assert_eq!(p, vec![[1.0, -2.0], [0.0, -1.0]]);
        let (p, _) = mirror_params(&[[1.0, 0.0], [2.0, 0.0]], &[1.0, 1.0], Axis::Y);
        assert_eq!(p, vec![[-2.0, 0.0], [-1.0, 0.0]]);
        let (_, w) = mirror_params(&[[0.0; 2]; 3], &[1.0, 2.0, 3.0], Axis::Y);
        assert_eq!(w, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn rotation_hand_cases() {
        let p = vec![[1.0, 2.0], [-0.5, 3.0]];
        assert_eq!(rotate_params(&p, 0.0), p);
        let r = rotate_params(&[[1.0, 2.0]], PI);
        assert!((r[0][0] + 1.0).abs() < 1e-15 && (r[0][1] + 2.0).abs() < 1e-15);
        let r = rotate_params(&[[1.0, 0.0]], PI / 2.0);
        assert!(r[0][0].abs() < 1e-15 && (r[0][1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_counts_cover_total() {
        assert_eq!(part_point_counts(64, 3), vec![22, 21, 21]);
        assert_eq!(part_point_counts(64, 2), vec![32, 32]);
    }

    #[test]
    fn wrong_point_total_is_rejected() {
        let u = vec![super::super::uniform_grid(9)];
        let err = assemble_full_curve(&[[0.0, 0.0], [1.0, 0.0]], &[1.0, 1.0], &SymmetrySpec::None, &u, 64).unwrap_err();
        assert!(matches!(
            err,
            GeometryError::PointCountMismatch {
                expected: 64,
                actual: 10
            }
        ));
    }

    #[test]
    fn rotational_constructor_closes() {
        assert!(SymmetrySpec::rotational(3).unwrap().closes_rotation());
        assert!(SymmetrySpec::rotational(1).is_err());
    }
}
