use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::grassmann::PrincipalAngles;

use super::ConstructError;

/// Angle gap below which `θ1 = θ2` is treated as the totally geodesic branch.
pub const EQUAL_ANGLE_TOL: f64 = 1e-12;

/// Target angles of a graph construction and the constants of its metric
/// conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HelixParams {
    pub theta1: f64,
    pub theta2: f64,
    /// `sec²θ1 + sec²θ2 − 2`, the required `‖J‖²`.
    pub c1: f64,
    /// `tan θ1·tan θ2`, the required Jacobian determinant.
    pub c2: f64,
}

impl HelixParams {
    /// Requires `0 < θ1 ≤ θ2 < π/2`.
    pub fn from_angles(theta1: f64, theta2: f64) -> Result<Self, ConstructError> {
        let bad = |reason: &str| ConstructError::InvalidAngles {
            theta1,
            theta2,
            reason: reason.into(),
        };
        if !theta1.is_finite() || !theta2.is_finite() {
            return Err(bad("angles must be finite"));
        }
        if !(theta1 > 0.0) {
            return Err(bad("theta1 must be positive"));
        }
        if theta2 < theta1 {
            return Err(bad("theta1 must not exceed theta2"));
        }
        if !(theta2 < FRAC_PI_2) {
            return Err(bad("theta2 must be below pi/2"));
        }
        let (t1, t2) = (theta1.tan(), theta2.tan());
        Ok(HelixParams {
            theta1,
            theta2,
            c1: t1 * t1 + t2 * t2,
            c2: t1 * t2,
        })
    }

    pub fn sec2_sum(&self) -> f64 {
        2.0 + self.c1
    }

    pub fn sec2_product(&self) -> f64 {
        1.0 + self.c1 + self.c2 * self.c2
    }

    /// Normalized constant `c = c1/c2`: the `‖J‖²` of the unit-determinant map.
    pub fn c(&self) -> f64 {
        self.c1 / self.c2
    }

    /// Deformation parameter `m = √c2` scaling the unit-determinant map.
    pub fn m(&self) -> f64 {
        self.c2.sqrt()
    }

    /// `θ1 = θ2`: only affine graphs qualify.
    pub fn is_totally_geodesic_branch(&self) -> bool {
        (self.theta2 - self.theta1).abs() < EQUAL_ANGLE_TOL
    }

    pub fn angles(&self) -> PrincipalAngles {
        PrincipalAngles {
            theta1: self.theta1,
            theta2: self.theta2,
        }
    }
}

/// Angles of the graph of `(m·f, m·g)` when `(f, g)` has unit Jacobian
/// determinant and `‖J‖² = c`.
pub fn deform(m: f64, c: f64) -> Result<PrincipalAngles, ConstructError> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(ConstructError::InvalidDeformation(format!(
            "m = {m} must be positive"
        )));
    }
    if !(c > 2.0) || !c.is_finite() {
        return Err(ConstructError::InvalidDeformation(format!(
            "c = {c} must exceed 2"
        )));
    }
    let root = (c * c - 4.0).sqrt();
    // c − √(c²−4) written without cancellation
    let small = 4.0 / (c + root);
    let big = c + root;
    let theta = |r: f64| (m * (r / 2.0).sqrt()).atan();
    Ok(PrincipalAngles {
        theta1: theta(small),
        theta2: theta(big),
    })
}

/// `(m, c)` with `deform(m, c) = (θ1, θ2)`: `m = √(tan θ1 tan θ2)` and
/// `c = tan θ1/tan θ2 + tan θ2/tan θ1`.
pub fn deform_inverse(angles: &PrincipalAngles) -> Result<(f64, f64), ConstructError> {
    let (theta1, theta2) = (angles.theta1, angles.theta2);
    let p = HelixParams::from_angles(theta1, theta2)?;
    if p.is_totally_geodesic_branch() {
        return Err(ConstructError::InvalidAngles {
            theta1,
            theta2,
            reason: "equal angles collapse the deformation family".into(),
        });
    }
    let (t1, t2) = (theta1.tan(), theta2.tan());
    Ok(((t1 * t2).sqrt(), t1 / t2 + t2 / t1))
}
