use core::f64::consts::PI;
use core::ops::Mul;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Vec3;
use crate::error::{Error, Result};

/// Tolerance on `‖axis‖ = 1` accepted by [`rodrigues`].
pub const AXIS_NORM_TOLERANCE: f64 = 1e-9;

/// A 3×3 rotation matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotationMatrix(pub [[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix =
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> RotationMatrix {
        let m = &self.0;
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = m[j][i];
            }
        }
        RotationMatrix(t)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest absolute entry of `RᵀR − I`.
    pub fn orthonormality_error(&self) -> f64 {
        let p = self.transpose() * *self;
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                err = err.max((p.0[i][j] - id).abs());
            }
        }
        err
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        RotationMatrix(out)
    }
}

impl Mul<Vec3> for RotationMatrix {
    type Output = Vec3;

    fn mul(self, v: Vec3) -> Vec3 {
        self.apply(v)
    }
}

/// Rodrigues' formula `R = I + sin θ K + (1 − cos θ) K²`, with `K` the
/// cross-product matrix of the unit `axis`.
pub fn rodrigues(axis: Vec3, angle: f64) -> Result<RotationMatrix> {
    if !axis.is_finite() || (axis.norm() - 1.0).abs() > AXIS_NORM_TOLERANCE {
        return Err(Error::InvalidArgument("rotation axis must be a unit vector"));
    }
    if !angle.is_finite() {
        return Err(Error::InvalidArgument("rotation angle is not finite"));
    }
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    let k = [
        [0.0, -axis.z, axis.y],
        [axis.z, 0.0, -axis.x],
        [-axis.y, axis.x, 0.0],
    ];
    let mut r = RotationMatrix::IDENTITY.0;
    for i in 0..3 {
        for j in 0..3 {
            let k2: f64 = (0..3).map(|m| k[i][m] * k[m][j]).sum();
            r[i][j] += s * k[i][j] + (1.0 - c) * k2;
        }
    }
    Ok(RotationMatrix(r))
}

/// Draws a rotation uniformly (Haar measure) from SO(3).
///
/// A uniform unit quaternion is sampled from four standard normals and
/// converted to axis/angle form, which is then passed through [`rodrigues`].
/// The induced angle law is the Haar one, `p(θ) = (1 − cos θ)/π` on `[0, π]`.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> RotationMatrix {
    loop {
        let w: f64 = StandardNormal.sample(rng);
        let x: f64 = StandardNormal.sample(rng);
        let y: f64 = StandardNormal.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        let n = libm::sqrt(w * w + x * x + y * y + z * z);
        if n < 1e-12 {
            continue;
        }
        // q and -q are the same rotation; fold onto w >= 0.
        let sign = if w < 0.0 { -1.0 } else { 1.0 };
        let (w, v) = (sign * w / n, Vec3::new(x, y, z) * (sign / n));
        let half_sin = v.norm();
        let angle = 2.0 * libm::atan2(half_sin, w);
        let axis = if half_sin > 1e-12 { v / half_sin } else { Vec3::Z };
        debug_assert!(angle <= PI + 1e-12);
        // the axis is unit to rounding, far inside the rodrigues tolerance
        return rodrigues(axis, angle).expect("axis normalized above");
    }
}
