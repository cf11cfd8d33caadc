use super::Vec3;
use crate::error::{Error, Result};

/// A half-line with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Normalizes `direction`; fails on a zero or non-finite direction.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self> {
        let direction = direction
            .try_normalize()
            .ok_or(Error::InvalidArgument("ray direction must be non-zero"))?;
        if !origin.is_finite() {
            return Err(Error::InvalidArgument("ray origin is not finite"));
        }
        Ok(Ray { origin, direction })
    }

    /// Ray from `from` towards `to` together with the segment length.
    pub fn between(from: Vec3, to: Vec3) -> Result<(Self, f64)> {
        let d = to - from;
        let len = d.norm();
        Ok((Ray::new(from, d)?, len))
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    #[inline]
    pub(crate) fn inv_direction(&self) -> Vec3 {
        Vec3::new(
            1.0 / self.direction.x,
            1.0 / self.direction.y,
            1.0 / self.direction.z,
        )
    }
}
