use super::{Ray, Vec3};
use crate::error::{Error, Result};

/// Faces with an area at or below this value are considered degenerate (m²).
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Self-intersection guard: hits closer than this along a ray are ignored (m).
pub const RAY_EPSILON: f64 = 1e-6;

/// A triangle stored by its three vertex positions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Triangle {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
}

/// Result of a ray/triangle query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Ray parameter; with a unit direction this is the distance in meters.
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

impl Triangle {
    /// Builds a triangle, rejecting degenerate or non-finite input.
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Result<Self> {
        let tri = Triangle { a, b, c };
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidArgument("triangle vertex is not finite"));
        }
        if tri.area() <= MIN_TRIANGLE_AREA {
            return Err(Error::InvalidArgument("degenerate triangle"));
        }
        Ok(tri)
    }

    /// Builds a triangle without the degeneracy check.
    #[inline]
    pub const fn new_unchecked(a: Vec3, b: Vec3, c: Vec3) -> Self {
        Triangle { a, b, c }
    }

    #[inline]
    pub fn vertices(&self) -> [Vec3; 3] {
        [self.a, self.b, self.c]
    }

    /// Non-normalized normal, `(b - a) × (c - a)`; its length is twice the area.
    #[inline]
    pub fn scaled_normal(&self) -> Vec3 {
        (self.b - self.a).cross(self.c - self.a)
    }

    pub fn normal(&self) -> Option<Vec3> {
        self.scaled_normal().try_normalize()
    }

    #[inline]
    pub fn area(&self) -> f64 {
        0.5 * self.scaled_normal().norm()
    }

    #[inline]
    pub fn centroid(&self) -> Vec3 {
        (self.a + self.b + self.c) / 3.0
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.area() > MIN_TRIANGLE_AREA)
    }

    pub fn map(&self, mut f: impl FnMut(Vec3) -> Vec3) -> Triangle {
        Triangle::new_unchecked(f(self.a), f(self.b), f(self.c))
    }

    pub fn translated(&self, offset: Vec3) -> Triangle {
        self.map(|p| p + offset)
    }

    /// Möller–Trumbore intersection. Returns the hit only for `t > RAY_EPSILON`;
    /// degenerate triangles and parallel rays are misses.
    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        let e1 = self.b - self.a;
        let e2 = self.c - self.a;
        let n = e1.cross(e2);
        // scale-aware parallel test: |d·n| relative to |n|
        let n_len = n.norm();
        if !(0.5 * n_len > MIN_TRIANGLE_AREA) {
            return None;
        }
        let p = ray.direction.cross(e2);
        let det = e1.dot(p);
        if det.abs() <= 1e-14 * n_len {
            return None;
        }
        let inv_det = 1.0 / det;
        let s = ray.origin - self.a;
        let u = s.dot(p) * inv_det;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let q = s.cross(e1);
        let v = ray.direction.dot(q) * inv_det;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        let t = e2.dot(q) * inv_det;
        if t > RAY_EPSILON {
            Some(Hit { t, u, v })
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Triangle {
        Triangle::new(
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn axis_aligned_hit() {
        let ray = Ray::new(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, -1.0)).unwrap();
        let hit = tri().intersect(&ray).unwrap();
        assert!((hit.t - 1.0).abs() < 1e-15);
        assert!(hit.u >= 0.0 && hit.v >= 0.0 && hit.u + hit.v <= 1.0);
    }

    #[test]
    fn parallel_ray_misses() {
        let ray = Ray::new(Vec3::new(0.0, 0.0, 1.0), Vec3::X).unwrap();
        assert!(tri().intersect(&ray).is_none());
    }

    #[test]
    fn hits_behind_origin_are_ignored() {
        let ray = Ray::new(Vec3::new(0.0, 0.0, 1.0), Vec3::Z).unwrap();
        assert!(tri().intersect(&ray).is_none());
        // origin on the plane: t = 0 is inside the guard
        let ray = Ray::new(Vec3::ZERO, Vec3::Z).unwrap();
        assert!(tri().intersect(&ray).is_none());
    }

    #[test]
    fn degenerate_triangle_is_rejected_and_misses() {
        let a = Vec3::ZERO;
        let b = Vec3::X;
        assert!(Triangle::new(a, b, Vec3::new(2.0, 0.0, 0.0)).is_err());
        let flat = Triangle::new_unchecked(a, b, Vec3::new(2.0, 0.0, 0.0));
        let ray = Ray::new(Vec3::new(0.5, 0.0, 1.0), -Vec3::Z).unwrap();
        assert!(flat.intersect(&ray).is_none());
    }

    #[test]
    fn area_and_centroid() {
        let t = tri();
        assert!((t.area() - 2.0).abs() < 1e-15);
        assert!(t.centroid().distance(Vec3::new(0.0, -1.0 / 3.0, 0.0)) < 1e-15);
    }
}
