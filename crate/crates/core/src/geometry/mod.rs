//! Geometric kernel: vectors, triangles, triangle soups, rotations, ray
//! queries and a BVH.

mod bvh;
pub mod icosphere;
mod mesh;
mod ray;
mod rotation;
mod triangle;
mod vec3;

pub use bvh::{intersect_all, Aabb, Bvh, FaceHit, MAX_LEAF_FACES};
pub use mesh::{point_in_bvh, point_in_mesh, MeshVolume, TriSoupMesh};
pub use ray::Ray;
pub use rotation::{random_rotation, rodrigues, RotationMatrix, AXIS_NORM_TOLERANCE};
pub use triangle::{Hit, Triangle, MIN_TRIANGLE_AREA, RAY_EPSILON};
pub use vec3::Vec3;
