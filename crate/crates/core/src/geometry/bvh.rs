//! Bounding volume hierarchy over a triangle soup.
//!
//! Median split on the longest axis of the centroid bounds, at most
//! [`MAX_LEAF_FACES`] faces per leaf. Construction is deterministic: ties in
//! the split order are broken by the original face index.

use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{Hit, Ray, Triangle, Vec3};
use crate::error::{Error, Result};

pub const MAX_LEAF_FACES: usize = 4;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    pub fn of_triangle(t: &Triangle) -> Aabb {
        Aabb {
            min: t.a.min(t.b).min(t.c),
            max: t.a.max(t.b).max(t.c),
        }
    }

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn grow(self, p: Vec3) -> Aabb {
        Aabb {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_box(&self, o: &Aabb) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    fn padded(self) -> Aabb {
        let pad = Vec3::splat(1e-9 * (1.0 + self.extent().norm()));
        Aabb {
            min: self.min - pad,
            max: self.max + pad,
        }
    }

    /// Slab test; returns the entry distance if the ray meets the box before `t_max`.
    #[inline]
    fn hit(&self, origin: Vec3, inv_dir: Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0_f64;
        let mut t1 = t_max;
        for i in 0..3 {
            let a = (self.min[i] - origin[i]) * inv_dir[i];
            let b = (self.max[i] - origin[i]) * inv_dir[i];
            // NaN (0 * inf) leaves the interval unchanged
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        (t0 <= t1).then_some(t0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    /// Leaf: first index into `order`; interior: index of the left child.
    start: u32,
    /// Leaf face count; zero marks an interior node whose right child is `start + 1`.
    count: u32,
}

/// A ray hit tagged with the index of the face in the original input order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceHit {
    pub face: usize,
    pub hit: Hit,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    faces: Vec<Triangle>,
    nodes: Vec<Node>,
    /// Face index permutation; each leaf covers a contiguous range.
    order: Vec<u32>,
}

impl Bvh {
    pub fn build(faces: &[Triangle]) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::InvalidArgument("cannot build a BVH over zero faces"));
        }
        if faces.len() > u32::MAX as usize / 2 {
            return Err(Error::InvalidArgument("too many faces for a BVH"));
        }
        let boxes: Vec<Aabb> = faces.iter().map(Aabb::of_triangle).collect();
        let centroids: Vec<Vec3> = faces.iter().map(Triangle::centroid).collect();
        let mut order: Vec<u32> = (0..faces.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * faces.len() / MAX_LEAF_FACES + 1);
        nodes.push(Node {
            bounds: Aabb::EMPTY,
            start: 0,
            count: 0,
        });
        // explicit stack of (node, range start, range end)
        let mut stack = Vec::new();
        stack.push((0usize, 0usize, faces.len()));
        while let Some((node, lo, hi)) = stack.pop() {
            let slice = &mut order[lo..hi];
            let bounds = slice
                .iter()
                .fold(Aabb::EMPTY, |b, &i| b.union(boxes[i as usize]))
                .padded();
            if slice.len() <= MAX_LEAF_FACES {
                nodes[node] = Node {
                    bounds,
                    start: lo as u32,
                    count: slice.len() as u32,
                };
                continue;
            }
            let cbox = slice
                .iter()
                .fold(Aabb::EMPTY, |b, &i| b.grow(centroids[i as usize]));
            let ext = cbox.extent();
            let axis = if ext.x >= ext.y && ext.x >= ext.z {
                0
            } else if ext.y >= ext.z {
                1
            } else {
                2
            };
            let mid = slice.len() / 2;
            slice.select_nth_unstable_by(mid, |&a, &b| {
                centroids[a as usize][axis]
                    .partial_cmp(&centroids[b as usize][axis])
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
            let left = nodes.len();
            nodes.push(Node {
                bounds: Aabb::EMPTY,
                start: 0,
                count: 0,
            });
            nodes.push(Node {
                bounds: Aabb::EMPTY,
                start: 0,
                count: 0,
            });
            nodes[node] = Node {
                bounds,
                start: left as u32,
                count: 0,
            };
            stack.push((left + 1, lo + mid, hi));
            stack.push((left, lo, lo + mid));
        }
        Ok(Bvh {
            faces: faces.to_vec(),
            nodes,
            order,
        })
    }

    pub fn faces(&self) -> &[Triangle] {
        &self.faces
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Calls `f` for every face hit with `t < t_max`, in traversal order.
    pub fn for_each_hit(&self, ray: &Ray, t_max: f64, mut f: impl FnMut(FaceHit)) {
        let inv = ray.inv_direction();
        let mut stack: [u32; 64] = [0; 64];
        let mut sp = 1usize;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            if node.bounds.hit(ray.origin, inv, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                let range = node.start as usize..(node.start + node.count) as usize;
                for &fi in &self.order[range] {
                    if let Some(hit) = self.faces[fi as usize].intersect(ray) {
                        if hit.t < t_max {
                            f(FaceHit {
                                face: fi as usize,
                                hit,
                            });
                        }
                    }
                }
            } else {
                // depth is O(log n) for median splits; 64 slots cover any u32 face count
                stack[sp] = node.start + 1;
                stack[sp + 1] = node.start;
                sp += 2;
            }
        }
    }

    /// All hits along the ray, sorted by ascending `t` (ties by face index).
    pub fn intersect(&self, ray: &Ray) -> Vec<FaceHit> {
        self.intersect_within(ray, f64::INFINITY)
    }

    /// Hits with `t < t_max`, sorted by ascending `t`.
    pub fn intersect_within(&self, ray: &Ray, t_max: f64) -> Vec<FaceHit> {
        let mut hits = Vec::new();
        self.for_each_hit(ray, t_max, |h| hits.push(h));
        sort_hits(&mut hits);
        hits
    }

    /// Checks the structural invariants: every face in exactly one leaf and
    /// every node box enclosing its subtree.
    pub fn validate(&self) -> bool {
        let mut seen = alloc::vec![0u32; self.faces.len()];
        let mut ok = true;
        let mut stack = alloc::vec![(0usize, Aabb::EMPTY, false)];
        while let Some((ni, parent, has_parent)) = stack.pop() {
            let node = &self.nodes[ni];
            if has_parent && !parent.contains_box(&node.bounds) {
                ok = false;
            }
            if node.count > 0 {
                for &fi in &self.order[node.start as usize..(node.start + node.count) as usize] {
                    seen[fi as usize] += 1;
                    if !node.bounds.contains_box(&Aabb::of_triangle(&self.faces[fi as usize])) {
                        ok = false;
                    }
                }
            } else {
                stack.push((node.start as usize, node.bounds, true));
                stack.push((node.start as usize + 1, node.bounds, true));
            }
        }
        ok && seen.iter().all(|&c| c == 1)
    }
}

pub(crate) fn sort_hits(hits: &mut [FaceHit]) {
    hits.sort_by(|a, b| {
        a.hit
            .t
            .partial_cmp(&b.hit.t)
            .unwrap_or(Ordering::Equal)
            .then(a.face.cmp(&b.face))
    });
}

/// Reference O(n) scan over every face; same ordering as [`Bvh::intersect`].
pub fn intersect_all(faces: &[Triangle], ray: &Ray) -> Vec<FaceHit> {
    let mut hits: Vec<FaceHit> = faces
        .iter()
        .enumerate()
        .filter_map(|(face, t)| t.intersect(ray).map(|hit| FaceHit { face, hit }))
        .collect();
    sort_hits(&mut hits);
    hits
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_faces() -> Vec<Triangle> {
        let mut v = Vec::new();
        for i in 0..10 {
            let x = i as f64;
            v.push(Triangle::new_unchecked(
                Vec3::new(x, -1.0, -1.0),
                Vec3::new(x, 1.0, -1.0),
                Vec3::new(x, 0.0, 1.0),
            ));
        }
        v
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(Bvh::build(&[]).is_err());
    }

    #[test]
    fn single_face_matches_direct_query() {
        let tri = square_faces()[3];
        let bvh = Bvh::build(&[tri]).unwrap();
        let ray = Ray::new(Vec3::new(-5.0, 0.0, 0.0), Vec3::X).unwrap();
        let hits = bvh.intersect(&ray);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].hit, tri.intersect(&ray).unwrap());
    }

    #[test]
    fn hits_are_sorted_and_complete() {
        let faces = square_faces();
        let bvh = Bvh::build(&faces).unwrap();
        assert!(bvh.validate());
        let ray = Ray::new(Vec3::new(-0.5, 0.0, 0.0), Vec3::X).unwrap();
        let hits = bvh.intersect(&ray);
        assert_eq!(hits.len(), 10);
        assert!(hits.windows(2).all(|w| w[0].hit.t <= w[1].hit.t));
        assert_eq!(hits, intersect_all(&faces, &ray));
        let within = bvh.intersect_within(&ray, 3.0);
        assert_eq!(within.len(), 3);
    }

    #[test]
    fn ray_missing_all_boxes() {
        let bvh = Bvh::build(&square_faces()).unwrap();
        let ray = Ray::new(Vec3::new(0.0, 10.0, 0.0), Vec3::Y).unwrap();
        assert!(bvh.intersect(&ray).is_empty());
    }
}
