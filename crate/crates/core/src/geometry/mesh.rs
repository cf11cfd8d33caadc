use alloc::vec::Vec;

use super::{bvh::FaceHit, Bvh, Ray, Triangle, Vec3};
use crate::error::{Error, Result};

/// Fixed, irrational-looking directions for parity casts. The first is used
/// unless a hit grazes an edge or vertex, in which case the next is tried.
const PARITY_DIRECTIONS: [[f64; 3]; 8] = [
    [0.5773502691896258, 0.5773502691896257, 0.5773502691896258],
    [0.2672612419124244, -0.5345224838248488, 0.8017837257372732],
    [-0.8164965809277261, 0.4082482904638631, 0.4082482904638630],
    [0.3015113445777636, 0.9045340337332909, -0.3015113445777636],
    [-0.1961161351381841, -0.5883484054145521, -0.7844645405527362],
    [0.9128709291752769, 0.1825741858350554, 0.3651483716701107],
    [-0.4472135954999579, 0.0, 0.8944271909999159],
    [0.0990147542976674, -0.9901475429766743, 0.0990147542976674],
];

/// Barycentric margin under which a parity hit counts as grazing.
const GRAZING_MARGIN: f64 = 1e-9;

/// A non-indexed triangle mesh: `3M` vertex positions for `M` faces.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TriSoupMesh {
    faces: Vec<Triangle>,
}

/// Volume together with a closedness flag; open meshes give unreliable volumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshVolume {
    pub volume: f64,
    pub closed: bool,
}

impl TriSoupMesh {
    /// Wraps the faces, rejecting any degenerate one.
    pub fn new(faces: Vec<Triangle>) -> Result<Self> {
        if faces.iter().any(Triangle::is_degenerate) {
            return Err(Error::InvalidArgument("mesh contains a degenerate face"));
        }
        Ok(TriSoupMesh { faces })
    }

    /// Builds a soup from indexed geometry.
    pub fn from_indexed(vertices: &[Vec3], faces: &[[usize; 3]]) -> Result<Self> {
        let mut out = Vec::with_capacity(faces.len());
        for f in faces {
            let get = |i: usize| {
                vertices
                    .get(i)
                    .copied()
                    .ok_or(Error::InvalidArgument("face index out of range"))
            };
            out.push(Triangle::new(get(f[0])?, get(f[1])?, get(f[2])?)?);
        }
        Ok(TriSoupMesh { faces: out })
    }

    pub fn faces(&self) -> &[Triangle] {
        &self.faces
    }

    pub fn into_faces(self) -> Vec<Triangle> {
        self.faces
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        3 * self.faces.len()
    }

    /// Tetrahedra are fanned from a mesh vertex rather than the world origin,
    /// which keeps small meshes far from the origin well conditioned.
    fn reference_point(&self) -> Vec3 {
        self.faces.first().map_or(Vec3::ZERO, |t| t.a)
    }

    /// Signed volume from the divergence theorem, `Σ a·(b×c) / 6` with the
    /// vertices taken relative to a reference point.
    pub fn signed_volume(&self) -> f64 {
        let o = self.reference_point();
        self.faces
            .iter()
            .map(|t| (t.a - o).dot((t.b - o).cross(t.c - o)))
            .sum::<f64>()
            / 6.0
    }

    /// Enclosed volume (m³).
    pub fn volume(&self) -> f64 {
        self.signed_volume().abs()
    }

    pub fn volume_checked(&self) -> MeshVolume {
        MeshVolume {
            volume: self.volume(),
            closed: self.is_closed(),
        }
    }

    /// Every directed edge is matched by exactly one opposite edge (exact
    /// coordinate match), i.e. the soup is a closed, consistently oriented surface.
    pub fn is_closed(&self) -> bool {
        type Key = ([u64; 3], [u64; 3]);
        let key = |p: Vec3, q: Vec3| -> Key {
            (
                [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()],
                [q.x.to_bits(), q.y.to_bits(), q.z.to_bits()],
            )
        };
        let mut edges: Vec<Key> = Vec::with_capacity(3 * self.faces.len());
        for t in &self.faces {
            edges.push(key(t.a, t.b));
            edges.push(key(t.b, t.c));
            edges.push(key(t.c, t.a));
        }
        let mut sorted = edges.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        !self.faces.is_empty()
            && edges
                .iter()
                .all(|&(p, q)| sorted.binary_search(&(q, p)).is_ok())
    }

    /// Centroid of the enclosed solid (falls back to the vertex mean for a
    /// zero-volume surface).
    pub fn solid_centroid(&self) -> Vec3 {
        let o = self.reference_point();
        let mut acc = Vec3::ZERO;
        let mut vol = 0.0;
        for t in &self.faces {
            let (a, b, c) = (t.a - o, t.b - o, t.c - o);
            let v = a.dot(b.cross(c));
            acc += (a + b + c) * v;
            vol += v;
        }
        if vol.abs() > 1e-300 {
            o + acc / (4.0 * vol)
        } else {
            self.vertex_mean()
        }
    }

    pub fn vertex_mean(&self) -> Vec3 {
        let n = self.vertex_count().max(1) as f64;
        self.faces
            .iter()
            .fold(Vec3::ZERO, |acc, t| acc + t.a + t.b + t.c)
            / n
    }

    /// Scales every vertex about `center` by `factor`.
    pub fn scaled_about(&self, center: Vec3, factor: f64) -> TriSoupMesh {
        TriSoupMesh {
            faces: self
                .faces
                .iter()
                .map(|t| t.map(|p| center + (p - center) * factor))
                .collect(),
        }
    }

    pub fn translated(&self, offset: Vec3) -> TriSoupMesh {
        TriSoupMesh {
            faces: self.faces.iter().map(|t| t.translated(offset)).collect(),
        }
    }

    pub fn bounds(&self) -> super::Aabb {
        self.faces
            .iter()
            .fold(super::Aabb::EMPTY, |b, t| b.union(super::Aabb::of_triangle(t)))
    }

    /// Largest distance between two vertices of the mesh.
    pub fn max_extent(&self) -> f64 {
        let pts: Vec<Vec3> = self.faces.iter().flat_map(|t| t.vertices()).collect();
        let mut best: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                best = best.max(p.distance(*q));
            }
        }
        best
    }
}

/// Ray-parity membership test against a closed mesh: odd crossing count means
/// inside. A cast whose hit grazes an edge is retried along the next fixed
/// direction; after all retries the last parity is used.
pub fn point_in_mesh(p: Vec3, mesh: &TriSoupMesh) -> bool {
    parity_inside(p, |ray| {
        mesh.faces()
            .iter()
            .enumerate()
            .filter_map(|(face, t)| t.intersect(ray).map(|hit| FaceHit { face, hit }))
            .collect()
    })
}

/// Same as [`point_in_mesh`] but queries an envelope BVH.
pub fn point_in_bvh(p: Vec3, bvh: &Bvh) -> bool {
    if !bvh.bounds().contains(p) {
        return false;
    }
    parity_inside(p, |ray| {
        let mut v = Vec::new();
        bvh.for_each_hit(ray, f64::INFINITY, |h| v.push(h));
        v
    })
}

fn parity_inside(p: Vec3, mut cast: impl FnMut(&Ray) -> Vec<FaceHit>) -> bool {
    let mut inside = false;
    for d in PARITY_DIRECTIONS {
        let ray = Ray {
            origin: p,
            direction: Vec3::from(d),
        };
        let hits = cast(&ray);
        inside = hits.len() % 2 == 1;
        let grazing = hits.iter().any(|h| {
            let w = 1.0 - h.hit.u - h.hit.v;
            h.hit.u < GRAZING_MARGIN || h.hit.v < GRAZING_MARGIN || w < GRAZING_MARGIN
        });
        if !grazing {
            break;
        }
    }
    inside
}
