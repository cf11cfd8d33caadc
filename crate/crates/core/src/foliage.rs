//! Stochastic tree-crown generation.
//!
//! A crown is a closed envelope (a Gaussian-perturbed icosphere rescaled to
//! the target volume) filled with equilateral scatterer triangles of fixed
//! area. Each scatterer gets an independent uniform rotation and an
//! independent center drawn uniformly from the enclosed volume.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{
    icosphere, point_in_bvh, random_rotation, Aabb, Bvh, Ray, TriSoupMesh, Triangle, Vec3,
};

/// Attempts at drawing a valid perturbed envelope before giving up.
pub const MAX_ENVELOPE_ATTEMPTS: u32 = 10;

/// Consecutive rejections tolerated by the volume sampler.
pub const MAX_CONSECUTIVE_REJECTIONS: u64 = 1_000_000;

pub const DEFAULT_ENVELOPE_SUBDIVISIONS: u32 = 1;

/// User-facing crown parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CrownParams {
    /// Area of every scatterer triangle (m²).
    pub triangle_area_m2: f64,
    /// Target crown volume (m³).
    pub target_volume_m3: f64,
    /// Standard deviation of the vertex perturbation on the unit sphere.
    pub perturbation_std: f64,
    /// Scatterer density (triangles per m³).
    pub triangle_density_per_m3: f64,
    pub seed: u64,
    pub envelope_subdivisions: u32,
}

impl Default for CrownParams {
    /// The 600 m³ crown with 2 m² triangles at 0.25 per m³ and ξ = 0.1.
    fn default() -> Self {
        CrownParams {
            triangle_area_m2: 2.0,
            target_volume_m3: 600.0,
            perturbation_std: 0.1,
            triangle_density_per_m3: 0.25,
            seed: 0,
            envelope_subdivisions: DEFAULT_ENVELOPE_SUBDIVISIONS,
        }
    }
}

impl CrownParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.triangle_area_m2 > 0.0 && self.triangle_area_m2.is_finite()) {
            return Err(Error::InvalidArgument("triangle area must be positive"));
        }
        if !(self.target_volume_m3 > 0.0 && self.target_volume_m3.is_finite()) {
            return Err(Error::InvalidArgument("target volume must be positive"));
        }
        if !(self.perturbation_std >= 0.0 && self.perturbation_std.is_finite()) {
            return Err(Error::InvalidArgument("perturbation std must be >= 0"));
        }
        if !(self.triangle_density_per_m3 >= 0.0 && self.triangle_density_per_m3.is_finite()) {
            return Err(Error::InvalidArgument("triangle density must be >= 0"));
        }
        if self.envelope_subdivisions < 1 {
            return Err(Error::InvalidArgument("envelope subdivisions must be >= 1"));
        }
        Ok(())
    }

    /// Number of scatterers, `round(ρ·V_D)`.
    pub fn scatterer_count(&self) -> usize {
        libm::round(self.triangle_density_per_m3 * self.target_volume_m3) as usize
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A generated crown, positioned in world coordinates.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoliageModel {
    pub envelope: TriSoupMesh,
    pub scatterers: Vec<Triangle>,
    pub params: CrownParams,
    pub crown_center: Vec3,
    pub achieved_volume: f64,
    /// Envelope volume before rescaling (audit value).
    pub initial_volume: f64,
    /// Applied scale factor `(V_D / V_I)^(1/3)`.
    pub scale_factor: f64,
}

impl FoliageModel {
    /// Crown diameter, taken as the largest envelope vertex separation.
    pub fn diameter(&self) -> f64 {
        self.envelope.max_extent()
    }
}

/// Unit-sphere envelope before rescaling, plus the audit values.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub mesh: TriSoupMesh,
    pub initial_volume: f64,
    pub scale_factor: f64,
}

/// Builds a closed crown envelope of volume `volume_m3`, centered on its solid
/// centroid at the origin.
///
/// Each unique icosphere vertex is displaced by an isotropic Gaussian with
/// standard deviation `perturbation_std`, the perturbed volume `V_I` is
/// measured and the mesh is scaled by `(V_D / V_I)^(1/3)`. Self-intersecting or
/// inverted draws are redrawn up to [`MAX_ENVELOPE_ATTEMPTS`] times.
pub fn make_envelope<R: Rng + ?Sized>(
    volume_m3: f64,
    perturbation_std: f64,
    subdivisions: u32,
    rng: &mut R,
) -> Result<Envelope> {
    if !(volume_m3 > 0.0 && volume_m3.is_finite()) {
        return Err(Error::InvalidArgument("target volume must be positive"));
    }
    if !(perturbation_std >= 0.0 && perturbation_std.is_finite()) {
        return Err(Error::InvalidArgument("perturbation std must be >= 0"));
    }
    let (base, faces) = icosphere::unit_icosphere(subdivisions);
    let normal = Normal::new(0.0, perturbation_std)
        .map_err(|_| Error::InvalidArgument("perturbation std must be >= 0"))?;

    for _ in 0..MAX_ENVELOPE_ATTEMPTS {
        let vertices: Vec<Vec3> = base
            .iter()
            .map(|&v| {
                let dx = normal.sample(rng);
                let dy = normal.sample(rng);
                let dz = normal.sample(rng);
                v + Vec3::new(dx, dy, dz)
            })
            .collect();
        let Ok(mesh) = TriSoupMesh::from_indexed(&vertices, &faces) else {
            continue;
        };
        let initial_volume = mesh.signed_volume();
        if !(initial_volume > 0.0) || self_intersects(&vertices, &faces, &mesh) {
            continue;
        }
        let scale_factor = libm::cbrt(volume_m3 / initial_volume);
        let center = mesh.solid_centroid();
        let scaled = mesh.scaled_about(center, scale_factor).translated(-center);
        return Ok(Envelope {
            mesh: scaled,
            initial_volume,
            scale_factor,
        });
    }
    Err(Error::EnvelopeGeneration {
        attempts: MAX_ENVELOPE_ATTEMPTS,
    })
}

/// True when some edge crosses a face it is not incident to.
fn self_intersects(vertices: &[Vec3], faces: &[[usize; 3]], mesh: &TriSoupMesh) -> bool {
    let Ok(bvh) = Bvh::build(mesh.faces()) else {
        return true;
    };
    let mut edges: Vec<(usize, usize)> = faces
        .iter()
        .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
        .map(|(i, j)| if i < j { (i, j) } else { (j, i) })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    for (i, j) in edges {
        let Ok((ray, len)) = Ray::between(vertices[i], vertices[j]) else {
            return true;
        };
        let mut crossed = false;
        bvh.for_each_hit(&ray, len - 1e-9 * (1.0 + len), |h| {
            if !faces[h.face].contains(&i) && !faces[h.face].contains(&j) {
                crossed = true;
            }
        });
        if crossed {
            return true;
        }
    }
    false
}

/// Equilateral triangle of area `area_m2` in the local xy-plane, centroid at
/// the origin: side `l = sqrt(4A/√3)`.
pub fn scatterer_template(area_m2: f64) -> Result<[Vec3; 3]> {
    if !(area_m2 > 0.0 && area_m2.is_finite()) {
        return Err(Error::InvalidArgument("triangle area must be positive"));
    }
    let sqrt3 = libm::sqrt(3.0);
    let l = libm::sqrt(4.0 * area_m2 / sqrt3);
    Ok([
        Vec3::new(0.0, -l / sqrt3, 0.0),
        Vec3::new(l / 2.0, l / (2.0 * sqrt3), 0.0),
        Vec3::new(-l / 2.0, l / (2.0 * sqrt3), 0.0),
    ])
}

/// Uniform sampler over the volume enclosed by a closed mesh (rejection from
/// the bounding box, membership by BVH ray parity).
#[derive(Debug, Clone)]
pub struct VolumeSampler {
    bvh: Bvh,
    bounds: Aabb,
}

impl VolumeSampler {
    pub fn new(envelope: &TriSoupMesh) -> Result<Self> {
        let bvh = Bvh::build(envelope.faces())?;
        Ok(VolumeSampler {
            bounds: envelope.bounds(),
            bvh,
        })
    }

    pub fn contains(&self, p: Vec3) -> bool {
        point_in_bvh(p, &self.bvh)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec3> {
        let ext = self.bounds.extent();
        for _ in 0..MAX_CONSECUTIVE_REJECTIONS {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            let w: f64 = rng.random();
            let p = self.bounds.min + Vec3::new(u * ext.x, v * ext.y, w * ext.z);
            if self.contains(p) {
                return Ok(p);
            }
        }
        Err(Error::SamplingExhausted {
            rejections: MAX_CONSECUTIVE_REJECTIONS,
        })
    }
}

/// One uniform point inside `envelope`.
pub fn sample_point_in<R: Rng + ?Sized>(envelope: &TriSoupMesh, rng: &mut R) -> Result<Vec3> {
    VolumeSampler::new(envelope)?.sample(rng)
}

/// Generates a complete crown centered at `center`. Pure in `(params, center)`.
pub fn generate_foliage(params: &CrownParams, center: Vec3) -> Result<FoliageModel> {
    params.validate()?;
    if !center.is_finite() {
        return Err(Error::InvalidArgument("crown center is not finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let envelope = make_envelope(
        params.target_volume_m3,
        params.perturbation_std,
        params.envelope_subdivisions,
        &mut rng,
    )?;
    let template = scatterer_template(params.triangle_area_m2)?;
    let sampler = VolumeSampler::new(&envelope.mesh)?;

    let count = params.scatterer_count();
    let mut scatterers = Vec::with_capacity(count);
    for _ in 0..count {
        let rot = random_rotation(&mut rng);
        let c = sampler.sample(&mut rng)?;
        let [p1, p2, p3] = template.map(|p| c + rot.apply(p) + center);
        scatterers.push(Triangle::new_unchecked(p1, p2, p3));
    }

    let achieved_volume = envelope.mesh.volume();
    Ok(FoliageModel {
        envelope: envelope.mesh.translated(center),
        scatterers,
        params: *params,
        crown_center: center,
        achieved_volume,
        initial_volume: envelope.initial_volume,
        scale_factor: envelope.scale_factor,
    })
}
