//! Single-bounce scattering through a foliage model.
//!
//! Every scatterer face contributes at most one path TX → face centroid → RX.
//! The scattered power follows a Lambertian diffuse lobe weighted by the
//! normal-incidence Fresnel reflectance of the leaf material, the scattering
//! coefficient and a single calibration gain; each foliage face crossed by
//! either leg costs a fixed transmission loss.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::foliage::{generate_foliage, CrownParams, FoliageModel};
use crate::geometry::{Bvh, Ray, Vec3};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity ε₀ (F/m).
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Cosines below this value (grazing incidence or scattering) contribute nothing.
pub const MIN_COSINE: f64 = 1e-6;

/// TX and RX closer than this are treated as coincident (m).
pub const MIN_ANTENNA_SEPARATION_M: f64 = 1e-6;

pub const DEFAULT_RADIUS_M: f64 = 15.0;
pub const DEFAULT_BANDWIDTH_HZ: f64 = 2e9;
pub const DEFAULT_OCCLUSION_LOSS_DB: f64 = 2.0;
/// Sideways TX shift so that TX and RX do not coincide at α = 180°.
pub const DEFAULT_TX_LATERAL_OFFSET_M: f64 = 0.5;

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

#[inline]
pub fn wavelength(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz
}

/// Leaf material.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Material {
    /// Fraction of the incident field diverted into diffuse scattering, in [0, 1].
    pub scattering_coefficient: f64,
    pub relative_permittivity: f64,
    /// Conductivity κ (S/m).
    pub conductivity_s_per_m: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material {
            scattering_coefficient: 0.5,
            relative_permittivity: 17.0,
            conductivity_s_per_m: 0.05,
        }
    }
}

impl Material {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.scattering_coefficient) {
            return Err(Error::InvalidArgument("scattering coefficient must lie in [0, 1]"));
        }
        if !(self.relative_permittivity >= 1.0 && self.relative_permittivity.is_finite()) {
            return Err(Error::InvalidArgument("relative permittivity must be >= 1"));
        }
        if !(self.conductivity_s_per_m >= 0.0 && self.conductivity_s_per_m.is_finite()) {
            return Err(Error::InvalidArgument("conductivity must be >= 0"));
        }
        Ok(())
    }
}

/// Angular shape of the diffuse lobe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Lobe {
    /// Diffuse reflection: only receivers on the illuminated side of the face
    /// plane see the face. Either side may be the illuminated one.
    #[default]
    Lambertian,
    /// Same cosine law, but the face also scatters into the far half-space.
    LambertianTransmissive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ScatterModel {
    /// Global gain applied to every scattered path (dB).
    pub calibration_gain_db: f64,
    pub lobe: Lobe,
    /// Power lost per foliage face crossed by a leg (dB, positive = loss).
    pub occlusion_loss_db: f64,
}

impl Default for ScatterModel {
    fn default() -> Self {
        ScatterModel {
            calibration_gain_db: 0.0,
            lobe: Lobe::Lambertian,
            occlusion_loss_db: DEFAULT_OCCLUSION_LOSS_DB,
        }
    }
}

impl ScatterModel {
    /// Transmission power factor `T` per crossed face.
    pub fn transmission_factor(&self) -> f64 {
        db_to_linear(-self.occlusion_loss_db)
    }
}

/// Everything needed to trace one TX/RX configuration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scene {
    pub foliage: FoliageModel,
    pub tx: Vec3,
    pub rx: Vec3,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub material: Material,
    pub scatter: ScatterModel,
    pub suppress_los: bool,
    pub tx_power_dbm: f64,
    /// Gain of each antenna (dBi), applied at both ends.
    pub antenna_gain_dbi: f64,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err(Error::InvalidArgument("carrier frequency must be positive"));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::InvalidArgument("bandwidth must be positive"));
        }
        if !(self.tx.is_finite() && self.rx.is_finite()) {
            return Err(Error::InvalidArgument("antenna position is not finite"));
        }
        if self.tx.distance(self.rx) <= MIN_ANTENNA_SEPARATION_M {
            return Err(Error::InvalidArgument("TX and RX must not coincide"));
        }
        self.material.validate()
    }

    pub fn tx_rx_distance(&self) -> f64 {
        self.tx.distance(self.rx)
    }

    /// Same scene with the antenna roles exchanged.
    pub fn swapped(&self) -> Scene {
        Scene {
            tx: self.rx,
            rx: self.tx,
            ..self.clone()
        }
    }
}

/// Options for [`build_scene`]; defaults reproduce the half-circle layout
/// with isotropic antennas, 0 dBm TX power and the LOS suppressed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SceneOptions {
    pub bandwidth_hz: f64,
    pub material: Material,
    pub scatter: ScatterModel,
    pub suppress_los: bool,
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    /// Distance of TX and of the RX half-circle from the crown center (m).
    pub radius_m: f64,
    /// TX displacement along −y (m).
    pub tx_lateral_offset_m: f64,
}

impl Default for SceneOptions {
    fn default() -> Self {
        SceneOptions {
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
            material: Material::default(),
            scatter: ScatterModel::default(),
            suppress_los: true,
            tx_power_dbm: 0.0,
            antenna_gain_dbi: 0.0,
            radius_m: DEFAULT_RADIUS_M,
            tx_lateral_offset_m: DEFAULT_TX_LATERAL_OFFSET_M,
        }
    }
}

/// RX on the half-circle: α = 0° is opposite the TX (through the crown),
/// α = 180° is on the TX side.
pub fn receiver_position(alpha_deg: f64, radius_m: f64) -> Result<Vec3> {
    if !(0.0..=180.0).contains(&alpha_deg) {
        return Err(Error::InvalidArgument("alpha must lie in [0, 180] degrees"));
    }
    let a = alpha_deg.to_radians();
    Ok(Vec3::new(radius_m * libm::cos(a), radius_m * libm::sin(a), 0.0))
}

pub fn transmitter_position(options: &SceneOptions) -> Vec3 {
    Vec3::new(-options.radius_m, -options.tx_lateral_offset_m, 0.0)
}

/// Places an existing crown (expected at the origin) into the half-circle layout.
pub fn scene_with_foliage(
    foliage: FoliageModel,
    alpha_deg: f64,
    carrier_hz: f64,
    options: &SceneOptions,
) -> Result<Scene> {
    let scene = Scene {
        foliage,
        tx: transmitter_position(options),
        rx: receiver_position(alpha_deg, options.radius_m)?,
        carrier_hz,
        bandwidth_hz: options.bandwidth_hz,
        material: options.material,
        scatter: options.scatter,
        suppress_los: options.suppress_los,
        tx_power_dbm: options.tx_power_dbm,
        antenna_gain_dbi: options.antenna_gain_dbi,
    };
    scene.validate()?;
    Ok(scene)
}

/// Generates the crown at the origin and places TX/RX for angle `alpha_deg`.
pub fn build_scene(
    params: &CrownParams,
    alpha_deg: f64,
    carrier_hz: f64,
    options: &SceneOptions,
) -> Result<Scene> {
    // validate the angle before paying for the crown
    receiver_position(alpha_deg, options.radius_m)?;
    let foliage = generate_foliage(params, Vec3::ZERO)?;
    scene_with_foliage(foliage, alpha_deg, carrier_hz, options)
}

/// Free-space path loss `20·log10(4π d f / c)` in dB.
pub fn fspl_db(distance_m: f64, carrier_hz: f64) -> f64 {
    20.0 * libm::log10(4.0 * PI * distance_m * carrier_hz / SPEED_OF_LIGHT)
}

/// Magnitude of the normal-incidence Fresnel reflection coefficient for the
/// complex permittivity `ε_r − j κ / (2π f ε₀)`.
pub fn fresnel_normal_reflection(relative_permittivity: f64, conductivity: f64, carrier_hz: f64) -> f64 {
    let eps = Complex64::new(
        relative_permittivity,
        -conductivity / (2.0 * PI * carrier_hz * VACUUM_PERMITTIVITY),
    );
    let n = eps.sqrt();
    ((n - 1.0) / (n + 1.0)).norm()
}

/// One multipath component.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathContribution {
    pub delay_s: f64,
    /// Complex amplitude for a unit-amplitude transmitter.
    pub amplitude: Complex64,
    /// Interacting scatterer; `None` for the direct path.
    pub face_index: Option<usize>,
    /// Foliage faces crossed on the TX leg.
    pub occlusions_in: u32,
    /// Foliage faces crossed on the RX leg.
    pub occlusions_out: u32,
}

impl PathContribution {
    pub fn power(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    pub fn occlusions(&self) -> u32 {
        self.occlusions_in + self.occlusions_out
    }
}

/// Tracer with its acceleration structure built once per scene.
pub struct Tracer<'a> {
    scene: &'a Scene,
    bvh: Option<Bvh>,
}

impl<'a> Tracer<'a> {
    pub fn new(scene: &'a Scene) -> Result<Self> {
        scene.validate()?;
        let bvh = if scene.foliage.scatterers.is_empty() {
            None
        } else {
            Some(Bvh::build(&scene.foliage.scatterers)?)
        };
        Ok(Tracer { scene, bvh })
    }

    /// Faces crossed strictly between `from` and `to`, ignoring `skip`.
    fn crossings(&self, from: Vec3, to: Vec3, skip: Option<usize>) -> u32 {
        let Some(bvh) = &self.bvh else {
            return 0;
        };
        let Ok((ray, len)) = Ray::between(from, to) else {
            return 0;
        };
        let mut n = 0;
        bvh.for_each_hit(&ray, len, |h| {
            if Some(h.face) != skip {
                n += 1;
            }
        });
        n
    }

    pub fn trace(&self) -> Vec<PathContribution> {
        let s = self.scene;
        let lambda = wavelength(s.carrier_hz);
        let k0 = 2.0 * PI * s.carrier_hz / SPEED_OF_LIGHT;
        let gains = db_to_linear(2.0 * s.antenna_gain_dbi);
        let t_face = s.scatter.transmission_factor();
        let gamma = fresnel_normal_reflection(
            s.material.relative_permittivity,
            s.material.conductivity_s_per_m,
            s.carrier_hz,
        );
        let mu = s.material.scattering_coefficient;
        let common = gains
            * sq(lambda / (4.0 * PI))
            * (mu * mu)
            * (gamma * gamma)
            * db_to_linear(s.scatter.calibration_gain_db)
            / PI;

        let phasor = |length: f64, power: f64| -> Complex64 {
            Complex64::from_polar(libm::sqrt(power), -k0 * length)
        };

        let mut paths = Vec::new();
        for (index, face) in s.foliage.scatterers.iter().enumerate() {
            let Some(normal) = face.normal() else {
                continue;
            };
            let q = face.centroid();
            let to_tx = s.tx - q;
            let to_rx = s.rx - q;
            let (d1, d2) = (to_tx.norm(), to_rx.norm());
            if !(d1 > 0.0 && d2 > 0.0) {
                continue;
            }
            let side_in = normal.dot(to_tx) / d1;
            let side_out = normal.dot(to_rx) / d2;
            let (cos_i, cos_s) = (side_in.abs(), side_out.abs());
            if cos_i < MIN_COSINE || cos_s < MIN_COSINE {
                continue;
            }
            if s.scatter.lobe == Lobe::Lambertian && (side_in > 0.0) != (side_out > 0.0) {
                continue;
            }
            let k_in = self.crossings(s.tx, q, Some(index));
            let k_out = self.crossings(q, s.rx, Some(index));
            let power = common * face.area() * cos_i * cos_s / (d1 * d1 * d2 * d2)
                * libm::pow(t_face, (k_in + k_out) as f64);
            let length = d1 + d2;
            paths.push(PathContribution {
                delay_s: length / SPEED_OF_LIGHT,
                amplitude: phasor(length, power),
                face_index: Some(index),
                occlusions_in: k_in,
                occlusions_out: k_out,
            });
        }

        if !s.suppress_los {
            let d = s.tx_rx_distance();
            let k = self.crossings(s.tx, s.rx, None);
            let power = gains * sq(lambda / (4.0 * PI * d)) * libm::pow(t_face, k as f64);
            paths.push(PathContribution {
                delay_s: d / SPEED_OF_LIGHT,
                amplitude: phasor(d, power),
                face_index: None,
                occlusions_in: k,
                occlusions_out: 0,
            });
        }
        paths
    }
}

/// Traces all single-bounce paths (plus the direct path unless suppressed).
pub fn trace_paths(scene: &Scene) -> Result<Vec<PathContribution>> {
    Ok(Tracer::new(scene)?.trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Triangle;

    fn empty_foliage() -> FoliageModel {
        FoliageModel {
            envelope: Default::default(),
            scatterers: Vec::new(),
            params: CrownParams::default(),
            crown_center: Vec3::ZERO,
            achieved_volume: 0.0,
            initial_volume: 0.0,
            scale_factor: 1.0,
        }
    }

    fn opts() -> SceneOptions {
        SceneOptions {
            tx_lateral_offset_m: 0.0,
            ..SceneOptions::default()
        }
    }

    #[test]
    fn receiver_positions() {
        let rx = receiver_position(0.0, 15.0).unwrap();
        assert!(rx.distance(Vec3::new(15.0, 0.0, 0.0)) < 1e-12);
        let rx = receiver_position(180.0, 15.0).unwrap();
        assert!(rx.distance(Vec3::new(-15.0, 0.0, 0.0)) < 1e-12);
        let rx = receiver_position(90.0, 15.0).unwrap();
        assert!(rx.distance(Vec3::new(0.0, 15.0, 0.0)) < 1e-12);
        let tx = transmitter_position(&opts());
        assert!((rx.distance(tx) - 15.0 * libm::sqrt(2.0)).abs() < 1e-12);
        assert!(receiver_position(-1.0, 15.0).is_err());
        assert!(receiver_position(180.5, 15.0).is_err());
    }

    #[test]
    fn tx_rx_distance_at_zero() {
        let s = scene_with_foliage(empty_foliage(), 0.0, 60e9, &opts()).unwrap();
        assert!((s.tx_rx_distance() - 30.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_antennas_are_rejected() {
        // without the sideways TX shift, α = 180° puts RX on top of TX
        assert!(scene_with_foliage(empty_foliage(), 180.0, 60e9, &opts()).is_err());
        assert!(scene_with_foliage(empty_foliage(), 180.0, 60e9, &SceneOptions::default()).is_ok());
    }

    #[test]
    fn fspl_anchors() {
        assert!((fspl_db(30.0, 60e9) - 97.553_233_323_949_5).abs() < 1e-9);
        assert!((fspl_db(30.0, 80e9) - 100.052_008_056_115_5).abs() < 1e-9);
        let f = 60e9;
        assert!(fspl_db(SPEED_OF_LIGHT / (4.0 * PI * f), f).abs() < 1e-12);
    }

    #[test]
    fn fresnel_limits() {
        assert!(fresnel_normal_reflection(1.0, 0.0, 60e9) < 1e-15);
        assert!(fresnel_normal_reflection(1e12, 0.0, 60e9) > 0.999_99);
        let g = fresnel_normal_reflection(17.0, 0.05, 60e9);
        assert!(g > 0.60 && g < 0.62, "{g}");
        // lossless value (√17 − 1)/(√17 + 1)
        let lossless = (libm::sqrt(17.0) - 1.0) / (libm::sqrt(17.0) + 1.0);
        assert!((g - lossless).abs() < 1e-4);
    }

    #[test]
    fn los_only_scene_is_friis() {
        let o = SceneOptions {
            suppress_los: false,
            ..opts()
        };
        let s = scene_with_foliage(empty_foliage(), 0.0, 60e9, &o).unwrap();
        let paths = trace_paths(&s).unwrap();
        assert_eq!(paths.len(), 1);
        let pl = linear_to_db(paths[0].power());
        assert!((pl + fspl_db(30.0, 60e9)).abs() < 1e-9);
        assert!((paths[0].delay_s - 30.0 / SPEED_OF_LIGHT).abs() < 1e-20);
    }

    #[test]
    fn empty_suppressed_scene_has_no_paths() {
        let s = scene_with_foliage(empty_foliage(), 0.0, 60e9, &opts()).unwrap();
        assert!(trace_paths(&s).unwrap().is_empty());
    }

    /// Square-ish face of area `area` centered at `c` with the given unit normal.
    fn face(c: Vec3, normal: Vec3, area: f64) -> Triangle {
        let helper = if normal.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
        let e1 = normal.cross(helper).try_normalize().unwrap();
        let e2 = normal.cross(e1);
        let [p1, p2, p3] = crate::foliage::scatterer_template(area).unwrap();
        let place = |p: Vec3| c + e1 * p.x + e2 * p.y + normal * p.z;
        Triangle::new_unchecked(place(p1), place(p2), place(p3))
    }

    #[test]
    fn single_face_matches_closed_form() {
        // TX (-15,0,0), RX at α = 90° (0,15,0); face at origin with normal along the
        // bisector of the two directions, (-1,1,0)/√2.
        let n = Vec3::new(-1.0, 1.0, 0.0) / libm::sqrt(2.0);
        let mut foliage = empty_foliage();
        foliage.scatterers.push(face(Vec3::ZERO, n, 2.0));
        let s = scene_with_foliage(foliage, 90.0, 60e9, &opts()).unwrap();
        let paths = trace_paths(&s).unwrap();
        assert_eq!(paths.len(), 1);
        let p = paths[0];
        assert!((p.delay_s - 30.0 / SPEED_OF_LIGHT).abs() < 1e-18);
        assert!((p.delay_s * 1e9 - 100.069_228_559_445_6).abs() < 1e-9);
        // hand evaluation: cos θi = cos θs = 1/√2, d1 = d2 = 15
        let lambda = SPEED_OF_LIGHT / 60e9;
        let gamma = fresnel_normal_reflection(17.0, 0.05, 60e9);
        let expected = (lambda / (4.0 * PI)).powi(2) * 0.25 * gamma * gamma * 2.0 * 0.5
            / (PI * 15f64.powi(4));
        assert!((p.power() - expected).abs() / expected < 1e-12);
        assert_eq!((p.occlusions_in, p.occlusions_out), (0, 0));
    }

    #[test]
    fn lambertian_lobe_blocks_far_side() {
        // face normal along x: TX and RX at α = 0° lie on opposite sides
        let mut foliage = empty_foliage();
        foliage.scatterers.push(face(Vec3::new(0.0, 3.0, 0.0), Vec3::new(1.0, 0.2, 0.0).try_normalize().unwrap(), 2.0));
        let s = scene_with_foliage(foliage, 0.0, 60e9, &opts()).unwrap();
        assert!(trace_paths(&s).unwrap().is_empty());
        let mut t = s.clone();
        t.scatter.lobe = Lobe::LambertianTransmissive;
        assert_eq!(trace_paths(&t).unwrap().len(), 1);
    }

    #[test]
    fn occluder_on_leg_costs_one_transmission_factor() {
        let n = Vec3::new(-1.0, 1.0, 0.0) / libm::sqrt(2.0);
        let mut foliage = empty_foliage();
        foliage.scatterers.push(face(Vec3::ZERO, n, 2.0));
        let s = scene_with_foliage(foliage.clone(), 90.0, 60e9, &opts()).unwrap();
        let clear = trace_paths(&s).unwrap()[0].power();

        // blocker across the TX leg at x = -7, facing the TX
        foliage.scatterers.push(face(Vec3::new(-7.0, 0.0, 0.0), Vec3::X, 2.0));
        let s = scene_with_foliage(foliage, 90.0, 60e9, &opts()).unwrap();
        let paths = trace_paths(&s).unwrap();
        let p = paths.iter().find(|p| p.face_index == Some(0)).unwrap();
        assert_eq!((p.occlusions_in, p.occlusions_out), (1, 0));
        let ratio = p.power() / clear;
        assert!((ratio - s.scatter.transmission_factor()).abs() < 1e-12);
    }
}
