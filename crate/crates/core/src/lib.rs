//! Stochastic tree-crown models and deterministic single-bounce channel
//! simulation for millimeter-wave links through foliage.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the experiment
//! runner and the command line live in the `foliage` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
mod error;
pub mod foliage;
pub mod geometry;
pub mod metrics;
pub mod seed;

pub use channel::{
    build_scene, fresnel_normal_reflection, fspl_db, scene_with_foliage, trace_paths, Lobe,
    Material, PathContribution, ScatterModel, Scene, SceneOptions, Tracer, SPEED_OF_LIGHT,
};
pub use error::{Error, Result};
pub use foliage::{generate_foliage, make_envelope, scatterer_template, CrownParams, FoliageModel};
pub use geometry::{TriSoupMesh, Triangle, Vec3};
pub use metrics::{
    assemble_cir, assemble_cir_on, channel_stats, empirical_cdf, path_loss_db,
    pdp_from_realizations, rms_delay_spread, ChannelStats, Cir, DelayGrid, EmpiricalCdf, Pdp,
};
pub use num_complex::Complex64;
