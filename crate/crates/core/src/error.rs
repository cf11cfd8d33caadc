use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("envelope generation failed after {attempts} attempts (self-intersecting or empty mesh)")]
    EnvelopeGeneration { attempts: u32 },

    #[error("point sampling gave up after {rejections} consecutive rejections")]
    SamplingExhausted { rejections: u64 },

    #[error("path delay {delay_s:e} s lies outside the CIR grid [{start_s:e}, {end_s:e}] s")]
    DelayOutsideGrid {
        delay_s: f64,
        start_s: f64,
        end_s: f64,
    },

    #[error("total power is zero; delay spread is undefined")]
    ZeroPower,

    #[error("CIR grids do not match")]
    GridMismatch,
}
