use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("zero mode (0,0) is not a valid frequency")]
    ZeroMode,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("quadrature grid {grid} under-resolves band {band} (need > {need})")]
    UnderResolved {
        grid: usize,
        band: usize,
        need: usize,
    },
    #[error("near collision: vortices {i} and {j} at distance {distance:e} after {retries} halvings at t = {t}")]
    NearCollision {
        i: usize,
        j: usize,
        distance: f64,
        retries: u32,
        t: f64,
    },
    #[error("non-finite coefficient at t = {t} (mode {k1},{k2}); time step too large for m")]
    NonFinite { t: f64, k1: i32, k2: i32 },
    #[error("fixed-point map is not a contraction: measured factor {factor}")]
    NotContraction { factor: f64 },
    #[error("dense representation too large: {rows} x {cols}")]
    TooLarge { rows: usize, cols: usize },
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
