use thiserror::Error;

use crate::trajectory::WorldLine;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time tags differ: {left} vs {right}")]
    TimeMismatch { left: f64, right: f64 },

    #[error("non-finite amplitude at index {0}")]
    NonFinite(usize),

    #[error("field has zero norm")]
    ZeroNorm,

    #[error("degenerate overlap: |a| = {magnitude:e} is not above {threshold:e}")]
    DegenerateOverlap { magnitude: f64, threshold: f64 },

    #[error("degenerate reduction: normalization {norm:e} is not above {threshold:e}")]
    DegenerateReduction { norm: f64, threshold: f64 },

    #[error("packet too narrow: width {width} must exceed twice the spacing {spacing}")]
    PacketTooNarrow { width: f64, spacing: f64 },

    #[error("packet too wide: [{lo}, {hi}] (6 widths either side) is not inside the grid [{grid_lo}, {grid_hi}]")]
    PacketTooWide {
        lo: f64,
        hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },

    #[error("invalid time window: {0}")]
    InvalidWindow(String),

    #[error("evolution record has {snapshots} snapshots, at least 3 are required")]
    WindowTooShort { snapshots: usize },

    #[error("turning point encountered at t = {t}, x = {x}")]
    TurningPointEncountered {
        t: f64,
        x: f64,
        partial: Box<WorldLine>,
    },

    #[error("stagnation point at t = {t}, x = {x}: density and current both vanish")]
    StagnationPoint { t: f64, x: f64 },

    #[error("trajectory left the spatial grid at t = {t}, x = {x}")]
    LeftGrid { t: f64, x: f64 },

    #[error("point t = {t} lies outside the time window [{start}, {end}]")]
    LeftTimeWindow { t: f64, start: f64, end: f64 },

    #[error("rest density vanishes at t = {t}, x = {x}")]
    RestDensityVanishes { t: f64, x: f64 },

    #[error("step size underflow at t = {t}, x = {x}")]
    StepUnderflow { t: f64, x: f64 },

    #[error("unreliable estimate: effective sample size {ess:.3} below {minimum}")]
    UnreliableEstimate { ess: f64, minimum: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure came from bad input rather than from the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Json(_)
                | Error::InvalidGrid(_)
                | Error::InvalidWindow(_)
                | Error::PacketTooNarrow { .. }
                | Error::PacketTooWide { .. }
                | Error::GridMismatch(_)
        )
    }
}
