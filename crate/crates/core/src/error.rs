//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("argument `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("argument `{name}` = {value} outside supported domain ({domain})")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error(
        "mode window would reach nonpositive index {lowest} \
         (carrier index {carrier_index}, half window {half_window})"
    )]
    WindowBelowFloor {
        lowest: i64,
        carrier_index: usize,
        half_window: usize,
    },

    #[error("window [{lo}, {hi}] too narrow for guard band {guard}")]
    WindowTooNarrow { lo: usize, hi: usize, guard: usize },

    #[error("occupied mode {mode} violates the guard band: interior is [{lo}, {hi}]")]
    GuardBand { mode: usize, lo: usize, hi: usize },

    #[error("mode {mode} outside the matrix window [{lo}, {hi}]")]
    ModeOutsideWindow { mode: usize, lo: usize, hi: usize },

    #[error("state carries {total} photons, exceeding the supported cap of {cap}")]
    PhotonCap { total: u32, cap: u32 },

    #[error("splitter coefficients violate unitarity by {defect:.3e}")]
    InvalidSplitter { defect: f64 },

    #[error("coherent amplitudes supported outside the guarded window interior")]
    SupportOutsideWindow,

    #[error("matrix dimensions do not match: {detail}")]
    DimensionMismatch { detail: String },

    #[error("time grids do not match: {detail}")]
    GridMismatch { detail: String },

    #[error("grid rule violated: {detail}")]
    GridRule { detail: String },

    #[error("drive signal is not dc balanced: mean = {mean:.3e}")]
    DcOffset { mean: f64 },

    #[error("wavepacket norm squared {norm_sq} differs from 1 beyond {tol}")]
    NotNormalized { norm_sq: f64, tol: f64 },

    #[error("time {t} does not lie on the sample grid")]
    OffGridTime { t: f64 },

    #[error("correlation undefined: zero amplitude at a requested sample")]
    UndefinedCorrelation,

    #[error("send rates must be nonnegative and sum to 1, got sum {sum}")]
    InvalidRates { sum: f64 },

    #[error("session needs at least one trial")]
    ZeroTrials,

    #[error("invalid density matrix: {detail}")]
    InvalidDensity { detail: String },

    #[error("output density does not commute with the port photon number: defect {defect:.3e}")]
    NumberBlockViolation { defect: f64 },

    #[error("photon-number block k={k} beyond the input photon number carries weight {weight:.3e}")]
    BlockBeyondInput { k: u32, weight: f64 },

    #[error("serialization failed: {0}")]
    Serde(String),
}
