use thiserror::Error;

/// Errors raised by the simulator and analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("internal basis mismatch: {left} vs {right} temporal modes")]
    BasisMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("linear map is not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },

    #[error("path index {path} out of range for {n_paths} paths")]
    PathOutOfRange { path: usize, n_paths: usize },

    #[error("duplicate detector mode {0}")]
    DuplicateDetector(String),

    #[error("empty detector list")]
    EmptyDetectors,

    #[error("unknown detector label '{0}'")]
    UnknownDetector(char),

    #[error("state spans {0} temporal modes; a single mode is required")]
    MultiModeInput(usize),

    #[error("invalid photon number {0}")]
    InvalidPhotonCount(usize),

    #[error("packets have unequal widths ({0} fs vs {1} fs)")]
    UnequalWidths(f64, f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown circuit preset '{0}'")]
    UnknownPreset(String),

    #[error("unknown scenario kind '{0}'")]
    UnknownScenario(String),

    #[error("order {order} exceeds the {pairs} pairs available")]
    OrderExceedsPairs { order: usize, pairs: usize },

    #[error("delay grids differ between '{0}' and '{1}'")]
    GridMismatch(String, String),

    #[error("missing coincidence pattern '{0}'")]
    MissingPattern(String),

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
