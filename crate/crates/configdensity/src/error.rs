use thiserror::Error;

/// Library error type. Each variant carries a stable machine-readable code
/// (see [`Error::code`]) used by the CLI and the file-format consumers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("support_clipped: generator support exceeds the grid (pass allow_clip to truncate)")]
    SupportClipped,
    #[error("invalid_scale: scale factor must be finite and positive, got {0}")]
    InvalidScale(f64),
    #[error("invalid_lambda: smoothing parameter must be finite and nonnegative, got {0}")]
    InvalidLambda(f64),
    #[error("invalid_delta: density level must lie in (0, 1], got {0}")]
    InvalidDelta(f64),
    #[error("invalid_parameter: {0}")]
    InvalidParameter(String),
    #[error("too_few_nodes: circle quadrature needs at least 4 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("circle_measure_requires_2d: field dimension is {0}")]
    CircleMeasureRequires2d(usize),
    #[error("requires_compact_support: spectral evaluation needs a zero_outside field")]
    RequiresCompactSupport,
    #[error("requires_d_ge_2: colinear triples need dimension 2 or 3, got {0}")]
    RequiresDGe2(usize),
    #[error("support_mismatch: field has mass outside the declared support region")]
    SupportMismatch,
    #[error("window_too_large: window side {side} exceeds field extent {extent}")]
    WindowTooLarge { side: f64, extent: f64 },
    #[error("n_below_threshold: sandwich scale n={n} is below ceil(1/r)={min}")]
    NBelowThreshold { n: usize, min: usize },
    #[error("extent_not_multiple: grid extent {extent} is not an integer multiple of cell size {cell}")]
    ExtentNotMultiple { extent: f64, cell: f64 },
    #[error("empty_sweep: onset search over an empty row set")]
    EmptySweep,
    #[error("bad_field_file: {0}")]
    BadFieldFile(String),
    #[error("invariant_violation: {0}")]
    InvariantViolation(String),
    #[error("bad_config: field `{field}`: {message}")]
    BadConfig { field: String, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable short code for the error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SupportClipped => "support_clipped",
            Error::InvalidScale(_) => "invalid_scale",
            Error::InvalidLambda(_) => "invalid_lambda",
            Error::InvalidDelta(_) => "invalid_delta",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::TooFewNodes(_) => "too_few_nodes",
            Error::CircleMeasureRequires2d(_) => "circle_measure_requires_2d",
            Error::RequiresCompactSupport => "requires_compact_support",
            Error::RequiresDGe2(_) => "requires_d_ge_2",
            Error::SupportMismatch => "support_mismatch",
            Error::WindowTooLarge { .. } => "window_too_large",
            Error::NBelowThreshold { .. } => "n_below_threshold",
            Error::ExtentNotMultiple { .. } => "extent_not_multiple",
            Error::EmptySweep => "empty_sweep",
            Error::BadFieldFile(_) => "bad_field_file",
            Error::InvariantViolation(_) => "invariant_violation",
            Error::BadConfig { .. } => "bad_config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
