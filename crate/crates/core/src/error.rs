use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A direction too short to normalize.
    #[error("degenerate direction (norm {norm:e})")]
    DegenerateDirection { norm: f64 },

    /// The fitted parabola opens upward, so it has no peak.
    #[error("parabola has no peak (kappa = {kappa})")]
    NotAPeak { kappa: f64 },

    #[error("degenerate series{}: zero sample variance", coordinate.map(|c| format!(" at coordinate {c}")).unwrap_or_default())]
    DegenerateSeries { coordinate: Option<usize> },

    /// A single update drew more crumbs than the configured cap. Carries the
    /// state the update started from.
    #[error("crumb limit of {limit} exceeded (slice level {slice_level})")]
    CrumbLimit {
        limit: usize,
        x0: Vec<f64>,
        slice_level: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
