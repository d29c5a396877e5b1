use thiserror::Error;

/// Errors raised by the laboratory's operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degeneracy m must be a positive integer, got {0}")]
    InvalidDegeneracy(u32),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid function has {found} values, grid has {expected} nodes")]
    GridMismatch { expected: usize, found: usize },

    #[error("near-resonant solve at lambda={lambda}, tau={tau_re}{tau_im:+}i (relative pivot {pivot:.3e})")]
    NearResonance { lambda: f64, tau_re: f64, tau_im: f64, pivot: f64 },

    #[error("ratio undefined: {0} vanishes")]
    UndefinedRatio(&'static str),

    #[error("{variant} functional evaluated outside its region at nodes {nodes:?}")]
    OutsideRegion { variant: &'static str, nodes: Vec<usize> },

    #[error("parameters outside the lemma's regime: {0}")]
    RegimeViolation(String),

    #[error("CFL number {0} outside (0, 0.9]")]
    Cfl(f64),

    #[error("boundary is causally reachable: need half-width >= {required}, have {half_width}")]
    CausalBoundary { required: f64, half_width: f64 },

    #[error("quasimode support resolved by {nodes} nodes, need at least {required}")]
    UnderResolved { nodes: usize, required: usize },

    #[error("empty time series")]
    EmptySeries,

    #[error("multiplier preset: {0}")]
    InvalidPreset(String),

    #[error("grid function is not compactly supported inside the grid")]
    SupportViolation,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("exponent fit: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
