use thiserror::Error;

/// Errors raised by the geometry kernels, the integrators and the analysis passes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("polyhedron is empty")]
    EmptyPolyhedron,
    #[error("half-spaces have empty intersection")]
    EmptyIntersection,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("min-norm drift over the persisting set differs by {gap:e} at t = {time}")]
    DriftInconsistency { time: f64, gap: f64 },
    #[error("segment guard exceeded ({segments} segments)")]
    ZenoGuard { segments: usize },
    #[error("trajectory horizons differ: {0} vs {1}")]
    HorizonMismatch(f64, f64),
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("point is not a critical point")]
    NotCritical,
    #[error("drift subset spans the whole space")]
    NotLowDimensional,
    #[error("subset enumeration exceeds budget ({needed} > {budget})")]
    ScaleLimit { needed: u64, budget: u64 },
    #[error("duplicate service vectors at positions {0} and {1}")]
    DuplicateVectors(usize, usize),
}

impl Error {
    /// Stable variant name, used in machine-readable reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NonFinite(_) => "NonFinite",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::EmptyPolyhedron => "EmptyPolyhedron",
            Error::EmptyIntersection => "EmptyIntersection",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::DriftInconsistency { .. } => "DriftInconsistency",
            Error::ZenoGuard { .. } => "ZenoGuard",
            Error::HorizonMismatch(..) => "HorizonMismatch",
            Error::BadParams(_) => "BadParams",
            Error::InvalidSystem(_) => "InvalidSystem",
            Error::NotCritical => "NotCritical",
            Error::NotLowDimensional => "NotLowDimensional",
            Error::ScaleLimit { .. } => "ScaleLimit",
            Error::DuplicateVectors(..) => "DuplicateVectors",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
