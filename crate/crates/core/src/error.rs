use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported generator basis: {0}")]
    UnsupportedGenerators(String),
    #[error("zero frequency where a nonzero one is required")]
    ZeroFrequency,
    #[error("congruence closure exceeded the cap of {cap} points")]
    CapExceeded { cap: usize },
    #[error("component has {defining} defining planes, expected {expected}")]
    NonSimplexComponent { defining: usize, expected: usize },
    #[error("Condition A fails on tuple {witness}")]
    ConditionAViolation { witness: String },
    #[error("symbol is not a multiplication operator: {0}")]
    NonMultiplicationInput(String),
    #[error("potential has frequencies off the integer lattice: {0}")]
    NonLatticeFrequencies(String),
    #[error("lambda = {lambda} exceeds the reliability ceiling {ceiling} for this truncation")]
    TruncationCeiling { lambda: f64, ceiling: f64 },
    #[error("off-diagonal kernel requested at coinciding points")]
    CoincidingPoints,
    #[error("contour passes within {margin:e} of the spectrum (required {required:e})")]
    ContourTooClose { margin: f64, required: f64 },
    #[error("resolvent series diverges: |S| = {s_norm} >= |z^2 - mu| = {gap}")]
    DivergentSeries { s_norm: f64, gap: f64 },
    #[error("frequency set does not span R^{0}")]
    NotSpanning(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("potential is not real: {0}")]
    NonHermitianPotential(String),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
