use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("operands belong to different algebras")]
    AlgebraMismatch,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("operator is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("operator is not normal (defect {defect:.3e})")]
    NotNormal { defect: f64 },
    #[error("operators do not commute (defect {defect:.3e})")]
    NotCommuting { defect: f64 },
    #[error("operator is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("conjugation leaves the algebra (off-block mass {mass:.3e})")]
    BlockViolation { mass: f64 },
    #[error("matrix is not substochastic: {0}")]
    NotSubstochastic(String),
    #[error("map increases the trace (defect {defect:.3e})")]
    TraceIncreasing { defect: f64 },
    #[error("empty Kraus family")]
    EmptyKraus,
    #[error("all Kraus terms vanish; cannot renormalize")]
    ZeroKraus,
    #[error("kernel fails verification: {0}")]
    NotAKernel(String),
    #[error("kernels do not commute (defect {defect:.3e})")]
    NonCommutingKernels { defect: f64 },
    #[error("generator actions do not commute (defect {defect:.3e})")]
    NonCommutingActions { defect: f64 },
    #[error("map is not unital (defect {defect:.3e})")]
    NotUnital { defect: f64 },
    #[error("map is not trace preserving (defect {defect:.3e})")]
    NotTracePreserving { defect: f64 },
    #[error("spectral and iterative mean projections disagree ({measured:.3e} > {bound:.3e})")]
    ValidationFailed { measured: f64, bound: f64 },
    #[error("no samples supplied")]
    EmptyGrid,
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("word count {count} exceeds the enumeration guard")]
    CombinatorialExplosion { count: u128 },
    #[error("spectrum outside the convergence region: {offending:?}")]
    SpectrumOutsideRegion { offending: Vec<Complex64> },
    #[error("projection search exhausted the trace budget ({trace_complement:.4} > {budget:.4})")]
    SearchFailed { trace_complement: f64, budget: f64 },
    #[error("dimension cap exceeded: {0}")]
    DimensionCap(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable variant name, used in CLI summaries.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidAlgebra(_) => "InvalidAlgebra",
            Error::AlgebraMismatch => "AlgebraMismatch",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::Singular => "Singular",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotNormal { .. } => "NotNormal",
            Error::NotCommuting { .. } => "NotCommuting",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::BlockViolation { .. } => "BlockViolation",
            Error::NotSubstochastic(_) => "NotSubstochastic",
            Error::TraceIncreasing { .. } => "TraceIncreasing",
            Error::EmptyKraus => "EmptyKraus",
            Error::ZeroKraus => "ZeroKraus",
            Error::NotAKernel(_) => "NotAKernel",
            Error::NonCommutingKernels { .. } => "NonCommutingKernels",
            Error::NonCommutingActions { .. } => "NonCommutingActions",
            Error::NotUnital { .. } => "NotUnital",
            Error::NotTracePreserving { .. } => "NotTracePreserving",
            Error::ValidationFailed { .. } => "ValidationFailed",
            Error::EmptyGrid => "EmptyGrid",
            Error::BadParameter(_) => "BadParameter",
            Error::CombinatorialExplosion { .. } => "CombinatorialExplosion",
            Error::SpectrumOutsideRegion { .. } => "SpectrumOutsideRegion",
            Error::SearchFailed { .. } => "SearchFailed",
            Error::DimensionCap(_) => "DimensionCap",
            Error::Json(_) => "Json",
        }
    }
}
