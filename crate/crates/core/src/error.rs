use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("depth class index {index} outside [1, {k}]")]
    ClassOutOfRange { index: i64, k: u32 },
    #[error("depth must be positive, got {0}")]
    NonPositiveDepth(f64),
    #[error("invalid depth bins: {0}")]
    InvalidBins(&'static str),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
    #[error("invalid object dimensions: {0}")]
    InvalidDims(&'static str),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),
    #[error("configuration error: depth map has K={map_k} but bins have K={bins_k}")]
    KMismatch { map_k: u32, bins_k: u32 },
    #[error("duplicate detection id {0}")]
    DuplicateId(u32),
    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("non-differentiable point: element {index} sits on an L1 kink")]
    NonDifferentiable { index: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
