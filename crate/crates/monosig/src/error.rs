use thiserror::Error;

/// Crate-wide error type. Variants are grouped by what the caller did wrong:
/// malformed data (dimensions, negativity, grids), domain violations on
/// otherwise well-formed data, and resource caps that guard against
/// accidentally materializing `d^n` arrays that cannot fit in memory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("negative increment {value} at segment {segment}, component {component}")]
    NegativeIncrement {
        segment: usize,
        component: usize,
        value: f64,
    },

    #[error("non-finite value {value} at segment {segment}, component {component}")]
    NonFiniteIncrement {
        segment: usize,
        component: usize,
        value: f64,
    },

    #[error("degenerate path: total variation is zero")]
    DegeneratePath,

    #[error("invalid mesh {mesh}: must be in (0, 1] and divide 1")]
    InvalidMesh { mesh: f64 },

    #[error("not monotone on mesh: component {component} decreases by {drop} over step {step}")]
    NotMonotoneOnMesh {
        step: usize,
        component: usize,
        drop: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid word: letter {letter} out of range for dimension {dim}")]
    InvalidLetter { letter: usize, dim: usize },

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("signature depths differ: {left} vs {right}")]
    DepthMismatch { left: usize, right: usize },

    #[error("depth {depth} exceeds cap {cap}; raise the cap explicitly if this is intended")]
    DepthCapExceeded { depth: usize, cap: usize },

    #[error("level {depth} over dimension {dim} needs {entries} coefficients, above the {cap} limit")]
    LevelTooLarge {
        dim: usize,
        depth: usize,
        entries: u128,
        cap: usize,
    },

    #[error("quadrature oracle supports words up to length {cap}, got {len}")]
    OracleWordTooLong { len: usize, cap: usize },

    #[error("signature depth {have} too small: need at least {need}")]
    DepthTooSmall { need: usize, have: usize },

    #[error("signature not normalized: level sum off by relative {defect:e} (limit {limit:e})")]
    NotNormalized { defect: f64, limit: f64 },

    #[error("partition {partition:?} sums to {sum}, expected {expected}")]
    PartitionMismatch {
        partition: Vec<usize>,
        sum: usize,
        expected: usize,
    },

    #[error("enumeration over {count} words exceeds cap {cap}")]
    EnumerationCapExceeded { count: u128, cap: u128 },

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that mean "the request is too big", as opposed to
    /// "the request is malformed". Callers use this to pick exit codes.
    pub fn is_capacity(&self) -> bool {
        matches!(
            self,
            Error::DepthCapExceeded { .. }
                | Error::LevelTooLarge { .. }
                | Error::OracleWordTooLong { .. }
                | Error::DepthTooSmall { .. }
                | Error::EnumerationCapExceeded { .. }
        )
    }
}
