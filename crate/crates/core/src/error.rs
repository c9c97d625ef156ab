use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rank {rank} exceeds the configured cap {cap}")]
    RankOverflow { rank: usize, cap: usize },
    #[error("invalid index pair ({0}, {1})")]
    InvalidIndexPair(usize, usize),
    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("invalid quantum numbers: {0}")]
    QuantumNumbers(String),
    #[error("cannot parse {0:?} as an integer or half-integer")]
    ParseHalfInt(String),
    #[error("parity violation: {0}")]
    Parity(String),
    #[error("triangle condition violated for ({0}, {1}, {2})")]
    Triangle(String, String, String),
    #[error("input is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("input is not partially irreducible (max violation {0:.3e})")]
    NotPartiallyIrreducible(f64),
    #[error("operator block is not a tensor operator (commutator residual {0:.3e})")]
    NotTensorOperator(f64),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("method {method} does not apply to {what}")]
    NotApplicable { method: &'static str, what: String },
    #[error("dense spin matrix requested for rank {rank} above the cap {cap}")]
    DenseCap { rank: usize, cap: usize },
    #[error("missing reduced matrix element for channel s = {0}")]
    MissingReducedMe(usize),
    #[error("point {radius:.6} lies inside the source radius {source_radius:.6}")]
    InsideSourceRadius { radius: f64, source_radius: f64 },
    #[error("invalid source: {0}")]
    Source(String),
}

pub type Result<T> = std::result::Result<T, Error>;
