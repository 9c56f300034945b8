use thiserror::Error;

/// Errors raised by the permutation and valuation primitives.
///
/// Vertices carried by the variants are 0-based; `Display` prints them 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("matrix must have at least 2 vertices, got {0}")]
    TooSmall(usize),
    #[error("matrix has {got} entries, expected {expected}")]
    BadShape { expected: usize, got: usize },
    #[error("diagonal entry ({}, {}) must be inf", .0 + 1, .0 + 1)]
    DiagonalNotInf(usize),
    #[error("off-diagonal entry ({}, {}) must be finite", .0 + 1, .1 + 1)]
    InfiniteOffDiagonal(usize, usize),
    #[error("entry ({}, {}) = {} exceeds the supported magnitude", .0 + 1, .1 + 1, .2)]
    EntryTooLarge(usize, usize, i64),
    #[error("sequence of length {got} does not match vertex count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("vertex {} is out of range", .0.wrapping_add(1))]
    VertexOutOfRange(usize),
    #[error("image is not a bijection (vertex {} repeated)", .0 + 1)]
    NotBijection(usize),
    #[error("vertex {} is a fixed point", .0 + 1)]
    NotDerangement(usize),
    #[error("cycle must have at least 2 vertices")]
    CycleTooShort,
    #[error("vertex {} repeated within a cycle", .0 + 1)]
    RepeatedVertex(usize),
    #[error("cycles share vertex {}", .0 + 1)]
    CyclesOverlap(usize),
    #[error("cycle maps vertex {} onto its own image (loop arc)", .0 + 1)]
    LoopArc(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: diagonal entry of row {row} must be inf")]
    DiagonalNotInf { line: usize, row: usize },
    #[error("{0}")]
    NonSquare(String),
    #[error(transparent)]
    Matrix(#[from] CoreError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no finite-cost derangement exists")]
    Infeasible,
    #[error("instance with {n} vertices exceeds the oracle limit of {limit}")]
    TooLarge { n: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Phase2Error {
    #[error("predecessor expansion for ({}, {}) did not terminate", .0 + 1, .1 + 1)]
    CorruptTable(usize, usize),
    #[error("no recorded path from {} to {}", .0 + 1, .1 + 1)]
    NoEntry(usize, usize),
    #[error("negative-path search still changing after {0} passes")]
    PassLimit(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Phase3Error {
    #[error("no tour found within the budget cap {cap}")]
    NoTourFound { cap: i64 },
}
