use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coprime axis: {0}")]
    InvalidAxis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("coincident points, direction undefined")]
    CoincidentPoints,

    #[error("could not place {targets} targets with distinct DOAs after {retries} draws")]
    Overcrowded { targets: usize, retries: usize },

    #[error("index {index} out of bounds for mode of size {size}")]
    OutOfBounds { index: usize, size: usize },

    #[error("stacked unfolding has numerical rank {found} < requested rank {rank}")]
    RankTooLow { rank: usize, found: usize },

    #[error("shift block is rank deficient (condition {cond:.3e})")]
    RankDeficient { cond: f64 },

    #[error("zero matrix has no dominant singular pair")]
    ZeroMatrix,

    #[error("only {usable} usable target matrices, at least 2 required")]
    Unidentifiable { usable: usize },

    #[error("generalized eigenproblem failed: {0}")]
    Gevd(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("target {target} has a zero response on array {array}")]
    UnobservedTarget { array: usize, target: usize },

    #[error("bearing lines are parallel, target not localizable")]
    ParallelLines,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
