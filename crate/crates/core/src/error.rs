use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signal set with {requested} vectors exceeds the enumeration budget of {cap}")]
    BudgetExceeded { requested: u128, cap: u128 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("noise variance must be positive and finite, got {0}")]
    InvalidNoise(f64),
    #[error("cannot project a zero matrix onto the power sphere")]
    ZeroMatrix,
    #[error("{n_t} antennas cannot be split evenly over {n_rf} RF chains")]
    NotDivisible { n_t: usize, n_rf: usize },
    #[error("exhaustive search over {count} partitions exceeds the limit of {limit}")]
    TooLarge { count: String, limit: u64 },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("singular value decomposition failed to converge")]
    SvdFailure,
    #[error("line search stalled after {halvings} halvings")]
    SearchStalled { halvings: u32 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("fixture missing: {0}")]
    FixtureMissing(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
