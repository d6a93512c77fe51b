use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("real vector of odd length {0} has no complex counterpart")]
    OddLength(usize),

    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("beta_p = 0 regime: noise basis is row-rank deficient ({0})")]
    BetaZero(String),

    #[error("noise basis needs at least as many columns as rows (got {cols} columns for {rows} rows)")]
    NoiseBasisTooNarrow { rows: usize, cols: usize },

    #[error("column {0} is identically zero")]
    ZeroColumn(usize),

    #[error("singular matrix")]
    Singular,

    #[error("infeasible ratio ordering: {0}")]
    InfeasibleOrdering(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("iteration limit of {0} reached")]
    MaxIterations(usize),

    #[error("enumeration of {0} subsets exceeds the brute-force limit")]
    CombinatorialLimit(u128),

    #[error("non-integer power of a negative real node is ambiguous (node {0})")]
    BranchAmbiguity(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
