use thiserror::Error;

/// Errors raised while building, parsing or evaluating designs.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("run size {0} is not a power of two between 4 and 2^16")]
    BadRunSize(usize),
    #[error("label {label} is out of range for r = {r} (must be in 1..{limit})", limit = 1u64 << r)]
    LabelOutOfRange { label: u32, r: u32 },
    #[error("label {0} appears more than once")]
    DuplicateLabel(u32),
    #[error("labels have rank {rank}, expected r = {r}")]
    RankDeficient { rank: usize, r: u32 },
    #[error("design has {n} factors, at least {min} required")]
    TooFewFactors { n: usize, min: usize },
    #[error("design matrix entry at row {row}, column {col} is {value}, expected +1 or -1")]
    BadEntry { row: usize, col: usize, value: i64 },
    #[error("design matrix is ragged: row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("vector has length {found}, expected {expected}")]
    LengthMismatch { found: usize, expected: usize },
    #[error("K-sequences are not comparable: {0}")]
    Incomparable(String),
    #[error("invalid effect class s = {s}, l = {l} for n = {n}")]
    InvalidClass { s: u8, l: usize, n: usize },
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("refusing to materialize a {dim}x{dim} matrix (n = {n} exceeds {limit})")]
    TooLarge { n: usize, dim: usize, limit: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("infeasible search: {0}")]
    Infeasible(String),
    #[error("no admissible design for N = {runs}, n = {factors}")]
    NoAdmissibleDesign { runs: usize, factors: usize },
    #[error("{0}")]
    Io(String),
    /// The reader of the output went away, as with `| head`.
    #[error("output closed")]
    OutputClosed,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
