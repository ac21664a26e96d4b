use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports. Point-level variants carry labels, not
/// indices, so messages can be shown to users verbatim.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // metric axioms and space construction
    #[error("distance matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("duplicate point label `{0}`")]
    DuplicateLabel(String),
    #[error("base point `{0}` is not one of the labels")]
    UnknownBase(String),
    #[error("d({0},{0}) is not zero")]
    NonZeroDiagonal(String),
    #[error("distance matrix is not symmetric at ({0},{1})")]
    NotSymmetric(String, String),
    #[error("distance d({0},{1}) is not positive")]
    NegativeOrZeroOffDiagonal(String, String),
    #[error("triangle inequality fails: d({0},{1}) > d({0},{2}) + d({2},{1})")]
    TriangleViolation(String, String, String),
    #[error("exponent {0} is outside (0,1]")]
    AlphaOutOfRange(String),
    #[error("{0} has no exact rational representation")]
    NotExactlyRepresentable(String),
    #[error("space has fewer than {0} points")]
    TooFewPoints(usize),

    // molecules and norms
    #[error("unknown point label `{0}`")]
    UnknownLabel(String),
    #[error("elementary molecule needs two distinct points, got `{0}` twice")]
    EqualPoints(String),
    #[error("operands live over different spaces")]
    SpaceMismatch,
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("not a line space: {0}")]
    NotALineSpace(String),

    // Lipschitz functions
    #[error("function does not vanish at the base point")]
    BaseValueNonZero,
    #[error("partial domain does not contain the base point")]
    BaseNotInDomain,
    #[error("partial Lipschitz constant {constant} exceeds L = {bound}")]
    PartialConstantExceedsL { constant: String, bound: String },
    #[error("modulus is not nondecreasing with value 0 at 0: {0}")]
    NotMonotone(String),
    #[error("moduli hypothesis fails on pair ({0},{1})")]
    ModuliHypothesisViolated(String, String),
    #[error("intervals overlap: {0}")]
    OverlappingIntervals(String),

    // operators
    #[error("map does not send base point to base point")]
    BaseNotPreserved,
    #[error("maps are not composable: codomain of the first is not the domain of the second")]
    NotComposable,
    #[error("molecule dimension {0} exceeds the exact enumeration cap of 8")]
    DimensionTooLargeForExact(usize),

    // constructions
    #[error("stage {stage} exceeds the cap {max}")]
    StageTooLarge { stage: usize, max: usize },
    #[error("removed widths exhaust the remaining intervals at stage {0}")]
    WidthOverflow(usize),

    // input
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
