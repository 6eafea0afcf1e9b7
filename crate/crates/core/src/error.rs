use thiserror::Error;

/// Errors raised anywhere in the tropical box-ball pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("empty tropical polynomial")]
    EmptyTropicalPolynomial,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix not positive definite (pivot {index} is {pivot})")]
    NotPositiveDefinite { index: usize, pivot: String },

    #[error("zero polynomial has no initial form")]
    ZeroPolynomial,
    #[error("no nonzero roots: polynomial is a monomial")]
    NoNonzeroRoots,
    #[error("{0} is not a Newton polygon slope of the polynomial")]
    NotASlope(String),
    #[error("increase depth: valuation not resolved below truncation order {order}")]
    IncreaseDepth { order: String },
    #[error("numerical precision exhausted: {0}")]
    Precision(String),

    #[error("invalid state character {ch:?} at position {pos}")]
    InvalidStateChar { ch: char, pos: usize },
    #[error("overfull periodic state: {balls} balls in {size} boxes (need balls < size/2)")]
    OverfullState { balls: usize, size: usize },
    #[error("empty periodic state")]
    EmptySystem,

    #[error("determinant mismatch: det(X) is not (q - y)^{0}")]
    DeterminantMismatch(usize),
    #[error("system size too small for soliton content: L = {size}, 2*A_g = {bound}")]
    SystemTooSmall { size: i64, bound: i64 },
    #[error("genus 0 curve has no period matrix")]
    GenusZero,
    #[error("point ({x}, {y}) is off the curve (distance {distance})")]
    OffCurve { x: String, y: String, distance: String },
    #[error("cannot assign divisor points to coincident cycle edges at height {0}")]
    AmbiguousEdge(String),

    #[error("solution mismatch: U({n}, {t}) = {value} is not 0 or 1")]
    SolutionMismatch { n: i64, t: i64, value: String },
    #[error("genus {0} too large for exhaustive 2^g enumeration (limit 20)")]
    GenusTooLarge(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
