use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is {rows}x{cols}, expected square")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("mixed dimensions: expected {expected}, found {found}")]
    MixedDimensions { expected: usize, found: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid numeric configuration: {0}")]
    InvalidConfig(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("malformed filtration: {0}")]
    MalformedFiltration(String),
    #[error("not a pseudometric: {0}")]
    NotAPseudometric(String),
    #[error("context algebra is not diagonal")]
    NotDiagonalContext,
    #[error("not a projection: {0}")]
    NotAProjection(String),
    #[error("matrix already lies in the level")]
    AlreadyInside,
    #[error("projection is zero")]
    ZeroProjection,
    #[error("matrix lies in the commutant of the algebra")]
    CommutantMember,
    #[error("closure did not stabilize after {0} iterations")]
    NonConvergent(usize),
    #[error("projection is not central in the algebra")]
    NotCentral,
    #[error("not a unital subalgebra: {0}")]
    NotSubalgebra(String),
    #[error("bridge {bridge} is below half the larger diameter {needed}")]
    BridgeTooSmall { bridge: f64, needed: f64 },
    #[error("transform is not superadditive at s={s}, t={t}")]
    NotSuperadditive { s: f64, t: f64 },
    #[error("not an operator system: {0}")]
    NotOperatorSystem(String),
    #[error("degenerate chain: {0}")]
    DegenerateChain(String),
    #[error("parameter constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("cannot canonicalize: {0}")]
    NotCanonicalizable(String),
    #[error("carrier is not an isometry")]
    NotIsometry,
    #[error("map is not a unital homomorphism: {0}")]
    NotHomomorphism(String),
    #[error("size {size} exceeds the cap {cap}")]
    SizeLimit { size: usize, cap: usize },
    #[error("not a code: {0}")]
    NotACode(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("postcondition failed: {0}")]
    PostconditionFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
