use thiserror::Error;

/// Errors raised while building or combining frame-theoretic objects.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("tensor product dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has a non-finite entry")]
    NonFinite,

    #[error("matrix has zero dimension")]
    Empty,

    #[error("hermiticity violated: max |A - A*| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("positivity violated: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("unit trace violated: trace = {trace}")]
    TraceNotOne { trace: f64 },

    #[error("effect spectrum outside [0, 1]: [{min}, {max}]")]
    EffectOutOfRange { min: f64, max: f64 },

    #[error("POVM normalization violated: |sum E(x) - I| = {deviation:e}")]
    NotNormalized { deviation: f64 },

    #[error("channel completeness violated: |sum K*K - I| = {deviation:e}")]
    NotTracePreserving { deviation: f64 },

    #[error("unitarity violated: |U*U - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("covariance violated: max |E(x).g - E(x.g)| = {violation:e}")]
    NotCovariant { violation: f64 },

    #[error("group axiom violated: {0}")]
    GroupAxiom(String),

    #[error("not a homomorphism: {0}")]
    NotHomomorphism(String),

    #[error("invalid group element {element} for a group of order {order}")]
    InvalidElement { element: usize, order: usize },

    #[error("invalid point {point} for a space of size {size}")]
    InvalidPoint { point: usize, size: usize },

    #[error("sample space invalid: {0}")]
    SampleSpace(String),

    #[error("sample space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("bundle invariant violated: {0}")]
    Bundle(String),

    #[error("section invariant violated: {0}")]
    Section(String),

    #[error("field undefined at base point {0}")]
    FieldUndefined(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
