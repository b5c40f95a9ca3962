use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid module presentation: {0}")]
    InvalidModule(String),

    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),

    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),

    #[error("invalid metric space: {0}")]
    InvalidMetric(String),

    #[error("unknown point: {0}")]
    UnknownPoint(String),

    #[error("map is not 1-Lipschitz: d({x},{y}) increases from {from} to {to}")]
    NotLipschitz {
        x: String,
        y: String,
        from: String,
        to: String,
    },

    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),

    #[error("incoherent system: {0}")]
    Incoherent(String),

    #[error("enumeration budget exceeded: needed {needed} candidates, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("no solution")]
    NoSolution,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
