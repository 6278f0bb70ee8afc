use thiserror::Error;

use crate::gint::GaussInt;

/// Errors raised by the algebraic, coding and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("{what} {value} exceeds bound {bound}")]
    Capacity {
        what: &'static str,
        value: u128,
        bound: u128,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not invertible over the ring")]
    NotUnimodular,
    #[error("sublattice has infinite index (singular J)")]
    InfiniteIndex,
    #[error("generator matrix does not have full row rank")]
    RankDeficient,
    #[error("point is not on the lattice (coefficient deviation {0:e})")]
    NotALatticePoint(f64),
    #[error(
        "lattice dimension {dim} exceeds exhaustive search bound {bound}; use a structured decoder"
    )]
    UseStructuredDecoder { dim: usize, bound: usize },
    #[error("unsupported field modulus {0}: {1}")]
    UnsupportedModulus(GaussInt, &'static str),
    #[error("partition has no finite-field structure")]
    NoField,
    #[error("coefficient vector is zero")]
    ZeroCoefficients,
    #[error("power constraint violated: packet power {power} exceeds {limit}")]
    PowerConstraint { power: f64, limit: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
