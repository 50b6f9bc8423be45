use thiserror::Error;

use crate::witness::WitnessFailure;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid carrier: {0}")]
    InvalidCarrier(String),

    #[error("group element {value} is not aligned with the grid (nearest index {nearest})")]
    MisalignedElement { value: f64, nearest: f64 },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("empty window")]
    EmptyWindow,

    #[error("invalid exponent p = {0}; expected 1 <= p < inf")]
    InvalidExponent(f64),

    #[error("non-finite value {value} at index {index}")]
    NonFiniteValue { index: i64, value: f64 },

    #[error("operands live on different carriers or exponents")]
    CarrierMismatch,

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("weight is not positive at index {index} (native x = {native})")]
    NonPositiveWeight { index: i64, native: f64 },

    #[error("value out of floating-point range at index {index} (iterate m = {m})")]
    Range { index: i64, m: u64 },

    #[error("operation requires a finite cyclic carrier")]
    NotCyclic,

    #[error("operation requires a compact-passing element on a line carrier")]
    NotCompactPassing,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix oracle paths disagree at n = {n}: dense {dense}, closed form {closed}")]
    OracleMismatch { n: u64, dense: f64, closed: f64 },

    #[error("{0}")]
    WitnessNotFound(Box<WitnessFailure>),
}
