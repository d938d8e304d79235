use thiserror::Error;

use crate::lutmul::MultiplierKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("width {0} is outside 1..=64")]
    InvalidWidth(u32),

    #[error("value {value} does not fit in {width} bits")]
    OverflowValue { width: u32, value: u64 },

    #[error("bit range {lo}..={hi} is invalid for a {width}-bit word")]
    BadRange { lo: u32, hi: u32, width: u32 },

    #[error("sum {sum} does not fit in {width} bits")]
    SumOverflow { sum: u128, width: u32 },

    #[error("expected a {expected}-bit operand, got {actual} bits")]
    WidthMismatch { expected: u32, actual: u32 },

    #[error("invalid multiplier configuration: {0}")]
    ConfigMismatch(String),

    #[error("{0} has no adder stage")]
    NoAdders(MultiplierKind),

    #[error("{kind} is not defined for {width}-bit operands")]
    UnsupportedWidth { kind: &'static str, width: u32 },

    #[error("{0} is an exact multiplier; its error report is identically zero")]
    UnsupportedKind(MultiplierKind),

    #[error("expected a vector of length {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("area weights, line {line}: {message}")]
    Weights { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
