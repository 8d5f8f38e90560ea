//! Core intermediate representation shared by every stage: values,
//! expressions, activation conditions, frequencies and pacing types.

mod activation;
mod expr;
mod frequency;
mod value;

use std::fmt;

pub use activation::{ac_and, ac_implies, ac_or, ActivationCondition, MAX_IMPLICATION_INPUTS};
pub use expr::{expr_eq, expr_hash, AccessKind, Aggregation, Expr};
pub use frequency::{format_rational, freq_divides, freq_lcm, parse_rational, Frequency};
pub use value::{apply_binary, apply_unary, BinaryOp, Fault, UnaryOp, Value, ValueType};

/// Exact rational number; used for seconds and hertz.
pub type Rational = num_rational::Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IrError {
    #[error("invalid frequency {0}: numerator and denominator must be positive")]
    InvalidFrequency(String),
    #[error("activation conditions mention {0} inputs; at most {max} are supported", max = MAX_IMPLICATION_INPUTS)]
    ImplicationCapacity(usize),
}

/// The "when" half of a stream type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PacingType {
    EventBased(ActivationCondition),
    Periodic(Frequency),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacingKind {
    EventBased,
    Periodic,
}

impl PacingType {
    pub fn kind(&self) -> PacingKind {
        match self {
            PacingType::EventBased(_) => PacingKind::EventBased,
            PacingType::Periodic(_) => PacingKind::Periodic,
        }
    }

    /// Whether a stream with pacing `self` may read `target` synchronously:
    /// `target` must be evaluated at every instant `self` is.
    pub fn can_access_sync(&self, target: &PacingType) -> Result<bool, IrError> {
        match (self, target) {
            (PacingType::EventBased(a), PacingType::EventBased(b)) => ac_implies(a, b),
            (PacingType::Periodic(a), PacingType::Periodic(b)) => Ok(freq_divides(*a, *b)),
            _ => Ok(false),
        }
    }

    /// Same evaluation instants.
    pub fn equivalent(&self, other: &PacingType) -> Result<bool, IrError> {
        match (self, other) {
            (PacingType::EventBased(a), PacingType::EventBased(b)) => a.equivalent(b),
            (PacingType::Periodic(a), PacingType::Periodic(b)) => Ok(a == b),
            _ => Ok(false),
        }
    }
}

impl fmt::Display for PacingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PacingType::EventBased(ac) => write!(f, "@{{{ac}}}"),
            PacingType::Periodic(freq) => write!(f, "@{freq}"),
        }
    }
}
