use crate::analysis::TypedSpec;
use crate::ir::{Aggregation, Expr, UnaryOp, ValueType};

/// Whether evaluating `e` can raise a runtime fault: integer arithmetic may
/// overflow or divide by zero, and so may integer window sums.
pub(crate) fn may_fault(e: &Expr, ts: &TypedSpec) -> bool {
    let mut faulty = false;
    e.visit(&mut |sub| {
        faulty |= match sub {
            Expr::Binary { op, lhs, .. } if op.is_arithmetic() => ts.type_of(lhs) != Some(ValueType::Float64),
            Expr::Unary { op: UnaryOp::Neg, operand } => ts.type_of(operand) != Some(ValueType::Float64),
            Expr::Window { target, aggregation: Aggregation::Sum, .. } => {
                ts.value_type_of(target) != Some(&ValueType::Float64)
            }
            _ => false,
        };
    });
    faulty
}

/// Whether every access in `e` is a current-value read.
pub(crate) fn only_current_reads(e: &Expr) -> bool {
    e.accesses().iter().all(|(_, k)| k.is_current())
}

pub(crate) fn has_past_offset(e: &Expr) -> bool {
    e.accesses().iter().any(|(_, k)| matches!(k, crate::ir::AccessKind::Sync { offset } if *offset < 0))
}

