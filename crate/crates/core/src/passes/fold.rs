use crate::ir::{apply_binary, apply_unary, BinaryOp, Expr, Fault, Value};

/// Folds constant subexpressions bottom-up with the interpreter's operator
/// semantics.
pub fn fold_constants(e: &Expr) -> Result<Expr, Fault> {
    fold_counting(e, &mut 0)
}

/// Like [`fold_constants`], adding the number of folded nodes to `count`.
pub(crate) fn fold_counting(e: &Expr, count: &mut usize) -> Result<Expr, Fault> {
    Ok(match e {
        Expr::Literal(_) | Expr::Sync { .. } | Expr::Hold { .. } | Expr::Window { .. } => e.clone(),
        Expr::Unary { op, operand } => {
            let inner = fold_counting(operand, count)?;
            match inner.as_literal() {
                Some(v) => {
                    *count += 1;
                    Expr::Literal(apply_unary(*op, v)?)
                }
                None => Expr::unary(*op, inner),
            }
        }
        Expr::Binary { op: op @ (BinaryOp::And | BinaryOp::Or), lhs, rhs } => {
            let l = fold_counting(lhs, count)?;
            let r = fold_counting(rhs, count)?;
            // The absorbing element decides the result; the neutral one drops out.
            let absorbing = Value::Bool(*op == BinaryOp::Or);
            let folded = match (l.as_literal(), r.as_literal()) {
                (Some(v), _) | (_, Some(v)) if *v == absorbing => Some(Expr::Literal(absorbing.clone())),
                (Some(_), _) => Some(r.clone()),
                (_, Some(_)) => Some(l.clone()),
                _ => None,
            };
            match folded {
                Some(f) => {
                    *count += 1;
                    f
                }
                None => Expr::binary(*op, l, r),
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            let l = fold_counting(lhs, count)?;
            let r = fold_counting(rhs, count)?;
            match (l.as_literal(), r.as_literal()) {
                (Some(a), Some(b)) => {
                    *count += 1;
                    Expr::Literal(apply_binary(*op, a, b)?)
                }
                _ => Expr::binary(*op, l, r),
            }
        }
        Expr::Ite { condition, consequence, alternative } => {
            let c = fold_counting(condition, count)?;
            match c.as_literal() {
                Some(Value::Bool(b)) => {
                    *count += 1;
                    fold_counting(if *b { consequence } else { alternative }, count)?
                }
                _ => Expr::ite(c, fold_counting(consequence, count)?, fold_counting(alternative, count)?),
            }
        }
        Expr::TupleProj { operand, index } => {
            let inner = fold_counting(operand, count)?;
            match inner {
                Expr::Literal(Value::Tuple(mut vs)) if *index < vs.len() => {
                    *count += 1;
                    Expr::Literal(vs.swap_remove(*index))
                }
                other => Expr::TupleProj { operand: Box::new(other), index: *index },
            }
        }
    })
}
