use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use super::value::{BinaryOp, UnaryOp, Value};
use super::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregation {
    Count,
    Sum,
    Avg,
    Min,
    Max,
    Exists,
}

impl Aggregation {
    pub const ALL: [Aggregation; 6] =
        [Aggregation::Count, Aggregation::Sum, Aggregation::Avg, Aggregation::Min, Aggregation::Max, Aggregation::Exists];

    pub fn name(&self) -> &'static str {
        match self {
            Aggregation::Count => "count",
            Aggregation::Sum => "sum",
            Aggregation::Avg => "avg",
            Aggregation::Min => "min",
            Aggregation::Max => "max",
            Aggregation::Exists => "exists",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Aggregation::ALL.into_iter().find(|a| a.name() == name)
    }

    /// Whether an empty window has no natural result and needs a default.
    pub fn needs_default(&self) -> bool {
        matches!(self, Aggregation::Avg | Aggregation::Min | Aggregation::Max)
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A pure stream expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Literal(Value),
    /// Synchronous access. `offset` is `0` for the current value or negative for
    /// past values, in which case `default` covers missing history.
    Sync { target: String, offset: i64, default: Option<Value> },
    /// Asynchronous access to the latest value, whenever it was produced.
    Hold { target: String, default: Value },
    /// Aggregation over all values of `target` produced in `[now - duration, now]`.
    Window { target: String, duration: Rational, aggregation: Aggregation, default: Option<Value> },
    Unary { op: UnaryOp, operand: Box<Expr> },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Ite { condition: Box<Expr>, consequence: Box<Expr>, alternative: Box<Expr> },
    TupleProj { operand: Box<Expr>, index: usize },
}

/// How an expression reads another stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Sync { offset: i64 },
    Hold,
    Window { duration: Rational, aggregation: Aggregation },
}

impl AccessKind {
    pub fn is_current(&self) -> bool {
        matches!(self, AccessKind::Sync { offset: 0 })
    }

    pub fn is_sync(&self) -> bool {
        matches!(self, AccessKind::Sync { .. })
    }
}

impl Expr {
    pub fn lit(value: Value) -> Expr {
        Expr::Literal(value)
    }

    pub fn sync(target: impl Into<String>) -> Expr {
        Expr::Sync { target: target.into(), offset: 0, default: None }
    }

    pub fn offset(target: impl Into<String>, offset: i64, default: Value) -> Expr {
        Expr::Sync { target: target.into(), offset, default: Some(default) }
    }

    pub fn hold(target: impl Into<String>, default: Value) -> Expr {
        Expr::Hold { target: target.into(), default }
    }

    pub fn unary(op: UnaryOp, operand: Expr) -> Expr {
        Expr::Unary { op, operand: Box::new(operand) }
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    pub fn ite(condition: Expr, consequence: Expr, alternative: Expr) -> Expr {
        Expr::Ite { condition: Box::new(condition), consequence: Box::new(consequence), alternative: Box::new(alternative) }
    }

    pub fn not(operand: Expr) -> Expr {
        Expr::unary(UnaryOp::Not, operand)
    }

    /// Logical negation that cancels an existing `!`.
    pub fn negated(self) -> Expr {
        match self {
            Expr::Unary { op: UnaryOp::Not, operand } => *operand,
            other => Expr::not(other),
        }
    }

    pub fn and(self, other: Expr) -> Expr {
        Expr::binary(BinaryOp::And, self, other)
    }

    pub fn or(self, other: Expr) -> Expr {
        Expr::binary(BinaryOp::Or, self, other)
    }

    pub fn as_literal(&self) -> Option<&Value> {
        match self {
            Expr::Literal(v) => Some(v),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Literal(_) | Expr::Sync { .. } | Expr::Hold { .. } | Expr::Window { .. } => vec![],
            Expr::Unary { operand, .. } | Expr::TupleProj { operand, .. } => vec![operand],
            Expr::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Ite { condition, consequence, alternative } => vec![condition, consequence, alternative],
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Expr::size).sum::<usize>()
    }

    pub fn access(&self) -> Option<(&str, AccessKind)> {
        match self {
            Expr::Sync { target, offset, .. } => Some((target, AccessKind::Sync { offset: *offset })),
            Expr::Hold { target, .. } => Some((target, AccessKind::Hold)),
            Expr::Window { target, duration, aggregation, .. } => {
                Some((target, AccessKind::Window { duration: *duration, aggregation: *aggregation }))
            }
            _ => None,
        }
    }

    /// Every stream access in pre-order.
    pub fn accesses(&self) -> Vec<(&str, AccessKind)> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Some(a) = e.access() {
                out.push(a);
            }
        });
        out
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for child in self.children() {
            child.visit(f);
        }
    }

    /// Rebuilds the tree top-down; where `f` returns a replacement the subtree
    /// is not descended into.
    pub fn rewrite(&self, f: &mut impl FnMut(&Expr) -> Option<Expr>) -> Expr {
        if let Some(replacement) = f(self) {
            return replacement;
        }
        match self {
            Expr::Literal(_) | Expr::Sync { .. } | Expr::Hold { .. } | Expr::Window { .. } => self.clone(),
            Expr::Unary { op, operand } => Expr::unary(*op, operand.rewrite(f)),
            Expr::TupleProj { operand, index } => Expr::TupleProj { operand: Box::new(operand.rewrite(f)), index: *index },
            Expr::Binary { op, lhs, rhs } => Expr::binary(*op, lhs.rewrite(f), rhs.rewrite(f)),
            Expr::Ite { condition, consequence, alternative } => {
                Expr::ite(condition.rewrite(f), consequence.rewrite(f), alternative.rewrite(f))
            }
        }
    }

    /// Renames every access target through `rename`.
    pub fn rename_targets(&self, rename: &impl Fn(&str) -> Option<String>) -> Expr {
        self.rewrite(&mut |e| {
            let (target, _) = e.access()?;
            let new = rename(target)?;
            let mut out = e.clone();
            match &mut out {
                Expr::Sync { target, .. } | Expr::Hold { target, .. } | Expr::Window { target, .. } => *target = new,
                _ => unreachable!(),
            }
            Some(out)
        })
    }
}

/// Structural equality: no commutativity or associativity is applied, and float
/// literals must be bit-identical.
pub fn expr_eq(a: &Expr, b: &Expr) -> bool {
    a == b
}

/// 64-bit structural digest; `expr_eq(a, b)` implies equal digests.
pub fn expr_hash(a: &Expr) -> u64 {
    let mut hasher = DefaultHasher::new();
    a.hash(&mut hasher);
    hasher.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lt(target: &str) -> Expr {
        Expr::binary(BinaryOp::Lt, Expr::sync(target), Expr::lit(Value::Float(3.0)))
    }

    #[test]
    fn structural_equality() {
        assert!(expr_eq(&lt("alt"), &lt("alt")));
        assert_eq!(expr_hash(&lt("alt")), expr_hash(&lt("alt")));
        assert!(!expr_eq(&lt("alt"), &lt("lat")));
        let ab = Expr::binary(BinaryOp::Add, Expr::sync("a"), Expr::sync("b"));
        let ba = Expr::binary(BinaryOp::Add, Expr::sync("b"), Expr::sync("a"));
        assert!(!expr_eq(&ab, &ba));
    }

    #[test]
    fn negation_cancels() {
        let e = Expr::sync("emergency");
        assert_eq!(Expr::not(e.clone()).negated(), e);
        assert_eq!(e.clone().negated(), Expr::not(e));
    }

    #[test]
    fn size_and_accesses() {
        let e = Expr::ite(lt("a"), Expr::hold("b", Value::Int(0)), Expr::offset("c", -2, Value::Int(1)));
        assert_eq!(e.size(), 6);
        let targets: Vec<_> = e.accesses().into_iter().map(|(t, _)| t).collect();
        assert_eq!(targets, ["a", "b", "c"]);
    }
}
