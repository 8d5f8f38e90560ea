use std::collections::HashMap;

use crate::ir::{ActivationCondition, Aggregation, BinaryOp, Expr, Rational, UnaryOp, Value};

/// Expression with targets resolved to slot indices.
#[derive(Debug, Clone)]
pub(super) enum CExpr {
    Lit(Value),
    Current(usize),
    Past { slot: usize, back: usize, default: Value },
    Hold { slot: usize, default: Value },
    Window { window: usize, aggregation: Aggregation, default: Option<Value> },
    Unary(UnaryOp, Box<CExpr>),
    Binary(BinaryOp, Box<CExpr>, Box<CExpr>),
    Ite(Box<CExpr>, Box<CExpr>, Box<CExpr>),
    Proj(Box<CExpr>, usize),
}

pub(super) struct Resolver<'a> {
    pub slots: &'a HashMap<String, usize>,
    /// `(slot, duration)` of every window buffer.
    pub windows: Vec<(usize, Rational)>,
}

impl Resolver<'_> {
    fn window(&mut self, slot: usize, duration: Rational) -> usize {
        if let Some(i) = self.windows.iter().position(|w| *w == (slot, duration)) {
            return i;
        }
        self.windows.push((slot, duration));
        self.windows.len() - 1
    }

    pub fn compile(&mut self, e: &Expr) -> CExpr {
        match e {
            Expr::Literal(v) => CExpr::Lit(v.clone()),
            Expr::Sync { target, offset: 0, .. } => CExpr::Current(self.slots[target]),
            Expr::Sync { target, offset, default } => CExpr::Past {
                slot: self.slots[target],
                back: offset.unsigned_abs() as usize,
                default: default.clone().expect("past access has a default"),
            },
            Expr::Hold { target, default } => CExpr::Hold { slot: self.slots[target], default: default.clone() },
            Expr::Window { target, duration, aggregation, default } => {
                let slot = self.slots[target];
                CExpr::Window { window: self.window(slot, *duration), aggregation: *aggregation, default: default.clone() }
            }
            Expr::Unary { op, operand } => CExpr::Unary(*op, Box::new(self.compile(operand))),
            Expr::Binary { op, lhs, rhs } => {
                CExpr::Binary(*op, Box::new(self.compile(lhs)), Box::new(self.compile(rhs)))
            }
            Expr::Ite { condition, consequence, alternative } => CExpr::Ite(
                Box::new(self.compile(condition)),
                Box::new(self.compile(consequence)),
                Box::new(self.compile(alternative)),
            ),
            Expr::TupleProj { operand, index } => CExpr::Proj(Box::new(self.compile(operand)), *index),
        }
    }
}

/// Activation condition over input indices.
#[derive(Debug, Clone)]
pub(super) enum CAc {
    Input(usize),
    All(Vec<CAc>),
    Any(Vec<CAc>),
}

impl CAc {
    pub fn compile(ac: &ActivationCondition, inputs: &HashMap<String, usize>) -> CAc {
        match ac {
            ActivationCondition::Input(n) => CAc::Input(inputs[n]),
            ActivationCondition::Conjunction(v) => CAc::All(v.iter().map(|a| CAc::compile(a, inputs)).collect()),
            ActivationCondition::Disjunction(v) => CAc::Any(v.iter().map(|a| CAc::compile(a, inputs)).collect()),
        }
    }

    pub fn eval(&self, covered: &[bool]) -> bool {
        match self {
            CAc::Input(i) => covered[*i],
            CAc::All(v) => v.iter().all(|a| a.eval(covered)),
            CAc::Any(v) => v.iter().any(|a| a.eval(covered)),
        }
    }
}
