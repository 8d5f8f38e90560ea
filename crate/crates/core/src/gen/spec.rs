//! Seeded random specifications that are well-typed by construction.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ir::{
    ac_and, ac_or, ActivationCondition, Aggregation, BinaryOp, Expr, Frequency, PacingType, Rational, UnaryOp, Value,
    ValueType,
};
use crate::parser::{InputDecl, OutputDecl, Spec, TriggerDecl};

const INPUT_NAMES: [&str; 4] = ["a", "b", "c", "d"];
const SCALARS: [ValueType; 3] = [ValueType::Bool, ValueType::Int64, ValueType::Float64];
const FREQUENCIES: [u64; 4] = [1, 2, 5, 10];

/// Size limits for [`random_spec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecShape {
    pub max_inputs: usize,
    pub max_outputs: usize,
    pub max_triggers: usize,
    pub max_depth: usize,
}

impl Default for SpecShape {
    fn default() -> Self {
        SpecShape { max_inputs: 3, max_outputs: 8, max_triggers: 3, max_depth: 3 }
    }
}

#[derive(Clone)]
struct Stream {
    name: String,
    ty: ValueType,
    /// Event-based pacing; `None` for periodic streams.
    pacing: Option<ActivationCondition>,
}

struct Builder {
    rng: ChaCha8Rng,
    depth: usize,
    /// Streams readable synchronously by the node under construction.
    sync: Vec<Stream>,
    /// Every stream of the specification.
    all: Vec<Stream>,
    /// The node under construction, readable through offsets only.
    current: Option<Stream>,
    /// Conjunction of the pacings of synchronously read streams.
    needs: Option<ActivationCondition>,
}

impl Builder {
    fn literal(&mut self, ty: &ValueType) -> Value {
        match ty {
            ValueType::Bool => Value::Bool(self.rng.random_bool(0.5)),
            ValueType::Int64 => Value::Int(self.rng.random_range(-5..=5)),
            ValueType::Float64 => Value::Float(f64::from(self.rng.random_range(-8i32..=8)) / 4.0),
            ValueType::Tuple(items) => Value::Tuple(items.iter().map(|t| self.literal(t)).collect()),
        }
    }

    fn need(&mut self, s: &Stream) {
        let p = s.pacing.clone().expect("synchronous reads target event-based streams");
        self.needs = Some(match self.needs.take() {
            Some(n) => ac_and(&n, &p),
            None => p,
        });
    }

    fn pick<'a>(&mut self, pool: &'a [Stream], ty: Option<&ValueType>) -> Option<&'a Stream> {
        let fits: Vec<&Stream> = pool.iter().filter(|s| ty.is_none_or(|t| s.ty == *t)).collect();
        fits.choose(&mut self.rng).copied()
    }

    fn duration(&mut self) -> Rational {
        *[Rational::new(1, 10), Rational::new(1, 2), Rational::from_integer(1), Rational::from_integer(2)]
            .choose(&mut self.rng)
            .unwrap()
    }

    /// A leaf access of type `ty`, or `None` when no stream fits.
    fn access(&mut self, ty: &ValueType) -> Option<Expr> {
        let all = self.all.clone();
        let sync = self.sync.clone();
        match self.rng.random_range(0..10) {
            0..=3 => {
                let s = self.pick(&sync, Some(ty))?.clone();
                self.need(&s);
                Some(Expr::sync(s.name))
            }
            4 | 5 => {
                let s = self.pick(&all, Some(ty))?.clone();
                let d = self.literal(ty);
                Some(Expr::hold(s.name, d))
            }
            6 => {
                let mut pool = sync.clone();
                pool.extend(self.current.clone());
                let s = self.pick(&pool, Some(ty))?.clone();
                if Some(&s.name) != self.current.as_ref().map(|c| &c.name) {
                    self.need(&s);
                }
                let d = self.literal(ty);
                Some(Expr::offset(s.name, -self.rng.random_range(1..=3), d))
            }
            _ => self.window(ty, &all),
        }
    }

    fn window(&mut self, ty: &ValueType, all: &[Stream]) -> Option<Expr> {
        let duration = self.duration();
        let (aggregation, target, default) = match ty {
            ValueType::Bool => (Aggregation::Exists, self.pick(all, Some(&ValueType::Bool))?.clone(), None),
            ValueType::Int64 => match self.rng.random_range(0..3) {
                0 => (Aggregation::Count, self.pick(all, None)?.clone(), None),
                1 => (Aggregation::Sum, self.pick(all, Some(ty))?.clone(), None),
                _ => {
                    let agg = *[Aggregation::Min, Aggregation::Max].choose(&mut self.rng).unwrap();
                    (agg, self.pick(all, Some(ty))?.clone(), Some(self.literal(ty)))
                }
            },
            ValueType::Float64 => {
                let agg = *[Aggregation::Sum, Aggregation::Avg, Aggregation::Min, Aggregation::Max]
                    .choose(&mut self.rng)
                    .unwrap();
                let default = agg.needs_default().then(|| self.literal(ty));
                (agg, self.pick(all, Some(ty))?.clone(), default)
            }
            ValueType::Tuple(_) => return None,
        };
        Some(Expr::Window { target: target.name, duration, aggregation, default })
    }

    fn expr(&mut self, ty: &ValueType) -> Expr {
        if self.depth == 0 || self.rng.random_range(0..4) == 0 {
            return self.leaf(ty);
        }
        self.depth -= 1;
        let e = match ty {
            ValueType::Bool => match self.rng.random_range(0..6) {
                0 => Expr::not(self.expr(ty)),
                1 => Expr::binary(*[BinaryOp::And, BinaryOp::Or].choose(&mut self.rng).unwrap(), self.expr(ty), self.expr(ty)),
                2 => self.ite(ty),
                _ => {
                    let operand = SCALARS[self.rng.random_range(1..3)].clone();
                    let op = *[BinaryOp::Lt, BinaryOp::Le, BinaryOp::Gt, BinaryOp::Ge, BinaryOp::Eq, BinaryOp::Ne]
                        .choose(&mut self.rng)
                        .unwrap();
                    Expr::binary(op, self.expr(&operand), self.expr(&operand))
                }
            },
            ValueType::Int64 => match self.rng.random_range(0..5) {
                0 => Expr::unary(UnaryOp::Neg, self.expr(ty)),
                1 => self.ite(ty),
                2 => {
                    let op = *[BinaryOp::Div, BinaryOp::Mod].choose(&mut self.rng).unwrap();
                    Expr::binary(op, self.expr(ty), Expr::lit(Value::Int(self.rng.random_range(1..=7))))
                }
                _ => Expr::binary(*[BinaryOp::Add, BinaryOp::Sub].choose(&mut self.rng).unwrap(), self.expr(ty), self.expr(ty)),
            },
            _ => match self.rng.random_range(0..5) {
                0 => Expr::unary(UnaryOp::Neg, self.expr(ty)),
                1 => self.ite(ty),
                _ => {
                    let op = *[BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div].choose(&mut self.rng).unwrap();
                    Expr::binary(op, self.expr(ty), self.expr(ty))
                }
            },
        };
        self.depth += 1;
        e
    }

    fn ite(&mut self, ty: &ValueType) -> Expr {
        Expr::ite(self.expr(&ValueType::Bool), self.expr(ty), self.expr(ty))
    }

    fn leaf(&mut self, ty: &ValueType) -> Expr {
        if self.rng.random_range(0..5) > 0 {
            if let Some(e) = self.access(ty) {
                return e;
            }
        }
        let v = self.literal(ty);
        Expr::lit(v)
    }

    fn node(&mut self, node: Option<Stream>, ty: &ValueType, periodic: bool) -> (Expr, Option<Expr>) {
        self.current = node;
        self.needs = None;
        // Later outputs are not yet in `all`, so only earlier streams are read synchronously.
        self.sync = if periodic { Vec::new() } else { self.all.iter().filter(|s| s.pacing.is_some()).cloned().collect() };
        let expr = self.expr(ty);
        let filter = (self.rng.random_range(0..8) == 0).then(|| self.expr(&ValueType::Bool));
        (expr, filter)
    }

    fn pacing(&mut self, inputs: &[Stream], periodic: bool) -> Option<PacingType> {
        if periodic {
            return Some(PacingType::Periodic(Frequency::hz(*FREQUENCIES.choose(&mut self.rng).unwrap())));
        }
        let extra = inputs.choose(&mut self.rng).unwrap().pacing.clone().unwrap();
        match self.needs.clone() {
            None if self.rng.random_bool(0.5) => {
                let other = inputs.choose(&mut self.rng).unwrap().pacing.clone().unwrap();
                Some(PacingType::EventBased(ac_or(&extra, &other)))
            }
            None => Some(PacingType::EventBased(extra)),
            Some(n) if self.rng.random_range(0..4) == 0 => Some(PacingType::EventBased(ac_and(&n, &extra))),
            Some(_) => None,
        }
    }
}

/// Generates a well-typed specification from `seed`.
pub fn random_spec(seed: u64, shape: &SpecShape) -> Spec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_inputs = rng.random_range(1..=shape.max_inputs.clamp(1, INPUT_NAMES.len()));
    let n_outputs = rng.random_range(0..=shape.max_outputs);
    let n_triggers = rng.random_range(1..=shape.max_triggers.max(1));
    let mut spec = Spec::default();
    let mut inputs = Vec::new();
    for name in &INPUT_NAMES[..n_inputs] {
        let ty = SCALARS.choose(&mut rng).unwrap().clone();
        spec.inputs.push(InputDecl { name: name.to_string(), ty: ty.clone() });
        inputs.push(Stream { name: name.to_string(), ty, pacing: Some(ActivationCondition::input(*name)) });
    }
    let mut b = Builder { rng, depth: shape.max_depth, sync: Vec::new(), all: inputs.clone(), current: None, needs: None };
    for k in 0..n_outputs {
        let name = format!("o{k}");
        let ty = SCALARS.choose(&mut b.rng).unwrap().clone();
        let periodic = b.rng.random_range(0..8) == 0;
        let constant = !periodic && b.rng.random_range(0..6) == 0;
        let me = Stream { name: name.clone(), ty: ty.clone(), pacing: None };
        let (expr, filter) = if constant {
            b.needs = None;
            let (l, r) = (b.literal(&ty), b.literal(&ty));
            let e = match &ty {
                ValueType::Bool => Expr::binary(BinaryOp::And, Expr::lit(l), Expr::lit(r)),
                _ => Expr::binary(BinaryOp::Add, Expr::lit(l), Expr::lit(r)),
            };
            (e, None)
        } else {
            b.node(Some(me), &ty, periodic)
        };
        let pacing = b.pacing(&inputs, periodic);
        let resolved = match &pacing {
            Some(PacingType::EventBased(ac)) => Some(ac.clone()),
            Some(PacingType::Periodic(_)) => None,
            None => b.needs.clone(),
        };
        let annotate_ty = b.rng.random_bool(0.5);
        spec.outputs.push(OutputDecl { name: name.clone(), ty: annotate_ty.then(|| ty.clone()), pacing, filter, expr });
        b.all.push(Stream { name, ty, pacing: resolved });
    }
    for k in 0..n_triggers {
        let periodic = b.rng.random_range(0..6) == 0;
        let (condition, filter) = b.node(None, &ValueType::Bool, periodic);
        let pacing = b.pacing(&inputs, periodic);
        spec.triggers.push(TriggerDecl { pacing, filter, condition, message: format!("t{k}") });
    }
    spec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::infer_types;
    use crate::parser::{parse_spec, pretty};

    #[test]
    fn random_specs_are_well_typed() {
        let mut failures = Vec::new();
        for seed in 0..2000 {
            let spec = random_spec(seed, &SpecShape::default());
            if let Err(e) = infer_types(&spec) {
                failures.push(format!("seed {seed}: {e}\n{}", pretty(&spec)));
            }
        }
        assert!(failures.is_empty(), "{} ill-typed:\n{}", failures.len(), failures[..failures.len().min(3)].join("\n"));
    }

    #[test]
    fn deterministic_and_reparsable() {
        for seed in 0..50 {
            let a = random_spec(seed, &SpecShape::default());
            assert_eq!(a, random_spec(seed, &SpecShape::default()));
            assert_eq!(parse_spec(&pretty(&a)).unwrap(), a);
        }
    }
}
