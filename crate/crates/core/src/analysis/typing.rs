use std::collections::HashMap;

use super::AnalysisError;
use crate::ir::{ac_and, ActivationCondition, Frequency, Aggregation, BinaryOp, Expr, PacingKind, PacingType, UnaryOp, ValueType};
use crate::parser::Spec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Annotated,
    Inferred,
}

/// Resolved two-dimensional type of an output or trigger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamType {
    pub value_type: ValueType,
    pub pacing: PacingType,
    pub provenance: Provenance,
}

/// A specification in which every output and trigger carries a value type and
/// a pacing type. Integer literals have been widened where a float was
/// expected, so the embedded [`Spec`] may differ from the parsed one in
/// literal representation only.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedSpec {
    spec: Spec,
    outputs: Vec<StreamType>,
    triggers: Vec<StreamType>,
}

impl TypedSpec {
    pub fn spec(&self) -> &Spec {
        &self.spec
    }

    pub fn into_spec(self) -> Spec {
        self.spec
    }

    pub fn output_type(&self, index: usize) -> &StreamType {
        &self.outputs[index]
    }

    pub fn output_types(&self) -> &[StreamType] {
        &self.outputs
    }

    pub fn trigger_type(&self, index: usize) -> &StreamType {
        &self.triggers[index]
    }

    pub fn trigger_types(&self) -> &[StreamType] {
        &self.triggers
    }

    /// Pacing of an input or output stream by name.
    pub fn pacing_of(&self, name: &str) -> Option<PacingType> {
        if self.spec.input(name).is_some() {
            return Some(PacingType::EventBased(ActivationCondition::input(name)));
        }
        let idx = self.spec.outputs.iter().position(|o| o.name == name)?;
        Some(self.outputs[idx].pacing.clone())
    }

    pub fn value_type_of(&self, name: &str) -> Option<&ValueType> {
        if let Some(input) = self.spec.input(name) {
            return Some(&input.ty);
        }
        let idx = self.spec.outputs.iter().position(|o| o.name == name)?;
        Some(&self.outputs[idx].value_type)
    }

    /// Value type of an expression over this specification's streams.
    pub fn type_of(&self, e: &Expr) -> Option<ValueType> {
        let types: HashMap<String, ValueType> = self
            .spec
            .inputs
            .iter()
            .map(|i| (i.name.clone(), i.ty.clone()))
            .chain(self.spec.outputs.iter().zip(&self.outputs).map(|(o, t)| (o.name.clone(), t.value_type.clone())))
            .collect();
        type_expr(e, &Env { types: &types, provisional: false }).ok().map(|(_, t)| t)
    }

    /// The specification with the inferred pacing of `streams` written out.
    pub fn materialized_for(&self, streams: &[super::StreamRef]) -> Spec {
        let mut spec = self.spec.clone();
        for s in streams {
            match s {
                super::StreamRef::Output(i) => spec.outputs[*i].pacing = Some(self.outputs[*i].pacing.clone()),
                super::StreamRef::Trigger(i) => spec.triggers[*i].pacing = Some(self.triggers[*i].pacing.clone()),
                super::StreamRef::Input(_) => {}
            }
        }
        spec
    }

    /// The specification with every inferred pacing written out as an
    /// annotation.
    pub fn materialized(&self) -> Spec {
        let mut spec = self.spec.clone();
        for (out, ty) in spec.outputs.iter_mut().zip(&self.outputs) {
            out.pacing = Some(ty.pacing.clone());
        }
        for (trig, ty) in spec.triggers.iter_mut().zip(&self.triggers) {
            trig.pacing = Some(ty.pacing.clone());
        }
        spec
    }
}

/// Infers and checks value and pacing types.
pub fn infer_types(spec: &Spec) -> Result<TypedSpec, AnalysisError> {
    let mut spec = spec.clone();
    let value_types = infer_value_types(&mut spec)?;
    let (outputs, triggers) = infer_pacing(&spec, &value_types)?;
    Ok(TypedSpec { spec, outputs, triggers })
}

// ---------------------------------------------------------------------------
// value types

enum Lookup<'a> {
    Known(&'a ValueType),
    Pending,
}

struct Env<'a> {
    types: &'a HashMap<String, ValueType>,
    /// While still iterating, unresolved targets are reported as pending
    /// instead of as errors.
    provisional: bool,
}

impl Env<'_> {
    fn lookup(&self, name: &str) -> Lookup<'_> {
        match self.types.get(name) {
            Some(t) => Lookup::Known(t),
            None => Lookup::Pending,
        }
    }
}

#[derive(Debug)]
enum TypeFailure {
    Pending,
    Error(String),
}

type Typed = Result<(Expr, ValueType), TypeFailure>;

fn fail<T>(message: impl Into<String>) -> Result<T, TypeFailure> {
    Err(TypeFailure::Error(message.into()))
}

/// Converts `e` of type `have` into type `want`, widening integer literals.
fn coerce(e: Expr, have: &ValueType, want: &ValueType) -> Option<Expr> {
    if have == want {
        return Some(e);
    }
    match &e {
        Expr::Literal(v) => v.coerce_to(want).map(Expr::Literal),
        _ => None,
    }
}

fn unify(lhs: (Expr, ValueType), rhs: (Expr, ValueType)) -> Option<(Expr, Expr, ValueType)> {
    let (le, lt) = lhs;
    let (re, rt) = rhs;
    if lt == rt {
        return Some((le, re, lt));
    }
    if let Some(re2) = coerce(re.clone(), &rt, &lt) {
        return Some((le, re2, lt));
    }
    let le2 = coerce(le, &lt, &rt)?;
    Some((le2, re, rt))
}

fn default_for(target: &str, default: &crate::ir::Value, ty: &ValueType) -> Result<crate::ir::Value, TypeFailure> {
    default
        .coerce_to(ty)
        .ok_or_else(|| TypeFailure::Error(format!("default {default} for `{target}` does not have type {ty}")))
}

fn type_expr(e: &Expr, env: &Env) -> Typed {
    match e {
        Expr::Literal(v) => Ok((e.clone(), v.ty())),
        Expr::Sync { target, offset, default } => match (env.lookup(target), default) {
            (Lookup::Known(t), None) => Ok((e.clone(), t.clone())),
            (Lookup::Known(t), Some(d)) => {
                let d = default_for(target, d, t)?;
                Ok((Expr::Sync { target: target.clone(), offset: *offset, default: Some(d) }, t.clone()))
            }
            (Lookup::Pending, Some(d)) if env.provisional => Ok((e.clone(), d.ty())),
            (Lookup::Pending, _) => Err(TypeFailure::Pending),
        },
        Expr::Hold { target, default } => match env.lookup(target) {
            Lookup::Known(t) => {
                let d = default_for(target, default, t)?;
                Ok((Expr::Hold { target: target.clone(), default: d }, t.clone()))
            }
            Lookup::Pending if env.provisional => Ok((e.clone(), default.ty())),
            Lookup::Pending => Err(TypeFailure::Pending),
        },
        Expr::Window { target, duration, aggregation, default } => {
            let elem = match env.lookup(target) {
                Lookup::Known(t) => t.clone(),
                Lookup::Pending => return Err(TypeFailure::Pending),
            };
            let result = match aggregation {
                Aggregation::Count => ValueType::Int64,
                Aggregation::Exists if elem == ValueType::Bool => ValueType::Bool,
                Aggregation::Exists => return fail(format!("`exists` needs a Bool stream, `{target}` is {elem}")),
                Aggregation::Avg if elem.is_numeric() => ValueType::Float64,
                Aggregation::Sum | Aggregation::Min | Aggregation::Max if elem.is_numeric() => elem.clone(),
                _ => return fail(format!("`{aggregation}` needs a numeric stream, `{target}` is {elem}")),
            };
            let default = match default {
                Some(d) => Some(default_for(target, d, &result)?),
                None => None,
            };
            Ok((
                Expr::Window { target: target.clone(), duration: *duration, aggregation: *aggregation, default },
                result,
            ))
        }
        Expr::Unary { op, operand } => {
            let (inner, t) = type_expr(operand, env)?;
            match (op, &t) {
                (UnaryOp::Neg, t) if t.is_numeric() => Ok((Expr::unary(*op, inner), t.clone())),
                (UnaryOp::Not, ValueType::Bool) => Ok((Expr::unary(*op, inner), ValueType::Bool)),
                _ => fail(format!("operator {op:?} cannot be applied to {t}")),
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            let l = type_expr(lhs, env)?;
            let r = type_expr(rhs, env)?;
            let (lt, rt) = (l.1.clone(), r.1.clone());
            let Some((le, re, t)) = unify(l, r) else {
                return fail(format!("operands of `{}` have types {lt} and {rt}", op.symbol()));
            };
            let result = match op {
                op if op.is_arithmetic() && t.is_numeric() => t,
                BinaryOp::Eq | BinaryOp::Ne => ValueType::Bool,
                op if op.is_comparison() && t.is_numeric() => ValueType::Bool,
                op if op.is_logical() && t == ValueType::Bool => ValueType::Bool,
                _ => return fail(format!("operator `{}` cannot be applied to {t}", op.symbol())),
            };
            Ok((Expr::binary(*op, le, re), result))
        }
        Expr::Ite { condition, consequence, alternative } => {
            let (c, ct) = type_expr(condition, env)?;
            if ct != ValueType::Bool {
                return fail(format!("if-condition has type {ct}, expected Bool"));
            }
            let a = type_expr(consequence, env)?;
            let b = type_expr(alternative, env)?;
            let (at, bt) = (a.1.clone(), b.1.clone());
            let Some((ae, be, t)) = unify(a, b) else {
                return fail(format!("if-branches have types {at} and {bt}"));
            };
            Ok((Expr::ite(c, ae, be), t))
        }
        Expr::TupleProj { operand, index } => {
            let (inner, t) = type_expr(operand, env)?;
            match &t {
                ValueType::Tuple(elems) if *index < elems.len() => {
                    let elem = elems[*index].clone();
                    Ok((Expr::TupleProj { operand: Box::new(inner), index: *index }, elem))
                }
                _ => fail(format!("cannot project `.{index}` out of {t}")),
            }
        }
    }
}

fn expect_type(stream: &str, typed: (Expr, ValueType), want: &ValueType) -> Result<Expr, AnalysisError> {
    let (e, have) = typed;
    coerce(e, &have, want).ok_or_else(|| AnalysisError::ValueType {
        stream: stream.to_string(),
        message: format!("expression has type {have}, expected {want}"),
    })
}

fn value_error(stream: &str, failure: TypeFailure) -> AnalysisError {
    match failure {
        TypeFailure::Error(message) => AnalysisError::ValueType { stream: stream.to_string(), message },
        TypeFailure::Pending => AnalysisError::ValueType {
            stream: stream.to_string(),
            message: "value type depends on itself; add a type annotation".into(),
        },
    }
}

pub(crate) fn trigger_name(index: usize) -> String {
    format!("trigger#{index}")
}

fn infer_value_types(spec: &mut Spec) -> Result<Vec<ValueType>, AnalysisError> {
    let mut types: HashMap<String, ValueType> = HashMap::new();
    for input in &spec.inputs {
        types.insert(input.name.clone(), input.ty.clone());
    }
    for out in &spec.outputs {
        if let Some(t) = &out.ty {
            types.insert(out.name.clone(), t.clone());
        }
    }

    // Resolve unannotated outputs until nothing changes; accesses with a
    // default let cyclic definitions settle on the default's type.
    loop {
        let mut progress = false;
        for out in &spec.outputs {
            if types.contains_key(&out.name) {
                continue;
            }
            let env = Env { types: &types, provisional: true };
            match type_expr(&out.expr, &env) {
                Ok((_, t)) => {
                    types.insert(out.name.clone(), t);
                    progress = true;
                }
                Err(TypeFailure::Pending) => {}
                Err(e) => return Err(value_error(&out.name, e)),
            }
        }
        if !progress {
            break;
        }
    }

    let env = Env { types: &types, provisional: false };
    let mut out_types = Vec::with_capacity(spec.outputs.len());
    for out in &mut spec.outputs {
        let typed = type_expr(&out.expr, &env).map_err(|e| value_error(&out.name, e))?;
        let want = types.get(&out.name).cloned().ok_or_else(|| value_error(&out.name, TypeFailure::Pending))?;
        out.expr = expect_type(&out.name, typed, &want)?;
        if let Some(filter) = &out.filter {
            let typed = type_expr(filter, &env).map_err(|e| value_error(&out.name, e))?;
            out.filter = Some(expect_type(&out.name, typed, &ValueType::Bool)?);
        }
        out_types.push(want);
    }
    for (i, trig) in spec.triggers.iter_mut().enumerate() {
        let name = trigger_name(i);
        let typed = type_expr(&trig.condition, &env).map_err(|e| value_error(&name, e))?;
        trig.condition = expect_type(&name, typed, &ValueType::Bool)?;
        if let Some(filter) = &trig.filter {
            let typed = type_expr(filter, &env).map_err(|e| value_error(&name, e))?;
            trig.filter = Some(expect_type(&name, typed, &ValueType::Bool)?);
        }
    }
    Ok(out_types)
}

// ---------------------------------------------------------------------------
// pacing types

/// Targets of synchronous accesses in an expression and optional filter,
/// excluding reads of the stream itself.
fn sync_targets<'a>(name: Option<&str>, expr: &'a Expr, filter: Option<&'a Expr>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for e in std::iter::once(expr).chain(filter) {
        for (target, kind) in e.accesses() {
            if kind.is_sync() && Some(target) != name && !out.contains(&target) {
                out.push(target);
            }
        }
    }
    out
}

/// Event-based targets give the conjunction of their activation conditions;
/// periodic targets give the fastest frequency dividing all of theirs.
fn infer_from_targets<'a>(
    name: &str,
    targets: impl Iterator<Item = (&'a str, &'a PacingType)>,
) -> Result<PacingType, AnalysisError> {
    let mut acc: Option<PacingType> = None;
    for (target, p) in targets {
        acc = Some(match (acc, p) {
            (None, p) => p.clone(),
            (Some(PacingType::EventBased(a)), PacingType::EventBased(b)) => PacingType::EventBased(ac_and(&a, b)),
            (Some(PacingType::Periodic(a)), PacingType::Periodic(b)) => PacingType::Periodic(freq_gcd(a, *b)),
            _ => return Err(AnalysisError::KindMix { stream: name.to_string(), target: target.to_string() }),
        });
    }
    Ok(acc.expect("non-empty targets"))
}

fn freq_gcd(a: Frequency, b: Frequency) -> Frequency {
    use num_integer::Integer;
    Frequency::new(a.numerator().gcd(&b.numerator()), a.denominator().lcm(&b.denominator()))
        .expect("positive frequency")
}

fn infer_pacing(
    spec: &Spec,
    value_types: &[ValueType],
) -> Result<(Vec<StreamType>, Vec<StreamType>), AnalysisError> {
    let mut pacing: HashMap<String, PacingType> = HashMap::new();
    for input in &spec.inputs {
        pacing.insert(input.name.clone(), PacingType::EventBased(ActivationCondition::input(&input.name)));
    }

    // (name, annotation, expression, filter) for outputs followed by triggers.
    let nodes: Vec<(String, Option<&PacingType>, &Expr, Option<&Expr>)> = spec
        .outputs
        .iter()
        .map(|o| (o.name.clone(), o.pacing.as_ref(), &o.expr, o.filter.as_ref()))
        .chain(
            spec.triggers
                .iter()
                .enumerate()
                .map(|(i, t)| (trigger_name(i), t.pacing.as_ref(), &t.condition, t.filter.as_ref())),
        )
        .collect();

    let mut resolved: Vec<Option<(PacingType, Provenance)>> = nodes
        .iter()
        .map(|(_, ann, _, _)| ann.map(|p| ((*p).clone(), Provenance::Annotated)))
        .collect();
    for ((name, _, _, _), r) in nodes.iter().zip(&resolved) {
        if let Some((p, _)) = r {
            pacing.insert(name.clone(), p.clone());
        }
    }

    loop {
        let mut progress = false;
        for (i, (name, _, expr, filter)) in nodes.iter().enumerate() {
            if resolved[i].is_some() {
                continue;
            }
            let targets = sync_targets(Some(name), expr, *filter);
            if targets.is_empty() {
                return Err(AnalysisError::NoSyncAccess(name.clone()));
            }
            if !targets.iter().all(|t| pacing.contains_key(*t)) {
                continue;
            }
            let p = infer_from_targets(name, targets.iter().map(|t| (*t, &pacing[*t])))?;
            pacing.insert(name.clone(), p.clone());
            resolved[i] = Some((p, Provenance::Inferred));
            progress = true;
        }
        if !progress {
            break;
        }
    }
    let unresolved: Vec<String> =
        nodes.iter().zip(&resolved).filter(|(_, r)| r.is_none()).map(|(n, _)| n.0.clone()).collect();
    if !unresolved.is_empty() {
        return Err(AnalysisError::CyclicInference(unresolved));
    }

    for (name, _, expr, filter) in &nodes {
        let own = &pacing[name];
        for t in sync_targets(Some(name), expr, *filter) {
            let target = &pacing[t];
            if own.kind() != target.kind() {
                return Err(AnalysisError::KindMix { stream: name.clone(), target: t.to_string() });
            }
            if !own.can_access_sync(target)? {
                return Err(AnalysisError::Incompatible {
                    stream: name.clone(),
                    pacing: own.to_string(),
                    target: t.to_string(),
                    target_pacing: target.to_string(),
                });
            }
        }
        if own.kind() == PacingKind::EventBased {
            if let PacingType::EventBased(ac) = own {
                if let Some(leaf) = ac.leaves().into_iter().find(|l| spec.input(l).is_none()) {
                    return Err(AnalysisError::UnknownActivationInput { stream: name.clone(), input: leaf.to_string() });
                }
            }
        }
    }

    let mut types = resolved.into_iter().map(|r| r.expect("resolved"));
    let outputs = value_types
        .iter()
        .map(|vt| {
            let (pacing, provenance) = types.next().unwrap();
            StreamType { value_type: vt.clone(), pacing, provenance }
        })
        .collect();
    let triggers = types.map(|(pacing, provenance)| StreamType { value_type: ValueType::Bool, pacing, provenance }).collect();
    Ok((outputs, triggers))
}
