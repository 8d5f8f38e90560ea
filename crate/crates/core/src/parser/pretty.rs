use std::fmt::Write;

use super::ast::Spec;
use crate::ir::{format_rational, BinaryOp, Expr, PacingType, Rational, UnaryOp, Value};

/// Renders a specification in the concrete syntax accepted by
/// [`parse_spec`](super::parse_spec).
pub fn pretty(spec: &Spec) -> String {
    let mut out = String::new();
    for input in &spec.inputs {
        writeln!(out, "input {}: {}", input.name, input.ty).unwrap();
    }
    for output in &spec.outputs {
        write!(out, "output {}", output.name).unwrap();
        if let Some(ty) = &output.ty {
            write!(out, ": {ty}").unwrap();
        }
        write_annotations(&mut out, output.pacing.as_ref(), output.filter.as_ref());
        writeln!(out, " := {}", pretty_expr(&output.expr)).unwrap();
    }
    for trigger in &spec.triggers {
        out.push_str("trigger");
        write_annotations(&mut out, trigger.pacing.as_ref(), trigger.filter.as_ref());
        writeln!(out, " {} {}", pretty_expr(&trigger.condition), quote(&trigger.message)).unwrap();
    }
    out
}

fn write_annotations(out: &mut String, pacing: Option<&PacingType>, filter: Option<&Expr>) {
    if let Some(p) = pacing {
        write!(out, " {p}").unwrap();
    }
    if let Some(f) = filter {
        write!(out, " {{ filter {} }}", pretty_expr(f)).unwrap();
    }
}

fn quote(message: &str) -> String {
    let mut s = String::with_capacity(message.len() + 2);
    s.push('"');
    for c in message.chars() {
        match c {
            '"' => s.push_str("\\\""),
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\t' => s.push_str("\\t"),
            c => s.push(c),
        }
    }
    s.push('"');
    s
}

pub fn format_duration(seconds: Rational) -> String {
    if seconds.is_integer() {
        return format!("{}s", seconds.numer());
    }
    let millis = seconds * Rational::from_integer(1000);
    if millis.is_integer() {
        return format!("{}ms", millis.numer());
    }
    format!("{}s", format_rational(seconds))
}

const PREC_ITE: u8 = 0;
const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_CMP: u8 = 3;
const PREC_ADD: u8 = 4;
const PREC_MUL: u8 = 5;
const PREC_UNARY: u8 = 6;
const PREC_POSTFIX: u8 = 7;

fn binary_prec(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Or => PREC_OR,
        BinaryOp::And => PREC_AND,
        op if op.is_comparison() => PREC_CMP,
        BinaryOp::Add | BinaryOp::Sub => PREC_ADD,
        _ => PREC_MUL,
    }
}

fn is_number(v: &Value) -> bool {
    matches!(v, Value::Int(_) | Value::Float(_))
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Ite { .. } => PREC_ITE,
        Expr::Binary { op, .. } => binary_prec(*op),
        Expr::Unary { .. } => PREC_UNARY,
        Expr::Literal(v) if is_number(v) && v.to_string().starts_with('-') => PREC_UNARY,
        _ => PREC_POSTFIX,
    }
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, PREC_ITE);
    out
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    if prec(e) < min_prec {
        out.push('(');
        write_expr(out, e, PREC_ITE);
        out.push(')');
        return;
    }
    match e {
        Expr::Literal(v) => write!(out, "{v}").unwrap(),
        Expr::Sync { target, offset: 0, .. } => out.push_str(target),
        Expr::Sync { target, offset, default } => {
            write!(out, "{target}.offset(by: {offset})").unwrap();
            if let Some(d) = default {
                write!(out, ".defaults(to: {d})").unwrap();
            }
        }
        Expr::Hold { target, default } => write!(out, "{target}.hold(or: {default})").unwrap(),
        Expr::Window { target, duration, aggregation, default } => {
            write!(out, "{target}.aggregate(over: {}, using: {aggregation})", format_duration(*duration)).unwrap();
            if let Some(d) = default {
                write!(out, ".defaults(to: {d})").unwrap();
            }
        }
        Expr::Unary { op: UnaryOp::Not, operand } => {
            out.push('!');
            write_expr(out, operand, PREC_UNARY);
        }
        Expr::Unary { op: UnaryOp::Neg, operand } => {
            out.push('-');
            // A bare number after `-` would be read back as a negative literal.
            let min = if matches!(operand.as_ref(), Expr::Literal(v) if is_number(v)) { u8::MAX } else { PREC_UNARY };
            write_expr(out, operand, min);
        }
        Expr::Binary { op, lhs, rhs } => {
            let p = binary_prec(*op);
            let lhs_min = if op.is_comparison() { p + 1 } else { p };
            write_expr(out, lhs, lhs_min);
            write!(out, " {} ", op.symbol()).unwrap();
            write_expr(out, rhs, p + 1);
        }
        Expr::Ite { condition, consequence, alternative } => {
            out.push_str("if ");
            write_expr(out, condition, PREC_ITE);
            out.push_str(" then ");
            write_expr(out, consequence, PREC_ITE);
            out.push_str(" else ");
            write_expr(out, alternative, PREC_ITE);
        }
        Expr::TupleProj { operand, index } => {
            let min = if matches!(operand.as_ref(), Expr::Literal(v) if is_number(v)) { u8::MAX } else { PREC_POSTFIX };
            write_expr(out, operand, min);
            write!(out, ".{index}").unwrap();
        }
    }
}
