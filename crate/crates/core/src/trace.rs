//! Line-delimited JSON trace files.
//!
//! Each line is an object with a `"time"` key holding exact decimal (or
//! `n/d`) seconds and one key per covered input. Tuples are arrays.

use std::fmt::Write as _;

use serde_json::Value as Json;
use thiserror::Error;

use crate::interp::{Event, Trace};
use crate::ir::{format_rational, parse_rational, Value, ValueType};
use crate::parser::Spec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("cannot write {0}: only finite floats are representable")]
    NonFinite(String),
}

fn json_to_value(j: &Json, ty: &ValueType) -> Option<Value> {
    Some(match (ty, j) {
        (ValueType::Bool, Json::Bool(b)) => Value::Bool(*b),
        (ValueType::Int64, Json::Number(n)) => Value::Int(n.as_i64()?),
        (ValueType::Float64, Json::Number(n)) => Value::Float(n.as_f64()?),
        (ValueType::Tuple(types), Json::Array(items)) if items.len() == types.len() => {
            Value::Tuple(items.iter().zip(types).map(|(i, t)| json_to_value(i, t)).collect::<Option<_>>()?)
        }
        _ => return None,
    })
}

fn write_value(out: &mut String, v: &Value) -> Result<(), TraceError> {
    match v {
        Value::Bool(b) => write!(out, "{b}").unwrap(),
        Value::Int(i) => write!(out, "{i}").unwrap(),
        Value::Float(f) if !f.is_finite() => return Err(TraceError::NonFinite(v.to_string())),
        Value::Float(f) => out.push_str(&serde_json::to_string(f).expect("finite float")),
        Value::Tuple(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item)?;
            }
            out.push(']');
        }
    }
    Ok(())
}

/// Parses a trace for `spec`. Columns follow the spec's input order.
pub fn read_trace(spec: &Spec, text: &str) -> Result<Trace, TraceError> {
    let mut trace = Trace::new(spec.inputs.iter().map(|i| i.name.clone()).collect());
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| TraceError::Record { line: line_no, message };
        let obj: serde_json::Map<String, Json> =
            serde_json::from_str(line).map_err(|e| err(format!("invalid record: {e}")))?;
        let time = match obj.get("time") {
            Some(Json::String(s)) => parse_rational(s),
            Some(Json::Number(n)) => parse_rational(&n.to_string()),
            _ => None,
        }
        .ok_or_else(|| err("missing or malformed \"time\"".into()))?;
        if trace.events.last().is_some_and(|e| e.time > time) {
            return Err(err("time goes backwards".into()));
        }
        let mut values = vec![None; spec.inputs.len()];
        for (key, j) in &obj {
            if key == "time" {
                continue;
            }
            let idx = spec.inputs.iter().position(|i| i.name == *key).ok_or_else(|| err(format!("unknown input `{key}`")))?;
            let ty = &spec.inputs[idx].ty;
            values[idx] = Some(json_to_value(j, ty).ok_or_else(|| err(format!("`{key}` is not a {ty}")))?);
        }
        if values.iter().all(Option::is_none) {
            return Err(err("record covers no input".into()));
        }
        trace.events.push(Event { time, values });
    }
    Ok(trace)
}

/// Renders a trace, one record per line.
pub fn write_trace(trace: &Trace) -> Result<String, TraceError> {
    let mut out = String::new();
    for event in &trace.events {
        write!(out, "{{\"time\":\"{}\"", format_rational(event.time)).unwrap();
        for (name, v) in trace.inputs.iter().zip(&event.values) {
            if let Some(v) = v {
                out.push(',');
                out.push_str(&serde_json::to_string(name).expect("string"));
                out.push(':');
                write_value(&mut out, v)?;
            }
        }
        out.push_str("}\n");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Rational;
    use crate::parser::parse_spec;

    #[test]
    fn round_trip() {
        let spec = parse_spec("input a: Int64\ninput p: (Float64, Bool)\ninput f: Float64").unwrap();
        let text = "{\"time\":\"0.01\",\"a\":3,\"p\":[0.5,true]}\n{\"time\":\"1/3\",\"f\":-0.1}\n";
        let trace = read_trace(&spec, text).unwrap();
        assert_eq!(trace.events[1].time, Rational::new(1, 3));
        assert_eq!(trace.events[0].values[1], Some(Value::Tuple(vec![Value::Float(0.5), Value::Bool(true)])));
        assert_eq!(write_trace(&trace).unwrap(), text);
    }

    #[test]
    fn rejects_bad_records() {
        let spec = parse_spec("input a: Int64").unwrap();
        for bad in [
            "{\"time\":\"1\",\"b\":1}",
            "{\"time\":\"1\"}",
            "{\"a\":1}",
            "{\"time\":\"1\",\"a\":1.5}",
            "{\"time\":\"2\",\"a\":1}\n{\"time\":\"1\",\"a\":1}",
            "not json",
        ] {
            assert!(read_trace(&spec, bad).is_err(), "{bad}");
        }
    }
}
