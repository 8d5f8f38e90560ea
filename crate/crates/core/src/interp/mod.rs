//! Trace-driven reference interpreter.

mod compile;
mod engine;

#[cfg(test)]
mod tests;

pub use engine::Monitor;

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{AnalysisError, TypedSpec};
use crate::ir::{format_rational, Fault, Rational, Value};

/// One timestamped input record. `values[i]` belongs to `Trace::inputs[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: Rational,
    pub values: Vec<Option<Value>>,
}

/// A sequence of events over a fixed list of input names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub inputs: Vec<String>,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(inputs: Vec<String>) -> Self {
        Trace { inputs, events: Vec::new() }
    }

    /// Appends an event given as `(input, value)` pairs.
    pub fn push(&mut self, time: Rational, values: &[(&str, Value)]) {
        let mut row = vec![None; self.inputs.len()];
        for (name, v) in values {
            let i = self.inputs.iter().position(|n| n == name).unwrap_or_else(|| panic!("unknown input {name}"));
            row[i] = Some(v.clone());
        }
        self.events.push(Event { time, values: row });
    }

    pub fn duration(&self) -> Rational {
        self.events.last().map_or(Rational::from_integer(0), |e| e.time)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// A trigger firing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Observation {
    pub time: Rational,
    pub trigger: usize,
    pub message: String,
}

impl std::fmt::Display for Observation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}\ttrigger#{}\t{}", format_rational(self.time), self.trigger, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NodeStats {
    pub name: String,
    pub eval_count: u64,
    pub filter_checks: u64,
    pub filter_suppressed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EvalStats {
    pub inputs: Vec<NodeStats>,
    pub outputs: Vec<NodeStats>,
    pub triggers: Vec<NodeStats>,
    pub cycle_count: u64,
    pub wall_time_ns: u64,
    /// Largest number of values retained per input and output for offset
    /// access, in declaration order.
    pub peak_history: Vec<usize>,
    /// Largest length reached by each window buffer.
    pub peak_window: Vec<usize>,
}

impl EvalStats {
    /// Evaluations of outputs and triggers, the cost measure the optimizer
    /// tries to reduce.
    pub fn total_evaluations(&self) -> u64 {
        self.outputs.iter().chain(&self.triggers).map(|n| n.eval_count).sum()
    }

    pub fn output(&self, name: &str) -> Option<&NodeStats> {
        self.outputs.iter().find(|n| n.name == name)
    }

    pub fn wall_time(&self) -> Duration {
        Duration::from_nanos(self.wall_time_ns)
    }

    /// Line-oriented `key<TAB>value` rendering in the format of
    /// [`PassReport::to_kv`](crate::passes::PassReport::to_kv).
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: u64| {
            out.push_str(&format!("{k}\t{v}\n"));
        };
        line("cycle_count", self.cycle_count);
        line("total_evaluations", self.total_evaluations());
        line("wall_time_ns", self.wall_time_ns);
        for n in self.inputs.iter().chain(&self.outputs).chain(&self.triggers) {
            line(&format!("eval_count.{}", n.name), n.eval_count);
            if n.filter_checks > 0 {
                line(&format!("filter_checks.{}", n.name), n.filter_checks);
                line(&format!("filter_suppressed.{}", n.name), n.filter_suppressed);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub observations: Vec<Observation>,
    pub stats: EvalStats,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Last instant processed for periodic deadlines. Defaults to the time of
    /// the last event.
    pub end: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("runtime fault in `{stream}` at t={}: {fault}", format_rational(*.time))]
    Fault { stream: String, time: Rational, fault: Fault },
    #[error("trace error: {0}")]
    Trace(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Runs `ts` over `trace` with default options.
pub fn run(ts: &TypedSpec, trace: &Trace) -> Result<RunResult, InterpError> {
    Monitor::new(ts)?.run(trace, &RunOptions::default())
}
