use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use super::compile::{CAc, CExpr, Resolver};
use super::{EvalStats, InterpError, NodeStats, Observation, RunOptions, RunResult, Trace};
use crate::analysis::{
    build_dependency_graph, compute_schedule, evaluation_order, memory_bounds, Node, Schedule, StreamRef, TypedSpec,
};
use crate::ir::{apply_binary, apply_unary, Aggregation, BinaryOp, Fault, PacingType, Rational, Value, ValueType};

enum Pacer {
    Event(CAc),
    Periodic,
}

#[derive(Clone, Copy, PartialEq)]
enum StepKind {
    Filter,
    Stream,
}

struct Step {
    /// Index into outputs followed by triggers.
    unit: usize,
    kind: StepKind,
    expr: CExpr,
}

/// A specification compiled for repeated execution.
pub struct Monitor {
    input_count: usize,
    output_count: usize,
    slot_names: Vec<String>,
    slot_types: Vec<ValueType>,
    trigger_messages: Vec<String>,
    pacers: Vec<Pacer>,
    steps: Vec<Step>,
    capacity: Vec<usize>,
    windows: Vec<(usize, Rational)>,
    windows_of_slot: Vec<Vec<usize>>,
    schedule: Schedule,
    due_at: Vec<Vec<bool>>,
}

struct State {
    history: Vec<VecDeque<Value>>,
    extended: Vec<u64>,
    windows: Vec<VecDeque<(Rational, Value)>>,
    cycle: u64,
    now: Rational,
}

impl Monitor {
    pub fn new(ts: &TypedSpec) -> Result<Monitor, InterpError> {
        let spec = ts.spec();
        let graph = build_dependency_graph(ts);
        let order = evaluation_order(&graph)?;
        let bounds = memory_bounds(&graph);
        let schedule = compute_schedule(ts);

        let ni = spec.inputs.len();
        let no = spec.outputs.len();
        let slot_names: Vec<String> =
            spec.inputs.iter().map(|i| i.name.clone()).chain(spec.outputs.iter().map(|o| o.name.clone())).collect();
        let slots: HashMap<String, usize> = slot_names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let slot_types: Vec<ValueType> = spec
            .inputs
            .iter()
            .map(|i| i.ty.clone())
            .chain(ts.output_types().iter().map(|t| t.value_type.clone()))
            .collect();
        let input_index: HashMap<String, usize> =
            spec.inputs.iter().enumerate().map(|(i, d)| (d.name.clone(), i)).collect();

        let pacers = ts
            .output_types()
            .iter()
            .chain(ts.trigger_types())
            .map(|t| match &t.pacing {
                PacingType::EventBased(ac) => Pacer::Event(CAc::compile(ac, &input_index)),
                PacingType::Periodic(_) => Pacer::Periodic,
            })
            .collect();

        let mut resolver = Resolver { slots: &slots, windows: Vec::new() };
        let mut steps = Vec::new();
        for id in order.sequence() {
            let (unit, kind, expr) = match graph.nodes[id] {
                Node::Stream(StreamRef::Input(_)) => continue,
                Node::Stream(StreamRef::Output(i)) => (i, StepKind::Stream, &spec.outputs[i].expr),
                Node::Filter(StreamRef::Output(i)) => {
                    (i, StepKind::Filter, spec.outputs[i].filter.as_ref().expect("filter node"))
                }
                Node::Stream(StreamRef::Trigger(i)) => (no + i, StepKind::Stream, &spec.triggers[i].condition),
                Node::Filter(StreamRef::Trigger(i)) => {
                    (no + i, StepKind::Filter, spec.triggers[i].filter.as_ref().expect("filter node"))
                }
                Node::Filter(StreamRef::Input(_)) => unreachable!("inputs have no filter"),
            };
            steps.push(Step { unit, kind, expr: resolver.compile(expr) });
        }
        let windows = resolver.windows;
        let mut windows_of_slot = vec![Vec::new(); slot_names.len()];
        for (w, (slot, _)) in windows.iter().enumerate() {
            windows_of_slot[*slot].push(w);
        }

        let units = no + spec.triggers.len();
        let due_at = schedule
            .deadlines
            .iter()
            .map(|d| {
                let mut due = vec![false; units];
                for s in &d.due {
                    match s {
                        StreamRef::Output(i) => due[*i] = true,
                        StreamRef::Trigger(i) => due[no + i] = true,
                        StreamRef::Input(_) => {}
                    }
                }
                due
            })
            .collect();

        Ok(Monitor {
            input_count: ni,
            output_count: no,
            capacity: slot_names.iter().map(|n| bounds[n]).collect(),
            slot_names,
            slot_types,
            trigger_messages: spec.triggers.iter().map(|t| t.message.clone()).collect(),
            pacers,
            steps,
            windows,
            windows_of_slot,
            schedule,
            due_at,
        })
    }

    pub fn run(&self, trace: &Trace, options: &RunOptions) -> Result<RunResult, InterpError> {
        let started = Instant::now();
        let columns: Vec<usize> = trace
            .inputs
            .iter()
            .map(|name| {
                self.slot_names[..self.input_count]
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| InterpError::Trace(format!("trace column `{name}` is not an input")))
            })
            .collect::<Result<_, _>>()?;

        let node_stats = |names: &[String]| {
            names.iter().map(|n| NodeStats { name: n.clone(), ..NodeStats::default() }).collect::<Vec<_>>()
        };
        let trigger_names: Vec<String> = (0..self.trigger_messages.len()).map(|i| format!("trigger#{i}")).collect();
        let mut stats = EvalStats {
            inputs: node_stats(&self.slot_names[..self.input_count]),
            outputs: node_stats(&self.slot_names[self.input_count..]),
            triggers: node_stats(&trigger_names),
            peak_history: vec![0; self.slot_names.len()],
            peak_window: vec![0; self.windows.len()],
            ..EvalStats::default()
        };
        let mut state = State {
            history: self.capacity.iter().map(|&c| VecDeque::with_capacity(c)).collect(),
            extended: vec![u64::MAX; self.slot_names.len()],
            windows: vec![VecDeque::new(); self.windows.len()],
            cycle: 0,
            now: Rational::from_integer(0),
        };
        let mut observations = Vec::new();

        let end = options.end.unwrap_or_else(|| trace.duration());
        let hyper = self.schedule.hyperperiod;
        let mut round: i64 = 0;
        let mut slot = 0;
        let next_deadline = |round: i64, slot: usize| -> Option<Rational> {
            let d = self.schedule.deadlines.get(slot)?;
            let t = d.offset + hyper * round;
            (t <= end).then_some(t)
        };

        let mut covered = vec![false; self.input_count];
        let mut due = vec![false; self.pacers.len()];
        let mut pass = vec![true; self.pacers.len()];
        let mut ei = 0;
        let mut last_time: Option<Rational> = None;
        loop {
            let te = trace.events.get(ei).map(|e| e.time);
            let td = next_deadline(round, slot);
            let (event, deadline) = match (te, td) {
                (None, None) => break,
                (Some(te), Some(td)) if td < te => (None, Some(slot)),
                (Some(te), Some(td)) if td == te => (Some(ei), Some(slot)),
                (Some(_), _) => (Some(ei), None),
                (None, Some(_)) => (None, Some(slot)),
            };
            let time = match (event, deadline) {
                (Some(e), _) => trace.events[e].time,
                (None, _) => td.unwrap(),
            };
            if let Some(e) = event {
                if last_time.is_some_and(|t| time < t) {
                    return Err(InterpError::Trace(format!("event {e} goes back in time")));
                }
                last_time = Some(time);
                ei += 1;
            }
            if deadline.is_some() {
                slot += 1;
                if slot == self.schedule.deadlines.len() {
                    slot = 0;
                    round += 1;
                }
            }

            state.cycle += 1;
            state.now = time;
            stats.cycle_count += 1;
            covered.fill(false);
            if let Some(e) = event {
                let ev = &trace.events[e];
                let mut any = false;
                for (col, value) in ev.values.iter().enumerate() {
                    let Some(value) = value else { continue };
                    let input = columns[col];
                    if value.ty() != self.slot_types[input] {
                        return Err(InterpError::Trace(format!(
                            "event {e}: `{}` expects {}, got {value}",
                            self.slot_names[input], self.slot_types[input]
                        )));
                    }
                    any = true;
                    covered[input] = true;
                    self.extend(&mut state, &mut stats, input, value.clone());
                    stats.inputs[input].eval_count += 1;
                }
                if !any {
                    return Err(InterpError::Trace(format!("event {e} covers no input")));
                }
            }
            for (u, pacer) in self.pacers.iter().enumerate() {
                due[u] = match pacer {
                    Pacer::Event(ac) => event.is_some() && ac.eval(&covered),
                    Pacer::Periodic => deadline.is_some_and(|j| self.due_at[j][u]),
                };
            }
            pass.fill(true);
            let fired = observations.len();
            for step in &self.steps {
                let u = step.unit;
                if !due[u] || !pass[u] {
                    continue;
                }
                let value = self.eval(&step.expr, &mut state).map_err(|fault| InterpError::Fault {
                    stream: self.unit_name(u),
                    time,
                    fault,
                })?;
                let node = if u < self.output_count {
                    &mut stats.outputs[u]
                } else {
                    &mut stats.triggers[u - self.output_count]
                };
                match step.kind {
                    StepKind::Filter => {
                        node.filter_checks += 1;
                        if value != Value::Bool(true) {
                            node.filter_suppressed += 1;
                            pass[u] = false;
                        }
                    }
                    StepKind::Stream => {
                        node.eval_count += 1;
                        if u < self.output_count {
                            self.extend(&mut state, &mut stats, self.input_count + u, value);
                        } else if value == Value::Bool(true) {
                            let trigger = u - self.output_count;
                            observations.push(Observation {
                                time,
                                trigger,
                                message: self.trigger_messages[trigger].clone(),
                            });
                        }
                    }
                }
            }
            // Observations of one instant are reported in declaration order.
            observations[fired..].sort_by_key(|o| o.trigger);
        }
        stats.wall_time_ns = started.elapsed().as_nanos() as u64;
        Ok(RunResult { observations, stats })
    }

    fn unit_name(&self, unit: usize) -> String {
        if unit < self.output_count {
            self.slot_names[self.input_count + unit].clone()
        } else {
            format!("trigger#{}", unit - self.output_count)
        }
    }

    fn extend(&self, st: &mut State, stats: &mut EvalStats, slot: usize, value: Value) {
        for &w in &self.windows_of_slot[slot] {
            let buf = &mut st.windows[w];
            buf.push_back((st.now, value.clone()));
            let start = st.now - self.windows[w].1;
            while buf.front().is_some_and(|(t, _)| *t < start) {
                buf.pop_front();
            }
            stats.peak_window[w] = stats.peak_window[w].max(buf.len());
        }
        let hist = &mut st.history[slot];
        if hist.len() == self.capacity[slot] {
            hist.pop_front();
        }
        hist.push_back(value);
        st.extended[slot] = st.cycle;
        stats.peak_history[slot] = stats.peak_history[slot].max(hist.len());
    }

    /// Value of a current-cycle read. A stream that was not extended in this
    /// cycle, e.g. because its filter was false, yields its latest value, or
    /// the default of its type if it never produced one.
    fn current(&self, st: &State, slot: usize) -> Value {
        match st.history[slot].back() {
            Some(v) => v.clone(),
            None => self.slot_types[slot].default_value(),
        }
    }

    /// The `back`-th extension strictly before the current cycle.
    fn past(&self, st: &State, slot: usize, back: usize, default: &Value) -> Value {
        let hist = &st.history[slot];
        let skip = usize::from(st.extended[slot] == st.cycle);
        let from_end = back - 1 + skip;
        if from_end < hist.len() {
            hist[hist.len() - 1 - from_end].clone()
        } else {
            default.clone()
        }
    }

    fn eval(&self, e: &CExpr, st: &mut State) -> Result<Value, Fault> {
        Ok(match e {
            CExpr::Lit(v) => v.clone(),
            CExpr::Current(slot) => self.current(st, *slot),
            CExpr::Past { slot, back, default } => self.past(st, *slot, *back, default),
            CExpr::Hold { slot, default } => st.history[*slot].back().cloned().unwrap_or_else(|| default.clone()),
            CExpr::Window { window, aggregation, default } => self.aggregate(st, *window, *aggregation, default)?,
            CExpr::Unary(op, a) => apply_unary(*op, &self.eval(a, st)?)?,
            CExpr::Binary(BinaryOp::And, a, b) => match self.eval(a, st)? {
                Value::Bool(false) => Value::Bool(false),
                _ => self.eval(b, st)?,
            },
            CExpr::Binary(BinaryOp::Or, a, b) => match self.eval(a, st)? {
                Value::Bool(true) => Value::Bool(true),
                _ => self.eval(b, st)?,
            },
            CExpr::Binary(op, a, b) => {
                let l = self.eval(a, st)?;
                let r = self.eval(b, st)?;
                apply_binary(*op, &l, &r)?
            }
            CExpr::Ite(c, a, b) => match self.eval(c, st)? {
                Value::Bool(true) => self.eval(a, st)?,
                Value::Bool(false) => self.eval(b, st)?,
                _ => return Err(Fault::Type("if-condition")),
            },
            CExpr::Proj(a, i) => match self.eval(a, st)? {
                Value::Tuple(mut vs) if *i < vs.len() => vs.swap_remove(*i),
                _ => return Err(Fault::Type("tuple projection")),
            },
        })
    }

    fn aggregate(
        &self,
        st: &mut State,
        window: usize,
        aggregation: Aggregation,
        default: &Option<Value>,
    ) -> Result<Value, Fault> {
        let (slot, duration) = self.windows[window];
        let start = st.now - duration;
        let buf = &mut st.windows[window];
        while buf.front().is_some_and(|(t, _)| *t < start) {
            buf.pop_front();
        }
        let values = buf.iter().map(|(_, v)| v);
        let elem = &self.slot_types[slot];
        let empty = || default.clone().ok_or(Fault::Type("empty window without default"));
        Ok(match aggregation {
            Aggregation::Count => Value::Int(buf.len() as i64),
            Aggregation::Exists => Value::Bool(values.into_iter().any(|v| *v == Value::Bool(true))),
            Aggregation::Sum => {
                let zero = match elem {
                    ValueType::Int64 => Value::Int(0),
                    _ => Value::Float(0.0),
                };
                let mut acc = zero;
                for v in values {
                    acc = apply_binary(BinaryOp::Add, &acc, v)?;
                }
                acc
            }
            Aggregation::Avg => {
                if buf.is_empty() {
                    return empty();
                }
                let sum: f64 = values
                    .map(|v| match v {
                        Value::Int(i) => *i as f64,
                        Value::Float(f) => *f,
                        _ => 0.0,
                    })
                    .sum();
                Value::Float(sum / buf.len() as f64)
            }
            Aggregation::Min | Aggregation::Max => {
                let op = if aggregation == Aggregation::Min { BinaryOp::Lt } else { BinaryOp::Gt };
                // The first element wins unless a later one compares strictly better.
                let mut best: Option<&Value> = None;
                for v in values {
                    best = match best {
                        Some(b) if apply_binary(op, v, b)? != Value::Bool(true) => Some(b),
                        _ => Some(v),
                    };
                }
                match best {
                    Some(b) => b.clone(),
                    None => return empty(),
                }
            }
        })
    }
}
