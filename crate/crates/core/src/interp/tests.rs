use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::analysis::{build_dependency_graph, infer_types, memory_bounds};
use crate::ir::{Fault, Rational, Value};
use crate::parser::parse_spec;

fn typed(src: &str) -> TypedSpec {
    infer_types(&parse_spec(src).unwrap()).unwrap()
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

fn run_to(ts: &TypedSpec, trace: &Trace, end: Rational) -> RunResult {
    Monitor::new(ts).unwrap().run(trace, &RunOptions { end: Some(end) }).unwrap()
}

#[test]
fn gps_window_count() {
    let ts = typed(
        r#"
input gps: (Float64, Float64)
output gps_readings: Int64 @1Hz := gps.aggregate(over: 2s, using: count)
trigger gps_readings < 10 "GPS sensor frequency < 5Hz"
"#,
    );
    let mut trace = Trace::new(vec!["gps".into()]);
    for k in 0..5 {
        trace.push(r(2 * k + 1, 10), &[("gps", Value::Tuple(vec![Value::Float(1.0), Value::Float(2.0)]))]);
    }
    let res = run_to(&ts, &trace, Rational::from_integer(1));
    assert_eq!(
        res.observations,
        vec![Observation { time: Rational::from_integer(1), trigger: 0, message: "GPS sensor frequency < 5Hz".into() }]
    );
    assert_eq!(res.stats.output("gps_readings").unwrap().eval_count, 1);
    assert_eq!(res.stats.cycle_count, 6);
}

#[test]
fn ite_trigger() {
    let ts = typed(
        "
input pilots: Float64
input emergency: Bool
output check_1 @{emergency && pilots} := pilots > 0.0
output check_2 @{emergency && pilots} := pilots == 2.0
trigger if !emergency then check_1 else check_2 \"check\"
",
    );
    let mut trace = Trace::new(vec!["pilots".into(), "emergency".into()]);
    trace.push(r(1, 1), &[("pilots", Value::Float(2.0)), ("emergency", Value::Bool(true))]);
    let res = run(&ts, &trace).unwrap();
    assert_eq!(res.observations.len(), 1);
}

#[test]
fn refined_spec_skips_partial_events() {
    let ts = typed(
        "
input alt, lat: Float64
output check_alt @{alt && lat} := alt < 1000.0
output check_lat @{alt && lat} := lat >= 47.0 && lat <= 48.0
trigger !(check_alt && check_lat) \"out of bounds\"
",
    );
    let mut trace = Trace::new(vec!["alt".into(), "lat".into()]);
    trace.push(r(1, 1), &[("alt", Value::Float(5.0))]);
    let res = run(&ts, &trace).unwrap();
    assert_eq!(res.stats.total_evaluations(), 0);
    assert_eq!(res.stats.inputs[0].eval_count, 1);
    assert_eq!(res.stats.inputs[1].eval_count, 0);
}

#[test]
fn offsets_read_before_current_cycle() {
    let src = "
input a: Int64
output n @{a} := n.offset(by: -1).defaults(to: 0) + 1
output f { filter a > 0 } := a
output pf @{a} := f.offset(by: -1).defaults(to: -1)
trigger @{a} pf == 2 \"pf 2\"
trigger @{a} n == 3 \"n 3\"
";
    let mut trace = Trace::new(vec!["a".into()]);
    for (t, v) in [(1, 2), (2, 5), (3, -1), (4, 7)] {
        trace.push(r(t, 1), &[("a", Value::Int(v))]);
    }
    let res = run(&typed(src), &trace).unwrap();
    // t=2: f extended with 5, one back is 2. t=3: f suppressed, so the latest
    // extension before this cycle (5) is one back. t=4: one back from 7 is 5.
    let got: Vec<(Rational, usize)> = res.observations.iter().map(|o| (o.time, o.trigger)).collect();
    assert_eq!(got, vec![(r(2, 1), 0), (r(3, 1), 1)]);
    assert_eq!(res.stats.output("n").unwrap().eval_count, 4);
}

#[test]
fn current_read_of_suppressed_stream_is_stale() {
    let ts = typed(
        "
input a: Int64
output pos { filter a > 0 } := a
trigger @{a} pos == 5 \"five\"
",
    );
    let mut trace = Trace::new(vec!["a".into()]);
    trace.push(r(1, 1), &[("a", Value::Int(-1))]);
    trace.push(r(2, 1), &[("a", Value::Int(5))]);
    trace.push(r(3, 1), &[("a", Value::Int(-2))]);
    let res = run(&ts, &trace).unwrap();
    let times: Vec<Rational> = res.observations.iter().map(|o| o.time).collect();
    assert_eq!(times, vec![r(2, 1), r(3, 1)]);
    let s = res.stats.output("pos").unwrap();
    assert_eq!((s.eval_count, s.filter_checks, s.filter_suppressed), (1, 3, 2));
}

#[test]
fn trigger_filter_gates_emission() {
    let ts = typed("input a: Int64\ntrigger { filter a > 2 } a > 0 \"m\"");
    let mut trace = Trace::new(vec!["a".into()]);
    for (t, v) in [(1, 1), (2, 3), (3, 0)] {
        trace.push(r(t, 1), &[("a", Value::Int(v))]);
    }
    let res = run(&ts, &trace).unwrap();
    assert_eq!(res.observations.len(), 1);
    assert_eq!(res.observations[0].time, r(2, 1));
}

#[test]
fn faults_name_stream_and_time() {
    let ts = typed("input a: Int64\noutput q := 10 / a");
    let mut trace = Trace::new(vec!["a".into()]);
    trace.push(r(1, 2), &[("a", Value::Int(2))]);
    trace.push(r(3, 2), &[("a", Value::Int(0))]);
    match run(&ts, &trace) {
        Err(InterpError::Fault { stream, time, fault }) => {
            assert_eq!((stream.as_str(), time, fault), ("q", r(3, 2), Fault::DivisionByZero));
        }
        other => panic!("expected fault, got {other:?}"),
    }
    let ts = typed("input a: Int64\noutput q := a * a");
    let mut trace = Trace::new(vec!["a".into()]);
    trace.push(r(1, 1), &[("a", Value::Int(i64::MAX))]);
    assert!(matches!(run(&ts, &trace), Err(InterpError::Fault { fault: Fault::Overflow, .. })));
}

#[test]
fn trace_errors() {
    let ts = typed("input a: Int64\noutput q := a");
    let mut trace = Trace::new(vec!["a".into()]);
    trace.push(r(2, 1), &[("a", Value::Int(1))]);
    trace.push(r(1, 1), &[("a", Value::Int(1))]);
    assert!(matches!(run(&ts, &trace), Err(InterpError::Trace(_))));
    let mut trace = Trace::new(vec!["a".into()]);
    trace.push(r(1, 1), &[("a", Value::Float(1.0))]);
    assert!(matches!(run(&ts, &trace), Err(InterpError::Trace(_))));
    let mut trace = Trace::new(vec!["a".into()]);
    trace.push(r(1, 1), &[]);
    assert!(matches!(run(&ts, &trace), Err(InterpError::Trace(_))));
}

#[test]
fn aggregations() {
    let ts = typed(
        "
input x: Int64
input f: Float64
input b: Bool
output s @{x} := x.aggregate(over: 2s, using: sum)
output mn @{x} := x.aggregate(over: 2s, using: min).defaults(to: 0)
output mx @{x} := x.aggregate(over: 2s, using: max).defaults(to: 0)
output av @{x} := x.aggregate(over: 2s, using: avg).defaults(to: 0.0)
output e @{x} := b.aggregate(over: 2s, using: exists)
output fs @{x} := f.aggregate(over: 500ms, using: sum)
output fa @{x} := f.aggregate(over: 500ms, using: avg).defaults(to: -1.0)
trigger @{x} s == 9 && mn == 2 && mx == 4 && av == 3.0 && e && fs == 0.0 && fa == -1.0 \"ok\"
",
    );
    let mut trace = Trace::new(vec!["x".into(), "f".into(), "b".into()]);
    trace.push(r(0, 1), &[("x", Value::Int(100)), ("b", Value::Bool(true))]);
    trace.push(r(1, 1), &[("x", Value::Int(3)), ("f", Value::Float(1.5))]);
    trace.push(r(2, 1), &[("x", Value::Int(2)), ("b", Value::Bool(true))]);
    trace.push(r(3, 1), &[("x", Value::Int(4))]);
    let res = run(&ts, &trace).unwrap();
    let times: Vec<Rational> = res.observations.iter().map(|o| o.time).collect();
    assert_eq!(times, vec![r(3, 1)]);
}

#[test]
fn determinism() {
    let ts = typed(
        "
input a: Int64
input b: Int64
output s @{a} := a.aggregate(over: 1s, using: sum)
output p @2Hz := b.hold(or: 0)
trigger s > 50 \"big\"
trigger p > 50 \"p\"
",
    );
    let trace = random_trace(&mut ChaCha8Rng::seed_from_u64(3), &["a", "b"], 500);
    let m = Monitor::new(&ts).unwrap();
    let mut x = m.run(&trace, &RunOptions::default()).unwrap();
    let mut y = m.run(&trace, &RunOptions::default()).unwrap();
    x.stats.wall_time_ns = 0;
    y.stats.wall_time_ns = 0;
    assert_eq!(x, y);
    assert!(!x.observations.is_empty());
}

/// Random trace over Int64 inputs with timestamps at multiples of 1/10 and
/// random non-empty coverage (same-time events allowed).
fn random_trace(rng: &mut ChaCha8Rng, inputs: &[&str], len: usize) -> Trace {
    let mut trace = Trace::new(inputs.iter().map(|s| s.to_string()).collect());
    let mut t = 0i64;
    for _ in 0..len {
        t += rng.random_range(0..4);
        let mut values: Vec<Option<Value>> = inputs.iter().map(|_| None).collect();
        while values.iter().all(Option::is_none) {
            for v in values.iter_mut() {
                if rng.random_bool(0.5) {
                    *v = Some(Value::Int(rng.random_range(-100..100)));
                }
            }
        }
        trace.events.push(Event { time: Rational::new(t, 10), values });
    }
    trace
}

fn random_ac(rng: &mut ChaCha8Rng, inputs: &[&str], depth: u32) -> String {
    if depth == 0 || rng.random_bool(0.4) {
        return inputs[rng.random_range(0..inputs.len())].to_string();
    }
    let op = if rng.random_bool(0.5) { "&&" } else { "||" };
    format!("({} {op} {})", random_ac(rng, inputs, depth - 1), random_ac(rng, inputs, depth - 1))
}

#[test]
fn pacing_soundness() {
    let inputs = ["a", "b", "c", "d"];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let acs: Vec<String> = (0..4).map(|_| random_ac(&mut rng, &inputs, 3)).collect();
        let mut src = String::from("input a, b, c, d: Int64\n");
        for (i, ac) in acs.iter().enumerate() {
            src += &format!("output s{i} @{{{ac}}} := a.hold(or: 0) + b.hold(or: 0)\n");
        }
        let ts = typed(&src);
        let trace = random_trace(&mut rng, &inputs, 200);
        let res = run(&ts, &trace).unwrap();
        for (i, ty) in ts.output_types().iter().enumerate() {
            let crate::ir::PacingType::EventBased(ac) = &ty.pacing else { unreachable!() };
            let expected = trace
                .events
                .iter()
                .filter(|e| ac.eval(|n| e.values[inputs.iter().position(|x| *x == n).unwrap()].is_some()))
                .count();
            assert_eq!(res.stats.outputs[i].eval_count, expected as u64, "{}", acs[i]);
        }
    }
}

#[test]
fn periodic_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let freqs: Vec<(i64, i64)> = (0..3).map(|_| (rng.random_range(1..10), rng.random_range(1..4))).collect();
        let mut src = String::from("input a: Int64\n");
        for (i, (n, d)) in freqs.iter().enumerate() {
            src += &format!("output p{i} @{n}/{d}Hz := a.hold(or: 0)\n");
        }
        let ts = typed(&src);
        let trace = random_trace(&mut rng, &["a"], 50);
        let res = run(&ts, &trace).unwrap();
        let dur = trace.duration();
        for (i, (n, d)) in freqs.iter().enumerate() {
            let expected = (dur * Rational::new(*n, *d)).floor().to_integer();
            assert_eq!(res.stats.outputs[i].eval_count, expected as u64);
        }
    }
}

#[test]
fn window_count_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let dur_tenths: i64 = rng.random_range(1..30);
        let duration = Rational::new(dur_tenths, 10);
        let src = format!(
            "input t, u: Int64\noutput c @{{t || u}} := t.aggregate(over: {}s, using: count)\n",
            crate::ir::format_rational(duration)
        );
        let len = rng.random_range(1..40);
        let trace = random_trace(&mut rng, &["t", "u"], len);
        // The final event reads the window; compare against a brute-force count.
        let last = trace.events.last().unwrap().time;
        let expected = trace
            .events
            .iter()
            .filter(|e| e.values[0].is_some() && e.time >= last - duration && e.time <= last)
            .count() as i64;
        let probe = format!("{src}trigger @{{t || u}} c == {expected} \"match\"\n");
        let res = run(&typed(&probe), &trace).unwrap();
        assert!(res.observations.iter().any(|o| o.time == last), "window {duration} expected {expected}");
    }
}

#[test]
fn memory_bounds_hold() {
    let src = "
input a, b: Int64
output x := a.offset(by: -3).defaults(to: 0) + a.offset(by: -1).defaults(to: 0)
output y @{a} := x.hold(or: 0) + x.offset(by: -2).defaults(to: 0)
output w @{a || b} := a.aggregate(over: 1s, using: count)
";
    let ts = typed(src);
    let bounds = memory_bounds(&build_dependency_graph(&ts));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let trace = random_trace(&mut rng, &["a", "b"], 400);
    let res = run(&ts, &trace).unwrap();
    let names = ["a", "b", "x", "y", "w"];
    for (i, n) in names.iter().enumerate() {
        assert!(res.stats.peak_history[i] <= bounds[*n]);
    }
    assert_eq!(bounds["a"], 4);
    assert_eq!(bounds["x"], 3);
    // Brute force: most extensions of `a` inside any window ending at an extension.
    let times: Vec<Rational> = trace.events.iter().filter(|e| e.values[0].is_some()).map(|e| e.time).collect();
    let most = times
        .iter()
        .map(|&t| times.iter().filter(|&&s| s <= t && s >= t - Rational::from_integer(1)).count())
        .max()
        .unwrap();
    assert!(res.stats.peak_window[0] <= most);
}
