//! Differential testing of transformations and before/after benchmarking.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::TypedSpec;
use crate::interp::{EvalStats, InterpError, Monitor, Observation, RunOptions, RunResult, Trace};
use crate::ir::{format_rational, Rational};
use crate::passes::{run_pipeline, Pass, PassError, PassReport};

/// Rounds used when a variant runs a pass list as a pipeline.
pub const PIPELINE_ROUNDS: usize = 8;

type TransformFn = fn(&TypedSpec) -> Result<(TypedSpec, PassReport), PassError>;

#[derive(Debug, Clone)]
enum Transform {
    Pipeline(Vec<Pass>),
    Custom(TransformFn),
}

/// A named transformation under test.
#[derive(Debug, Clone)]
pub struct Variant {
    pub name: String,
    transform: Transform,
}

impl Variant {
    pub fn pass(pass: Pass) -> Self {
        Variant { name: pass.name().to_string(), transform: Transform::Pipeline(vec![pass]) }
    }

    /// The pass list run to a fixpoint, named after its members.
    pub fn pipeline(passes: &[Pass]) -> Self {
        let name = format!("pipeline({})", passes.iter().map(Pass::name).collect::<Vec<_>>().join(","));
        Variant { name, transform: Transform::Pipeline(passes.to_vec()) }
    }

    pub fn custom(name: &str, f: TransformFn) -> Self {
        Variant { name: name.to_string(), transform: Transform::Custom(f) }
    }

    pub fn apply(&self, ts: &TypedSpec) -> Result<(TypedSpec, PassReport), PassError> {
        match &self.transform {
            Transform::Pipeline(passes) if passes.len() == 1 => passes[0].apply(ts),
            Transform::Pipeline(passes) => run_pipeline(ts, passes, PIPELINE_ROUNDS),
            Transform::Custom(f) => f(ts),
        }
    }
}

/// Every pass on its own followed by the full default pipeline.
pub fn standard_variants() -> Vec<Variant> {
    Pass::DEFAULT_ORDER
        .iter()
        .map(|&p| Variant::pass(p))
        .chain(std::iter::once(Variant::pipeline(&Pass::DEFAULT_ORDER)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("variant `{variant}`: {error}")]
    Pass { variant: String, error: PassError },
    #[error(transparent)]
    Interp(#[from] InterpError),
}

/// What the transformed monitor did differently.
#[derive(Debug, Clone, PartialEq)]
pub enum Mismatch {
    /// Observation sequences differ; `index` is the first differing position.
    Observations { index: usize, original: Option<Observation>, transformed: Option<Observation> },
    /// The transformed monitor faulted where the original did not.
    Fault(InterpError),
}

/// A counterexample: the trace prefix up to the first divergent instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub time: Rational,
    pub mismatch: Mismatch,
    pub prefix: Trace,
}

impl std::fmt::Display for Divergence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "diverged at t={} after {} events: ", format_rational(self.time), self.prefix.len())?;
        match &self.mismatch {
            Mismatch::Observations { index, original, transformed } => {
                let show = |o: &Option<Observation>| o.as_ref().map_or("nothing".to_string(), |o| o.to_string());
                write!(f, "observation {index} was `{}`, now `{}`", show(original), show(transformed))
            }
            Mismatch::Fault(e) => write!(f, "transformed monitor faulted: {e}"),
        }
    }
}

/// Outcome of one original/transformed comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Equivalent,
    /// The original faults on this trace, so there is nothing to compare.
    OriginalFaulted,
    Diverged(Divergence),
}

impl Verdict {
    pub fn is_divergence(&self) -> bool {
        matches!(self, Verdict::Diverged(_))
    }
}

fn first_difference(a: &[Observation], b: &[Observation]) -> Option<usize> {
    let common = a.len().min(b.len());
    (0..common).find(|&i| a[i] != b[i]).or((a.len() != b.len()).then_some(common))
}

fn prefix(trace: &Trace, until: Rational) -> Trace {
    Trace {
        inputs: trace.inputs.clone(),
        events: trace.events.iter().take_while(|e| e.time <= until).cloned().collect(),
    }
}

/// Runs both monitors over `trace` and compares their observations exactly.
pub fn compare(original: &Monitor, transformed: &Monitor, trace: &Trace) -> Verdict {
    let options = RunOptions::default();
    let expected = match original.run(trace, &options) {
        Ok(r) => r.observations,
        Err(_) => return Verdict::OriginalFaulted,
    };
    compare_against(&expected, transformed, trace)
}

fn compare_against(expected: &[Observation], transformed: &Monitor, trace: &Trace) -> Verdict {
    let options = RunOptions::default();
    let end = trace.duration();
    match transformed.run(trace, &options) {
        Ok(r) => match first_difference(expected, &r.observations) {
            None => Verdict::Equivalent,
            Some(index) => {
                let original = expected.get(index).cloned();
                let transformed = r.observations.get(index).cloned();
                let time = [&original, &transformed].into_iter().flatten().map(|o| o.time).min().unwrap_or(end);
                Verdict::Diverged(Divergence {
                    time,
                    mismatch: Mismatch::Observations { index, original, transformed },
                    prefix: prefix(trace, time),
                })
            }
        },
        Err(e) => {
            let time = match &e {
                InterpError::Fault { time, .. } => *time,
                _ => end,
            };
            Verdict::Diverged(Divergence { time, mismatch: Mismatch::Fault(e), prefix: prefix(trace, time) })
        }
    }
}

/// Applies `variant` to `ts` and compares the result against `ts` on `trace`.
pub fn check_variant(ts: &TypedSpec, variant: &Variant, trace: &Trace) -> Result<Verdict, HarnessError> {
    let (transformed, _) =
        variant.apply(ts).map_err(|error| HarnessError::Pass { variant: variant.name.clone(), error })?;
    Ok(compare(&Monitor::new(ts)?, &Monitor::new(&transformed)?, trace))
}

/// A divergence found by the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub spec: String,
    pub variant: String,
    pub seed: u64,
    pub divergence: Divergence,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} / {} / seed {}: {}", self.spec, self.variant, self.seed, self.divergence)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub comparisons: usize,
    /// Traces on which the original monitor faults.
    pub skipped: usize,
    pub failures: Vec<Failure>,
}

impl SuiteReport {
    pub fn is_equivalent(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares every variant of every spec over one generated trace per seed.
/// Work is spread over seeds; results are ordered deterministically.
pub fn equivalence_suite<G>(
    specs: &[(&str, &TypedSpec)],
    variants: &[Variant],
    seeds: &[u64],
    trace_for: G,
) -> Result<SuiteReport, HarnessError>
where
    G: Fn(&TypedSpec, u64) -> Trace + Sync,
{
    let mut report = SuiteReport::default();
    for &(name, ts) in specs {
        let original = Monitor::new(ts)?;
        let mut monitors = Vec::with_capacity(variants.len());
        for v in variants {
            let (t, _) = v.apply(ts).map_err(|error| HarnessError::Pass { variant: v.name.clone(), error })?;
            monitors.push(Monitor::new(&t)?);
        }
        let per_seed: Vec<(u64, Option<Vec<Verdict>>)> = seeds
            .par_iter()
            .map(|&seed| {
                let trace = trace_for(ts, seed);
                let verdicts = original.run(&trace, &RunOptions::default()).ok().map(|r| {
                    monitors.iter().map(|m| compare_against(&r.observations, m, &trace)).collect()
                });
                (seed, verdicts)
            })
            .collect();
        for (seed, verdicts) in per_seed {
            let Some(verdicts) = verdicts else {
                report.skipped += 1;
                continue;
            };
            for (v, verdict) in variants.iter().zip(verdicts) {
                report.comparisons += 1;
                if let Verdict::Diverged(divergence) = verdict {
                    report.failures.push(Failure {
                        spec: name.to_string(),
                        variant: v.name.clone(),
                        seed,
                        divergence,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Measurements of one specification variant over a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantReport {
    pub name: String,
    pub observations: usize,
    pub total_evaluations: u64,
    pub cycle_count: u64,
    pub median_wall_time_ns: u64,
    pub eval_counts: Vec<(String, u64)>,
    pub identical: bool,
    pub pass_report: Option<PassReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub repeat: usize,
    pub variants: Vec<VariantReport>,
    /// Whether every variant produced the original's observations.
    pub identical: bool,
}

fn median(mut xs: Vec<u64>) -> u64 {
    xs.sort_unstable();
    match xs.len() {
        0 => 0,
        n if n % 2 == 1 => xs[n / 2],
        n => (xs[n / 2 - 1] + xs[n / 2]) / 2,
    }
}

fn eval_counts(stats: &EvalStats) -> Vec<(String, u64)> {
    stats.outputs.iter().chain(&stats.triggers).map(|n| (n.name.clone(), n.eval_count)).collect()
}

fn measure(ts: &TypedSpec, trace: &Trace, repeat: usize) -> Result<(RunResult, u64), InterpError> {
    let monitor = Monitor::new(ts)?;
    let mut times = Vec::with_capacity(repeat);
    let mut last = None;
    for _ in 0..repeat.max(1) {
        let start = Instant::now();
        let r = monitor.run(trace, &RunOptions::default())?;
        times.push(start.elapsed().as_nanos() as u64);
        last = Some(r);
    }
    Ok((last.expect("at least one repetition"), median(times)))
}

/// Runs the original and each variant `repeat` times over `trace`.
pub fn bench(ts: &TypedSpec, trace: &Trace, variants: &[Variant], repeat: usize) -> Result<BenchReport, HarnessError> {
    let (base, base_time) = measure(ts, trace, repeat)?;
    let mut reports = vec![VariantReport {
        name: "original".to_string(),
        observations: base.observations.len(),
        total_evaluations: base.stats.total_evaluations(),
        cycle_count: base.stats.cycle_count,
        median_wall_time_ns: base_time,
        eval_counts: eval_counts(&base.stats),
        identical: true,
        pass_report: None,
    }];
    for v in variants {
        let (t, pass_report) = v.apply(ts).map_err(|error| HarnessError::Pass { variant: v.name.clone(), error })?;
        let (r, time) = measure(&t, trace, repeat)?;
        reports.push(VariantReport {
            name: v.name.clone(),
            observations: r.observations.len(),
            total_evaluations: r.stats.total_evaluations(),
            cycle_count: r.stats.cycle_count,
            median_wall_time_ns: time,
            eval_counts: eval_counts(&r.stats),
            identical: r.observations == base.observations,
            pass_report: Some(pass_report),
        });
    }
    let identical = reports.iter().all(|r| r.identical);
    Ok(BenchReport { repeat: repeat.max(1), variants: reports, identical })
}

impl BenchReport {
    /// Line-oriented `key<TAB>value` rendering, one block per variant.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push('\t');
            out.push_str(&v);
            out.push('\n');
        };
        line("repeat", self.repeat.to_string());
        line("verdict", if self.identical { "identical" } else { "different" }.to_string());
        for r in &self.variants {
            let key = |k: &str| format!("{}.{k}", r.name);
            line(&key("observations"), r.observations.to_string());
            line(&key("identical"), r.identical.to_string());
            line(&key("total_evaluations"), r.total_evaluations.to_string());
            line(&key("cycle_count"), r.cycle_count.to_string());
            line(&key("median_wall_time_ns"), r.median_wall_time_ns.to_string());
            for (name, count) in &r.eval_counts {
                line(&key(&format!("eval.{name}")), count.to_string());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::infer_types;
    use crate::corpus;
    use crate::gen::{generate, TraceConfig};
    use crate::ir::Value;
    use crate::parser::parse_spec;
    use crate::passes::mutants;

    fn typed(src: &str) -> TypedSpec {
        infer_types(&parse_spec(src).unwrap()).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn empty_trace_is_trivially_equivalent() {
        let ts = typed(corpus::GEOFENCE_2D);
        let trace = Trace::new(ts.spec().inputs.iter().map(|i| i.name.clone()).collect());
        for v in standard_variants() {
            assert_eq!(check_variant(&ts, &v, &trace).unwrap(), Verdict::Equivalent, "{}", v.name);
        }
    }

    const WINDOWED: &str = "input a, b: Float64
output x @{a} := a > 0.0
output gate @{a && b} := x
output many @{a && b} := x.aggregate(over: 1s, using: count) > 2
trigger gate && many \"burst\"
";

    #[test]
    fn mutant_divergence_is_found_and_minimized() {
        let ts = typed(WINDOWED);
        let mut trace = Trace::new(vec!["a".into(), "b".into()]);
        for k in 1..=4 {
            trace.push(r(k, 10), &[("a", Value::Float(1.0))]);
        }
        trace.push(r(1, 2), &[("a", Value::Float(1.0)), ("b", Value::Float(0.0))]);
        trace.push(r(3, 1), &[("a", Value::Float(1.0)), ("b", Value::Float(0.0))]);
        let mutant = Variant::custom("ptr_through_windows", mutants::ptr_through_windows);
        let Verdict::Diverged(d) = check_variant(&ts, &mutant, &trace).unwrap() else {
            panic!("mutant not detected");
        };
        assert_eq!(d.time, r(1, 2));
        assert_eq!(d.prefix.len(), 5);
        // The prefix alone reproduces the divergence.
        assert!(check_variant(&ts, &mutant, &d.prefix).unwrap().is_divergence());
        assert_eq!(check_variant(&ts, &Variant::pass(Pass::PacingRefinement), &trace).unwrap(), Verdict::Equivalent);
    }

    #[test]
    fn suite_reports_mutant_failures_deterministically() {
        let ts = typed(WINDOWED);
        let variants = [Variant::pass(Pass::PacingRefinement), Variant::custom("mutant", mutants::ptr_through_windows)];
        let seeds: Vec<u64> = (0..20).collect();
        let gen = |ts: &TypedSpec, seed| generate(ts.spec(), &TraceConfig::random(200, seed)).unwrap();
        let a = equivalence_suite(&[("windowed", &ts)], &variants, &seeds, gen).unwrap();
        let b = equivalence_suite(&[("windowed", &ts)], &variants, &seeds, gen).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.comparisons, 40);
        assert!(!a.failures.is_empty());
        assert!(a.failures.iter().all(|f| f.variant == "mutant"));
    }

    #[test]
    fn transformed_fault_is_a_divergence() {
        let ts = typed("input a: Int64\noutput x := a / 1\ntrigger x > 0 \"pos\"\n");
        fn faulty(ts: &TypedSpec) -> Result<(TypedSpec, PassReport), PassError> {
            let src = pretty_src(ts).replace("a / 1", "a / 0");
            Ok((infer_types(&parse_spec(&src).unwrap()).unwrap(), PassReport::default()))
        }
        fn pretty_src(ts: &TypedSpec) -> String {
            crate::parser::pretty(ts.spec())
        }
        let mut trace = Trace::new(vec!["a".into()]);
        trace.push(r(1, 1), &[("a", Value::Int(3))]);
        trace.push(r(2, 1), &[("a", Value::Int(4))]);
        let Verdict::Diverged(d) = check_variant(&ts, &Variant::custom("faulty", faulty), &trace).unwrap() else {
            panic!("fault not reported");
        };
        assert!(matches!(d.mismatch, Mismatch::Fault(_)));
        assert_eq!(d.time, r(1, 1));
        assert_eq!(d.prefix.len(), 1);
    }

    #[test]
    fn bench_reports_counts_and_verdict() {
        let ts = typed(corpus::GEOFENCE_2D);
        let trace = generate(ts.spec(), &TraceConfig::random(500, 3)).unwrap();
        let report = bench(&ts, &trace, &[Variant::pass(Pass::Sccp), Variant::pipeline(&[])], 3).unwrap();
        assert!(report.identical);
        assert_eq!(report.variants.len(), 3);
        let [orig, sccp, identity] = &report.variants[..] else { unreachable!() };
        assert!(sccp.total_evaluations < orig.total_evaluations);
        assert_eq!(identity.eval_counts, orig.eval_counts);
        let kv = report.to_kv();
        assert!(kv.contains("verdict\tidentical\n"));
        assert!(kv.contains("sccp.observations\t"));
        serde_json::to_string(&report).unwrap();
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![5, 1, 3]), 3);
        assert_eq!(median(vec![4, 1, 3, 2]), 2);
        assert_eq!(median(vec![]), 0);
    }
}
