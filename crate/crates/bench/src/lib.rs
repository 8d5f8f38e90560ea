//! Shared fixtures for the benchmarks.

use strm_core::analysis::{infer_types, TypedSpec};
use strm_core::gen::{generate, TraceConfig};
use strm_core::interp::Trace;
use strm_core::parser::parse_spec;
use strm_core::harness::PIPELINE_ROUNDS;
use strm_core::passes::{run_pipeline, Pass};

pub const EVENTS: usize = 10_000;
pub const SEED: u64 = 42;

/// A bundled specification, type-checked.
pub fn typed(src: &str) -> TypedSpec {
    infer_types(&parse_spec(src).expect("bundled spec parses")).expect("bundled spec type-checks")
}

/// Random-timing trace over the inputs of `ts`.
pub fn trace(ts: &TypedSpec, events: usize) -> Trace {
    generate(ts.spec(), &TraceConfig::random(events, SEED)).expect("trace generation")
}

/// `ts` after the default pipeline.
pub fn optimized(ts: &TypedSpec) -> TypedSpec {
    run_pipeline(ts, &Pass::DEFAULT_ORDER, PIPELINE_ROUNDS).expect("pipeline").0
}
