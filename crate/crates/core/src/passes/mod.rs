//! Behaviour-preserving specification transformations.

mod cse;
mod dse;
mod fold;
mod fr;
#[doc(hidden)]
pub mod mutants;
mod ptr;
mod sccp;
mod util;


pub use cse::cse;
pub use dse::dead_stream_elim;
pub use fold::fold_constants;
pub use fr::filter_refinement;
pub use ptr::pacing_refinement;
pub use sccp::sccp;

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{infer_types, AnalysisError, TypedSpec};
use crate::ir::Fault;
use crate::parser::{pretty, Spec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PassError {
    #[error("constant folding in `{stream}` would fault: {fault}")]
    Fold { stream: String, fault: Fault },
    #[error("transformed specification is ill-typed: {0}")]
    Retype(#[from] AnalysisError),
    #[error("unknown pass `{0}`")]
    UnknownPass(String),
    #[error("max rounds must be at least 1")]
    NoRounds,
}

/// Structural counters accumulated over one or more pass applications.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PassReport {
    pub passes: Vec<String>,
    pub rounds: usize,
    pub changed: bool,
    pub constants_folded: usize,
    pub streams_inlined: usize,
    pub streams_removed: usize,
    pub subexpressions_extracted: usize,
    pub pacings_refined: usize,
    pub filters_added: usize,
    pub sync_to_hold_rewrites: usize,
    pub streams_before: usize,
    pub streams_after: usize,
    pub removed: Vec<String>,
    pub inlined: Vec<String>,
    pub refined: Vec<String>,
    pub filtered: Vec<String>,
    pub extracted: Vec<String>,
}

impl PassReport {
    fn new(pass: Pass, before: &TypedSpec) -> Self {
        PassReport {
            passes: vec![pass.name().to_string()],
            rounds: 1,
            streams_before: before.spec().stream_count(),
            ..PassReport::default()
        }
    }

    fn finish(mut self, before: &TypedSpec, after: &TypedSpec) -> Self {
        self.streams_after = after.spec().stream_count();
        self.changed = pretty(before.spec()) != pretty(after.spec());
        self
    }

    /// Adds the counters of a later report.
    pub fn absorb(&mut self, other: PassReport) {
        self.passes.extend(other.passes);
        self.changed |= other.changed;
        self.constants_folded += other.constants_folded;
        self.streams_inlined += other.streams_inlined;
        self.streams_removed += other.streams_removed;
        self.subexpressions_extracted += other.subexpressions_extracted;
        self.pacings_refined += other.pacings_refined;
        self.filters_added += other.filters_added;
        self.sync_to_hold_rewrites += other.sync_to_hold_rewrites;
        self.streams_after = other.streams_after;
        self.removed.extend(other.removed);
        self.inlined.extend(other.inlined);
        self.refined.extend(other.refined);
        self.filtered.extend(other.filtered);
        self.extracted.extend(other.extracted);
    }

    /// Line-oriented `key<TAB>value` rendering.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k}\t{v}");
        };
        line("passes", self.passes.join(","));
        line("rounds", self.rounds.to_string());
        line("changed", self.changed.to_string());
        line("constants_folded", self.constants_folded.to_string());
        line("streams_inlined", self.streams_inlined.to_string());
        line("streams_removed", self.streams_removed.to_string());
        line("subexpressions_extracted", self.subexpressions_extracted.to_string());
        line("pacings_refined", self.pacings_refined.to_string());
        line("filters_added", self.filters_added.to_string());
        line("sync_to_hold_rewrites", self.sync_to_hold_rewrites.to_string());
        line("streams_before", self.streams_before.to_string());
        line("streams_after", self.streams_after.to_string());
        line("removed", self.removed.join(","));
        line("inlined", self.inlined.join(","));
        line("refined", self.refined.join(","));
        line("filtered", self.filtered.join(","));
        line("extracted", self.extracted.join(","));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pass {
    Sccp,
    PacingRefinement,
    FilterRefinement,
    Cse,
    DeadStreamElim,
}

impl Pass {
    /// Order used for `all`.
    pub const DEFAULT_ORDER: [Pass; 5] =
        [Pass::Sccp, Pass::PacingRefinement, Pass::FilterRefinement, Pass::Cse, Pass::DeadStreamElim];

    pub fn name(&self) -> &'static str {
        match self {
            Pass::Sccp => "sccp",
            Pass::PacingRefinement => "ptr",
            Pass::FilterRefinement => "fr",
            Pass::Cse => "cse",
            Pass::DeadStreamElim => "dse",
        }
    }

    pub fn from_name(name: &str) -> Option<Pass> {
        Some(match name {
            "sccp" => Pass::Sccp,
            "ptr" | "pacing_refinement" => Pass::PacingRefinement,
            "fr" | "filter_refinement" => Pass::FilterRefinement,
            "cse" => Pass::Cse,
            "dse" | "dead_stream_elim" => Pass::DeadStreamElim,
            _ => return None,
        })
    }

    /// Parses `all` or a comma-separated list of pass names.
    pub fn parse_list(text: &str) -> Result<Vec<Pass>, PassError> {
        if text.trim() == "all" {
            return Ok(Pass::DEFAULT_ORDER.to_vec());
        }
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| Pass::from_name(s).ok_or_else(|| PassError::UnknownPass(s.to_string())))
            .collect()
    }

    pub fn apply(&self, ts: &TypedSpec) -> Result<(TypedSpec, PassReport), PassError> {
        match self {
            Pass::Sccp => sccp(ts),
            Pass::PacingRefinement => pacing_refinement(ts),
            Pass::FilterRefinement => filter_refinement(ts),
            Pass::Cse => cse(ts),
            Pass::DeadStreamElim => dead_stream_elim(ts),
        }
    }
}

/// Applies `passes` in order, repeating the whole list until a round changes
/// nothing or `max_rounds` rounds have run.
pub fn run_pipeline(ts: &TypedSpec, passes: &[Pass], max_rounds: usize) -> Result<(TypedSpec, PassReport), PassError> {
    if max_rounds == 0 {
        return Err(PassError::NoRounds);
    }
    let mut current = ts.clone();
    let mut report = PassReport { streams_before: ts.spec().stream_count(), ..PassReport::default() };
    report.streams_after = report.streams_before;
    for _ in 0..max_rounds {
        report.rounds += 1;
        let mut round_changed = false;
        for pass in passes {
            let (next, r) = pass.apply(&current)?;
            round_changed |= r.changed;
            report.absorb(r);
            current = next;
        }
        if !round_changed {
            break;
        }
    }
    Ok((current, report))
}

pub(crate) fn retype(spec: Spec) -> Result<TypedSpec, PassError> {
    Ok(infer_types(&spec)?)
}
