//! Deliberately unsound pass variants used to check that the equivalence
//! harness detects broken transformations.

use super::cse::cse_with;
use super::ptr::refine;
use super::{Pass, PassError, PassReport};
use crate::analysis::TypedSpec;
use crate::ir::AccessKind;

/// Pacing refinement that also refines streams read by sliding windows.
pub fn ptr_through_windows(ts: &TypedSpec) -> Result<(TypedSpec, PassReport), PassError> {
    refine(ts, Pass::PacingRefinement, |k| matches!(k, AccessKind::Sync { offset: 0 } | AccessKind::Window { .. }))
}

/// Common subexpression elimination that also extracts past-offset reads.
pub fn cse_with_past_offsets(ts: &TypedSpec) -> Result<(TypedSpec, PassReport), PassError> {
    cse_with(ts, true)
}
