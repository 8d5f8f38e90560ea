//! Type checking and static analysis of specifications.

mod graph;
mod schedule;
mod typing;


pub use graph::{
    build_dependency_graph, evaluation_order, memory_bounds, window_requirements, DependencyGraph, Edge,
    EvaluationOrder, Node, NodeId, StreamRef,
};
pub use schedule::{compute_schedule, Deadline, Schedule};
pub use typing::{infer_types, Provenance, StreamType, TypedSpec};

use thiserror::Error;

use crate::ir::IrError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("type error in `{stream}`: {message}")]
    ValueType { stream: String, message: String },
    #[error("`{0}` has no pacing annotation and no synchronous access to infer one from")]
    NoSyncAccess(String),
    #[error("pacing of {} depends on itself", .0.join(", "))]
    CyclicInference(Vec<String>),
    #[error("`{stream}` mixes event-based and periodic pacing by accessing `{target}`")]
    KindMix { stream: String, target: String },
    #[error("`{stream}` {pacing} cannot synchronously access `{target}` {target_pacing}")]
    Incompatible { stream: String, pacing: String, target: String, target_pacing: String },
    #[error("pacing of `{stream}` refers to `{input}`, which is not an input")]
    UnknownActivationInput { stream: String, input: String },
    #[error("dependency cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error(transparent)]
    Ir(#[from] IrError),
}
