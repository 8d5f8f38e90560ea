use super::{retype, Pass, PassError, PassReport};
use crate::analysis::{build_dependency_graph, DependencyGraph, Node, StreamRef, TypedSpec};
use crate::ir::{ac_or, AccessKind, PacingType};

/// Narrows the pacing of outputs read only synchronously at offset 0 to the
/// union of their readers' pacings, iterating to a fixpoint.
pub fn pacing_refinement(ts: &TypedSpec) -> Result<(TypedSpec, PassReport), PassError> {
    refine(ts, Pass::PacingRefinement, |kind| matches!(kind, AccessKind::Sync { offset: 0 }))
}

/// Shared driver; `admits` decides which incoming edges allow refinement.
pub(crate) fn refine(
    ts: &TypedSpec,
    pass: Pass,
    admits: impl Fn(&AccessKind) -> bool,
) -> Result<(TypedSpec, PassReport), PassError> {
    let mut report = PassReport::new(pass, ts);
    let mut current = ts.clone();
    loop {
        let graph = build_dependency_graph(&current);
        let mut spec = current.spec().clone();
        let mut changed = false;
        for i in 0..spec.outputs.len() {
            if spec.outputs[i].filter.is_some() {
                continue;
            }
            let id = graph.id(Node::Stream(StreamRef::Output(i))).expect("output node");
            let Some(new) = readers_pacing(&current, &graph, id, &admits)? else { continue };
            let old = &current.output_type(i).pacing;
            if new.equivalent(old).map_err(|e| PassError::Retype(e.into()))? {
                continue;
            }
            spec.outputs[i].pacing = Some(new);
            changed = true;
            let name = &spec.outputs[i].name;
            if !report.refined.contains(name) {
                report.refined.push(name.clone());
            }
        }
        if !changed {
            break;
        }
        current = retype(spec)?;
    }
    report.pacings_refined = report.refined.len();
    Ok((current.clone(), report.finish(ts, &current)))
}

/// Union of the pacings of every node reading `id`, if all reads are
/// admitted.
fn readers_pacing(
    ts: &TypedSpec,
    graph: &DependencyGraph,
    id: usize,
    admits: &impl Fn(&AccessKind) -> bool,
) -> Result<Option<PacingType>, PassError> {
    let mut acc: Option<PacingType> = None;
    for edge in graph.incoming(id) {
        if !admits(&edge.kind) || edge.from == id {
            return Ok(None);
        }
        let reader = match graph.stream_of(edge.from) {
            StreamRef::Output(j) => &ts.output_type(j).pacing,
            StreamRef::Trigger(j) => &ts.trigger_type(j).pacing,
            StreamRef::Input(_) => unreachable!("inputs read nothing"),
        };
        acc = Some(match (acc, reader) {
            (None, r) => r.clone(),
            (Some(PacingType::EventBased(a)), PacingType::EventBased(b)) => PacingType::EventBased(ac_or(&a, b)),
            (Some(PacingType::Periodic(a)), PacingType::Periodic(b)) => PacingType::Periodic(a.lcm(b)),
            // Readers of one stream share its pacing kind.
            _ => return Ok(None),
        });
    }
    Ok(acc)
}
