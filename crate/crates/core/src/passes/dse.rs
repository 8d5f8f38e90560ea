use super::{retype, Pass, PassError, PassReport};
use crate::analysis::{build_dependency_graph, Node, StreamRef, TypedSpec};

/// Removes outputs that no trigger depends on. Inputs are always kept.
pub fn dead_stream_elim(ts: &TypedSpec) -> Result<(TypedSpec, PassReport), PassError> {
    let mut report = PassReport::new(Pass::DeadStreamElim, ts);
    let graph = build_dependency_graph(ts);
    let mut live = vec![false; graph.nodes.len()];
    let mut stack: Vec<usize> = graph
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| matches!(n, Node::Stream(StreamRef::Trigger(_)) | Node::Filter(StreamRef::Trigger(_))))
        .map(|(i, _)| i)
        .collect();
    while let Some(n) = stack.pop() {
        if std::mem::replace(&mut live[n], true) {
            continue;
        }
        stack.extend(graph.outgoing(n).map(|e| e.to));
        if let Node::Stream(s) = graph.nodes[n] {
            stack.extend(graph.filter_of(s));
        }
    }
    let mut spec = ts.spec().clone();
    let mut keep = Vec::new();
    for (i, out) in spec.outputs.iter().enumerate() {
        let id = graph.id(Node::Stream(StreamRef::Output(i))).expect("output node");
        keep.push(live[id]);
        if !live[id] {
            report.removed.push(out.name.clone());
        }
    }
    let mut flags = keep.into_iter();
    spec.outputs.retain(|_| flags.next().unwrap());
    report.streams_removed = report.removed.len();
    if report.streams_removed == 0 {
        return Ok((ts.clone(), report.finish(ts, ts)));
    }
    let after = retype(spec)?;
    Ok((after.clone(), report.finish(ts, &after)))
}
