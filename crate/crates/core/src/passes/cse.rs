use std::collections::{HashMap, HashSet};

use super::util::{has_past_offset, may_fault};
use super::{retype, Pass, PassError, PassReport};
use crate::analysis::{build_dependency_graph, DependencyGraph, Node, StreamRef, TypedSpec};
use crate::ir::{ac_or, Expr, PacingKind, PacingType};
use crate::parser::OutputDecl;

const MAX_EXTRACTIONS: usize = 256;

/// Per candidate: total size, first pre-order position, and host streams.
struct Occurrences {
    first: usize,
    count: usize,
    hosts: Vec<StreamRef>,
}

fn eligible(e: &Expr, ts: &TypedSpec, allow_past: bool) -> bool {
    let structural = matches!(e, Expr::Unary { .. } | Expr::Binary { .. } | Expr::Ite { .. } | Expr::TupleProj { .. } | Expr::Window { .. });
    structural
        && !e.accesses().is_empty()
        && (allow_past || !has_past_offset(e))
        && !may_fault(e, ts)
}

fn host_pacing(ts: &TypedSpec, host: StreamRef) -> &PacingType {
    match host {
        StreamRef::Output(i) => &ts.output_type(i).pacing,
        StreamRef::Trigger(i) => &ts.trigger_type(i).pacing,
        StreamRef::Input(_) => unreachable!("inputs host no expressions"),
    }
}

/// Pacing for a stream shared by `hosts`, if one exists that adds no
/// evaluations beyond the hosts' own.
fn shared_pacing(ts: &TypedSpec, hosts: &[StreamRef]) -> Option<PacingType> {
    let pacings: Vec<&PacingType> = hosts.iter().map(|h| host_pacing(ts, *h)).collect();
    let kind = pacings[0].kind();
    if pacings.iter().any(|p| p.kind() != kind) {
        return None;
    }
    match kind {
        PacingKind::EventBased => {
            let acs = pacings.iter().map(|p| match p {
                PacingType::EventBased(ac) => ac.clone(),
                PacingType::Periodic(_) => unreachable!(),
            });
            acs.reduce(|a, b| ac_or(&a, &b)).map(PacingType::EventBased)
        }
        PacingKind::Periodic => {
            let freqs: Vec<_> = pacings
                .iter()
                .map(|p| match p {
                    PacingType::Periodic(f) => *f,
                    PacingType::EventBased(_) => unreachable!(),
                })
                .collect();
            let lcm = freqs.iter().copied().reduce(|a, b| a.lcm(&b))?;
            freqs.contains(&lcm).then_some(PacingType::Periodic(lcm))
        }
    }
}

/// A shared stream must not feed back into any of its hosts, or its reads
/// would be ordered differently from the hosts' reads.
fn feeds_back(graph: &DependencyGraph, e: &Expr, hosts: &[StreamRef]) -> bool {
    let host_ids: Vec<usize> = hosts.iter().map(|h| graph.id(Node::Stream(*h)).expect("host")).collect();
    e.accesses().iter().any(|(target, _)| {
        let t = graph.stream_id(target).expect("declared");
        host_ids.iter().any(|&h| graph.reaches(t, h))
    })
}

fn fresh_name(ts: &TypedSpec, k: &mut usize) -> String {
    loop {
        let name = format!("__cse{k}");
        *k += 1;
        if !ts.spec().is_declared(&name) {
            return name;
        }
    }
}

/// Extracts repeated subexpressions into new streams, largest first.
pub fn cse(ts: &TypedSpec) -> Result<(TypedSpec, PassReport), PassError> {
    cse_with(ts, false)
}

pub(crate) fn cse_with(ts: &TypedSpec, allow_past: bool) -> Result<(TypedSpec, PassReport), PassError> {
    let mut report = PassReport::new(Pass::Cse, ts);
    let mut current = ts.clone();
    let mut k = 0;
    let mut rejected: HashSet<Expr> = HashSet::new();
    while report.extracted.len() < MAX_EXTRACTIONS {
        let spec = current.spec();
        let mut occ: HashMap<&Expr, Occurrences> = HashMap::new();
        let mut position = 0;
        let hosts = spec
            .outputs
            .iter()
            .enumerate()
            .flat_map(|(i, o)| std::iter::once(&o.expr).chain(o.filter.as_ref()).map(move |e| (StreamRef::Output(i), e)))
            .chain(spec.triggers.iter().enumerate().flat_map(|(i, t)| {
                std::iter::once(&t.condition).chain(t.filter.as_ref()).map(move |e| (StreamRef::Trigger(i), e))
            }));
        for (host, root) in hosts {
            root.visit(&mut |sub| {
                position += 1;
                let entry = occ.entry(sub).or_insert(Occurrences { first: position, count: 0, hosts: Vec::new() });
                entry.count += 1;
                if !entry.hosts.contains(&host) {
                    entry.hosts.push(host);
                }
            });
        }
        let mut candidates: Vec<(&Expr, Occurrences)> = occ
            .into_iter()
            .filter(|(e, o)| o.count >= 2 && !rejected.contains(*e) && eligible(e, &current, allow_past))
            .collect();
        candidates.sort_by(|(a, x), (b, y)| b.size().cmp(&a.size()).then(x.first.cmp(&y.first)));

        let graph = build_dependency_graph(&current);
        let mut chosen = None;
        for (e, o) in candidates {
            match shared_pacing(&current, &o.hosts) {
                Some(p) if !feeds_back(&graph, e, &o.hosts) => {
                    chosen = Some((e.clone(), o.hosts, p));
                    break;
                }
                _ => {
                    rejected.insert(e.clone());
                }
            }
        }
        let Some((shared, hosts, pacing)) = chosen else { break };

        let name = fresh_name(&current, &mut k);
        let ty = current.type_of(&shared).expect("well-typed subexpression");
        let mut spec = current.materialized_for(&hosts);
        let replace = |e: &Expr| e.rewrite(&mut |sub| (*sub == shared).then(|| Expr::sync(name.clone())));
        for out in &mut spec.outputs {
            out.expr = replace(&out.expr);
            out.filter = out.filter.as_ref().map(replace);
        }
        for trig in &mut spec.triggers {
            trig.condition = replace(&trig.condition);
            trig.filter = trig.filter.as_ref().map(replace);
        }
        spec.outputs.push(OutputDecl { name: name.clone(), ty: Some(ty), pacing: Some(pacing), filter: None, expr: shared });
        report.extracted.push(name);
        current = retype(spec)?;
    }
    report.subexpressions_extracted = report.extracted.len();
    Ok((current.clone(), report.finish(ts, &current)))
}
