use std::collections::HashMap;

use super::util::{may_fault, only_current_reads};
use super::{retype, Pass, PassError, PassReport};
use crate::analysis::{build_dependency_graph, DependencyGraph, Node, StreamRef, TypedSpec};
use crate::ir::{Expr, PacingType};

/// One read of a stream.
#[derive(Debug, Clone)]
struct Site {
    host: StreamRef,
    /// Conjunction of the if-conditions under which the read executes; `None`
    /// for reads that are not guarded current-value reads.
    guard: Option<Expr>,
    /// Outermost if-expression containing the read and the branch taken.
    outer: Option<(usize, bool)>,
}

struct Collector {
    sites: HashMap<String, Vec<Site>>,
    next_ite: usize,
}

impl Collector {
    fn unguarded(&mut self, host: StreamRef, e: &Expr) {
        for (target, _) in e.accesses() {
            self.sites.entry(target.to_string()).or_default().push(Site { host, guard: None, outer: None });
        }
    }

    fn walk(&mut self, host: StreamRef, e: &Expr, guards: &mut Vec<Expr>, outer: Option<(usize, bool)>) {
        match e {
            Expr::Sync { target, offset: 0, .. } => {
                let guard = guards.iter().cloned().reduce(Expr::and);
                self.sites.entry(target.clone()).or_default().push(Site { host, guard, outer });
            }
            Expr::Sync { .. } | Expr::Hold { .. } | Expr::Window { .. } => self.unguarded(host, e),
            Expr::Ite { condition, consequence, alternative } => {
                self.unguarded(host, condition);
                let id = self.next_ite;
                self.next_ite += 1;
                guards.push((**condition).clone());
                self.walk(host, consequence, guards, outer.or(Some((id, true))));
                guards.pop();
                guards.push((**condition).clone().negated());
                self.walk(host, alternative, guards, outer.or(Some((id, false))));
                guards.pop();
            }
            _ => {
                for child in e.children() {
                    self.walk(host, child, guards, outer);
                }
            }
        }
    }
}

fn collect(ts: &TypedSpec) -> HashMap<String, Vec<Site>> {
    let spec = ts.spec();
    let mut c = Collector { sites: HashMap::new(), next_ite: 0 };
    for (i, out) in spec.outputs.iter().enumerate() {
        let host = StreamRef::Output(i);
        c.walk(host, &out.expr, &mut Vec::new(), None);
        if let Some(f) = &out.filter {
            c.unguarded(host, f);
        }
    }
    for (i, trig) in spec.triggers.iter().enumerate() {
        let host = StreamRef::Trigger(i);
        c.walk(host, &trig.condition, &mut Vec::new(), None);
        if let Some(f) = &trig.filter {
            c.unguarded(host, f);
        }
    }
    c.sites
}

/// Filter for output `index` if every read of it is a guarded current-value
/// read whose guard can be evaluated at the stream's own instants.
fn candidate_filter(
    ts: &TypedSpec,
    graph: &DependencyGraph,
    index: usize,
    sites: &[Site],
) -> Result<Option<Expr>, PassError> {
    let out = &ts.spec().outputs[index];
    if out.filter.is_some() || sites.is_empty() {
        return Ok(None);
    }
    let me = graph.id(Node::Stream(StreamRef::Output(index))).expect("output node");
    let pacing = &ts.output_type(index).pacing;
    let mut guards: Vec<&Expr> = Vec::new();
    let mut branches: HashMap<usize, bool> = HashMap::new();
    for site in sites {
        let Some(guard) = &site.guard else { return Ok(None) };
        if let Some((ite, branch)) = site.outer {
            if *branches.entry(ite).or_insert(branch) != branch {
                return Ok(None);
            }
        }
        let host = graph.id(Node::Stream(site.host)).expect("host node");
        if graph.reaches(me, host) && host != me {
            return Ok(None);
        }
        if !only_current_reads(guard) || may_fault(guard, ts) {
            return Ok(None);
        }
        for (target, _) in guard.accesses() {
            if target == out.name {
                return Ok(None);
            }
            let target_pacing = ts.pacing_of(target).expect("declared");
            if !pacing.can_access_sync(&target_pacing).map_err(|e| PassError::Retype(e.into()))? {
                return Ok(None);
            }
            let tid = graph.stream_id(target).expect("declared");
            if graph.reaches(tid, me) {
                return Ok(None);
            }
        }
        if !guards.contains(&guard) {
            guards.push(guard);
        }
    }
    Ok(guards.into_iter().cloned().reduce(Expr::or))
}

/// Moves if-conditions into filters of the streams read only inside the
/// branches, and turns those reads into hold accesses.
pub fn filter_refinement(ts: &TypedSpec) -> Result<(TypedSpec, PassReport), PassError> {
    let mut report = PassReport::new(Pass::FilterRefinement, ts);
    let mut current = ts.clone();
    'search: loop {
        let graph = build_dependency_graph(&current);
        let sites = collect(&current);
        for (i, out) in current.spec().outputs.iter().enumerate() {
            let Some(on) = sites.get(&out.name) else { continue };
            let Some(filter) = candidate_filter(&current, &graph, i, on)? else { continue };
            let name = out.name.clone();
            let default = current.output_type(i).value_type.default_value();
            let mut spec = current.spec().clone();
            let mut rewrites = 0;
            let mut to_hold = |e: &Expr| {
                e.rewrite(&mut |sub| match sub {
                    Expr::Sync { target, offset: 0, .. } if *target == name => {
                        rewrites += 1;
                        Some(Expr::hold(target.clone(), default.clone()))
                    }
                    _ => None,
                })
            };
            for out in &mut spec.outputs {
                out.expr = to_hold(&out.expr);
            }
            for trig in &mut spec.triggers {
                trig.condition = to_hold(&trig.condition);
            }
            // Readers lose a synchronous access, so their inferred pacing
            // would change: write it down.
            let pin = |p: &mut Option<PacingType>, ty: &PacingType| {
                if p.is_none() {
                    *p = Some(ty.clone());
                }
            };
            for site in on {
                match site.host {
                    StreamRef::Output(j) => pin(&mut spec.outputs[j].pacing, &current.output_type(j).pacing),
                    StreamRef::Trigger(j) => pin(&mut spec.triggers[j].pacing, &current.trigger_type(j).pacing),
                    StreamRef::Input(_) => {}
                }
            }
            pin(&mut spec.outputs[i].pacing, &current.output_type(i).pacing);
            spec.outputs[i].filter = Some(filter);

            report.filters_added += 1;
            report.sync_to_hold_rewrites += rewrites;
            report.filtered.push(name);
            current = retype(spec)?;
            continue 'search;
        }
        break;
    }
    Ok((current.clone(), report.finish(ts, &current)))
}
