use std::collections::{BTreeMap, HashMap};

use super::typing::{trigger_name, TypedSpec};
use super::AnalysisError;
use crate::ir::{AccessKind, Rational};

/// A stream of the specification, by declaration index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamRef {
    Input(usize),
    Output(usize),
    Trigger(usize),
}

/// A node of the dependency graph. Filters are evaluated separately from the
/// stream they guard, so they get their own node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Stream(StreamRef),
    Filter(StreamRef),
}

pub type NodeId = usize;

/// `from` reads `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: AccessKind,
}

#[derive(Debug, Clone)]
pub struct DependencyGraph {
    pub nodes: Vec<Node>,
    pub names: Vec<String>,
    pub edges: Vec<Edge>,
    index: HashMap<Node, NodeId>,
    by_name: HashMap<String, NodeId>,
}

impl DependencyGraph {
    pub fn id(&self, node: Node) -> Option<NodeId> {
        self.index.get(&node).copied()
    }

    /// Node id of an input or output stream by name.
    pub fn stream_id(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    pub fn filter_of(&self, stream: StreamRef) -> Option<NodeId> {
        self.id(Node::Filter(stream))
    }

    pub fn incoming(&self, target: NodeId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.to == target)
    }

    pub fn outgoing(&self, source: NodeId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == source)
    }

    /// Stream a node belongs to; filters map to the stream they guard.
    pub fn stream_of(&self, id: NodeId) -> StreamRef {
        match self.nodes[id] {
            Node::Stream(s) | Node::Filter(s) => s,
        }
    }

    /// Whether `to` is reachable from `from` along read edges, including the
    /// implicit edge from a stream to its filter.
    pub fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if std::mem::replace(&mut seen[n], true) {
                continue;
            }
            stack.extend(self.outgoing(n).map(|e| e.to));
            if let Node::Stream(s) = self.nodes[n] {
                stack.extend(self.filter_of(s));
            }
        }
        false
    }
}

pub fn build_dependency_graph(ts: &TypedSpec) -> DependencyGraph {
    let spec = ts.spec();
    let mut nodes = Vec::new();
    let mut names = Vec::new();
    for (i, input) in spec.inputs.iter().enumerate() {
        nodes.push(Node::Stream(StreamRef::Input(i)));
        names.push(input.name.clone());
    }
    for (i, out) in spec.outputs.iter().enumerate() {
        nodes.push(Node::Stream(StreamRef::Output(i)));
        names.push(out.name.clone());
        if out.filter.is_some() {
            nodes.push(Node::Filter(StreamRef::Output(i)));
            names.push(format!("filter({})", out.name));
        }
    }
    for (i, trig) in spec.triggers.iter().enumerate() {
        nodes.push(Node::Stream(StreamRef::Trigger(i)));
        names.push(trigger_name(i));
        if trig.filter.is_some() {
            nodes.push(Node::Filter(StreamRef::Trigger(i)));
            names.push(format!("filter({})", trigger_name(i)));
        }
    }
    let index: HashMap<Node, NodeId> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let by_name: HashMap<String, NodeId> = nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| matches!(n, Node::Stream(StreamRef::Input(_) | StreamRef::Output(_))))
        .map(|(i, _)| (names[i].clone(), i))
        .collect();

    let mut edges = Vec::new();
    let mut add = |from: NodeId, expr: &crate::ir::Expr| {
        for (target, kind) in expr.accesses() {
            let to = by_name[target];
            edges.push(Edge { from, to, kind });
        }
    };
    for (i, out) in spec.outputs.iter().enumerate() {
        add(index[&Node::Stream(StreamRef::Output(i))], &out.expr);
        if let Some(f) = &out.filter {
            add(index[&Node::Filter(StreamRef::Output(i))], f);
        }
    }
    for (i, trig) in spec.triggers.iter().enumerate() {
        add(index[&Node::Stream(StreamRef::Trigger(i))], &trig.condition);
        if let Some(f) = &trig.filter {
            add(index[&Node::Filter(StreamRef::Trigger(i))], f);
        }
    }
    DependencyGraph { nodes, names, edges, index, by_name }
}

/// Nodes grouped into layers; every node only depends on nodes of earlier
/// layers. Layer 0 holds the inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationOrder {
    pub layers: Vec<Vec<NodeId>>,
}

impl EvaluationOrder {
    pub fn sequence(&self) -> Vec<NodeId> {
        self.layers.iter().flatten().copied().collect()
    }

    pub fn layer_names(&self, graph: &DependencyGraph) -> Vec<Vec<String>> {
        self.layers.iter().map(|l| l.iter().map(|&n| graph.names[n].clone()).collect()).collect()
    }
}

fn depends_on(deps: &[Vec<NodeId>], from: NodeId, to: NodeId) -> bool {
    let mut seen = vec![false; deps.len()];
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        if n == to {
            return true;
        }
        if !std::mem::replace(&mut seen[n], true) {
            stack.extend(&deps[n]);
        }
    }
    false
}

/// Computes a layered evaluation order.
///
/// Current-value accesses and the filter of a stream must be evaluated before
/// their reader. Hold and window reads are ordered after their target when
/// this does not create a cycle; past-offset reads impose no order.
pub fn evaluation_order(graph: &DependencyGraph) -> Result<EvaluationOrder, AnalysisError> {
    let n = graph.nodes.len();
    let mut deps: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for e in &graph.edges {
        if e.kind.is_current() && e.from != e.to {
            deps[e.from].push(e.to);
        }
    }
    for (id, node) in graph.nodes.iter().enumerate() {
        if let Node::Filter(s) = node {
            deps[graph.id(Node::Stream(*s)).unwrap()].push(id);
        }
    }
    if let Some(cycle) = find_cycle(&deps) {
        return Err(AnalysisError::Cycle(cycle.into_iter().map(|i| graph.names[i].clone()).collect()));
    }
    for e in &graph.edges {
        if matches!(e.kind, AccessKind::Hold | AccessKind::Window { .. })
            && e.from != e.to
            && !depends_on(&deps, e.to, e.from)
        {
            deps[e.from].push(e.to);
        }
    }

    let mut level: Vec<Option<usize>> = vec![None; n];
    fn visit(node: NodeId, deps: &[Vec<NodeId>], graph: &DependencyGraph, level: &mut [Option<usize>]) -> usize {
        if let Some(l) = level[node] {
            return l;
        }
        let base = match graph.nodes[node] {
            Node::Stream(StreamRef::Input(_)) => 0,
            _ => 1,
        };
        let l = deps[node].iter().map(|&d| visit(d, deps, graph, level) + 1).max().unwrap_or(0).max(base);
        level[node] = Some(l);
        l
    }
    for id in 0..n {
        visit(id, &deps, graph, &mut level);
    }
    let depth = level.iter().flatten().max().map_or(0, |m| m + 1);
    let mut layers = vec![Vec::new(); depth];
    for (id, l) in level.iter().enumerate() {
        layers[l.unwrap()].push(id);
    }
    layers.retain(|l| !l.is_empty());
    Ok(EvaluationOrder { layers })
}

fn find_cycle(deps: &[Vec<NodeId>]) -> Option<Vec<NodeId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; deps.len()];
    let mut path = Vec::new();
    fn dfs(n: NodeId, deps: &[Vec<NodeId>], mark: &mut [Mark], path: &mut Vec<NodeId>) -> Option<Vec<NodeId>> {
        mark[n] = Mark::Active;
        path.push(n);
        for &d in &deps[n] {
            match mark[d] {
                Mark::Active => {
                    let start = path.iter().position(|&p| p == d).unwrap();
                    return Some(path[start..].to_vec());
                }
                Mark::New => {
                    if let Some(c) = dfs(d, deps, mark, path) {
                        return Some(c);
                    }
                }
                Mark::Done => {}
            }
        }
        path.pop();
        mark[n] = Mark::Done;
        None
    }
    for n in 0..deps.len() {
        if mark[n] == Mark::New {
            if let Some(c) = dfs(n, deps, &mut mark, &mut path) {
                return Some(c);
            }
        }
    }
    None
}

/// Number of values each input and output must retain: one plus the largest
/// past offset it is read at.
pub fn memory_bounds(graph: &DependencyGraph) -> BTreeMap<String, usize> {
    let mut bounds = BTreeMap::new();
    for (id, node) in graph.nodes.iter().enumerate() {
        if let Node::Stream(StreamRef::Input(_) | StreamRef::Output(_)) = node {
            let deepest = graph
                .incoming(id)
                .filter_map(|e| match e.kind {
                    AccessKind::Sync { offset } => Some(offset.unsigned_abs() as usize),
                    _ => None,
                })
                .max()
                .unwrap_or(0);
            bounds.insert(graph.names[id].clone(), deepest + 1);
        }
    }
    bounds
}

/// Distinct `(target, duration)` windows read anywhere in the specification.
pub fn window_requirements(graph: &DependencyGraph) -> Vec<(String, Rational)> {
    let mut out: Vec<(String, Rational)> = Vec::new();
    for e in &graph.edges {
        if let AccessKind::Window { duration, .. } = e.kind {
            let key = (graph.names[e.to].clone(), duration);
            if !out.contains(&key) {
                out.push(key);
            }
        }
    }
    out
}
