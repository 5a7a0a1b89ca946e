//! Enumerates the walks from start nodes to end nodes whose interior word is
//! accepted by a [`PathAutomaton`].

use std::collections::{BTreeSet, VecDeque};

use rustc_hash::{FxHashMap, FxHashSet};

use super::automaton::{PathAutomaton, StateSet};
use super::reach::{ReachabilityStrategy, DEFAULT_CLOSURE_GUARD};
use crate::error::{Error, Result};
use crate::par::{self, ExecMode};
use crate::store::{PathEdge, PathWord, Store};
use crate::value::NodeId;

pub const DEFAULT_MAX_EDGES: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    pub max_edges: usize,
    pub reachability: ReachabilityStrategy,
    /// Keep only the first `n` paths in result order.
    pub max_paths: Option<usize>,
    pub closure_guard: usize,
    pub mode: ExecMode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_edges: DEFAULT_MAX_EDGES,
            reachability: ReachabilityStrategy::Traversal,
            max_paths: None,
            closure_guard: DEFAULT_CLOSURE_GUARD,
            mode: ExecMode::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchResult {
    /// Ordered by edge count, then node sequence, then edge sequence.
    pub paths: Vec<PathWord>,
    /// Set when `max_paths` cut the result short.
    pub truncated: bool,
}

fn rank(a: &PathWord, b: &PathWord) -> std::cmp::Ordering {
    (a.len(), &a.nodes, &a.edges).cmp(&(b.len(), &b.nodes, &b.edges))
}

enum Prune {
    /// Fewest edges from a node to any end.
    Distance(FxHashMap<NodeId, usize>),
    Reaches(FxHashSet<NodeId>),
}

impl Prune {
    fn allows(&self, node: &NodeId, edges_left: usize) -> bool {
        match self {
            Prune::Distance(d) => d.get(node).is_some_and(|&k| k <= edges_left),
            Prune::Reaches(s) => s.contains(node),
        }
    }
}

fn distances_to(store: &Store, ends: &BTreeSet<NodeId>, limit: usize) -> FxHashMap<NodeId, usize> {
    let mut dist: FxHashMap<NodeId, usize> = ends.iter().map(|e| (e.clone(), 0)).collect();
    let mut queue: VecDeque<NodeId> = ends.iter().cloned().collect();
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d == limit {
            continue;
        }
        for r in store.in_edges(v.as_str()) {
            if !dist.contains_key(&r.subject) {
                dist.insert(r.subject.clone(), d + 1);
                queue.push_back(r.subject.clone());
            }
        }
    }
    dist
}

struct Walker<'a> {
    store: &'a Store,
    automaton: &'a PathAutomaton,
    ends: &'a BTreeSet<NodeId>,
    prune: &'a Prune,
    max_edges: usize,
    cap: Option<usize>,
    nodes: Vec<NodeId>,
    edges: Vec<PathEdge>,
    out: Vec<PathWord>,
    truncated: bool,
}

impl Walker<'_> {
    fn walk(&mut self, set: &StateSet) {
        let depth = self.edges.len();
        let here = self.nodes[depth].clone();
        for row in self.store.out_edges(here.as_str()) {
            if !self.prune.allows(&row.object, self.max_edges - depth - 1) {
                continue;
            }
            let after_edge = self.automaton.step_edge(self.store, set, row);
            if after_edge.is_empty() {
                continue;
            }
            self.nodes.push(row.object.clone());
            self.edges.push(PathEdge {
                predicate: row.predicate.clone(),
                edge_id: row.edge_id.clone(),
            });
            if self.ends.contains(&row.object) && self.automaton.accepts(&after_edge) {
                self.emit();
            }
            if depth + 1 < self.max_edges {
                let after_node = self.automaton.step_node(&after_edge, &row.object);
                if !after_node.is_empty() {
                    self.walk(&after_node);
                }
            }
            self.nodes.pop();
            self.edges.pop();
        }
    }

    fn emit(&mut self) {
        self.out.push(PathWord {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        });
        if let Some(cap) = self.cap {
            if self.out.len() >= 2 * cap.max(1024) {
                self.shrink(cap);
            }
        }
    }

    fn shrink(&mut self, cap: usize) {
        self.out.sort_by(rank);
        self.out.dedup();
        if self.out.len() > cap {
            self.out.truncate(cap);
            self.truncated = true;
        }
    }
}

/// Finds every walk of 1 to `max_edges` edges from a start to an end whose
/// edge, node, ..., edge sequence the automaton accepts. Walks may revisit
/// nodes; the edge bound keeps the result finite.
pub fn find_paths(
    store: &Store,
    starts: &BTreeSet<NodeId>,
    ends: &BTreeSet<NodeId>,
    automaton: &PathAutomaton,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    if starts.is_empty() || ends.is_empty() {
        return Err(Error::Validation(
            "path search needs non-empty start and end sets".into(),
        ));
    }
    if cfg.max_edges == 0 {
        return Err(Error::Validation("max_edges must be at least 1".into()));
    }
    let prune = match cfg.reachability {
        ReachabilityStrategy::Traversal => {
            Prune::Distance(distances_to(store, ends, cfg.max_edges))
        }
        ReachabilityStrategy::Closure => {
            Prune::Reaches(store.closure(cfg.closure_guard)?.reaching_any(ends))
        }
        ReachabilityStrategy::Gripp => return Err(Error::NotImplemented("GRIPP reachability")),
    };
    let starts: Vec<NodeId> = starts.iter().cloned().collect();
    let per_start: Vec<(Vec<PathWord>, bool)> = par::map(cfg.mode, &starts, |s| {
        if !store.is_node(s.as_str()) {
            return (Vec::new(), false);
        }
        let mut w = Walker {
            store,
            automaton,
            ends,
            prune: &prune,
            max_edges: cfg.max_edges,
            cap: cfg.max_paths,
            nodes: vec![s.clone()],
            edges: Vec::new(),
            out: Vec::new(),
            truncated: false,
        };
        w.walk(automaton.start());
        if let Some(cap) = cfg.max_paths {
            w.shrink(cap);
        }
        (w.out, w.truncated)
    });
    let mut truncated = per_start.iter().any(|(_, t)| *t);
    let mut paths: Vec<PathWord> = per_start.into_iter().flat_map(|(p, _)| p).collect();
    paths.sort_by(rank);
    paths.dedup();
    if let Some(cap) = cfg.max_paths {
        if paths.len() > cap {
            paths.truncate(cap);
            truncated = true;
        }
    }
    Ok(SearchResult { paths, truncated })
}
