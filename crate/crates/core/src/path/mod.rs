//! Regular path queries: automaton construction, bounded path search and
//! reachability.

mod automaton;
mod construct;
mod reach;
mod search;

pub use automaton::{
    EdgeTest, ElementConstraint, ElementKind, NodeTest, Parity, PathAutomaton, StateSet,
};
pub use construct::{compile_query, eval_pconstruct, PathQuery, PconstructOutcome};
pub use reach::{
    bfs_reachable, build_closure, reachable, ReachabilityStrategy, TransitiveClosure,
    DEFAULT_CLOSURE_GUARD,
};
pub use search::{find_paths, SearchConfig, SearchResult, DEFAULT_MAX_EDGES};
