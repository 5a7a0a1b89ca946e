//! PCONSTRUCT: splits the WHERE block among the start node, the end node
//! and the path-expression leaves, then searches and stores the paths.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rustc_hash::FxHashSet;

use super::automaton::{EdgeTest, ElementConstraint, ElementKind, NodeTest, PathAutomaton};
use super::search::{find_paths, SearchConfig, SearchResult};
use crate::error::{Error, Result};
use crate::eval::{run_select, ExecOptions};
use crate::parser::{
    FilterExpr, PatternClass, PconstructQuery, PredicateTerm, SelectQuery, Term, TriplePattern,
    Variable,
};
use crate::store::{PathWord, Store};
use crate::value::NodeId;

const IS_A: &str = "@isA";

/// A compiled PCONSTRUCT: endpoint sets and the automaton for the interior.
#[derive(Debug)]
pub struct PathQuery {
    pub starts: BTreeSet<NodeId>,
    pub ends: BTreeSet<NodeId>,
    pub automaton: PathAutomaton,
    same_endpoint: bool,
}

impl PathQuery {
    pub fn search(&self, store: &Store, cfg: &SearchConfig) -> Result<SearchResult> {
        if self.starts.is_empty() || self.ends.is_empty() {
            return Ok(SearchResult::default());
        }
        let mut res = find_paths(store, &self.starts, &self.ends, &self.automaton, cfg)?;
        if self.same_endpoint {
            res.paths.retain(|p| p.start() == p.end());
        }
        Ok(res)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PconstructOutcome {
    pub path_node: NodeId,
    pub paths: Vec<PathWord>,
    pub truncated: bool,
}

#[derive(Default)]
struct Role {
    patterns: Vec<TriplePattern>,
    filters: Vec<FilterExpr>,
    locals: BTreeSet<Variable>,
    is_node: bool,
    is_edge: bool,
}

fn directive(p: &TriplePattern) -> Option<&str> {
    match (&p.predicate, &p.object) {
        (PredicateTerm::Name(n), Term::Const(v)) if &**n == IS_A => match v.text() {
            t @ ("entityNode" | "edge") => Some(t),
            _ => None,
        },
        _ => None,
    }
}

fn split_roles(q: &PconstructQuery) -> Result<BTreeMap<Variable, Role>> {
    let elements = q.regex.elements();
    for endpoint in [&q.start_var, &q.end_var] {
        if elements.contains(endpoint) {
            return Err(Error::PathExpr(format!(
                "{endpoint} is a start or end node and cannot also appear in the path expression"
            )));
        }
    }
    let mut roles: BTreeMap<Variable, Role> = BTreeMap::new();
    for v in elements.iter().chain([&q.start_var, &q.end_var]) {
        roles.entry(v.clone()).or_default();
    }
    for p in &q.patterns {
        let subject = p
            .subject_var()
            .filter(|v| roles.contains_key(*v))
            .ok_or_else(|| {
                Error::PathExpr(format!(
                    "pattern '{p}' must have the start, end or a path element as subject"
                ))
            })?
            .clone();
        for v in p.vars().skip(1) {
            if *v != subject && roles.contains_key(v) {
                return Err(Error::PathExpr(format!(
                    "pattern '{p}' relates two path roles, which is not supported"
                )));
            }
        }
        match directive(p) {
            Some("entityNode") => roles.get_mut(&subject).expect("role exists").is_node = true,
            Some(_) => roles.get_mut(&subject).expect("role exists").is_edge = true,
            None => {
                let role = roles.get_mut(&subject).expect("role exists");
                role.locals
                    .extend(p.vars().filter(|v| **v != subject).cloned());
                role.patterns.push(p.clone());
            }
        }
    }
    for f in &q.filters {
        let vars = f.vars();
        let mut placed = false;
        for (name, role) in roles.iter_mut() {
            if vars.iter().all(|v| v == name || role.locals.contains(v)) {
                role.filters.push(f.clone());
                placed = true;
            }
        }
        if !placed {
            return Err(Error::PathExpr(format!(
                "filter '{f}' spans several path roles; each filter must only use one role's variables"
            )));
        }
    }
    for (v, role) in &roles {
        if role.is_node && role.is_edge {
            return Err(Error::PathExpr(format!(
                "{v} cannot be both an entity node and an edge"
            )));
        }
        if role.is_edge && (*v == q.start_var || *v == q.end_var) {
            return Err(Error::PathExpr(format!(
                "start and end variable {v} must be a node, not an edge"
            )));
        }
    }
    Ok(roles)
}

fn node_set(
    store: &Store,
    var: &Variable,
    role: &Role,
    opts: &ExecOptions,
) -> Result<Option<FxHashSet<NodeId>>> {
    if role.patterns.is_empty() {
        return Ok(None);
    }
    let select = SelectQuery {
        projection: vec![var.clone()],
        patterns: role.patterns.clone(),
        filters: role.filters.clone(),
    };
    let table = run_select(store, &select, opts)?;
    Ok(Some(
        table
            .column(var)
            .into_iter()
            .filter_map(|v| v.node_text().and_then(|t| store.node(t)).cloned())
            .collect(),
    ))
}

/// Evaluates the endpoint constraints and builds the automaton.
pub fn compile_query(store: &Store, q: &PconstructQuery, opts: &ExecOptions) -> Result<PathQuery> {
    let mut roles = split_roles(q)?;
    let endpoint = |v: &Variable| -> Result<BTreeSet<NodeId>> {
        let role = &roles[v];
        Ok(match node_set(store, v, role, opts)? {
            Some(s) => s.into_iter().collect(),
            None => store.nodes(),
        })
    };
    let starts = endpoint(&q.start_var)?;
    let ends = endpoint(&q.end_var)?;
    roles.remove(&q.start_var);
    roles.remove(&q.end_var);

    let mut constraints = Vec::with_capacity(roles.len());
    for (var, role) in roles {
        let kind = match (role.is_node, role.is_edge) {
            (true, _) => ElementKind::Node,
            (_, true) => ElementKind::Edge,
            _ => ElementKind::Any,
        };
        let relational = role
            .patterns
            .iter()
            .any(|p| p.class() != PatternClass::Attribute);
        if kind == ElementKind::Edge && relational {
            return Err(Error::PathExpr(format!(
                "edge variable {var} can only be constrained by attributes"
            )));
        }
        let node = if kind == ElementKind::Edge {
            NodeTest::Any
        } else {
            match node_set(store, &var, &role, opts)? {
                Some(s) => NodeTest::Members(Arc::new(s)),
                None => NodeTest::Any,
            }
        };
        let edge = if kind == ElementKind::Node {
            EdgeTest::any()
        } else if relational {
            EdgeTest::never()
        } else {
            EdgeTest::new(store, var.clone(), role.patterns, role.filters)?
        };
        constraints.push(ElementConstraint {
            var,
            kind,
            node,
            edge,
        });
    }
    Ok(PathQuery {
        starts,
        ends,
        automaton: PathAutomaton::new(&q.regex, constraints)?,
        same_endpoint: q.start_var == q.end_var,
    })
}

/// Runs a PCONSTRUCT and stores the resulting path node, possibly with no
/// paths.
pub fn eval_pconstruct(
    store: &mut Store,
    q: &PconstructQuery,
    cfg: &SearchConfig,
    opts: &ExecOptions,
) -> Result<PconstructOutcome> {
    if store.lookup_name(&q.path_name).is_some() {
        return Err(Error::Conflict(format!(
            "name '{}' is already bound",
            q.path_name
        )));
    }
    let compiled = compile_query(store, q, opts)?;
    let res = compiled.search(store, cfg)?;
    let id = store.create_path_node(&q.path_name, &[], res.paths.clone())?;
    Ok(PconstructOutcome {
        path_node: id,
        paths: res.paths,
        truncated: res.truncated,
    })
}
