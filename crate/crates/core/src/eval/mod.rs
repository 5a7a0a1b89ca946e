//! Query execution: operator trees, folder construction and scoped queries.

mod exec;
mod filter;
mod table;

use std::collections::BTreeSet;
use std::sync::Arc;

pub use exec::{ExecOptions, ScanStats};
pub use filter::{compare, eval_filter, FilterCache};
pub use table::{Binding, BindingTable};

use crate::error::{Error, Result};
use crate::parser::{ApplyQuery, FconstructQuery, FolderBody, ScopeExpr, SelectQuery, Term};
use crate::planner::{plan, OperatorTree, ScopeContext, ScopeSet};
use crate::store::{NamedNode, Store};
use crate::value::{NodeId, Value};

pub fn eval_select(store: &Store, tree: &OperatorTree, opts: &ExecOptions) -> Result<BindingTable> {
    exec::execute(store, tree, opts)
}

/// Plans and evaluates a select over the whole graph.
pub fn run_select(store: &Store, query: &SelectQuery, opts: &ExecOptions) -> Result<BindingTable> {
    eval_select(store, &plan(query, &ScopeContext::none(), store).tree, opts)
}

/// Folder names resolve to their recursive members, path-node names to the
/// nodes on their stored paths.
pub fn resolve_scope(store: &Store, expr: &ScopeExpr) -> Result<ScopeSet> {
    let members = resolve_members(store, expr)?;
    let label = match expr {
        ScopeExpr::Named(n) => match store.lookup_name(n) {
            Some(NamedNode::Path(_)) => format!("path({n})"),
            _ => format!("folder({n})"),
        },
        composite => format!("({composite})"),
    };
    Ok(ScopeSet {
        label,
        members: members.into_iter().collect(),
    })
}

fn resolve_members(store: &Store, expr: &ScopeExpr) -> Result<BTreeSet<NodeId>> {
    Ok(match expr {
        ScopeExpr::Named(n) => match store.lookup_name(n) {
            Some(NamedNode::Folder(id)) => store.members_of(id, true)?,
            Some(NamedNode::Path(id)) => store.elements_of(id)?,
            None => return Err(Error::unknown("folder or path node", n.as_str())),
        },
        ScopeExpr::Union(a, b) => &resolve_members(store, a)? | &resolve_members(store, b)?,
        ScopeExpr::Intersect(a, b) => &resolve_members(store, a)? & &resolve_members(store, b)?,
        ScopeExpr::Minus(a, b) => &resolve_members(store, a)? - &resolve_members(store, b)?,
    })
}

pub fn plan_apply(store: &Store, query: &ApplyQuery) -> Result<OperatorTree> {
    let scope = Arc::new(resolve_scope(store, &query.scope)?);
    let ctx = ScopeContext::for_query(scope, &query.inner);
    Ok(plan(&query.inner, &ctx, store).tree)
}

pub fn eval_apply(store: &Store, query: &ApplyQuery, opts: &ExecOptions) -> Result<BindingTable> {
    eval_select(store, &plan_apply(store, query)?, opts)
}

/// Creates the folder described by `query`. Nothing is written unless the
/// whole construction succeeds.
pub fn eval_fconstruct(
    store: &mut Store,
    query: &FconstructQuery,
    opts: &ExecOptions,
) -> Result<NodeId> {
    if store.lookup_name(&query.folder_name).is_some() {
        return Err(Error::Conflict(format!(
            "name '{}' is already bound",
            query.folder_name
        )));
    }
    let attrs: Vec<(String, Value)> = query
        .attr_patterns
        .iter()
        .filter_map(|p| match (&p.predicate, &p.object) {
            (crate::parser::PredicateTerm::Name(a), Term::Const(v)) => {
                Some((a.to_string(), v.clone()))
            }
            _ => None,
        })
        .collect();
    match &query.body {
        FolderBody::Members {
            member_var,
            patterns,
            filters,
        } => {
            let select = SelectQuery {
                projection: vec![member_var.clone()],
                patterns: patterns.clone(),
                filters: filters.clone(),
            };
            let table = run_select(store, &select, opts)?;
            let mut members = Vec::with_capacity(table.len());
            for v in table.column(member_var) {
                let id = match v {
                    Value::Node(id) => id.clone(),
                    Value::Str(s) if store.is_node(s) => NodeId::new(&**s)?,
                    other => {
                        return Err(Error::Eval(format!(
                        "member variable {member_var} is bound to the literal {other}, not a node"
                    )))
                    }
                };
                members.push(id);
            }
            store.create_folder(&query.folder_name, &attrs, members)
        }
        FolderBody::Children(children) => {
            store.create_folder_of_folders(&query.folder_name, &attrs, children)
        }
    }
}
