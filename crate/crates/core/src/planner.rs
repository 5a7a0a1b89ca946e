//! Logical plans: scan, join, filter and project operators.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::sync::Arc;

use rustc_hash::FxHashSet;

use crate::parser::{
    FilterExpr, PatternClass, PredicateTerm, SelectQuery, Term, TriplePattern, Variable,
};
use crate::store::Store;
use crate::value::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoreKind {
    Entity,
    Graph,
    /// Variable predicate: rows of both stores.
    Both,
}

impl StoreKind {
    pub fn of(pattern: &TriplePattern) -> Self {
        match pattern.class() {
            PatternClass::Attribute => StoreKind::Entity,
            PatternClass::Relationship => StoreKind::Graph,
            PatternClass::Open => StoreKind::Both,
        }
    }
}

/// A resolved folder, path node, or composition of them.
#[derive(Debug, PartialEq, Eq)]
pub struct ScopeSet {
    /// `folder(Name)`, `path(Name)` or a parenthesized composition.
    pub label: String,
    pub members: FxHashSet<NodeId>,
}

impl ScopeSet {
    pub fn contains(&self, id: &str) -> bool {
        self.members.contains(id)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Restriction applied to scans while planning a scoped query.
#[derive(Clone, Debug, Default)]
pub struct ScopeContext {
    pub scope: Option<Arc<ScopeSet>>,
    pub scoped_vars: BTreeSet<Variable>,
    /// Whether attribute patterns are the scoped class (no other pattern exists).
    pub scopes_attributes: bool,
}

impl ScopeContext {
    pub fn none() -> Self {
        Self::default()
    }

    /// Scopes the subjects of relationship patterns, or the subjects of
    /// attribute patterns when the query has no relationship pattern.
    pub fn for_query(scope: Arc<ScopeSet>, query: &SelectQuery) -> Self {
        ScopeContext {
            scope: Some(scope),
            scoped_vars: scoped_vars(query),
            scopes_attributes: query
                .patterns
                .iter()
                .all(|p| p.class() == PatternClass::Attribute),
        }
    }

    /// Scope for the scan of `p`, if its subject is restricted.
    pub fn scan_scope(&self, p: &TriplePattern) -> Option<Arc<ScopeSet>> {
        let scope = self.scope.as_ref()?;
        let restricted = match &p.subject {
            Term::Var(v) => self.scoped_vars.contains(v),
            Term::Const(_) => self.scopes_attributes || p.class() != PatternClass::Attribute,
        };
        restricted.then(|| scope.clone())
    }
}

pub fn scoped_vars(query: &SelectQuery) -> BTreeSet<Variable> {
    let subjects = |want: &dyn Fn(PatternClass) -> bool| -> BTreeSet<Variable> {
        query
            .patterns
            .iter()
            .filter(|p| want(p.class()))
            .filter_map(|p| p.subject_var().cloned())
            .collect()
    };
    let rel = subjects(&|c| c != PatternClass::Attribute);
    if !rel.is_empty()
        || query
            .patterns
            .iter()
            .any(|p| p.class() != PatternClass::Attribute)
    {
        rel
    } else {
        subjects(&|c| c == PatternClass::Attribute)
    }
}

#[derive(Clone, Debug)]
pub struct ScanNode {
    pub pattern: TriplePattern,
    pub store: StoreKind,
    /// Subjects are restricted to this set when present.
    pub scope: Option<Arc<ScopeSet>>,
    pub estimate: usize,
}

#[derive(Clone, Debug)]
pub enum OperatorTree {
    Scan(ScanNode),
    Join {
        left: Box<OperatorTree>,
        right: Box<OperatorTree>,
        on: Vec<Variable>,
    },
    Filter {
        child: Box<OperatorTree>,
        expr: FilterExpr,
    },
    Project {
        child: Box<OperatorTree>,
        vars: Vec<Variable>,
    },
}

impl OperatorTree {
    /// Variables produced by this subtree, in column order.
    pub fn vars(&self) -> Vec<Variable> {
        match self {
            OperatorTree::Scan(s) => distinct(s.pattern.vars().cloned()),
            OperatorTree::Join { left, right, .. } => {
                distinct(left.vars().into_iter().chain(right.vars()))
            }
            OperatorTree::Filter { child, .. } => child.vars(),
            OperatorTree::Project { vars, .. } => vars.clone(),
        }
    }

    pub fn scans(&self) -> Vec<&ScanNode> {
        let mut out = Vec::new();
        self.collect_scans(&mut out);
        out
    }

    fn collect_scans<'a>(&'a self, out: &mut Vec<&'a ScanNode>) {
        match self {
            OperatorTree::Scan(s) => out.push(s),
            OperatorTree::Join { left, right, .. } => {
                left.collect_scans(out);
                right.collect_scans(out);
            }
            OperatorTree::Filter { child, .. } | OperatorTree::Project { child, .. } => {
                child.collect_scans(out)
            }
        }
    }

    /// One operator per line, children indented by two spaces.
    pub fn explain(&self) -> String {
        let mut out = String::new();
        self.explain_into(&mut out, 0);
        out
    }

    fn explain_into(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        match self {
            OperatorTree::Scan(s) => {
                let source = match (&s.scope, s.store) {
                    (Some(scope), _) => scope.label.clone(),
                    (None, StoreKind::Entity) => "entity".into(),
                    (None, StoreKind::Graph) => "graph".into(),
                    (None, StoreKind::Both) => "entity+graph".into(),
                };
                let _ = writeln!(
                    out,
                    "{pad}Scan {} [{source}, est {}]",
                    s.pattern, s.estimate
                );
            }
            OperatorTree::Join { left, right, on } => {
                if on.is_empty() {
                    let _ = writeln!(out, "{pad}Join cartesian");
                } else {
                    let _ = writeln!(out, "{pad}Join on {}", join_vars(on));
                }
                left.explain_into(out, depth + 1);
                right.explain_into(out, depth + 1);
            }
            OperatorTree::Filter { child, expr } => {
                let _ = writeln!(out, "{pad}Filter {expr}");
                child.explain_into(out, depth + 1);
            }
            OperatorTree::Project { child, vars } => {
                let _ = writeln!(out, "{pad}Project {}", join_vars(vars));
                child.explain_into(out, depth + 1);
            }
        }
    }
}

impl fmt::Display for OperatorTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.explain())
    }
}

fn join_vars(vars: &[Variable]) -> String {
    vars.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn distinct(vars: impl IntoIterator<Item = Variable>) -> Vec<Variable> {
    let mut seen = BTreeSet::new();
    vars.into_iter()
        .filter(|v| seen.insert(v.clone()))
        .collect()
}

/// Removes exact duplicates and patterns made redundant by another pattern
/// that differs only in a variable used nowhere else. Variables in
/// `protected` (projection, filters) are never treated as disposable.
pub fn eliminate_redundancies(
    patterns: &[TriplePattern],
    protected: &BTreeSet<Variable>,
) -> Vec<TriplePattern> {
    let mut out: Vec<TriplePattern> = Vec::new();
    for p in patterns {
        if !out.contains(p) {
            out.push(p.clone());
        }
    }
    loop {
        let victim = (0..out.len()).find(|&i| {
            let fresh = fresh_vars(&out, i, protected);
            !fresh.is_empty()
                && (0..out.len()).any(|j| j != i && subsumes(&out[j], &out[i], &fresh))
        });
        match victim {
            Some(i) => {
                out.remove(i);
            }
            None => return out,
        }
    }
}

/// Variables of `patterns[i]` that occur exactly once in the whole list and
/// are not protected.
fn fresh_vars(
    patterns: &[TriplePattern],
    i: usize,
    protected: &BTreeSet<Variable>,
) -> BTreeSet<Variable> {
    patterns[i]
        .vars()
        .filter(|v| !protected.contains(*v))
        .filter(|v| {
            patterns
                .iter()
                .flat_map(TriplePattern::vars)
                .filter(|w| w == v)
                .count()
                == 1
        })
        .cloned()
        .collect()
}

/// True when every row matching `general` can be matched by `kept`, that is
/// `general` equals `kept` except where it holds a fresh variable.
fn subsumes(kept: &TriplePattern, general: &TriplePattern, fresh: &BTreeSet<Variable>) -> bool {
    let term_ok = |g: &Term, k: &Term| match g {
        Term::Var(v) if fresh.contains(v) => true,
        _ => g == k,
    };
    let pred_ok = match &general.predicate {
        PredicateTerm::Var(v) if fresh.contains(v) => true,
        g => *g == kept.predicate,
    };
    term_ok(&general.subject, &kept.subject) && pred_ok && term_ok(&general.object, &kept.object)
}

/// Estimated rows of a scan: exact index counts for a named predicate,
/// whole-store sizes for a variable one.
pub fn estimate_cardinality(pattern: &TriplePattern, store: &Store) -> usize {
    match (&pattern.predicate, &pattern.object) {
        (PredicateTerm::Name(a), Term::Const(v)) if a.starts_with('@') => {
            store.attr_value_count(a, v)
        }
        (PredicateTerm::Name(a), _) if a.starts_with('@') => store.attr_count(a),
        (PredicateTerm::Name(p), _) => store.predicate_count(p),
        (PredicateTerm::Var(_), _) => store.entity_len() + store.graph_len(),
    }
}

/// Scales an estimate by the share of subjects a scope admits, assuming
/// rows spread evenly over subjects.
pub fn scoped_estimate(estimate: usize, scope: &ScopeSet, store: &Store) -> usize {
    let subjects = store.subject_count().max(1);
    if scope.len() >= subjects {
        return estimate;
    }
    (estimate * scope.len()).div_ceil(subjects)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum JoinOrder {
    /// Smallest estimate first, connected patterns before cartesian ones.
    #[default]
    Greedy,
    /// Patterns in the order written.
    AsWritten,
}

#[derive(Clone, Debug)]
pub struct PlanOptions {
    pub join_order: JoinOrder,
    /// Explicit pattern order; overrides `join_order` when set.
    pub order: Option<Vec<usize>>,
    pub push_filters: bool,
    pub eliminate_redundancies: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            join_order: JoinOrder::Greedy,
            order: None,
            push_filters: true,
            eliminate_redundancies: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Plan {
    pub tree: OperatorTree,
    pub warnings: Vec<String>,
}

pub fn plan(query: &SelectQuery, scope: &ScopeContext, store: &Store) -> Plan {
    plan_with(query, scope, store, &PlanOptions::default())
}

pub fn plan_with(
    query: &SelectQuery,
    scope: &ScopeContext,
    store: &Store,
    opts: &PlanOptions,
) -> Plan {
    let mut warnings = Vec::new();
    let patterns = if opts.eliminate_redundancies {
        let mut protected: BTreeSet<Variable> = query.projection.iter().cloned().collect();
        for f in &query.filters {
            protected.extend(f.vars());
        }
        protected.extend(scope.scoped_vars.iter().cloned());
        eliminate_redundancies(&query.patterns, &protected)
    } else {
        query.patterns.clone()
    };

    let scans: Vec<ScanNode> = patterns
        .iter()
        .map(|p| {
            let scope = scope.scan_scope(p);
            let estimate = estimate_cardinality(p, store);
            ScanNode {
                pattern: p.clone(),
                store: StoreKind::of(p),
                estimate: scope
                    .as_ref()
                    .map_or(estimate, |s| scoped_estimate(estimate, s, store)),
                scope,
            }
        })
        .collect();

    let order = match &opts.order {
        Some(o) => o.clone(),
        None => match opts.join_order {
            JoinOrder::Greedy => greedy_order(&scans),
            JoinOrder::AsWritten => (0..scans.len()).collect(),
        },
    };

    for (i, s) in scans.iter().enumerate() {
        let p = &s.pattern;
        let all_vars = matches!(p.subject, Term::Var(_))
            && matches!(p.predicate, PredicateTerm::Var(_))
            && matches!(p.object, Term::Var(_));
        let lonely = !scans
            .iter()
            .enumerate()
            .any(|(j, o)| j != i && shares_var(&o.pattern, p));
        if all_vars && lonely && scans.len() > 1 {
            warnings.push(format!(
                "pattern `{p}` shares no variable with the others; scanning the full store"
            ));
        }
    }

    let mut pending: Vec<&FilterExpr> = query.filters.iter().collect();
    let mut tree: Option<OperatorTree> = None;
    let mut bound: BTreeSet<Variable> = BTreeSet::new();
    for &i in &order {
        let scan = scans[i].clone();
        let scan_vars: BTreeSet<Variable> = scan.pattern.vars().cloned().collect();
        let mut node = OperatorTree::Scan(scan);
        if opts.push_filters && tree.is_some() {
            let (own, rest): (Vec<&FilterExpr>, Vec<&FilterExpr>) = pending
                .into_iter()
                .partition(|f| f.vars().is_subset(&scan_vars));
            pending = rest;
            for f in own {
                node = OperatorTree::Filter {
                    child: Box::new(node),
                    expr: f.clone(),
                };
            }
        }
        tree = Some(match tree {
            None => node,
            Some(left) => {
                let on: Vec<Variable> = bound.intersection(&scan_vars).cloned().collect();
                OperatorTree::Join {
                    left: Box::new(left),
                    right: Box::new(node),
                    on,
                }
            }
        });
        bound.extend(scan_vars);
        if opts.push_filters {
            let (ready, rest): (Vec<&FilterExpr>, Vec<&FilterExpr>) = pending
                .into_iter()
                .partition(|f| f.vars().is_subset(&bound));
            pending = rest;
            for f in ready {
                tree = Some(OperatorTree::Filter {
                    child: Box::new(tree.take().unwrap()),
                    expr: f.clone(),
                });
            }
        }
    }
    let mut tree = tree.expect("queries have at least one pattern");
    for f in pending {
        tree = OperatorTree::Filter {
            child: Box::new(tree),
            expr: f.clone(),
        };
    }
    Plan {
        tree: OperatorTree::Project {
            child: Box::new(tree),
            vars: query.projection.clone(),
        },
        warnings,
    }
}

fn shares_var(a: &TriplePattern, b: &TriplePattern) -> bool {
    a.vars().any(|v| b.vars().any(|w| w == v))
}

/// Smallest estimate first; afterwards the smallest pattern sharing a
/// variable with those already placed. Ties go to the earlier pattern.
fn greedy_order(scans: &[ScanNode]) -> Vec<usize> {
    let mut placed: Vec<usize> = Vec::with_capacity(scans.len());
    let mut bound: BTreeSet<&Variable> = BTreeSet::new();
    while placed.len() < scans.len() {
        let candidates = (0..scans.len()).filter(|i| !placed.contains(i));
        let connected: Vec<usize> = candidates
            .clone()
            .filter(|&i| scans[i].pattern.vars().any(|v| bound.contains(v)))
            .collect();
        let pool: Vec<usize> = if connected.is_empty() {
            candidates.collect()
        } else {
            connected
        };
        let next = *pool
            .iter()
            .min_by_key(|&&i| (scans[i].estimate, i))
            .expect("pool is non-empty");
        bound.extend(scans[next].pattern.vars());
        placed.push(next);
    }
    placed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse, Query};

    fn select(text: &str) -> SelectQuery {
        match parse(text).unwrap() {
            Query::Select(q) => q,
            _ => panic!(),
        }
    }

    fn biblio() -> Store {
        let mut s = Store::new();
        s.load_triples(crate::fixture::biblio().as_bytes()).unwrap();
        s
    }

    #[test]
    fn duplicate_patterns_collapse() {
        let q = select("select ?p where { ?p @type paper. ?p @type paper. }");
        let out = eliminate_redundancies(&q.patterns, &BTreeSet::new());
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn fresh_variable_pattern_is_subsumed() {
        let q = select("select ?p where { ?p authoredBy author1. ?p authoredBy ?x. }");
        let out = eliminate_redundancies(&q.patterns, &[Variable::new("p")].into());
        assert_eq!(out, vec![q.patterns[0].clone()]);
    }

    #[test]
    fn projected_variables_are_not_disposable() {
        let q = select("select ?p ?x where { ?p authoredBy author1. ?p authoredBy ?x. }");
        let protected = q.projection.iter().cloned().collect();
        assert_eq!(eliminate_redundancies(&q.patterns, &protected).len(), 2);
    }

    #[test]
    fn single_pattern_plan_is_project_over_scan() {
        let s = biblio();
        let plan = plan(
            &select("select ?p where { ?p @type paper }"),
            &ScopeContext::none(),
            &s,
        );
        let OperatorTree::Project { child, .. } = &plan.tree else {
            panic!()
        };
        assert!(matches!(**child, OperatorTree::Scan(_)));
    }

    #[test]
    fn smallest_scan_goes_first() {
        let s = biblio();
        let q = select("select ?p where { ?p authoredBy ?a. ?a @name 'author1'. ?p @type paper. }");
        let plan = plan(&q, &ScopeContext::none(), &s);
        let first = &plan.tree.scans()[0].pattern;
        assert_eq!(first, &q.patterns[1]);
    }

    #[test]
    fn filter_sits_right_above_its_variables() {
        let s = biblio();
        let q =
            select("select ?p where { ?p @title ?t. ?p authoredBy ?a. FILTER regex(?t, 'SQL') }");
        let opts = PlanOptions {
            order: Some(vec![0, 1]),
            ..PlanOptions::default()
        };
        let text = plan_with(&q, &ScopeContext::none(), &s, &opts)
            .tree
            .explain();
        let lines: Vec<&str> = text.lines().collect();
        let join_at = lines
            .iter()
            .position(|l| l.trim_start().starts_with("Join"))
            .unwrap();
        let filter_at = lines
            .iter()
            .position(|l| l.trim_start().starts_with("Filter"))
            .unwrap();
        assert!(filter_at > join_at, "{text}");
    }

    #[test]
    fn scoped_variables_prefer_relationship_subjects() {
        let q = select("select ?p where { ?p @type paper. ?p authoredBy ?a. ?a @name 'author1'. }");
        assert_eq!(scoped_vars(&q), [Variable::new("p")].into());
        let q = select("select ?a where { ?e @type Event. ?e @ArtifactName ?a. }");
        assert_eq!(scoped_vars(&q), [Variable::new("e")].into());
    }

    #[test]
    fn narrow_scope_shrinks_estimates_and_leads_the_order() {
        let mut text = String::new();
        for i in 0..100 {
            text += &format!("n{i} @k v .\nn{i} r m{i} .\n");
        }
        text += "n0 @rare v .\nn1 @rare v .\nn2 @rare v .\n";
        let mut s = Store::new();
        s.load_triples(text.as_bytes()).unwrap();
        let scope = Arc::new(ScopeSet {
            label: "folder(F)".into(),
            members: ["n5"]
                .into_iter()
                .map(|m| NodeId::new(m).unwrap())
                .collect(),
        });
        let q = select("select ?x where { ?y @rare v . ?x r ?y . ?x @k v . }");
        let ctx = ScopeContext::for_query(scope, &q);
        let tree = plan(&q, &ctx, &s).tree;
        let first = tree.scans()[0];
        assert_eq!(first.pattern, q.patterns[1]);
        assert_eq!(first.estimate, 1);
        let unscoped = plan(&q, &ScopeContext::none(), &s).tree;
        assert_eq!(unscoped.scans()[0].pattern, q.patterns[0]);
    }

    #[test]
    fn constant_subjects_take_the_scope_of_their_class() {
        let scope = Arc::new(ScopeSet {
            label: "folder(F)".into(),
            members: ["paper1"]
                .into_iter()
                .map(|m| NodeId::new(m).unwrap())
                .collect(),
        });
        let q = select("select ?a where { paper2 authoredBy ?a . ?a @name ?n . }");
        let ctx = ScopeContext::for_query(scope.clone(), &q);
        assert!(ctx.scan_scope(&q.patterns[0]).is_some());
        assert!(ctx.scan_scope(&q.patterns[1]).is_none());
        let q = select("select ?t where { paper2 @title ?t . }");
        assert!(ScopeContext::for_query(scope, &q)
            .scan_scope(&q.patterns[0])
            .is_some());
    }

    #[test]
    fn filters_sit_on_the_scan_that_binds_them() {
        let s = biblio();
        let q = select("select ?p where { ?a @name ?n . ?p authoredBy ?a . ?p @title ?t . FILTER regex(?t, 'SQL') . }");
        let opts = PlanOptions {
            join_order: JoinOrder::AsWritten,
            ..PlanOptions::default()
        };
        let tree = plan_with(&q, &ScopeContext::none(), &s, &opts).tree;
        let OperatorTree::Project { child, .. } = &tree else {
            panic!()
        };
        let OperatorTree::Join { right, .. } = &**child else {
            panic!("{}", tree.explain())
        };
        assert!(
            matches!(&**right, OperatorTree::Filter { .. }),
            "{}",
            tree.explain()
        );
    }

    #[test]
    fn estimate_uses_exact_index_counts() {
        let s = biblio();
        let q = select("select ?p where { ?p @type paper. ?p @type nothing. ?p ?x ?y. }");
        assert_eq!(estimate_cardinality(&q.patterns[0], &s), 4);
        assert_eq!(estimate_cardinality(&q.patterns[1], &s), 0);
    }
}
