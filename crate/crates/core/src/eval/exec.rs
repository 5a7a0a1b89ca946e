use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rustc_hash::FxHashMap;

use super::filter::FilterCache;
use super::table::BindingTable;
use crate::error::Result;
use crate::par::{self, ExecMode};
use crate::parser::{FilterExpr, PredicateTerm, Term, TriplePattern, Variable};
use crate::planner::{OperatorTree, ScanNode, ScopeSet, StoreKind};
use crate::store::Store;
use crate::value::{prefer, NodeId, TermKey, Value};

/// Counts store rows examined by scans.
#[derive(Debug, Default)]
pub struct ScanStats {
    relationship_rows: AtomicU64,
    attribute_rows: AtomicU64,
}

impl ScanStats {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn relationship_rows(&self) -> u64 {
        self.relationship_rows.load(Ordering::Relaxed)
    }

    pub fn attribute_rows(&self) -> u64 {
        self.attribute_rows.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.relationship_rows.store(0, Ordering::Relaxed);
        self.attribute_rows.store(0, Ordering::Relaxed);
    }
}

#[derive(Clone, Debug, Default)]
pub struct ExecOptions {
    pub mode: ExecMode,
    pub stats: Option<Arc<ScanStats>>,
}

impl ExecOptions {
    pub fn with_mode(mode: ExecMode) -> Self {
        ExecOptions { mode, stats: None }
    }

    pub fn with_stats(stats: Arc<ScanStats>) -> Self {
        ExecOptions {
            mode: ExecMode::default(),
            stats: Some(stats),
        }
    }
}

struct Table {
    vars: Vec<Variable>,
    rows: Vec<Vec<Value>>,
}

pub(crate) fn execute(
    store: &Store,
    tree: &OperatorTree,
    opts: &ExecOptions,
) -> Result<BindingTable> {
    let mut filters = FilterCache::new();
    prepare_filters(tree, &mut filters)?;
    let ex = Executor {
        store,
        opts,
        filters,
    };
    let t = ex.run(tree)?;
    Ok(BindingTable::from_rows(t.vars, t.rows))
}

fn prepare_filters(tree: &OperatorTree, cache: &mut FilterCache) -> Result<()> {
    match tree {
        OperatorTree::Scan(_) => Ok(()),
        OperatorTree::Join { left, right, .. } => {
            prepare_filters(left, cache)?;
            prepare_filters(right, cache)
        }
        OperatorTree::Filter { child, expr } => {
            cache.prepare(expr)?;
            prepare_filters(child, cache)
        }
        OperatorTree::Project { child, .. } => prepare_filters(child, cache),
    }
}

struct Executor<'a> {
    store: &'a Store,
    opts: &'a ExecOptions,
    filters: FilterCache,
}

impl Executor<'_> {
    fn mode(&self) -> ExecMode {
        self.opts.mode
    }

    fn run(&self, tree: &OperatorTree) -> Result<Table> {
        match tree {
            OperatorTree::Scan(scan) => {
                let shape = Shape::new(&scan.pattern, &[]);
                let rows = self.probe(scan, &shape, &[]);
                Ok(Table {
                    vars: shape.new_vars,
                    rows,
                })
            }
            OperatorTree::Join { left, right, on } => {
                let lt = self.run(left)?;
                let mut base = &**right;
                let mut filters = Vec::new();
                while let OperatorTree::Filter { child, expr } = base {
                    filters.push(expr);
                    base = child;
                }
                match base {
                    OperatorTree::Scan(scan) if !on.is_empty() => {
                        let shape = Shape::new(&scan.pattern, &lt.vars);
                        let rows = par::flat_map(self.mode(), &lt.rows, |row| {
                            self.probe(scan, &shape, row)
                        });
                        let mut vars = lt.vars;
                        vars.extend(shape.new_vars);
                        let mut t = Table { vars, rows };
                        for expr in filters.into_iter().rev() {
                            t = self.keep_matching(expr, t)?;
                        }
                        Ok(t)
                    }
                    _ => Ok(hash_join(self.mode(), lt, self.run(right)?)),
                }
            }
            OperatorTree::Filter { child, expr } => {
                let t = self.run(child)?;
                self.keep_matching(expr, t)
            }
            OperatorTree::Project { child, vars } => {
                let t = self.run(child)?;
                let idx: Vec<usize> = vars
                    .iter()
                    .map(|v| {
                        t.vars
                            .iter()
                            .position(|w| w == v)
                            .expect("projected variable is produced below")
                    })
                    .collect();
                let rows = t
                    .rows
                    .iter()
                    .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
                    .collect();
                Ok(Table {
                    vars: vars.clone(),
                    rows,
                })
            }
        }
    }

    fn keep_matching(&self, expr: &FilterExpr, t: Table) -> Result<Table> {
        let keep = self.filter_rows(expr, &t)?;
        let rows = t
            .rows
            .into_iter()
            .zip(keep)
            .filter_map(|(r, k)| k.then_some(r))
            .collect();
        Ok(Table { vars: t.vars, rows })
    }

    fn filter_rows(&self, expr: &FilterExpr, t: &Table) -> Result<Vec<bool>> {
        let index: FxHashMap<&Variable, usize> =
            t.vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
        par::map(self.mode(), &t.rows, |row| {
            self.filters.eval(expr, &|v| index.get(v).map(|&i| &row[i]))
        })
        .into_iter()
        .collect()
    }

    /// Matches `scan` given the values already bound in `row`, returning
    /// `row` extended with the scan's new variables for every match.
    fn probe(&self, scan: &ScanNode, shape: &Shape, row: &[Value]) -> Vec<Vec<Value>> {
        fn known<'a>(slot: &'a Slot, row: &'a [Value]) -> Known<'a> {
            match slot {
                Slot::Const(v) => Known::Value(v),
                Slot::Left(i) => Known::Value(&row[*i]),
                Slot::New(_) => Known::Free,
            }
        }
        let s = match known(&shape.slots[0], row) {
            Known::Value(v) => match v.node_text() {
                Some(t) => Some(t),
                None => return Vec::new(),
            },
            Known::Free => None,
        };
        let p = match (&scan.pattern.predicate, known(&shape.slots[1], row)) {
            (PredicateTerm::Name(n), _) => Some(&**n),
            (_, Known::Value(v)) if v.is_typed() => return Vec::new(),
            (_, Known::Value(v)) => Some(v.text()),
            (_, Known::Free) => None,
        };
        let o = match known(&shape.slots[2], row) {
            Known::Value(v) => Some(v),
            Known::Free => None,
        };

        let mut out = Vec::new();
        let mut counts = (0u64, 0u64);
        let mut emit = |subject: &NodeId, predicate: &Arc<str>, object: Value| {
            let triple = [
                Value::Node(subject.clone()),
                Value::Node(NodeId::from_arc(predicate.clone())),
                object,
            ];
            if let Some(r) = shape.extend(row, triple) {
                out.push(r);
            }
        };
        match_rows(
            self.store,
            scan.store,
            scan.scope.as_deref(),
            s,
            p,
            o,
            &mut counts,
            &mut emit,
        );
        if let Some(stats) = &self.opts.stats {
            stats.attribute_rows.fetch_add(counts.0, Ordering::Relaxed);
            stats
                .relationship_rows
                .fetch_add(counts.1, Ordering::Relaxed);
        }
        out
    }
}

enum Known<'a> {
    Value(&'a Value),
    Free,
}

#[derive(Clone, Debug)]
enum Slot {
    Const(Value),
    Left(usize),
    New(usize),
}

/// How a pattern's positions map onto an input row and the new columns.
struct Shape {
    slots: [Slot; 3],
    new_vars: Vec<Variable>,
}

impl Shape {
    fn new(pattern: &TriplePattern, left: &[Variable]) -> Self {
        let mut new_vars: Vec<Variable> = Vec::new();
        let mut slot_for = |v: &Variable| -> Slot {
            if let Some(i) = left.iter().position(|w| w == v) {
                return Slot::Left(i);
            }
            if let Some(k) = new_vars.iter().position(|w| w == v) {
                return Slot::New(k);
            }
            new_vars.push(v.clone());
            Slot::New(new_vars.len() - 1)
        };
        let subject = match &pattern.subject {
            Term::Var(v) => slot_for(v),
            Term::Const(c) => Slot::Const(c.clone()),
        };
        let predicate = match &pattern.predicate {
            PredicateTerm::Var(v) => slot_for(v),
            PredicateTerm::Name(n) => Slot::Const(Value::Node(NodeId::from_arc(n.clone()))),
        };
        let object = match &pattern.object {
            Term::Var(v) => slot_for(v),
            Term::Const(c) => Slot::Const(c.clone()),
        };
        Shape {
            slots: [subject, predicate, object],
            new_vars,
        }
    }

    fn extend(&self, row: &[Value], triple: [Value; 3]) -> Option<Vec<Value>> {
        let mut fresh: Vec<Option<Value>> = vec![None; self.new_vars.len()];
        let mut left_updates: Vec<(usize, Value)> = Vec::new();
        for (slot, value) in self.slots.iter().zip(triple) {
            match slot {
                Slot::Const(c) => {
                    if !c.same_term(&value) {
                        return None;
                    }
                }
                Slot::Left(i) => {
                    if !row[*i].same_term(&value) {
                        return None;
                    }
                    if let Some(better) = prefer(&row[*i], &value) {
                        left_updates.push((*i, better));
                    }
                }
                Slot::New(k) => match &fresh[*k] {
                    None => fresh[*k] = Some(value),
                    Some(existing) => {
                        if !existing.same_term(&value) {
                            return None;
                        }
                        if let Some(better) = prefer(existing, &value) {
                            fresh[*k] = Some(better);
                        }
                    }
                },
            }
        }
        let mut out = Vec::with_capacity(row.len() + fresh.len());
        out.extend_from_slice(row);
        for (i, v) in left_updates {
            out[i] = v;
        }
        out.extend(
            fresh
                .into_iter()
                .map(|v| v.expect("every new variable occurs in the pattern")),
        );
        Some(out)
    }
}

/// Feeds every store row consistent with the known positions to `emit`,
/// picking the narrowest index available. `counts` receives the number of
/// attribute and relationship rows examined.
#[allow(clippy::too_many_arguments)]
pub(crate) fn match_rows(
    store: &Store,
    kind: StoreKind,
    scope: Option<&ScopeSet>,
    s: Option<&str>,
    p: Option<&str>,
    o: Option<&Value>,
    counts: &mut (u64, u64),
    emit: &mut dyn FnMut(&NodeId, &Arc<str>, Value),
) {
    if let (Some(s), Some(scope)) = (s, scope) {
        if !scope.contains(s) {
            return;
        }
    }
    let in_scope = |subject: &NodeId| scope.is_none_or(|sc| sc.contains(subject.as_str()));

    let want_entity = kind != StoreKind::Graph && p.is_none_or(|p| p.starts_with('@'));
    if want_entity {
        let rows: Box<dyn Iterator<Item = &crate::store::AttributeRow>> = match (s, p, o) {
            (Some(s), _, _) => Box::new(store.attributes_of(s)),
            (None, Some(p), Some(o)) => Box::new(store.attr_value_rows(p, o)),
            (None, Some(p), None) => Box::new(store.attr_rows(p)),
            (None, None, _) => match scope {
                Some(sc) => Box::new(
                    sc.members
                        .iter()
                        .flat_map(|m| store.attributes_of(m.as_str())),
                ),
                None => Box::new(store.attribute_rows().iter()),
            },
        };
        for r in rows {
            counts.0 += 1;
            if p.is_some_and(|p| &*r.attribute != p)
                || s.is_some_and(|s| r.subject.as_str() != s)
                || o.is_some_and(|o| !o.same_term(&r.value))
                || !in_scope(&r.subject)
            {
                continue;
            }
            emit(&r.subject, &r.attribute, r.value.clone());
        }
    }

    let want_graph = kind != StoreKind::Entity && p.is_none_or(|p| !p.starts_with('@'));
    let o_text = match o {
        Some(v) => match v.node_text() {
            Some(t) => Some(t),
            None => return,
        },
        None => None,
    };
    if want_graph {
        let rows: Box<dyn Iterator<Item = &crate::store::RelationshipRow>> =
            match (s, o_text, p, scope) {
                (Some(s), _, _, _) => Box::new(store.out_edges(s)),
                (None, Some(o), _, _) => Box::new(store.in_edges(o)),
                (None, None, Some(p), Some(sc)) if sc.len() < store.predicate_count(p) => {
                    Box::new(sc.members.iter().flat_map(|m| store.out_edges(m.as_str())))
                }
                (None, None, Some(p), _) => Box::new(store.predicate_rows(p)),
                (None, None, None, Some(sc)) => {
                    Box::new(sc.members.iter().flat_map(|m| store.out_edges(m.as_str())))
                }
                (None, None, None, None) => Box::new(store.relationship_rows().iter()),
            };
        for r in rows {
            counts.1 += 1;
            if p.is_some_and(|p| &*r.predicate != p)
                || s.is_some_and(|s| r.subject.as_str() != s)
                || o_text.is_some_and(|o| r.object.as_str() != o)
                || !in_scope(&r.subject)
            {
                continue;
            }
            emit(&r.subject, &r.predicate, Value::Node(r.object.clone()));
        }
    }
}

fn hash_join(mode: ExecMode, left: Table, right: Table) -> Table {
    let shared: Vec<(usize, usize)> = left
        .vars
        .iter()
        .enumerate()
        .filter_map(|(i, v)| right.vars.iter().position(|w| w == v).map(|j| (i, j)))
        .collect();
    let extra: Vec<usize> = (0..right.vars.len())
        .filter(|j| !shared.iter().any(|(_, sj)| sj == j))
        .collect();
    let mut index: FxHashMap<Vec<TermKey>, Vec<usize>> = FxHashMap::default();
    for (k, r) in right.rows.iter().enumerate() {
        let key = shared.iter().map(|&(_, j)| r[j].term_key()).collect();
        index.entry(key).or_default().push(k);
    }
    let rows = par::flat_map(mode, &left.rows, |l| {
        let key: Vec<TermKey> = shared.iter().map(|&(i, _)| l[i].term_key()).collect();
        let Some(matches) = index.get(&key) else {
            return Vec::new();
        };
        matches
            .iter()
            .map(|&k| {
                let r = &right.rows[k];
                let mut out = l.clone();
                for &(i, j) in &shared {
                    if let Some(better) = prefer(&out[i], &r[j]) {
                        out[i] = better;
                    }
                }
                out.extend(extra.iter().map(|&j| r[j].clone()));
                out
            })
            .collect()
    });
    let mut vars = left.vars;
    vars.extend(extra.iter().map(|&j| right.vars[j].clone()));
    Table { vars, rows }
}
