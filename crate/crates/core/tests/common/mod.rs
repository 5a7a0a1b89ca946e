//! Brute-force oracles and random generators shared by the integration
//! tests and the acceptance gate. Nothing here goes through the planner,
//! the executor or the automaton.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use fpsparql::parser::{
    CompareOp, FilterExpr, Operand, PatternClass, PredicateTerm, RegexAst, RepeatKind, SelectQuery,
    Term, TriplePattern, Variable,
};
use fpsparql::store::{
    AttributeRow, FolderRecord, PathEdge, PathRecord, PathWord, RelationshipRow, Store,
};
use fpsparql::value::{compare_values, NodeId, Value};
use fpsparql::BindingTable;
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------- corpus

/// Reference queries in the order they can be run: the bibliographic
/// graph first, then the event log.
pub const BIBLIO_CORPUS: &[(&str, &str)] = &[
    (
        "web page of rdf chapter author",
        "select ?w where { ?c @title 'Querying RDF Data'. ?c author ?a. ?a @webPage ?w. }",
    ),
    (
        "caise papers",
        "select ?p where { ?p @type paper. ?p publishedIn 'CAiSE'. }",
    ),
    (
        "caise folder",
        "fconstruct CAiSEPapers as ?fn
         select ?p
         where {
         ?fn @description 'set of ...'.
         ?p @type paper.
         ?p publishedIn 'CAiSE'.
         }",
    ),
    (
        "sigmod folder",
        "fconstruct SIGMODPapers select ?p where { ?p @type paper. ?p publishedIn 'SIGMOD'. }",
    ),
    (
        "sigmod08",
        "fconstruct SIGMOD08 select ?p where { ?p publishedIn SIGMOD. ?p @year '2008'. }",
    ),
    (
        "sigmod09",
        "fconstruct SIGMOD09 select ?p where { ?p publishedIn SIGMOD. ?p @year '2009'. }",
    ),
    (
        "sigmod10",
        "fconstruct SIGMOD10 select ?p where { ?p publishedIn SIGMOD. ?p @year '2010'. }",
    ),
    (
        "sigmod folder of folders",
        "fconstruct SIGMOD as ?fn
         (SIGMOD08,SIGMOD09,SIGMOD10)
         where {
         ?fn @description 'set of related folder nodes'.
         }",
    ),
    (
        "citation path",
        "pconstruct p2p1Path
         (?startNode,?endNode,(?e ?n)* ?citedByEdge (?n ?e)*)
         where {
         ?startNode @id p2.
         ?endNode @id p1.
         ?n @isA entityNode.
         ?e @isA edge.
         ?citedByEdge @isA edge.
         ?citedByEdge @label citedBy.
         }",
    ),
    (
        "author1 in caise",
        "(CAiSEPapers) apply(
         select ?p
         where {
         ?p @type paper.
         ?p authoredBy ?a.
         ?a @type author.
         ?a @name 'author1'.
         })",
    ),
    (
        "author1 in caise or sigmod",
        "(CAiSEPapers union SIGMODPapers) apply (
         select ?p
         where {
         ?p @type paper.
         ?p authoredBy ?a.
         ?a @type author.
         ?a @name 'author1'.
         })",
    ),
    (
        "sql titles on citation path",
        "(p2p1Path) apply (
         select ?p
         where {
         ?p @type paper.
         ?p @title ?t.
         Filter regex(?t,\"SQL\").
         })",
    ),
];

pub const EVENTS_CORPUS: &[(&str, &str)] = &[
    (
        "brainstorming09s2 folder",
        "fconstruct brainstorming09s2 as ?fn
         select ?e
         where{
         ?fn @description 'related events...'.
         ?e @type Event.
         ?e @timestamp ?date.
         FILTER (?date > \"2009-07-19\" ^^xsd:date &&
         ?date > \"2009-08-08\" ^^xsd:date).
         }",
    ),
    (
        "updates answering comments",
        "(brainstorming09s2) apply (
         select ?a
         where {
         ?e @type 'Event'.
         ?e @activityType 'update'.
         ?e @ArtifactName ?a.
         ?e wasTriggeredBy ?x.
         ?x @type 'Event'.
         ?x @activityType 'comment'.
         })",
    ),
    (
        "brainstorming10s1",
        "fconstruct brainstorming10s1 select ?e where {
         ?e @type Event. ?e @timestamp ?d.
         FILTER (?d >= \"2010-03-01\"^^xsd:date && ?d <= \"2010-03-21\"^^xsd:date). }",
    ),
    (
        "design10s1",
        "fconstruct design10s1 select ?e where {
         ?e @type Event. ?e @timestamp ?d.
         FILTER (?d >= \"2010-04-12\"^^xsd:date && ?d <= \"2010-05-02\"^^xsd:date). }",
    ),
    (
        "updaters in two phases",
        "(brainstorming10s1 union design10s1) apply (
         select ?u
         where {
         ?e @type 'Event'.
         ?e @activityType 'update'.
         ?e @UseName ?u.
         })",
    ),
    (
        "bug chain path",
        "pconstruct myPathNode
         (?startNode,?endNode,(?e ?n)* ?e ?node ?e (?n ?e)* )
         where {
         ?startNode @type 'Event'.
         ?startNode @activityType 'generate'.
         ?startNode @artifactName 'brainDoc.doc'.
         ?startNode @UserGroup 'project4'.
         ?startNode @timestamp ?date.
         ?endNode @type 'Event'.
         ?endNode @activityType 'generate'.
         ?endNode @artifactName 'designDoc.doc'.
         ?endNode @UserGroup 'project4'.
         ?endNode @timestamp ?date.
         ?n @isA 'entityNode'.
         ?n @type 'Event'.
         ?n @timestamp ?date.
         ?e @isA 'edge'.
         ?node @type 'Event'.
         ?node @activityType 'response'.
         ?node @layer 'Wiki'.
         ?node @layerPart 'bug'.
         ?node @timestamp ?date.
         FILTER (?date > \"2009-07-19\" ^^xsd:date &&
         ?date > \"2009-11-04\" ^^xsd:date). }",
    ),
    (
        "artifacts generated on chain",
        "(myPathNode) apply (
         select ?a
         where {
         ?e @type 'Event'.
         ?e @activityType 'generate'.
         ?e @ArtifactName ?a.
         })",
    ),
];

// ---------------------------------------------------------------- BGP oracle

type Row = BTreeMap<Variable, Value>;

/// Every store row as `(subject, predicate, object)`.
pub fn all_triples(store: &Store) -> Vec<(NodeId, String, Value)> {
    let mut out: Vec<(NodeId, String, Value)> = store
        .attribute_rows()
        .iter()
        .map(|r| (r.subject.clone(), r.attribute.to_string(), r.value.clone()))
        .collect();
    out.extend(store.relationship_rows().iter().map(|r| {
        (
            r.subject.clone(),
            r.predicate.to_string(),
            Value::Node(r.object.clone()),
        )
    }));
    out
}

fn bind(row: &mut Row, var: &Variable, value: Value) -> bool {
    match row.get(var) {
        Some(existing) if !existing.same_term(&value) => false,
        Some(Value::Str(_)) if matches!(value, Value::Node(_)) => {
            row.insert(var.clone(), value);
            true
        }
        Some(_) => true,
        None => {
            row.insert(var.clone(), value);
            true
        }
    }
}

fn term_ok(row: &mut Row, t: &Term, value: Value) -> bool {
    match t {
        Term::Var(v) => bind(row, v, value),
        Term::Const(c) => c.same_term(&value),
    }
}

/// Filter semantics restated from scratch: `=` and `!=` compare terms,
/// ordering needs comparable values, regex searches the lexical text.
pub fn filter_holds(f: &FilterExpr, row: &Row) -> bool {
    match f {
        FilterExpr::And(a, b) => filter_holds(a, row) && filter_holds(b, row),
        FilterExpr::Or(a, b) => filter_holds(a, row) || filter_holds(b, row),
        FilterExpr::Regex { var, pattern } => {
            let re = regex::Regex::new(pattern).expect("valid regex");
            re.is_match(row[var].text())
        }
        FilterExpr::Compare { lhs, op, rhs } => {
            let get = |o: &Operand| match o {
                Operand::Var(v) => row[v].clone(),
                Operand::Value(c) => c.clone(),
            };
            let (a, b) = (get(lhs), get(rhs));
            match op {
                CompareOp::Eq => a.same_term(&b),
                CompareOp::Ne => !a.same_term(&b),
                _ => match compare_values(&a, &b) {
                    None => false,
                    Some(ord) => match op {
                        CompareOp::Lt => ord.is_lt(),
                        CompareOp::Le => ord.is_le(),
                        CompareOp::Gt => ord.is_gt(),
                        CompareOp::Ge => ord.is_ge(),
                        _ => unreachable!(),
                    },
                },
            }
        }
    }
}

/// Patterns whose subject a scope restricts: relationship and
/// variable-predicate patterns, or attribute patterns when there are no others.
pub fn naive_scoped_patterns(q: &SelectQuery) -> Vec<&TriplePattern> {
    let rel: Vec<&TriplePattern> = q
        .patterns
        .iter()
        .filter(|p| p.class() != PatternClass::Attribute)
        .collect();
    if rel.is_empty() {
        q.patterns.iter().collect()
    } else {
        rel
    }
}

/// Nested-loop evaluation in written order. With a scope, the subject of
/// every scoped pattern must end up a member.
pub fn naive_select(
    store: &Store,
    q: &SelectQuery,
    scope: Option<&BTreeSet<NodeId>>,
) -> BindingTable {
    let triples = all_triples(store);
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut by_predicate: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (s, p, _)) in triples.iter().enumerate() {
        by_subject.entry(s.as_str()).or_default().push(i);
        by_predicate.entry(p.as_str()).or_default().push(i);
    }
    let everything: Vec<usize> = (0..triples.len()).collect();
    let none: Vec<usize> = Vec::new();
    let mut rows: Vec<Row> = vec![Row::new()];
    for p in &q.patterns {
        let mut next = Vec::new();
        for row in &rows {
            // Candidate buckets only skip triples that cannot match.
            let subject = match &p.subject {
                Term::Const(c) => Some(c.text()),
                Term::Var(v) => row.get(v).map(Value::text),
            };
            let candidates = match (subject, &p.predicate) {
                (Some(s), _) => by_subject.get(s).unwrap_or(&none),
                (None, PredicateTerm::Name(n)) => by_predicate.get(&**n).unwrap_or(&none),
                (None, PredicateTerm::Var(_)) => &everything,
            };
            for &i in candidates {
                let (s, pred, o) = &triples[i];
                let mut r = row.clone();
                let ok = term_ok(&mut r, &p.subject, Value::Node(s.clone()))
                    && match &p.predicate {
                        PredicateTerm::Name(n) => &**n == pred.as_str(),
                        PredicateTerm::Var(v) => {
                            bind(&mut r, v, Value::node(pred).expect("predicate id"))
                        }
                    }
                    && term_ok(&mut r, &p.object, o.clone());
                if ok {
                    next.push(r);
                }
            }
        }
        rows = next;
    }
    let scoped = naive_scoped_patterns(q);
    let rows: Vec<Vec<Value>> = rows
        .into_iter()
        .filter(|r| q.filters.iter().all(|f| filter_holds(f, r)))
        .filter(|r| match scope {
            None => true,
            Some(members) => scoped.iter().all(|p| {
                let subject = match &p.subject {
                    Term::Const(c) => Some(c.text()),
                    Term::Var(v) => r[v].node_text(),
                };
                members.iter().any(|m| subject == Some(m.as_str()))
            }),
        })
        .map(|r| q.projection.iter().map(|v| r[v].clone()).collect())
        .collect();
    BindingTable::from_rows(q.projection.clone(), rows)
}

// ---------------------------------------------------------------- path oracles

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Symbol {
    Edge(PathEdge),
    Node(NodeId),
}

/// The interior word `e1 n1 e2 ... ek` of a path.
pub fn interior_word(p: &PathWord) -> Vec<Symbol> {
    let mut out = Vec::new();
    for (i, e) in p.edges.iter().enumerate() {
        if i > 0 {
            out.push(Symbol::Node(p.nodes[i].clone()));
        }
        out.push(Symbol::Edge(e.clone()));
    }
    out
}

fn ends_after(
    ast: &RegexAst,
    word: &[Symbol],
    from: usize,
    test: &dyn Fn(&Variable, &Symbol) -> bool,
) -> BTreeSet<usize> {
    match ast {
        RegexAst::Element(v) => match word.get(from) {
            Some(sym) if test(v, sym) => BTreeSet::from([from + 1]),
            _ => BTreeSet::new(),
        },
        RegexAst::Group(x) => ends_after(x, word, from, test),
        RegexAst::Concat(xs) => {
            let mut cur = BTreeSet::from([from]);
            for x in xs {
                cur = cur
                    .iter()
                    .flat_map(|&p| ends_after(x, word, p, test))
                    .collect();
            }
            cur
        }
        RegexAst::Alternation(xs) => xs
            .iter()
            .flat_map(|x| ends_after(x, word, from, test))
            .collect(),
        RegexAst::Repeat(x, kind) => {
            let once = ends_after(x, word, from, test);
            match kind {
                RepeatKind::Optional => {
                    let mut out = once;
                    out.insert(from);
                    out
                }
                RepeatKind::ZeroOrMore | RepeatKind::OneOrMore => {
                    let mut seen: BTreeSet<usize> = once.clone();
                    let mut frontier: Vec<usize> = once.into_iter().collect();
                    while let Some(p) = frontier.pop() {
                        for q in ends_after(x, word, p, test) {
                            if seen.insert(q) {
                                frontier.push(q);
                            }
                        }
                    }
                    if *kind == RepeatKind::ZeroOrMore {
                        seen.insert(from);
                    }
                    seen
                }
            }
        }
    }
}

/// Backtracking matcher that runs the expression tree directly over a word.
pub fn word_matches(
    ast: &RegexAst,
    word: &[Symbol],
    test: &dyn Fn(&Variable, &Symbol) -> bool,
) -> bool {
    ends_after(ast, word, 0, test).contains(&word.len())
}

/// Every walk of 1..=max_edges edges from a start to an end.
pub fn all_walks(
    store: &Store,
    starts: &BTreeSet<NodeId>,
    ends: &BTreeSet<NodeId>,
    max_edges: usize,
) -> Vec<PathWord> {
    walks_through(store, starts, ends, max_edges, &|_| true)
}

/// Every bounded walk from a start to an end whose interior nodes all pass
/// `interior`. Walks that can no longer reach an end in the remaining
/// budget are abandoned early.
pub fn walks_through(
    store: &Store,
    starts: &BTreeSet<NodeId>,
    ends: &BTreeSet<NodeId>,
    max_edges: usize,
    interior: &dyn Fn(&NodeId) -> bool,
) -> Vec<PathWord> {
    let mut dist: BTreeMap<NodeId, usize> = ends.iter().map(|e| (e.clone(), 0)).collect();
    let mut queue: VecDeque<NodeId> = ends.iter().cloned().collect();
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if !ends.contains(&x) && !interior(&x) {
            continue;
        }
        for r in store.relationship_rows().iter().filter(|r| r.object == x) {
            if !dist.contains_key(&r.subject) {
                dist.insert(r.subject.clone(), d + 1);
                queue.push_back(r.subject.clone());
            }
        }
    }
    fn go(
        store: &Store,
        w: &mut PathWord,
        ends: &BTreeSet<NodeId>,
        max_edges: usize,
        interior: &dyn Fn(&NodeId) -> bool,
        dist: &BTreeMap<NodeId, usize>,
        out: &mut Vec<PathWord>,
    ) {
        let last = w.nodes.last().expect("walks have a node").clone();
        if !w.edges.is_empty() && ends.contains(&last) {
            out.push(w.clone());
        }
        if w.edges.len() == max_edges || (!w.edges.is_empty() && !interior(&last)) {
            return;
        }
        for r in store
            .relationship_rows()
            .iter()
            .filter(|r| r.subject == last)
        {
            match dist.get(&r.object) {
                Some(d) if w.edges.len() + 1 + d <= max_edges => {}
                _ => continue,
            }
            w.nodes.push(r.object.clone());
            w.edges.push(PathEdge {
                predicate: r.predicate.clone(),
                edge_id: r.edge_id.clone(),
            });
            go(store, w, ends, max_edges, interior, dist, out);
            w.nodes.pop();
            w.edges.pop();
        }
    }
    let mut out = Vec::new();
    for s in starts {
        let mut w = PathWord {
            nodes: vec![s.clone()],
            edges: Vec::new(),
        };
        go(store, &mut w, ends, max_edges, interior, &dist, &mut out);
    }
    out.sort_by(|a, b| (a.len(), &a.nodes, &a.edges).cmp(&(b.len(), &b.nodes, &b.edges)));
    out
}

pub fn bfs_reaches(store: &Store, from: &NodeId, to: &NodeId) -> bool {
    let mut seen = BTreeSet::from([from.clone()]);
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(u) = queue.pop_front() {
        if &u == to {
            return true;
        }
        for r in store.relationship_rows().iter().filter(|r| r.subject == u) {
            if seen.insert(r.object.clone()) {
                queue.push_back(r.object.clone());
            }
        }
    }
    false
}

// ---------------------------------------------------------------- generators

pub const COLORS: [&str; 3] = ["red", "green", "blue"];
pub const PREDICATES: [&str; 3] = ["p", "q", "r"];

pub fn load(text: &str) -> Store {
    let mut s = Store::new();
    let report = s.load_triples(text.as_bytes()).expect("in-memory load");
    assert!(
        report.rejected_lines.is_empty(),
        "{:?}",
        report.rejected_lines
    );
    s
}

/// Nodes `n0..` with a colour, a small number and sometimes a date, plus
/// random `p`/`q`/`r` edges.
pub fn random_store_text(rng: &mut impl Rng, max_nodes: usize, edge_factor: usize) -> String {
    let n = rng.gen_range(2..=max_nodes);
    let mut text = String::new();
    for i in 0..n {
        text += &format!("n{i} @color {} .\n", COLORS.choose(rng).unwrap());
        text += &format!("n{i} @num \"{}\" .\n", rng.gen_range(0..4));
        if rng.gen_bool(0.5) {
            text += &format!(
                "n{i} @day \"2009-0{}-1{}\"^^xsd:date .\n",
                rng.gen_range(1..10),
                rng.gen_range(0..10)
            );
        }
        if rng.gen_bool(0.2) {
            text += &format!("n{i} @ref \"n{}\" .\n", rng.gen_range(0..n));
        }
    }
    let edges = rng.gen_range(0..=edge_factor * n);
    for _ in 0..edges {
        text += &format!(
            "n{} {} n{} .\n",
            rng.gen_range(0..n),
            PREDICATES.choose(rng).unwrap(),
            rng.gen_range(0..n)
        );
    }
    text
}

/// Random BGP text over `?a..?d` (and `?p` as a predicate) with an
/// optional filter.
pub fn random_select_text(rng: &mut impl Rng, n_nodes: usize) -> String {
    const VARS: [&str; 4] = ["?a", "?b", "?c", "?d"];
    let node = |rng: &mut dyn rand::RngCore| format!("n{}", rng.gen_range(0..n_nodes.max(1)));
    let k = rng.gen_range(1..=4);
    let mut patterns = Vec::new();
    let mut used: Vec<String> = Vec::new();
    for i in 0..k {
        let subject = if i > 0 && !used.is_empty() && rng.gen_bool(0.6) {
            used.choose(rng).unwrap().clone()
        } else if rng.gen_bool(0.85) {
            VARS.choose(rng).unwrap().to_string()
        } else {
            node(rng)
        };
        let var = VARS.choose(rng).unwrap().to_string();
        let (predicate, object) = match rng.gen_range(0..7) {
            0 => (
                "@color".to_string(),
                format!("'{}'", COLORS.choose(rng).unwrap()),
            ),
            1 => ("@num".to_string(), var),
            2 => ("@ref".to_string(), var),
            3 => ("@day".to_string(), var),
            4 => ("?p".to_string(), var),
            _ => (
                PREDICATES.choose(rng).unwrap().to_string(),
                if rng.gen_bool(0.8) { var } else { node(rng) },
            ),
        };
        for t in [&subject, &predicate, &object] {
            if t.starts_with('?') && !used.contains(t) {
                used.push(t.clone());
            }
        }
        patterns.push(format!("{subject} {predicate} {object} ."));
    }
    if used.is_empty() {
        patterns.push("?a @color ?b .".to_string());
        used.extend(["?a".to_string(), "?b".to_string()]);
    }
    let mut filter = String::new();
    if rng.gen_bool(0.4) {
        let v = used.choose(rng).unwrap().clone();
        filter = match rng.gen_range(0..4) {
            0 => format!("FILTER ({v} != {}) .", node(rng)),
            1 => format!("FILTER ({v} > \"1\" || {v} = 'red') ."),
            2 => format!("FILTER ({v} < \"2009-05-01\"^^xsd:date) ."),
            _ => format!("FILTER regex({v}, \"[02]\") ."),
        };
    }
    let mut proj: Vec<&str> = used
        .iter()
        .map(String::as_str)
        .filter(|_| rng.gen_bool(0.6))
        .collect();
    if proj.is_empty() {
        proj.push(&used[0]);
    }
    format!(
        "select {} where {{ {} {filter} }}",
        proj.join(" "),
        patterns.join(" ")
    )
}

/// Role of a leaf in a generated path expression.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum LeafUse {
    Edge,
    Node,
}

fn leaf(
    rng: &mut dyn rand::RngCore,
    u: LeafUse,
    uses: &mut BTreeMap<String, BTreeSet<LeafUse>>,
) -> String {
    const LEAVES: [&str; 4] = ["?x", "?y", "?z", "?w"];
    let v = LEAVES.choose(rng).unwrap().to_string();
    uses.entry(v.clone()).or_default().insert(u);
    v
}

/// A generated expression whose words are all interior words: odd length,
/// edge positions first and last.
pub fn random_regex(
    rng: &mut impl Rng,
    depth: u32,
    uses: &mut BTreeMap<String, BTreeSet<LeafUse>>,
) -> String {
    if depth == 0 {
        return leaf(rng, LeafUse::Edge, uses);
    }
    match rng.gen_range(0..6) {
        0 => leaf(rng, LeafUse::Edge, uses),
        1 => {
            let a = random_regex(rng, depth - 1, uses);
            let n = leaf(rng, LeafUse::Node, uses);
            let b = random_regex(rng, depth - 1, uses);
            format!("{a} {n} {b}")
        }
        2 => {
            let a = random_regex(rng, depth - 1, uses);
            let b = random_regex(rng, depth - 1, uses);
            format!("({a} | {b})")
        }
        k => {
            let a = random_regex(rng, depth - 1, uses);
            let n = leaf(rng, LeafUse::Node, uses);
            let b = random_regex(rng, depth - 1, uses);
            let op = ["*", "+", "?"][k - 3];
            format!("{a} ({n} {b}){op}")
        }
    }
}

/// Constraint attached to one leaf variable in a generated path query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafSpec {
    pub var: String,
    pub is_node: bool,
    pub is_edge: bool,
    /// `(attribute, value)` pairs the element must carry.
    pub attrs: Vec<(String, String)>,
}

impl LeafSpec {
    pub fn where_text(&self) -> String {
        let mut out = String::new();
        if self.is_node {
            out += &format!("{} @isA entityNode . ", self.var);
        }
        if self.is_edge {
            out += &format!("{} @isA edge . ", self.var);
        }
        for (a, v) in &self.attrs {
            out += &format!("{} {a} {v} . ", self.var);
        }
        out
    }

    /// Edges expose only `@label`; nodes expose their stored attributes.
    pub fn accepts(&self, store: &Store, at_edge_position: bool, sym: &Symbol) -> bool {
        match sym {
            Symbol::Edge(e) => {
                at_edge_position
                    && !self.is_node
                    && self
                        .attrs
                        .iter()
                        .all(|(a, v)| a == "@label" && *v == *e.predicate)
            }
            Symbol::Node(n) => {
                !at_edge_position
                    && !self.is_edge
                    && self.attrs.iter().all(|(a, v)| {
                        store
                            .attribute_rows()
                            .iter()
                            .any(|r| r.subject == *n && *r.attribute == **a && r.value.text() == v)
                    })
            }
        }
    }
}

pub fn random_leaf_specs(
    rng: &mut impl Rng,
    uses: &BTreeMap<String, BTreeSet<LeafUse>>,
) -> Vec<LeafSpec> {
    uses.iter()
        .map(|(var, u)| {
            let edge_only = u.len() == 1 && u.contains(&LeafUse::Edge);
            let node_only = u.len() == 1 && u.contains(&LeafUse::Node);
            let mut spec = LeafSpec {
                var: var.clone(),
                is_node: node_only && rng.gen_bool(0.5),
                is_edge: edge_only && rng.gen_bool(0.5),
                attrs: Vec::new(),
            };
            match rng.gen_range(0..4) {
                0 if !node_only => spec
                    .attrs
                    .push(("@label".into(), PREDICATES.choose(rng).unwrap().to_string())),
                1 if !edge_only => spec
                    .attrs
                    .push(("@color".into(), COLORS.choose(rng).unwrap().to_string())),
                _ => {}
            }
            spec
        })
        .collect()
}

/// A random path query over a random store: the PCONSTRUCT text plus what
/// the oracle needs to re-check it.
pub struct PathCase {
    pub store: Store,
    pub query: String,
    pub regex: String,
    pub leaves: Vec<LeafSpec>,
    pub max_edges: usize,
}

pub fn random_path_case(rng: &mut impl Rng, max_nodes: usize, max_edges: usize) -> PathCase {
    let store = load(&random_store_text(rng, max_nodes, 2));
    let mut uses = BTreeMap::new();
    let depth = rng.gen_range(0..=3);
    let regex = random_regex(rng, depth, &mut uses);
    let leaves = random_leaf_specs(rng, &uses);
    let constraints: String = leaves.iter().map(LeafSpec::where_text).collect();
    let (from, to) = (COLORS.choose(rng).unwrap(), COLORS.choose(rng).unwrap());
    let query = format!(
        "pconstruct P (?s, ?t, {regex}) where {{ ?s @color {from} . ?t @color {to} . {constraints}}}"
    );
    PathCase {
        store,
        query,
        regex,
        leaves,
        max_edges: rng.gen_range(1..=max_edges),
    }
}

impl PathCase {
    /// Exhaustive answer: every bounded walk between the endpoint sets
    /// whose interior word the expression tree accepts.
    pub fn oracle(&self, starts: &BTreeSet<NodeId>, ends: &BTreeSet<NodeId>) -> Vec<PathWord> {
        let ast = fpsparql::parser::parse_regex(&self.regex).expect("generated expressions parse");
        let test = |v: &Variable, sym: &Symbol, at_edge: bool| match self
            .leaves
            .iter()
            .find(|l| l.var == v.to_string())
        {
            Some(spec) => spec.accepts(&self.store, at_edge, sym),
            None => true,
        };
        all_walks(&self.store, starts, ends, self.max_edges)
            .into_iter()
            .filter(|p| {
                let word = interior_word(p);
                word_matches(&ast, &word, &|v, sym| {
                    test(v, sym, matches!(sym, Symbol::Edge(_)))
                })
            })
            .collect()
    }
}

/// Nodes carrying `@color colour`.
pub fn coloured(store: &Store, colour: &str) -> BTreeSet<NodeId> {
    store
        .attribute_rows()
        .iter()
        .filter(|r| &*r.attribute == "@color" && r.value.text() == colour)
        .map(|r| r.subject.clone())
        .collect()
}

/// Random DAG text: edges only from lower to higher index.
pub fn random_dag_text(rng: &mut impl Rng, max_nodes: usize) -> String {
    let n = rng.gen_range(1..=max_nodes);
    let mut text = String::new();
    for i in 0..n {
        text += &format!("v{i} @type vertex .\n");
    }
    let density = rng.gen_range(0.0..0.08);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                text += &format!("v{i} e v{j} .\n");
            }
        }
    }
    text
}

// ---------------------------------------------------------------- store identity

pub type Snapshot = (
    BTreeSet<AttributeRow>,
    BTreeSet<RelationshipRow>,
    Vec<FolderRecord>,
    Vec<PathRecord>,
    Option<usize>,
);

pub fn snapshot(store: &Store) -> Snapshot {
    (
        store.attribute_rows().iter().cloned().collect(),
        store.relationship_rows().iter().cloned().collect(),
        store.folders().cloned().collect(),
        store.path_nodes().cloned().collect(),
        store.cached_closure().map(|c| c.pair_count()),
    )
}
