//! Thompson construction over path-expression leaves, with the edge/node
//! alternation enforced by a parity product.

use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::eval::FilterCache;
use crate::parser::{
    FilterExpr, PredicateTerm, RegexAst, RepeatKind, Term, TriplePattern, Variable,
};
use crate::store::{RelationshipRow, Store, LABEL_ATTR};
use crate::value::{prefer, NodeId, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Node,
    Edge,
    Any,
}

impl ElementKind {
    fn fits(self, parity: Parity) -> bool {
        match self {
            ElementKind::Any => true,
            ElementKind::Node => parity == Parity::Node,
            ElementKind::Edge => parity == Parity::Edge,
        }
    }
}

/// Which kind of symbol the automaton reads next. Interior words start and
/// end with an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Edge,
    Node,
}

impl Parity {
    fn flip(self) -> Self {
        match self {
            Parity::Edge => Parity::Node,
            Parity::Node => Parity::Edge,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug)]
pub enum NodeTest {
    Any,
    Members(Arc<FxHashSet<NodeId>>),
}

impl NodeTest {
    pub fn matches(&self, node: &NodeId) -> bool {
        match self {
            NodeTest::Any => true,
            NodeTest::Members(m) => m.contains(node),
        }
    }
}

/// Attribute patterns tested against an edge. The edge exposes its
/// predicate as `@label` plus the attributes of its edge id, if any.
#[derive(Debug, Default)]
pub struct EdgeTest {
    var: Option<Variable>,
    patterns: Vec<TriplePattern>,
    filters: Vec<FilterExpr>,
    cache: FilterCache,
    /// Outcome for edges without an edge id, by predicate.
    plain: FxHashMap<Arc<str>, bool>,
    never: bool,
}

impl EdgeTest {
    pub fn any() -> Self {
        Self::default()
    }

    /// Matches no edge, for leaves constrained by relationships.
    pub fn never() -> Self {
        EdgeTest {
            never: true,
            ..Self::default()
        }
    }

    pub(crate) fn new(
        store: &Store,
        var: Variable,
        patterns: Vec<TriplePattern>,
        filters: Vec<FilterExpr>,
    ) -> Result<Self> {
        let mut cache = FilterCache::new();
        for f in &filters {
            cache.prepare(f)?;
        }
        let mut test = EdgeTest {
            var: Some(var),
            patterns,
            filters,
            cache,
            plain: FxHashMap::default(),
            never: false,
        };
        if !test.patterns.is_empty() {
            let plain: FxHashMap<Arc<str>, bool> = store
                .predicates()
                .map(|p| (p.clone(), test.eval(store, p, None)))
                .collect();
            test.plain = plain;
        }
        Ok(test)
    }

    pub fn matches(&self, store: &Store, row: &RelationshipRow) -> bool {
        if self.never {
            return false;
        }
        if self.patterns.is_empty() {
            return true;
        }
        match &row.edge_id {
            None => match self.plain.get(&row.predicate) {
                Some(&ok) => ok,
                None => self.eval(store, &row.predicate, None),
            },
            Some(id) => self.eval(store, &row.predicate, Some(id)),
        }
    }

    fn eval(&self, store: &Store, predicate: &Arc<str>, edge_id: Option<&NodeId>) -> bool {
        let mut attrs: Vec<(Arc<str>, Value)> = vec![(
            Arc::from(LABEL_ATTR),
            Value::Node(NodeId::from_arc(predicate.clone())),
        )];
        if let Some(id) = edge_id {
            attrs.extend(
                store
                    .attributes_of(id.as_str())
                    .map(|r| (r.attribute.clone(), r.value.clone())),
            );
        }
        let me = match edge_id {
            Some(id) => Value::Node(id.clone()),
            None => Value::Node(NodeId::from_arc(predicate.clone())),
        };
        let mut binding = crate::eval::Binding::new();
        if let Some(v) = &self.var {
            binding.insert(v.clone(), me);
        }
        self.search(&attrs, 0, &mut binding)
    }

    fn search(
        &self,
        attrs: &[(Arc<str>, Value)],
        i: usize,
        binding: &mut crate::eval::Binding,
    ) -> bool {
        let Some(p) = self.patterns.get(i) else {
            return self
                .filters
                .iter()
                .all(|f| self.cache.eval(f, &|v| binding.get(v)).unwrap_or(false));
        };
        for (attr, value) in attrs {
            if let PredicateTerm::Name(n) = &p.predicate {
                if n != attr {
                    continue;
                }
            }
            if let Term::Const(c) = &p.object {
                if !c.same_term(value) {
                    continue;
                }
            }
            let attr_value = Value::Node(NodeId::from_arc(attr.clone()));
            let mut to_bind: Vec<(&Variable, &Value)> = Vec::new();
            if let PredicateTerm::Var(v) = &p.predicate {
                to_bind.push((v, &attr_value));
            }
            if let Term::Var(v) = &p.object {
                to_bind.push((v, value));
            }
            let mut added: Vec<Variable> = Vec::new();
            let mut ok = true;
            for (var, val) in to_bind {
                match binding.get(var) {
                    Some(existing) if !existing.same_term(val) => {
                        ok = false;
                        break;
                    }
                    Some(existing) => {
                        if let Some(b) = prefer(existing, val) {
                            binding.insert(var.clone(), b);
                        }
                    }
                    None => {
                        binding.insert(var.clone(), val.clone());
                        added.push(var.clone());
                    }
                }
            }
            if ok && self.search(attrs, i + 1, binding) {
                return true;
            }
            for v in added {
                binding.remove(&v);
            }
        }
        false
    }
}

/// The test a leaf variable applies at node and edge positions.
#[derive(Debug)]
pub struct ElementConstraint {
    pub var: Variable,
    pub kind: ElementKind,
    pub node: NodeTest,
    pub edge: EdgeTest,
}

impl ElementConstraint {
    pub fn unconstrained(var: Variable, kind: ElementKind) -> Self {
        ElementConstraint {
            var,
            kind,
            node: NodeTest::Any,
            edge: EdgeTest::any(),
        }
    }
}

/// Sorted, epsilon-closed set of automaton states.
pub type StateSet = Vec<u32>;

#[derive(Debug)]
pub struct PathAutomaton {
    leaves: Vec<ElementConstraint>,
    sym: Vec<Vec<(u32, u32)>>,
    closure: Vec<Vec<u32>>,
    start: StateSet,
    accept: u32,
}

struct Builder {
    eps: Vec<Vec<u32>>,
    sym: Vec<Vec<(u32, u32)>>,
}

impl Builder {
    fn state(&mut self) -> u32 {
        self.eps.push(Vec::new());
        self.sym.push(Vec::new());
        (self.eps.len() - 1) as u32
    }

    fn eps(&mut self, from: u32, to: u32) {
        self.eps[from as usize].push(to);
    }

    /// Returns the fragment's entry and exit states.
    fn build(&mut self, ast: &RegexAst, leaf_of: &FxHashMap<Variable, u32>) -> (u32, u32) {
        match ast {
            RegexAst::Element(v) => {
                let (s, e) = (self.state(), self.state());
                self.sym[s as usize].push((leaf_of[v], e));
                (s, e)
            }
            RegexAst::Group(inner) => self.build(inner, leaf_of),
            RegexAst::Concat(items) => {
                let mut frags = items
                    .iter()
                    .map(|x| self.build(x, leaf_of))
                    .collect::<Vec<_>>()
                    .into_iter();
                let (s, mut e) = frags.next().expect("concatenations are non-empty");
                for (ns, ne) in frags {
                    self.eps(e, ns);
                    e = ne;
                }
                (s, e)
            }
            RegexAst::Alternation(items) => {
                let (s, e) = (self.state(), self.state());
                for x in items {
                    let (xs, xe) = self.build(x, leaf_of);
                    self.eps(s, xs);
                    self.eps(xe, e);
                }
                (s, e)
            }
            RegexAst::Repeat(inner, kind) => {
                let (s, e) = (self.state(), self.state());
                let (is, ie) = self.build(inner, leaf_of);
                self.eps(s, is);
                self.eps(ie, e);
                if matches!(kind, RepeatKind::ZeroOrMore | RepeatKind::OneOrMore) {
                    self.eps(ie, is);
                }
                if matches!(kind, RepeatKind::ZeroOrMore | RepeatKind::Optional) {
                    self.eps(s, e);
                }
                (s, e)
            }
        }
    }
}

impl PathAutomaton {
    /// Builds the automaton. Every leaf variable needs a constraint in
    /// `constraints`; missing ones match anything.
    pub fn new(regex: &RegexAst, constraints: Vec<ElementConstraint>) -> Result<Self> {
        let mut leaves = constraints;
        let mut leaf_of: FxHashMap<Variable, u32> = leaves
            .iter()
            .enumerate()
            .map(|(i, c)| (c.var.clone(), i as u32))
            .collect();
        for v in regex.elements() {
            if !leaf_of.contains_key(&v) {
                leaf_of.insert(v.clone(), leaves.len() as u32);
                leaves.push(ElementConstraint::unconstrained(v, ElementKind::Any));
            }
        }
        let mut b = Builder {
            eps: Vec::new(),
            sym: Vec::new(),
        };
        let (start, accept) = b.build(regex, &leaf_of);
        let closure: Vec<Vec<u32>> = (0..b.eps.len() as u32)
            .map(|q| eps_closure(&b.eps, q))
            .collect();
        check_parity(&b, &leaves, start, accept)?;
        Ok(PathAutomaton {
            start: closure[start as usize].clone(),
            leaves,
            sym: b.sym,
            closure,
            accept,
        })
    }

    pub fn start(&self) -> &StateSet {
        &self.start
    }

    pub fn leaves(&self) -> &[ElementConstraint] {
        &self.leaves
    }

    pub fn state_count(&self) -> usize {
        self.sym.len()
    }

    pub fn accepts(&self, set: &StateSet) -> bool {
        set.binary_search(&self.accept).is_ok()
    }

    /// Reads one symbol at `parity`; `test` says whether a leaf matches it.
    pub fn step(
        &self,
        set: &StateSet,
        parity: Parity,
        test: impl Fn(&ElementConstraint) -> bool,
    ) -> StateSet {
        let mut verdict: Vec<Option<bool>> = vec![None; self.leaves.len()];
        let mut out: Vec<u32> = Vec::new();
        for &q in set {
            for &(leaf, to) in &self.sym[q as usize] {
                let c = &self.leaves[leaf as usize];
                if !c.kind.fits(parity) {
                    continue;
                }
                let ok = *verdict[leaf as usize].get_or_insert_with(|| test(c));
                if ok {
                    out.extend_from_slice(&self.closure[to as usize]);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn step_edge(&self, store: &Store, set: &StateSet, row: &RelationshipRow) -> StateSet {
        self.step(set, Parity::Edge, |c| c.edge.matches(store, row))
    }

    pub fn step_node(&self, set: &StateSet, node: &NodeId) -> StateSet {
        self.step(set, Parity::Node, |c| c.node.matches(node))
    }
}

fn eps_closure(eps: &[Vec<u32>], q: u32) -> Vec<u32> {
    let mut seen = vec![q];
    let mut stack = vec![q];
    while let Some(x) = stack.pop() {
        for &y in &eps[x as usize] {
            if !seen.contains(&y) {
                seen.push(y);
                stack.push(y);
            }
        }
    }
    seen.sort_unstable();
    seen
}

/// Rejects expressions with a leaf occurrence that can never take part in
/// an alternating edge, node, ..., edge word.
fn check_parity(b: &Builder, leaves: &[ElementConstraint], start: u32, accept: u32) -> Result<()> {
    let n = b.eps.len();
    let parities = [Parity::Edge, Parity::Node];
    let mut fwd = vec![[false; 2]; n];
    let mut stack = vec![(start, Parity::Edge)];
    fwd[start as usize][Parity::Edge.index()] = true;
    while let Some((q, par)) = stack.pop() {
        let mut next: Vec<(u32, Parity)> = b.eps[q as usize].iter().map(|&t| (t, par)).collect();
        for &(leaf, t) in &b.sym[q as usize] {
            if leaves[leaf as usize].kind.fits(par) {
                next.push((t, par.flip()));
            }
        }
        for (t, p) in next {
            if !fwd[t as usize][p.index()] {
                fwd[t as usize][p.index()] = true;
                stack.push((t, p));
            }
        }
    }

    let mut rev_eps: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut rev_sym: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    for q in 0..n {
        for &t in &b.eps[q] {
            rev_eps[t as usize].push(q as u32);
        }
        for &(leaf, t) in &b.sym[q] {
            rev_sym[t as usize].push((leaf, q as u32));
        }
    }
    let mut bwd = vec![[false; 2]; n];
    bwd[accept as usize][Parity::Node.index()] = true;
    let mut stack = vec![(accept, Parity::Node)];
    while let Some((q, par)) = stack.pop() {
        let mut prev: Vec<(u32, Parity)> = rev_eps[q as usize].iter().map(|&s| (s, par)).collect();
        for &(leaf, s) in &rev_sym[q as usize] {
            if leaves[leaf as usize].kind.fits(par.flip()) {
                prev.push((s, par.flip()));
            }
        }
        for (s, p) in prev {
            if !bwd[s as usize][p.index()] {
                bwd[s as usize][p.index()] = true;
                stack.push((s, p));
            }
        }
    }

    for (syms, reached) in b.sym.iter().zip(&fwd) {
        for &(leaf, t) in syms {
            let c = &leaves[leaf as usize];
            let live = parities.iter().any(|&par| {
                c.kind.fits(par) && reached[par.index()] && bwd[t as usize][par.flip().index()]
            });
            if !live {
                return Err(Error::PathExpr(format!(
                    "{} cannot take part in a word alternating edges and nodes (edge first and last)",
                    c.var
                )));
            }
        }
    }
    Ok(())
}
