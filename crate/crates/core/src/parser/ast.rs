use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

pub use super::lexer::CompareOp;
use crate::value::Value;

/// Query variable, stored without its leading `?`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(Arc<str>);

impl Variable {
    pub fn new(name: impl AsRef<str>) -> Self {
        Variable(Arc::from(name.as_ref().trim_start_matches('?')))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

impl fmt::Debug for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Term {
    Var(Variable),
    Const(Value),
}

impl Term {
    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum PredicateTerm {
    Var(Variable),
    Name(Arc<str>),
}

/// Which store a pattern reads.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum PatternClass {
    /// Literal `@`-prefixed predicate: entity store.
    Attribute,
    /// Literal predicate without `@`: graph store.
    Relationship,
    /// Variable predicate: both stores.
    Open,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: PredicateTerm,
    pub object: Term,
}

impl TriplePattern {
    pub fn class(&self) -> PatternClass {
        match &self.predicate {
            PredicateTerm::Var(_) => PatternClass::Open,
            PredicateTerm::Name(n) if n.starts_with('@') => PatternClass::Attribute,
            PredicateTerm::Name(_) => PatternClass::Relationship,
        }
    }

    pub fn subject_var(&self) -> Option<&Variable> {
        self.subject.as_var()
    }

    /// Variables in subject, predicate, object order (may repeat).
    pub fn vars(&self) -> impl Iterator<Item = &Variable> {
        let p = match &self.predicate {
            PredicateTerm::Var(v) => Some(v),
            PredicateTerm::Name(_) => None,
        };
        self.subject
            .as_var()
            .into_iter()
            .chain(p)
            .chain(self.object.as_var())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Operand {
    Var(Variable),
    Value(Value),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum FilterExpr {
    Compare {
        lhs: Operand,
        op: CompareOp,
        rhs: Operand,
    },
    Regex {
        var: Variable,
        pattern: String,
    },
    And(Box<FilterExpr>, Box<FilterExpr>),
    Or(Box<FilterExpr>, Box<FilterExpr>),
}

impl FilterExpr {
    pub fn vars(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Variable>) {
        match self {
            FilterExpr::Compare { lhs, rhs, .. } => {
                for o in [lhs, rhs] {
                    if let Operand::Var(v) = o {
                        out.insert(v.clone());
                    }
                }
            }
            FilterExpr::Regex { var, .. } => {
                out.insert(var.clone());
            }
            FilterExpr::And(a, b) | FilterExpr::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SelectQuery {
    pub projection: Vec<Variable>,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<FilterExpr>,
}

impl SelectQuery {
    /// Variables bound by at least one pattern, in first-appearance order.
    pub fn pattern_vars(&self) -> Vec<Variable> {
        let mut seen = BTreeSet::new();
        self.patterns
            .iter()
            .flat_map(TriplePattern::vars)
            .filter(|v| seen.insert((*v).clone()))
            .cloned()
            .collect()
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum FolderBody {
    Members {
        member_var: Variable,
        patterns: Vec<TriplePattern>,
        filters: Vec<FilterExpr>,
    },
    Children(Vec<String>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FconstructQuery {
    pub folder_name: String,
    pub alias: Option<Variable>,
    pub body: FolderBody,
    /// `?alias @attr literal` patterns; they become folder attributes.
    pub attr_patterns: Vec<TriplePattern>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum RepeatKind {
    /// `*`
    ZeroOrMore,
    /// `+`
    OneOrMore,
    /// `?`
    Optional,
}

impl RepeatKind {
    pub fn symbol(self) -> char {
        match self {
            RepeatKind::ZeroOrMore => '*',
            RepeatKind::OneOrMore => '+',
            RepeatKind::Optional => '?',
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum RegexAst {
    Element(Variable),
    Concat(Vec<RegexAst>),
    Alternation(Vec<RegexAst>),
    Repeat(Box<RegexAst>, RepeatKind),
    Group(Box<RegexAst>),
}

impl RegexAst {
    pub fn elements(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.walk(&mut |v| {
            out.insert(v.clone());
        });
        out
    }

    /// Visits the leaf variables left to right.
    pub fn walk(&self, f: &mut impl FnMut(&Variable)) {
        match self {
            RegexAst::Element(v) => f(v),
            RegexAst::Concat(xs) | RegexAst::Alternation(xs) => xs.iter().for_each(|x| x.walk(f)),
            RegexAst::Repeat(x, _) | RegexAst::Group(x) => x.walk(f),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PconstructQuery {
    pub path_name: String,
    pub start_var: Variable,
    pub end_var: Variable,
    pub regex: RegexAst,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<FilterExpr>,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ScopeExpr {
    Named(String),
    Union(Box<ScopeExpr>, Box<ScopeExpr>),
    Intersect(Box<ScopeExpr>, Box<ScopeExpr>),
    Minus(Box<ScopeExpr>, Box<ScopeExpr>),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ApplyQuery {
    pub scope: ScopeExpr,
    pub inner: SelectQuery,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Query {
    Select(SelectQuery),
    Fconstruct(FconstructQuery),
    Pconstruct(PconstructQuery),
    Apply(ApplyQuery),
}

// ---- pretty printing; output reparses to an identical tree ----

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => v.fmt(f),
            Term::Const(c) => c.fmt(f),
        }
    }
}

impl fmt::Display for PredicateTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateTerm::Var(v) => v.fmt(f),
            PredicateTerm::Name(n) => f.write_str(n),
        }
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => v.fmt(f),
            Operand::Value(c) => c.fmt(f),
        }
    }
}

impl FilterExpr {
    fn fmt_nested(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterExpr::And(..) | FilterExpr::Or(..) => write!(f, "({self})"),
            _ => fmt::Display::fmt(self, f),
        }
    }
}

impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterExpr::Compare { lhs, op, rhs } => write!(f, "{lhs} {} {rhs}", op.as_str()),
            FilterExpr::Regex { var, pattern } => {
                write!(f, "regex({var}, ")?;
                crate::value::write_quoted(f, pattern)?;
                f.write_str(")")
            }
            FilterExpr::And(a, b) | FilterExpr::Or(a, b) => {
                a.fmt_nested(f)?;
                f.write_str(if matches!(self, FilterExpr::And(..)) {
                    " && "
                } else {
                    " || "
                })?;
                b.fmt_nested(f)
            }
        }
    }
}

fn write_block(
    f: &mut fmt::Formatter<'_>,
    patterns: &[&TriplePattern],
    filters: &[FilterExpr],
) -> fmt::Result {
    f.write_str("where {\n")?;
    for p in patterns {
        writeln!(f, "  {p} .")?;
    }
    for x in filters {
        match x {
            FilterExpr::Regex { .. } => writeln!(f, "  FILTER {x} .")?,
            _ => writeln!(f, "  FILTER ({x}) .")?,
        }
    }
    f.write_str("}")
}

impl fmt::Display for SelectQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("select")?;
        for v in &self.projection {
            write!(f, " {v}")?;
        }
        f.write_str("\n")?;
        write_block(f, &self.patterns.iter().collect::<Vec<_>>(), &self.filters)
    }
}

impl fmt::Display for FconstructQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fconstruct {}", self.folder_name)?;
        if let Some(a) = &self.alias {
            write!(f, " as {a}")?;
        }
        f.write_str("\n")?;
        match &self.body {
            FolderBody::Members {
                member_var,
                patterns,
                filters,
            } => {
                writeln!(f, "select {member_var}")?;
                let all: Vec<&TriplePattern> = self.attr_patterns.iter().chain(patterns).collect();
                write_block(f, &all, filters)
            }
            FolderBody::Children(children) => {
                write!(f, "({})", children.join(", "))?;
                if !self.attr_patterns.is_empty() {
                    f.write_str("\n")?;
                    write_block(f, &self.attr_patterns.iter().collect::<Vec<_>>(), &[])?;
                }
                Ok(())
            }
        }
    }
}

impl RegexAst {
    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegexAst::Element(_) | RegexAst::Group(_) | RegexAst::Repeat(..) => {
                fmt::Display::fmt(self, f)
            }
            _ => write!(f, "({self})"),
        }
    }
}

impl fmt::Display for RegexAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegexAst::Element(v) => v.fmt(f),
            RegexAst::Group(x) => write!(f, "({x})"),
            RegexAst::Repeat(x, k) => {
                x.fmt_operand(f)?;
                write!(f, "{}", k.symbol())
            }
            RegexAst::Concat(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    match x {
                        RegexAst::Alternation(_) | RegexAst::Concat(_) => write!(f, "({x})")?,
                        _ => x.fmt(f)?,
                    }
                }
                Ok(())
            }
            RegexAst::Alternation(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    match x {
                        RegexAst::Alternation(_) => write!(f, "({x})")?,
                        _ => x.fmt(f)?,
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for PconstructQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pconstruct {}", self.path_name)?;
        writeln!(f, "({}, {}, {})", self.start_var, self.end_var, self.regex)?;
        write_block(f, &self.patterns.iter().collect::<Vec<_>>(), &self.filters)
    }
}

impl ScopeExpr {
    fn parts(&self) -> Option<(&ScopeExpr, &'static str, &ScopeExpr)> {
        match self {
            ScopeExpr::Named(_) => None,
            ScopeExpr::Union(a, b) => Some((a, "union", b)),
            ScopeExpr::Intersect(a, b) => Some((a, "intersect", b)),
            ScopeExpr::Minus(a, b) => Some((a, "minus", b)),
        }
    }
}

impl fmt::Display for ScopeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.parts() {
            None => match self {
                ScopeExpr::Named(n) => f.write_str(n),
                _ => unreachable!(),
            },
            Some((a, op, b)) => {
                write!(f, "{a} {op} ")?;
                if b.parts().is_some() {
                    write!(f, "({b})")
                } else {
                    b.fmt(f)
                }
            }
        }
    }
}

impl fmt::Display for ApplyQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) apply (\n{}\n)", self.scope, self.inner)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Select(q) => q.fmt(f),
            Query::Fconstruct(q) => q.fmt(f),
            Query::Pconstruct(q) => q.fmt(f),
            Query::Apply(q) => q.fmt(f),
        }
    }
}
