//! Recursive-descent parser for the query language.
//!
//! ```text
//! query     := select | fconstruct | pconstruct | apply
//! select    := SELECT var+ WHERE block
//! block     := '{' (pattern | filter) ('.' (pattern | filter))* '.'? '}'
//! fconstruct:= FCONSTRUCT name (AS var)? (SELECT var WHERE block | '(' name (',' name)* ')' (WHERE block)?)
//! pconstruct:= PCONSTRUCT name '(' var ',' var ',' regex ')' WHERE block
//! apply     := scope APPLY '(' select ')'
//! scope     := primary ((UNION | INTERSECT | MINUS) primary)*
//! ```

pub mod ast;
mod lexer;

use std::collections::BTreeSet;
use std::fmt;

pub use ast::*;
pub use lexer::{tokenize, Keyword, LogicalOp, Position, Token, TokenKind};

use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub pos: Position,
    /// Descriptions of what would have been accepted at `pos`.
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at {}: {}", self.pos, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

pub fn parse(text: &str) -> Result<Query, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser::new(&tokens, end_position(text));
    let q = p.query()?;
    if let Some(t) = p.peek() {
        return Err(p.error_at(
            t.pos,
            format!("unexpected {} after end of query", t.kind),
            &["end of input"],
        ));
    }
    Ok(q)
}

/// Parses the regular-expression component of a path construction.
pub fn parse_path_regex(tokens: &[Token]) -> Result<RegexAst, ParseError> {
    let end = tokens.last().map_or_else(Position::default, |t| Position {
        offset: t.pos.offset + t.len,
        line: t.pos.line,
        col: t.pos.col + t.len,
    });
    let mut p = Parser::new(tokens, end);
    let r = p.regex()?;
    if let Some(t) = p.peek() {
        return Err(p.error_at(
            t.pos,
            format!("unexpected {} in path expression", t.kind),
            &["'|'", "variable", "'('"],
        ));
    }
    Ok(r)
}

/// Tokenizes and parses a bare path expression such as `?e (?n ?e)*`.
pub fn parse_regex(text: &str) -> Result<RegexAst, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ParseError {
            message: "empty path expression".into(),
            pos: end_position(text),
            expected: vec!["variable".into(), "'('".into()],
        });
    }
    parse_path_regex(&tokens)
}

fn end_position(text: &str) -> Position {
    let line = 1 + text.matches('\n').count();
    let col = 1 + text.rsplit('\n').next().map_or(0, |l| l.chars().count());
    Position {
        offset: text.len(),
        line,
        col,
    }
}

struct Block {
    patterns: Vec<TriplePattern>,
    filters: Vec<FilterExpr>,
    close: Position,
}

struct Parser<'t> {
    toks: &'t [Token],
    i: usize,
    end: Position,
}

impl<'t> Parser<'t> {
    fn new(toks: &'t [Token], end: Position) -> Self {
        Parser { toks, i: 0, end }
    }

    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.i)
    }

    fn peek_kind(&self) -> Option<&'t TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn here(&self) -> Position {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn error_at(&self, pos: Position, message: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError {
            message: message.into(),
            pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let found = match self.peek() {
            Some(t) => format!("unexpected {}", t.kind),
            None => "unexpected end of input".to_string(),
        };
        self.error_at(self.here(), found, expected)
    }

    fn at_punct(&self, c: char) -> bool {
        self.peek_kind() == Some(&TokenKind::Punct(c))
    }

    fn at_kw(&self, k: Keyword) -> bool {
        self.peek_kind() == Some(&TokenKind::Keyword(k))
    }

    fn eat_punct(&mut self, c: char) -> bool {
        let hit = self.at_punct(c);
        if hit {
            self.i += 1;
        }
        hit
    }

    fn expect_punct(&mut self, c: char) -> Result<Position, ParseError> {
        let pos = self.here();
        if self.eat_punct(c) {
            Ok(pos)
        } else {
            Err(self.unexpected(&[&format!("'{c}'")]))
        }
    }

    fn expect_kw(&mut self, k: Keyword) -> Result<(), ParseError> {
        if self.at_kw(k) {
            self.i += 1;
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("'{}'", k.as_str())]))
        }
    }

    fn variable(&mut self) -> Result<Variable, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::Variable(v)) => {
                self.i += 1;
                Ok(Variable::new(v))
            }
            _ => Err(self.unexpected(&["variable"])),
        }
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::Identifier(n)) => {
                self.i += 1;
                Ok(n.clone())
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    // ---- queries ----

    fn query(&mut self) -> Result<Query, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::Keyword(Keyword::Select)) => self.select().map(Query::Select),
            Some(TokenKind::Keyword(Keyword::Fconstruct)) => {
                self.fconstruct().map(Query::Fconstruct)
            }
            Some(TokenKind::Keyword(Keyword::Pconstruct)) => {
                self.pconstruct().map(Query::Pconstruct)
            }
            Some(TokenKind::Identifier(_)) | Some(TokenKind::Punct('(')) => {
                self.apply().map(Query::Apply)
            }
            _ => Err(self.unexpected(&[
                "'select'",
                "'fconstruct'",
                "'pconstruct'",
                "folder or path name",
                "'('",
            ])),
        }
    }

    fn select(&mut self) -> Result<SelectQuery, ParseError> {
        self.expect_kw(Keyword::Select)?;
        let mut projection = vec![self.variable()?];
        while let Some(TokenKind::Variable(_)) = self.peek_kind() {
            projection.push(self.variable()?);
        }
        self.expect_kw(Keyword::Where)?;
        let block = self.block()?;
        check_block(&block)?;
        let bound = bound_vars(&block.patterns);
        for v in &projection {
            if !bound.contains(v) {
                return Err(semantic(
                    block.close,
                    format!("projected variable {v} is not bound by any pattern"),
                ));
            }
        }
        Ok(SelectQuery {
            projection,
            patterns: block.patterns,
            filters: block.filters,
        })
    }

    fn fconstruct(&mut self) -> Result<FconstructQuery, ParseError> {
        self.expect_kw(Keyword::Fconstruct)?;
        let folder_name = self.name("folder name")?;
        let alias = if self.at_kw(Keyword::As) {
            self.i += 1;
            Some(self.variable()?)
        } else {
            None
        };

        if self.at_kw(Keyword::Select) {
            self.i += 1;
            let member_var = self.variable()?;
            if let Some(TokenKind::Variable(_)) = self.peek_kind() {
                return Err(self.error_at(
                    self.here(),
                    "a folder construction selects exactly one member variable",
                    &["'where'"],
                ));
            }
            self.expect_kw(Keyword::Where)?;
            let block = self.block()?;
            if self.at_punct('(') {
                return Err(both_bodies(self.here()));
            }
            let (attr_patterns, patterns) =
                split_alias(alias.as_ref(), block.patterns, block.close)?;
            if let Some(a) = &alias {
                if block.filters.iter().any(|f| f.vars().contains(a)) {
                    return Err(semantic(
                        block.close,
                        format!("alias {a} may only carry attribute patterns"),
                    ));
                }
            }
            let body_block = Block {
                patterns,
                filters: block.filters,
                close: block.close,
            };
            check_block(&body_block)?;
            if !bound_vars(&body_block.patterns).contains(&member_var) {
                return Err(semantic(
                    body_block.close,
                    format!("member variable {member_var} is not bound by any pattern"),
                ));
            }
            Ok(FconstructQuery {
                folder_name,
                alias,
                body: FolderBody::Members {
                    member_var,
                    patterns: body_block.patterns,
                    filters: body_block.filters,
                },
                attr_patterns,
            })
        } else if self.at_punct('(') {
            self.i += 1;
            let mut children = vec![self.name("folder name")?];
            while self.eat_punct(',') {
                children.push(self.name("folder name")?);
            }
            self.expect_punct(')')?;
            if self.at_kw(Keyword::Select) {
                return Err(both_bodies(self.here()));
            }
            let mut attr_patterns = Vec::new();
            if self.at_kw(Keyword::Where) {
                self.i += 1;
                let block = self.block()?;
                if !block.filters.is_empty() {
                    return Err(semantic(
                        block.close,
                        "a folder of folders takes no filters",
                    ));
                }
                let (attrs, rest) = split_alias(alias.as_ref(), block.patterns, block.close)?;
                if !rest.is_empty() {
                    return Err(semantic(
                        block.close,
                        "a folder of folders only accepts attribute patterns on its alias",
                    ));
                }
                attr_patterns = attrs;
            }
            Ok(FconstructQuery {
                folder_name,
                alias,
                body: FolderBody::Children(children),
                attr_patterns,
            })
        } else {
            Err(self.unexpected(&["'as'", "'select'", "'('"]))
        }
    }

    fn pconstruct(&mut self) -> Result<PconstructQuery, ParseError> {
        self.expect_kw(Keyword::Pconstruct)?;
        let path_name = self.name("path node name")?;
        self.expect_punct('(')?;
        let start_var = self.variable()?;
        self.expect_punct(',')?;
        let end_var = self.variable()?;
        self.expect_punct(',')?;

        let from = self.i;
        let mut depth = 0usize;
        loop {
            match self.peek_kind() {
                None => return Err(self.unexpected(&["')'"])),
                Some(TokenKind::Punct('(')) => depth += 1,
                Some(TokenKind::Punct(')')) if depth == 0 => break,
                Some(TokenKind::Punct(')')) => depth -= 1,
                _ => {}
            }
            self.i += 1;
        }
        if from == self.i {
            return Err(self.error_at(self.here(), "empty path expression", &["variable", "'('"]));
        }
        let mut sub = Parser::new(&self.toks[from..self.i], self.here());
        let regex = sub.regex()?;
        if let Some(t) = sub.peek() {
            return Err(sub.error_at(
                t.pos,
                format!("unexpected {} in path expression", t.kind),
                &["')'"],
            ));
        }
        self.expect_punct(')')?;
        self.expect_kw(Keyword::Where)?;
        let block = self.block()?;
        check_block(&block)?;
        for v in [&start_var, &end_var] {
            if !block.patterns.iter().any(|p| p.subject_var() == Some(v)) {
                return Err(semantic(
                    block.close,
                    format!("{v} must be constrained by at least one pattern"),
                ));
            }
        }
        Ok(PconstructQuery {
            path_name,
            start_var,
            end_var,
            regex,
            patterns: block.patterns,
            filters: block.filters,
        })
    }

    fn apply(&mut self) -> Result<ApplyQuery, ParseError> {
        let scope = self.scope()?;
        self.expect_kw(Keyword::Apply)?;
        self.expect_punct('(')?;
        let inner = self.select()?;
        self.expect_punct(')')?;
        Ok(ApplyQuery { scope, inner })
    }

    fn scope(&mut self) -> Result<ScopeExpr, ParseError> {
        let mut left = self.scope_primary()?;
        loop {
            let ctor: fn(Box<ScopeExpr>, Box<ScopeExpr>) -> ScopeExpr = match self.peek_kind() {
                Some(TokenKind::Keyword(Keyword::Union)) => ScopeExpr::Union,
                Some(TokenKind::Keyword(Keyword::Intersect)) => ScopeExpr::Intersect,
                Some(TokenKind::Keyword(Keyword::Minus)) => ScopeExpr::Minus,
                _ => return Ok(left),
            };
            self.i += 1;
            let right = self.scope_primary()?;
            left = ctor(Box::new(left), Box::new(right));
        }
    }

    fn scope_primary(&mut self) -> Result<ScopeExpr, ParseError> {
        if self.eat_punct('(') {
            let inner = self.scope()?;
            self.expect_punct(')')?;
            return Ok(inner);
        }
        match self.peek_kind() {
            Some(TokenKind::Identifier(n)) => {
                self.i += 1;
                Ok(ScopeExpr::Named(n.clone()))
            }
            _ => Err(self.unexpected(&["folder or path name", "'('"])),
        }
    }

    // ---- WHERE blocks ----

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect_punct('{')?;
        let mut patterns = Vec::new();
        let mut filters = Vec::new();
        loop {
            if self.at_punct('}') {
                break;
            }
            if self.at_kw(Keyword::Filter) {
                self.i += 1;
                filters.push(self.filter()?);
                self.eat_punct('.');
                continue;
            }
            patterns.push(self.pattern()?);
            if !self.eat_punct('.') && !self.at_punct('}') {
                return Err(self.unexpected(&["'.'", "'}'"]));
            }
        }
        let close = self.expect_punct('}')?;
        Ok(Block {
            patterns,
            filters,
            close,
        })
    }

    fn pattern(&mut self) -> Result<TriplePattern, ParseError> {
        let subject = match self.peek_kind() {
            Some(TokenKind::Variable(v)) => Term::Var(Variable::new(v)),
            Some(TokenKind::Identifier(n)) | Some(TokenKind::String(n)) => match Value::node(n) {
                Ok(v) => Term::Const(v),
                Err(_) => {
                    return Err(self.error_at(
                        self.here(),
                        format!("{n:?} is not a valid node id"),
                        &["variable", "node id"],
                    ))
                }
            },
            _ => return Err(self.unexpected(&["variable", "node id", "'filter'", "'}'"])),
        };
        self.i += 1;
        let predicate = match self.peek_kind() {
            Some(TokenKind::Variable(v)) => PredicateTerm::Var(Variable::new(v)),
            Some(TokenKind::Identifier(n)) => PredicateTerm::Name(n.as_str().into()),
            _ => return Err(self.unexpected(&["variable", "predicate"])),
        };
        self.i += 1;
        let object = match self.peek_kind() {
            Some(TokenKind::Variable(v)) => Term::Var(Variable::new(v)),
            Some(_) => Term::Const(self.value()?),
            None => return Err(self.unexpected(&["variable", "value"])),
        };
        if !matches!(object, Term::Const(_)) {
            self.i += 1;
        }
        Ok(TriplePattern {
            subject,
            predicate,
            object,
        })
    }

    /// A constant: bare identifier, quoted string or typed literal.
    fn value(&mut self) -> Result<Value, ParseError> {
        let pos = self.here();
        let v = match self.peek_kind() {
            Some(TokenKind::Identifier(n)) => {
                Value::node(n).map_err(|e| self.error_at(pos, e.to_string(), &["value"]))?
            }
            Some(TokenKind::String(s)) => Value::string(s),
            Some(TokenKind::TypedLiteral { lexical, datatype }) => Value::typed(lexical, datatype)
                .map_err(|e| self.error_at(pos, e.to_string(), &["value"]))?,
            _ => return Err(self.unexpected(&["variable", "value"])),
        };
        self.i += 1;
        Ok(v)
    }

    // ---- filters ----

    fn filter(&mut self) -> Result<FilterExpr, ParseError> {
        if self.at_kw(Keyword::Regex) {
            return self.regex_call();
        }
        self.expect_punct('(')?;
        let e = self.or_expr()?;
        self.expect_punct(')')?;
        Ok(e)
    }

    fn or_expr(&mut self) -> Result<FilterExpr, ParseError> {
        let mut left = self.and_expr()?;
        while self.peek_kind() == Some(&TokenKind::Logical(LogicalOp::Or)) {
            self.i += 1;
            let right = self.and_expr()?;
            left = FilterExpr::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<FilterExpr, ParseError> {
        let mut left = self.filter_atom()?;
        while self.peek_kind() == Some(&TokenKind::Logical(LogicalOp::And)) {
            self.i += 1;
            let right = self.filter_atom()?;
            left = FilterExpr::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn filter_atom(&mut self) -> Result<FilterExpr, ParseError> {
        if self.eat_punct('(') {
            let e = self.or_expr()?;
            self.expect_punct(')')?;
            return Ok(e);
        }
        if self.at_kw(Keyword::Regex) {
            return self.regex_call();
        }
        let lhs = self.operand()?;
        let op = match self.peek_kind() {
            Some(TokenKind::Compare(op)) => *op,
            _ => return Err(self.unexpected(&["comparison operator"])),
        };
        self.i += 1;
        let rhs = self.operand()?;
        Ok(FilterExpr::Compare { lhs, op, rhs })
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::Variable(_)) => self.variable().map(Operand::Var),
            Some(
                TokenKind::Identifier(_) | TokenKind::String(_) | TokenKind::TypedLiteral { .. },
            ) => self.value().map(Operand::Value),
            _ => Err(self.unexpected(&["variable", "value", "'('", "'regex'"])),
        }
    }

    fn regex_call(&mut self) -> Result<FilterExpr, ParseError> {
        self.expect_kw(Keyword::Regex)?;
        self.expect_punct('(')?;
        let var = self.variable()?;
        self.expect_punct(',')?;
        let pos = self.here();
        let pattern = match self.peek_kind() {
            Some(TokenKind::String(s)) => s.clone(),
            _ => return Err(self.unexpected(&["string"])),
        };
        self.i += 1;
        if let Err(e) = regex::Regex::new(&pattern) {
            return Err(self.error_at(pos, format!("invalid regular expression: {e}"), &[]));
        }
        self.expect_punct(')')?;
        Ok(FilterExpr::Regex { var, pattern })
    }

    // ---- path expressions ----

    fn regex(&mut self) -> Result<RegexAst, ParseError> {
        let mut alts = vec![self.regex_concat()?];
        while self.eat_punct('|') {
            alts.push(self.regex_concat()?);
        }
        Ok(if alts.len() == 1 {
            alts.pop().unwrap()
        } else {
            RegexAst::Alternation(alts)
        })
    }

    fn regex_concat(&mut self) -> Result<RegexAst, ParseError> {
        let mut items = Vec::new();
        while matches!(
            self.peek_kind(),
            Some(TokenKind::Variable(_)) | Some(TokenKind::Punct('('))
        ) {
            items.push(self.regex_postfix()?);
        }
        match items.len() {
            0 => Err(match self.peek_kind() {
                Some(TokenKind::Punct(c @ ('*' | '+' | '?' | '|'))) => self.error_at(
                    self.here(),
                    format!("dangling operator '{c}'"),
                    &["variable", "'('"],
                ),
                _ => self.unexpected(&["variable", "'('"]),
            }),
            1 => Ok(items.pop().unwrap()),
            _ => Ok(RegexAst::Concat(items)),
        }
    }

    fn regex_postfix(&mut self) -> Result<RegexAst, ParseError> {
        let mut node = if self.at_punct('(') {
            let open = self.here();
            self.i += 1;
            if self.at_punct(')') {
                return Err(self.error_at(open, "empty group", &["variable", "'('"]));
            }
            let inner = self.regex()?;
            self.expect_punct(')')?;
            RegexAst::Group(Box::new(inner))
        } else {
            RegexAst::Element(self.variable()?)
        };
        loop {
            let kind = match self.peek_kind() {
                Some(TokenKind::Punct('*')) => RepeatKind::ZeroOrMore,
                Some(TokenKind::Punct('+')) => RepeatKind::OneOrMore,
                Some(TokenKind::Punct('?')) => RepeatKind::Optional,
                _ => return Ok(node),
            };
            self.i += 1;
            node = RegexAst::Repeat(Box::new(node), kind);
        }
    }
}

fn semantic(pos: Position, message: impl Into<String>) -> ParseError {
    ParseError {
        message: message.into(),
        pos,
        expected: Vec::new(),
    }
}

fn both_bodies(pos: Position) -> ParseError {
    semantic(
        pos,
        "a folder construction takes either a member query or a child folder list, not both",
    )
}

fn bound_vars(patterns: &[TriplePattern]) -> BTreeSet<Variable> {
    patterns
        .iter()
        .flat_map(TriplePattern::vars)
        .cloned()
        .collect()
}

/// Rules shared by every WHERE block.
fn check_block(block: &Block) -> Result<(), ParseError> {
    if block.patterns.is_empty() {
        return Err(semantic(
            block.close,
            "a where block needs at least one pattern",
        ));
    }
    let bound = bound_vars(&block.patterns);
    for f in &block.filters {
        if let Some(v) = f.vars().into_iter().find(|v| !bound.contains(v)) {
            return Err(semantic(
                block.close,
                format!("filter variable {v} does not appear in any pattern"),
            ));
        }
    }
    Ok(())
}

/// Separates `?alias @attr literal` patterns from the rest and rejects any
/// other use of the alias.
fn split_alias(
    alias: Option<&Variable>,
    patterns: Vec<TriplePattern>,
    close: Position,
) -> Result<(Vec<TriplePattern>, Vec<TriplePattern>), ParseError> {
    let Some(alias) = alias else {
        return Ok((Vec::new(), patterns));
    };
    let mut attrs = Vec::new();
    let mut rest = Vec::new();
    for p in patterns {
        if p.subject_var() == Some(alias) {
            let ok = p.class() == PatternClass::Attribute && matches!(p.object, Term::Const(_));
            if !ok {
                return Err(semantic(
                    close,
                    format!("alias {alias} only accepts attribute patterns with literal values, found `{p}`"),
                ));
            }
            attrs.push(p);
        } else if p.vars().any(|v| v == alias) {
            return Err(semantic(
                close,
                format!("alias {alias} may only appear as a pattern subject, found `{p}`"),
            ));
        } else {
            rest.push(p);
        }
    }
    Ok((attrs, rest))
}
