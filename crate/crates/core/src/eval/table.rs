use std::collections::BTreeMap;
use std::fmt;

use crate::parser::Variable;
use crate::value::{Term, Value};

pub type Binding = BTreeMap<Variable, Value>;

/// A set of rows over `vars`. Rows are kept sorted and free of duplicates,
/// where two rows are duplicates when every column holds the same term.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct BindingTable {
    vars: Vec<Variable>,
    rows: Vec<Vec<Value>>,
}

impl BindingTable {
    pub fn empty(vars: Vec<Variable>) -> Self {
        BindingTable {
            vars,
            rows: Vec::new(),
        }
    }

    /// Builds the canonical table: sorted by term, duplicates merged, and a
    /// bare identifier kept over a quoted string of the same text.
    pub fn from_rows(vars: Vec<Variable>, mut rows: Vec<Vec<Value>>) -> Self {
        fn key(r: &[Value]) -> Vec<Term<'_>> {
            r.iter().map(Value::term).collect()
        }
        rows.sort_by(|a, b| key(a).cmp(&key(b)));
        let mut out: Vec<Vec<Value>> = Vec::with_capacity(rows.len());
        for row in rows {
            match out.last_mut() {
                Some(last) if last.iter().zip(&row).all(|(x, y)| x.same_term(y)) => {
                    for (x, y) in last.iter_mut().zip(row) {
                        if matches!(y, Value::Node(_)) {
                            *x = y;
                        }
                    }
                }
                _ => out.push(row),
            }
        }
        BindingTable { vars, rows: out }
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, var: &Variable) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }

    /// Values of one column, in row order.
    pub fn column(&self, var: &Variable) -> Vec<&Value> {
        match self.column_index(var) {
            Some(i) => self.rows.iter().map(|r| &r[i]).collect(),
            None => Vec::new(),
        }
    }

    /// Texts of a single-column table, handy in tests.
    pub fn texts(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| v.text().to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    }

    pub fn bindings(&self) -> Vec<Binding> {
        self.rows
            .iter()
            .map(|r| self.vars.iter().cloned().zip(r.iter().cloned()).collect())
            .collect()
    }
}

/// Tab-separated rendering: a header of variable names without `?`, then one
/// line per row, rows ordered by their rendered text.
impl fmt::Display for BindingTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header: Vec<&str> = self.vars.iter().map(Variable::name).collect();
        writeln!(f, "{}", header.join("\t"))?;
        let mut lines: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("\t")
            })
            .collect();
        lines.sort();
        for l in lines {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}
