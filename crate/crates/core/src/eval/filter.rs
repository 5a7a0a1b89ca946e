use std::cmp::Ordering;

use regex::Regex;
use rustc_hash::FxHashMap;

use super::table::Binding;
use crate::error::{Error, Result};
use crate::parser::{CompareOp, FilterExpr, Operand, Variable};
use crate::value::{compare_values, Value};

/// Filter expressions with their regular expressions compiled once.
#[derive(Debug, Default)]
pub struct FilterCache {
    regexes: FxHashMap<String, Regex>,
}

impl FilterCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn prepare(&mut self, expr: &FilterExpr) -> Result<()> {
        match expr {
            FilterExpr::Regex { pattern, .. } => {
                if !self.regexes.contains_key(pattern) {
                    let re = Regex::new(pattern)
                        .map_err(|e| Error::Eval(format!("bad regex {pattern:?}: {e}")))?;
                    self.regexes.insert(pattern.clone(), re);
                }
                Ok(())
            }
            FilterExpr::And(a, b) | FilterExpr::Or(a, b) => {
                self.prepare(a)?;
                self.prepare(b)
            }
            FilterExpr::Compare { .. } => Ok(()),
        }
    }

    /// Evaluates `expr` with variables looked up through `get`.
    pub fn eval<'v>(
        &self,
        expr: &FilterExpr,
        get: &dyn Fn(&Variable) -> Option<&'v Value>,
    ) -> Result<bool> {
        match expr {
            FilterExpr::And(a, b) => Ok(self.eval(a, get)? && self.eval(b, get)?),
            FilterExpr::Or(a, b) => Ok(self.eval(a, get)? || self.eval(b, get)?),
            FilterExpr::Regex { var, pattern } => {
                let v = get(var).ok_or_else(|| unbound(var))?;
                match self.regexes.get(pattern) {
                    Some(re) => Ok(re.is_match(v.text())),
                    None => {
                        let re = Regex::new(pattern)
                            .map_err(|e| Error::Eval(format!("bad regex {pattern:?}: {e}")))?;
                        Ok(re.is_match(v.text()))
                    }
                }
            }
            FilterExpr::Compare { lhs, op, rhs } => {
                let l = match lhs {
                    Operand::Var(v) => get(v).ok_or_else(|| unbound(v))?,
                    Operand::Value(c) => c,
                };
                let r = match rhs {
                    Operand::Var(v) => get(v).ok_or_else(|| unbound(v))?,
                    Operand::Value(c) => c,
                };
                Ok(compare(l, *op, r))
            }
        }
    }
}

fn unbound(v: &Variable) -> Error {
    Error::Eval(format!("filter variable {v} is unbound"))
}

/// `=` and `!=` compare terms; ordering operators need comparable kinds and
/// are false otherwise.
pub fn compare(a: &Value, op: CompareOp, b: &Value) -> bool {
    match op {
        CompareOp::Eq => a.same_term(b),
        CompareOp::Ne => !a.same_term(b),
        _ => match compare_values(a, b) {
            None => false,
            Some(ord) => match op {
                CompareOp::Gt => ord == Ordering::Greater,
                CompareOp::Lt => ord == Ordering::Less,
                CompareOp::Ge => ord != Ordering::Less,
                CompareOp::Le => ord != Ordering::Greater,
                CompareOp::Eq | CompareOp::Ne => unreachable!(),
            },
        },
    }
}

/// Evaluates a filter against a single binding.
pub fn eval_filter(expr: &FilterExpr, row: &Binding) -> Result<bool> {
    let mut cache = FilterCache::new();
    cache.prepare(expr)?;
    cache.eval(expr, &|v| row.get(v))
}
