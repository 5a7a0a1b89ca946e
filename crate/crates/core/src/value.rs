//! Node identifiers and the values stored against them.
//!
//! A [`Value`] keeps the syntactic form it was written in (bare identifier,
//! quoted string or typed literal) so it can be rendered back faithfully.
//! Pattern matching and joins compare values by [`Term`], under which a bare
//! identifier and a quoted string with the same text are the same term.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub const XSD_DATE: &str = "xsd:date";

/// Opaque node identifier: non-empty, no whitespace, compared bytewise.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(Arc<str>);

impl NodeId {
    pub fn new(id: impl AsRef<str>) -> Result<Self> {
        let id = id.as_ref();
        if !is_valid_id(id) {
            return Err(Error::Validation(format!("invalid node id {id:?}")));
        }
        Ok(NodeId(Arc::from(id)))
    }

    pub(crate) fn from_arc(id: Arc<str>) -> Self {
        debug_assert!(is_valid_id(&id));
        NodeId(id)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub(crate) fn arc(&self) -> &Arc<str> {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeId({})", self.0)
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_valid_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(char::is_whitespace)
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Value {
    Node(NodeId),
    Str(Arc<str>),
    Typed {
        lexical: Arc<str>,
        datatype: Arc<str>,
    },
}

/// Matching view of a value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term<'a> {
    Text(&'a str),
    Typed(&'a str, &'a str),
}

/// Owned [`Term`], used as an index key.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum TermKey {
    Text(Arc<str>),
    Typed(Arc<str>, Arc<str>),
}

impl Value {
    pub fn node(id: impl AsRef<str>) -> Result<Self> {
        NodeId::new(id).map(Value::Node)
    }

    pub fn string(s: impl AsRef<str>) -> Self {
        Value::Str(Arc::from(s.as_ref()))
    }

    /// Builds a typed literal, checking the lexical form of known datatypes.
    pub fn typed(lexical: impl AsRef<str>, datatype: impl AsRef<str>) -> Result<Self> {
        let (lexical, datatype) = (lexical.as_ref(), datatype.as_ref());
        if datatype.is_empty() || datatype.chars().any(char::is_whitespace) {
            return Err(Error::Validation(format!("invalid datatype {datatype:?}")));
        }
        if datatype == XSD_DATE && parse_date(lexical).is_none() {
            return Err(Error::Validation(format!(
                "{lexical:?} is not a valid xsd:date (expected YYYY-MM-DD)"
            )));
        }
        Ok(Value::Typed {
            lexical: Arc::from(lexical),
            datatype: Arc::from(datatype),
        })
    }

    pub fn date(lexical: &str) -> Result<Self> {
        Value::typed(lexical, XSD_DATE)
    }

    /// The string form used by `regex` filters and ordering of plain values.
    pub fn text(&self) -> &str {
        match self {
            Value::Node(id) => id.as_str(),
            Value::Str(s) => s,
            Value::Typed { lexical, .. } => lexical,
        }
    }

    pub fn term(&self) -> Term<'_> {
        match self {
            Value::Node(id) => Term::Text(id.as_str()),
            Value::Str(s) => Term::Text(s),
            Value::Typed { lexical, datatype } => Term::Typed(lexical, datatype),
        }
    }

    pub fn term_key(&self) -> TermKey {
        match self {
            Value::Node(id) => TermKey::Text(id.arc().clone()),
            Value::Str(s) => TermKey::Text(s.clone()),
            Value::Typed { lexical, datatype } => TermKey::Typed(lexical.clone(), datatype.clone()),
        }
    }

    pub fn same_term(&self, other: &Value) -> bool {
        self.term() == other.term()
    }

    /// Text usable as a node id, if this value can denote a node.
    pub fn node_text(&self) -> Option<&str> {
        match self {
            Value::Node(id) => Some(id.as_str()),
            Value::Str(s) if is_valid_id(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_node(&self) -> Option<&NodeId> {
        match self {
            Value::Node(id) => Some(id),
            _ => None,
        }
    }

    pub fn as_date(&self) -> Option<NaiveDate> {
        match self {
            Value::Typed { lexical, datatype } if &**datatype == XSD_DATE => parse_date(lexical),
            _ => None,
        }
    }

    pub fn is_typed(&self) -> bool {
        matches!(self, Value::Typed { .. })
    }
}

/// Picks the representative for a variable seen with two same-term values: a
/// bare identifier wins over a quoted string so the result does not depend on
/// which pattern bound the variable first.
pub(crate) fn prefer(existing: &Value, found: &Value) -> Option<Value> {
    match (existing, found) {
        (Value::Str(_), Value::Node(_)) => Some(found.clone()),
        _ => None,
    }
}

pub(crate) fn parse_date(lexical: &str) -> Option<NaiveDate> {
    let b = lexical.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return None;
    }
    NaiveDate::parse_from_str(lexical, "%Y-%m-%d").ok()
}

/// Orders two values when the comparison is meaningful: dates by calendar,
/// plain text lexicographically, same-datatype literals numerically when both
/// parse as numbers and lexically otherwise. `None` for incompatible kinds.
pub fn compare_values(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (
            Value::Typed {
                lexical: la,
                datatype: da,
            },
            Value::Typed {
                lexical: lb,
                datatype: db,
            },
        ) => {
            if da != db {
                return None;
            }
            if &**da == XSD_DATE {
                return Some(parse_date(la)?.cmp(&parse_date(lb)?));
            }
            match (la.parse::<f64>(), lb.parse::<f64>()) {
                (Ok(x), Ok(y)) => x.partial_cmp(&y),
                _ => Some(la.cmp(lb)),
            }
        }
        (Value::Typed { .. }, _) | (_, Value::Typed { .. }) => None,
        _ => Some(a.text().cmp(b.text())),
    }
}

pub(crate) fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\t' => f.write_str("\\t")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

/// Renders as a bare id, a double-quoted string, or `"lexical"^^datatype`.
/// Tabs and newlines inside strings are always escaped.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Node(id) => f.write_str(id.as_str()),
            Value::Str(s) => write_quoted(f, s),
            Value::Typed { lexical, datatype } => {
                write_quoted(f, lexical)?;
                write!(f, "^^{datatype}")
            }
        }
    }
}
