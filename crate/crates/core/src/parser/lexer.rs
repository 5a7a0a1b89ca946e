use std::fmt;

use super::ParseError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Keyword {
    Select,
    Where,
    Fconstruct,
    Pconstruct,
    Apply,
    As,
    Union,
    Intersect,
    Minus,
    Filter,
    Regex,
}

impl Keyword {
    fn lookup(word: &str) -> Option<Keyword> {
        Some(match word.to_ascii_lowercase().as_str() {
            "select" => Keyword::Select,
            "where" => Keyword::Where,
            "fconstruct" => Keyword::Fconstruct,
            "pconstruct" => Keyword::Pconstruct,
            "apply" => Keyword::Apply,
            "as" => Keyword::As,
            "union" => Keyword::Union,
            "intersect" => Keyword::Intersect,
            "minus" => Keyword::Minus,
            "filter" => Keyword::Filter,
            "regex" => Keyword::Regex,
            _ => return None,
        })
    }

    pub fn is_keyword(word: &str) -> bool {
        Self::lookup(word).is_some()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Select => "select",
            Keyword::Where => "where",
            Keyword::Fconstruct => "fconstruct",
            Keyword::Pconstruct => "pconstruct",
            Keyword::Apply => "apply",
            Keyword::As => "as",
            Keyword::Union => "union",
            Keyword::Intersect => "intersect",
            Keyword::Minus => "minus",
            Keyword::Filter => "filter",
            Keyword::Regex => "regex",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
    Ne,
}

impl CompareOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CompareOp::Gt => ">",
            CompareOp::Lt => "<",
            CompareOp::Ge => ">=",
            CompareOp::Le => "<=",
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LogicalOp {
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    /// Name without the leading `?`.
    Variable(String),
    Identifier(String),
    String(String),
    TypedLiteral {
        lexical: String,
        datatype: String,
    },
    Punct(char),
    Compare(CompareOp),
    Logical(LogicalOp),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "keyword '{}'", k.as_str()),
            TokenKind::Variable(v) => write!(f, "variable '?{v}'"),
            TokenKind::Identifier(i) => write!(f, "identifier '{i}'"),
            TokenKind::String(s) => write!(f, "string {s:?}"),
            TokenKind::TypedLiteral { lexical, datatype } => {
                write!(f, "literal {lexical:?}^^{datatype}")
            }
            TokenKind::Punct(c) => write!(f, "'{c}'"),
            TokenKind::Compare(op) => write!(f, "'{}'", op.as_str()),
            TokenKind::Logical(LogicalOp::And) => f.write_str("'&&'"),
            TokenKind::Logical(LogicalOp::Or) => f.write_str("'||'"),
        }
    }
}

/// Byte offset plus 1-based line and column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Position {
    pub offset: usize,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Position,
    /// Length of the source text the token was read from, in bytes.
    pub len: usize,
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '@' | ':' | '/' | '#' | '%' | '~' | '$')
}

const PUNCT: &[char] = &['{', '}', '(', ')', '.', ',', '?', '*', '+', '|'];

struct Lexer<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn pos(&self) -> Position {
        Position {
            offset: self.offset,
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        self.src[self.offset..].chars().nth(1)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn error(&self, pos: Position, message: impl Into<String>) -> ParseError {
        ParseError {
            message: message.into(),
            pos,
            expected: Vec::new(),
        }
    }

    fn word(&mut self) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            let joins_words =
                c == '.' && self.peek2().is_some_and(is_ident_char) && !out.is_empty();
            if is_ident_char(c) || joins_words {
                out.push(c);
                self.bump();
            } else {
                break;
            }
        }
        out
    }

    fn string(&mut self, quote: char) -> Result<String, ParseError> {
        let start = self.pos();
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(start, "unterminated string")),
                Some(c) if c == quote => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('t') => out.push('\t'),
                    Some('n') => out.push('\n'),
                    Some('r') => out.push('\r'),
                    Some(c @ ('"' | '\'' | '\\')) => out.push(c),
                    Some(c) => {
                        return Err(self.error(start, format!("unknown escape '\\{c}' in string")))
                    }
                    None => return Err(self.error(start, "unterminated string")),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>, ParseError> {
        self.skip_ws();
        let start = self.pos();
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let kind = match c {
            '"' | '\'' => {
                let text = self.string(c)?;
                let save = (self.offset, self.line, self.col);
                self.skip_ws();
                if self.src[self.offset..].starts_with("^^") {
                    self.bump();
                    self.bump();
                    let dt_pos = self.pos();
                    let datatype = self.word();
                    if datatype.is_empty() {
                        return Err(self.error(dt_pos, "expected datatype after '^^'"));
                    }
                    if let Err(e) = crate::value::Value::typed(&text, &datatype) {
                        return Err(self.error(start, e.to_string()));
                    }
                    TokenKind::TypedLiteral {
                        lexical: text,
                        datatype,
                    }
                } else {
                    (self.offset, self.line, self.col) = save;
                    TokenKind::String(text)
                }
            }
            '?' if self.peek2().is_some_and(is_ident_char) => {
                self.bump();
                TokenKind::Variable(self.word())
            }
            '>' | '<' | '=' | '!' => {
                self.bump();
                let eq = self.peek() == Some('=');
                if eq {
                    self.bump();
                }
                TokenKind::Compare(match (c, eq) {
                    ('>', false) => CompareOp::Gt,
                    ('>', true) => CompareOp::Ge,
                    ('<', false) => CompareOp::Lt,
                    ('<', true) => CompareOp::Le,
                    ('=', _) => CompareOp::Eq,
                    ('!', true) => CompareOp::Ne,
                    _ => return Err(self.error(start, "illegal character '!'")),
                })
            }
            '&' if self.peek2() == Some('&') => {
                self.bump();
                self.bump();
                TokenKind::Logical(LogicalOp::And)
            }
            '|' if self.peek2() == Some('|') => {
                self.bump();
                self.bump();
                TokenKind::Logical(LogicalOp::Or)
            }
            c if PUNCT.contains(&c) => {
                self.bump();
                TokenKind::Punct(c)
            }
            c if is_ident_char(c) => {
                let w = self.word();
                match Keyword::lookup(&w) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Identifier(w),
                }
            }
            c => return Err(self.error(start, format!("illegal character {c:?}"))),
        };
        Ok(Some(Token {
            kind,
            pos: start,
            len: self.offset - start.offset,
        }))
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut lexer = Lexer {
        src: text,
        offset: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    while let Some(t) = lexer.next_token()? {
        out.push(t);
    }
    Ok(out)
}
