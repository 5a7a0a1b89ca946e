//! Line-oriented triple text format.
//!
//! ```text
//! # comment
//! paper1 publishedIn CAiSE .
//! paper1 @title "Querying \"SQL\" Graphs" .
//! e1 @timestamp "2009-07-20"^^xsd:date .
//! ```

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Object {
    Bare(String),
    Quoted(String),
    Typed(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Line {
    Blank,
    Triple {
        subject: String,
        predicate: String,
        object: Object,
    },
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.s[self.pos..];
        self.pos += rest.len() - rest.trim_start_matches([' ', '\t']).len();
    }

    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn bare(&mut self) -> &'a str {
        let rest = &self.s[self.pos..];
        let len = rest.find([' ', '\t']).unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    /// Reads a double-quoted string whose opening quote is at the cursor.
    fn quoted(&mut self) -> Result<String, String> {
        let mut out = String::new();
        let mut chars = self.s[self.pos + 1..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += 1 + i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, '"')) => out.push('"'),
                    Some((_, '\\')) => out.push('\\'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 'r')) => out.push('\r'),
                    Some((_, other)) => return Err(format!("unknown escape '\\{other}'")),
                    None => break,
                },
                c => out.push(c),
            }
        }
        Err("unterminated quote".to_string())
    }
}

/// Parses a lone object token (`id`, `"text"` or `"lex"^^dt`).
pub(crate) fn parse_object(text: &str) -> Result<Object, String> {
    let mut cur = Cursor { s: text, pos: 0 };
    let object = if cur.peek() == Some('"') {
        let s = cur.quoted()?;
        if cur.s[cur.pos..].starts_with("^^") {
            cur.pos += 2;
            Object::Typed(s, cur.bare().to_string())
        } else {
            Object::Quoted(s)
        }
    } else {
        Object::Bare(cur.bare().to_string())
    };
    if !cur.at_end() {
        return Err(format!("trailing text in value {text:?}"));
    }
    Ok(object)
}

pub(crate) fn parse_line(line: &str) -> Result<Line, String> {
    let line = line.trim_end_matches(['\r', '\n']);
    let mut cur = Cursor { s: line, pos: 0 };
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(Line::Blank);
    }

    let mut tokens = 0;
    let mut bare_token = |cur: &mut Cursor, what: &str| -> Result<String, String> {
        cur.skip_ws();
        if cur.at_end() || cur.s[cur.pos..].trim() == "." {
            return Err(format!("expected 3 tokens, found {tokens}"));
        }
        if cur.peek() == Some('"') {
            return Err(format!("{what} must be a bare identifier"));
        }
        tokens += 1;
        Ok(cur.bare().to_string())
    };
    let subject = bare_token(&mut cur, "subject")?;
    let predicate = bare_token(&mut cur, "predicate")?;

    cur.skip_ws();
    if cur.at_end() || cur.s[cur.pos..].trim() == "." {
        return Err(format!("expected 3 tokens, found {tokens}"));
    }
    let object = if cur.peek() == Some('"') {
        let text = cur.quoted()?;
        let save = cur.pos;
        cur.skip_ws();
        if cur.s[cur.pos..].starts_with("^^") {
            cur.pos += 2;
            let datatype = cur.bare();
            if datatype.is_empty() {
                return Err("missing datatype after '^^'".to_string());
            }
            Object::Typed(text, datatype.to_string())
        } else {
            cur.pos = save;
            Object::Quoted(text)
        }
    } else {
        Object::Bare(cur.bare().to_string())
    };

    cur.skip_ws();
    if cur.peek() != Some('.') {
        return Err("missing terminating ' .'".to_string());
    }
    cur.pos += 1;
    cur.skip_ws();
    if !cur.at_end() {
        return Err(format!(
            "unexpected text after terminating '.': {:?}",
            &cur.s[cur.pos..]
        ));
    }
    Ok(Line::Triple {
        subject,
        predicate,
        object,
    })
}
