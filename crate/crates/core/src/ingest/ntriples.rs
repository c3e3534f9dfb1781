//! Line-oriented N-Triples reader.
//!
//! Each triple becomes one raw fact: subject IRI as entity key, predicate
//! local name as attribute, literal lexical form (or object IRI) as value.
//! Datatype and language tags are accepted and dropped.

use std::collections::HashMap;
use std::path::Path;

use super::{read_source, IngestError, RawFact};

pub fn ingest_rdf(path: &Path) -> Result<Vec<RawFact>, IngestError> {
    let text = read_source(path)?;
    ingest_rdf_str(&text, path)
}

pub(crate) fn ingest_rdf_str(text: &str, path: &Path) -> Result<Vec<RawFact>, IngestError> {
    let mut names = PredicateNames::default();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let triple = parse_line(line).map_err(|(col, msg)| IngestError::parse(path, lineno, col + 1, msg))?;
        if let Some(t) = triple {
            let name = names.name_for(&t.predicate);
            out.push(RawFact { entity_key: t.subject, name, lexical: t.object });
        }
    }
    Ok(out)
}

/// Local name after the last `/`, `#` or `:`.
pub(crate) fn local_name(iri: &str) -> &str {
    match iri.rfind(['/', '#', ':']) {
        Some(p) if p + 1 < iri.len() => &iri[p + 1..],
        _ => iri,
    }
}

/// Predicate IRI to attribute name, suffixing local-name collisions.
#[derive(Default)]
struct PredicateNames {
    by_iri: HashMap<String, String>,
    taken: HashMap<String, String>,
}

impl PredicateNames {
    fn name_for(&mut self, iri: &str) -> String {
        if let Some(n) = self.by_iri.get(iri) {
            return n.clone();
        }
        let base = local_name(iri);
        let mut candidate = base.to_owned();
        let mut suffix = 2;
        while self.taken.contains_key(&candidate) {
            candidate = format!("{base}_{suffix}");
            suffix += 1;
        }
        self.taken.insert(candidate.clone(), iri.to_owned());
        self.by_iri.insert(iri.to_owned(), candidate.clone());
        candidate
    }
}

#[derive(Debug, PartialEq, Eq)]
struct Triple {
    subject: String,
    predicate: String,
    object: String,
}

type ParseResult<T> = Result<T, (usize, String)>;

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while matches!(self.peek(), Some(' ' | '\t' | '\r')) {
            self.pos += 1;
        }
        self.pos > start
    }

    fn fail<T>(&self, msg: impl Into<String>) -> ParseResult<T> {
        Err((self.pos, msg.into()))
    }

    fn expect(&mut self, c: char) -> ParseResult<()> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            self.fail(format!("expected `{c}`"))
        }
    }

    fn iri(&mut self) -> ParseResult<String> {
        self.expect('<')?;
        let start = self.pos;
        loop {
            match self.bump() {
                Some('>') => return Ok(self.src[start..self.pos - 1].to_owned()),
                Some(c) if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    self.pos -= c.len_utf8();
                    return self.fail(format!("invalid character `{c}` in IRI"));
                }
                Some(_) => {}
                None => return self.fail("unterminated IRI"),
            }
        }
    }

    fn blank(&mut self) -> ParseResult<String> {
        let start = self.pos;
        self.expect('_')?;
        self.expect(':')?;
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || matches!(c, '_' | '-' | '.')) {
            self.bump();
        }
        // a trailing dot terminates the triple, not the label
        while self.src[..self.pos].ends_with('.') {
            self.pos -= 1;
        }
        if self.pos == start + 2 {
            return self.fail("empty blank node label");
        }
        Ok(self.src[start..self.pos].to_owned())
    }

    fn node(&mut self) -> ParseResult<String> {
        match self.peek() {
            Some('<') => self.iri(),
            Some('_') => self.blank(),
            _ => self.fail("expected IRI or blank node"),
        }
    }

    fn literal(&mut self) -> ParseResult<String> {
        self.expect('"')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => out.push(self.escape()?),
                Some('\n') | None => return self.fail("unterminated literal"),
                Some(c) => out.push(c),
            }
        }
        match self.peek() {
            Some('@') => {
                self.bump();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    self.bump();
                }
                if self.pos == start {
                    return self.fail("empty language tag");
                }
            }
            Some('^') => {
                self.bump();
                self.expect('^')?;
                self.iri()?;
            }
            _ => {}
        }
        Ok(out)
    }

    fn escape(&mut self) -> ParseResult<char> {
        let c = match self.bump() {
            Some('t') => '\t',
            Some('b') => '\u{8}',
            Some('n') => '\n',
            Some('r') => '\r',
            Some('f') => '\u{c}',
            Some('"') => '"',
            Some('\'') => '\'',
            Some('\\') => '\\',
            Some('u') => return self.hex(4),
            Some('U') => return self.hex(8),
            _ => return self.fail("invalid escape"),
        };
        Ok(c)
    }

    fn hex(&mut self, digits: usize) -> ParseResult<char> {
        let end = self.pos + digits;
        let code = self.src.get(self.pos..end).and_then(|h| u32::from_str_radix(h, 16).ok()).and_then(char::from_u32);
        match code {
            Some(c) => {
                self.pos = end;
                Ok(c)
            }
            None => self.fail("invalid unicode escape"),
        }
    }
}

/// `Ok(None)` for blank and comment lines.
fn parse_line(line: &str) -> ParseResult<Option<Triple>> {
    let mut cur = Cursor { src: line, pos: 0 };
    cur.skip_ws();
    if matches!(cur.peek(), None | Some('#')) {
        return Ok(None);
    }
    let subject = cur.node()?;
    if !cur.skip_ws() {
        return cur.fail("expected whitespace after subject");
    }
    let predicate = cur.iri()?;
    if !cur.skip_ws() {
        return cur.fail("expected whitespace after predicate");
    }
    let object = match cur.peek() {
        Some('"') => cur.literal()?,
        _ => cur.node()?,
    };
    cur.skip_ws();
    cur.expect('.')?;
    cur.skip_ws();
    if !matches!(cur.peek(), None | Some('#')) {
        return cur.fail("trailing characters after `.`");
    }
    Ok(Some(Triple { subject, predicate, object }))
}
