//! Line-oriented N-Triples reader.
//!
//! Terms are kept as verbatim tokens: the dictionary only needs token
//! identity, so no unescaping or IRI normalization happens here. A trailing
//! fourth term (the N-Quads graph label) is accepted and dropped.

use std::fmt;
use std::io::{self, BufRead};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermKind {
    Iri,
    Literal,
    BlankNode,
}

/// One RDF term in its N-Triples spelling.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermToken {
    kind: TermKind,
    lexical: String,
}

impl TermToken {
    /// Classifies `lexical` by its first character. Returns `None` for empty
    /// strings and anything that is not `<...>`, `"..."` or `_:...`.
    pub fn new(lexical: impl Into<String>) -> Option<Self> {
        let lexical = lexical.into();
        let kind = match lexical.as_bytes() {
            [b'<', .., b'>'] => TermKind::Iri,
            [b'"', _, ..] => TermKind::Literal,
            [b'_', b':', _, ..] => TermKind::BlankNode,
            _ => return None,
        };
        Some(Self { kind, lexical })
    }

    pub fn iri(iri: &str) -> Self {
        Self {
            kind: TermKind::Iri,
            lexical: format!("<{iri}>"),
        }
    }

    pub fn kind(&self) -> TermKind {
        self.kind
    }

    pub fn as_str(&self) -> &str {
        &self.lexical
    }

    pub fn into_string(self) -> String {
        self.lexical
    }

    /// The SPARQL `str()` view: IRI without brackets, literal lexical form
    /// without quotes, language tag or datatype. Blank nodes have none.
    pub fn str_value(&self) -> Option<&str> {
        match self.kind {
            TermKind::Iri => Some(&self.lexical[1..self.lexical.len() - 1]),
            TermKind::Literal => {
                let end = closing_quote(self.lexical.as_bytes(), 0)?;
                Some(&self.lexical[1..end])
            }
            TermKind::BlankNode => None,
        }
    }
}

impl fmt::Display for TermToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexical)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawStatement {
    pub subject: TermToken,
    pub predicate: TermToken,
    pub object: TermToken,
    pub line_number: u64,
}

impl RawStatement {
    /// Canonical single-line form, without the newline.
    pub fn to_ntriples(&self) -> String {
        format!("{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MissingTerminator,
    UnterminatedIri,
    UnterminatedLiteral,
    TooFewTerms(usize),
    TooManyTerms,
    PredicateNotIri,
    SubjectIsLiteral,
    UnexpectedChar(char),
    InvalidUtf8,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingTerminator => f.write_str("missing terminal '.'"),
            Self::UnterminatedIri => f.write_str("unterminated IRI"),
            Self::UnterminatedLiteral => f.write_str("unterminated literal"),
            Self::TooFewTerms(n) => write!(f, "expected 3 terms, found {n}"),
            Self::TooManyTerms => f.write_str("more than 3 terms"),
            Self::PredicateNotIri => f.write_str("predicate is not an IRI"),
            Self::SubjectIsLiteral => f.write_str("subject is a literal"),
            Self::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            Self::InvalidUtf8 => f.write_str("invalid UTF-8"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line_number}, byte {offset}: {kind}")]
pub struct ParseError {
    pub line_number: u64,
    /// Byte offset within the line (for decode errors, within the stream).
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    Statement(RawStatement),
    Skip,
}

fn closing_quote(bytes: &[u8], open: usize) -> Option<usize> {
    let mut i = open + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'"' => return Some(i),
            _ => i += 1,
        }
    }
    None
}

fn is_ws(b: u8) -> bool {
    b == b' ' || b == b'\t'
}

struct LineScanner<'a> {
    line: &'a str,
    pos: usize,
    line_number: u64,
}

impl<'a> LineScanner<'a> {
    fn err(&self, offset: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line_number: self.line_number,
            offset,
            kind,
        }
    }

    fn skip_ws(&mut self) {
        let bytes = self.line.as_bytes();
        while self.pos < bytes.len() && is_ws(bytes[self.pos]) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.line.as_bytes().get(self.pos).copied()
    }

    fn term(&mut self) -> Result<TermToken, ParseError> {
        let bytes = self.line.as_bytes();
        let start = self.pos;
        let end = match bytes[start] {
            b'<' => match bytes[start..].iter().position(|&b| b == b'>') {
                Some(rel) => start + rel + 1,
                None => return Err(self.err(start, ParseErrorKind::UnterminatedIri)),
            },
            b'"' => {
                let close = closing_quote(bytes, start)
                    .ok_or_else(|| self.err(start, ParseErrorKind::UnterminatedLiteral))?;
                let mut end = close + 1;
                if bytes.get(end) == Some(&b'@') {
                    end += 1;
                    while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'-') {
                        end += 1;
                    }
                } else if bytes[end..].starts_with(b"^^<") {
                    match bytes[end..].iter().position(|&b| b == b'>') {
                        Some(rel) => end += rel + 1,
                        None => return Err(self.err(end + 2, ParseErrorKind::UnterminatedIri)),
                    }
                }
                end
            }
            b'_' if bytes.get(start + 1) == Some(&b':') => {
                let mut end = start + 2;
                while end < bytes.len() && !is_ws(bytes[end]) && !matches!(bytes[end], b'<' | b'"') {
                    end += 1;
                }
                // a label may contain '.', but not end with one
                while end > start + 2 && bytes[end - 1] == b'.' {
                    end -= 1;
                }
                if end == start + 2 {
                    return Err(self.err(start, ParseErrorKind::UnexpectedChar('_')));
                }
                end
            }
            _ => {
                let c = self.line[start..].chars().next().unwrap_or('\0');
                return Err(self.err(start, ParseErrorKind::UnexpectedChar(c)));
            }
        };
        self.pos = end;
        Ok(TermToken::new(&self.line[start..end]).expect("scanner produced a classifiable token"))
    }
}

/// Parses one physical line (without its trailing newline).
pub fn parse_line(line: &str, line_number: u64) -> Result<Parsed, ParseError> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let mut sc = LineScanner {
        line,
        pos: 0,
        line_number,
    };
    sc.skip_ws();
    match sc.peek() {
        None | Some(b'#') => return Ok(Parsed::Skip),
        _ => {}
    }

    let mut terms: Vec<(usize, TermToken)> = Vec::with_capacity(4);
    loop {
        sc.skip_ws();
        match sc.peek() {
            None => {
                return Err(match terms.len() {
                    n if n < 3 => sc.err(sc.pos, ParseErrorKind::TooFewTerms(n)),
                    _ => sc.err(sc.pos, ParseErrorKind::MissingTerminator),
                });
            }
            Some(b'.') => {
                let dot = sc.pos;
                sc.pos += 1;
                sc.skip_ws();
                match sc.peek() {
                    None | Some(b'#') => {}
                    Some(_) => {
                        let c = line[sc.pos..].chars().next().unwrap_or('\0');
                        return Err(sc.err(sc.pos, ParseErrorKind::UnexpectedChar(c)));
                    }
                }
                if terms.len() < 3 {
                    return Err(sc.err(dot, ParseErrorKind::TooFewTerms(terms.len())));
                }
                break;
            }
            Some(_) => {
                let at = sc.pos;
                if terms.len() == 4 {
                    return Err(sc.err(at, ParseErrorKind::TooManyTerms));
                }
                let t = sc.term()?;
                terms.push((at, t));
            }
        }
    }

    if terms.len() == 4 && terms[3].1.kind() == TermKind::Literal {
        return Err(sc.err(terms[3].0, ParseErrorKind::TooManyTerms));
    }
    terms.truncate(3);
    let mut it = terms.into_iter();
    let (s_at, subject) = it.next().unwrap();
    let (p_at, predicate) = it.next().unwrap();
    let (_, object) = it.next().unwrap();
    if subject.kind() == TermKind::Literal {
        return Err(sc.err(s_at, ParseErrorKind::SubjectIsLiteral));
    }
    if predicate.kind() != TermKind::Iri {
        return Err(sc.err(p_at, ParseErrorKind::PredicateNotIri));
    }
    Ok(Parsed::Statement(RawStatement {
        subject,
        predicate,
        object,
        line_number,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Lenient,
    Strict,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub statements: u64,
    pub skipped: u64,
    pub errors: Vec<ParseError>,
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Streaming statement iterator over a buffered reader.
///
/// In lenient mode malformed lines are recorded in the report and skipped;
/// in strict mode the first error is yielded and iteration ends.
pub struct NTriplesReader<R> {
    source: R,
    mode: ParseMode,
    report: ParseReport,
    buf: Vec<u8>,
    line_number: u64,
    stream_offset: usize,
    done: bool,
}

impl<R: BufRead> NTriplesReader<R> {
    pub fn new(source: R, mode: ParseMode) -> Self {
        Self {
            source,
            mode,
            report: ParseReport::default(),
            buf: Vec::new(),
            line_number: 0,
            stream_offset: 0,
            done: false,
        }
    }

    pub fn report(&self) -> &ParseReport {
        &self.report
    }

    pub fn into_report(self) -> ParseReport {
        self.report
    }

    fn fail(&mut self, err: ParseError) -> Option<Result<RawStatement, StreamError>> {
        self.report.errors.push(err.clone());
        match self.mode {
            ParseMode::Strict => {
                self.done = true;
                Some(Err(err.into()))
            }
            ParseMode::Lenient => None,
        }
    }
}

impl<R: BufRead> Iterator for NTriplesReader<R> {
    type Item = Result<RawStatement, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            let n = match self.source.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(n) => n,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            let line_start = self.stream_offset;
            self.stream_offset += n;
            self.line_number += 1;
            if self.buf.last() == Some(&b'\n') {
                self.buf.pop();
            }
            let text = match std::str::from_utf8(&self.buf) {
                Ok(t) => t,
                Err(e) => {
                    let err = ParseError {
                        line_number: self.line_number,
                        offset: line_start + e.valid_up_to(),
                        kind: ParseErrorKind::InvalidUtf8,
                    };
                    match self.fail(err) {
                        Some(out) => return Some(out),
                        None => continue,
                    }
                }
            };
            match parse_line(text, self.line_number) {
                Ok(Parsed::Statement(st)) => {
                    self.report.statements += 1;
                    return Some(Ok(st));
                }
                Ok(Parsed::Skip) => self.report.skipped += 1,
                Err(err) => {
                    if let Some(out) = self.fail(err) {
                        return Some(out);
                    }
                }
            }
        }
        None
    }
}

/// Collects a whole stream into memory.
pub fn parse_stream<R: BufRead>(
    source: R,
    mode: ParseMode,
) -> Result<(Vec<RawStatement>, ParseReport), StreamError> {
    let mut reader = NTriplesReader::new(source, mode);
    let mut out = Vec::new();
    for st in reader.by_ref() {
        out.push(st?);
    }
    Ok((out, reader.into_report()))
}
