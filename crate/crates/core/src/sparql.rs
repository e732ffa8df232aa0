//! Parser for the SPARQL subset the engine evaluates:
//!
//! ```text
//! query   := ("PREFIX" pname ":" <iri>)* "SELECT" "DISTINCT"? ("*" | var+)
//!            "WHERE"? "{" body "}"
//! body    := group-content | "{" group-content "}" ("UNION" "{" group-content "}")*
//! content := (triple "." | "FILTER" "(" "regex" "(" "str" "(" var ")" "," string ")" ")" "."?)*
//! ```
//!
//! Prefixed names are expanded at parse time; literals are carried verbatim.

use std::collections::BTreeMap;
use std::fmt;

use regex::Regex;
use thiserror::Error;

use crate::dictionary::Dictionary;
use crate::kernel::PatternKey;
use crate::nt_parser::{TermKind, TermToken};

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown prefix '{0}:'")]
    UnknownPrefix(String),
    #[error("FILTER variable ?{0} does not occur in its group")]
    UnboundFilterVariable(String),
    #[error("projected variable ?{0} does not occur in the query body")]
    UnboundProjectionVariable(String),
    #[error("unsupported construct: {0}")]
    UnsupportedConstruct(String),
    #[error("invalid regex {pattern:?}: {message}")]
    InvalidRegex { pattern: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    S,
    P,
    O,
}

impl Slot {
    pub const ALL: [Slot; 3] = [Slot::S, Slot::P, Slot::O];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        ['S', 'P', 'O'][self as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(String),
    Term(TermToken),
}

impl PatternTerm {
    pub fn var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Var(v) => write!(f, "?{v}"),
            PatternTerm::Term(t) => write!(f, "{t}"),
        }
    }
}

/// Which slots of a pattern are fixed terms, e.g. `?P?` when only the
/// predicate is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PatternClass(u8);

impl PatternClass {
    pub fn mask(self) -> u8 {
        self.0
    }

    pub fn label(self) -> &'static str {
        ["???", "??O", "?P?", "?PO", "S??", "S?O", "SP?", "SPO"][self.0 as usize]
    }
}

impl fmt::Display for PatternClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(subject: PatternTerm, predicate: PatternTerm, object: PatternTerm) -> Self {
        Self {
            subject,
            predicate,
            object,
        }
    }

    pub fn slot(&self, slot: Slot) -> &PatternTerm {
        match slot {
            Slot::S => &self.subject,
            Slot::P => &self.predicate,
            Slot::O => &self.object,
        }
    }

    pub fn class(&self) -> PatternClass {
        let bound = |t: &PatternTerm| u8::from(t.var().is_none());
        PatternClass((bound(&self.subject) << 2) | (bound(&self.predicate) << 1) | bound(&self.object))
    }

    /// Variable slots in S, P, O order (a repeated variable appears once per slot).
    pub fn var_slots(&self) -> impl Iterator<Item = (Slot, &str)> {
        Slot::ALL
            .into_iter()
            .filter_map(move |s| self.slot(s).var().map(|v| (s, v)))
    }

    pub fn has_var(&self, name: &str) -> bool {
        self.var_slots().any(|(_, v)| v == name)
    }

    /// First slot holding `name`, in S, P, O order.
    pub fn slot_of(&self, name: &str) -> Option<Slot> {
        self.var_slots().find(|(_, v)| *v == name).map(|(s, _)| s)
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// `FILTER regex(str(?variable), "pattern")`.
#[derive(Debug, Clone)]
pub struct Filter {
    pub variable: String,
    pub pattern: String,
    regex: Regex,
}

impl Filter {
    pub fn new(variable: impl Into<String>, pattern: impl Into<String>) -> Result<Self, QueryParseError> {
        let pattern = pattern.into();
        let regex = Regex::new(&pattern).map_err(|e| QueryParseError::InvalidRegex {
            pattern: pattern.clone(),
            message: e.to_string(),
        })?;
        Ok(Self {
            variable: variable.into(),
            pattern,
            regex,
        })
    }

    /// Applies the regex to the term's `str()` value; blank nodes never pass.
    pub fn matches(&self, term: &TermToken) -> bool {
        term.str_value().is_some_and(|s| self.regex.is_match(s))
    }
}

impl PartialEq for Filter {
    fn eq(&self, other: &Self) -> bool {
        self.variable == other.variable && self.pattern == other.pattern
    }
}

impl Eq for Filter {}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Group {
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<Filter>,
}

impl Group {
    /// Distinct variables in order of first appearance.
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.patterns {
            for (_, v) in p.var_slots() {
                if !out.iter().any(|o| o == v) {
                    out.push(v.to_owned());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    All,
    Vars(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub prefixes: BTreeMap<String, String>,
    pub projection: Projection,
    pub distinct: bool,
    /// UNION branches; a query without UNION has exactly one.
    pub groups: Vec<Group>,
}

impl Query {
    pub fn patterns(&self) -> impl Iterator<Item = &TriplePattern> {
        self.groups.iter().flat_map(|g| g.patterns.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Iri(String),
    PName(String, String),
    Var(String),
    Literal(String),
    Word(String),
    Number(String),
    Punct(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Iri(s) => write!(f, "<{s}>"),
            Tok::PName(p, l) => write!(f, "{p}:{l}"),
            Tok::Var(v) => write!(f, "?{v}"),
            Tok::Literal(l) => f.write_str(l),
            Tok::Word(w) => f.write_str(w),
            Tok::Number(n) => f.write_str(n),
            Tok::Punct(c) => write!(f, "'{c}'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const UNSUPPORTED_WORDS: &[&str] = &[
    "OPTIONAL", "ORDER", "LIMIT", "OFFSET", "GRAPH", "BIND", "VALUES", "MINUS", "SERVICE", "GROUP", "HAVING",
    "CONSTRUCT", "ASK", "DESCRIBE", "FROM", "BASE", "REDUCED", "NOT", "EXISTS",
];

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn syntax(&self, offset: usize, message: impl Into<String>) -> QueryParseError {
        syntax_error(self.text, offset, message)
    }

    fn skip_trivia(&mut self) {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() {
            match bytes[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn take_while(&mut self, f: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && f(bytes[self.pos]) {
            self.pos += 1;
        }
        &self.text[start..self.pos]
    }

    fn next(&mut self) -> Result<(usize, Tok), QueryParseError> {
        self.skip_trivia();
        let start = self.pos;
        let bytes = self.text.as_bytes();
        let Some(&c) = bytes.get(start) else {
            return Ok((start, Tok::Eof));
        };
        let name_char = |b: u8| b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || b >= 0x80;
        let tok = match c {
            b'<' => {
                let rel = bytes[start..]
                    .iter()
                    .position(|&b| b == b'>')
                    .ok_or_else(|| self.syntax(start, "unterminated IRI"))?;
                let iri = &self.text[start + 1..start + rel];
                if iri.contains(|ch: char| ch.is_whitespace()) {
                    return Err(self.syntax(start, "whitespace inside IRI"));
                }
                self.pos = start + rel + 1;
                Tok::Iri(iri.to_owned())
            }
            b'?' | b'$' => {
                self.pos += 1;
                let name = self.take_while(|b| b.is_ascii_alphanumeric() || b == b'_' || b >= 0x80);
                if name.is_empty() {
                    return Err(self.syntax(start, "empty variable name"));
                }
                Tok::Var(name.to_owned())
            }
            b'"' | b'\'' => {
                let mut i = start + 1;
                loop {
                    match bytes.get(i) {
                        None | Some(b'\n') => return Err(self.syntax(start, "unterminated string")),
                        Some(b'\\') => i += 2,
                        Some(&q) if q == c => break,
                        Some(_) => i += 1,
                    }
                }
                let body = &self.text[start + 1..i];
                self.pos = i + 1;
                let mut lexical = format!("\"{}\"", if c == b'"' { body.to_owned() } else { body.replace('"', "\\\"") });
                if bytes.get(self.pos) == Some(&b'@') {
                    self.pos += 1;
                    let tag = self.take_while(|b| b.is_ascii_alphanumeric() || b == b'-');
                    lexical.push('@');
                    lexical.push_str(tag);
                } else if self.text[self.pos..].starts_with("^^") {
                    self.pos += 2;
                    match self.next()? {
                        (_, Tok::Iri(iri)) => lexical.push_str(&format!("^^<{iri}>")),
                        (_, Tok::PName(p, l)) => lexical.push_str(&format!("^^{p}:{l}")),
                        (at, other) => return Err(self.syntax(at, format!("expected datatype IRI, found {other}"))),
                    }
                }
                Tok::Literal(lexical)
            }
            b'{' | b'}' | b'(' | b')' | b'.' | b',' | b'*' | b';' | b'[' | b']' | b'!' | b'=' | b'&' | b'|' => {
                self.pos += 1;
                Tok::Punct(c as char)
            }
            b'0'..=b'9' | b'+' | b'-' => {
                self.pos += 1;
                self.take_while(|b| b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E');
                Tok::Number(self.text[start..self.pos].to_owned())
            }
            _ if name_char(c) || c == b':' => {
                let prefix = self.take_while(|b| name_char(b) || b == b'.');
                if bytes.get(self.pos) == Some(&b':') {
                    self.pos += 1;
                    let local = self.take_while(|b| name_char(b) || b == b'.' || b == b'%');
                    // a local name cannot end with '.'; that dot terminates the triple
                    let trimmed = local.trim_end_matches('.');
                    self.pos -= local.len() - trimmed.len();
                    Tok::PName(prefix.to_owned(), trimmed.to_owned())
                } else {
                    let word = prefix.trim_end_matches('.');
                    self.pos -= prefix.len() - word.len();
                    Tok::Word(word.to_owned())
                }
            }
            _ => {
                let ch = self.text[start..].chars().next().unwrap_or('\0');
                return Err(self.syntax(start, format!("unexpected character {ch:?}")));
            }
        };
        Ok((start, tok))
    }
}

fn syntax_error(text: &str, offset: usize, message: impl Into<String>) -> QueryParseError {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    QueryParseError::Syntax {
        offset,
        line,
        column,
        message: message.into(),
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(usize, Tok)>,
    prefixes: BTreeMap<String, String>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<&Tok, QueryParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next()?);
        }
        Ok(&self.peeked.as_ref().unwrap().1)
    }

    fn bump(&mut self) -> Result<(usize, Tok), QueryParseError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next(),
        }
    }

    fn offset(&mut self) -> Result<usize, QueryParseError> {
        self.peek()?;
        Ok(self.peeked.as_ref().unwrap().0)
    }

    fn err(&self, offset: usize, message: impl Into<String>) -> QueryParseError {
        syntax_error(self.lexer.text, offset, message)
    }

    fn is_word(tok: &Tok, word: &str) -> bool {
        matches!(tok, Tok::Word(w) if w.eq_ignore_ascii_case(word))
    }

    fn peek_word(&mut self, word: &str) -> Result<bool, QueryParseError> {
        Ok(Self::is_word(self.peek()?, word))
    }

    fn check_unsupported(&mut self) -> Result<(), QueryParseError> {
        match self.peek()? {
            Tok::Word(w) => {
                let upper = w.to_ascii_uppercase();
                if UNSUPPORTED_WORDS.contains(&upper.as_str()) {
                    return Err(QueryParseError::UnsupportedConstruct(upper));
                }
            }
            Tok::Punct(';') => {
                return Err(QueryParseError::UnsupportedConstruct("predicate-object list ';'".into()));
            }
            Tok::Punct(',') => return Err(QueryParseError::UnsupportedConstruct("object list ','".into())),
            Tok::Punct('[') => return Err(QueryParseError::UnsupportedConstruct("blank node property list".into())),
            Tok::Number(_) => return Err(QueryParseError::UnsupportedConstruct("numeric literal".into())),
            _ => {}
        }
        Ok(())
    }

    fn expect_punct(&mut self, c: char) -> Result<(), QueryParseError> {
        if self.peek()? != &Tok::Punct(c) {
            self.check_unsupported()?;
        }
        match self.bump()? {
            (_, Tok::Punct(p)) if p == c => Ok(()),
            (at, other) => Err(self.err(at, format!("expected '{c}', found {other}"))),
        }
    }

    fn expect_word(&mut self, word: &str) -> Result<(), QueryParseError> {
        self.check_unsupported()?;
        match self.bump()? {
            (_, ref t) if Self::is_word(t, word) => Ok(()),
            (at, other) => Err(self.err(at, format!("expected {word}, found {other}"))),
        }
    }

    fn query(mut self) -> Result<Query, QueryParseError> {
        while self.peek_word("PREFIX")? {
            self.bump()?;
            let (at, tok) = self.bump()?;
            let Tok::PName(prefix, local) = tok else {
                return Err(self.err(at, format!("expected prefix name, found {tok}")));
            };
            if !local.is_empty() {
                return Err(self.err(at, "prefix declaration must end with ':'"));
            }
            let (at, tok) = self.bump()?;
            let Tok::Iri(iri) = tok else {
                return Err(self.err(at, format!("expected IRI, found {tok}")));
            };
            self.prefixes.insert(prefix, iri);
        }

        self.expect_word("SELECT")?;
        let distinct = if self.peek_word("DISTINCT")? {
            self.bump()?;
            true
        } else {
            false
        };
        let projection = if self.peek()? == &Tok::Punct('*') {
            self.bump()?;
            Projection::All
        } else {
            let mut vars = Vec::new();
            loop {
                match self.peek()? {
                    Tok::Var(_) => {
                        if let (_, Tok::Var(v)) = self.bump()? {
                            vars.push(v);
                        }
                    }
                    // tolerated between projected variables
                    Tok::Punct(',') if !vars.is_empty() => {
                        self.bump()?;
                    }
                    _ => break,
                }
            }
            if vars.is_empty() {
                let at = self.offset()?;
                self.check_unsupported()?;
                return Err(self.err(at, "expected '*' or variables after SELECT"));
            }
            Projection::Vars(vars)
        };
        if self.peek_word("WHERE")? {
            self.bump()?;
        }
        self.expect_punct('{')?;
        let groups = self.body()?;
        self.expect_punct('}')?;
        self.check_unsupported()?;
        let (at, tok) = self.bump()?;
        if tok != Tok::Eof {
            return Err(self.err(at, format!("unexpected {tok} after query body")));
        }

        let query = Query {
            prefixes: self.prefixes,
            projection,
            distinct,
            groups,
        };
        if let Projection::Vars(vars) = &query.projection {
            for v in vars {
                if !query.patterns().any(|p| p.has_var(v)) {
                    return Err(QueryParseError::UnboundProjectionVariable(v.clone()));
                }
            }
        }
        Ok(query)
    }

    fn body(&mut self) -> Result<Vec<Group>, QueryParseError> {
        if self.peek()? != &Tok::Punct('{') {
            return Ok(vec![self.group_content()?]);
        }
        let mut groups = Vec::new();
        loop {
            self.expect_punct('{')?;
            groups.push(self.group_content()?);
            self.expect_punct('}')?;
            if self.peek_word("UNION")? {
                self.bump()?;
                continue;
            }
            if self.peek()? == &Tok::Punct('.') {
                self.bump()?;
            }
            break;
        }
        Ok(groups)
    }

    fn group_content(&mut self) -> Result<Group, QueryParseError> {
        let mut group = Group::default();
        let mut filters: Vec<(usize, Filter)> = Vec::new();
        loop {
            self.check_unsupported()?;
            match self.peek()? {
                Tok::Punct('}') => break,
                Tok::Punct('{') => return Err(QueryParseError::UnsupportedConstruct("nested group".into())),
                t if Self::is_word(t, "FILTER") => {
                    let at = self.offset()?;
                    self.bump()?;
                    filters.push((at, self.filter()?));
                    if self.peek()? == &Tok::Punct('.') {
                        self.bump()?;
                    }
                }
                Tok::Eof => {
                    let at = self.offset()?;
                    return Err(self.err(at, "unexpected end of input inside group"));
                }
                _ => {
                    let subject = self.pattern_term()?;
                    let pred_at = self.offset()?;
                    let predicate = self.pattern_term()?;
                    if let PatternTerm::Term(t) = &predicate {
                        if t.kind() != TermKind::Iri {
                            return Err(self.err(pred_at, "predicate must be an IRI or a variable"));
                        }
                    }
                    let object = self.pattern_term()?;
                    group.patterns.push(TriplePattern::new(subject, predicate, object));
                    self.check_unsupported()?;
                    match self.peek()? {
                        Tok::Punct('.') => {
                            self.bump()?;
                        }
                        Tok::Punct('}') => {}
                        t if Self::is_word(t, "FILTER") => {}
                        _ => {
                            let (at, tok) = self.bump()?;
                            return Err(self.err(at, format!("expected '.' after triple pattern, found {tok}")));
                        }
                    }
                }
            }
        }
        for (_, f) in &filters {
            if !group.patterns.iter().any(|p| p.has_var(&f.variable)) {
                return Err(QueryParseError::UnboundFilterVariable(f.variable.clone()));
            }
        }
        group.filters = filters.into_iter().map(|(_, f)| f).collect();
        Ok(group)
    }

    fn pattern_term(&mut self) -> Result<PatternTerm, QueryParseError> {
        self.check_unsupported()?;
        let (at, tok) = self.bump()?;
        match tok {
            Tok::Var(v) => Ok(PatternTerm::Var(v)),
            Tok::Iri(iri) => Ok(PatternTerm::Term(TermToken::iri(&iri))),
            Tok::PName(p, l) => Ok(PatternTerm::Term(TermToken::iri(&self.expand(&p, &l)?))),
            Tok::Literal(lex) => {
                let lex = self.expand_datatype(lex)?;
                Ok(PatternTerm::Term(TermToken::new(lex).expect("literal token")))
            }
            Tok::Word(w) if w == "a" => Ok(PatternTerm::Term(TermToken::iri(RDF_TYPE))),
            other => Err(self.err(at, format!("expected a term or variable, found {other}"))),
        }
    }

    fn expand(&self, prefix: &str, local: &str) -> Result<String, QueryParseError> {
        self.prefixes
            .get(prefix)
            .map(|base| format!("{base}{local}"))
            .ok_or_else(|| QueryParseError::UnknownPrefix(prefix.to_owned()))
    }

    fn expand_datatype(&self, lexical: String) -> Result<String, QueryParseError> {
        let Some(idx) = lexical.rfind("\"^^") else {
            return Ok(lexical);
        };
        let dt = &lexical[idx + 3..];
        if dt.starts_with('<') {
            return Ok(lexical);
        }
        let (p, l) = dt.split_once(':').unwrap_or(("", dt));
        Ok(format!("{}^^<{}>", &lexical[..idx + 1], self.expand(p, l)?))
    }

    fn filter(&mut self) -> Result<Filter, QueryParseError> {
        let wrapped = self.peek()? == &Tok::Punct('(');
        if wrapped {
            self.bump()?;
        }
        if !self.peek_word("regex")? {
            let (_, tok) = self.bump()?;
            return Err(QueryParseError::UnsupportedConstruct(format!("FILTER expression starting with {tok}")));
        }
        self.bump()?;
        self.expect_punct('(')?;
        if !self.peek_word("str")? {
            return Err(QueryParseError::UnsupportedConstruct("regex without str()".into()));
        }
        self.bump()?;
        self.expect_punct('(')?;
        let variable = match self.bump()? {
            (_, Tok::Var(v)) => v,
            (at, other) => return Err(self.err(at, format!("expected variable, found {other}"))),
        };
        self.expect_punct(')')?;
        self.expect_punct(',')?;
        let mut pattern = match self.bump()? {
            (_, Tok::Literal(l)) if l.ends_with('"') => unescape_string(&l[1..l.len() - 1]),
            (at, other) => return Err(self.err(at, format!("expected regex string, found {other}"))),
        };
        if self.peek()? == &Tok::Punct(',') {
            self.bump()?;
            let flags = match self.bump()? {
                (_, Tok::Literal(l)) if l.ends_with('"') => l[1..l.len() - 1].to_owned(),
                (at, other) => return Err(self.err(at, format!("expected regex flags, found {other}"))),
            };
            match flags.as_str() {
                "" => {}
                "i" => pattern = format!("(?i){pattern}"),
                other => return Err(QueryParseError::UnsupportedConstruct(format!("regex flags {other:?}"))),
            }
        }
        self.expect_punct(')')?;
        if wrapped {
            self.expect_punct(')')?;
        }
        Filter::new(variable, pattern)
    }
}

fn unescape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('"') => out.push('"'),
            Some('\'') => out.push('\''),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

pub fn parse_query(text: &str) -> Result<Query, QueryParseError> {
    Parser {
        lexer: Lexer { text, pos: 0 },
        peeked: None,
        prefixes: BTreeMap::new(),
    }
    .query()
}

/// Search keys for one UNION branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledGroup {
    /// One key per pattern, variables as wildcards.
    pub keys: Vec<PatternKey>,
    /// False when some fixed term is absent from the dictionary.
    pub satisfiable: bool,
}

pub fn compile_pattern(pattern: &TriplePattern, dict: &Dictionary) -> Option<PatternKey> {
    let mut ids = [crate::TermId::WILDCARD; 3];
    for slot in Slot::ALL {
        if let PatternTerm::Term(t) = pattern.slot(slot) {
            ids[slot.index()] = dict.lookup(t.as_str())?;
        }
    }
    Some(PatternKey {
        subject: ids[0],
        predicate: ids[1],
        object: ids[2],
    })
}

pub fn compile_keys(query: &Query, dict: &Dictionary) -> Vec<CompiledGroup> {
    query
        .groups
        .iter()
        .map(|g| {
            let keys: Option<Vec<PatternKey>> = g.patterns.iter().map(|p| compile_pattern(p, dict)).collect();
            match keys {
                Some(keys) => CompiledGroup { keys, satisfiable: true },
                None => CompiledGroup {
                    keys: vec![PatternKey::default(); g.patterns.len()],
                    satisfiable: false,
                },
            }
        })
        .collect()
}
