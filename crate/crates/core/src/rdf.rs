//! RDF terms, triples and an in-memory indexed graph with an N-Triples reader.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub mod vocab {
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    pub const SOSA: &str = "http://www.w3.org/ns/sosa/";
    pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const GEO: &str = "http://www.w3.org/2003/01/geo/wgs84_pos#";
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";

    pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
    pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
    pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
    pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
    pub const XSD_FLOAT: &str = "http://www.w3.org/2001/XMLSchema#float";
    pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
    pub const XSD_DATE_TIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
    pub const XSD_DATE: &str = "http://www.w3.org/2001/XMLSchema#date";
    pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
    pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";

    pub const SOSA_MADE_BY_SENSOR: &str = "http://www.w3.org/ns/sosa/madeBySensor";
    pub const SOSA_OBSERVED_PROPERTY: &str = "http://www.w3.org/ns/sosa/observedProperty";
    pub const SOSA_HAS_SIMPLE_RESULT: &str = "http://www.w3.org/ns/sosa/hasSimpleResult";
    pub const SOSA_RESULT_TIME: &str = "http://www.w3.org/ns/sosa/resultTime";
    pub const SOSA_OBSERVATION: &str = "http://www.w3.org/ns/sosa/Observation";
    pub const SOSA_SENSOR: &str = "http://www.w3.org/ns/sosa/Sensor";
    pub const SOSA_OBSERVABLE_PROPERTY: &str = "http://www.w3.org/ns/sosa/ObservableProperty";
    pub const SOSA_OBSERVES: &str = "http://www.w3.org/ns/sosa/observes";

    pub const GEO_LAT: &str = "http://www.w3.org/2003/01/geo/wgs84_pos#lat";
    pub const GEO_LONG: &str = "http://www.w3.org/2003/01/geo/wgs84_pos#long";
}

/// A literal: lexical form, datatype IRI and optional language tag.
///
/// Plain literals carry `xsd:string`; language-tagged ones `rdf:langString`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub lexical: String,
    pub datatype: String,
    pub lang: Option<String>,
}

impl Literal {
    pub fn simple(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: vocab::XSD_STRING.to_string(),
            lang: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: datatype.into(),
            lang: None,
        }
    }

    pub fn lang_tagged(lexical: impl Into<String>, lang: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: vocab::RDF_LANG_STRING.to_string(),
            lang: Some(lang.into().to_ascii_lowercase()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Self {
        Term::Iri(iri.into())
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    /// N-Triples surface form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Blank(id) => write!(f, "_:{id}"),
            Term::Literal(lit) => {
                write!(f, "\"{}\"", escape_literal(&lit.lexical))?;
                if let Some(lang) = &lit.lang {
                    write!(f, "@{lang}")
                } else if lit.datatype != vocab::XSD_STRING {
                    write!(f, "^^<{}>", lit.datatype)
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Escapes a lexical form for a double-quoted N-Triples or SPARQL string.
pub fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: impl Into<String>, object: Term) -> Self {
        Triple {
            subject,
            predicate: predicate.into(),
            object,
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <{}> {} .", self.subject, self.predicate, self.object)
    }
}

/// An immutable set of triples, sorted by (subject, predicate, object), with
/// per-position indexes. Index postings keep the sorted order so iteration is
/// deterministic.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: Vec<Triple>,
    by_subject: HashMap<Term, Vec<usize>>,
    by_predicate: HashMap<String, Vec<usize>>,
    by_object: HashMap<Term, Vec<usize>>,
}

impl Graph {
    pub fn new(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut triples: Vec<Triple> = triples.into_iter().collect();
        triples.sort();
        triples.dedup();
        let mut by_subject: HashMap<Term, Vec<usize>> = HashMap::new();
        let mut by_predicate: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_object: HashMap<Term, Vec<usize>> = HashMap::new();
        for (i, t) in triples.iter().enumerate() {
            by_subject.entry(t.subject.clone()).or_default().push(i);
            by_predicate.entry(t.predicate.clone()).or_default().push(i);
            by_object.entry(t.object.clone()).or_default().push(i);
        }
        Graph {
            triples,
            by_subject,
            by_predicate,
            by_object,
        }
    }

    pub fn parse_ntriples(text: &str) -> Result<Self, NTriplesError> {
        Ok(Graph::new(parse_ntriples(text)?))
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn get(&self, idx: usize) -> &Triple {
        &self.triples[idx]
    }

    /// Posting list of triple indexes matching the bound positions, choosing
    /// the shortest available index. `None` means "all triples".
    pub fn candidates(
        &self,
        subject: Option<&Term>,
        predicate: Option<&str>,
        object: Option<&Term>,
    ) -> Option<&[usize]> {
        const EMPTY: &[usize] = &[];
        let lists = [
            subject.map(|s| self.by_subject.get(s)),
            predicate.map(|p| self.by_predicate.get(p)),
            object.map(|o| self.by_object.get(o)),
        ];
        lists
            .into_iter()
            .flatten()
            .map(|list| list.map(Vec::as_slice).unwrap_or(EMPTY))
            .min_by_key(|list| list.len())
    }

    pub fn objects<'a>(&'a self, subject: &Term, predicate: &'a str) -> impl Iterator<Item = &'a Term> + 'a {
        self.by_subject
            .get(subject)
            .into_iter()
            .flatten()
            .map(|&i| &self.triples[i])
            .filter(move |t| t.predicate == predicate)
            .map(|t| &t.object)
    }

    pub fn to_ntriples(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("N-Triples syntax error at line {line}, column {column}: {message}")]
pub struct NTriplesError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>, NTriplesError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let mut cur = LineCursor {
            chars: line.chars().collect(),
            pos: 0,
            line: n + 1,
        };
        cur.skip_ws();
        if cur.at_end() || cur.peek() == Some('#') {
            continue;
        }
        let subject = match cur.peek() {
            Some('<') => Term::Iri(cur.iri()?),
            Some('_') => Term::Blank(cur.blank()?),
            _ => return Err(cur.error("expected IRI or blank node subject")),
        };
        cur.skip_ws();
        if cur.peek() != Some('<') {
            return Err(cur.error("expected IRI predicate"));
        }
        let predicate = cur.iri()?;
        cur.skip_ws();
        let object = match cur.peek() {
            Some('<') => Term::Iri(cur.iri()?),
            Some('_') => Term::Blank(cur.blank()?),
            Some('"') => Term::Literal(cur.literal()?),
            _ => return Err(cur.error("expected object term")),
        };
        cur.skip_ws();
        if cur.peek() != Some('.') {
            return Err(cur.error("expected '.'"));
        }
        cur.pos += 1;
        cur.skip_ws();
        if !cur.at_end() && cur.peek() != Some('#') {
            return Err(cur.error("trailing content after '.'"));
        }
        out.push(Triple {
            subject,
            predicate,
            object,
        });
    }
    Ok(out)
}

struct LineCursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl LineCursor {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn error(&self, message: &str) -> NTriplesError {
        NTriplesError {
            line: self.line,
            column: self.pos + 1,
            message: message.to_string(),
        }
    }

    fn iri(&mut self) -> Result<String, NTriplesError> {
        self.pos += 1;
        let mut iri = String::new();
        loop {
            match self.peek() {
                None => return Err(self.error("unterminated IRI")),
                Some('>') => {
                    self.pos += 1;
                    break;
                }
                Some('\\') => {
                    self.pos += 1;
                    iri.push(self.unicode_escape()?);
                }
                Some(c) if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    return Err(self.error("illegal character in IRI"));
                }
                Some(c) => {
                    iri.push(c);
                    self.pos += 1;
                }
            }
        }
        if !crate::model::is_absolute_iri(&iri) {
            return Err(self.error("IRI is not absolute"));
        }
        Ok(iri)
    }

    fn blank(&mut self) -> Result<String, NTriplesError> {
        if self.chars.get(self.pos + 1) != Some(&':') {
            return Err(self.error("expected '_:'"));
        }
        self.pos += 2;
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || matches!(c, '_' | '-' | '.')) {
            self.pos += 1;
        }
        // a trailing '.' terminates the statement, not the label
        while self.pos > start && self.chars[self.pos - 1] == '.' {
            self.pos -= 1;
        }
        if self.pos == start {
            return Err(self.error("empty blank node label"));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn unicode_escape(&mut self) -> Result<char, NTriplesError> {
        let len = match self.peek() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(self.error("invalid escape")),
        };
        self.pos += 1;
        if self.pos + len > self.chars.len() {
            return Err(self.error("truncated unicode escape"));
        }
        let hex: String = self.chars[self.pos..self.pos + len].iter().collect();
        self.pos += len;
        u32::from_str_radix(&hex, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| self.error("invalid unicode escape"))
    }

    fn literal(&mut self) -> Result<Literal, NTriplesError> {
        self.pos += 1;
        let mut lexical = String::new();
        loop {
            match self.peek() {
                None => return Err(self.error("unterminated literal")),
                Some('"') => {
                    self.pos += 1;
                    break;
                }
                Some('\\') => {
                    self.pos += 1;
                    let c = match self.peek() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u' | 'U') => {
                            lexical.push(self.unicode_escape()?);
                            continue;
                        }
                        _ => return Err(self.error("invalid escape in literal")),
                    };
                    self.pos += 1;
                    lexical.push(c);
                }
                Some(c) => {
                    lexical.push(c);
                    self.pos += 1;
                }
            }
        }
        match self.peek() {
            Some('@') => {
                self.pos += 1;
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    self.pos += 1;
                }
                if self.pos == start {
                    return Err(self.error("empty language tag"));
                }
                let lang: String = self.chars[start..self.pos].iter().collect();
                Ok(Literal::lang_tagged(lexical, lang))
            }
            Some('^') => {
                if self.chars.get(self.pos + 1) != Some(&'^') || self.chars.get(self.pos + 2) != Some(&'<') {
                    return Err(self.error("expected '^^<datatype>'"));
                }
                self.pos += 2;
                let dt = self.iri()?;
                Ok(Literal::typed(lexical, dt))
            }
            _ => Ok(Literal::simple(lexical)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_term_kinds() {
        let text = r#"
# comment
<http://ex.org/a> <http://ex.org/p> "x\"y\n"@EN .
_:b1 <http://ex.org/p> "5"^^<http://www.w3.org/2001/XMLSchema#integer> .
<http://ex.org/a> <http://ex.org/q> _:b1.
"#;
        let triples = parse_ntriples(text).unwrap();
        assert_eq!(triples.len(), 3);
        assert_eq!(
            triples[0].object,
            Term::Literal(Literal::lang_tagged("x\"y\n", "en"))
        );
        assert_eq!(triples[1].subject, Term::Blank("b1".into()));
        assert_eq!(triples[2].object, Term::Blank("b1".into()));
    }

    #[test]
    fn reports_line_of_error() {
        let err = parse_ntriples("<http://a> <http://b> <http://c> .\n<http://a> \"lit\" <http://c> .\n").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn relative_iris_are_rejected() {
        assert!(parse_ntriples("<a> <http://b> <http://c> .").is_err());
    }

    #[test]
    fn serialization_round_trips() {
        let g = Graph::new(vec![
            Triple::new(Term::iri("http://ex.org/s"), "http://ex.org/p", Term::Literal(Literal::simple("tab\there \\ \"q\""))),
            Triple::new(Term::Blank("n0".into()), "http://ex.org/p", Term::Literal(Literal::typed("1.5", vocab::XSD_DECIMAL))),
        ]);
        let back = Graph::parse_ntriples(&g.to_ntriples()).unwrap();
        assert_eq!(back.triples(), g.triples());
    }

    #[test]
    fn graph_is_sorted_and_deduplicated() {
        let t1 = Triple::new(Term::iri("http://ex.org/b"), "http://ex.org/p", Term::iri("http://ex.org/o"));
        let t2 = Triple::new(Term::iri("http://ex.org/a"), "http://ex.org/p", Term::iri("http://ex.org/o"));
        let g = Graph::new(vec![t1.clone(), t2.clone(), t1.clone()]);
        assert_eq!(g.triples(), &[t2, t1]);
        assert_eq!(g.candidates(None, Some("http://ex.org/p"), None).unwrap().len(), 2);
        assert_eq!(g.candidates(None, Some("http://ex.org/zzz"), None).unwrap().len(), 0);
    }
}
