//! Line-oriented N-Triples / N-Quads reader and canonical writer.
//!
//! Provenance and certainty are carried as triples about each graph id in
//! the default graph, using the `prov*`/`certainty` vocabulary terms, so a
//! written store can be read back without loss.

use std::collections::{BTreeMap, BTreeSet};

use chrono::DateTime;

use super::Diagnostic;
use crate::error::{Error, Result};
use crate::model::{
    format_timestamp, vocab, AuthorityId, BatchContext, Certainty, EntityUri, Literal, Method,
    Object, Predicate, Provenance, Statement,
};

const XSD_DATE_TIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub context: BatchContext,
    /// Source recorded for statements whose graph carries no provenance.
    pub source: AuthorityId,
    /// Abort on the first malformed line instead of recording a diagnostic.
    pub strict: bool,
    pub file: Option<String>,
}

impl ParseOptions {
    pub fn lenient(context: BatchContext, source: AuthorityId) -> Self {
        ParseOptions {
            context,
            source,
            strict: false,
            file: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseOutcome {
    pub statements: Vec<Statement>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Term {
    Iri(String),
    Literal(Literal),
}

struct RawQuad {
    line: usize,
    subject: EntityUri,
    predicate: EntityUri,
    object: Object,
    graph: Option<EntityUri>,
}

#[derive(Default)]
struct GraphMeta {
    source: Option<String>,
    retrieved_at: Option<String>,
    method: Option<String>,
    reviewer: Option<String>,
    certainty: Option<String>,
    source_label: Option<String>,
    line: usize,
}

type MetaField = fn(&mut GraphMeta) -> &mut Option<String>;

fn meta_terms() -> [(String, MetaField); 6] {
    [
        (vocab("provSource"), |m| &mut m.source),
        (vocab("provRetrievedAt"), |m| &mut m.retrieved_at),
        (vocab("provMethod"), |m| &mut m.method),
        (vocab("provReviewer"), |m| &mut m.reviewer),
        (vocab("certainty"), |m| &mut m.certainty),
        (vocab("sourceLabel"), |m| &mut m.source_label),
    ]
}

/// Parses N-Triples or N-Quads. Each valid line becomes one statement with
/// canonicalized URIs; malformed lines become diagnostics (or abort the
/// parse in strict mode).
pub fn parse_statements(text: &str, options: &ParseOptions) -> Result<ParseOutcome> {
    let file = options.file.as_deref();
    let mut diagnostics = Vec::new();
    let mut quads = Vec::new();

    for (idx, raw_line) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_line(line) {
            Ok((s, p, o, g)) => match build_quad(line_no, s, p, o, g) {
                Ok(q) => quads.push(q),
                Err(msg) => {
                    if options.strict {
                        return Err(Error::Parse {
                            line: line_no,
                            message: msg,
                        });
                    }
                    diagnostics.push(Diagnostic::new(file, line_no, msg));
                }
            },
            Err(msg) => {
                if options.strict {
                    return Err(Error::Parse {
                        line: line_no,
                        message: msg,
                    });
                }
                diagnostics.push(Diagnostic::new(file, line_no, msg));
            }
        }
    }

    let terms = meta_terms();
    let mut meta: BTreeMap<EntityUri, GraphMeta> = BTreeMap::new();
    let mut data = Vec::with_capacity(quads.len());
    for q in quads {
        let slot = terms.iter().find(|(iri, _)| iri == q.predicate.as_str());
        match (slot, &q.graph, &q.object) {
            (Some((_, field)), None, Object::Literal(lit)) => {
                let m = meta.entry(q.subject.clone()).or_default();
                m.line = m.line.max(q.line);
                let target = field(m);
                if target.as_ref().is_some_and(|v| v != &lit.value) {
                    diagnostics.push(Diagnostic::new(
                        file,
                        q.line,
                        format!("conflicting provenance for graph {}", q.subject),
                    ));
                }
                *target = Some(lit.value.clone());
            }
            _ => data.push(q),
        }
    }

    let default_prov = options
        .context
        .provenance(options.source.clone(), Method::Asserted);
    let default_graph = options.context.graph_for(&default_prov);
    let mut resolved: BTreeMap<EntityUri, GraphInfo> = BTreeMap::new();
    for (graph, m) in &meta {
        match graph_provenance(m) {
            Ok(pc) => {
                resolved.insert(graph.clone(), pc);
            }
            Err(msg) => {
                if options.strict {
                    return Err(Error::Parse {
                        line: m.line,
                        message: msg,
                    });
                }
                diagnostics.push(Diagnostic::new(file, m.line, msg));
            }
        }
    }

    let statements = data
        .into_iter()
        .map(|q| {
            let graph = q.graph.unwrap_or_else(|| default_graph.clone());
            let (provenance, certainty, source_label) = resolved
                .get(&graph)
                .cloned()
                .unwrap_or_else(|| (default_prov.clone(), Certainty::Certain, None));
            Statement {
                subject: q.subject,
                predicate: Predicate::from_iri(q.predicate),
                object: q.object,
                graph,
                provenance,
                certainty,
                source_label,
            }
        })
        .collect();

    Ok(ParseOutcome {
        statements,
        diagnostics,
    })
}

type GraphInfo = (Provenance, Certainty, Option<String>);

fn graph_provenance(m: &GraphMeta) -> std::result::Result<GraphInfo, String> {
    let source = m
        .source
        .as_deref()
        .ok_or("graph provenance lacks a source")
        .and_then(|s| AuthorityId::new(s).map_err(|_| "graph provenance has an invalid source"))?;
    let retrieved_at = m
        .retrieved_at
        .as_deref()
        .ok_or("graph provenance lacks a retrieval time")
        .and_then(|t| {
            DateTime::parse_from_rfc3339(t)
                .map_err(|_| "graph provenance has an invalid retrieval time")
        })?
        .to_utc();
    let method = m
        .method
        .as_deref()
        .and_then(Method::from_name)
        .ok_or("graph provenance has a missing or unknown method")?;
    let certainty = match m.certainty.as_deref() {
        None => Certainty::Certain,
        Some(c) => Certainty::from_name(c).ok_or("unknown certainty level")?,
    };
    let provenance = Provenance {
        source,
        retrieved_at,
        method,
        reviewer: m.reviewer.clone(),
    };
    provenance.validate().map_err(|e| e.to_string())?;
    Ok((provenance, certainty, m.source_label.clone()))
}

fn build_quad(
    line: usize,
    s: Term,
    p: Term,
    o: Term,
    g: Option<Term>,
) -> std::result::Result<RawQuad, String> {
    let iri = |t: Term, role: &str| match t {
        Term::Iri(v) => EntityUri::parse(&v).map_err(|e| format!("{role}: {e}")),
        Term::Literal(_) => Err(format!("{role} must be an IRI")),
    };
    let subject = iri(s, "subject")?;
    let predicate = iri(p, "predicate")?;
    let object = match o {
        Term::Iri(v) => Object::Uri(EntityUri::parse(&v).map_err(|e| format!("object: {e}"))?),
        Term::Literal(l) => Object::Literal(l),
    };
    let graph = g.map(|g| iri(g, "graph")).transpose()?;
    Ok(RawQuad {
        line,
        subject,
        predicate,
        object,
        graph,
    })
}

type Parsed = (Term, Term, Term, Option<Term>);

fn parse_line(line: &str) -> std::result::Result<Parsed, String> {
    let mut cur = Cursor { s: line, pos: 0 };
    let s = cur.term()?;
    let p = cur.term()?;
    let o = cur.term()?;
    cur.skip_ws();
    let g = if cur.peek() == Some('.') {
        None
    } else {
        Some(cur.term()?)
    };
    cur.skip_ws();
    if cur.peek() != Some('.') {
        return Err("expected '.' at end of statement".into());
    }
    cur.pos += 1;
    cur.skip_ws();
    match cur.peek() {
        None | Some('#') => Ok((s, p, o, g)),
        Some(c) => Err(format!("unexpected {c:?} after '.'")),
    }
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn term(&mut self) -> std::result::Result<Term, String> {
        self.skip_ws();
        match self.peek() {
            Some('<') => {
                self.pos += 1;
                Ok(Term::Iri(self.iri_body()?))
            }
            Some('"') => {
                self.pos += 1;
                self.literal()
            }
            Some('_') => Err("blank nodes are not supported".into()),
            Some(c) => Err(format!("unexpected {c:?} where a term was expected")),
            None => Err("unexpected end of line".into()),
        }
    }

    fn iri_body(&mut self) -> std::result::Result<String, String> {
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('>') => return Ok(out),
                Some('\\') => out.push(self.unicode_escape()?),
                Some(c) if c == ' ' || c == '<' || c == '"' => {
                    return Err(format!("illegal {c:?} in IRI"))
                }
                Some(c) => out.push(c),
                None => return Err("unterminated IRI".into()),
            }
        }
    }

    fn unicode_escape(&mut self) -> std::result::Result<char, String> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err("invalid escape in IRI".into()),
        };
        self.hex(width)
    }

    fn hex(&mut self, width: usize) -> std::result::Result<char, String> {
        let digits = self
            .s
            .get(self.pos..self.pos + width)
            .filter(|d| d.chars().all(|c| c.is_ascii_hexdigit()))
            .ok_or("truncated unicode escape")?;
        self.pos += width;
        u32::from_str_radix(digits, 16)
            .ok()
            .and_then(char::from_u32)
            .ok_or_else(|| "invalid code point".to_string())
    }

    fn literal(&mut self) -> std::result::Result<Term, String> {
        let mut value = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => {
                    let c = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.hex(4)?,
                        Some('U') => self.hex(8)?,
                        _ => return Err("invalid escape in literal".into()),
                    };
                    value.push(c);
                }
                Some(c) => value.push(c),
                None => return Err("unterminated literal".into()),
            }
        }
        match self.peek() {
            Some('@') => {
                self.pos += 1;
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    self.pos += 1;
                }
                let tag = &self.s[start..self.pos];
                if tag.is_empty() {
                    return Err("empty language tag".into());
                }
                Ok(Term::Literal(Literal::lang(value, tag)))
            }
            Some('^') => {
                if !self.s[self.pos..].starts_with("^^<") {
                    return Err("malformed datatype".into());
                }
                self.pos += 3;
                let dt = self.iri_body()?;
                let dt = EntityUri::parse(&dt).map_err(|e| format!("datatype: {e}"))?;
                Ok(Term::Literal(Literal::typed(value, dt)))
            }
            _ => Ok(Term::Literal(Literal::plain(value))),
        }
    }
}

fn escape_literal(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => out.push_str(&format!("\\u{:04X}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn iri_term(iri: &str) -> String {
    format!("<{iri}>")
}

fn literal_term(lit: &Literal) -> String {
    let body = format!("\"{}\"", escape_literal(&lit.value));
    match (&lit.lang, &lit.datatype) {
        (Some(lang), _) => format!("{body}@{lang}"),
        (None, Some(dt)) => format!("{body}^^{}", iri_term(dt.as_str())),
        (None, None) => body,
    }
}

fn object_term(o: &Object) -> String {
    match o {
        Object::Uri(u) => iri_term(u.as_str()),
        Object::Literal(l) => literal_term(l),
    }
}

/// Serializes statements as N-Quads sorted by (graph, subject, predicate,
/// object) in byte order, with duplicates removed. Each graph's provenance
/// and certainty are written as default-graph triples about the graph id.
pub fn export_quads(statements: &[Statement]) -> String {
    // (graph, subject, predicate, object); the default graph sorts first.
    let mut rows: BTreeSet<(String, String, String, String)> = BTreeSet::new();
    for st in statements {
        let g = iri_term(st.graph.as_str());
        rows.insert((
            g.clone(),
            iri_term(st.subject.as_str()),
            iri_term(&st.predicate.iri()),
            object_term(&st.object),
        ));
        for (pred, value) in graph_meta(st) {
            rows.insert((String::new(), g.clone(), iri_term(&pred), value));
        }
    }
    let mut out = String::new();
    for (g, s, p, o) in rows {
        out.push_str(&s);
        out.push(' ');
        out.push_str(&p);
        out.push(' ');
        out.push_str(&o);
        if !g.is_empty() {
            out.push(' ');
            out.push_str(&g);
        }
        out.push_str(" .\n");
    }
    out
}

fn graph_meta(st: &Statement) -> Vec<(String, String)> {
    let p = &st.provenance;
    let mut meta = vec![
        (
            vocab("provSource"),
            literal_term(&Literal::plain(p.source.as_str())),
        ),
        (
            vocab("provRetrievedAt"),
            literal_term(&Literal::typed(
                format_timestamp(&p.retrieved_at),
                EntityUri::parse(XSD_DATE_TIME).unwrap(),
            )),
        ),
        (
            vocab("provMethod"),
            literal_term(&Literal::plain(p.method.name())),
        ),
    ];
    if let Some(r) = &p.reviewer {
        meta.push((
            vocab("provReviewer"),
            literal_term(&Literal::plain(r.as_str())),
        ));
    }
    if st.certainty != Certainty::Certain {
        meta.push((
            vocab("certainty"),
            literal_term(&Literal::plain(st.certainty.name())),
        ));
    }
    if let Some(label) = &st.source_label {
        meta.push((
            vocab("sourceLabel"),
            literal_term(&Literal::plain(label.as_str())),
        ));
    }
    meta
}
