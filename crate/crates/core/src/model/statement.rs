use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::authority::AuthorityId;
use super::uri::{mint_deterministic_uri, CanonicalKey, EntityUri, Namespace};
use super::vocab;
use crate::error::{Error, Result};

pub type Timestamp = DateTime<Utc>;

pub(crate) fn format_timestamp(ts: &Timestamp) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

const SKOS_EXACT_MATCH: &str = "http://www.w3.org/2004/02/skos/core#exactMatch";
const OWL_SAME_AS: &str = "http://www.w3.org/2002/07/owl#sameAs";
const RDFS_SEE_ALSO: &str = "http://www.w3.org/2000/01/rdf-schema#seeAlso";
const DCT_IS_REPLACED_BY: &str = "http://purl.org/dc/terms/isReplacedBy";
const DCT_REPLACED_BY: &str = "http://purl.org/dc/terms/replacedBy";

/// Kind of an identity or association link between two URIs.
///
/// Only `exact_match` is transitive; every other kind, `see_also` in
/// particular, is ignored by cluster closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    ExactMatch,
    SeeAlso,
    ReplacedBy,
    MemberOfUmbrella,
    QualifiedRelationTo,
    AlternativeOf,
    PartOf,
    KeeperOf,
    LocatedIn,
}

impl LinkKind {
    pub const ALL: [LinkKind; 9] = [
        LinkKind::ExactMatch,
        LinkKind::SeeAlso,
        LinkKind::ReplacedBy,
        LinkKind::MemberOfUmbrella,
        LinkKind::QualifiedRelationTo,
        LinkKind::AlternativeOf,
        LinkKind::PartOf,
        LinkKind::KeeperOf,
        LinkKind::LocatedIn,
    ];

    pub fn is_transitive(self) -> bool {
        self == LinkKind::ExactMatch
    }

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::ExactMatch => "exact_match",
            LinkKind::SeeAlso => "see_also",
            LinkKind::ReplacedBy => "replaced_by",
            LinkKind::MemberOfUmbrella => "member_of_umbrella",
            LinkKind::QualifiedRelationTo => "qualified_relation_to",
            LinkKind::AlternativeOf => "alternative_of",
            LinkKind::PartOf => "part_of",
            LinkKind::KeeperOf => "keeper_of",
            LinkKind::LocatedIn => "located_in",
        }
    }

    pub fn from_name(name: &str) -> Option<LinkKind> {
        LinkKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn iri(self) -> String {
        match self {
            LinkKind::ExactMatch => SKOS_EXACT_MATCH.to_string(),
            LinkKind::SeeAlso => RDFS_SEE_ALSO.to_string(),
            LinkKind::ReplacedBy => DCT_IS_REPLACED_BY.to_string(),
            LinkKind::MemberOfUmbrella => vocab("memberOfUmbrella"),
            LinkKind::QualifiedRelationTo => vocab("qualifiedRelationTo"),
            LinkKind::AlternativeOf => vocab("alternativeOf"),
            LinkKind::PartOf => vocab("partOf"),
            LinkKind::KeeperOf => vocab("keeperOf"),
            LinkKind::LocatedIn => vocab("locatedIn"),
        }
    }

    /// Recognises the kind's own IRI plus the common aliases found in
    /// authority dumps (`owl:sameAs`, `dct:replacedBy`).
    pub fn from_iri(iri: &str) -> Option<LinkKind> {
        match iri {
            OWL_SAME_AS => Some(LinkKind::ExactMatch),
            DCT_REPLACED_BY => Some(LinkKind::ReplacedBy),
            _ => LinkKind::ALL.into_iter().find(|k| k.iri() == iri),
        }
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Asserted,
    Expanded,
    Minted,
    Reviewed,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Asserted => "asserted",
            Method::Expanded => "expanded",
            Method::Minted => "minted",
            Method::Reviewed => "reviewed",
        }
    }

    pub fn from_name(name: &str) -> Option<Method> {
        [
            Method::Asserted,
            Method::Expanded,
            Method::Minted,
            Method::Reviewed,
        ]
        .into_iter()
        .find(|m| m.name() == name)
    }
}

/// Where a statement came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub source: AuthorityId,
    pub retrieved_at: Timestamp,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reviewer: Option<String>,
}

impl Provenance {
    pub fn new(source: AuthorityId, retrieved_at: Timestamp, method: Method) -> Result<Self> {
        if method == Method::Reviewed {
            return Err(Error::invalid("reviewed provenance requires a reviewer"));
        }
        Ok(Provenance {
            source,
            retrieved_at,
            method,
            reviewer: None,
        })
    }

    pub fn reviewed(source: AuthorityId, retrieved_at: Timestamp, reviewer: &str) -> Result<Self> {
        if reviewer.trim().is_empty() {
            return Err(Error::invalid("reviewer must be non-empty"));
        }
        Ok(Provenance {
            source,
            retrieved_at,
            method: Method::Reviewed,
            reviewer: Some(reviewer.trim().to_string()),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match (self.method, &self.reviewer) {
            (Method::Reviewed, None) => {
                Err(Error::invalid("reviewed provenance requires a reviewer"))
            }
            _ => Ok(()),
        }
    }
}

/// Certainty level qualifying a single statement.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    #[default]
    Certain,
    Attributed,
    Uncertain,
    Alternative,
    Traditional,
}

impl Certainty {
    pub const ALL: [Certainty; 5] = [
        Certainty::Certain,
        Certainty::Attributed,
        Certainty::Uncertain,
        Certainty::Alternative,
        Certainty::Traditional,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Certainty::Certain => "certain",
            Certainty::Attributed => "attributed",
            Certainty::Uncertain => "uncertain",
            Certainty::Alternative => "alternative",
            Certainty::Traditional => "traditional",
        }
    }

    pub fn from_name(name: &str) -> Option<Certainty> {
        Certainty::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Link(LinkKind),
    Property(EntityUri),
}

impl Predicate {
    /// Link kinds are recognised from their IRIs, everything else is a
    /// descriptive property.
    pub fn from_iri(iri: EntityUri) -> Predicate {
        match LinkKind::from_iri(iri.as_str()) {
            Some(kind) => Predicate::Link(kind),
            None => Predicate::Property(iri),
        }
    }

    /// Crate vocabulary property, e.g. `title`.
    pub fn vocab(term: &str) -> Predicate {
        Predicate::from_iri(EntityUri::parse(&vocab(term)).expect("vocabulary IRIs are valid"))
    }

    pub fn iri(&self) -> String {
        match self {
            Predicate::Link(kind) => kind.iri(),
            Predicate::Property(iri) => iri.as_str().to_string(),
        }
    }

    pub fn link_kind(&self) -> Option<LinkKind> {
        match self {
            Predicate::Link(kind) => Some(*kind),
            Predicate::Property(_) => None,
        }
    }
}

const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datatype: Option<EntityUri>,
}

impl Literal {
    pub fn plain(value: impl Into<String>) -> Self {
        Literal {
            value: value.into(),
            lang: None,
            datatype: None,
        }
    }

    pub fn lang(value: impl Into<String>, lang: &str) -> Self {
        let lang = lang.trim().to_ascii_lowercase();
        Literal {
            value: value.into(),
            lang: (!lang.is_empty()).then_some(lang),
            datatype: None,
        }
    }

    /// `xsd:string` is folded into the plain form.
    pub fn typed(value: impl Into<String>, datatype: EntityUri) -> Self {
        Literal {
            value: value.into(),
            lang: None,
            datatype: (datatype.as_str() != XSD_STRING).then_some(datatype),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Object {
    Uri(EntityUri),
    Literal(Literal),
}

impl Object {
    pub fn as_uri(&self) -> Option<&EntityUri> {
        match self {
            Object::Uri(u) => Some(u),
            Object::Literal(_) => None,
        }
    }

    pub fn literal(value: impl Into<String>) -> Object {
        Object::Literal(Literal::plain(value))
    }
}

impl From<EntityUri> for Object {
    fn from(u: EntityUri) -> Self {
        Object::Uri(u)
    }
}

/// One immutable assertion in a named graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Statement {
    pub subject: EntityUri,
    pub predicate: Predicate,
    pub object: Object,
    pub graph: EntityUri,
    pub provenance: Provenance,
    #[serde(default)]
    pub certainty: Certainty,
    /// Raw source string the statement was derived from, when one term was
    /// split into several assertions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_label: Option<String>,
}

impl Statement {
    pub fn link_kind(&self) -> Option<LinkKind> {
        self.predicate.link_kind()
    }

    /// Copy of this statement carrying `certainty`, placed in the sibling
    /// graph for that certainty level so that each graph holds a single
    /// provenance and qualifier.
    pub fn with_certainty(&self, certainty: Certainty) -> Statement {
        let base = graph_base(&self.graph);
        let graph = match certainty {
            Certainty::Certain => base.to_string(),
            c => format!("{base}/{}", c.name()),
        };
        Statement {
            graph: EntityUri::parse(&graph).expect("suffixing a canonical URI keeps it valid"),
            certainty,
            ..self.clone()
        }
    }
}

impl Statement {
    /// Copy of this statement labelled with the raw string it came from,
    /// moved to a graph specific to that label.
    pub fn with_source_label(&self, context: &BatchContext, label: &str) -> Statement {
        let graph = context.graph_for_alternative(&self.provenance, &["source_label", label]);
        Statement {
            graph,
            certainty: Certainty::Certain,
            source_label: Some(label.to_string()),
            ..self.clone()
        }
        .with_certainty(self.certainty)
    }
}

fn graph_base(graph: &EntityUri) -> &str {
    let s = graph.as_str();
    if let Some((base, last)) = s.rsplit_once('/') {
        if Certainty::from_name(last).is_some_and(|c| c != Certainty::Certain) {
            return base;
        }
    }
    s
}

/// Shared context for the statements produced by one ingestion batch:
/// minting namespace, batch label and retrieval time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchContext {
    pub namespace: Namespace,
    pub batch: String,
    pub retrieved_at: Timestamp,
}

impl BatchContext {
    pub fn new(namespace: Namespace, batch: impl Into<String>, retrieved_at: Timestamp) -> Self {
        BatchContext {
            namespace,
            batch: batch.into(),
            retrieved_at,
        }
    }

    pub fn provenance(&self, source: AuthorityId, method: Method) -> Provenance {
        assert!(method != Method::Reviewed, "use BatchContext::reviewed");
        Provenance {
            source,
            retrieved_at: self.retrieved_at,
            method,
            reviewer: None,
        }
    }

    pub fn reviewed(&self, source: AuthorityId, reviewer: &str) -> Result<Provenance> {
        Provenance::reviewed(source, self.retrieved_at, reviewer)
    }

    pub fn mint(&self, class_tag: &str, key: &CanonicalKey) -> Result<EntityUri> {
        mint_deterministic_uri(&self.namespace, class_tag, key)
    }

    fn graph_key(&self, provenance: &Provenance) -> Vec<String> {
        vec![
            provenance.source.to_string(),
            self.batch.clone(),
            provenance.method.name().to_string(),
            provenance.reviewer.clone().unwrap_or_default(),
            format_timestamp(&provenance.retrieved_at),
        ]
    }

    /// Graph id derived from (source, batch) and the rest of the provenance.
    pub fn graph_for(&self, provenance: &Provenance) -> EntityUri {
        self.mint("graph", &CanonicalKey::new(self.graph_key(provenance)))
            .expect("namespace validated at construction")
    }

    /// Graph id for one member of a set of mutually exclusive alternatives.
    pub fn graph_for_alternative(
        &self,
        provenance: &Provenance,
        discriminator: &[&str],
    ) -> EntityUri {
        let mut key = self.graph_key(provenance);
        key.push("alternative".to_string());
        key.extend(discriminator.iter().map(|s| s.to_string()));
        self.mint("graph", &CanonicalKey::new(key))
            .expect("namespace validated at construction")
    }

    pub fn statement(
        &self,
        subject: EntityUri,
        predicate: Predicate,
        object: impl Into<Object>,
        provenance: &Provenance,
    ) -> Statement {
        Statement {
            subject,
            predicate,
            object: object.into(),
            graph: self.graph_for(provenance),
            provenance: provenance.clone(),
            certainty: Certainty::Certain,
            source_label: None,
        }
    }
}
