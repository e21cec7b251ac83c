use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    vocab, AuthorityId, BatchContext, Certainty, DateSpec, EntityUri, LinkKind, Literal, Method,
    Object, Predicate, Statement,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NameRole {
    Preferred,
    Variant,
    Inscription,
}

impl NameRole {
    pub fn name(self) -> &'static str {
        match self {
            NameRole::Preferred => "preferred",
            NameRole::Variant => "variant",
            NameRole::Inscription => "inscription",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NameForm {
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<NameRole>,
}

impl NameForm {
    pub fn preferred(value: impl Into<String>) -> Self {
        NameForm {
            value: value.into(),
            role: Some(NameRole::Preferred),
        }
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum EntityClass {
    Person,
    Group,
    Organisation,
    Building,
    Collection,
    Place,
    #[default]
    Unknown,
}

impl EntityClass {
    pub fn name(self) -> &'static str {
        match self {
            EntityClass::Person => "person",
            EntityClass::Group => "group",
            EntityClass::Organisation => "organisation",
            EntityClass::Building => "building",
            EntityClass::Collection => "collection",
            EntityClass::Place => "place",
            EntityClass::Unknown => "unknown",
        }
    }

    pub fn parse(raw: &str) -> Option<EntityClass> {
        match raw.trim().to_lowercase().as_str() {
            "person" => Some(EntityClass::Person),
            "group" => Some(EntityClass::Group),
            "organisation" | "organization" => Some(EntityClass::Organisation),
            "building" => Some(EntityClass::Building),
            "collection" => Some(EntityClass::Collection),
            "place" => Some(EntityClass::Place),
            "" | "unknown" => Some(EntityClass::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DateKind {
    #[default]
    Life,
    Activity,
}

/// Birth/death or first/last activity dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorDates {
    pub kind: DateKind,
    pub first: DateSpec,
    pub last: DateSpec,
}

impl Default for ActorDates {
    fn default() -> Self {
        ActorDates {
            kind: DateKind::Life,
            first: DateSpec::Unknown,
            last: DateSpec::Unknown,
        }
    }
}

impl ActorDates {
    pub fn life(first: DateSpec, last: DateSpec) -> Self {
        ActorDates {
            kind: DateKind::Life,
            first,
            last,
        }
    }

    /// A single span such as "1375-1425" split into its two ends.
    pub fn from_span(kind: DateKind, span: DateSpec) -> Self {
        match span {
            DateSpec::YearRange { start, end } => ActorDates {
                kind,
                first: DateSpec::ExactYear(start),
                last: DateSpec::ExactYear(end),
            },
            other => ActorDates {
                kind,
                first: other,
                last: DateSpec::Unknown,
            },
        }
    }

    pub fn span(&self) -> DateSpec {
        DateSpec::span(self.first, self.last)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertedLink {
    pub target: EntityUri,
    pub kind: LinkKind,
    #[serde(default)]
    pub certainty: Certainty,
}

/// One institution's description of an actor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorRecord {
    pub uri: EntityUri,
    pub local_id: String,
    pub institution: AuthorityId,
    pub name_forms: Vec<NameForm>,
    #[serde(default)]
    pub dates: ActorDates,
    #[serde(default)]
    pub entity_class: EntityClass,
    #[serde(default)]
    pub asserted_links: Vec<AssertedLink>,
    /// Unmapped source columns, kept verbatim.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl ActorRecord {
    pub fn validate(&self) -> Result<()> {
        if self.name_forms.iter().all(|n| n.value.trim().is_empty()) {
            return Err(Error::invalid(format!(
                "actor {} has no name form",
                self.local_id
            )));
        }
        if self.local_id.trim().is_empty() {
            return Err(Error::invalid("actor record without local id"));
        }
        Ok(())
    }

    pub fn display_name(&self) -> &str {
        self.name_forms
            .iter()
            .find(|n| n.role == Some(NameRole::Preferred))
            .or_else(|| self.name_forms.first())
            .map(|n| n.value.as_str())
            .unwrap_or(&self.local_id)
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum TitleRole {
    Original,
    Supplied,
    Translated,
    #[default]
    Other,
}

impl TitleRole {
    pub fn name(self) -> &'static str {
        match self {
            TitleRole::Original => "original",
            TitleRole::Supplied => "supplied",
            TitleRole::Translated => "translated",
            TitleRole::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Title {
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    #[serde(default)]
    pub role: TitleRole,
}

impl Title {
    pub fn new(value: impl Into<String>, lang: Option<&str>, role: TitleRole) -> Self {
        Title {
            value: value.into(),
            lang: lang.map(str::to_string),
            role,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatorRef {
    pub actor: EntityUri,
    #[serde(default)]
    pub certainty: Certainty,
}

/// One institution's description of an artwork.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtworkRecord {
    pub uri: EntityUri,
    pub local_id: String,
    pub institution: AuthorityId,
    #[serde(default)]
    pub titles: Vec<Title>,
    #[serde(default)]
    pub creators: Vec<CreatorRef>,
    #[serde(default = "unknown_date")]
    pub date: DateSpec,
    #[serde(default)]
    pub materials: Vec<String>,
    /// ICONCLASS notations.
    #[serde(default)]
    pub subjects: Vec<String>,
    /// Layered keeper labels, most recent first.
    #[serde(default)]
    pub keeper_chain: Vec<String>,
    #[serde(default)]
    pub parent_work: Option<EntityUri>,
}

fn unknown_date() -> DateSpec {
    DateSpec::Unknown
}

impl ArtworkRecord {
    pub fn validate(&self) -> Result<()> {
        if self.titles.iter().all(|t| t.value.trim().is_empty()) && self.local_id.trim().is_empty()
        {
            return Err(Error::invalid(format!(
                "artwork {} has no usable label",
                self.uri
            )));
        }
        Ok(())
    }

    pub fn display_label(&self) -> &str {
        self.titles
            .iter()
            .map(|t| t.value.as_str())
            .find(|t| !t.trim().is_empty())
            .unwrap_or(&self.local_id)
    }
}

fn field_predicate(column: &str) -> Predicate {
    let slug: String = column
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    Predicate::vocab(&format!("field_{slug}"))
}

/// Descriptive and link statements for an actor record, attributed to the
/// record's institution.
pub fn actor_statements(record: &ActorRecord, ctx: &BatchContext) -> Vec<Statement> {
    let prov = ctx.provenance(record.institution.clone(), Method::Asserted);
    let s = || record.uri.clone();
    let mut out = Vec::new();
    for name in &record.name_forms {
        let term = match name.role {
            Some(role) => format!("name_{}", role.name()),
            None => "name".to_string(),
        };
        out.push(ctx.statement(
            s(),
            Predicate::vocab(&term),
            Object::literal(&name.value),
            &prov,
        ));
    }
    out.push(ctx.statement(
        s(),
        Predicate::vocab("entityClass"),
        EntityUri::parse(&vocab(record.entity_class.name())).unwrap(),
        &prov,
    ));
    let (first, last) = match record.dates.kind {
        DateKind::Life => ("birth", "death"),
        DateKind::Activity => ("activityStart", "activityEnd"),
    };
    for (term, date) in [(first, record.dates.first), (last, record.dates.last)] {
        if !date.is_unknown() {
            out.push(ctx.statement(
                s(),
                Predicate::vocab(term),
                Object::literal(date.to_string()),
                &prov,
            ));
        }
    }
    for link in &record.asserted_links {
        out.push(
            ctx.statement(s(), Predicate::Link(link.kind), link.target.clone(), &prov)
                .with_certainty(link.certainty),
        );
    }
    for (column, value) in &record.extra {
        out.push(ctx.statement(s(), field_predicate(column), Object::literal(value), &prov));
    }
    out
}

/// Descriptive statements for an artwork record, attributed to the record's
/// institution.
pub fn artwork_statements(record: &ArtworkRecord, ctx: &BatchContext) -> Vec<Statement> {
    let prov = ctx.provenance(record.institution.clone(), Method::Asserted);
    let s = || record.uri.clone();
    let mut out = Vec::new();
    for t in &record.titles {
        let lit = match &t.lang {
            Some(lang) => Literal::lang(&t.value, lang),
            None => Literal::plain(&t.value),
        };
        out.push(ctx.statement(
            s(),
            Predicate::vocab(&format!("title_{}", t.role.name())),
            Object::Literal(lit),
            &prov,
        ));
    }
    for c in &record.creators {
        out.push(
            ctx.statement(s(), Predicate::vocab("creator"), c.actor.clone(), &prov)
                .with_certainty(c.certainty),
        );
    }
    if !record.date.is_unknown() {
        out.push(ctx.statement(
            s(),
            Predicate::vocab("date"),
            Object::literal(record.date.to_string()),
            &prov,
        ));
    }
    for m in &record.materials {
        out.push(ctx.statement(s(), Predicate::vocab("material"), Object::literal(m), &prov));
    }
    for n in &record.subjects {
        out.push(ctx.statement(s(), Predicate::vocab("subject"), Object::literal(n), &prov));
    }
    for (i, k) in record.keeper_chain.iter().enumerate() {
        out.push(ctx.statement(
            s(),
            Predicate::vocab("keeper"),
            Object::Literal(Literal::plain(format!("{i}:{k}"))),
            &prov,
        ));
    }
    if let Some(parent) = &record.parent_work {
        out.push(ctx.statement(
            s(),
            Predicate::Link(LinkKind::PartOf),
            parent.clone(),
            &prov,
        ));
    }
    out
}
