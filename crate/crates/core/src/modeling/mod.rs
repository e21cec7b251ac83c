//! Entities and statement patterns that keep ambiguity explicit instead of
//! forcing an identification.
//!
//! Nothing minted here is ever linked with `exact_match`: anonymous groups,
//! umbrella terms and diverging identities relate to identified entities
//! through `qualified_relation_to`, `member_of_umbrella` or `see_also` only.

mod keeper;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    normalize_key_part, vocab, AuthorityId, BatchContext, CanonicalKey, Certainty, DateSpec,
    EntityUri, LinkKind, Method, Object, Predicate, Provenance, Statement, Timestamp,
};

pub use keeper::{
    classify_keeper, KeeperCandidate, KeeperClass, KeeperClassification, KeeperLexicon,
};
pub use store::{attach_uncertainty, StatementStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnonymousKind {
    AnonymousGroup,
    CollectiveName,
    AnonymousOwner,
}

impl AnonymousKind {
    pub fn name(self) -> &'static str {
        match self {
            AnonymousKind::AnonymousGroup => "anonymous_group",
            AnonymousKind::CollectiveName => "collective_name",
            AnonymousKind::AnonymousOwner => "anonymous_owner",
        }
    }

    fn class_term(self) -> &'static str {
        match self {
            AnonymousKind::AnonymousGroup => "AnonymousGroup",
            AnonymousKind::CollectiveName => "CollectiveName",
            AnonymousKind::AnonymousOwner => "AnonymousOwner",
        }
    }
}

/// An entity standing for an unidentified creator or owner.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AnonymousEntity {
    pub uri: EntityUri,
    pub key: CanonicalKey,
    pub kind: AnonymousKind,
    pub label: String,
}

/// A reified label grouping entities that share a commonly used name.
/// It is not an agent and its members are never related to each other.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UmbrellaTerm {
    pub uri: EntityUri,
    pub label: String,
    pub members: BTreeSet<EntityUri>,
}

/// Result of an attribution qualified by "school", "circle of" and the like.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualifiedAttribution {
    pub entity: AnonymousEntity,
    pub statements: Vec<Statement>,
    /// Set when the qualifier is not in the lexicon.
    pub diagnostic: Option<String>,
}

/// Attribution qualifiers known to the lexicon, each with its aliases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualifierLexicon {
    canonical: BTreeMap<String, String>,
}

impl QualifierLexicon {
    /// One qualifier per line, aliases after `=` separated by commas:
    /// `follower of = followers of, follower`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut canonical = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (head, aliases) = line.split_once('=').unwrap_or((line, ""));
            let head = normalize_key_part(head);
            if head.is_empty() {
                return Err(Error::Parse {
                    line: n + 1,
                    message: "qualifier entry without a name".into(),
                });
            }
            for form in std::iter::once(head.as_str()).chain(aliases.split(',')) {
                let form = normalize_key_part(form);
                if form.is_empty() {
                    continue;
                }
                if let Some(prev) = canonical.insert(form.clone(), head.clone()) {
                    if prev != head {
                        return Err(Error::Parse {
                            line: n + 1,
                            message: format!("{form:?} already names qualifier {prev:?}"),
                        });
                    }
                }
            }
        }
        Ok(QualifierLexicon { canonical })
    }

    /// Canonical qualifier for `raw`, if known.
    pub fn lookup(&self, raw: &str) -> Option<&str> {
        self.canonical
            .get(&normalize_key_part(raw))
            .map(String::as_str)
    }
}

pub const DEFAULT_QUALIFIERS: &str = "\
school = school of
follower of = followers of, follower
circle of = circle
workshop = workshop of, studio of, bottega
attributed = attributed to, attr.
manner of = style of
copy after = after
";

impl Default for QualifierLexicon {
    fn default() -> Self {
        QualifierLexicon::parse(DEFAULT_QUALIFIERS).expect("default qualifier lexicon parses")
    }
}

/// Getty-style conceptual levels a material or technique term can denote.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaterialLevels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<EntityUri>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub process: Option<EntityUri>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_type: Option<EntityUri>,
}

impl MaterialLevels {
    fn present(&self) -> Vec<(&'static str, &EntityUri)> {
        [
            ("materialLevel", &self.material),
            ("processLevel", &self.process),
            ("objectTypeLevel", &self.object_type),
        ]
        .into_iter()
        .filter_map(|(p, u)| u.as_ref().map(|u| (p, u)))
        .collect()
    }
}

/// Parent links between places plus the set of places that are cities.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceHierarchy {
    pub parent: BTreeMap<EntityUri, EntityUri>,
    pub cities: BTreeSet<EntityUri>,
}

impl PlaceHierarchy {
    pub fn with_parent(mut self, place: EntityUri, parent: EntityUri) -> Self {
        self.parent.insert(place, parent);
        self
    }

    pub fn with_city(mut self, city: EntityUri) -> Self {
        self.cities.insert(city);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceNormalization {
    pub place: EntityUri,
    pub diagnostic: Option<String>,
}

/// Walks parent links from `place` to the nearest city. Without a city
/// ancestor the input comes back unchanged with a diagnostic.
pub fn normalize_place(
    place: &EntityUri,
    hierarchy: &PlaceHierarchy,
) -> Result<PlaceNormalization> {
    let mut path = vec![place.clone()];
    let mut current = place;
    loop {
        if hierarchy.cities.contains(current) {
            return Ok(PlaceNormalization {
                place: current.clone(),
                diagnostic: None,
            });
        }
        let Some(next) = hierarchy.parent.get(current) else {
            return Ok(PlaceNormalization {
                place: place.clone(),
                diagnostic: Some(format!("{place} has no city among its ancestors")),
            });
        };
        if let Some(pos) = path.iter().position(|p| p == next) {
            let mut members: Vec<String> = path[pos..].iter().map(|u| u.to_string()).collect();
            members.sort();
            return Err(Error::Cycle(members));
        }
        path.push(next.clone());
        current = next;
    }
}

/// Graphs that `graph` is an alternative to, following `alternative_of`
/// statements in either direction.
pub fn alternatives_of(statements: &[Statement], graph: &EntityUri) -> BTreeSet<EntityUri> {
    let mut out = BTreeSet::new();
    for st in statements
        .iter()
        .filter(|s| s.link_kind() == Some(LinkKind::AlternativeOf))
    {
        let Some(object) = st.object.as_uri() else {
            continue;
        };
        if &st.subject == graph {
            out.insert(object.clone());
        } else if object == graph {
            out.insert(st.subject.clone());
        }
    }
    out
}

/// Mints ambiguity-preserving entities and the statements describing them,
/// all attributed to one source within one batch.
#[derive(Debug, Clone)]
pub struct Modeler {
    context: BatchContext,
    provenance: Provenance,
    qualifiers: QualifierLexicon,
}

impl Modeler {
    pub fn new(context: BatchContext, source: AuthorityId) -> Self {
        let provenance = context.provenance(source, Method::Minted);
        Modeler {
            context,
            provenance,
            qualifiers: QualifierLexicon::default(),
        }
    }

    pub fn with_qualifiers(mut self, qualifiers: QualifierLexicon) -> Self {
        self.qualifiers = qualifiers;
        self
    }

    pub fn context(&self) -> &BatchContext {
        &self.context
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn statement(
        &self,
        subject: &EntityUri,
        predicate: Predicate,
        object: impl Into<Object>,
    ) -> Statement {
        self.context
            .statement(subject.clone(), predicate, object, &self.provenance)
    }

    fn label(&self, subject: &EntityUri, label: &str) -> Statement {
        self.statement(subject, Predicate::vocab("label"), Object::literal(label))
    }

    fn class(&self, subject: &EntityUri, term: &str) -> Statement {
        let class = EntityUri::parse(&vocab(term)).expect("vocabulary IRIs are valid");
        self.statement(subject, Predicate::vocab("entityClass"), class)
    }

    fn anonymous(
        &self,
        kind: AnonymousKind,
        parts: Vec<String>,
        label: String,
    ) -> Result<AnonymousEntity> {
        let key = CanonicalKey::new(std::iter::once(kind.name().to_string()).chain(parts));
        Ok(AnonymousEntity {
            uri: self.context.mint("anonymous", &key)?,
            key,
            kind,
            label,
        })
    }

    /// Label and class statements for an anonymous entity.
    pub fn describe(&self, entity: &AnonymousEntity) -> Vec<Statement> {
        vec![
            self.label(&entity.uri, &entity.label),
            self.class(&entity.uri, entity.kind.class_term()),
        ]
    }

    /// One entity per school or region and period, whoever asks for it.
    pub fn mint_anonymous_group(&self, region: &str, period: DateSpec) -> Result<AnonymousEntity> {
        let region_key = normalize_key_part(region);
        if region_key.is_empty() && period.is_unknown() {
            return Err(Error::invalid("anonymous group needs a region or a period"));
        }
        let interval = match period.interval() {
            Some((a, b)) => format!("{a}/{b}"),
            None => "unknown".to_string(),
        };
        let label = match (region_key.is_empty(), period.is_unknown()) {
            (false, false) => format!("Anonymous {} {period}", region.trim()),
            (false, true) => format!("Anonymous {}", region.trim()),
            _ => format!("Anonymous {period}"),
        };
        self.anonymous(
            AnonymousKind::AnonymousGroup,
            vec![region_key, interval],
            label,
        )
    }

    /// A family or studio name used without telling which member is meant.
    /// The entity has no relation to any identified bearer of the name.
    pub fn mint_collective_name(&self, name: &str) -> Result<AnonymousEntity> {
        let key = normalize_key_part(name);
        if key.is_empty() {
            return Err(Error::invalid("collective name must be non-empty"));
        }
        let label = format!("{} (collective name)", name.trim());
        self.anonymous(AnonymousKind::CollectiveName, vec![key], label)
    }

    /// An owner known only by description, such as "private collection, Milan".
    pub fn mint_anonymous_owner(&self, description: &str) -> Result<AnonymousEntity> {
        let key = normalize_key_part(description);
        if key.is_empty() {
            return Err(Error::invalid("anonymous owner needs a description"));
        }
        self.anonymous(
            AnonymousKind::AnonymousOwner,
            vec![key],
            description.trim().to_string(),
        )
    }

    /// Anonymous entity for e.g. "Leonardo da Vinci, school", related to the
    /// base artist by `qualified_relation_to`. An unknown qualifier is kept
    /// verbatim and reported.
    pub fn mint_qualified_attribution(
        &self,
        base: &EntityUri,
        base_label: &str,
        qualifier: &str,
    ) -> Result<QualifiedAttribution> {
        let raw = qualifier.trim();
        if raw.is_empty() {
            return Err(Error::invalid("qualifier must be non-empty"));
        }
        let (key_part, diagnostic) = match self.qualifiers.lookup(raw) {
            Some(canonical) => (canonical.to_string(), None),
            None => (
                normalize_key_part(raw),
                Some(format!(
                    "qualifier {raw:?} is not in the lexicon; kept as given"
                )),
            ),
        };
        let label = format!("{}, {raw}", base_label.trim());
        let entity = self.anonymous(
            AnonymousKind::AnonymousGroup,
            vec!["qualified".into(), base.to_string(), key_part],
            label,
        )?;
        let mut statements = self.describe(&entity);
        statements.push(self.statement(
            &entity.uri,
            Predicate::Link(LinkKind::QualifiedRelationTo),
            base.clone(),
        ));
        statements.push(self.statement(
            &entity.uri,
            Predicate::vocab("qualifier"),
            Object::literal(raw),
        ));
        Ok(QualifiedAttribution {
            entity,
            statements,
            diagnostic,
        })
    }

    /// Umbrella term for a shared label, with one membership link per member.
    pub fn mint_umbrella(
        &self,
        label: &str,
        members: &BTreeSet<EntityUri>,
    ) -> Result<(UmbrellaTerm, Vec<Statement>)> {
        let key = normalize_key_part(label);
        if key.is_empty() {
            return Err(Error::invalid("umbrella label must be non-empty"));
        }
        if members.is_empty() {
            return Err(Error::invalid(format!("umbrella {label:?} has no members")));
        }
        let uri = self.context.mint("umbrella", &CanonicalKey::new([key]))?;
        let mut umbrella = UmbrellaTerm {
            uri,
            label: label.trim().to_string(),
            members: BTreeSet::new(),
        };
        let mut statements = vec![
            self.label(&umbrella.uri, &umbrella.label),
            self.class(&umbrella.uri, "UmbrellaTerm"),
        ];
        statements.extend(self.extend_umbrella(&mut umbrella, members));
        Ok((umbrella, statements))
    }

    /// Adds members to an existing umbrella; returns links for new members only.
    pub fn extend_umbrella(
        &self,
        umbrella: &mut UmbrellaTerm,
        members: &BTreeSet<EntityUri>,
    ) -> Vec<Statement> {
        members
            .iter()
            .filter(|m| **m != umbrella.uri)
            .filter(|m| umbrella.members.insert((*m).clone()))
            .map(|m| {
                self.statement(
                    m,
                    Predicate::Link(LinkKind::MemberOfUmbrella),
                    umbrella.uri.clone(),
                )
            })
            .collect()
    }

    /// New entity for a label scholars identify differently, pointing at
    /// every candidate with `see_also` qualified as alternative.
    pub fn link_diverging_identity(
        &self,
        label: &str,
        candidates: &BTreeSet<EntityUri>,
    ) -> Result<(EntityUri, Vec<Statement>)> {
        let key = normalize_key_part(label);
        if key.is_empty() {
            return Err(Error::invalid("diverging identity needs a label"));
        }
        if candidates.is_empty() {
            return Err(Error::invalid(format!(
                "{label:?} has no candidate identities"
            )));
        }
        let uri = self.context.mint("identity", &CanonicalKey::new([key]))?;
        let mut statements = vec![self.label(&uri, label.trim())];
        statements.extend(candidates.iter().map(|c| {
            self.statement(&uri, Predicate::Link(LinkKind::SeeAlso), c.clone())
                .with_certainty(Certainty::Alternative)
        }));
        Ok((uri, statements))
    }

    /// One statement per conceptual level a term denotes, each keeping the
    /// raw term as its source label. The subject is a node minted for the term.
    pub fn assert_material_levels(
        &self,
        term: &str,
        levels: &MaterialLevels,
    ) -> Result<(EntityUri, Vec<Statement>)> {
        let key = normalize_key_part(term);
        if key.is_empty() {
            return Err(Error::invalid("material term must be non-empty"));
        }
        let present = levels.present();
        if present.is_empty() {
            return Err(Error::invalid(format!(
                "no conceptual level given for {term:?}"
            )));
        }
        let uri = self
            .context
            .mint("term", &CanonicalKey::new(["material", key.as_str()]))?;
        let statements = present
            .into_iter()
            .map(|(predicate, target)| {
                self.statement(&uri, Predicate::vocab(predicate), target.clone())
                    .with_source_label(&self.context, term)
            })
            .collect();
        Ok((uri, statements))
    }

    /// Creator statements for mutually exclusive attributions, one named graph
    /// each, plus an `alternative_of` statement per pair of graphs. No
    /// candidate is preferred.
    pub fn assert_alternative_attribution(
        &self,
        work: &EntityUri,
        candidates: &[EntityUri],
        provenance: &Provenance,
    ) -> Result<Vec<Statement>> {
        let distinct: BTreeSet<&EntityUri> = candidates.iter().collect();
        if distinct.len() < 2 {
            return Err(Error::invalid(format!(
                "alternative attribution of {work} needs two distinct candidates"
            )));
        }
        let mut statements = Vec::new();
        let mut graphs = BTreeSet::new();
        for candidate in distinct {
            let graph = self
                .context
                .graph_for_alternative(provenance, &["creator", work.as_str(), candidate.as_str()]);
            let st = Statement {
                subject: work.clone(),
                predicate: Predicate::vocab("creator"),
                object: candidate.clone().into(),
                graph,
                provenance: provenance.clone(),
                certainty: Certainty::Certain,
                source_label: None,
            }
            .with_certainty(Certainty::Alternative);
            graphs.insert(st.graph.clone());
            statements.push(st);
        }
        let meta_graph = self
            .context
            .graph_for_alternative(provenance, &["alternatives", work.as_str()]);
        let graphs: Vec<EntityUri> = graphs.into_iter().collect();
        for (i, a) in graphs.iter().enumerate() {
            for b in &graphs[i + 1..] {
                statements.push(
                    Statement {
                        subject: a.clone(),
                        predicate: Predicate::Link(LinkKind::AlternativeOf),
                        object: b.clone().into(),
                        graph: meta_graph.clone(),
                        provenance: provenance.clone(),
                        certainty: Certainty::Certain,
                        source_label: None,
                    }
                    .with_certainty(Certainty::Alternative),
                );
            }
        }
        Ok(statements)
    }

    /// Name-form node for a literal as inscribed on an object, linked from the
    /// object and to the person it names. The literal is stored untouched.
    pub fn record_name_form(
        &self,
        object: &EntityUri,
        literal: &str,
        person: &EntityUri,
    ) -> Result<(EntityUri, Vec<Statement>)> {
        let key = normalize_key_part(literal);
        if key.is_empty() {
            return Err(Error::invalid("name form must be non-empty"));
        }
        let uri = self.context.mint("nameform", &CanonicalKey::new([key]))?;
        let statements = vec![
            self.statement(
                &uri,
                Predicate::vocab("nameFormLiteral"),
                Object::literal(literal),
            ),
            self.statement(object, Predicate::vocab("inscribedName"), uri.clone()),
            self.statement(&uri, Predicate::vocab("nameOf"), person.clone()),
        ];
        Ok((uri, statements))
    }

    /// Qualifier statement for `statement` under this modeler's source, dated
    /// `at`. See [`attach_uncertainty`].
    pub fn qualify(&self, statement: &Statement, certainty: Certainty, at: Timestamp) -> Statement {
        let provenance = Provenance {
            retrieved_at: at,
            ..self.provenance.clone()
        };
        attach_uncertainty(&self.context, statement, certainty, &provenance)
    }
}

impl fmt::Display for AnonymousEntity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <{}>", self.label, self.uri)
    }
}
