//! Merged records for reconciled entities, and the hierarchies shown to
//! users: umbrella facets, part-whole trees and subject notation chains.
//!
//! Merging never collapses variants. Every title, date and link of every
//! contributing record is kept with its institution; only the display title
//! is chosen, and how it was chosen is always reported.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonizer::Cluster;
use crate::ingest::{
    actor_statements, artwork_statements, ActorRecord, ArtworkRecord, Title, TitleRole,
};
use crate::model::{normalize_key_part, AuthorityId, BatchContext, EntityUri, Statement};
use crate::modeling::UmbrellaTerm;

/// A harmonized cluster together with the institution records it stands for.
/// Starts as one record; review merges add members.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconciledEntity {
    pub id: EntityUri,
    pub members: BTreeSet<EntityUri>,
    pub cluster: Cluster,
}

impl ReconciledEntity {
    pub fn from_cluster(cluster: Cluster) -> Self {
        ReconciledEntity {
            id: cluster.seed.clone(),
            members: BTreeSet::from([cluster.seed.clone()]),
            cluster,
        }
    }

    /// Whether `uri` is one of the member records or a resolved authority URI.
    pub fn covers(&self, uri: &EntityUri) -> bool {
        self.members.contains(uri) || self.cluster.resolved.values().any(|u| u == uri)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SourceRecord {
    Actor(ActorRecord),
    Artwork(ArtworkRecord),
}

impl SourceRecord {
    pub fn uri(&self) -> &EntityUri {
        match self {
            SourceRecord::Actor(r) => &r.uri,
            SourceRecord::Artwork(r) => &r.uri,
        }
    }

    pub fn institution(&self) -> &AuthorityId {
        match self {
            SourceRecord::Actor(r) => &r.institution,
            SourceRecord::Artwork(r) => &r.institution,
        }
    }

    /// Titles for artworks; name forms stand in for titles on actors.
    pub fn titles(&self) -> Vec<Title> {
        match self {
            SourceRecord::Actor(r) => r
                .name_forms
                .iter()
                .map(|n| Title::new(n.value.clone(), None, TitleRole::Other))
                .collect(),
            SourceRecord::Artwork(r) => r.titles.clone(),
        }
    }

    pub fn statements(&self, context: &BatchContext) -> Vec<Statement> {
        match self {
            SourceRecord::Actor(r) => actor_statements(r, context),
            SourceRecord::Artwork(r) => artwork_statements(r, context),
        }
    }
}

/// A title as recorded by one institution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourcedTitle {
    pub title: Title,
    pub institution: AuthorityId,
    pub record: EntityUri,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TitleOrigin {
    ReviewerMarked,
    ReviewerCreated,
    RuleDefault,
}

/// A reviewer's title decision: mark one of the recorded titles, or create
/// a new English one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TitleChoice {
    Mark(String),
    Create(String),
}

impl TitleChoice {
    pub fn validate(&self) -> Result<()> {
        let (TitleChoice::Mark(v) | TitleChoice::Create(v)) = self;
        if v.trim().is_empty() {
            return Err(Error::invalid("preferred title must be non-empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplayTitle {
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    pub origin: TitleOrigin,
    /// Records carrying this exact title; empty for a created title.
    pub sources: Vec<EntityUri>,
}

/// The reviewer's choice when there is one; otherwise the title recorded
/// verbatim by the most institutions, ties going to the shortest and then
/// to the smallest in byte order.
pub fn select_preferred_title(
    titles: &[SourcedTitle],
    choice: Option<&TitleChoice>,
) -> Result<DisplayTitle> {
    if titles.is_empty() {
        return Err(Error::invalid("no titles to choose from"));
    }
    let sources_of = |value: &str| -> Vec<EntityUri> {
        let set: BTreeSet<&EntityUri> = titles
            .iter()
            .filter(|t| t.title.value == value)
            .map(|t| &t.record)
            .collect();
        set.into_iter().cloned().collect()
    };
    match choice {
        Some(TitleChoice::Create(value)) => {
            let value = value.trim();
            if value.is_empty() {
                return Err(Error::invalid("created title must be non-empty"));
            }
            Ok(DisplayTitle {
                value: value.to_string(),
                lang: Some("en".to_string()),
                origin: TitleOrigin::ReviewerCreated,
                sources: Vec::new(),
            })
        }
        Some(TitleChoice::Mark(value)) => {
            let marked = titles
                .iter()
                .find(|t| &t.title.value == value)
                .ok_or_else(|| {
                    Error::invalid(format!(
                        "marked title {value:?} is not among the recorded titles"
                    ))
                })?;
            Ok(DisplayTitle {
                value: value.clone(),
                lang: marked.title.lang.clone(),
                origin: TitleOrigin::ReviewerMarked,
                sources: sources_of(value),
            })
        }
        None => {
            let mut institutions: BTreeMap<&str, BTreeSet<&AuthorityId>> = BTreeMap::new();
            for t in titles {
                institutions
                    .entry(t.title.value.as_str())
                    .or_default()
                    .insert(&t.institution);
            }
            let (value, _) = institutions
                .iter()
                .min_by(|(a, ia), (b, ib)| {
                    ib.len()
                        .cmp(&ia.len())
                        .then(a.chars().count().cmp(&b.chars().count()))
                        .then(a.as_bytes().cmp(b.as_bytes()))
                })
                .expect("non-empty titles");
            let lang = titles
                .iter()
                .find(|t| t.title.value == *value)
                .and_then(|t| t.title.lang.clone());
            Ok(DisplayTitle {
                value: value.to_string(),
                lang,
                origin: TitleOrigin::RuleDefault,
                sources: sources_of(value),
            })
        }
    }
}

/// Everything the contributing records say about one reconciled entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedRecord {
    pub id: EntityUri,
    pub members: BTreeSet<EntityUri>,
    pub resolved: BTreeMap<AuthorityId, EntityUri>,
    pub display_title: Option<DisplayTitle>,
    pub all_titles: Vec<SourcedTitle>,
    /// Contributing statements by named graph, i.e. by provenance.
    pub statements: BTreeMap<EntityUri, Vec<Statement>>,
    pub parts: Vec<EntityUri>,
    pub subject_paths: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl MergedRecord {
    pub fn statement_count(&self) -> usize {
        self.statements.values().map(Vec::len).sum()
    }

    /// Records the direct parts of this entity's members.
    pub fn attach_parts(&mut self, tree: &PartWhole) {
        let parts: BTreeSet<EntityUri> = self
            .members
            .iter()
            .flat_map(|m| tree.children_of(m).iter().map(|c| c.uri.clone()))
            .collect();
        self.parts = parts.into_iter().collect();
    }
}

/// Unions the statements of all `records`, each kept with its institution's
/// provenance. Fails if a record is not part of `entity`.
pub fn merge_cluster_records(
    entity: &ReconciledEntity,
    records: &[SourceRecord],
    context: &BatchContext,
    choice: Option<&TitleChoice>,
) -> Result<MergedRecord> {
    let mut all_titles = Vec::new();
    let mut statements: BTreeMap<EntityUri, Vec<Statement>> = BTreeMap::new();
    let mut notations = Vec::new();
    for record in records {
        if !entity.covers(record.uri()) {
            return Err(Error::invalid(format!(
                "record {} is not part of {}",
                record.uri(),
                entity.id
            )));
        }
        for title in record.titles() {
            all_titles.push(SourcedTitle {
                title,
                institution: record.institution().clone(),
                record: record.uri().clone(),
            });
        }
        for st in record.statements(context) {
            statements.entry(st.graph.clone()).or_default().push(st);
        }
        if let SourceRecord::Artwork(a) = record {
            notations.extend(a.subjects.iter().cloned());
        }
    }
    all_titles.sort();
    let display_title = match (all_titles.is_empty(), choice) {
        (true, None) => None,
        _ => Some(select_preferred_title(&all_titles, choice)?),
    };
    notations.sort();
    notations.dedup();
    let (subject_paths, diagnostics) = subject_hierarchy(&notations);
    Ok(MergedRecord {
        id: entity.id.clone(),
        members: entity.members.clone(),
        resolved: entity.cluster.resolved.clone(),
        display_title,
        all_titles,
        statements,
        parts: Vec::new(),
        subject_paths,
        diagnostics,
    })
}

/// An entity offered as a facet, with the artworks attributed to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetEntity {
    pub uri: EntityUri,
    pub label: String,
    pub artworks: BTreeSet<EntityUri>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacetKind {
    Entity,
    Umbrella,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetNode {
    pub uri: EntityUri,
    pub label: String,
    pub kind: FacetKind,
    pub artwork_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<FacetNode>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetTree {
    pub roots: Vec<FacetNode>,
}

fn leaf(entity: &FacetEntity) -> FacetNode {
    FacetNode {
        uri: entity.uri.clone(),
        label: entity.label.clone(),
        kind: FacetKind::Entity,
        artwork_count: entity.artworks.len(),
        children: Vec::new(),
    }
}

fn facet_order(a: &FacetNode, b: &FacetNode) -> std::cmp::Ordering {
    normalize_key_part(&a.label)
        .cmp(&normalize_key_part(&b.label))
        .then_with(|| a.uri.cmp(&b.uri))
}

/// Umbrellas become roots expanding to exactly their members; entities in
/// no umbrella are roots of their own. A root counts each artwork once even
/// when several children share it.
pub fn build_facet_tree(entities: &[FacetEntity], umbrellas: &[UmbrellaTerm]) -> FacetTree {
    let by_uri: BTreeMap<&EntityUri, &FacetEntity> = entities.iter().map(|e| (&e.uri, e)).collect();
    let mut roots = Vec::new();
    let mut grouped: BTreeSet<&EntityUri> = BTreeSet::new();
    for umbrella in umbrellas {
        let mut artworks: BTreeSet<&EntityUri> = BTreeSet::new();
        let mut children: Vec<FacetNode> = umbrella
            .members
            .iter()
            .map(|m| {
                grouped.insert(m);
                match by_uri.get(m) {
                    Some(e) => {
                        artworks.extend(e.artworks.iter());
                        leaf(e)
                    }
                    None => FacetNode {
                        uri: m.clone(),
                        label: m.to_string(),
                        kind: FacetKind::Entity,
                        artwork_count: 0,
                        children: Vec::new(),
                    },
                }
            })
            .collect();
        children.sort_by(facet_order);
        roots.push(FacetNode {
            uri: umbrella.uri.clone(),
            label: umbrella.label.clone(),
            kind: FacetKind::Umbrella,
            artwork_count: artworks.len(),
            children,
        });
    }
    roots.extend(
        entities
            .iter()
            .filter(|e| !grouped.contains(&e.uri))
            .map(leaf),
    );
    roots.sort_by(facet_order);
    FacetTree { roots }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartNode {
    pub uri: EntityUri,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<PartNode>,
}

impl PartNode {
    fn depth(&self) -> usize {
        1 + self.children.iter().map(PartNode::depth).max().unwrap_or(0)
    }

    fn find(&self, uri: &EntityUri) -> Option<&PartNode> {
        if &self.uri == uri {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(uri))
    }
}

/// Works and their parts. Parts stay records of their own; the tree only
/// places them under their parent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartWhole {
    pub roots: Vec<PartNode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl PartWhole {
    pub fn depth(&self) -> usize {
        self.roots.iter().map(PartNode::depth).max().unwrap_or(0)
    }

    pub fn children_of(&self, uri: &EntityUri) -> &[PartNode] {
        self.roots
            .iter()
            .find_map(|r| r.find(uri))
            .map(|n| n.children.as_slice())
            .unwrap_or(&[])
    }
}

/// Builds the part-whole forest from `parent_work` references. A parent
/// that is not among the records leaves the child standalone with a
/// diagnostic; a cycle is an error naming its members.
pub fn build_part_whole(records: &[ArtworkRecord]) -> Result<PartWhole> {
    let known: BTreeSet<&EntityUri> = records.iter().map(|r| &r.uri).collect();
    let mut parent: BTreeMap<&EntityUri, &EntityUri> = BTreeMap::new();
    let mut diagnostics = Vec::new();
    for r in records {
        match &r.parent_work {
            Some(p) if p == &r.uri => return Err(Error::Cycle(vec![r.uri.to_string()])),
            Some(p) if known.contains(p) => {
                parent.insert(&r.uri, p);
            }
            Some(p) => diagnostics.push(format!("{} refers to unknown parent {p}", r.uri)),
            None => {}
        }
    }
    for start in &known {
        let mut path = vec![*start];
        let mut current = *start;
        while let Some(next) = parent.get(current) {
            if let Some(pos) = path.iter().position(|u| u == next) {
                let mut members: Vec<String> = path[pos..].iter().map(|u| u.to_string()).collect();
                members.sort();
                return Err(Error::Cycle(members));
            }
            path.push(next);
            current = next;
        }
    }
    let mut children: BTreeMap<&EntityUri, Vec<&EntityUri>> = BTreeMap::new();
    for (child, p) in &parent {
        children.entry(p).or_default().push(child);
    }
    fn node(uri: &EntityUri, children: &BTreeMap<&EntityUri, Vec<&EntityUri>>) -> PartNode {
        PartNode {
            uri: uri.clone(),
            children: children
                .get(uri)
                .into_iter()
                .flatten()
                .map(|c| node(c, children))
                .collect(),
        }
    }
    let roots = known
        .iter()
        .filter(|u| !parent.contains_key(*u))
        .map(|u| node(u, &children))
        .collect();
    Ok(PartWhole { roots, diagnostics })
}

/// Steps of a subject notation: each character is a step, except that a
/// parenthesised qualifier and a doubled letter are taken whole.
fn notation_steps(notation: &str) -> std::result::Result<Vec<String>, String> {
    let chars: Vec<char> = notation.chars().collect();
    let mut steps = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let len = if c == '(' {
            match chars[i..].iter().position(|&x| x == ')') {
                Some(end) => end + 1,
                None => return Err(format!("unclosed parenthesis in {notation:?}")),
            }
        } else if c == ')' {
            return Err(format!("unbalanced parenthesis in {notation:?}"));
        } else if c.is_whitespace() {
            return Err(format!("whitespace inside notation {notation:?}"));
        } else if c.is_ascii_alphabetic() && chars.get(i + 1) == Some(&c) {
            2
        } else {
            1
        };
        steps.push(chars[i..i + len].iter().collect());
        i += len;
    }
    Ok(steps)
}

/// Expands each notation into the chain of its ancestors, itself included:
/// "73D" gives ["7", "73", "73D"]. Empty or malformed notations are skipped
/// with a diagnostic.
pub fn subject_hierarchy(notations: &[String]) -> (Vec<Vec<String>>, Vec<String>) {
    let mut paths = Vec::new();
    let mut diagnostics = Vec::new();
    for raw in notations {
        let notation = raw.trim();
        if notation.is_empty() {
            diagnostics.push("empty subject notation skipped".to_string());
            continue;
        }
        match notation_steps(notation) {
            Ok(steps) => {
                let mut prefix = String::new();
                paths.push(
                    steps
                        .iter()
                        .map(|s| {
                            prefix.push_str(s);
                            prefix.clone()
                        })
                        .collect(),
                );
            }
            Err(e) => diagnostics.push(format!("{e}; skipped")),
        }
    }
    (paths, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{institution_uri, modeling_context, uri};
    use crate::ingest::{CreatorRef, NameForm};
    use crate::model::DateSpec;

    fn artwork(inst: &str, id: &str, titles: &[&str], date: DateSpec) -> ArtworkRecord {
        ArtworkRecord {
            uri: uri(&format!("https://data.artrecon.example/{inst}/work/{id}")),
            local_id: id.to_string(),
            institution: AuthorityId::local(inst).unwrap(),
            titles: titles
                .iter()
                .map(|t| Title::new(*t, Some("it"), TitleRole::Original))
                .collect(),
            creators: vec![CreatorRef {
                actor: institution_uri(inst, "bazzi"),
                certainty: Default::default(),
            }],
            date,
            materials: vec![],
            subjects: vec![],
            keeper_chain: vec![],
            parent_work: None,
        }
    }

    fn entity_of(records: &[&ArtworkRecord]) -> ReconciledEntity {
        let mut e = ReconciledEntity::from_cluster(Cluster::empty(records[0].uri.clone()));
        e.members.extend(records.iter().map(|r| r.uri.clone()));
        e
    }

    fn sourced(value: &str, inst: &str) -> SourcedTitle {
        SourcedTitle {
            title: Title::new(value, None, TitleRole::Other),
            institution: AuthorityId::local(inst).unwrap(),
            record: uri(&format!("https://data.artrecon.example/{inst}/work/1")),
        }
    }

    #[test]
    fn two_institutions_two_titles() {
        let a = artwork(
            "zeri",
            "1",
            &["Madonna col Bambino"],
            DateSpec::century(16).unwrap(),
        );
        let b = artwork(
            "frick",
            "9",
            &["Virgin and Child"],
            DateSpec::century(16).unwrap(),
        );
        let e = entity_of(&[&a, &b]);
        let recs = [
            SourceRecord::Artwork(a.clone()),
            SourceRecord::Artwork(b.clone()),
        ];
        let m = merge_cluster_records(&e, &recs, &modeling_context(), None).unwrap();
        assert_eq!(m.all_titles.len(), 2);
        let insts: BTreeSet<_> = m
            .all_titles
            .iter()
            .map(|t| t.institution.as_str().to_string())
            .collect();
        assert_eq!(
            insts,
            BTreeSet::from(["local:frick".to_string(), "local:zeri".to_string()])
        );
        let direct: usize = recs
            .iter()
            .map(|r| r.statements(&modeling_context()).len())
            .sum();
        assert_eq!(m.statement_count(), direct);
        assert_eq!(m.display_title.unwrap().origin, TitleOrigin::RuleDefault);
    }

    #[test]
    fn dates_are_not_collapsed() {
        let c16 = DateSpec::century(16).unwrap();
        let recs: Vec<ArtworkRecord> = vec![
            artwork("zeri", "1", &["A"], c16),
            artwork("frick", "2", &["A"], c16),
            artwork(
                "hertziana",
                "3",
                &["A"],
                DateSpec::range(1510, 1520).unwrap(),
            ),
        ];
        let e = entity_of(&recs.iter().collect::<Vec<_>>());
        let src: Vec<SourceRecord> = recs.into_iter().map(SourceRecord::Artwork).collect();
        let m = merge_cluster_records(&e, &src, &modeling_context(), None).unwrap();
        let dates: Vec<&Statement> = m
            .statements
            .values()
            .flatten()
            .filter(|s| s.predicate == crate::model::Predicate::vocab("date"))
            .collect();
        assert_eq!(dates.len(), 3);
        let sources: BTreeSet<_> = dates.iter().map(|s| &s.provenance.source).collect();
        assert_eq!(sources.len(), 3);
    }

    #[test]
    fn singleton_and_foreign_records() {
        let a = artwork("zeri", "1", &["A"], DateSpec::Unknown);
        let e = entity_of(&[&a]);
        let m = merge_cluster_records(
            &e,
            &[SourceRecord::Artwork(a.clone())],
            &modeling_context(),
            None,
        )
        .unwrap();
        assert_eq!(m.members, BTreeSet::from([a.uri.clone()]));
        assert_eq!(m.display_title.unwrap().value, "A");
        let stranger = artwork("frick", "2", &["B"], DateSpec::Unknown);
        assert!(merge_cluster_records(
            &e,
            &[SourceRecord::Artwork(stranger)],
            &modeling_context(),
            None
        )
        .is_err());
    }

    #[test]
    fn actors_merge_by_name_forms() {
        let mut actor = crate::fixtures::actor("zeri", "bohm", "Böhm, Osvaldo", vec![]);
        actor.name_forms.push(NameForm {
            value: "Osvaldo Böhm".into(),
            role: None,
        });
        let e = ReconciledEntity::from_cluster(Cluster::empty(actor.uri.clone()));
        let m = merge_cluster_records(&e, &[SourceRecord::Actor(actor)], &modeling_context(), None)
            .unwrap();
        assert_eq!(m.all_titles.len(), 2);
    }

    #[test]
    fn title_selection() {
        let titles = vec![
            sourced("X", "zeri"),
            sourced("X", "frick"),
            sourced("Y", "hertziana"),
        ];
        let rule = select_preferred_title(&titles, None).unwrap();
        assert_eq!(
            (rule.value.as_str(), rule.origin),
            ("X", TitleOrigin::RuleDefault)
        );
        let marked = select_preferred_title(&titles, Some(&TitleChoice::Mark("Y".into()))).unwrap();
        assert_eq!(
            (marked.value.as_str(), marked.origin),
            ("Y", TitleOrigin::ReviewerMarked)
        );
        let created = select_preferred_title(
            &titles,
            Some(&TitleChoice::Create(" Saint Francis ".into())),
        )
        .unwrap();
        assert_eq!(created.value, "Saint Francis");
        assert_eq!(created.origin, TitleOrigin::ReviewerCreated);
        assert_eq!(created.lang.as_deref(), Some("en"));
        assert!(select_preferred_title(&titles, Some(&TitleChoice::Mark("Z".into()))).is_err());
        assert!(select_preferred_title(&[], None).is_err());
        // Same institution twice does not make a majority.
        let titles = vec![
            sourced("Long title", "zeri"),
            sourced("Long title", "zeri"),
            sourced("Short", "frick"),
        ];
        assert_eq!(
            select_preferred_title(&titles, None).unwrap().value,
            "Short"
        );
        let titles = vec![sourced("b", "zeri"), sourced("a", "frick")];
        assert_eq!(select_preferred_title(&titles, None).unwrap().value, "a");
    }

    #[test]
    fn title_choice_serde() {
        let mark: TitleChoice = serde_json::from_str(r#"{"mark":"B"}"#).unwrap();
        assert_eq!(mark, TitleChoice::Mark("B".into()));
        let create: TitleChoice = serde_json::from_str(r#"{"create":"New"}"#).unwrap();
        assert_eq!(create, TitleChoice::Create("New".into()));
    }

    fn facet(id: &str, label: &str, works: &[u32]) -> FacetEntity {
        FacetEntity {
            uri: uri(&format!("https://data.artrecon.example/zeri/actor/{id}")),
            label: label.into(),
            artworks: works
                .iter()
                .map(|w| uri(&format!("https://data.artrecon.example/zeri/work/{w}")))
                .collect(),
        }
    }

    #[test]
    fn umbrella_roots_count_union() {
        let osvaldo = facet("osvaldo", "Osvaldo Böhm", &[1, 2, 3]);
        let foto = facet("foto", "Foto Böhm", &[3, 4]);
        let collective = facet("collective", "Böhm (collective name)", &[]);
        let other = facet("anderson", "Anderson", &[9]);
        let umbrella = UmbrellaTerm {
            uri: uri("https://data.artrecon.example/umbrella/bohm"),
            label: "Böhm".into(),
            members: [
                osvaldo.uri.clone(),
                foto.uri.clone(),
                collective.uri.clone(),
            ]
            .into(),
        };
        let tree = build_facet_tree(&[osvaldo, foto, collective, other], &[umbrella]);
        assert_eq!(tree.roots.len(), 2);
        let root = tree
            .roots
            .iter()
            .find(|r| r.kind == FacetKind::Umbrella)
            .unwrap();
        assert_eq!(root.children.len(), 3);
        assert_eq!(root.artwork_count, 4);
        let flat = build_facet_tree(&[facet("a", "A", &[1]), facet("b", "B", &[1])], &[]);
        assert!(flat.roots.iter().all(|r| r.children.is_empty()));
        assert_eq!(flat.roots.len(), 2);
    }

    #[test]
    fn fresco_cycle_parts() {
        let parent = artwork(
            "zeri",
            "cycle",
            &["Storie di San Francesco"],
            DateSpec::Unknown,
        );
        let mut recs = vec![parent.clone()];
        for i in 1..=3 {
            let mut scene = artwork("zeri", &format!("scene-{i}"), &["Scene"], DateSpec::Unknown);
            scene.parent_work = Some(parent.uri.clone());
            recs.push(scene);
        }
        let tree = build_part_whole(&recs).unwrap();
        assert_eq!(tree.roots.len(), 1);
        assert_eq!(tree.depth(), 2);
        assert_eq!(tree.children_of(&parent.uri).len(), 3);

        let e = entity_of(&[&parent]);
        let mut m = merge_cluster_records(
            &e,
            &[SourceRecord::Artwork(parent.clone())],
            &modeling_context(),
            None,
        )
        .unwrap();
        m.attach_parts(&tree);
        assert_eq!(m.parts.len(), 3);

        let mut orphan = artwork("zeri", "orphan", &["O"], DateSpec::Unknown);
        orphan.parent_work = Some(uri("https://data.artrecon.example/zeri/work/missing"));
        let t = build_part_whole(&[orphan]).unwrap();
        assert_eq!(t.roots.len(), 1);
        assert_eq!(t.diagnostics.len(), 1);

        let singles = build_part_whole(&recs[..1]).unwrap();
        assert_eq!(singles.depth(), 1);
    }

    #[test]
    fn part_cycles_are_errors() {
        let mut a = artwork("zeri", "a", &["A"], DateSpec::Unknown);
        let mut b = artwork("zeri", "b", &["B"], DateSpec::Unknown);
        a.parent_work = Some(b.uri.clone());
        b.parent_work = Some(a.uri.clone());
        match build_part_whole(&[a.clone(), b.clone()]) {
            Err(Error::Cycle(m)) => assert_eq!(m, vec![a.uri.to_string(), b.uri.to_string()]),
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    /// Independent oracle: a notation's ancestors are its prefixes that end
    /// at a step boundary, found by checking each cut point.
    fn prefix_oracle(n: &str) -> Vec<String> {
        let bytes = n.as_bytes();
        let mut out = Vec::new();
        let mut depth = 0;
        for cut in 1..=bytes.len() {
            match bytes[cut - 1] {
                b'(' => depth += 1,
                b')' => depth -= 1,
                _ => {}
            }
            let doubled_next = cut < bytes.len()
                && bytes[cut - 1].is_ascii_alphabetic()
                && bytes[cut] == bytes[cut - 1]
                && (cut < 2 || bytes[cut - 2] != bytes[cut - 1]);
            if depth == 0 && !doubled_next {
                out.push(n[..cut].to_string());
            }
        }
        out
    }

    #[test]
    fn subject_notations() {
        let input: Vec<String> = [
            "73D",
            "11H(FRANCIS)",
            "",
            "25FF23(LION)",
            "11H(FRANCIS)5",
            "73D(",
            "11 H",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let (paths, diags) = subject_hierarchy(&input);
        assert_eq!(paths[0], vec!["7", "73", "73D"]);
        assert_eq!(paths[1], vec!["1", "11", "11H", "11H(FRANCIS)"]);
        assert_eq!(
            paths[2],
            vec!["2", "25", "25FF", "25FF2", "25FF23", "25FF23(LION)"]
        );
        assert_eq!(paths.len(), 4);
        assert_eq!(diags.len(), 3);
        for (n, p) in ["73D", "11H(FRANCIS)", "25FF23(LION)", "11H(FRANCIS)5"]
            .iter()
            .zip(&paths)
        {
            assert_eq!(&prefix_oracle(n), p, "{n}");
        }
    }
}
