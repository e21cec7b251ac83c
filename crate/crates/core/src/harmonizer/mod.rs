//! Cross-authority reconciliation of identity links.
//!
//! The pipeline for one institutional record is
//! deprecation resolution → linkset expansion → consistency check →
//! priority filtering, yielding a [`Cluster`] that holds at most one URI per
//! authority. Every stage is pure given a provider snapshot.

mod expand;
mod filter;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ActorRecord, AssertedLink};
use crate::model::{AuthorityId, AuthorityTable, BatchContext, EntityUri, LinkKind, Provenance};
use crate::provider::LinkProvider;

pub use expand::{expand_linkset, resolve_deprecations, MAX_DEPRECATION_CHAIN};
pub use filter::{check_consistency, filter_conflicts};

pub const DEFAULT_DEPTH_LIMIT: usize = 3;

/// A directed identity link together with where it came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProvenancedLink {
    pub from: EntityUri,
    pub to: EntityUri,
    pub kind: LinkKind,
    pub provenance: Provenance,
}

/// Outcome of following a cross-authority link X→Y and looking at Y's
/// links back into X's authority.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RoundTripOutcome {
    Confirmed,
    /// Y links into X's authority, but (also) to other URIs.
    Broken {
        back: BTreeSet<EntityUri>,
    },
    /// Y has no link into X's authority.
    NoBackLink,
    /// Y could not be fetched.
    Unverifiable,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoundTrip {
    pub from: EntityUri,
    pub to: EntityUri,
    #[serde(flatten)]
    pub outcome: RoundTripOutcome,
}

/// A deprecated URI rewritten to its replacement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Replacement {
    pub original: EntityUri,
    pub replacement: EntityUri,
    pub trail: Vec<EntityUri>,
}

/// All identity links gathered for one seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Linkset {
    pub seed: EntityUri,
    pub links: BTreeSet<ProvenancedLink>,
    #[serde(default)]
    pub round_trips: BTreeSet<RoundTrip>,
    /// URIs whose records could not be fetched.
    #[serde(default)]
    pub unverifiable: BTreeSet<EntityUri>,
    #[serde(default)]
    pub replacements: BTreeSet<Replacement>,
    /// Set when expansion stopped at the depth limit with links left to follow.
    #[serde(default)]
    pub truncated: bool,
}

impl Linkset {
    pub fn new(seed: EntityUri) -> Self {
        Linkset {
            seed,
            links: BTreeSet::new(),
            round_trips: BTreeSet::new(),
            unverifiable: BTreeSet::new(),
            replacements: BTreeSet::new(),
            truncated: false,
        }
    }

    /// Every URI mentioned by a link, seed included.
    pub fn uris(&self) -> BTreeSet<&EntityUri> {
        let mut out: BTreeSet<&EntityUri> =
            self.links.iter().flat_map(|l| [&l.from, &l.to]).collect();
        out.insert(&self.seed);
        out
    }

    /// URIs joined to the seed by exact_match links in either direction.
    pub fn component(&self) -> BTreeSet<EntityUri> {
        filter::component(
            &self.seed,
            self.links.iter().filter(|l| l.kind == LinkKind::ExactMatch),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictKind {
    DuplicateInAuthority,
    BrokenRoundTrip,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Conflict {
    pub authority: AuthorityId,
    pub candidates: BTreeSet<EntityUri>,
    pub kind: ConflictKind,
    pub evidence: Vec<ProvenancedLink>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    ExcludedAuthority,
    LostPriority,
    UnresolvedTie,
    Unreachable,
}

impl DiscardReason {
    pub fn name(self) -> &'static str {
        match self {
            DiscardReason::ExcludedAuthority => "excluded_authority",
            DiscardReason::LostPriority => "lost_priority",
            DiscardReason::UnresolvedTie => "unresolved_tie",
            DiscardReason::Unreachable => "unreachable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiscardedLink {
    pub link: ProvenancedLink,
    pub reason: DiscardReason,
}

/// A harmonized linkset: at most one URI per authority.
///
/// Every link of the source linkset lands in exactly one of `support`,
/// `discarded` or `attached` (links into the candidates of an unresolved
/// conflict).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub seed: EntityUri,
    pub resolved: BTreeMap<AuthorityId, EntityUri>,
    pub support: Vec<ProvenancedLink>,
    pub discarded: Vec<DiscardedLink>,
    pub unresolved_conflicts: Vec<Conflict>,
    pub attached: Vec<ProvenancedLink>,
    pub see_also: BTreeSet<EntityUri>,
    /// Conflicts found before filtering, resolved or not.
    pub detected_conflicts: Vec<Conflict>,
    /// Authorities present in the seed's component before filtering.
    pub authorities_seen: BTreeSet<AuthorityId>,
    #[serde(default)]
    pub round_trips: BTreeSet<RoundTrip>,
    #[serde(default)]
    pub unverifiable: BTreeSet<EntityUri>,
    #[serde(default)]
    pub replacements: BTreeSet<Replacement>,
    #[serde(default)]
    pub truncated: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// The part of a cluster that re-harmonization must reproduce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterOutcome {
    pub resolved: BTreeMap<AuthorityId, EntityUri>,
    pub unresolved: BTreeSet<AuthorityId>,
}

impl Cluster {
    pub fn empty(seed: EntityUri) -> Self {
        Cluster {
            seed,
            resolved: BTreeMap::new(),
            support: Vec::new(),
            discarded: Vec::new(),
            unresolved_conflicts: Vec::new(),
            attached: Vec::new(),
            see_also: BTreeSet::new(),
            detected_conflicts: Vec::new(),
            authorities_seen: BTreeSet::new(),
            round_trips: BTreeSet::new(),
            unverifiable: BTreeSet::new(),
            replacements: BTreeSet::new(),
            truncated: false,
            warnings: Vec::new(),
        }
    }

    pub fn link_count(&self) -> usize {
        self.support.len() + self.discarded.len() + self.attached.len()
    }

    pub fn outcome(&self) -> ClusterOutcome {
        ClusterOutcome {
            resolved: self.resolved.clone(),
            unresolved: self
                .unresolved_conflicts
                .iter()
                .map(|c| c.authority.clone())
                .collect(),
        }
    }

    /// Links to feed back through the pipeline: the resolved URIs plus the
    /// candidates of every unresolved conflict, so that ties stay ties.
    pub fn reseed_links(&self) -> Vec<AssertedLink> {
        let mut targets: BTreeSet<&EntityUri> = self.resolved.values().collect();
        for c in &self.unresolved_conflicts {
            targets.extend(c.candidates.iter());
        }
        let mut out: Vec<AssertedLink> = targets
            .into_iter()
            .map(|t| AssertedLink {
                target: t.clone(),
                kind: LinkKind::ExactMatch,
                certainty: Default::default(),
            })
            .collect();
        out.extend(self.see_also.iter().map(|t| AssertedLink {
            target: t.clone(),
            kind: LinkKind::SeeAlso,
            certainty: Default::default(),
        }));
        out
    }

    /// The linkset this cluster was filtered from: every bucket put back
    /// together with the expansion bookkeeping.
    pub fn linkset(&self) -> Linkset {
        let mut links: BTreeSet<ProvenancedLink> = self.support.iter().cloned().collect();
        links.extend(self.attached.iter().cloned());
        links.extend(self.discarded.iter().map(|d| d.link.clone()));
        Linkset {
            seed: self.seed.clone(),
            links,
            round_trips: self.round_trips.clone(),
            unverifiable: self.unverifiable.clone(),
            replacements: self.replacements.clone(),
            truncated: self.truncated,
        }
    }

    pub fn is_conflicted(&self) -> bool {
        !self.detected_conflicts.is_empty()
    }

    /// The links that survived filtering as statements, each in the graph
    /// of its provenance. Discarded links are left out.
    pub fn statements(&self, context: &BatchContext) -> Vec<crate::model::Statement> {
        self.support
            .iter()
            .chain(&self.attached)
            .map(|l| {
                context.statement(
                    l.from.clone(),
                    crate::model::Predicate::Link(l.kind),
                    l.to.clone(),
                    &l.provenance,
                )
            })
            .collect()
    }
}

/// Ranked authorities (most trusted first) and excluded ones.
/// Institution assertions outrank every authority.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorityOrder {
    ranked: Vec<AuthorityId>,
    excluded: BTreeSet<AuthorityId>,
}

/// Position of a link source in a [`PriorityOrder`]; lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rank {
    Institution,
    Ranked(usize),
    Unlisted,
    Excluded,
}

impl PriorityOrder {
    pub fn new(
        ranked: Vec<AuthorityId>,
        excluded: impl IntoIterator<Item = AuthorityId>,
    ) -> Result<Self> {
        let excluded: BTreeSet<AuthorityId> = excluded.into_iter().collect();
        let mut seen = BTreeSet::new();
        for a in &ranked {
            if !seen.insert(a) {
                return Err(Error::Config(format!("authority {a} ranked twice")));
            }
            if excluded.contains(a) {
                return Err(Error::Config(format!(
                    "authority {a} is both ranked and excluded"
                )));
            }
        }
        Ok(PriorityOrder { ranked, excluded })
    }

    /// Parses `"loc,gnd,rkd;exclude=viaf"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = text.split(';');
        let ranked = split_ids(parts.next().unwrap_or(""))?;
        let mut excluded = Vec::new();
        for part in parts {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            match part.strip_prefix("exclude=") {
                Some(list) => excluded.extend(split_ids(list)?),
                None => {
                    return Err(Error::Config(format!(
                        "priority clause {part:?}: expected exclude=<ids>"
                    )))
                }
            }
        }
        PriorityOrder::new(ranked, excluded)
    }

    pub fn from_table(table: &AuthorityTable) -> Self {
        let (ranked, excluded) = table.standings();
        PriorityOrder::new(ranked, excluded).expect("table ids are unique")
    }

    pub fn ranked(&self) -> &[AuthorityId] {
        &self.ranked
    }

    pub fn excluded(&self) -> &BTreeSet<AuthorityId> {
        &self.excluded
    }

    pub fn is_excluded(&self, id: &AuthorityId) -> bool {
        self.excluded.contains(id)
    }

    pub fn rank(&self, source: &AuthorityId) -> Rank {
        if source.is_local() {
            Rank::Institution
        } else if self.excluded.contains(source) {
            Rank::Excluded
        } else if let Some(i) = self.ranked.iter().position(|a| a == source) {
            Rank::Ranked(i)
        } else {
            Rank::Unlisted
        }
    }
}

fn split_ids(list: &str) -> Result<Vec<AuthorityId>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(AuthorityId::new)
        .collect()
}

impl Default for PriorityOrder {
    /// loc > gnd > rkd > ulan > wikidata, viaf excluded.
    fn default() -> Self {
        PriorityOrder::parse("loc,gnd,rkd,ulan,wikidata;exclude=viaf").expect("valid default")
    }
}

impl fmt::Display for PriorityOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |ids: &mut dyn Iterator<Item = &AuthorityId>| {
            ids.map(|a| a.as_str()).collect::<Vec<_>>().join(",")
        };
        write!(f, "{}", join(&mut self.ranked.iter()))?;
        if !self.excluded.is_empty() {
            write!(f, ";exclude={}", join(&mut self.excluded.iter()))?;
        }
        Ok(())
    }
}

impl FromStr for PriorityOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PriorityOrder::parse(s)
    }
}

/// Settings shared by every record harmonized in one run.
#[derive(Debug, Clone)]
pub struct Harmonizer {
    pub table: AuthorityTable,
    pub priority: PriorityOrder,
    pub context: BatchContext,
    pub depth_limit: usize,
}

impl Harmonizer {
    pub fn new(table: AuthorityTable, priority: PriorityOrder, context: BatchContext) -> Self {
        Harmonizer {
            table,
            priority,
            context,
            depth_limit: DEFAULT_DEPTH_LIMIT,
        }
    }

    pub fn with_depth_limit(mut self, depth_limit: usize) -> Self {
        self.depth_limit = depth_limit;
        self
    }

    /// Runs the full pipeline for one institutional record.
    pub fn harmonize_cluster(
        &self,
        record: &ActorRecord,
        provider: &dyn LinkProvider,
    ) -> Result<Cluster> {
        self.harmonize_links(
            &record.uri,
            &record.institution,
            &record.asserted_links,
            provider,
        )
    }

    /// Pipeline entry for a seed and the links its institution asserts.
    pub fn harmonize_links(
        &self,
        seed: &EntityUri,
        institution: &AuthorityId,
        asserted: &[AssertedLink],
        provider: &dyn LinkProvider,
    ) -> Result<Cluster> {
        let source = if institution.is_local() {
            institution.clone()
        } else {
            AuthorityId::local(institution.as_str())?
        };
        let prov = self
            .context
            .provenance(source, crate::model::Method::Asserted);
        let seeds: Vec<ProvenancedLink> = asserted
            .iter()
            .filter(|l| matches!(l.kind, LinkKind::ExactMatch | LinkKind::SeeAlso))
            .map(|l| ProvenancedLink {
                from: seed.clone(),
                to: l.target.clone(),
                kind: l.kind,
                provenance: prov.clone(),
            })
            .collect();
        let linkset = expand_linkset(
            seed,
            &seeds,
            provider,
            self.depth_limit,
            &self.table,
            &self.context,
        )?;
        let conflicts = check_consistency(&linkset, &self.table);
        Ok(filter_conflicts(
            &linkset,
            &conflicts,
            &self.priority,
            &self.table,
        ))
    }

    /// Re-runs the pipeline on a cluster's own output.
    pub fn reharmonize(
        &self,
        cluster: &Cluster,
        institution: &AuthorityId,
        provider: &dyn LinkProvider,
    ) -> Result<Cluster> {
        self.harmonize_links(
            &cluster.seed,
            institution,
            &cluster.reseed_links(),
            provider,
        )
    }
}

/// Share of multi-authority clusters that showed at least one conflict
/// before filtering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyRate {
    pub conflicted: usize,
    pub eligible: usize,
    /// `None` when no cluster spans two authorities.
    pub rate: Option<f64>,
}

impl fmt::Display for InconsistencyRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rate {
            Some(r) => write!(f, "{r:.2} ({}/{})", self.conflicted, self.eligible),
            None => write!(f, "n/a (0 clusters with two or more authorities)"),
        }
    }
}

pub fn inconsistency_rate(clusters: &[Cluster]) -> InconsistencyRate {
    let eligible: Vec<&Cluster> = clusters
        .iter()
        .filter(|c| c.authorities_seen.len() >= 2)
        .collect();
    let conflicted = eligible.iter().filter(|c| c.is_conflicted()).count();
    let rate = (!eligible.is_empty()).then(|| conflicted as f64 / eligible.len() as f64);
    InconsistencyRate {
        conflicted,
        eligible: eligible.len(),
        rate,
    }
}
