//! Review desk: the state behind the HTTP API.
//!
//! The desk owns the candidate set, the decision log and the current
//! allocation. Derived state (entities, statuses, titles) is recomputed
//! from the base entities and the log after every accepted decision, so it
//! is always what a fresh replay would give.

use std::collections::BTreeMap;
use std::sync::Arc;

use artrecon_core::fixtures::{facet_fixture, review_fixture, FIXTURE_INSTITUTIONS};
use artrecon_core::harmonizer::{inconsistency_rate, Cluster, InconsistencyRate};
use artrecon_core::ingest::ActorRecord;
use artrecon_core::matcher::{MatchCandidate, Status};
use artrecon_core::merge::{
    build_facet_tree, merge_cluster_records, select_preferred_title, DisplayTitle, FacetTree,
    MergedRecord, ReconciledEntity, SourceRecord, SourcedTitle, TitleOrigin,
};
use artrecon_core::model::{AuthorityId, EntityUri, Timestamp};
use artrecon_core::review::{
    allocate_fairly, apply_decisions, reallocate, status_counts, Acknowledgment, Assignment,
    DecisionLog, DecisionRequest, ReviewContext, ReviewDecision, ReviewState,
};
use serde::{Deserialize, Serialize};

/// Institution tokens. A request acts for the institution whose token it
/// presents.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Registry {
    pub tokens: BTreeMap<AuthorityId, String>,
}

impl Registry {
    /// Tokens of the form `token-<institution>` for the fixture institutions.
    pub fn fixture() -> Self {
        let tokens = FIXTURE_INSTITUTIONS
            .iter()
            .map(|i| {
                (
                    AuthorityId::local(i).expect("fixture institution"),
                    format!("token-{i}"),
                )
            })
            .collect();
        Registry { tokens }
    }

    pub fn institutions(&self) -> Vec<AuthorityId> {
        self.tokens.keys().cloned().collect()
    }

    pub fn authenticate(&self, token: &str) -> Option<&AuthorityId> {
        self.tokens
            .iter()
            .find(|(_, t)| t.as_str() == token)
            .map(|(i, _)| i)
    }

    pub fn contains(&self, institution: &AuthorityId) -> bool {
        self.tokens.contains_key(institution)
    }
}

/// Everything the desk is built from.
#[derive(Debug, Clone)]
pub struct DeskData {
    pub candidates: Vec<MatchCandidate>,
    pub records: Vec<ActorRecord>,
    pub entities: Vec<ReconciledEntity>,
    pub facets: FacetTree,
    pub context: ReviewContext,
}

impl DeskData {
    /// The synthetic review corpus with the modeling fixture's facets.
    pub fn fixture(seed: u64) -> artrecon_core::Result<Self> {
        let review = review_fixture(seed)?;
        let (facet_entities, umbrellas) = facet_fixture()?;
        Ok(DeskData {
            candidates: review.candidates.into_values().collect(),
            records: review.records,
            entities: review.entities,
            facets: build_facet_tree(&facet_entities, &umbrellas),
            context: review.context,
        })
    }
}

pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(chrono::Utc::now)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeskError {
    Unauthorized(String),
    Forbidden(String),
    NotFound(String),
    Invalid(String),
    Internal(String),
}

impl DeskError {
    pub fn kind(&self) -> &'static str {
        match self {
            DeskError::Unauthorized(_) => "unauthorized",
            DeskError::Forbidden(_) => "forbidden",
            DeskError::NotFound(_) => "not_found",
            DeskError::Invalid(_) => "invalid",
            DeskError::Internal(_) => "internal",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            DeskError::Unauthorized(m)
            | DeskError::Forbidden(m)
            | DeskError::NotFound(m)
            | DeskError::Invalid(m)
            | DeskError::Internal(m) => m,
        }
    }
}

impl From<artrecon_core::Error> for DeskError {
    fn from(e: artrecon_core::Error) -> Self {
        use artrecon_core::Error;
        match e {
            Error::NotFound(m) => DeskError::NotFound(m),
            Error::Invalid(_) | Error::InvalidUri { .. } | Error::Json(_) => {
                DeskError::Invalid(e.to_string())
            }
            other => DeskError::Internal(other.to_string()),
        }
    }
}

/// One side of a candidate pair as shown to reviewers. Record sides carry
/// their titles and statements grouped by provenance graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SideView {
    pub uri: EntityUri,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub institution: Option<AuthorityId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<MergedRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchView {
    pub candidate: MatchCandidate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assigned_to: Option<AuthorityId>,
    pub left: SideView,
    pub right: SideView,
    pub decisions: Vec<ReviewDecision>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueueView {
    pub institution: AuthorityId,
    pub candidates: Vec<MatchView>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntityTitle {
    pub entity: EntityUri,
    pub title: DisplayTitle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stats {
    pub counts: BTreeMap<Status, usize>,
    pub decisions: usize,
    pub entities: usize,
    pub inconsistency_rate: InconsistencyRate,
    pub pending_by_institution: BTreeMap<AuthorityId, usize>,
    pub title_origins: BTreeMap<TitleOrigin, usize>,
    pub titles: Vec<EntityTitle>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

pub struct ReviewDesk {
    candidates: BTreeMap<String, MatchCandidate>,
    records: BTreeMap<EntityUri, ActorRecord>,
    entities: Vec<ReconciledEntity>,
    facets: FacetTree,
    context: ReviewContext,
    registry: Registry,
    log: DecisionLog,
    assignment: Assignment,
    state: ReviewState,
    clock: Clock,
}

impl std::fmt::Debug for ReviewDesk {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReviewDesk")
            .field("candidates", &self.candidates.len())
            .field("decisions", &self.log.decisions().len())
            .finish_non_exhaustive()
    }
}

impl ReviewDesk {
    /// Replays `log` and deals the candidates across the registered
    /// institutions.
    pub fn new(
        data: DeskData,
        registry: Registry,
        log: DecisionLog,
        clock: Clock,
    ) -> Result<Self, DeskError> {
        let candidates: BTreeMap<String, MatchCandidate> = data
            .candidates
            .into_iter()
            .map(|c| (c.id.clone(), c))
            .collect();
        let state = apply_decisions(&data.entities, &candidates, log.decisions(), &data.context)?;
        let mut desk = ReviewDesk {
            candidates,
            records: data
                .records
                .into_iter()
                .map(|r| (r.uri.clone(), r))
                .collect(),
            entities: data.entities,
            facets: data.facets,
            context: data.context,
            registry,
            log,
            assignment: Assignment::default(),
            state,
            clock,
        };
        // Dealt over every candidate, decided or not, so a restart with a
        // longer log reproduces the same claims.
        let all: Vec<MatchCandidate> = desk.candidates.values().cloned().collect();
        desk.assignment = allocate_fairly(&all, &desk.registry.institutions())?;
        Ok(desk)
    }

    fn status(&self, id: &str) -> Status {
        self.state.statuses.get(id).copied().unwrap_or_default()
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn state(&self) -> &ReviewState {
        &self.state
    }

    pub fn log(&self) -> &DecisionLog {
        &self.log
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn facets(&self) -> &FacetTree {
        &self.facets
    }

    /// Adds candidates from a new match run, skipping rejected pairs.
    /// Existing claims stay put; new candidates go to the least loaded
    /// institutions.
    pub fn add_candidates(&mut self, found: Vec<MatchCandidate>) -> Result<(), DeskError> {
        for c in found {
            if !self.state.negatives.contains(&c.left, &c.right) {
                self.candidates.entry(c.id.clone()).or_insert(c);
            }
        }
        let all: Vec<MatchCandidate> = self.candidates.values().cloned().collect();
        self.assignment = reallocate(&all, &self.registry.institutions(), &self.assignment)?;
        Ok(())
    }

    fn side(&self, uri: &EntityUri) -> Result<SideView, DeskError> {
        let Some(record) = self.records.get(uri) else {
            return Ok(SideView {
                uri: uri.clone(),
                institution: None,
                record: None,
            });
        };
        let entity = ReconciledEntity::from_cluster(Cluster::empty(uri.clone()));
        let merged = merge_cluster_records(
            &entity,
            &[SourceRecord::Actor(record.clone())],
            &self.context.context,
            None,
        )?;
        Ok(SideView {
            uri: uri.clone(),
            institution: Some(record.institution.clone()),
            record: Some(merged),
        })
    }

    pub fn match_view(&self, id: &str) -> Result<MatchView, DeskError> {
        let candidate = self
            .candidates
            .get(id)
            .ok_or_else(|| DeskError::NotFound(format!("no candidate {id}")))?;
        let mut candidate = candidate.clone();
        candidate.status = self.status(id);
        Ok(MatchView {
            assigned_to: self.assignment.institution_of(id).cloned(),
            left: self.side(&candidate.left)?,
            right: self.side(&candidate.right)?,
            decisions: self
                .log
                .decisions()
                .iter()
                .filter(|d| d.request.candidate_id == id)
                .cloned()
                .collect(),
            candidate,
        })
    }

    /// Pending candidates assigned to `institution`, in assignment order.
    pub fn queue(&self, institution: &AuthorityId) -> Result<QueueView, DeskError> {
        if !self.registry.contains(institution) {
            return Err(DeskError::NotFound(format!(
                "institution {institution} is not registered"
            )));
        }
        let ids = self
            .assignment
            .by_institution
            .get(institution)
            .cloned()
            .unwrap_or_default();
        let candidates = ids
            .iter()
            .filter(|id| self.status(id) == Status::Pending)
            .map(|id| self.match_view(id))
            .collect::<Result<_, _>>()?;
        Ok(QueueView {
            institution: institution.clone(),
            candidates,
        })
    }

    /// Validates, logs durably, then acknowledges. A repeated idempotency
    /// key returns the first acknowledgment and changes nothing.
    pub fn submit(
        &mut self,
        request: DecisionRequest,
        idempotency_key: Option<String>,
    ) -> Result<Acknowledgment, DeskError> {
        if let Some(ack) = idempotency_key.as_deref().and_then(|k| self.log.replay(k)) {
            return Ok(ack);
        }
        if !self.candidates.contains_key(&request.candidate_id) {
            return Err(DeskError::NotFound(format!(
                "no candidate {}",
                request.candidate_id
            )));
        }
        if !self.registry.contains(&request.institution) {
            return Err(DeskError::Forbidden(format!(
                "institution {} is not registered",
                request.institution
            )));
        }
        request.validate()?;
        let ack = self.log.append(request, idempotency_key, (self.clock)())?;
        self.state = apply_decisions(
            &self.entities,
            &self.candidates,
            self.log.decisions(),
            &self.context,
        )?;
        Ok(ack)
    }

    fn display_title(&self, entity: &EntityUri) -> Option<Result<DisplayTitle, String>> {
        let choice = self.state.titles.get(entity)?;
        let members = self
            .state
            .entities
            .iter()
            .find(|e| &e.id == entity)
            .map(|e| e.members.clone())
            .unwrap_or_default();
        let titles: Vec<SourcedTitle> = members
            .iter()
            .filter_map(|m| self.records.get(m))
            .flat_map(|r| {
                SourceRecord::Actor(r.clone())
                    .titles()
                    .into_iter()
                    .map(|title| SourcedTitle {
                        title,
                        institution: r.institution.clone(),
                        record: r.uri.clone(),
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        Some(
            select_preferred_title(&titles, Some(choice))
                .map_err(|e| format!("title for {entity}: {e}")),
        )
    }

    pub fn stats(&self) -> Stats {
        let clusters: Vec<Cluster> = self
            .state
            .entities
            .iter()
            .map(|e| e.cluster.clone())
            .collect();
        let mut pending_by_institution = BTreeMap::new();
        for (inst, ids) in &self.assignment.by_institution {
            let n = ids
                .iter()
                .filter(|id| self.status(id) == Status::Pending)
                .count();
            pending_by_institution.insert(inst.clone(), n);
        }
        let mut titles = Vec::new();
        let mut title_origins = BTreeMap::new();
        let mut diagnostics = self.state.diagnostics.clone();
        for entity in self.state.titles.keys() {
            match self.display_title(entity) {
                Some(Ok(title)) => {
                    *title_origins.entry(title.origin).or_insert(0) += 1;
                    titles.push(EntityTitle {
                        entity: entity.clone(),
                        title,
                    });
                }
                Some(Err(e)) => diagnostics.push(e),
                None => {}
            }
        }
        Stats {
            counts: status_counts(&self.candidates, &self.state),
            decisions: self.log.decisions().len(),
            entities: self.state.entities.len(),
            inconsistency_rate: inconsistency_rate(&clusters),
            pending_by_institution,
            title_origins,
            titles,
            diagnostics,
        }
    }
}
