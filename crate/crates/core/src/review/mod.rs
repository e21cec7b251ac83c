//! Curator review: fair allocation of candidates, the append-only decision
//! log, and replay of decisions into reconciled entities.
//!
//! State is a pure function of the base entities and the log. For each
//! candidate only its latest decision counts, and replaying is idempotent.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonizer::{
    check_consistency, filter_conflicts, Linkset, PriorityOrder, ProvenancedLink,
};
use crate::matcher::{MatchCandidate, NegativeConstraints, Status};
use crate::merge::{ReconciledEntity, TitleChoice};
use crate::model::{
    AuthorityId, AuthorityTable, BatchContext, EntityUri, LinkKind, Predicate, Provenance,
    Statement, Timestamp,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociativeKind {
    CopyOf,
    PreparatoryFor,
    PartOf,
    Related,
}

impl AssociativeKind {
    pub fn predicate(self) -> Predicate {
        match self {
            AssociativeKind::CopyOf => Predicate::vocab("copyOf"),
            AssociativeKind::PreparatoryFor => Predicate::vocab("preparatoryFor"),
            AssociativeKind::PartOf => Predicate::Link(LinkKind::PartOf),
            AssociativeKind::Related => Predicate::vocab("related"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    AcceptEquivalent,
    AcceptAssociative { kind: AssociativeKind },
    Reject,
    Defer,
}

impl Verdict {
    pub fn status(self) -> Status {
        match self {
            Verdict::AcceptEquivalent | Verdict::AcceptAssociative { .. } => Status::Accepted,
            Verdict::Reject => Status::Rejected,
            Verdict::Defer => Status::Deferred,
        }
    }
}

/// What a reviewer submits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub candidate_id: String,
    pub reviewer: String,
    pub institution: AuthorityId,
    #[serde(flatten)]
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_title: Option<TitleChoice>,
}

impl DecisionRequest {
    pub fn validate(&self) -> Result<()> {
        if self.reviewer.trim().is_empty() {
            return Err(Error::invalid("reviewer must be non-empty"));
        }
        if let Some(t) = &self.preferred_title {
            t.validate()?;
            if !matches!(self.verdict, Verdict::AcceptEquivalent) {
                return Err(Error::invalid(
                    "a preferred title goes with accept_equivalent only",
                ));
            }
        }
        Ok(())
    }
}

/// A logged decision. For one candidate the highest sequence number wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub sequence: u64,
    pub timestamp: Timestamp,
    #[serde(flatten)]
    pub request: DecisionRequest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acknowledgment {
    pub sequence: u64,
    pub candidate_id: String,
    pub status: Status,
    /// True when an earlier submission with the same idempotency key is
    /// being acknowledged again.
    pub replayed: bool,
}

impl Acknowledgment {
    fn of(d: &ReviewDecision, replayed: bool) -> Self {
        Acknowledgment {
            sequence: d.sequence,
            candidate_id: d.request.candidate_id.clone(),
            status: d.request.verdict.status(),
            replayed,
        }
    }
}

/// Append-only JSON Lines decision log. Each append is synced to disk
/// before it is acknowledged.
#[derive(Debug)]
pub struct DecisionLog {
    file: Option<(PathBuf, File)>,
    decisions: Vec<ReviewDecision>,
    keys: BTreeMap<String, usize>,
}

fn check_sequence(decisions: &[ReviewDecision]) -> Result<()> {
    for w in decisions.windows(2) {
        if w[1].sequence <= w[0].sequence {
            return Err(Error::invalid(format!(
                "decision sequence not increasing: {} after {}",
                w[1].sequence, w[0].sequence
            )));
        }
    }
    Ok(())
}

impl DecisionLog {
    /// A log kept in memory only.
    pub fn in_memory() -> Self {
        DecisionLog {
            file: None,
            decisions: Vec::new(),
            keys: BTreeMap::new(),
        }
    }

    /// Opens or creates the log at `path`, reading back every decision.
    pub fn open(path: &Path) -> Result<Self> {
        let mut decisions = Vec::new();
        if path.exists() {
            for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                decisions.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
                    line: n + 1,
                    message: e.to_string(),
                })?);
            }
        }
        let mut log = DecisionLog::from_decisions(decisions)?;
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        log.file = Some((path.to_path_buf(), file));
        Ok(log)
    }

    pub fn from_decisions(decisions: Vec<ReviewDecision>) -> Result<Self> {
        check_sequence(&decisions)?;
        let keys = decisions
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.idempotency_key.clone().map(|k| (k, i)))
            .collect();
        Ok(DecisionLog {
            file: None,
            decisions,
            keys,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.file.as_ref().map(|(p, _)| p.as_path())
    }

    pub fn decisions(&self) -> &[ReviewDecision] {
        &self.decisions
    }

    pub fn next_sequence(&self) -> u64 {
        self.decisions.last().map_or(1, |d| d.sequence + 1)
    }

    /// Acknowledgment previously given for `key`, if any.
    pub fn replay(&self, key: &str) -> Option<Acknowledgment> {
        self.keys
            .get(key)
            .map(|&i| Acknowledgment::of(&self.decisions[i], true))
    }

    /// Appends a decision; a known idempotency key returns the earlier
    /// acknowledgment without writing anything.
    pub fn append(
        &mut self,
        request: DecisionRequest,
        idempotency_key: Option<String>,
        timestamp: Timestamp,
    ) -> Result<Acknowledgment> {
        if let Some(ack) = idempotency_key.as_deref().and_then(|k| self.replay(k)) {
            return Ok(ack);
        }
        request.validate()?;
        let decision = ReviewDecision {
            sequence: self.next_sequence(),
            timestamp,
            request,
            idempotency_key,
        };
        if let Some((_, file)) = &mut self.file {
            let mut line = serde_json::to_string(&decision)?;
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.sync_data()?;
        }
        if let Some(k) = &decision.idempotency_key {
            self.keys.insert(k.clone(), self.decisions.len());
        }
        let ack = Acknowledgment::of(&decision, false);
        self.decisions.push(decision);
        Ok(ack)
    }

    pub fn to_jsonl(&self) -> String {
        self.decisions
            .iter()
            .map(|d| serde_json::to_string(d).expect("decisions serialize") + "\n")
            .collect()
    }
}

/// Candidate ids per institution.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    pub by_institution: BTreeMap<AuthorityId, Vec<String>>,
}

impl Assignment {
    pub fn counts(&self) -> BTreeMap<&AuthorityId, usize> {
        self.by_institution
            .iter()
            .map(|(k, v)| (k, v.len()))
            .collect()
    }

    pub fn institution_of(&self, candidate: &str) -> Option<&AuthorityId> {
        self.by_institution
            .iter()
            .find(|(_, ids)| ids.iter().any(|c| c == candidate))
            .map(|(i, _)| i)
    }
}

fn institution_list(institutions: &[AuthorityId]) -> Result<Vec<AuthorityId>> {
    let list: Vec<AuthorityId> = institutions
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if list.is_empty() {
        return Err(Error::invalid("allocation needs at least one institution"));
    }
    Ok(list)
}

/// Deals candidates, sorted by id, round-robin over the institutions, so
/// counts differ by at most one whatever the candidates' origin.
pub fn allocate_fairly(
    pending: &[MatchCandidate],
    institutions: &[AuthorityId],
) -> Result<Assignment> {
    reallocate(pending, institutions, &Assignment::default())
}

/// Keeps every existing claim on a still-pending candidate and deals the
/// unclaimed ones to the least loaded institutions first.
pub fn reallocate(
    pending: &[MatchCandidate],
    institutions: &[AuthorityId],
    claims: &Assignment,
) -> Result<Assignment> {
    let list = institution_list(institutions)?;
    let ids: BTreeSet<&str> = pending.iter().map(|c| c.id.as_str()).collect();
    let mut by_institution: BTreeMap<AuthorityId, Vec<String>> =
        list.iter().map(|i| (i.clone(), Vec::new())).collect();
    let mut claimed: BTreeSet<&str> = BTreeSet::new();
    for (inst, cands) in &claims.by_institution {
        let Some(slot) = by_institution.get_mut(inst) else {
            continue;
        };
        for c in cands {
            if ids.contains(c.as_str()) && claimed.insert(c.as_str()) {
                slot.push(c.clone());
            }
        }
    }
    for id in ids.iter().filter(|id| !claimed.contains(*id)) {
        let least = list
            .iter()
            .min_by_key(|i| by_institution[*i].len())
            .expect("non-empty institution list");
        by_institution
            .get_mut(least)
            .expect("known institution")
            .push(id.to_string());
    }
    for v in by_institution.values_mut() {
        v.sort();
    }
    Ok(Assignment { by_institution })
}

/// Shared settings for replaying decisions.
#[derive(Debug, Clone)]
pub struct ReviewContext {
    pub table: AuthorityTable,
    pub priority: PriorityOrder,
    pub context: BatchContext,
}

/// Entities and statements after replaying a decision log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReviewState {
    /// Sorted by id.
    pub entities: Vec<ReconciledEntity>,
    /// Reviewed equivalence and associative statements.
    pub statements: Vec<Statement>,
    pub negatives: NegativeConstraints,
    pub statuses: BTreeMap<String, Status>,
    /// Title decisions by entity id.
    pub titles: BTreeMap<EntityUri, TitleChoice>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl ReviewState {
    /// Canonical JSON of the whole state; equal states give equal bytes.
    pub fn export(&self) -> String {
        serde_json::to_string_pretty(self).expect("review state serializes")
    }

    pub fn entity_of(&self, uri: &EntityUri) -> Option<&ReconciledEntity> {
        self.entities.iter().find(|e| e.members.contains(uri))
    }
}

/// Rewrites links so that every member of `members` becomes `id`, dropping
/// links that end up pointing at themselves.
fn fold_members(
    linkset: &Linkset,
    members: &BTreeSet<EntityUri>,
    id: &EntityUri,
) -> BTreeSet<ProvenancedLink> {
    let map = |u: &EntityUri| {
        if members.contains(u) {
            id.clone()
        } else {
            u.clone()
        }
    };
    linkset
        .links
        .iter()
        .map(|l| ProvenancedLink {
            from: map(&l.from),
            to: map(&l.to),
            ..l.clone()
        })
        .filter(|l| l.from != l.to)
        .collect()
}

fn refilter(
    linkset: Linkset,
    members: BTreeSet<EntityUri>,
    ctx: &ReviewContext,
) -> ReconciledEntity {
    let conflicts = check_consistency(&linkset, &ctx.table);
    let cluster = filter_conflicts(&linkset, &conflicts, &ctx.priority, &ctx.table);
    ReconciledEntity {
        id: linkset.seed.clone(),
        members,
        cluster,
    }
}

/// Joins two entities. Their links are pooled with member records folded
/// into one seed and filtered again, so a conflict the merge creates is
/// resolved by authority priority like any other.
pub fn merge_entities(
    a: &ReconciledEntity,
    b: &ReconciledEntity,
    ctx: &ReviewContext,
) -> ReconciledEntity {
    let id = a.id.clone().min(b.id.clone());
    let members: BTreeSet<EntityUri> = a.members.union(&b.members).cloned().collect();
    let (la, lb) = (a.cluster.linkset(), b.cluster.linkset());
    let mut linkset = Linkset::new(id.clone());
    linkset.links = fold_members(&la, &members, &id);
    linkset.links.extend(fold_members(&lb, &members, &id));
    linkset.round_trips = la.round_trips.union(&lb.round_trips).cloned().collect();
    linkset.unverifiable = la.unverifiable.union(&lb.unverifiable).cloned().collect();
    linkset.replacements = la.replacements.union(&lb.replacements).cloned().collect();
    linkset.truncated = la.truncated || lb.truncated;
    refilter(linkset, members, ctx)
}

/// Adds a reviewed identity link from the entity to an outside URI.
fn endorse(
    entity: &ReconciledEntity,
    target: &EntityUri,
    provenance: &Provenance,
    ctx: &ReviewContext,
) -> ReconciledEntity {
    let mut linkset = entity.cluster.linkset();
    linkset.links.insert(ProvenancedLink {
        from: entity.id.clone(),
        to: target.clone(),
        kind: LinkKind::ExactMatch,
        provenance: provenance.clone(),
    });
    refilter(linkset, entity.members.clone(), ctx)
}

/// Replays `log` over `entities`. Only each candidate's latest decision is
/// used; they are applied in sequence order. Decisions naming unknown
/// candidates or records are skipped with a diagnostic.
pub fn apply_decisions(
    entities: &[ReconciledEntity],
    candidates: &BTreeMap<String, MatchCandidate>,
    log: &[ReviewDecision],
    ctx: &ReviewContext,
) -> Result<ReviewState> {
    check_sequence(log)?;
    let mut latest: BTreeMap<&str, &ReviewDecision> = BTreeMap::new();
    for d in log {
        latest.insert(d.request.candidate_id.as_str(), d);
    }
    let mut effective: Vec<&ReviewDecision> = latest.into_values().collect();
    effective.sort_by_key(|d| d.sequence);

    let mut state = ReviewState {
        entities: entities.to_vec(),
        ..Default::default()
    };
    let mut statements: BTreeSet<Statement> = BTreeSet::new();
    for d in effective {
        let req = &d.request;
        let Some(candidate) = candidates.get(&req.candidate_id) else {
            state.diagnostics.push(format!(
                "decision {} names unknown candidate {}",
                d.sequence, req.candidate_id
            ));
            continue;
        };
        state
            .statuses
            .insert(req.candidate_id.clone(), req.verdict.status());
        let (left, right) = (&candidate.left, &candidate.right);
        let provenance = Provenance::reviewed(req.institution.clone(), d.timestamp, &req.reviewer)?;
        let statement = |predicate: Predicate| {
            ctx.context
                .statement(left.clone(), predicate, right.clone(), &provenance)
        };
        match req.verdict {
            Verdict::AcceptEquivalent => {
                let find = |u: &EntityUri| state.entities.iter().position(|e| e.covers(u));
                let merged = match (find(left), find(right)) {
                    (Some(i), Some(j)) if i == j => Some(i),
                    (Some(i), Some(j)) => {
                        let m = merge_entities(&state.entities[i], &state.entities[j], ctx);
                        state.entities.remove(i.max(j));
                        state.entities[i.min(j)] = m;
                        Some(i.min(j))
                    }
                    (Some(i), None) | (None, Some(i)) => {
                        let outside = if state.entities[i].covers(left) {
                            right
                        } else {
                            left
                        };
                        state.entities[i] = endorse(&state.entities[i], outside, &provenance, ctx);
                        Some(i)
                    }
                    (None, None) => {
                        state.diagnostics.push(format!(
                            "decision {}: neither {left} nor {right} belongs to a known entity",
                            d.sequence
                        ));
                        None
                    }
                };
                if let Some(i) = merged {
                    statements.insert(statement(Predicate::Link(LinkKind::ExactMatch)));
                    if let Some(title) = &req.preferred_title {
                        state
                            .titles
                            .insert(state.entities[i].id.clone(), title.clone());
                    }
                }
            }
            Verdict::AcceptAssociative { kind } => {
                statements.insert(statement(kind.predicate()));
            }
            Verdict::Reject => state.negatives.insert(left, right),
            Verdict::Defer => {}
        }
    }
    // Titles follow entities that were merged after the title was chosen.
    let titles = std::mem::take(&mut state.titles);
    for (id, choice) in titles {
        let owner = state.entity_of(&id).map_or(id, |e| e.id.clone());
        state.titles.insert(owner, choice);
    }
    state.entities.sort_by(|a, b| a.id.cmp(&b.id));
    state.statements = statements.into_iter().collect();
    Ok(state)
}

/// Counts of candidates by status, pending included.
pub fn status_counts(
    candidates: &BTreeMap<String, MatchCandidate>,
    state: &ReviewState,
) -> BTreeMap<Status, usize> {
    let mut counts = BTreeMap::new();
    for id in candidates.keys() {
        let status = state.statuses.get(id).copied().unwrap_or_default();
        *counts.entry(status).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests;
