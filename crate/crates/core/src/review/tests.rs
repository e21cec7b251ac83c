use chrono::TimeZone;
use proptest::prelude::*;

use super::*;
use crate::fixtures::{self, actor, modeling_context, uri, GND, LOC, WIKIDATA};
use crate::harmonizer::Harmonizer;
use crate::matcher::{candidate_id, Confidence, Signals, Verdict as SignalVerdict};
use crate::provider::MapProvider;

fn inst(name: &str) -> AuthorityId {
    AuthorityId::local(name).unwrap()
}

fn institutions(k: usize) -> Vec<AuthorityId> {
    (0..k).map(|i| inst(&format!("inst{i:02}"))).collect()
}

fn candidate(left: &EntityUri, right: &EntityUri) -> MatchCandidate {
    MatchCandidate {
        id: candidate_id(left, right),
        left: left.clone(),
        right: right.clone(),
        score: 0.9,
        signals: Signals {
            name_score: 0.9,
            date_verdict: SignalVerdict::Compatible,
            class_verdict: SignalVerdict::Compatible,
        },
        confidence: Confidence::Review,
        status: Status::Pending,
    }
}

fn pending(n: usize) -> Vec<MatchCandidate> {
    (0..n)
        .map(|i| {
            candidate(
                &uri(&format!("http://a.org/{i}")),
                &uri(&format!("http://b.org/{i}")),
            )
        })
        .collect()
}

fn ctx() -> ReviewContext {
    ReviewContext {
        table: AuthorityTable::default_table(),
        priority: PriorityOrder::default(),
        context: modeling_context(),
    }
}

fn entity(record: &crate::ingest::ActorRecord) -> ReconciledEntity {
    let c = ctx();
    let h = Harmonizer::new(c.table, c.priority, c.context);
    ReconciledEntity::from_cluster(h.harmonize_cluster(record, &MapProvider::new()).unwrap())
}

fn request(c: &MatchCandidate, verdict: Verdict) -> DecisionRequest {
    DecisionRequest {
        candidate_id: c.id.clone(),
        reviewer: "curator".into(),
        institution: inst("zeri"),
        verdict,
        preferred_title: None,
    }
}

fn log_of(requests: Vec<DecisionRequest>) -> Vec<ReviewDecision> {
    let mut log = DecisionLog::in_memory();
    let t0 = chrono::Utc.with_ymd_and_hms(2025, 4, 1, 9, 0, 0).unwrap();
    for (i, r) in requests.into_iter().enumerate() {
        log.append(r, None, t0 + chrono::Duration::minutes(i as i64))
            .unwrap();
    }
    log.decisions().to_vec()
}

#[test]
fn allocation_examples() {
    let a = allocate_fairly(&pending(10), &institutions(3)).unwrap();
    let mut counts: Vec<usize> = a.counts().values().copied().collect();
    counts.sort();
    assert_eq!(counts, vec![3, 3, 4]);

    let a = allocate_fairly(&pending(7), &institutions(7)).unwrap();
    assert!(a.counts().values().all(|&n| n == 1));

    let a = allocate_fairly(&[], &institutions(4)).unwrap();
    assert!(a.counts().values().all(|&n| n == 0));

    assert!(allocate_fairly(&pending(3), &[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn allocation_is_fair_and_complete(n in 0usize..=1000, k in 1usize..=13) {
        let cands = pending(n);
        let a = allocate_fairly(&cands, &institutions(k)).unwrap();
        let counts: Vec<usize> = a.counts().values().copied().collect();
        prop_assert_eq!(counts.len(), k);
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
        let assigned: BTreeSet<&String> = a.by_institution.values().flatten().collect();
        prop_assert_eq!(assigned.len(), n);
        prop_assert_eq!(counts.iter().sum::<usize>(), n);
    }
}

#[test]
fn reallocation_keeps_claims() {
    let cands = pending(12);
    let insts = institutions(3);
    let mut claims = Assignment::default();
    claims.by_institution.insert(
        insts[0].clone(),
        cands[..5].iter().map(|c| c.id.clone()).collect(),
    );
    claims
        .by_institution
        .insert(insts[1].clone(), vec!["c-gone".into()]);
    let a = reallocate(&cands, &insts, &claims).unwrap();
    for c in &cands[..5] {
        assert_eq!(a.institution_of(&c.id), Some(&insts[0]));
    }
    assert_eq!(a.institution_of("c-gone"), None);
    let counts = a.counts();
    assert_eq!(counts[&insts[0]], 5);
    assert_eq!(counts[&insts[1]] + counts[&insts[2]], 7);
    assert!(counts[&insts[1]].abs_diff(counts[&insts[2]]) <= 1);
}

#[test]
fn verdict_wire_format() {
    let json = r#"{"candidate_id":"c-1","reviewer":"r","institution":"local:zeri","verdict":"accept_associative","kind":"copy_of"}"#;
    let r: DecisionRequest = serde_json::from_str(json).unwrap();
    assert_eq!(
        r.verdict,
        Verdict::AcceptAssociative {
            kind: AssociativeKind::CopyOf
        }
    );
    assert_eq!(
        serde_json::from_str::<DecisionRequest>(&serde_json::to_string(&r).unwrap()).unwrap(),
        r
    );
    let missing = r#"{"candidate_id":"c-1","reviewer":"r","institution":"local:zeri","verdict":"accept_associative"}"#;
    assert!(serde_json::from_str::<DecisionRequest>(missing).is_err());
    let unknown =
        r#"{"candidate_id":"c-1","reviewer":"r","institution":"local:zeri","verdict":"maybe"}"#;
    assert!(serde_json::from_str::<DecisionRequest>(unknown).is_err());
}

#[test]
fn titles_only_with_equivalence() {
    let c = &pending(1)[0];
    let mut r = request(c, Verdict::Reject);
    r.preferred_title = Some(TitleChoice::Create("X".into()));
    assert!(r.validate().is_err());
    r.verdict = Verdict::AcceptEquivalent;
    assert!(r.validate().is_ok());
}

#[test]
fn log_persists_and_replays_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("decisions.jsonl");
    let cands = pending(3);
    let t = modeling_context().retrieved_at;
    {
        let mut log = DecisionLog::open(&path).unwrap();
        let a = log
            .append(request(&cands[0], Verdict::Reject), Some("k1".into()), t)
            .unwrap();
        assert_eq!((a.sequence, a.replayed), (1, false));
        let b = log
            .append(
                request(&cands[0], Verdict::AcceptEquivalent),
                Some("k1".into()),
                t,
            )
            .unwrap();
        assert_eq!(
            (b.sequence, b.status, b.replayed),
            (1, Status::Rejected, true)
        );
        log.append(request(&cands[1], Verdict::Defer), None, t)
            .unwrap();
    }
    let mut log = DecisionLog::open(&path).unwrap();
    assert_eq!(log.decisions().len(), 2);
    assert_eq!(log.next_sequence(), 3);
    assert!(log.replay("k1").unwrap().replayed);
    log.append(request(&cands[2], Verdict::Reject), None, t)
        .unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, log.to_jsonl());
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn log_rejects_out_of_order_sequences() {
    let mut log = log_of(vec![
        request(&pending(1)[0], Verdict::Defer),
        request(&pending(1)[0], Verdict::Reject),
    ]);
    log.swap(0, 1);
    assert!(DecisionLog::from_decisions(log.clone()).is_err());
    assert!(apply_decisions(&[], &BTreeMap::new(), &log, &ctx()).is_err());
}

struct Pair {
    left: crate::ingest::ActorRecord,
    right: crate::ingest::ActorRecord,
    candidate: MatchCandidate,
    candidates: BTreeMap<String, MatchCandidate>,
    entities: Vec<ReconciledEntity>,
}

fn pair() -> Pair {
    let left = actor(
        "zeri",
        "a1",
        "Vasari, Giorgio",
        vec![uri(&format!("{LOC}n50001111"))],
    );
    let right = actor(
        "rkd",
        "b1",
        "Vasari, Giorgio",
        vec![uri(&format!("{WIKIDATA}Q128027"))],
    );
    let candidate = candidate(&left.uri, &right.uri);
    let candidates = BTreeMap::from([(candidate.id.clone(), candidate.clone())]);
    let mut entities = vec![entity(&left), entity(&right)];
    entities.sort_by(|a, b| a.id.cmp(&b.id));
    Pair {
        left,
        right,
        candidate,
        candidates,
        entities,
    }
}

#[test]
fn empty_log_changes_nothing() {
    let p = pair();
    let s = apply_decisions(&p.entities, &p.candidates, &[], &ctx()).unwrap();
    assert_eq!(s.entities, p.entities);
    assert!(s.statements.is_empty() && s.statuses.is_empty());
    assert_eq!(status_counts(&p.candidates, &s)[&Status::Pending], 1);
}

#[test]
fn equivalence_unions_authorities() {
    let p = pair();
    let log = log_of(vec![request(&p.candidate, Verdict::AcceptEquivalent)]);
    let s = apply_decisions(&p.entities, &p.candidates, &log, &ctx()).unwrap();
    assert_eq!(s.entities.len(), 1);
    let merged = &s.entities[0];
    // Oracle: with no conflicts, the merged resolution is the union of both.
    let mut expected = p.entities[0].cluster.resolved.clone();
    expected.extend(p.entities[1].cluster.resolved.clone());
    assert_eq!(merged.cluster.resolved, expected);
    assert_eq!(
        merged.members,
        BTreeSet::from([p.left.uri.clone(), p.right.uri.clone()])
    );
    assert_eq!(merged.id, p.left.uri.clone().min(p.right.uri.clone()));
    assert_eq!(s.statements.len(), 1);
    assert_eq!(
        s.statements[0].provenance.method,
        crate::model::Method::Reviewed
    );
    assert_eq!(s.statuses[&p.candidate.id], Status::Accepted);
}

#[test]
fn latest_decision_wins() {
    let p = pair();
    let c = &p.candidate;
    let s = apply_decisions(
        &p.entities,
        &p.candidates,
        &log_of(vec![
            request(c, Verdict::Reject),
            request(c, Verdict::AcceptEquivalent),
        ]),
        &ctx(),
    )
    .unwrap();
    assert_eq!(s.entities.len(), 1);
    assert!(!s.negatives.contains(&c.left, &c.right));

    let s = apply_decisions(
        &p.entities,
        &p.candidates,
        &log_of(vec![
            request(c, Verdict::AcceptEquivalent),
            request(c, Verdict::Reject),
        ]),
        &ctx(),
    )
    .unwrap();
    assert_eq!(s.entities, p.entities);
    assert!(s.negatives.contains(&c.right, &c.left));
    assert_eq!(s.statuses[&c.id], Status::Rejected);
}

#[test]
fn associative_keeps_entities_apart() {
    let p = pair();
    let verdict = Verdict::AcceptAssociative {
        kind: AssociativeKind::CopyOf,
    };
    let s = apply_decisions(
        &p.entities,
        &p.candidates,
        &log_of(vec![request(&p.candidate, verdict)]),
        &ctx(),
    )
    .unwrap();
    assert_eq!(s.entities, p.entities);
    assert_eq!(s.statements.len(), 1);
    assert_eq!(
        s.statements[0].predicate,
        AssociativeKind::CopyOf.predicate()
    );
}

#[test]
fn unknown_candidates_are_reported() {
    let p = pair();
    let ghost = candidate(&uri("http://x.org/1"), &uri("http://x.org/2"));
    let s = apply_decisions(
        &p.entities,
        &p.candidates,
        &log_of(vec![request(&ghost, Verdict::AcceptEquivalent)]),
        &ctx(),
    )
    .unwrap();
    assert_eq!(s.entities, p.entities);
    assert_eq!(s.diagnostics.len(), 1);
    assert!(s.statuses.is_empty());
}

#[test]
fn merge_conflict_is_filtered() {
    let left = actor(
        "zeri",
        "a1",
        "Vasari",
        vec![uri(&format!("{LOC}n1")), uri(&format!("{GND}1"))],
    );
    let right = actor("rkd", "b1", "Vasari", vec![uri(&format!("{LOC}n2"))]);
    let (el, er) = (entity(&left), entity(&right));
    let merged = merge_entities(&el, &er, &ctx());
    let loc = AuthorityId::new("loc").unwrap();
    // Two institutions each back a different LoC URI: neither outranks the
    // other, so LoC stays unresolved while GND survives.
    assert!(!merged.cluster.resolved.contains_key(&loc));
    assert!(merged
        .cluster
        .unresolved_conflicts
        .iter()
        .any(|c| c.authority == loc));
    assert_eq!(
        merged
            .cluster
            .resolved
            .get(&AuthorityId::new("gnd").unwrap()),
        Some(&uri(&format!("{GND}1")))
    );
}

#[test]
fn endorsement_links_outside_uri() {
    let left = actor("zeri", "a1", "Vasari", vec![uri(&format!("{LOC}n1"))]);
    let outside = uri(&format!("{WIKIDATA}Q128027"));
    let c = candidate(&left.uri, &outside);
    let cands = BTreeMap::from([(c.id.clone(), c.clone())]);
    let s = apply_decisions(
        &[entity(&left)],
        &cands,
        &log_of(vec![request(&c, Verdict::AcceptEquivalent)]),
        &ctx(),
    )
    .unwrap();
    assert_eq!(
        s.entities[0]
            .cluster
            .resolved
            .get(&AuthorityId::new("wikidata").unwrap()),
        Some(&outside)
    );
}

#[test]
fn replay_is_idempotent() {
    let f = fixtures::review_fixture(7).unwrap();
    let once = apply_decisions(&f.entities, &f.candidates, &f.log, &f.context).unwrap();
    let ids: Vec<EntityUri> = once.entities.iter().map(|e| e.id.clone()).collect();
    let twice = apply_decisions(&once.entities, &f.candidates, &f.log, &f.context).unwrap();
    assert_eq!(
        twice
            .entities
            .iter()
            .map(|e| e.id.clone())
            .collect::<Vec<_>>(),
        ids
    );
    for (a, b) in once.entities.iter().zip(&twice.entities) {
        assert_eq!(a.members, b.members);
        assert_eq!(a.cluster.outcome(), b.cluster.outcome());
    }
    assert_eq!(once.statuses, twice.statuses);
    assert_eq!(
        once.export(),
        apply_decisions(&f.entities, &f.candidates, &f.log, &f.context)
            .unwrap()
            .export()
    );
}

#[test]
fn review_fixture_shape() {
    let f = fixtures::review_fixture(7).unwrap();
    assert_eq!(f.log.len(), fixtures::REVIEW_LOG_SIZE);
    let s = apply_decisions(&f.entities, &f.candidates, &f.log, &f.context).unwrap();
    assert!(s.diagnostics.is_empty(), "{:?}", s.diagnostics);
    let counts = status_counts(&f.candidates, &s);
    assert!(counts.get(&Status::Accepted).copied().unwrap_or(0) > 0);
    assert!(counts.get(&Status::Rejected).copied().unwrap_or(0) > 0);
    // Some candidate was rejected and later accepted.
    let mut seen: BTreeMap<&str, Vec<Verdict>> = BTreeMap::new();
    for d in &f.log {
        seen.entry(d.request.candidate_id.as_str())
            .or_default()
            .push(d.request.verdict);
    }
    assert!(seen.values().any(|v| v.len() > 1
        && v[0] == Verdict::Reject
        && *v.last().unwrap() == Verdict::AcceptEquivalent));

    // A fresh run honouring the rejections never proposes them again.
    let rerun = f.match_run(&s.negatives);
    for c in &rerun {
        assert!(
            !s.negatives.contains(&c.left, &c.right),
            "{} proposed again",
            c.id
        );
    }
    assert!(rerun.len() < f.candidates.len());
}
