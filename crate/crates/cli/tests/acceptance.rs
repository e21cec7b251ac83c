//! Acceptance suite. Every criterion prints one line to stderr (outside the
//! test harness capture) with its outcome, measured value, elapsed time and
//! time budget, then fails the test if it did not pass.

#[allow(dead_code)]
#[path = "../../core/tests/support/harmonizer_cases.rs"]
mod harmonizer_cases;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use artrecon_core::fixtures::{
    self, RoundTripVariant, GAVASIO, GAVASIO_ULAN, GAVAZZI, REVIEW_LOG_SIZE,
};
use artrecon_core::harmonizer::{
    inconsistency_rate, Cluster, ConflictKind, DiscardReason, Harmonizer, PriorityOrder,
};
use artrecon_core::ingest::{actor_statements, export_quads, parse_statements, ParseOptions};
use artrecon_core::matcher::{
    candidate_id, generate_candidates, Confidence, Constraints, MatchCandidate,
    NegativeConstraints, Signals, Status, Thresholds, Verdict as SignalVerdict,
};
use artrecon_core::model::{AuthorityId, AuthorityTable, LinkKind, Statement};
use artrecon_core::review::{allocate_fairly, apply_decisions};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;

fn criterion(name: &str, budget_secs: u64, body: impl FnOnce() -> Outcome) {
    let budget = Duration::from_secs(budget_secs);
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let (pass, detail) = match &outcome {
        Ok(d) if elapsed <= budget => (true, d.clone()),
        Ok(d) => (false, format!("{d}; over time budget")),
        Err(e) => (false, e.clone()),
    };
    let line = format!(
        "acceptance {} {name}: {detail} [{:.2} s of {budget_secs} s]\n",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{}", line.trim_end());
}

fn ensure(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn id(s: &str) -> AuthorityId {
    AuthorityId::new(s).unwrap()
}

fn harmonizer() -> Harmonizer {
    Harmonizer::new(
        AuthorityTable::default_table(),
        PriorityOrder::default(),
        fixtures::modeling_context(),
    )
}

fn artrecon(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_artrecon"))
        .arg("--data-dir")
        .arg(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn bazzi_fixture() {
    criterion("bazzi_fixture", 1, || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        artrecon(dir.path(), &["make-fixtures", "--bazzi"])?;
        artrecon(dir.path(), &["ingest"])?;
        artrecon(dir.path(), &["harmonize"])?;
        let text = std::fs::read_to_string(dir.path().join("clusters.jsonl"))
            .map_err(|e| e.to_string())?;
        let cluster: Cluster = serde_json::from_str(text.lines().nth(1).ok_or("no cluster")?)
            .map_err(|e| e.to_string())?;
        let viaf = cluster
            .detected_conflicts
            .iter()
            .find(|c| c.authority == id("viaf") && c.kind == ConflictKind::DuplicateInAuthority)
            .ok_or("no VIAF duplicate conflict detected")?;
        ensure(
            viaf.candidates == fixtures::bazzi_viaf_candidates(),
            format!("VIAF candidates {:?}", viaf.candidates),
        )?;
        ensure(
            cluster.resolved == fixtures::bazzi_expected(),
            format!("resolved {:?}", cluster.resolved),
        )?;
        let viaf_discards = cluster
            .discarded
            .iter()
            .filter(|d| d.link.to.as_str().starts_with(fixtures::VIAF));
        ensure(
            viaf_discards.clone().count() > 0
                && viaf_discards
                    .clone()
                    .all(|d| d.reason == DiscardReason::ExcludedAuthority),
            "VIAF links not discarded as excluded",
        )?;
        let resolved: Vec<String> = cluster
            .resolved
            .iter()
            .map(|(a, u)| format!("{a}={u}"))
            .collect();
        Ok(format!(
            "resolved exactly {{{}}}; VIAF conflict of 3 excluded",
            resolved.join(", ")
        ))
    });
}

#[test]
fn round_trip_fixture() {
    criterion("round_trip_fixture", 1, || {
        let (a, b, c) = fixtures::round_trip_uris();
        let h = harmonizer();

        let (record, provider) = fixtures::round_trip(RoundTripVariant::WikidataOnly);
        let tie = h
            .harmonize_cluster(&record, &provider)
            .map_err(|e| e.to_string())?;
        ensure(
            tie.detected_conflicts
                .iter()
                .any(|x| x.kind == ConflictKind::BrokenRoundTrip && x.authority == id("loc")),
            "broken round trip not detected",
        )?;
        ensure(
            tie.resolved == BTreeMap::from([(id("wikidata"), b.clone())]),
            format!("tie resolved {:?}", tie.resolved),
        )?;
        ensure(
            tie.unresolved_conflicts.iter().any(|x| {
                x.authority == id("loc") && x.candidates == BTreeSet::from([a.clone(), c.clone()])
            }),
            "LoC slot not left unresolved",
        )?;
        ensure(
            tie.discarded
                .iter()
                .all(|d| d.reason == DiscardReason::UnresolvedTie),
            "tie discards carry another reason",
        )?;

        let (record, provider) = fixtures::round_trip(RoundTripVariant::InstitutionEndorsesA);
        let won = h
            .harmonize_cluster(&record, &provider)
            .map_err(|e| e.to_string())?;
        ensure(
            won.detected_conflicts
                .iter()
                .any(|x| x.kind == ConflictKind::BrokenRoundTrip),
            "broken round trip not detected with endorsement",
        )?;
        ensure(
            won.resolved.get(&id("loc")) == Some(&a),
            format!("endorsed resolved {:?}", won.resolved),
        )?;
        ensure(
            won.unresolved_conflicts.is_empty(),
            "endorsed case left unresolved",
        )?;
        Ok("wikidata-only: loc unresolved_tie; institution endorsement: A wins".into())
    });
}

#[test]
fn synthetic_corpus_rate() {
    criterion("synthetic_corpus_rate", 5, || {
        let corpus = fixtures::make_fixtures(&fixtures::FixtureConfig::new(1, 100, 27))
            .map_err(|e| e.to_string())?;
        let h = harmonizer();
        let clusters = corpus
            .records
            .iter()
            .map(|r| h.harmonize_cluster(r, &corpus.provider))
            .collect::<artrecon_core::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let rate = inconsistency_rate(&clusters);
        ensure(
            rate.rate == Some(0.27) && rate.conflicted == 27 && rate.eligible == 100,
            format!("rate {rate}"),
        )?;
        let flagged: BTreeSet<String> = clusters
            .iter()
            .zip(&corpus.manifest.clusters)
            .filter(|(c, _)| c.is_conflicted())
            .map(|(_, e)| e.id.clone())
            .collect();
        ensure(
            flagged == corpus.manifest.conflicted.iter().cloned().collect(),
            "flagged clusters differ from the injected ones",
        )?;

        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        artrecon(
            dir.path(),
            &[
                "--seed",
                "1",
                "make-fixtures",
                "--clusters",
                "100",
                "--conflicts",
                "27",
            ],
        )?;
        artrecon(dir.path(), &["ingest"])?;
        artrecon(dir.path(), &["harmonize"])?;
        let report = artrecon(dir.path(), &["report"])?;
        ensure(
            report.contains("inconsistency rate: 0.27 (27/100)"),
            format!("report said {report:?}"),
        )?;
        Ok(format!(
            "{rate}, tolerance 0, injected clusters matched one for one"
        ))
    });
}

#[test]
fn harmonizer_properties() {
    criterion("harmonizer_properties", 30, || {
        let counts = harmonizer_cases::run(0..1000);
        let total: usize = counts.values().sum();
        let summary: Vec<String> = counts.iter().map(|(p, n)| format!("{p}={n}")).collect();
        ensure(total == 0, format!("violations: {}", summary.join(", ")))?;
        Ok(format!(
            "1000 linksets, 0 violations ({})",
            summary.join(", ")
        ))
    });
}

#[test]
fn matcher_precision() {
    criterion("matcher_precision", 5, || {
        let f = fixtures::labeled_match_fixture(1);
        ensure(f.queries.len() == fixtures::LABELED_QUERIES, "fixture size")?;
        let thresholds = Thresholds::default();
        let eval = f.evaluate(&thresholds);
        ensure(
            eval.precision == 1.0,
            format!(
                "precision {:.3} over {} confident",
                eval.precision, eval.confident
            ),
        )?;
        let index = f.index();
        let run = |name: &str| -> Result<Vec<MatchCandidate>, String> {
            let q = f.query(name).ok_or(format!("{name} missing"))?;
            Ok(generate_candidates(
                &q.record,
                &index,
                &Constraints::default(),
                &thresholds,
                &NegativeConstraints::default(),
            ))
        };
        let gavasio: Vec<_> = run(GAVASIO)?
            .into_iter()
            .filter(|c| c.confidence == Confidence::Confident)
            .collect();
        ensure(
            gavasio.len() == 1 && gavasio[0].right.as_str() == GAVASIO_ULAN,
            "Gavasio not matched",
        )?;
        ensure(
            run(GAVAZZI)?
                .iter()
                .all(|c| c.confidence != Confidence::Confident),
            "Gavazzi reached confident",
        )?;
        Ok(format!(
            "precision {:.3} ({}/{}), recall {:.3} (reported only); Gavasio confident, Gavazzi not",
            eval.precision, eval.true_confident, eval.confident, eval.recall
        ))
    });
}

#[test]
fn modeling_invariants() {
    criterion("modeling_invariants", 5, || {
        let f = fixtures::modeling_fixture().map_err(|e| e.to_string())?;
        let exact = |s: &&Statement| s.link_kind() == Some(LinkKind::ExactMatch);
        let from_ambiguous = f
            .statements
            .iter()
            .filter(exact)
            .filter(|s| {
                f.ambiguous.contains(&s.subject)
                    || s.object.as_uri().is_some_and(|o| f.ambiguous.contains(o))
            })
            .count();
        let member_links: usize = f
            .umbrellas
            .iter()
            .map(|u| {
                f.statements
                    .iter()
                    .filter(|s| {
                        u.members.contains(&s.subject)
                            && s.object.as_uri().is_some_and(|o| u.members.contains(o))
                    })
                    .count()
            })
            .sum();
        ensure(
            from_ambiguous == 0,
            format!("{from_ambiguous} exact_match links touch minted ambiguous entities"),
        )?;
        ensure(
            member_links == 0,
            format!("{member_links} member-member umbrella links"),
        )?;
        let objects: BTreeSet<&str> = f
            .statements
            .iter()
            .filter_map(|s| s.object.as_uri())
            .map(|u| u.as_str())
            .collect();
        for ulan in ["500012920", "500082343", "500124891"] {
            let u = format!("{}{ulan}", fixtures::ULAN);
            ensure(
                objects.contains(u.as_str()),
                format!("ULAN {ulan} not linked"),
            )?;
        }
        let again = fixtures::modeling_fixture().map_err(|e| e.to_string())?;
        ensure(
            export_quads(&f.statements) == export_quads(&again.statements),
            "re-run quads differ",
        )?;
        Ok(format!(
            "{} statements, {} minted ambiguous entities, {} umbrellas: 0 exact_match from ambiguous, 0 member-member links, byte-identical re-run",
            f.statements.len(),
            f.ambiguous.len(),
            f.umbrellas.len()
        ))
    });
}

/// Posts the fixture log to a fresh `serve --fixture` process, twice with
/// the same idempotency keys, and returns the stats after each pass.
fn replay_over_http(
    log: &[artrecon_core::review::ReviewDecision],
) -> Result<(serde_json::Value, serde_json::Value), String> {
    let mut child = Command::new(env!("CARGO_BIN_EXE_artrecon"))
        .args([
            "--seed",
            "7",
            "serve",
            "--fixture",
            "--listen",
            "127.0.0.1:0",
        ])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let mut line = String::new();
    BufReader::new(child.stdout.take().ok_or("no stdout")?)
        .read_line(&mut line)
        .map_err(|e| e.to_string())?;
    let result = (|| {
        let base = line
            .trim()
            .strip_prefix("listening on ")
            .ok_or(format!("unexpected {line:?}"))?
            .to_string();
        let client = reqwest::blocking::Client::new();
        let mut passes = Vec::new();
        for _ in 0..2 {
            for d in log {
                let token = format!(
                    "token-{}",
                    d.request.institution.as_str().trim_start_matches("local:")
                );
                let status = client
                    .post(format!("{base}/v1/decisions"))
                    .header("x-institution-token", token)
                    .header(
                        "idempotency-key",
                        d.idempotency_key.clone().unwrap_or_default(),
                    )
                    .json(&d.request)
                    .send()
                    .map_err(|e| e.to_string())?
                    .status();
                ensure(
                    status.is_success(),
                    format!("decision {} answered {status}", d.sequence),
                )?;
            }
            let stats: serde_json::Value = client
                .get(format!("{base}/v1/stats"))
                .send()
                .and_then(|r| r.json())
                .map_err(|e| e.to_string())?;
            passes.push(stats);
        }
        let second = passes.pop().unwrap();
        Ok((passes.pop().unwrap(), second))
    })();
    let _ = child.kill();
    let _ = child.wait();
    result
}

#[test]
fn review_replay() {
    criterion("review_replay", 5, || {
        let f = fixtures::review_fixture(7).map_err(|e| e.to_string())?;
        ensure(
            f.log.len() == REVIEW_LOG_SIZE,
            format!("log has {} decisions", f.log.len()),
        )?;
        let replay = || {
            apply_decisions(&f.entities, &f.candidates, &f.log, &f.context)
                .map_err(|e| e.to_string())
        };
        let (once, twice) = (replay()?, replay()?);
        ensure(
            once.export() == twice.export(),
            "replays export different state",
        )?;
        ensure(
            export_quads(&once.statements) == export_quads(&twice.statements),
            "replays export different quads",
        )?;
        let over = apply_decisions(&once.entities, &f.candidates, &f.log, &f.context)
            .map_err(|e| e.to_string())?;
        ensure(
            over.export() == once.export(),
            "replaying over the replayed state changed it",
        )?;

        let rejected: Vec<&MatchCandidate> = f
            .candidates
            .values()
            .filter(|c| once.statuses.get(&c.id) == Some(&Status::Rejected))
            .collect();
        ensure(!rejected.is_empty(), "fixture has no rejected pair")?;
        let fresh = f.match_run(&once.negatives);
        let back: Vec<&str> = fresh
            .iter()
            .filter(|c| rejected.iter().any(|r| r.id == c.id))
            .map(|c| c.id.as_str())
            .collect();
        ensure(
            back.is_empty(),
            format!("rejected pairs re-entered: {back:?}"),
        )?;

        let (first, second) = replay_over_http(&f.log)?;
        ensure(first == second, "second HTTP pass changed the state")?;
        ensure(
            first["decisions"] == REVIEW_LOG_SIZE,
            format!("server logged {}", first["decisions"]),
        )?;
        Ok(format!(
            "{} decisions replayed byte-identically ({} bytes); {} rejected pairs absent from a fresh run of {}; HTTP resubmission logged nothing new",
            f.log.len(),
            once.export().len(),
            rejected.len(),
            fresh.len()
        ))
    });
}

fn pending(n: usize) -> Vec<MatchCandidate> {
    (0..n)
        .map(|i| {
            let left = fixtures::institution_uri("frick", &format!("l{i}"));
            let right = fixtures::institution_uri("zeri", &format!("r{i}"));
            MatchCandidate {
                id: candidate_id(&left, &right),
                left,
                right,
                score: 0.8,
                signals: Signals {
                    name_score: 0.8,
                    date_verdict: SignalVerdict::Compatible,
                    class_verdict: SignalVerdict::Compatible,
                },
                confidence: Confidence::Review,
                status: Status::Pending,
            }
        })
        .collect()
}

fn spread(n: usize, k: usize, all: &[MatchCandidate]) -> Result<usize, String> {
    let institutions: Vec<AuthorityId> = (0..k)
        .map(|i| AuthorityId::local(&format!("inst{i:02}")).unwrap())
        .collect();
    let assignment = allocate_fairly(&all[..n], &institutions).map_err(|e| e.to_string())?;
    let counts: Vec<usize> = institutions
        .iter()
        .map(|i| assignment.by_institution.get(i).map_or(0, Vec::len))
        .collect();
    let total: usize = counts.iter().sum();
    ensure(total == n, format!("N={n} K={k}: {total} assigned"))?;
    Ok(counts.iter().max().unwrap() - counts.iter().min().unwrap())
}

#[test]
fn fairness() {
    criterion("fairness", 10, || {
        let all = pending(1000);
        let mut worst = 0;
        let mut checked = 0;
        for k in 1..=13 {
            for n in [0, 1, k - 1, k, k + 1, 999, 1000] {
                worst = worst.max(spread(n, k, &all)?);
                checked += 1;
            }
        }
        let mut runner = TestRunner::new(Config {
            cases: 256,
            failure_persistence: None,
            ..Config::default()
        });
        runner
            .run(&(0usize..=1000, 1usize..=13), |(n, k)| {
                let s = spread(n, k, &all).map_err(TestCaseError::fail)?;
                prop_assert!(s <= 1, "N={} K={}: max-min={}", n, k, s);
                Ok(())
            })
            .map_err(|e| e.to_string())?;
        ensure(worst <= 1, format!("max-min reached {worst}"))?;
        Ok(format!(
            "max-min <= 1 over {checked} boundary cases and 256 generated (N <= 1000, K <= 13)"
        ))
    });
}

fn fixpoint(name: &str, statements: &[Statement]) -> Result<usize, String> {
    let first = export_quads(statements);
    let options = ParseOptions {
        context: fixtures::modeling_context(),
        source: AuthorityId::local("roundtrip").unwrap(),
        strict: true,
        file: Some(name.into()),
    };
    let parsed = parse_statements(&first, &options)
        .map_err(|e| format!("{name}: {e}"))?
        .statements;
    let second = export_quads(&parsed);
    ensure(
        first == second,
        format!("{name}: export differs after a parse"),
    )?;
    let original: BTreeSet<&Statement> = statements.iter().collect();
    let back: BTreeSet<&Statement> = parsed.iter().collect();
    ensure(
        original == back,
        format!("{name}: parse lost or changed statements"),
    )?;
    Ok(first.lines().count())
}

#[test]
fn serialization_fixpoint() {
    criterion("serialization_fixpoint", 5, || {
        let h = harmonizer();
        let ctx = fixtures::modeling_context();
        let with_clusters =
            |records: &[artrecon_core::ingest::ActorRecord],
             provider: &dyn artrecon_core::provider::LinkProvider| {
                let mut out = Vec::new();
                for r in records {
                    out.extend(actor_statements(r, &ctx));
                    out.extend(
                        h.harmonize_cluster(r, provider)
                            .map_err(|e| e.to_string())?
                            .statements(&ctx),
                    );
                }
                Ok::<_, String>(out)
            };
        let mut sets: Vec<(&str, Vec<Statement>)> = Vec::new();
        let (bazzi, provider) = fixtures::bazzi();
        sets.push(("bazzi", with_clusters(&[bazzi], &provider)?));
        for (name, variant) in [
            ("round_trip_wikidata_only", RoundTripVariant::WikidataOnly),
            (
                "round_trip_endorsed",
                RoundTripVariant::InstitutionEndorsesA,
            ),
        ] {
            let (record, provider) = fixtures::round_trip(variant);
            sets.push((name, with_clusters(&[record], &provider)?));
        }
        let corpus = fixtures::make_fixtures(&fixtures::FixtureConfig::new(1, 100, 27))
            .map_err(|e| e.to_string())?;
        sets.push((
            "synthetic_corpus",
            with_clusters(&corpus.records, &corpus.provider)?,
        ));
        sets.push((
            "modeling",
            fixtures::modeling_fixture()
                .map_err(|e| e.to_string())?
                .statements,
        ));
        let review = fixtures::review_fixture(7).map_err(|e| e.to_string())?;
        let state = apply_decisions(
            &review.entities,
            &review.candidates,
            &review.log,
            &review.context,
        )
        .map_err(|e| e.to_string())?;
        let mut reviewed = with_clusters(&review.records, &review.provider)?;
        reviewed.extend(state.statements);
        sets.push(("review", reviewed));
        let labeled = fixtures::labeled_match_fixture(1);
        sets.push((
            "labeled_matcher",
            labeled
                .queries
                .iter()
                .flat_map(|q| actor_statements(&q.record, &ctx))
                .collect(),
        ));

        let mut lines = 0;
        for (name, statements) in &sets {
            ensure(!statements.is_empty(), format!("{name}: no statements"))?;
            lines += fixpoint(name, statements)?;
        }
        Ok(format!(
            "{} fixtures, {lines} quads, export(parse(export)) identical and lossless",
            sets.len()
        ))
    });
}
