//! Random linksets for the harmonizer properties. Shared with the
//! acceptance suite through `#[path]`.

use std::collections::BTreeMap;

use artrecon_core::fixtures::{self, uri, GND, LOC, ULAN, VIAF, WIKIDATA};
use artrecon_core::harmonizer::{
    check_consistency, expand_linkset, filter_conflicts, Harmonizer, Linkset, PriorityOrder,
    ProvenancedLink,
};
use artrecon_core::ingest::{ActorRecord, AssertedLink};
use artrecon_core::model::{AuthorityTable, BatchContext, EntityUri, LinkKind, Method, Namespace};
use artrecon_core::provider::{LinkProvider, MapProvider, RemoteRecord};
use chrono::TimeZone;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AAT: &str = "http://vocab.getty.edu/aat/";

pub struct Case {
    pub record: ActorRecord,
    pub provider: MapProvider,
    /// Same data, asserted links and provider answers in another order.
    pub shuffled_record: ActorRecord,
    pub shuffled_provider: MapProvider,
    pub see_also: Vec<EntityUri>,
}

pub fn generate(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = Vec::new();
    for (prefix, tag) in [
        (LOC, "n"),
        (GND, "1"),
        (ULAN, "5000"),
        (WIKIDATA, "Q"),
        (VIAF, "9"),
        (AAT, "3000"),
    ] {
        for j in 0..rng.random_range(1..=3) {
            pool.push(uri(&format!("{prefix}{tag}{j}")));
        }
    }
    let mut provider = MapProvider::new();
    let mut deprecated = Vec::new();
    for (i, u) in pool.iter().enumerate() {
        if rng.random_bool(0.1) {
            let old = uri(&format!("{u}-old{i}"));
            provider.insert(RemoteRecord::new(old.clone()).replaced_by(u.clone()));
            deprecated.push(old);
        }
        let roll: f64 = rng.random();
        if roll < 0.05 {
            provider.fail(u.clone());
        } else if roll < 0.85 {
            let mut rec = RemoteRecord::new(u.clone());
            for _ in 0..rng.random_range(0..=3) {
                let t = pool.choose(&mut rng).unwrap();
                if t != u {
                    rec = rec.link(t.clone());
                }
            }
            if rng.random_bool(0.1) {
                if let Some(old) = deprecated.choose(&mut rng) {
                    rec = rec.link(old.clone());
                }
            }
            provider.insert(rec);
        }
    }
    let mut targets: Vec<EntityUri> = pool.clone();
    targets.extend(deprecated.iter().cloned());
    targets.shuffle(&mut rng);
    let n = rng.random_range(1..=4).min(targets.len());
    let record = fixtures::actor(
        "zeri",
        &format!("p{seed}"),
        "Generated",
        targets[..n].to_vec(),
    );

    let mut shuffled_record = record.clone();
    shuffled_record.asserted_links.shuffle(&mut rng);
    shuffled_record.asserted_links.reverse();
    let mut shuffled_provider = MapProvider::new();
    let mut records: Vec<RemoteRecord> = provider.records().cloned().collect();
    records.shuffle(&mut rng);
    for mut r in records {
        r.links.shuffle(&mut rng);
        // duplicates must merge as a set
        if let Some(first) = r.links.first().cloned() {
            r.links.push(first);
        }
        shuffled_provider.insert(r);
    }
    let see_also = pool.choose_multiple(&mut rng, 2).cloned().collect();
    Case {
        record,
        provider,
        shuffled_record,
        shuffled_provider,
        see_also,
    }
}

pub fn harmonizer(depth_limit: usize) -> Harmonizer {
    let ctx = BatchContext::new(
        Namespace::parse("https://data.artrecon.example/").unwrap(),
        "properties",
        chrono::Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap(),
    );
    Harmonizer::new(
        AuthorityTable::default_table(),
        PriorityOrder::default(),
        ctx,
    )
    .with_depth_limit(depth_limit)
}

fn linkset(h: &Harmonizer, record: &ActorRecord, provider: &dyn LinkProvider) -> Linkset {
    let prov = h
        .context
        .provenance(record.institution.clone(), Method::Asserted);
    let seeds: Vec<ProvenancedLink> = record
        .asserted_links
        .iter()
        .map(|l| ProvenancedLink {
            from: record.uri.clone(),
            to: l.target.clone(),
            kind: l.kind,
            provenance: prov.clone(),
        })
        .collect();
    expand_linkset(
        &record.uri,
        &seeds,
        provider,
        h.depth_limit,
        &h.table,
        &h.context,
    )
    .unwrap()
}

pub const PROPERTIES: [&str; 6] = [
    "per-authority uniqueness",
    "link conservation",
    "input-order independence",
    "idempotence fixpoint",
    "excluded-authority non-determination",
    "see_also isolation",
];

/// Checks every property on one case; returns the names of those violated
/// with a short explanation.
pub fn check(case: &Case) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let h = harmonizer(3);
    let cluster = h.harmonize_cluster(&case.record, &case.provider).unwrap();

    for (authority, u) in &cluster.resolved {
        if h.table.authority_of(u) != *authority || h.priority.is_excluded(authority) {
            out.push((PROPERTIES[0], format!("{authority} -> {u}")));
        }
    }

    let ls = linkset(&h, &case.record, &case.provider);
    let mut buckets: Vec<&ProvenancedLink> = cluster
        .support
        .iter()
        .chain(cluster.attached.iter())
        .chain(cluster.discarded.iter().map(|d| &d.link))
        .collect();
    buckets.sort();
    let input: Vec<&ProvenancedLink> = ls.links.iter().collect();
    if buckets != input {
        out.push((
            PROPERTIES[1],
            format!("{} links in, {} out", input.len(), buckets.len()),
        ));
    }

    let shuffled = h
        .harmonize_cluster(&case.shuffled_record, &case.shuffled_provider)
        .unwrap();
    if shuffled != cluster {
        out.push((PROPERTIES[2], "cluster differs".into()));
    }

    let deep = harmonizer(64);
    let once = deep
        .harmonize_cluster(&case.record, &case.provider)
        .unwrap();
    let twice = deep
        .reharmonize(&once, &case.record.institution, &case.provider)
        .unwrap();
    if once.outcome() != twice.outcome() {
        out.push((
            PROPERTIES[3],
            format!("{:?} vs {:?}", once.outcome(), twice.outcome()),
        ));
    }

    let mut reduced = ls.clone();
    reduced.links.retain(|l| {
        ![&l.from, &l.to]
            .iter()
            .any(|u| h.priority.is_excluded(&h.table.authority_of(u)))
            && !h.priority.is_excluded(&l.provenance.source)
    });
    let conflicts = check_consistency(&reduced, &h.table);
    let without = filter_conflicts(&reduced, &conflicts, &h.priority, &h.table);
    if without.resolved != cluster.resolved {
        out.push((
            PROPERTIES[4],
            format!("{:?} vs {:?}", without.resolved, cluster.resolved),
        ));
    }

    let mut with_see_also = case.record.clone();
    with_see_also
        .asserted_links
        .extend(case.see_also.iter().map(|t| AssertedLink {
            target: t.clone(),
            kind: LinkKind::SeeAlso,
            certainty: Default::default(),
        }));
    let widened = h.harmonize_cluster(&with_see_also, &case.provider).unwrap();
    if widened.resolved != cluster.resolved {
        out.push((PROPERTIES[5], "resolved map changed".into()));
    }
    out
}

/// Per-property violation counts over `seeds`.
pub fn run(seeds: impl Iterator<Item = u64>) -> BTreeMap<&'static str, usize> {
    let mut counts: BTreeMap<&'static str, usize> = PROPERTIES.iter().map(|p| (*p, 0)).collect();
    for seed in seeds {
        for (p, _) in check(&generate(seed)) {
            *counts.get_mut(p).unwrap() += 1;
        }
    }
    counts
}
