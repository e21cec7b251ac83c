use std::collections::{BTreeMap, BTreeSet};

use super::{
    Cluster, Conflict, ConflictKind, DiscardReason, DiscardedLink, Linkset, PriorityOrder,
    ProvenancedLink, Rank, RoundTripOutcome,
};
use crate::model::{AuthorityId, AuthorityTable, EntityUri, LinkKind};

/// Undirected reachability from `seed` over `links`.
pub(crate) fn component<'a>(
    seed: &EntityUri,
    links: impl Iterator<Item = &'a ProvenancedLink>,
) -> BTreeSet<EntityUri> {
    let mut adjacent: BTreeMap<&EntityUri, Vec<&EntityUri>> = BTreeMap::new();
    for l in links {
        adjacent.entry(&l.from).or_default().push(&l.to);
        adjacent.entry(&l.to).or_default().push(&l.from);
    }
    let mut seen = BTreeSet::from([seed.clone()]);
    let mut stack = vec![seed];
    while let Some(u) = stack.pop() {
        for v in adjacent.get(u).into_iter().flatten() {
            if seen.insert((*v).clone()) {
                stack.push(v);
            }
        }
    }
    seen
}

/// Nodes `seed` reaches following link direction, the way expansion
/// discovers them.
fn downstream<'a>(
    seed: &EntityUri,
    links: impl Iterator<Item = &'a ProvenancedLink>,
) -> BTreeSet<EntityUri> {
    let mut out: BTreeMap<&EntityUri, Vec<&EntityUri>> = BTreeMap::new();
    for l in links {
        out.entry(&l.from).or_default().push(&l.to);
    }
    let mut seen = BTreeSet::from([seed.clone()]);
    let mut stack = vec![seed];
    while let Some(u) = stack.pop() {
        for v in out.get(u).into_iter().flatten() {
            if seen.insert((*v).clone()) {
                stack.push(v);
            }
        }
    }
    seen
}

fn group_by_authority<'a>(
    uris: impl Iterator<Item = &'a EntityUri>,
    seed: &EntityUri,
    table: &AuthorityTable,
) -> BTreeMap<AuthorityId, BTreeSet<EntityUri>> {
    let mut groups: BTreeMap<AuthorityId, BTreeSet<EntityUri>> = BTreeMap::new();
    for u in uris.filter(|u| *u != seed) {
        groups
            .entry(table.authority_of(u))
            .or_default()
            .insert(u.clone());
    }
    groups
}

/// One conflict per authority holding two or more URIs in the seed's
/// exact_match component. The kind is `broken_round_trip` when a round trip
/// starting in that authority came back to a different URI.
pub fn check_consistency(linkset: &Linkset, table: &AuthorityTable) -> Vec<Conflict> {
    let comp = linkset.component();
    let broken: Vec<(&EntityUri, &EntityUri)> = linkset
        .round_trips
        .iter()
        .filter(|rt| {
            matches!(rt.outcome, RoundTripOutcome::Broken { .. }) && comp.contains(&rt.from)
        })
        .map(|rt| (&rt.from, &rt.to))
        .collect();
    let mut out = Vec::new();
    for (authority, candidates) in group_by_authority(comp.iter(), &linkset.seed, table) {
        if candidates.len() < 2 {
            continue;
        }
        let own_broken: Vec<&(&EntityUri, &EntityUri)> = broken
            .iter()
            .filter(|(from, _)| candidates.contains(*from))
            .collect();
        let kind = if own_broken.is_empty() {
            ConflictKind::DuplicateInAuthority
        } else {
            ConflictKind::BrokenRoundTrip
        };
        let evidence = linkset
            .links
            .iter()
            .filter(|l| l.kind == LinkKind::ExactMatch)
            .filter(|l| {
                candidates.contains(&l.to)
                    || own_broken.iter().any(|(f, t)| l.from == **f && l.to == **t)
            })
            .cloned()
            .collect();
        out.push(Conflict {
            authority,
            candidates,
            kind,
            evidence,
        });
    }
    out
}

/// What one pass of the filter decided.
#[derive(Default)]
struct Decision {
    reach: BTreeSet<EntityUri>,
    losers: BTreeSet<EntityUri>,
    tied: BTreeMap<AuthorityId, BTreeSet<EntityUri>>,
}

impl Decision {
    /// The URIs a rerun would be seeded with.
    fn reseed(&self, seed: &EntityUri) -> BTreeSet<&EntityUri> {
        self.reach
            .iter()
            .filter(|u| *u != seed)
            .chain(self.tied.values().flatten())
            .collect()
    }
}

/// Resolves the most trusted conflicted authority, removes its losers (or
/// all its candidates on a tie), and repeats until none is left.
fn decide(
    seed: &EntityUri,
    trusted: &[&ProvenancedLink],
    mut active: BTreeSet<EntityUri>,
    priority: &PriorityOrder,
    table: &AuthorityTable,
    warnings: &mut BTreeSet<String>,
) -> Decision {
    let mut decision = Decision::default();
    decision.reach = loop {
        let reach = downstream(
            seed,
            trusted
                .iter()
                .copied()
                .filter(|l| active.contains(&l.from) && active.contains(&l.to)),
        );
        // Most trusted authority first, so a loser's endorsements never
        // decide a later authority.
        let next = group_by_authority(reach.iter(), seed, table)
            .into_iter()
            .filter(|(_, c)| c.len() >= 2)
            .min_by_key(|(a, _)| (priority.rank(a), a.clone()));
        let Some((authority, candidates)) = next else {
            break reach;
        };
        let mut score = |c: &EntityUri| {
            let rival = |u: &EntityUri| u != c && candidates.contains(u);
            let own_reach = downstream(
                seed,
                trusted.iter().copied().filter(|l| {
                    active.contains(&l.from)
                        && active.contains(&l.to)
                        && !rival(&l.from)
                        && !rival(&l.to)
                }),
            );
            trusted
                .iter()
                .filter(|l| l.to == *c && l.from != *c && own_reach.contains(&l.from))
                .map(|l| {
                    let rank = priority.rank(&l.provenance.source);
                    if rank == Rank::Unlisted {
                        warnings.insert(format!(
                            "authority {} is not in the priority order; ranked lowest",
                            l.provenance.source
                        ));
                    }
                    rank
                })
                .min()
        };
        // `None` (no endorsement at all) sorts after every rank.
        let scored: Vec<((bool, Option<Rank>), &EntityUri)> = candidates
            .iter()
            .map(|c| {
                let s = score(c);
                ((s.is_none(), s), c)
            })
            .collect();
        let best = scored
            .iter()
            .map(|(s, _)| *s)
            .min()
            .expect("two candidates");
        let winners: Vec<&EntityUri> = scored
            .iter()
            .filter(|(s, _)| *s == best)
            .map(|(_, c)| *c)
            .collect();
        if winners.len() == 1 && best.1.is_some() {
            for c in candidates.iter().filter(|c| *c != winners[0]) {
                active.remove(c);
                decision.losers.insert(c.clone());
            }
        } else {
            for c in &candidates {
                active.remove(c);
            }
            decision
                .tied
                .entry(authority)
                .or_default()
                .extend(candidates);
        }
    };
    decision
}

/// Passes allowed for the outcome to settle before the last one is kept.
const SETTLE_PASSES: usize = 16;

/// Reduces a linkset to at most one URI per authority.
///
/// Only trusted links count: those not touching an excluded authority and
/// not sourced from one. Within what the seed reaches downstream over
/// trusted links, the most trusted authority with several candidates keeps
/// the one endorsed by the best-ranked source, or is dropped entirely on a
/// tie. An endorsement counts only if the seed reaches its source without
/// passing through a rival candidate. Losers and dropped candidates are
/// removed and the step repeats, so a URI reachable only through a loser
/// is not resolved either.
///
/// A later tie can cut off an earlier winner, so the outcome is then
/// re-decided as if the seed asserted only what survived, until that is
/// stable. Feeding a cluster back through the pipeline is thus a fixpoint.
pub fn filter_conflicts(
    linkset: &Linkset,
    conflicts: &[Conflict],
    priority: &PriorityOrder,
    table: &AuthorityTable,
) -> Cluster {
    let seed = &linkset.seed;
    let comp = linkset.component();
    let excluded_node = |u: &EntityUri| u != seed && priority.is_excluded(&table.authority_of(u));
    let trusted: Vec<&ProvenancedLink> = linkset
        .links
        .iter()
        .filter(|l| l.kind == LinkKind::ExactMatch)
        .filter(|l| !excluded_node(&l.from) && !excluded_node(&l.to))
        .filter(|l| priority.rank(&l.provenance.source) != Rank::Excluded)
        .collect();
    let active: BTreeSet<EntityUri> = comp.iter().filter(|u| !excluded_node(u)).cloned().collect();
    let mut warnings: BTreeSet<String> = BTreeSet::new();

    let mut decision = decide(
        seed,
        &trusted,
        active.clone(),
        priority,
        table,
        &mut warnings,
    );
    let asserted = trusted
        .iter()
        .find(|l| l.from == *seed && priority.rank(&l.provenance.source) == Rank::Institution)
        .map(|l| l.provenance.clone());
    if let Some(provenance) = asserted {
        let onward: Vec<&ProvenancedLink> = trusted
            .iter()
            .copied()
            .filter(|l| l.from != *seed)
            .collect();
        for pass in 1.. {
            let reseeded: Vec<ProvenancedLink> = decision
                .reseed(seed)
                .into_iter()
                .map(|to| ProvenancedLink {
                    from: seed.clone(),
                    to: to.clone(),
                    kind: LinkKind::ExactMatch,
                    provenance: provenance.clone(),
                })
                .collect();
            let links: Vec<&ProvenancedLink> =
                reseeded.iter().chain(onward.iter().copied()).collect();
            let next = decide(seed, &links, active.clone(), priority, table, &mut warnings);
            let settled = next.reach == decision.reach && next.tied == decision.tied;
            decision = next;
            if settled {
                break;
            }
            if pass == SETTLE_PASSES {
                warnings.insert(format!(
                    "outcome did not settle after {SETTLE_PASSES} passes"
                ));
                break;
            }
        }
    }
    let Decision {
        reach,
        losers,
        tied,
    } = decision;

    let mut cluster = Cluster::empty(seed.clone());
    for (authority, mut uris) in group_by_authority(reach.iter(), seed, table) {
        let uri = uris.pop_first().expect("non-empty group");
        debug_assert!(uris.is_empty());
        cluster.resolved.insert(authority, uri);
    }

    let endpoint = |u: &EntityUri| -> Option<DiscardReason> {
        if u == seed || reach.contains(u) {
            None
        } else if excluded_node(u) {
            Some(DiscardReason::ExcludedAuthority)
        } else if tied.values().any(|c| c.contains(u)) {
            Some(DiscardReason::UnresolvedTie)
        } else if losers.contains(u) {
            Some(DiscardReason::LostPriority)
        } else {
            Some(DiscardReason::Unreachable)
        }
    };
    for link in &linkset.links {
        if link.kind != LinkKind::ExactMatch {
            cluster.see_also.insert(link.to.clone());
            cluster.support.push(link.clone());
            continue;
        }
        let discard = |reason| DiscardedLink {
            link: link.clone(),
            reason,
        };
        if tied.values().any(|c| c.contains(&link.to)) {
            cluster.attached.push(link.clone());
        } else if let Some(reason) = endpoint(&link.to) {
            cluster.discarded.push(discard(reason));
        } else if priority.rank(&link.provenance.source) == Rank::Excluded {
            cluster
                .discarded
                .push(discard(DiscardReason::ExcludedAuthority));
        } else if let Some(reason) = endpoint(&link.from) {
            cluster.discarded.push(discard(reason));
        } else {
            cluster.support.push(link.clone());
        }
    }

    // Report only what actually tied: candidates outside the trusted reach
    // would open new paths when the cluster is fed back in.
    for (authority, candidates) in &tied {
        let mut conflict = conflicts
            .iter()
            .find(|c| &c.authority == authority)
            .cloned()
            .unwrap_or_else(|| Conflict {
                authority: authority.clone(),
                candidates: candidates.clone(),
                kind: ConflictKind::DuplicateInAuthority,
                evidence: Vec::new(),
            });
        conflict.candidates = candidates.clone();
        conflict
            .evidence
            .retain(|l| candidates.contains(&l.to) || candidates.contains(&l.from));
        cluster.unresolved_conflicts.push(conflict);
    }
    cluster.detected_conflicts = conflicts.to_vec();
    cluster.authorities_seen = comp
        .iter()
        .filter(|u| *u != seed)
        .map(|u| table.authority_of(u))
        .collect();
    cluster.round_trips = linkset.round_trips.clone();
    cluster.unverifiable = linkset.unverifiable.clone();
    cluster.replacements = linkset.replacements.clone();
    cluster.truncated = linkset.truncated;
    for w in &warnings {
        tracing::warn!(seed = %seed, "{w}");
    }
    cluster.warnings = warnings.into_iter().collect();
    cluster
}
