use std::collections::{BTreeMap, BTreeSet};

use super::{Linkset, ProvenancedLink, Replacement, RoundTrip, RoundTripOutcome};
use crate::error::{Error, Result};
use crate::model::{
    AuthorityId, AuthorityTable, BatchContext, EntityUri, LinkKind, Method, Provenance,
};
use crate::provider::{LinkProvider, RemoteRecord};

/// Longest replacement chain followed before the data is assumed corrupt.
pub const MAX_DEPRECATION_CHAIN: usize = 32;

/// Follows `replaced_by` entries from `uri` to the end of the chain.
/// Returns the final URI and every URI passed on the way.
pub fn resolve_deprecations(
    uri: &EntityUri,
    replaced_by: &BTreeMap<EntityUri, EntityUri>,
) -> Result<(EntityUri, Vec<EntityUri>)> {
    let mut trail: Vec<EntityUri> = Vec::new();
    let mut current = uri.clone();
    while let Some(next) = replaced_by.get(&current) {
        trail.push(current.clone());
        if let Some(pos) = trail.iter().position(|u| u == next) {
            let mut members: Vec<String> = trail[pos..].iter().map(|u| u.to_string()).collect();
            members.sort();
            return Err(Error::DeprecationCycle(members));
        }
        if trail.len() > MAX_DEPRECATION_CHAIN {
            return Err(Error::DeprecationChainTooLong {
                start: uri.to_string(),
                limit: MAX_DEPRECATION_CHAIN,
            });
        }
        current = next.clone();
    }
    Ok((current, trail))
}

/// Memoizing view of a provider for one expansion run.
struct Fetcher<'a> {
    provider: &'a dyn LinkProvider,
    memo: BTreeMap<EntityUri, std::result::Result<Option<RemoteRecord>, String>>,
}

impl<'a> Fetcher<'a> {
    fn new(provider: &'a dyn LinkProvider) -> Self {
        Fetcher {
            provider,
            memo: BTreeMap::new(),
        }
    }

    fn fetch(&mut self, uri: &EntityUri) -> std::result::Result<Option<&RemoteRecord>, String> {
        if !self.memo.contains_key(uri) {
            let answer = self.provider.fetch(uri).map_err(|e| e.to_string());
            if let Err(msg) = &answer {
                tracing::warn!(%uri, "provider failure: {msg}");
            }
            self.memo.insert(uri.clone(), answer);
        }
        match &self.memo[uri] {
            Ok(r) => Ok(r.as_ref()),
            Err(e) => Err(e.clone()),
        }
    }

    /// Resolves `uri` through the provider's replacement links.
    fn resolve(&mut self, uri: &EntityUri) -> Result<(EntityUri, Vec<EntityUri>)> {
        let mut chain = BTreeMap::new();
        let mut current = uri.clone();
        for _ in 0..MAX_DEPRECATION_CHAIN + 2 {
            let next = match self.fetch(&current) {
                Ok(Some(r)) => r.replaced_by.clone(),
                _ => None,
            };
            let Some(next) = next else { break };
            let seen = chain.contains_key(&next);
            chain.insert(current, next.clone());
            if seen {
                break;
            }
            current = next;
        }
        resolve_deprecations(uri, &chain)
    }

    fn resolve_into(&mut self, uri: &EntityUri, linkset: &mut Linkset) -> Result<EntityUri> {
        let (end, trail) = self.resolve(uri)?;
        if !trail.is_empty() {
            linkset.replacements.insert(Replacement {
                original: uri.clone(),
                replacement: end.clone(),
                trail,
            });
        }
        Ok(end)
    }
}

/// Breadth-first expansion along exact_match links from the seed.
///
/// Nodes closer than `depth_limit` hops are expanded. Nodes at the limit are
/// still fetched, but only their links to already known URIs, or back into
/// the authority of a URI that refers to them, are kept; anything else sets
/// `truncated`. Seed links from institutions are not round-trip checked.
pub fn expand_linkset(
    seed: &EntityUri,
    seeds: &[ProvenancedLink],
    provider: &dyn LinkProvider,
    depth_limit: usize,
    table: &AuthorityTable,
    context: &BatchContext,
) -> Result<Linkset> {
    if depth_limit == 0 {
        return Err(Error::invalid("depth limit must be at least 1"));
    }
    let mut linkset = Linkset::new(seed.clone());
    let mut fetcher = Fetcher::new(provider);
    let mut dist: BTreeMap<EntityUri, usize> = BTreeMap::new();
    dist.insert(seed.clone(), 0);

    let unique: BTreeSet<&ProvenancedLink> = seeds.iter().collect();
    for link in unique {
        if &link.from != seed {
            return Err(Error::invalid(format!(
                "seed link starts at {} instead of {seed}",
                link.from
            )));
        }
        let to = fetcher.resolve_into(&link.to, &mut linkset)?;
        if link.kind == LinkKind::ExactMatch && to != *seed {
            dist.entry(to.clone()).or_insert(1);
        }
        linkset.links.insert(ProvenancedLink { to, ..link.clone() });
    }

    for depth in 1..=depth_limit {
        let level: Vec<EntityUri> = dist
            .iter()
            .filter(|(_, d)| **d == depth)
            .map(|(u, _)| u.clone())
            .collect();
        if level.is_empty() {
            break;
        }
        let boundary = depth == depth_limit;
        let known: BTreeSet<EntityUri> = dist.keys().cloned().collect();
        let mut discovered: BTreeSet<EntityUri> = BTreeSet::new();
        for node in level {
            let record = match fetcher.fetch(&node) {
                Ok(Some(r)) => r.clone(),
                Ok(None) => continue,
                Err(_) => {
                    linkset.unverifiable.insert(node);
                    continue;
                }
            };
            let provenance = Provenance {
                source: table.authority_of(&node),
                retrieved_at: record.fetched_at.unwrap_or(context.retrieved_at),
                method: Method::Expanded,
                reviewer: None,
            };
            let referrers: BTreeSet<AuthorityId> = linkset
                .links
                .iter()
                .filter(|l| l.kind == LinkKind::ExactMatch && l.to == node && l.from != *seed)
                .map(|l| table.authority_of(&l.from))
                .collect();
            for raw in record.exact_targets() {
                let target = fetcher.resolve_into(&raw, &mut linkset)?;
                if target == node {
                    continue;
                }
                let keep = if !boundary || known.contains(&target) {
                    true
                } else {
                    referrers.contains(&table.authority_of(&target))
                };
                if !keep {
                    linkset.truncated = true;
                    continue;
                }
                if !known.contains(&target) {
                    discovered.insert(target.clone());
                }
                linkset.links.insert(ProvenancedLink {
                    from: node.clone(),
                    to: target,
                    kind: LinkKind::ExactMatch,
                    provenance: provenance.clone(),
                });
            }
        }
        for u in discovered {
            dist.entry(u).or_insert(depth + 1);
        }
    }

    round_trip_check(&mut linkset, &mut fetcher, &dist, depth_limit, table)?;
    Ok(linkset)
}

fn round_trip_check(
    linkset: &mut Linkset,
    fetcher: &mut Fetcher<'_>,
    dist: &BTreeMap<EntityUri, usize>,
    depth_limit: usize,
    table: &AuthorityTable,
) -> Result<()> {
    let candidates: Vec<(EntityUri, EntityUri)> = linkset
        .links
        .iter()
        .filter(|l| {
            l.kind == LinkKind::ExactMatch && l.from != linkset.seed && l.to != linkset.seed
        })
        .filter(|l| table.authority_of(&l.from) != table.authority_of(&l.to))
        .filter(|l| dist.get(&l.to).is_some_and(|d| *d <= depth_limit))
        .map(|l| (l.from.clone(), l.to.clone()))
        .collect();
    for (from, to) in candidates {
        let home = table.authority_of(&from);
        let outcome = match fetcher.fetch(&to) {
            Err(_) => RoundTripOutcome::Unverifiable,
            Ok(None) => RoundTripOutcome::NoBackLink,
            Ok(Some(record)) => {
                let record = record.clone();
                let mut back = BTreeSet::new();
                for raw in record.exact_targets() {
                    let t = fetcher.resolve(&raw).map(|(t, _)| t).unwrap_or(raw);
                    if table.authority_of(&t) == home {
                        back.insert(t);
                    }
                }
                if back.is_empty() {
                    RoundTripOutcome::NoBackLink
                } else if back.iter().all(|b| *b == from) {
                    RoundTripOutcome::Confirmed
                } else {
                    RoundTripOutcome::Broken { back }
                }
            }
        };
        linkset.round_trips.insert(RoundTrip { from, to, outcome });
    }
    Ok(())
}
