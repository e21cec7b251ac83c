use std::fmt;

use serde::{Deserialize, Serialize};

use super::uri::{canonicalize, EntityUri};
use crate::error::{Error, Result};

/// Short lowercase token naming an authority namespace (`loc`, `ulan`,
/// `local:zeri`, ...).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AuthorityId(String);

impl AuthorityId {
    pub const OTHER: &'static str = "other";

    pub fn new(id: &str) -> Result<Self> {
        let id = id.trim();
        let valid = !id.is_empty()
            && id.chars().all(|c| {
                c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, ':' | '-' | '_' | '.')
            });
        if !valid {
            return Err(Error::Config(format!(
                "authority id {id:?} must be a non-empty lowercase token"
            )));
        }
        Ok(AuthorityId(id.to_string()))
    }

    pub fn other() -> Self {
        AuthorityId(Self::OTHER.to_string())
    }

    /// Institution namespace, `local:<institution>`.
    pub fn local(institution: &str) -> Result<Self> {
        AuthorityId::new(&format!("local:{institution}"))
    }

    pub fn is_local(&self) -> bool {
        self.0.starts_with("local:")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AuthorityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for AuthorityId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        AuthorityId::new(&value)
    }
}

impl From<AuthorityId> for String {
    fn from(id: AuthorityId) -> String {
        id.0
    }
}

impl std::str::FromStr for AuthorityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AuthorityId::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Standing {
    Ranked(u32),
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorityEntry {
    pub id: AuthorityId,
    pub prefix: String,
    pub standing: Standing,
}

/// Maps URIs to the authority owning their namespace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorityTable {
    entries: Vec<AuthorityEntry>,
}

impl AuthorityTable {
    pub fn new(entries: Vec<AuthorityEntry>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        let mut normalized = Vec::with_capacity(entries.len());
        for mut entry in entries {
            if !seen.insert(entry.id.clone()) {
                return Err(Error::Config(format!(
                    "duplicate authority id {}",
                    entry.id
                )));
            }
            entry.prefix = normalize_prefix(&entry.prefix)?;
            normalized.push(entry);
        }
        Ok(AuthorityTable {
            entries: normalized,
        })
    }

    /// Parses the tab-separated table format:
    /// `id<TAB>uri-prefix<TAB>rank-or-"excluded"`. Blank lines and `#`
    /// comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected 3 tab-separated columns, found {}", cols.len()),
                });
            }
            let standing = match cols[2].trim() {
                "excluded" => Standing::Excluded,
                n => Standing::Ranked(n.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("rank must be an integer or \"excluded\", got {n:?}"),
                })?),
            };
            entries.push(AuthorityEntry {
                id: AuthorityId::new(cols[0]).map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: e.to_string(),
                })?,
                prefix: cols[1].trim().to_string(),
                standing,
            });
        }
        AuthorityTable::new(entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let standing = match e.standing {
                Standing::Ranked(r) => r.to_string(),
                Standing::Excluded => "excluded".to_string(),
            };
            out.push_str(&format!("{}\t{}\t{}\n", e.id, e.prefix, standing));
        }
        out
    }

    pub fn entries(&self) -> &[AuthorityEntry] {
        &self.entries
    }

    pub fn get(&self, id: &AuthorityId) -> Option<&AuthorityEntry> {
        self.entries.iter().find(|e| &e.id == id)
    }

    pub fn with_entry(mut self, entry: AuthorityEntry) -> Result<Self> {
        self.entries.retain(|e| e.id != entry.id);
        self.entries.push(entry);
        AuthorityTable::new(self.entries)
    }

    /// Longest-prefix match; unknown namespaces resolve to `other`.
    pub fn authority_of(&self, uri: &EntityUri) -> AuthorityId {
        self.entries
            .iter()
            .filter(|e| uri.as_str().starts_with(&e.prefix))
            .max_by_key(|e| e.prefix.len())
            .map(|e| e.id.clone())
            .unwrap_or_else(AuthorityId::other)
    }

    /// Ranked authorities in rank order and the excluded set.
    pub fn standings(&self) -> (Vec<AuthorityId>, Vec<AuthorityId>) {
        let mut ranked: Vec<(u32, &AuthorityId)> = self
            .entries
            .iter()
            .filter_map(|e| match e.standing {
                Standing::Ranked(r) => Some((r, &e.id)),
                Standing::Excluded => None,
            })
            .collect();
        ranked.sort();
        let excluded = self
            .entries
            .iter()
            .filter(|e| e.standing == Standing::Excluded)
            .map(|e| e.id.clone())
            .collect();
        (
            ranked.into_iter().map(|(_, id)| id.clone()).collect(),
            excluded,
        )
    }

    /// Authorities used throughout the reconciliation workflow, ranked
    /// loc > gnd > rkd > ulan > wikidata with viaf excluded. `aat` and
    /// `iconclass` are vocabularies and rank after the name authorities.
    pub fn default_table() -> Self {
        let rows: [(&str, &str, Standing); 8] = [
            (
                "loc",
                "http://id.loc.gov/authorities/names/",
                Standing::Ranked(1),
            ),
            ("gnd", "https://d-nb.info/gnd/", Standing::Ranked(2)),
            (
                "rkd",
                "https://rkd.nl/explore/artists/",
                Standing::Ranked(3),
            ),
            ("ulan", "http://vocab.getty.edu/ulan/", Standing::Ranked(4)),
            (
                "wikidata",
                "http://www.wikidata.org/entity/",
                Standing::Ranked(5),
            ),
            ("aat", "http://vocab.getty.edu/aat/", Standing::Ranked(6)),
            ("iconclass", "https://iconclass.org/", Standing::Ranked(7)),
            ("viaf", "http://viaf.org/viaf/", Standing::Excluded),
        ];
        AuthorityTable::new(
            rows.into_iter()
                .map(|(id, prefix, standing)| AuthorityEntry {
                    id: AuthorityId::new(id).unwrap(),
                    prefix: prefix.to_string(),
                    standing,
                })
                .collect(),
        )
        .expect("default authority table is valid")
    }
}

/// Lowercases scheme and host of a prefix while keeping its trailing slash.
fn normalize_prefix(prefix: &str) -> Result<String> {
    let trimmed = prefix.trim();
    let canon = canonicalize(trimmed)
        .map_err(|e| Error::Config(format!("authority prefix {trimmed:?}: {e}")))?;
    let trailing = trimmed.len() - trimmed.trim_end_matches('/').len();
    Ok(format!("{canon}{}", "/".repeat(trailing.min(1))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_by_longest_prefix() {
        let table = AuthorityTable::parse(
            "getty\thttp://vocab.getty.edu/\t9\nulan\thttp://vocab.getty.edu/ulan/\t4\n",
        )
        .unwrap();
        let u = EntityUri::parse("http://vocab.getty.edu/ulan/500015183").unwrap();
        assert_eq!(table.authority_of(&u).as_str(), "ulan");
        let a = EntityUri::parse("http://vocab.getty.edu/aat/300011802").unwrap();
        assert_eq!(table.authority_of(&a).as_str(), "getty");
    }

    #[test]
    fn unknown_prefix_maps_to_other() {
        let table = AuthorityTable::default_table();
        let u = EntityUri::parse("https://example.com/x/1").unwrap();
        assert_eq!(table.authority_of(&u), AuthorityId::other());
    }

    #[test]
    fn prefix_without_slash_does_not_swallow_siblings() {
        let table = AuthorityTable::default_table();
        let u = EntityUri::parse("http://vocab.getty.edu/ulanx/1").unwrap();
        assert_eq!(table.authority_of(&u), AuthorityId::other());
    }

    #[test]
    fn text_format_round_trips() {
        let table = AuthorityTable::default_table();
        let again = AuthorityTable::parse(&table.to_text()).unwrap();
        assert_eq!(table, again);
        let (ranked, excluded) = again.standings();
        assert_eq!(ranked[0].as_str(), "loc");
        assert_eq!(ranked[4].as_str(), "wikidata");
        assert_eq!(excluded, vec![AuthorityId::new("viaf").unwrap()]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = AuthorityTable::parse("loc\thttp://id.loc.gov/\t1\nbad line\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = AuthorityTable::parse("LOC\thttp://id.loc.gov/\t1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(AuthorityTable::parse("a\thttp://a.org/\t1\na\thttp://b.org/\t2\n").is_err());
    }
}
