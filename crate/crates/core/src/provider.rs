//! Remote link sources consulted during linkset expansion.
//!
//! A provider answers, for one URI, the record's outgoing links and its
//! replacement if the URI is deprecated. Records are exchanged as JSON
//! `{uri, fetched_at, links[], replaced_by}`; the offline fixture directory
//! and the on-disk cache share that shape.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{EntityUri, LinkKind, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RemoteLink {
    pub to: EntityUri,
    #[serde(default = "exact_match")]
    pub kind: LinkKind,
}

fn exact_match() -> LinkKind {
    LinkKind::ExactMatch
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteRecord {
    pub uri: EntityUri,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fetched_at: Option<Timestamp>,
    #[serde(default)]
    pub links: Vec<RemoteLink>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replaced_by: Option<EntityUri>,
    /// Fixture-only: simulate an unreachable authority for this URI.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RemoteRecord {
    pub fn new(uri: EntityUri) -> Self {
        RemoteRecord {
            uri,
            fetched_at: None,
            links: Vec::new(),
            replaced_by: None,
            error: None,
        }
    }

    pub fn link(mut self, to: EntityUri) -> Self {
        self.links.push(RemoteLink {
            to,
            kind: LinkKind::ExactMatch,
        });
        self
    }

    pub fn replaced_by(mut self, to: EntityUri) -> Self {
        self.replaced_by = Some(to);
        self
    }

    /// Outgoing exact_match targets, deduplicated and sorted.
    pub fn exact_targets(&self) -> BTreeSet<EntityUri> {
        self.links
            .iter()
            .filter(|l| l.kind == LinkKind::ExactMatch)
            .map(|l| l.to.clone())
            .collect()
    }
}

pub trait LinkProvider: Send + Sync {
    /// `Ok(None)` when the provider holds nothing for `uri`; `Err` when the
    /// authority could not be consulted.
    fn fetch(&self, uri: &EntityUri) -> Result<Option<RemoteRecord>>;
}

impl<P: LinkProvider + ?Sized> LinkProvider for &P {
    fn fetch(&self, uri: &EntityUri) -> Result<Option<RemoteRecord>> {
        (**self).fetch(uri)
    }
}

/// In-memory provider.
#[derive(Debug, Clone, Default)]
pub struct MapProvider {
    records: BTreeMap<EntityUri, RemoteRecord>,
}

impl MapProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: RemoteRecord) {
        self.records.insert(record.uri.clone(), record);
    }

    pub fn with(mut self, record: RemoteRecord) -> Self {
        self.insert(record);
        self
    }

    /// Makes every fetch of `uri` fail.
    pub fn fail(&mut self, uri: EntityUri) {
        let mut r = RemoteRecord::new(uri);
        r.error = Some("simulated failure".into());
        self.insert(r);
    }

    pub fn records(&self) -> impl Iterator<Item = &RemoteRecord> {
        self.records.values()
    }
}

fn answer(record: Option<&RemoteRecord>) -> Result<Option<RemoteRecord>> {
    match record {
        Some(RemoteRecord {
            uri,
            error: Some(msg),
            ..
        }) => Err(Error::Provider {
            uri: uri.to_string(),
            message: msg.clone(),
        }),
        other => Ok(other.cloned()),
    }
}

impl LinkProvider for MapProvider {
    fn fetch(&self, uri: &EntityUri) -> Result<Option<RemoteRecord>> {
        answer(self.records.get(uri))
    }
}

/// Offline provider over a directory holding one JSON record per URI.
/// File names are free; records are keyed by their `uri` field.
#[derive(Debug, Clone)]
pub struct FixtureDirProvider {
    inner: MapProvider,
}

impl FixtureDirProvider {
    pub fn open(dir: &Path) -> Result<Self> {
        let mut inner = MapProvider::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let record: RemoteRecord = serde_json::from_str(&fs::read_to_string(&path)?)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if inner.records.contains_key(&record.uri) {
                return Err(Error::Config(format!(
                    "{}: duplicate fixture for {}",
                    path.display(),
                    record.uri
                )));
            }
            inner.insert(record);
        }
        Ok(FixtureDirProvider { inner })
    }

    pub fn len(&self) -> usize {
        self.inner.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.records.is_empty()
    }
}

impl LinkProvider for FixtureDirProvider {
    fn fetch(&self, uri: &EntityUri) -> Result<Option<RemoteRecord>> {
        self.inner.fetch(uri)
    }
}

/// File name used for a URI in fixture and cache directories.
pub fn record_file_name(uri: &EntityUri) -> String {
    let digest = Sha256::digest(uri.as_str().as_bytes());
    format!("{}.json", &hex::encode(digest)[..16])
}

/// Writes `record` into `dir` under its canonical file name.
pub fn write_record(dir: &Path, record: &RemoteRecord) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(record_file_name(&record.uri));
    let mut json = serde_json::to_string_pretty(record)?;
    json.push('\n');
    fs::write(&path, json)?;
    Ok(path)
}

/// Read-through cache keyed by canonical URI. Only successful answers are
/// cached; an absent record is stored with no links.
pub struct CachedProvider<P> {
    inner: P,
    dir: PathBuf,
    clock: Box<dyn Fn() -> Timestamp + Send + Sync>,
}

impl<P: LinkProvider> CachedProvider<P> {
    pub fn new(inner: P, dir: impl Into<PathBuf>) -> Self {
        CachedProvider {
            inner,
            dir: dir.into(),
            clock: Box::new(chrono::Utc::now),
        }
    }

    pub fn with_clock(mut self, clock: impl Fn() -> Timestamp + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }
}

impl<P: LinkProvider> LinkProvider for CachedProvider<P> {
    fn fetch(&self, uri: &EntityUri) -> Result<Option<RemoteRecord>> {
        let path = self.dir.join(record_file_name(uri));
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(record) = serde_json::from_str::<RemoteRecord>(&text) {
                if &record.uri == uri {
                    return Ok(Some(record));
                }
            }
        }
        let fetched = self.inner.fetch(uri)?;
        let mut record = fetched.unwrap_or_else(|| RemoteRecord::new(uri.clone()));
        record.fetched_at = Some((self.clock)());
        write_record(&self.dir, &record)?;
        Ok(Some(record))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn uri(s: &str) -> EntityUri {
        EntityUri::parse(s).unwrap()
    }

    #[test]
    fn fixture_dir_reads_records_by_uri() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("wd-Q8506.json"),
            r#"{"uri":"http://www.wikidata.org/entity/Q8506","links":[{"to":"http://viaf.org/viaf/76586951"}]}"#,
        )
        .unwrap();
        fs::write(
            dir.path().join("down.json"),
            r#"{"uri":"http://id.loc.gov/authorities/names/n1","error":"offline"}"#,
        )
        .unwrap();
        let p = FixtureDirProvider::open(dir.path()).unwrap();
        assert_eq!(p.len(), 2);
        let r = p
            .fetch(&uri("http://www.wikidata.org/entity/Q8506"))
            .unwrap()
            .unwrap();
        assert_eq!(r.exact_targets().len(), 1);
        assert!(p
            .fetch(&uri("http://www.wikidata.org/entity/Q1"))
            .unwrap()
            .is_none());
        assert!(p
            .fetch(&uri("http://id.loc.gov/authorities/names/n1"))
            .is_err());
    }

    #[test]
    fn fixture_dir_rejects_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a.json", "b.json"] {
            fs::write(dir.path().join(name), r#"{"uri":"http://a.org/1"}"#).unwrap();
        }
        assert!(FixtureDirProvider::open(dir.path()).is_err());
    }

    struct Counting<'a>(MapProvider, &'a AtomicUsize);

    impl LinkProvider for Counting<'_> {
        fn fetch(&self, uri: &EntityUri) -> Result<Option<RemoteRecord>> {
            self.1.fetch_add(1, Ordering::SeqCst);
            self.0.fetch(uri)
        }
    }

    #[test]
    fn cache_answers_second_fetch() {
        let dir = tempfile::tempdir().unwrap();
        let calls = AtomicUsize::new(0);
        let map = MapProvider::new()
            .with(RemoteRecord::new(uri("http://a.org/1")).link(uri("http://b.org/2")));
        let t = chrono::Utc.with_ymd_and_hms(2025, 5, 1, 0, 0, 0).unwrap();
        let cached = CachedProvider::new(Counting(map, &calls), dir.path()).with_clock(move || t);
        let first = cached.fetch(&uri("http://a.org/1")).unwrap().unwrap();
        let second = cached.fetch(&uri("http://a.org/1")).unwrap().unwrap();
        assert_eq!(first, second);
        assert_eq!(first.fetched_at, Some(t));
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        let text =
            fs::read_to_string(dir.path().join(record_file_name(&uri("http://a.org/1")))).unwrap();
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(json["uri"], "http://a.org/1");
        assert!(json["links"].is_array());
        assert!(json["fetched_at"].is_string());
    }
}
