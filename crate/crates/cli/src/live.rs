//! Online link source for `--online` runs.
//!
//! Only Wikidata entities and VIAF clusters are fetched live. Every other
//! authority answers with a provider error, which the harmonizer records
//! as unverifiable rather than as an absent record.

use std::time::Duration;

use artrecon_core::model::{EntityUri, LinkKind};
use artrecon_core::provider::{LinkProvider, RemoteLink, RemoteRecord};
use artrecon_core::{Error, Result};
use serde_json::Value;

const WIKIDATA: &str = "http://www.wikidata.org/entity/";
const VIAF: &str = "http://viaf.org/viaf/";

/// Wikidata properties holding identifiers in other authorities.
const WIKIDATA_PROPERTIES: [(&str, &str); 5] = [
    ("P214", "http://viaf.org/viaf/"),
    ("P244", "http://id.loc.gov/authorities/names/"),
    ("P227", "https://d-nb.info/gnd/"),
    ("P245", "http://vocab.getty.edu/ulan/"),
    ("P650", "https://rkd.nl/explore/artists/"),
];

/// VIAF justlinks sources.
const VIAF_SOURCES: [(&str, &str); 4] = [
    ("LC", "http://id.loc.gov/authorities/names/"),
    ("DNB", "https://d-nb.info/gnd/"),
    ("JPG", "http://vocab.getty.edu/ulan/"),
    ("WKP", "http://www.wikidata.org/entity/"),
];

fn provider_error(uri: &EntityUri, message: impl Into<String>) -> Error {
    Error::Provider {
        uri: uri.to_string(),
        message: message.into(),
    }
}

fn exact(uri: &EntityUri, raw: String) -> Result<RemoteLink> {
    let to = EntityUri::parse(&raw)
        .map_err(|e| provider_error(uri, format!("bad identifier {raw:?}: {e}")))?;
    Ok(RemoteLink {
        to,
        kind: LinkKind::ExactMatch,
    })
}

/// Reads a `Special:EntityData` document. A different entity id in the
/// answer means Wikidata followed a redirect.
pub fn parse_wikidata(uri: &EntityUri, qid: &str, doc: &Value) -> Result<RemoteRecord> {
    let entities = doc
        .get("entities")
        .and_then(Value::as_object)
        .ok_or_else(|| provider_error(uri, "no entities object"))?;
    let (id, entity) = entities
        .iter()
        .next()
        .ok_or_else(|| provider_error(uri, "empty entities object"))?;
    let mut record = RemoteRecord::new(uri.clone());
    if id != qid {
        record.replaced_by = Some(exact(uri, format!("{WIKIDATA}{id}"))?.to);
        return Ok(record);
    }
    for (property, prefix) in WIKIDATA_PROPERTIES {
        let claims = entity
            .pointer(&format!("/claims/{property}"))
            .and_then(Value::as_array);
        for claim in claims.into_iter().flatten() {
            if claim.get("rank").and_then(Value::as_str) == Some("deprecated") {
                continue;
            }
            if let Some(value) = claim
                .pointer("/mainsnak/datavalue/value")
                .and_then(Value::as_str)
            {
                record
                    .links
                    .push(exact(uri, format!("{prefix}{}", value.trim()))?);
            }
        }
    }
    record.links.sort();
    record.links.dedup();
    Ok(record)
}

/// Reads a VIAF `justlinks.json` document. A different `viafID` means the
/// cluster was merged into another.
pub fn parse_viaf(uri: &EntityUri, id: &str, doc: &Value) -> Result<RemoteRecord> {
    let viaf_id = doc
        .get("viafID")
        .and_then(Value::as_str)
        .ok_or_else(|| provider_error(uri, "no viafID"))?;
    let mut record = RemoteRecord::new(uri.clone());
    if viaf_id != id {
        record.replaced_by = Some(exact(uri, format!("{VIAF}{viaf_id}"))?.to);
        return Ok(record);
    }
    for (source, prefix) in VIAF_SOURCES {
        let values = doc.get(source).and_then(Value::as_array);
        for value in values.into_iter().flatten().filter_map(Value::as_str) {
            // DNB entries are sometimes full URIs under the old http prefix.
            let local = value
                .trim()
                .rsplit('/')
                .next()
                .unwrap_or_default()
                .replace(' ', "");
            if !local.is_empty() {
                record.links.push(exact(uri, format!("{prefix}{local}"))?);
            }
        }
    }
    record.links.sort();
    record.links.dedup();
    Ok(record)
}

pub struct LiveProvider {
    client: reqwest::blocking::Client,
}

impl LiveProvider {
    pub fn new() -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .user_agent(concat!("artrecon/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(LiveProvider { client })
    }

    fn get(&self, uri: &EntityUri, url: &str) -> Result<Option<Value>> {
        let response = self
            .client
            .get(url)
            .send()
            .map_err(|e| provider_error(uri, e.to_string()))?;
        if response.status() == reqwest::StatusCode::NOT_FOUND {
            return Ok(None);
        }
        let response = response
            .error_for_status()
            .map_err(|e| provider_error(uri, e.to_string()))?;
        response
            .json()
            .map(Some)
            .map_err(|e| provider_error(uri, e.to_string()))
    }
}

impl LinkProvider for LiveProvider {
    fn fetch(&self, uri: &EntityUri) -> Result<Option<RemoteRecord>> {
        if let Some(qid) = uri.as_str().strip_prefix(WIKIDATA) {
            let url = format!("https://www.wikidata.org/wiki/Special:EntityData/{qid}.json");
            return self
                .get(uri, &url)?
                .map(|doc| parse_wikidata(uri, qid, &doc))
                .transpose();
        }
        if let Some(id) = uri.as_str().strip_prefix(VIAF) {
            let url = format!("https://viaf.org/viaf/{id}/justlinks.json");
            return self
                .get(uri, &url)?
                .map(|doc| parse_viaf(uri, id, &doc))
                .transpose();
        }
        Err(provider_error(uri, "no live source for this authority"))
    }
}
