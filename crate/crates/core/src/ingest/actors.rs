//! CSV ingestion of actor records through a column mapping, and JSON Lines
//! ingestion of artwork records.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::records::{
    ActorDates, ActorRecord, ArtworkRecord, AssertedLink, DateKind, EntityClass, NameForm, NameRole,
};
use super::Diagnostic;
use crate::error::{Error, Result};
use crate::matcher::parse_date_spec;
use crate::model::{AuthorityId, Certainty, DateSpec, EntityUri, LinkKind};

/// Names the CSV columns holding each actor field. Columns not named here
/// are kept as opaque descriptive values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    /// Institution token; records are attributed to `local:<institution>`.
    pub institution: String,
    /// Record URIs are `uri_prefix + local id`.
    pub uri_prefix: String,
    pub id: String,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub variant_names: Option<String>,
    #[serde(default)]
    pub inscription_names: Option<String>,
    /// Single column holding a life span such as "1375-1425".
    #[serde(default)]
    pub dates: Option<String>,
    #[serde(default)]
    pub birth: Option<String>,
    #[serde(default)]
    pub death: Option<String>,
    /// Single column holding an activity span.
    #[serde(default)]
    pub activity: Option<String>,
    #[serde(default)]
    pub class: Option<String>,
    /// Links cell: entries separated by `value_separator`, each
    /// `[kind=]uri[?]`; the kind defaults to exact_match and a trailing `?`
    /// marks the link uncertain.
    #[serde(default)]
    pub links: Option<String>,
    #[serde(default = "default_separator")]
    pub value_separator: String,
}

fn default_separator() -> String {
    ";".to_string()
}

impl ColumnMapping {
    pub fn new(institution: &str, uri_prefix: &str, id: &str) -> Self {
        ColumnMapping {
            institution: institution.to_string(),
            uri_prefix: uri_prefix.to_string(),
            id: id.to_string(),
            name: None,
            variant_names: None,
            inscription_names: None,
            dates: None,
            birth: None,
            death: None,
            activity: None,
            class: None,
            links: None,
            value_separator: default_separator(),
        }
    }

    fn mapped(&self) -> Vec<&str> {
        [
            Some(&self.id),
            self.name.as_ref(),
            self.variant_names.as_ref(),
            self.inscription_names.as_ref(),
            self.dates.as_ref(),
            self.birth.as_ref(),
            self.death.as_ref(),
            self.activity.as_ref(),
            self.class.as_ref(),
            self.links.as_ref(),
        ]
        .into_iter()
        .flatten()
        .map(String::as_str)
        .collect()
    }
}

struct Ctx<'a> {
    file: Option<&'a str>,
    line: usize,
    diags: &'a mut Vec<Diagnostic>,
}

impl Ctx<'_> {
    fn warn(&mut self, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(self.file, self.line, msg));
    }

    fn date(&mut self, raw: &str, what: &str) -> DateSpec {
        if raw.trim().is_empty() {
            return DateSpec::Unknown;
        }
        let (spec, problem) = parse_date_spec(raw);
        if let Some(p) = problem {
            self.warn(format!("{what}: {p}"));
        }
        spec
    }
}

/// Parses an RFC 4180 CSV export with a header row. One record per row, in
/// file order. A missing id column aborts; row-level problems become
/// diagnostics.
pub fn parse_actor_records(
    text: &str,
    mapping: &ColumnMapping,
    file: Option<&str>,
) -> Result<(Vec<ActorRecord>, Vec<Diagnostic>)> {
    let institution = AuthorityId::local(&mapping.institution)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    if col(&mapping.id).is_none() {
        return Err(Error::Config(format!(
            "id column {:?} not found in header",
            mapping.id
        )));
    }
    for name in mapping.mapped() {
        if col(name).is_none() {
            return Err(Error::Config(format!(
                "mapped column {name:?} not found in header"
            )));
        }
    }
    let mapped: BTreeSet<&str> = mapping.mapped().into_iter().collect();
    let sep = mapping.value_separator.as_str();

    let mut records = Vec::new();
    let mut diags = Vec::new();
    let mut seen = BTreeSet::new();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                diags.push(Diagnostic::new(file, line, format!("unreadable row: {e}")));
                continue;
            }
        };
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut cx = Ctx {
            file,
            line,
            diags: &mut diags,
        };
        let cell = |name: &Option<String>| -> &str {
            name.as_deref()
                .and_then(col)
                .and_then(|i| row.get(i))
                .map(str::trim)
                .unwrap_or("")
        };
        let local_id = cell(&Some(mapping.id.clone())).to_string();
        if local_id.is_empty() {
            cx.warn("row without id skipped");
            continue;
        }
        if !seen.insert(local_id.clone()) {
            cx.warn(format!("duplicate id {local_id:?} skipped"));
            continue;
        }
        let uri = match EntityUri::parse(&format!("{}{}", mapping.uri_prefix, local_id)) {
            Ok(u) => u,
            Err(e) => {
                cx.warn(format!("cannot build record URI: {e}"));
                continue;
            }
        };

        let mut name_forms = Vec::new();
        let multi = |v: &str| -> Vec<String> {
            v.split(sep)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        };
        for (column, role) in [
            (&mapping.name, NameRole::Preferred),
            (&mapping.variant_names, NameRole::Variant),
            (&mapping.inscription_names, NameRole::Inscription),
        ] {
            let value = cell(column);
            let values = if role == NameRole::Preferred {
                if value.is_empty() {
                    Vec::new()
                } else {
                    vec![value.to_string()]
                }
            } else {
                multi(value)
            };
            name_forms.extend(values.into_iter().map(|v| NameForm {
                value: v,
                role: Some(role),
            }));
        }
        if name_forms.is_empty() {
            cx.warn(format!("record {local_id:?} has no name form; skipped"));
            continue;
        }

        let dates = if mapping.birth.is_some() || mapping.death.is_some() {
            let birth = cx.date(cell(&mapping.birth), "birth");
            let death = cx.date(cell(&mapping.death), "death");
            ActorDates::life(birth, death)
        } else if mapping.activity.is_some() {
            let span = cx.date(cell(&mapping.activity), "activity");
            ActorDates::from_span(DateKind::Activity, span)
        } else {
            let span = cx.date(cell(&mapping.dates), "dates");
            ActorDates::from_span(DateKind::Life, span)
        };

        let class_cell = cell(&mapping.class);
        let entity_class = EntityClass::parse(class_cell).unwrap_or_else(|| {
            cx.warn(format!("unknown entity class {class_cell:?}"));
            EntityClass::Unknown
        });

        let mut asserted_links = Vec::new();
        for entry in multi(cell(&mapping.links)) {
            match parse_link_entry(&entry) {
                Ok(link) => asserted_links.push(link),
                Err(msg) => cx.warn(format!("link {entry:?}: {msg}")),
            }
        }

        let extra: BTreeMap<String, String> = headers
            .iter()
            .enumerate()
            .filter(|(_, h)| !mapped.contains(h.as_str()))
            .filter_map(|(i, h)| {
                let v = row.get(i)?.trim();
                (!v.is_empty()).then(|| (h.clone(), v.to_string()))
            })
            .collect();

        records.push(ActorRecord {
            uri,
            local_id,
            institution: institution.clone(),
            name_forms,
            dates,
            entity_class,
            asserted_links,
            extra,
        });
    }
    Ok((records, diags))
}

fn parse_link_entry(entry: &str) -> std::result::Result<AssertedLink, String> {
    let (kind, rest) = match entry.split_once('=') {
        Some((k, rest)) if LinkKind::from_name(k.trim()).is_some() => {
            (LinkKind::from_name(k.trim()).unwrap(), rest.trim())
        }
        _ => (LinkKind::ExactMatch, entry),
    };
    let (raw, certainty) = match rest.strip_suffix('?') {
        Some(r) => (r, Certainty::Uncertain),
        None => (rest, Certainty::Certain),
    };
    let target = EntityUri::parse(raw).map_err(|e| e.to_string())?;
    Ok(AssertedLink {
        target,
        kind,
        certainty,
    })
}

/// Reads artwork records, one JSON object per line.
pub fn parse_artwork_records(
    text: &str,
    file: Option<&str>,
) -> (Vec<ArtworkRecord>, Vec<Diagnostic>) {
    let mut records = Vec::new();
    let mut diags = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ArtworkRecord>(line) {
            Ok(r) => match r.validate() {
                Ok(()) => records.push(r),
                Err(e) => diags.push(Diagnostic::new(file, idx + 1, e.to_string())),
            },
            Err(e) => diags.push(Diagnostic::new(file, idx + 1, e.to_string())),
        }
    }
    (records, diags)
}
