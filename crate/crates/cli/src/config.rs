//! Run configuration: defaults, then the TOML file, then flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use artrecon_core::harmonizer::PriorityOrder;
use artrecon_core::matcher::Thresholds;
use artrecon_core::model::{AuthorityId, Namespace, Timestamp};
use artrecon_service::Registry;
use chrono::TimeZone;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const DEFAULT_PRIORITY: &str = "loc,gnd,rkd,ulan,wikidata;exclude=viaf";
pub const DEFAULT_NAMESPACE: &str = "https://data.artrecon.example/";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

/// Settings read from `--config`. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub fixture_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub priority: Option<String>,
    pub threshold_confident: Option<f64>,
    pub threshold_review: Option<f64>,
    pub date_slack: Option<u32>,
    pub namespace: Option<String>,
    /// Provenance time for ingested statements that carry none.
    pub retrieved_at: Option<String>,
    pub seed: Option<u64>,
    pub online: Option<bool>,
    pub listen: Option<String>,
    /// Institution name → review token.
    pub institutions: Option<BTreeMap<String, String>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("config {}: {}", path.display(), e.message())))
    }
}

/// Values given on the command line; `None` defers to the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data_dir: Option<PathBuf>,
    pub priority: Option<String>,
    pub threshold_confident: Option<f64>,
    pub threshold_review: Option<f64>,
    pub seed: Option<u64>,
    pub online: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub fixture_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub priority: PriorityOrder,
    pub priority_text: String,
    pub thresholds: Thresholds,
    pub namespace: Namespace,
    pub retrieved_at: Timestamp,
    pub seed: u64,
    pub online: bool,
    pub listen: String,
    pub registry: Registry,
}

/// The settings that change results. Paths are left out so that the same
/// run in another directory carries the same hash.
#[derive(Serialize)]
struct Echo<'a> {
    priority: &'a str,
    threshold_confident: f64,
    threshold_review: f64,
    date_slack: u32,
    namespace: &'a str,
    retrieved_at: String,
    seed: u64,
    online: bool,
    institutions: Vec<&'a AuthorityId>,
}

impl RunConfig {
    /// Merges and validates everything before any stage runs.
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self, CliError> {
        let data_dir = flags
            .data_dir
            .or(file.data_dir)
            .unwrap_or_else(|| PathBuf::from("data"));
        let priority_text = flags
            .priority
            .or(file.priority)
            .unwrap_or_else(|| DEFAULT_PRIORITY.to_string());
        let priority = PriorityOrder::parse(&priority_text)
            .map_err(|e| CliError::usage(format!("--priority: {e}")))?;
        let defaults = Thresholds::default();
        let thresholds = Thresholds {
            confident: flags
                .threshold_confident
                .or(file.threshold_confident)
                .unwrap_or(defaults.confident),
            review: flags
                .threshold_review
                .or(file.threshold_review)
                .unwrap_or(defaults.review),
            date_slack: file.date_slack.unwrap_or(defaults.date_slack),
        };
        thresholds
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        let namespace_text = file
            .namespace
            .unwrap_or_else(|| DEFAULT_NAMESPACE.to_string());
        let namespace = Namespace::parse(&namespace_text)
            .map_err(|e| CliError::usage(format!("namespace: {e}")))?;
        let retrieved_at = match file.retrieved_at {
            Some(raw) => chrono::DateTime::parse_from_rfc3339(&raw)
                .map_err(|e| CliError::usage(format!("retrieved_at {raw:?}: {e}")))?
                .with_timezone(&chrono::Utc),
            None => chrono::Utc.timestamp_opt(0, 0).single().expect("epoch"),
        };
        let registry = match file.institutions {
            Some(map) if map.is_empty() => {
                return Err(CliError::usage("institutions must not be empty"))
            }
            Some(map) => {
                let mut tokens = BTreeMap::new();
                for (name, token) in map {
                    let id = AuthorityId::local(&name)
                        .map_err(|e| CliError::usage(format!("institution {name:?}: {e}")))?;
                    if token.trim().is_empty() {
                        return Err(CliError::usage(format!(
                            "institution {name:?} has an empty token"
                        )));
                    }
                    tokens.insert(id, token);
                }
                Registry { tokens }
            }
            None => Registry::fixture(),
        };
        let listen = file.listen.unwrap_or_else(|| DEFAULT_LISTEN.to_string());
        Ok(RunConfig {
            fixture_dir: file
                .fixture_dir
                .unwrap_or_else(|| data_dir.join("corpus").join("authority")),
            cache_dir: file.cache_dir.unwrap_or_else(|| data_dir.join("cache")),
            data_dir,
            priority,
            priority_text,
            thresholds,
            namespace,
            retrieved_at,
            seed: flags.seed.or(file.seed).unwrap_or(1),
            online: flags.online.or(file.online).unwrap_or(false),
            listen,
            registry,
        })
    }

    /// First 16 hex digits of the SHA-256 of the canonical settings.
    pub fn hash(&self) -> String {
        let echo = Echo {
            priority: &self.priority_text,
            threshold_confident: self.thresholds.confident,
            threshold_review: self.thresholds.review,
            date_slack: self.thresholds.date_slack,
            namespace: self.namespace.as_str(),
            retrieved_at: self.retrieved_at.to_rfc3339(),
            seed: self.seed,
            online: self.online,
            institutions: self.registry.tokens.keys().collect(),
        };
        let json = serde_json::to_string(&echo).expect("config echo serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }

    pub fn header(&self) -> Header {
        Header {
            tool: "artrecon".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: self.hash(),
        }
    }
}

/// Stamped into every file a command writes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
}

impl Header {
    pub fn comment(&self) -> String {
        format!(
            "# {} {} config {}\n",
            self.tool, self.version, self.config_hash
        )
    }

    pub fn json_line(&self) -> String {
        serde_json::json!({ "artrecon": self }).to_string() + "\n"
    }
}
