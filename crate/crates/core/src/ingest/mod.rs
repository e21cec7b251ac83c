//! Reading institutional records and link dumps, writing canonical N-Quads.

mod actors;
mod nquads;
mod records;

use serde::{Deserialize, Serialize};

pub use actors::{parse_actor_records, parse_artwork_records, ColumnMapping};
pub use nquads::{export_quads, parse_statements, ParseOptions, ParseOutcome};
pub use records::{
    actor_statements, artwork_statements, ActorDates, ActorRecord, ArtworkRecord, AssertedLink,
    CreatorRef, DateKind, EntityClass, NameForm, NameRole, Title, TitleRole,
};

/// A recoverable problem found while reading input, emitted as JSON Lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    #[serde(default)]
    pub file: Option<String>,
    pub line: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(file: Option<&str>, line: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            file: file.map(str::to_string),
            line,
            message: message.into(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("diagnostics serialize")
    }
}

/// Writes diagnostics as JSON Lines.
pub fn diagnostics_to_jsonl(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_json_line() + "\n").collect()
}
