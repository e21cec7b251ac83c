//! Shared domain vocabulary.

mod authority;
mod date;
mod statement;
mod uri;

pub use authority::{AuthorityEntry, AuthorityId, AuthorityTable, Standing};
pub use date::{DateForm, DateSpec};
pub(crate) use statement::format_timestamp;
pub use statement::{
    BatchContext, Certainty, LinkKind, Literal, Method, Object, Predicate, Provenance, Statement,
    Timestamp,
};
pub use uri::{
    canonicalize, mint_deterministic_uri, normalize_key_part, CanonicalKey, EntityUri, Namespace,
};

/// Namespace of the predicates and classes this crate defines.
pub const VOCAB: &str = "https://w3id.org/artrecon/vocab#";

/// IRI of a crate-defined vocabulary term.
pub fn vocab(term: &str) -> String {
    format!("{VOCAB}{term}")
}
