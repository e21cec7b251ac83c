//! Reconciliation engine for cultural-heritage knowledge graphs.
//!
//! The crate is organised around the life of an identity assertion:
//!
//! * [`model`] holds the shared vocabulary (URIs, link kinds, provenance,
//!   dates, uncertainty) and deterministic URI minting.
//! * [`ingest`] reads N-Quads and institutional CSV exports and writes
//!   canonically ordered N-Quads.
//! * [`harmonizer`] expands institution-asserted linksets across authorities,
//!   detects inconsistencies and filters them by authority priority.
//! * [`matcher`] generates rule-based match candidates.
//! * [`modeling`] mints the entities used to encode ambiguity: anonymous
//!   groups, umbrella terms, diverging identities, alternative attributions.
//! * [`merge`] assembles provenance-tagged merged records and facet trees.
//! * [`review`] allocates candidates to institutions and replays the curator
//!   decision log.
//! * [`fixtures`] generates reproducible synthetic corpora.

pub mod error;
pub mod fixtures;
pub mod harmonizer;
pub mod ingest;
pub mod matcher;
pub mod merge;
pub mod model;
pub mod modeling;
pub mod provider;
pub mod review;

pub use error::{Error, Result};
