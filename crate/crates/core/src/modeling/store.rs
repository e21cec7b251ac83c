use std::collections::BTreeMap;

use crate::model::{BatchContext, Certainty, EntityUri, Object, Predicate, Provenance, Statement};

/// Copy of `statement` carrying `certainty` under `provenance`. The original
/// is left alone; a [`StatementStore`] decides which qualifier applies.
pub fn attach_uncertainty(
    context: &BatchContext,
    statement: &Statement,
    certainty: Certainty,
    provenance: &Provenance,
) -> Statement {
    Statement {
        graph: context.graph_for(provenance),
        provenance: provenance.clone(),
        certainty: Certainty::Certain,
        ..statement.clone()
    }
    .with_certainty(certainty)
}

/// Append-only statement log. Nothing is replaced; when several statements
/// assert the same triple, the one with the latest provenance timestamp
/// decides its certainty at read time (later appends win ties).
#[derive(Debug, Clone, Default)]
pub struct StatementStore {
    log: Vec<Statement>,
}

impl StatementStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, statement: Statement) {
        self.log.push(statement);
    }

    pub fn extend(&mut self, statements: impl IntoIterator<Item = Statement>) {
        self.log.extend(statements);
    }

    pub fn log(&self) -> &[Statement] {
        &self.log
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }

    /// Current view: one statement per triple, sorted.
    pub fn resolve(&self) -> Vec<Statement> {
        let mut current: BTreeMap<(&EntityUri, &Predicate, &Object), (usize, &Statement)> =
            BTreeMap::new();
        for (i, st) in self.log.iter().enumerate() {
            let slot = current
                .entry((&st.subject, &st.predicate, &st.object))
                .or_insert((i, st));
            if st.provenance.retrieved_at >= slot.1.provenance.retrieved_at {
                *slot = (i, st);
            }
        }
        let mut out: Vec<Statement> = current.into_values().map(|(_, st)| st.clone()).collect();
        out.sort();
        out
    }

    /// Certainty currently in force for a triple.
    pub fn certainty_of(
        &self,
        subject: &EntityUri,
        predicate: &Predicate,
        object: &Object,
    ) -> Option<Certainty> {
        self.log
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                &s.subject == subject && &s.predicate == predicate && &s.object == object
            })
            .max_by_key(|(i, s)| (s.provenance.retrieved_at, *i))
            .map(|(_, s)| s.certainty)
    }
}
