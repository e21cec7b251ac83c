use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LinkKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeeperClass {
    Agent,
    Building,
    Collection,
    Place,
    Unknown,
}

impl KeeperClass {
    pub fn name(self) -> &'static str {
        match self {
            KeeperClass::Agent => "agent",
            KeeperClass::Building => "building",
            KeeperClass::Collection => "collection",
            KeeperClass::Place => "place",
            KeeperClass::Unknown => "unknown",
        }
    }

    pub fn parse(raw: &str) -> Option<KeeperClass> {
        [
            KeeperClass::Agent,
            KeeperClass::Building,
            KeeperClass::Collection,
            KeeperClass::Place,
            KeeperClass::Unknown,
        ]
        .into_iter()
        .find(|c| c.name() == raw.trim().to_lowercase())
    }

    fn movable(self) -> bool {
        matches!(self, KeeperClass::Agent | KeeperClass::Collection)
    }

    fn immovable(self) -> bool {
        matches!(self, KeeperClass::Building | KeeperClass::Place)
    }
}

/// Cue words mapping a keeper label component to a class, plus the
/// delimiter separating components. Deliberately small: a component no cue
/// recognises stays unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeeperLexicon {
    delimiter: char,
    cues: BTreeMap<Vec<String>, KeeperClass>,
}

pub const DEFAULT_KEEPER_CUES: &str = "\
museum = agent
gallery = agent
library = agent
auction = agent
antiques = agent
dealer = agent
hotel = building
castle = building
basilica = building
manor = place
house = place
collection = collection
coll = collection
";

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl KeeperLexicon {
    /// `cue = class` per line; a cue may span several words.
    pub fn parse(text: &str, delimiter: char) -> Result<Self> {
        let mut cues = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: n + 1,
                message,
            };
            let (cue, class) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `cue = class`, got {line:?}")))?;
            let class = KeeperClass::parse(class)
                .ok_or_else(|| parse_err(format!("unknown class {:?}", class.trim())))?;
            let cue = tokens(cue);
            if cue.is_empty() {
                return Err(parse_err("empty cue".into()));
            }
            cues.insert(cue, class);
        }
        Ok(KeeperLexicon { delimiter, cues })
    }

    /// Class of the leftmost cue in `component`; the longest cue wins when
    /// several start at the same word.
    pub fn classify(&self, component: &str) -> KeeperClass {
        let words = tokens(component);
        for start in 0..words.len() {
            let hit = self
                .cues
                .iter()
                .filter(|(cue, _)| words[start..].starts_with(cue))
                .max_by_key(|(cue, _)| cue.len());
            if let Some((_, class)) = hit {
                return *class;
            }
        }
        KeeperClass::Unknown
    }
}

impl Default for KeeperLexicon {
    fn default() -> Self {
        KeeperLexicon::parse(DEFAULT_KEEPER_CUES, ',').expect("default keeper lexicon parses")
    }
}

/// A proposed link between two components of one keeper label, for review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeeperCandidate {
    pub subject: String,
    pub kind: LinkKind,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeeperClassification {
    pub components: Vec<(String, KeeperClass)>,
    pub candidates: Vec<KeeperCandidate>,
    /// No component could be classified.
    pub needs_review: bool,
}

/// Splits a layered keeper label such as "Hotel George V, Auction Tajan" and
/// guesses a class for each part. Movable parts (agents, collections) get
/// `located_in` candidates towards immovable ones, and agents get
/// `keeper_of` candidates towards collections.
pub fn classify_keeper(label: &str, lexicon: &KeeperLexicon) -> KeeperClassification {
    let components: Vec<(String, KeeperClass)> = label
        .split(lexicon.delimiter)
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .map(|c| (c.to_string(), lexicon.classify(c)))
        .collect();
    let mut candidates = Vec::new();
    for (m, mc) in components.iter().filter(|(_, c)| c.movable()) {
        for (i, _) in components.iter().filter(|(_, c)| c.immovable()) {
            candidates.push(KeeperCandidate {
                subject: m.clone(),
                kind: LinkKind::LocatedIn,
                object: i.clone(),
            });
        }
        if *mc == KeeperClass::Agent {
            for (c, _) in components
                .iter()
                .filter(|(_, c)| *c == KeeperClass::Collection)
            {
                candidates.push(KeeperCandidate {
                    subject: m.clone(),
                    kind: LinkKind::KeeperOf,
                    object: c.clone(),
                });
            }
        }
    }
    let needs_review = components.iter().all(|(_, c)| *c == KeeperClass::Unknown);
    KeeperClassification {
        components,
        candidates,
        needs_review,
    }
}
