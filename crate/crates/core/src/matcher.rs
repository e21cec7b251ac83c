//! Rule-based candidate generation: name normalization, string similarity,
//! date compatibility and class constraints.
//!
//! The rules favour precision. A pair only reaches the `confident` band
//! when its names are near-identical and its dates are known to overlap;
//! everything weaker is left to human review.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::ingest::{ActorRecord, EntityClass};
use crate::model::{DateSpec, EntityUri};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedName {
    pub form: String,
    /// The raw name ended in `?`.
    pub uncertain: bool,
    /// Nothing usable survived normalization.
    pub degenerate: bool,
}

/// NFC, "Surname, Given" reordering, diacritic stripping, case folding,
/// punctuation removal (internal hyphens kept) and whitespace collapsing.
pub fn normalize_name(raw: &str) -> NormalizedName {
    let nfc: String = raw.nfc().collect();
    let mut s = nfc.trim();
    let mut uncertain = false;
    while let Some(rest) = s.strip_suffix('?') {
        uncertain = true;
        s = rest.trim_end();
    }
    let reordered = match s.split(',').collect::<Vec<_>>().as_slice() {
        [surname, given] => format!("{} {}", given.trim(), surname.trim()),
        _ => s.to_string(),
    };
    let folded: String = reordered
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .collect();
    let chars: Vec<char> = folded.chars().collect();
    let mut cleaned = String::with_capacity(chars.len());
    for (i, &c) in chars.iter().enumerate() {
        let keep_hyphen = c == '-'
            && i > 0
            && chars[i - 1].is_alphanumeric()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() || keep_hyphen {
            cleaned.push(c);
        } else {
            cleaned.push(' ');
        }
    }
    let form = cleaned.split_whitespace().collect::<Vec<_>>().join(" ");
    NormalizedName {
        degenerate: form.is_empty(),
        form,
        uncertain,
    }
}

/// Character-level Levenshtein distance.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let subst = prev[j] + usize::from(ca != cb);
            cur[j + 1] = subst.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn token_jaccard(a: &str, b: &str) -> f64 {
    let ta: BTreeSet<&str> = a.split_whitespace().collect();
    let tb: BTreeSet<&str> = b.split_whitespace().collect();
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let inter = ta.intersection(&tb).count() as f64;
    let union = ta.union(&tb).count() as f64;
    inter / union
}

/// `max(1 - edit_distance / max_len, token-set Jaccard)` over normalized
/// forms. Symmetric, in `[0, 1]`.
pub fn name_similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    let edit = if longest == 0 {
        1.0
    } else {
        1.0 - edit_distance(a, b) as f64 / longest as f64
    };
    edit.max(token_jaccard(a, b))
}

fn ordinal_number(s: &str) -> Option<u32> {
    let digits_end = s.find(|c: char| !c.is_ascii_digit())?;
    let (num, suffix) = s.split_at(digits_end);
    let n: u32 = num.parse().ok()?;
    matches!(suffix, "st" | "nd" | "rd" | "th").then_some(n)
}

fn year(s: &str) -> Option<i32> {
    (!s.is_empty() && s.len() <= 4 && s.chars().all(|c| c.is_ascii_digit()))
        .then(|| s.parse().ok())
        .flatten()
}

/// Recognises `1375-1425` (any dash), `1451`, `16th century`, `1390s`.
/// Anything else is unknown and comes with a diagnostic message.
pub fn parse_date_spec(raw: &str) -> (DateSpec, Option<String>) {
    let unrecognized = || {
        (
            DateSpec::Unknown,
            Some(format!("unrecognized date {raw:?}")),
        )
    };
    let s: String = raw
        .trim()
        .chars()
        .map(|c| match c {
            '\u{2010}'..='\u{2015}' | '\u{2212}' => '-',
            c => c,
        })
        .collect::<String>()
        .to_lowercase();
    if s.is_empty() {
        return (DateSpec::Unknown, None);
    }
    if let Some((a, b)) = s.split_once('-') {
        return match (year(a.trim()), year(b.trim())) {
            (Some(a), Some(b)) => match DateSpec::range(a, b) {
                Ok(d) => (d, None),
                Err(e) => (DateSpec::Unknown, Some(e.to_string())),
            },
            _ => unrecognized(),
        };
    }
    if let Some(y) = year(&s) {
        return (DateSpec::ExactYear(y), None);
    }
    if let Some(d) = s.strip_suffix('s').and_then(year) {
        return match DateSpec::decade(d) {
            Ok(spec) => (spec, None),
            Err(_) => unrecognized(),
        };
    }
    let words: Vec<&str> = s.split_whitespace().collect();
    if let [n, unit] = words.as_slice() {
        if matches!(*unit, "century" | "c." | "cent.") {
            if let Some(spec) = ordinal_number(n).and_then(|n| DateSpec::century(n).ok()) {
                return (spec, None);
            }
        }
    }
    unrecognized()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compatible,
    Incompatible,
    Unknown,
}

pub const DEFAULT_DATE_SLACK: u32 = 5;

/// Compatible iff the intervals widened by `slack_years` on both sides
/// intersect; unknown when either side is unknown.
pub fn date_compatibility(a: &DateSpec, b: &DateSpec, slack_years: u32) -> Verdict {
    match (a.interval(), b.interval()) {
        (Some((a0, a1)), Some((b0, b1))) => {
            let slack = slack_years as i64;
            let (a0, a1, b0, b1) = (a0 as i64 - slack, a1 as i64 + slack, b0 as i64, b1 as i64);
            if a0 <= b1 + slack && b0 - slack <= a1 {
                Verdict::Compatible
            } else {
                Verdict::Incompatible
            }
        }
        _ => Verdict::Unknown,
    }
}

fn class_compatibility(left: EntityClass, right: EntityClass) -> Verdict {
    match (left, right) {
        (EntityClass::Unknown, _) | (_, EntityClass::Unknown) => Verdict::Unknown,
        (l, r) if l == r => Verdict::Compatible,
        _ => Verdict::Incompatible,
    }
}

/// Score multiplier applied when either side's dates are unknown.
pub const UNKNOWN_DATE_WEIGHT: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub confident: f64,
    pub review: f64,
    #[serde(default = "default_slack")]
    pub date_slack: u32,
}

fn default_slack() -> u32 {
    DEFAULT_DATE_SLACK
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            confident: 0.93,
            review: 0.75,
            date_slack: DEFAULT_DATE_SLACK,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(in_unit(self.confident) && in_unit(self.review) && self.confident > self.review) {
            return Err(Error::Config(format!(
                "thresholds must satisfy 0 <= review < confident <= 1, got review={} confident={}",
                self.review, self.confident
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraints {
    #[serde(default)]
    pub required_class: Option<EntityClass>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Confident,
    Review,
    Rejected,
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    #[default]
    Pending,
    Accepted,
    Rejected,
    Deferred,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signals {
    pub name_score: f64,
    pub date_verdict: Verdict,
    pub class_verdict: Verdict,
}

/// A proposed match between a record and a target entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchCandidate {
    pub id: String,
    pub left: EntityUri,
    pub right: EntityUri,
    pub score: f64,
    pub signals: Signals,
    pub confidence: Confidence,
    #[serde(default)]
    pub status: Status,
}

/// Deterministic id of the unordered pair.
pub fn candidate_id(left: &EntityUri, right: &EntityUri) -> String {
    let (a, b) = if left <= right {
        (left, right)
    } else {
        (right, left)
    };
    let digest = Sha256::digest(format!("{a}|{b}").as_bytes());
    format!("c-{}", &hex::encode(digest)[..16])
}

impl MatchCandidate {
    /// Confidence band from signals and thresholds: class or date
    /// incompatibility rejects outright; `confident` additionally needs
    /// compatible dates.
    pub fn classify(signals: &Signals, score: f64, thresholds: &Thresholds) -> Option<Confidence> {
        if signals.class_verdict == Verdict::Incompatible
            || signals.date_verdict == Verdict::Incompatible
        {
            return (signals.name_score >= thresholds.review).then_some(Confidence::Rejected);
        }
        if signals.name_score >= thresholds.confident && signals.date_verdict == Verdict::Compatible
        {
            Some(Confidence::Confident)
        } else if score >= thresholds.review {
            Some(Confidence::Review)
        } else {
            None
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("candidates serialize")
    }
}

/// A target authority record as seen by the matcher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub uri: EntityUri,
    pub names: Vec<String>,
    #[serde(default)]
    pub class: EntityClass,
    #[serde(default = "unknown_date")]
    pub dates: DateSpec,
}

fn unknown_date() -> DateSpec {
    DateSpec::Unknown
}

impl From<&ActorRecord> for TargetRecord {
    /// Another institution's record used as a match target.
    fn from(r: &ActorRecord) -> Self {
        TargetRecord {
            uri: r.uri.clone(),
            names: r.name_forms.iter().map(|n| n.value.clone()).collect(),
            class: r.entity_class,
            dates: r.dates.span(),
        }
    }
}

/// Target records blocked by normalized name token. Read-only once built.
#[derive(Debug, Clone, Default)]
pub struct CandidateIndex {
    targets: Vec<TargetRecord>,
    normalized: Vec<Vec<String>>,
    blocks: BTreeMap<String, BTreeSet<usize>>,
}

impl CandidateIndex {
    pub fn build(targets: Vec<TargetRecord>) -> Self {
        let mut blocks: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        let mut normalized = Vec::with_capacity(targets.len());
        for (i, t) in targets.iter().enumerate() {
            let forms: Vec<String> = t
                .names
                .iter()
                .map(|n| normalize_name(n).form)
                .filter(|f| !f.is_empty())
                .collect();
            for token in forms.iter().flat_map(|f| f.split_whitespace()) {
                blocks.entry(token.to_string()).or_default().insert(i);
            }
            normalized.push(forms);
        }
        CandidateIndex {
            targets,
            normalized,
            blocks,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn targets(&self) -> &[TargetRecord] {
        &self.targets
    }

    fn block(&self, forms: &[String]) -> BTreeSet<usize> {
        forms
            .iter()
            .flat_map(|f| f.split_whitespace())
            .filter_map(|t| self.blocks.get(t))
            .flatten()
            .copied()
            .collect()
    }
}

/// Unordered pairs a curator rejected; never proposed again.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeConstraints {
    pairs: BTreeSet<(EntityUri, EntityUri)>,
}

impl NegativeConstraints {
    pub fn insert(&mut self, a: &EntityUri, b: &EntityUri) {
        self.pairs.insert(Self::key(a, b));
    }

    pub fn remove(&mut self, a: &EntityUri, b: &EntityUri) {
        self.pairs.remove(&Self::key(a, b));
    }

    pub fn contains(&self, a: &EntityUri, b: &EntityUri) -> bool {
        self.pairs.contains(&Self::key(a, b))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(EntityUri, EntityUri)> {
        self.pairs.iter()
    }

    fn key(a: &EntityUri, b: &EntityUri) -> (EntityUri, EntityUri) {
        if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        }
    }
}

/// Blocks, scores and bands every target sharing a name token with the
/// record. Output is sorted by score descending, ties by target URI.
pub fn generate_candidates(
    record: &ActorRecord,
    index: &CandidateIndex,
    constraints: &Constraints,
    thresholds: &Thresholds,
    negatives: &NegativeConstraints,
) -> Vec<MatchCandidate> {
    let forms: Vec<String> = record
        .name_forms
        .iter()
        .map(|n| normalize_name(&n.value).form)
        .filter(|f| !f.is_empty())
        .collect();
    let span = record.dates.span();
    let mut out = Vec::new();
    for i in index.block(&forms) {
        let target = &index.targets[i];
        if target.uri == record.uri || negatives.contains(&record.uri, &target.uri) {
            continue;
        }
        let name_score = forms
            .iter()
            .flat_map(|a| {
                index.normalized[i]
                    .iter()
                    .map(move |b| name_similarity(a, b))
            })
            .fold(0.0, f64::max);
        let mut class_verdict = class_compatibility(record.entity_class, target.class);
        if let Some(required) = constraints.required_class {
            match class_compatibility(required, target.class) {
                Verdict::Incompatible => class_verdict = Verdict::Incompatible,
                Verdict::Unknown if class_verdict == Verdict::Compatible => {
                    class_verdict = Verdict::Unknown
                }
                _ => {}
            }
        }
        let date_verdict = date_compatibility(&span, &target.dates, thresholds.date_slack);
        let signals = Signals {
            name_score,
            date_verdict,
            class_verdict,
        };
        let score = if date_verdict == Verdict::Unknown {
            name_score * UNKNOWN_DATE_WEIGHT
        } else {
            name_score
        };
        if let Some(confidence) = MatchCandidate::classify(&signals, score, thresholds) {
            out.push(MatchCandidate {
                id: candidate_id(&record.uri, &target.uri),
                left: record.uri.clone(),
                right: target.uri.clone(),
                score,
                signals,
                confidence,
                status: Status::Pending,
            });
        }
    }
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.right.cmp(&b.right))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::NameForm;
    use crate::model::AuthorityId;

    #[test]
    fn normalizes_catalogue_names() {
        let n = normalize_name("Gavasio, Giovanni Giacomo");
        assert_eq!(n.form, "giovanni giacomo gavasio");
        assert!(!n.uncertain && !n.degenerate);

        let n = normalize_name("Beyer, Constantin?");
        assert_eq!(n.form, "constantin beyer");
        assert!(n.uncertain);

        let n = normalize_name("");
        assert_eq!(n.form, "");
        assert!(n.degenerate);

        assert_eq!(normalize_name("Lotz-Bauer, Hilde").form, "hilde lotz-bauer");
        assert_eq!(normalize_name("  Böhm  ").form, "bohm");
        assert_eq!(normalize_name("Lippo d'Andrea").form, "lippo d andrea");
        assert_eq!(normalize_name("Anderson/Brogi.").form, "anderson brogi");
        assert_eq!(normalize_name("- x -").form, "x");
        assert!(normalize_name("?!").degenerate);
    }

    #[test]
    fn similarity_basics() {
        assert_eq!(name_similarity("giovanni gavazzi", "giovanni gavazzi"), 1.0);
        assert_eq!(
            name_similarity("gavasio giovanni giacomo", "giovanni giacomo gavasio"),
            1.0
        );
        assert_eq!(name_similarity("", ""), 1.0);
        assert_eq!(name_similarity("abc", ""), 0.0);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
    }

    #[test]
    fn parses_date_forms() {
        assert_eq!(
            parse_date_spec("1375–1425").0,
            DateSpec::YearRange {
                start: 1375,
                end: 1425
            }
        );
        assert_eq!(
            parse_date_spec("1375-1425").0,
            DateSpec::YearRange {
                start: 1375,
                end: 1425
            }
        );
        assert_eq!(
            parse_date_spec("1375 - 1425").0,
            DateSpec::YearRange {
                start: 1375,
                end: 1425
            }
        );
        assert_eq!(parse_date_spec("1451"), (DateSpec::ExactYear(1451), None));
        assert_eq!(
            parse_date_spec("16th century").0.interval(),
            Some((1501, 1600))
        );
        assert_eq!(parse_date_spec("21st Century").0, DateSpec::Century(21));
        assert_eq!(parse_date_spec("1390s").0.interval(), Some((1390, 1399)));
        let (d, diag) = parse_date_spec("fl. before noon");
        assert_eq!(d, DateSpec::Unknown);
        assert!(diag.is_some());
        assert!(parse_date_spec("1425-1375").1.is_some());
        assert!(parse_date_spec("1391s").1.is_some());
        assert_eq!(parse_date_spec(""), (DateSpec::Unknown, None));
    }

    #[test]
    fn display_forms_parse_back() {
        for d in [
            DateSpec::ExactYear(1451),
            DateSpec::YearRange {
                start: 1375,
                end: 1425,
            },
            DateSpec::Century(16),
            DateSpec::Century(2),
            DateSpec::Decade(1390),
        ] {
            assert_eq!(parse_date_spec(&d.to_string()), (d, None));
        }
    }

    #[test]
    fn date_verdicts() {
        let pseudo = DateSpec::YearRange {
            start: 1375,
            end: 1425,
        };
        let ventura = DateSpec::YearRange {
            start: 1399,
            end: 1486,
        };
        let lippo = DateSpec::YearRange {
            start: 1371,
            end: 1451,
        };
        assert_eq!(
            date_compatibility(&pseudo, &ventura, 5),
            Verdict::Compatible
        );
        assert_eq!(date_compatibility(&pseudo, &lippo, 5), Verdict::Compatible);
        let early = DateSpec::YearRange {
            start: 1300,
            end: 1350,
        };
        let late = DateSpec::YearRange {
            start: 1500,
            end: 1550,
        };
        assert_eq!(date_compatibility(&early, &late, 5), Verdict::Incompatible);
        assert_eq!(
            date_compatibility(&early, &DateSpec::Unknown, 5),
            Verdict::Unknown
        );
        // Gap of 10 years closes with slack 5 on both sides.
        let a = DateSpec::ExactYear(1400);
        let b = DateSpec::ExactYear(1410);
        assert_eq!(date_compatibility(&a, &b, 5), Verdict::Compatible);
        assert_eq!(date_compatibility(&a, &b, 4), Verdict::Incompatible);
    }

    fn target(uri: &str, name: &str, class: EntityClass, dates: DateSpec) -> TargetRecord {
        TargetRecord {
            uri: EntityUri::parse(uri).unwrap(),
            names: vec![name.to_string()],
            class,
            dates,
        }
    }

    fn actor(name: &str, class: EntityClass, dates: DateSpec) -> ActorRecord {
        ActorRecord {
            uri: EntityUri::parse("https://inst.example.org/actor/1").unwrap(),
            local_id: "1".into(),
            institution: AuthorityId::local("inst").unwrap(),
            name_forms: vec![NameForm::preferred(name)],
            dates: crate::ingest::ActorDates::from_span(crate::ingest::DateKind::Life, dates),
            entity_class: class,
            asserted_links: vec![],
            extra: Default::default(),
        }
    }

    #[test]
    fn person_never_matches_organisation() {
        let idx = CandidateIndex::build(vec![target(
            "http://www.wikidata.org/entity/Q1",
            "Foto Böhm",
            EntityClass::Organisation,
            DateSpec::Unknown,
        )]);
        let rec = actor("Foto Böhm", EntityClass::Person, DateSpec::Unknown);
        let c = generate_candidates(
            &rec,
            &idx,
            &Constraints::default(),
            &Thresholds::default(),
            &Default::default(),
        );
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].confidence, Confidence::Rejected);

        let constrained = Constraints {
            required_class: Some(EntityClass::Person),
        };
        let rec = actor("Foto Böhm", EntityClass::Unknown, DateSpec::Unknown);
        let c = generate_candidates(
            &rec,
            &idx,
            &constrained,
            &Thresholds::default(),
            &Default::default(),
        );
        assert_eq!(c[0].confidence, Confidence::Rejected);
    }

    #[test]
    fn unknown_dates_only_lower_score() {
        let idx = CandidateIndex::build(vec![target(
            "http://vocab.getty.edu/ulan/500000001",
            "Ercole de' Roberti",
            EntityClass::Person,
            DateSpec::Unknown,
        )]);
        let rec = actor("Ercole de' Roberti", EntityClass::Person, DateSpec::Unknown);
        let c = generate_candidates(
            &rec,
            &idx,
            &Constraints::default(),
            &Thresholds::default(),
            &Default::default(),
        );
        assert_eq!(c[0].confidence, Confidence::Review);
        assert!((c[0].score - UNKNOWN_DATE_WEIGHT).abs() < 1e-12);
    }

    #[test]
    fn empty_index_and_negatives() {
        let rec = actor("Anyone", EntityClass::Person, DateSpec::Unknown);
        let empty = CandidateIndex::build(vec![]);
        assert!(generate_candidates(
            &rec,
            &empty,
            &Constraints::default(),
            &Thresholds::default(),
            &Default::default()
        )
        .is_empty());

        let t = target(
            "http://vocab.getty.edu/ulan/1",
            "Anyone",
            EntityClass::Person,
            DateSpec::Unknown,
        );
        let mut neg = NegativeConstraints::default();
        neg.insert(&t.uri, &rec.uri);
        let idx = CandidateIndex::build(vec![t]);
        assert!(generate_candidates(
            &rec,
            &idx,
            &Constraints::default(),
            &Thresholds::default(),
            &neg
        )
        .is_empty());
    }

    #[test]
    fn ties_break_on_target_uri() {
        let idx = CandidateIndex::build(vec![
            target(
                "http://vocab.getty.edu/ulan/2",
                "Maso",
                EntityClass::Person,
                DateSpec::Century(14),
            ),
            target(
                "http://vocab.getty.edu/ulan/1",
                "Maso",
                EntityClass::Person,
                DateSpec::Century(14),
            ),
        ]);
        let rec = actor("Maso", EntityClass::Person, DateSpec::Century(14));
        let c = generate_candidates(
            &rec,
            &idx,
            &Constraints::default(),
            &Thresholds::default(),
            &Default::default(),
        );
        assert_eq!(c.len(), 2);
        assert!(c[0].right < c[1].right);
    }

    #[test]
    fn threshold_validation() {
        assert!(Thresholds::default().validate().is_ok());
        let bad = Thresholds {
            confident: 0.7,
            review: 0.8,
            date_slack: 5,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn candidate_id_is_order_free() {
        let a = EntityUri::parse("https://a.org/1").unwrap();
        let b = EntityUri::parse("https://a.org/2").unwrap();
        assert_eq!(candidate_id(&a, &b), candidate_id(&b, &a));
        assert_ne!(candidate_id(&a, &a), candidate_id(&a, &b));
    }
}
