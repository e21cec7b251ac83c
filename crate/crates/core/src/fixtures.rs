//! Reproducible fixtures: the worked reconciliation examples and a seeded
//! synthetic corpus with known conflicts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harmonizer::ConflictKind;
use crate::harmonizer::{Harmonizer, PriorityOrder};
use crate::ingest::{
    ActorDates, ActorRecord, AssertedLink, ColumnMapping, DateKind, EntityClass, NameForm,
};
use crate::matcher::{
    generate_candidates, name_similarity, normalize_name, CandidateIndex, Confidence, Constraints,
    MatchCandidate, NegativeConstraints, TargetRecord, Thresholds,
};
use crate::merge::{FacetEntity, ReconciledEntity, TitleChoice};
use crate::model::{
    AuthorityId, AuthorityTable, BatchContext, Certainty, DateSpec, EntityUri, LinkKind, Method,
    Namespace, Object, Predicate, Statement,
};
use crate::modeling::{
    normalize_place, AnonymousEntity, MaterialLevels, Modeler, PlaceHierarchy, UmbrellaTerm,
};
use crate::provider::{write_record, MapProvider, RemoteRecord};
use crate::review::{AssociativeKind, DecisionRequest, ReviewContext, ReviewDecision, Verdict};

pub const LOC: &str = "http://id.loc.gov/authorities/names/";
pub const GND: &str = "https://d-nb.info/gnd/";
pub const ULAN: &str = "http://vocab.getty.edu/ulan/";
pub const VIAF: &str = "http://viaf.org/viaf/";
pub const WIKIDATA: &str = "http://www.wikidata.org/entity/";

/// Base of the record URIs used by fixture institutions.
pub const INSTITUTION_BASE: &str = "https://data.artrecon.example/";

pub fn uri(s: &str) -> EntityUri {
    EntityUri::parse(s).expect("fixture URI")
}

fn at(prefix: &str, id: impl std::fmt::Display) -> EntityUri {
    uri(&format!("{prefix}{id}"))
}

pub fn institution_uri(institution: &str, local_id: &str) -> EntityUri {
    uri(&format!("{INSTITUTION_BASE}{institution}/actor/{local_id}"))
}

fn exact(target: EntityUri) -> AssertedLink {
    AssertedLink {
        target,
        kind: LinkKind::ExactMatch,
        certainty: Default::default(),
    }
}

pub fn actor(institution: &str, local_id: &str, name: &str, links: Vec<EntityUri>) -> ActorRecord {
    ActorRecord {
        uri: institution_uri(institution, local_id),
        local_id: local_id.to_string(),
        institution: AuthorityId::local(institution).expect("fixture institution"),
        name_forms: vec![NameForm::preferred(name)],
        dates: ActorDates::default(),
        entity_class: EntityClass::Person,
        asserted_links: links.into_iter().map(exact).collect(),
        extra: BTreeMap::new(),
    }
}

/// "Bazzi Giovanni Antonio" as reconciled by the Zeri photo archive.
pub fn bazzi() -> (ActorRecord, MapProvider) {
    let mut record = actor(
        "zeri",
        "bazzi-giovanni-antonio",
        "Bazzi Giovanni Antonio",
        vec![
            at(ULAN, 500015183),
            at(VIAF, 311436515),
            at(VIAF, 76586951),
            at(WIKIDATA, "Q8506"),
        ],
    );
    record.dates = ActorDates::life(DateSpec::ExactYear(1477), DateSpec::ExactYear(1549));
    let provider = MapProvider::new().with(
        RemoteRecord::new(at(WIKIDATA, "Q8506"))
            .link(at(VIAF, 76586951))
            .link(at(VIAF, "125158790735238852393")),
    );
    (record, provider)
}

/// Cluster expected from [`bazzi`] under the default priority order.
pub fn bazzi_expected() -> BTreeMap<AuthorityId, EntityUri> {
    BTreeMap::from([
        (AuthorityId::new("ulan").unwrap(), at(ULAN, 500015183)),
        (AuthorityId::new("wikidata").unwrap(), at(WIKIDATA, "Q8506")),
    ])
}

pub fn bazzi_viaf_candidates() -> BTreeSet<EntityUri> {
    [
        at(VIAF, 311436515),
        at(VIAF, 76586951),
        at(VIAF, "125158790735238852393"),
    ]
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundTripVariant {
    /// The institution asserts LoC A; A → WD B → LoC C.
    InstitutionEndorsesA,
    /// The institution asserts only WD B, which links both LoC A and LoC C.
    WikidataOnly,
}

/// LoC A, WD B and LoC C of the round-trip fixture.
pub fn round_trip_uris() -> (EntityUri, EntityUri, EntityUri) {
    (
        at(LOC, "n79000001"),
        at(WIKIDATA, "Q1000001"),
        at(LOC, "n79000002"),
    )
}

pub fn round_trip(variant: RoundTripVariant) -> (ActorRecord, MapProvider) {
    let (a, b, c) = round_trip_uris();
    match variant {
        RoundTripVariant::InstitutionEndorsesA => {
            let record = actor("frick", "rt-1", "Round Trip Painter", vec![a.clone()]);
            let provider = MapProvider::new()
                .with(RemoteRecord::new(a).link(b.clone()))
                .with(RemoteRecord::new(b.clone()).link(c.clone()))
                .with(RemoteRecord::new(c).link(b));
            (record, provider)
        }
        RoundTripVariant::WikidataOnly => {
            let record = actor("frick", "rt-2", "Round Trip Painter", vec![b.clone()]);
            let provider = MapProvider::new()
                .with(RemoteRecord::new(b.clone()).link(a.clone()).link(c.clone()))
                .with(RemoteRecord::new(a).link(b.clone()))
                .with(RemoteRecord::new(c).link(b));
            (record, provider)
        }
    }
}

/// Parameters of [`make_fixtures`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub seed: u64,
    pub clusters: usize,
    /// Number of clusters that receive exactly one injected conflict.
    pub conflicts: usize,
    /// Share of clusters whose asserted ULAN URI is deprecated.
    pub deprecation_rate: f64,
    /// Share of conflicts injected as broken round trips rather than
    /// duplicates.
    pub broken_share: f64,
}

impl FixtureConfig {
    pub fn new(seed: u64, clusters: usize, conflicts: usize) -> Self {
        FixtureConfig {
            seed,
            clusters,
            conflicts,
            deprecation_rate: 0.2,
            broken_share: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub record: EntityUri,
    pub conflict: Option<ConflictKind>,
    pub deprecated: bool,
}

/// Ground truth written alongside a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: FixtureConfig,
    pub clusters: Vec<ManifestEntry>,
    pub conflicted: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct FixtureCorpus {
    pub records: Vec<ActorRecord>,
    pub provider: MapProvider,
    pub manifest: Manifest,
}

pub const FIXTURE_INSTITUTIONS: [&str; 3] = ["frick", "hertziana", "zeri"];

const SYLLABLES: [&str; 16] = [
    "bar", "to", "lo", "me", "ri", "ca", "van", "del", "ghe", "sa", "ni", "vel", "mar", "tin",
    "ber", "go",
];

fn made_up_name(rng: &mut ChaCha8Rng) -> String {
    let mut part = |n: usize| {
        let s: String = (0..n)
            .map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())])
            .collect();
        let mut c = s.chars();
        c.next()
            .map(|f| f.to_uppercase().collect::<String>() + c.as_str())
            .unwrap_or_default()
    };
    let surname = part(3);
    let given = part(2);
    format!("{surname}, {given}")
}

/// Generates `config.clusters` actor records, each reconciled to at least
/// two authorities, with exactly `config.conflicts` of them carrying one
/// injected conflict. Byte-reproducible from the seed.
pub fn make_fixtures(config: &FixtureConfig) -> Result<FixtureCorpus> {
    if config.conflicts > config.clusters {
        return Err(crate::Error::Config(format!(
            "{} conflicts requested for {} clusters",
            config.conflicts, config.clusters
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..config.clusters).collect();
    order.shuffle(&mut rng);
    let conflicted: BTreeSet<usize> = order.into_iter().take(config.conflicts).collect();

    let mut records = Vec::new();
    let mut provider = MapProvider::new();
    let mut entries = Vec::new();
    for i in 0..config.clusters {
        let id = format!("c{i:04}");
        let institution = FIXTURE_INSTITUTIONS[i % FIXTURE_INSTITUTIONS.len()];
        let n = 1000 + i;
        let loc = at(LOC, format!("n5{n:07}"));
        let wd = at(WIKIDATA, format!("Q7{n:06}"));
        let ulan = at(ULAN, format!("5001{n:05}"));

        let deprecated = rng.random_bool(config.deprecation_rate);
        let asserted_ulan = if deprecated {
            let old = at(ULAN, format!("5009{n:05}"));
            provider.insert(RemoteRecord::new(old.clone()).replaced_by(ulan.clone()));
            old
        } else {
            ulan.clone()
        };

        let mut loc_rec = RemoteRecord::new(loc.clone());
        let mut wd_rec = RemoteRecord::new(wd.clone()).link(ulan.clone());
        let ulan_rec = RemoteRecord::new(ulan.clone()).link(wd.clone());
        let mut asserted = vec![loc.clone(), asserted_ulan];

        let conflict = if conflicted.contains(&i) {
            if rng.random_bool(config.broken_share) {
                // LoC → WD → a different LoC record that links back to WD.
                let other = at(LOC, format!("n6{n:07}"));
                loc_rec = loc_rec.link(wd.clone());
                wd_rec = wd_rec.link(other.clone());
                provider.insert(RemoteRecord::new(other).link(wd.clone()));
                Some(ConflictKind::BrokenRoundTrip)
            } else {
                // Two VIAF clusters for the same person.
                let v1 = at(VIAF, format!("9{n:08}"));
                let v2 = at(VIAF, format!("8{n:08}"));
                asserted.push(v1);
                wd_rec = wd_rec.link(v2).link(loc.clone());
                loc_rec = loc_rec.link(wd.clone());
                Some(ConflictKind::DuplicateInAuthority)
            }
        } else {
            loc_rec = loc_rec.link(wd.clone());
            wd_rec = wd_rec.link(loc.clone());
            None
        };
        provider.insert(loc_rec);
        provider.insert(wd_rec);
        provider.insert(ulan_rec);

        let mut record = actor(institution, &id, &made_up_name(&mut rng), asserted);
        let birth = rng.random_range(1300..1850);
        let death = birth + rng.random_range(25..85);
        record.dates = ActorDates::life(DateSpec::ExactYear(birth), DateSpec::ExactYear(death));
        entries.push(ManifestEntry {
            id: id.clone(),
            record: record.uri.clone(),
            conflict,
            deprecated,
        });
        records.push(record);
    }
    let manifest = Manifest {
        config: config.clone(),
        conflicted: entries
            .iter()
            .filter(|e| e.conflict.is_some())
            .map(|e| e.id.clone())
            .collect(),
        clusters: entries,
    };
    Ok(FixtureCorpus {
        records,
        provider,
        manifest,
    })
}

/// Column mapping used for the CSV files written by [`write_corpus`].
pub fn fixture_mapping(institution: &str) -> ColumnMapping {
    let mut m = ColumnMapping::new(
        institution,
        &format!("{INSTITUTION_BASE}{institution}/actor/"),
        "id",
    );
    m.name = Some("name".into());
    m.dates = Some("dates".into());
    m.class = Some("class".into());
    m.links = Some("links".into());
    m
}

/// Writes records as per-institution CSV files with their mapping, plus
/// one JSON file per provider record.
///
/// Layout: `actors/<institution>.csv`, `actors/<institution>.mapping.json`,
/// `authority/<hash>.json`.
pub fn write_corpus(dir: &Path, records: &[ActorRecord], provider: &MapProvider) -> Result<()> {
    let actors = dir.join("actors");
    fs::create_dir_all(&actors)?;
    let mut by_inst: BTreeMap<String, Vec<&ActorRecord>> = BTreeMap::new();
    for r in records {
        let inst = r
            .institution
            .as_str()
            .trim_start_matches("local:")
            .to_string();
        by_inst.entry(inst).or_default().push(r);
    }
    for (inst, recs) in by_inst {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "name", "dates", "class", "links"])?;
        for r in recs {
            let dates = match r.dates.span() {
                DateSpec::Unknown => String::new(),
                s => s.to_string(),
            };
            let links: Vec<String> = r
                .asserted_links
                .iter()
                .map(|l| match l.kind {
                    LinkKind::ExactMatch => l.target.to_string(),
                    k => format!("{}={}", k.name(), l.target),
                })
                .collect();
            w.write_record([
                r.local_id.as_str(),
                r.display_name(),
                &dates,
                r.entity_class.name(),
                &links.join(";"),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| crate::Error::Io(e.into_error()))?;
        fs::write(actors.join(format!("{inst}.csv")), bytes)?;
        let mapping = serde_json::to_string_pretty(&fixture_mapping(&inst))? + "\n";
        fs::write(actors.join(format!("{inst}.mapping.json")), mapping)?;
    }
    let authority = dir.join("authority");
    fs::create_dir_all(&authority)?;
    for r in provider.records() {
        write_record(&authority, r)?;
    }
    Ok(())
}

impl FixtureCorpus {
    /// Writes the corpus plus `manifest.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_corpus(dir, &self.records, &self.provider)?;
        let manifest = serde_json::to_string_pretty(&self.manifest)? + "\n";
        fs::write(dir.join("manifest.json"), manifest)?;
        Ok(())
    }
}

pub const AAT: &str = "http://vocab.getty.edu/aat/";

fn local(path: &str) -> EntityUri {
    uri(&format!("{INSTITUTION_BASE}{path}"))
}

/// Batch context shared by the modeling fixture.
pub fn modeling_context() -> BatchContext {
    BatchContext::new(
        Namespace::parse(INSTITUTION_BASE).expect("fixture namespace"),
        "modeling",
        Utc.with_ymd_and_hms(2025, 3, 1, 0, 0, 0).unwrap(),
    )
}

/// Statements produced for the ambiguity cases, together with the entities
/// minted to carry ambiguity.
#[derive(Debug, Clone)]
pub struct ModelingFixture {
    pub statements: Vec<Statement>,
    /// Anonymous groups, collective names, umbrellas and diverging identities.
    pub ambiguous: BTreeSet<EntityUri>,
    pub umbrellas: Vec<UmbrellaTerm>,
    pub diagnostics: Vec<String>,
}

/// The uncertainty cases worked through in the reconciliation of artists,
/// photographers, materials and keepers.
pub fn modeling_fixture() -> Result<ModelingFixture> {
    let ctx = modeling_context();
    let modeler = Modeler::new(ctx.clone(), AuthorityId::local("curation")?);
    let zeri = ctx.provenance(AuthorityId::local("zeri")?, Method::Asserted);
    let mut statements = Vec::new();
    let mut ambiguous = BTreeSet::new();
    let mut umbrellas = Vec::new();
    let mut diagnostics = Vec::new();

    let mut anonymous = |entity: AnonymousEntity, statements: &mut Vec<Statement>| {
        statements.extend(modeler.describe(&entity));
        ambiguous.insert(entity.uri.clone());
        entity
    };

    // Family name used for any member of the family.
    anonymous(modeler.mint_collective_name("Bellini")?, &mut statements);
    // Same space-time frame from two catalogues.
    anonymous(
        modeler.mint_anonymous_group("Florentine", DateSpec::century(16)?)?,
        &mut statements,
    );
    anonymous(
        modeler.mint_anonymous_group("florentine ", DateSpec::century(16)?)?,
        &mut statements,
    );
    // "Beyer, ?": no guess is possible, so no candidate links at all.
    anonymous(
        modeler.mint_anonymous_group("Beyer", DateSpec::Unknown)?,
        &mut statements,
    );
    anonymous(
        modeler.mint_anonymous_owner("Private collection, Milan")?,
        &mut statements,
    );

    let leonardo = local("zeri/actor/leonardo-da-vinci");
    let school = modeler.mint_qualified_attribution(&leonardo, "Leonardo da Vinci", "school")?;
    let ambiguous_school = school.entity.uri.clone();
    statements.extend(school.statements);
    diagnostics.extend(school.diagnostic);

    // Person, studio and the undecidable string.
    let bohm_collective = anonymous(modeler.mint_collective_name("Böhm")?, &mut statements);
    let bohm_members: BTreeSet<EntityUri> = [
        local("zeri/actor/osvaldo-bohm"),
        local("zeri/actor/foto-bohm"),
        bohm_collective.uri,
    ]
    .into();
    let (bohm, st) = modeler.mint_umbrella("Böhm", &bohm_members)?;
    statements.extend(st);
    umbrellas.push(bohm);

    // Successive names of one studio; only one form matched an external record.
    let armoni = [
        local("zeri/actor/armoni"),
        local("zeri/actor/armoni-e-raffaelli"),
        local("zeri/actor/armoni-raffaelli-moretti"),
    ];
    statements.push(ctx.statement(
        armoni[1].clone(),
        Predicate::Link(LinkKind::ExactMatch),
        local("external/luigi-armoni-raffaelli"),
        &zeri,
    ));
    let (armoni_umbrella, st) = modeler.mint_umbrella(
        "Armoni Raffaelli Moretti",
        &armoni.iter().cloned().collect(),
    )?;
    statements.extend(st);
    umbrellas.push(armoni_umbrella);

    let braun: BTreeSet<EntityUri> = [
        local("zeri/actor/maison-adolphe-braun-cie"),
        local("zeri/actor/braun-clement-cie"),
    ]
    .into();
    statements.push(ctx.statement(
        local("zeri/actor/maison-adolphe-braun-cie"),
        Predicate::Link(LinkKind::ExactMatch),
        at(WIKIDATA, "Q79493769"),
        &zeri,
    ));
    let (braun_umbrella, st) = modeler.mint_umbrella("Braun", &braun)?;
    statements.extend(st);
    umbrellas.push(braun_umbrella);

    // Commissioning institution and a subdivision with no record of its own.
    let rijks: BTreeSet<EntityUri> = [
        at(WIKIDATA, "Q190804"),
        local("zeri/actor/fotocommissie-rijksmuseum"),
    ]
    .into();
    let (rijks_umbrella, st) = modeler.mint_umbrella("Rijksmuseum", &rijks)?;
    statements.extend(st);
    umbrellas.push(rijks_umbrella);

    for (label, candidates) in [
        (
            "Pseudo Ambrogio di Baldese",
            vec![at(ULAN, 500012920), at(ULAN, 500082343)],
        ),
        ("Ercole Grandi", vec![at(ULAN, 500124891)]),
    ] {
        let (entity, st) =
            modeler.link_diverging_identity(label, &candidates.into_iter().collect())?;
        ambiguous.insert(entity);
        statements.extend(st);
    }

    let (_, st) = modeler.assert_material_levels(
        "albumen",
        &MaterialLevels {
            material: Some(at(AAT, 300011802)),
            process: Some(at(AAT, 300133274)),
            object_type: Some(at(AAT, 300127121)),
        },
    )?;
    statements.extend(st);

    let anderson_brogi = local("zeri/photo/anderson-brogi");
    statements.extend(modeler.assert_alternative_attribution(
        &anderson_brogi,
        &[local("zeri/actor/anderson"), local("zeri/actor/brogi")],
        &zeri,
    )?);

    // "Beyer, Constantin?": the identification stands, the attribution of
    // this photograph is qualified.
    let beyer = local("zeri/actor/beyer-constantin");
    statements.push(ctx.statement(
        beyer.clone(),
        Predicate::Link(LinkKind::ExactMatch),
        at(WIKIDATA, "Q95218985"),
        &zeri,
    ));
    let creator = ctx.statement(
        local("zeri/photo/beyer-1"),
        Predicate::vocab("creator"),
        beyer,
        &zeri,
    );
    statements.push(modeler.qualify(&creator, Certainty::Uncertain, ctx.retrieved_at));
    statements.push(creator);

    let lotz_bauer = at(WIKIDATA, "Q1618235");
    for (photo, form) in [
        ("zeri/photo/lotz-bauer-1", "Lotz-Bauer, Hilde"),
        ("zeri/photo/lotz-bauer-2", "Degenhart-Bauer, Hilde"),
        ("zeri/photo/lotz-bauer-3", "Bauer Lotz, H."),
    ] {
        let (_, st) = modeler.record_name_form(&local(photo), form, &lotz_bauer)?;
        statements.extend(st);
    }

    let london = local("place/london");
    let westminster = local("place/city-of-westminster");
    let places = PlaceHierarchy::default()
        .with_parent(westminster.clone(), london.clone())
        .with_parent(london.clone(), local("place/england"))
        .with_city(london);
    let city = normalize_place(&westminster, &places)?;
    statements.push(ctx.statement(
        local("zeri/actor/national-gallery-london"),
        Predicate::Link(LinkKind::LocatedIn),
        city.place,
        &zeri,
    ));

    ambiguous.insert(ambiguous_school);
    ambiguous.extend(umbrellas.iter().map(|u| u.uri.clone()));
    statements.sort();
    statements.dedup();
    Ok(ModelingFixture {
        statements,
        ambiguous,
        umbrellas,
        diagnostics,
    })
}

/// Records, harmonized entities, match candidates and a decision log for
/// exercising review replay.
#[derive(Debug, Clone)]
pub struct ReviewFixture {
    pub records: Vec<ActorRecord>,
    pub provider: MapProvider,
    pub entities: Vec<ReconciledEntity>,
    pub candidates: BTreeMap<String, MatchCandidate>,
    pub log: Vec<ReviewDecision>,
    pub context: ReviewContext,
}

impl ReviewFixture {
    /// A fresh match run of every base record against the other records,
    /// honouring `negatives`.
    pub fn match_run(&self, negatives: &NegativeConstraints) -> Vec<MatchCandidate> {
        match_records(&self.records, negatives)
    }
}

fn match_records(records: &[ActorRecord], negatives: &NegativeConstraints) -> Vec<MatchCandidate> {
    let mut out = Vec::new();
    for r in records.iter().filter(|r| r.local_id.starts_with('c')) {
        let targets: Vec<TargetRecord> = records
            .iter()
            .filter(|t| t.institution != r.institution && !t.local_id.starts_with('c'))
            .map(TargetRecord::from)
            .collect();
        let index = CandidateIndex::build(targets);
        out.extend(generate_candidates(
            r,
            &index,
            &Constraints::default(),
            &Thresholds::default(),
            negatives,
        ));
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out.dedup_by(|a, b| a.id == b.id);
    out
}

pub const REVIEW_LOG_SIZE: usize = 50;

/// Base records from the synthetic corpus, a twin of each held by another
/// institution, and namesakes living centuries apart. The log accepts twins
/// (some only after an earlier reject), rejects namesakes and defers or
/// relates the rest, `REVIEW_LOG_SIZE` decisions in all.
pub fn review_fixture(seed: u64) -> Result<ReviewFixture> {
    let corpus = make_fixtures(&FixtureConfig::new(seed, 35, 6))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut records = corpus.records.clone();
    let mut kinds: BTreeMap<EntityUri, &str> = BTreeMap::new();
    for (i, base) in corpus.records.iter().enumerate() {
        let inst = FIXTURE_INSTITUTIONS[(i + 1) % FIXTURE_INSTITUTIONS.len()];
        let wd = at(WIKIDATA, format!("Q7{:06}", 1000 + i));
        let mut twin = actor(inst, &format!("t{i:04}"), base.display_name(), vec![wd]);
        twin.dates = base.dates;
        kinds.insert(twin.uri.clone(), "twin");
        records.push(twin);
        if i % 3 == 0 {
            let inst = FIXTURE_INSTITUTIONS[(i + 2) % FIXTURE_INSTITUTIONS.len()];
            let mut namesake = actor(inst, &format!("n{i:04}"), base.display_name(), vec![]);
            let shift = DateSpec::ExactYear(base.dates.first.start_year().unwrap_or(1500) + 300);
            namesake.dates = ActorDates::life(shift, DateSpec::Unknown);
            kinds.insert(namesake.uri.clone(), "namesake");
            records.push(namesake);
        }
    }

    let context = ReviewContext {
        table: AuthorityTable::default_table(),
        priority: PriorityOrder::default(),
        context: modeling_context(),
    };
    let harmonizer = Harmonizer::new(
        context.table.clone(),
        context.priority.clone(),
        context.context.clone(),
    );
    let entities = records
        .iter()
        .map(|r| {
            harmonizer
                .harmonize_cluster(r, &corpus.provider)
                .map(ReconciledEntity::from_cluster)
        })
        .collect::<Result<Vec<_>>>()?;
    let found = match_records(&records, &NegativeConstraints::default());
    let candidates: BTreeMap<String, MatchCandidate> =
        found.iter().map(|c| (c.id.clone(), c.clone())).collect();

    let reviewer =
        |inst: &AuthorityId| format!("curator@{}", inst.as_str().trim_start_matches("local:"));
    let mut requests: Vec<DecisionRequest> = Vec::new();
    let mut superseded = 0;
    for c in &found {
        let institution = FIXTURE_INSTITUTIONS[rng.random_range(0..FIXTURE_INSTITUTIONS.len())];
        let institution = AuthorityId::local(institution)?;
        let request = |verdict| DecisionRequest {
            candidate_id: c.id.clone(),
            reviewer: reviewer(&institution),
            institution: institution.clone(),
            verdict,
            preferred_title: None,
        };
        match kinds.get(&c.right).copied() {
            Some("twin") => {
                if superseded < 5 {
                    requests.push(request(Verdict::Reject));
                    superseded += 1;
                }
                let mut accept = request(Verdict::AcceptEquivalent);
                if rng.random_bool(0.3) {
                    let name = records
                        .iter()
                        .find(|r| r.uri == c.left)
                        .map(|r| r.display_name().to_string());
                    accept.preferred_title = Some(match (rng.random_bool(0.5), name) {
                        (true, Some(n)) => TitleChoice::Mark(n),
                        _ => TitleChoice::Create(format!("Painter {}", c.id)),
                    });
                }
                requests.push(accept);
            }
            Some("namesake") => requests.push(request(Verdict::Reject)),
            _ => requests.push(request(if rng.random_bool(0.5) {
                Verdict::Defer
            } else {
                Verdict::AcceptAssociative {
                    kind: AssociativeKind::Related,
                }
            })),
        }
    }
    // Interleave deterministically so supersession spans the log.
    requests.shuffle(&mut rng);
    let mut seen_accept: BTreeSet<String> = BTreeSet::new();
    for r in &mut requests {
        // A reject superseded by an accept must come first.
        if r.verdict == Verdict::AcceptEquivalent {
            seen_accept.insert(r.candidate_id.clone());
        }
    }
    requests.sort_by_key(|r| {
        (
            r.verdict != Verdict::Reject || !seen_accept.contains(&r.candidate_id),
            0,
        )
    });
    requests.truncate(REVIEW_LOG_SIZE);
    let start = context.context.retrieved_at;
    let log = requests
        .into_iter()
        .enumerate()
        .map(|(i, request)| ReviewDecision {
            sequence: i as u64 + 1,
            timestamp: start + chrono::Duration::minutes(i as i64),
            request,
            idempotency_key: Some(format!("fixture-{i}")),
        })
        .collect();
    Ok(ReviewFixture {
        records,
        provider: corpus.provider,
        entities,
        candidates,
        log,
        context,
    })
}

/// One query record of the labeled matching fixture and the target it
/// truly denotes, if any.
#[derive(Debug, Clone)]
pub struct LabeledQuery {
    pub record: ActorRecord,
    pub truth: Option<EntityUri>,
    pub kind: &'static str,
}

#[derive(Debug, Clone)]
pub struct LabeledMatchFixture {
    pub targets: Vec<TargetRecord>,
    pub queries: Vec<LabeledQuery>,
}

pub const LABELED_QUERIES: usize = 200;
pub const GAVASIO: &str = "Gavasio, Giovanni Giacomo";
pub const GAVAZZI: &str = "Gavazzi Giovanni";
pub const GAVASIO_ULAN: &str = "http://vocab.getty.edu/ulan/500999001";

/// Precision and recall of the confident band against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEvaluation {
    pub confident: usize,
    pub true_confident: usize,
    pub positives: usize,
    /// 1.0 when nothing is confident.
    pub precision: f64,
    pub recall: f64,
}

impl LabeledMatchFixture {
    pub fn index(&self) -> CandidateIndex {
        CandidateIndex::build(self.targets.clone())
    }

    pub fn query(&self, name: &str) -> Option<&LabeledQuery> {
        self.queries
            .iter()
            .find(|q| q.record.name_forms.iter().any(|n| n.value == name))
    }

    pub fn evaluate(&self, thresholds: &Thresholds) -> BandEvaluation {
        let index = self.index();
        let (mut confident, mut true_confident, mut found) = (0, 0, 0);
        for q in &self.queries {
            let cands = generate_candidates(
                &q.record,
                &index,
                &Constraints::default(),
                thresholds,
                &NegativeConstraints::default(),
            );
            let mut hit = false;
            for c in cands
                .iter()
                .filter(|c| c.confidence == Confidence::Confident)
            {
                confident += 1;
                if Some(&c.right) == q.truth.as_ref() {
                    true_confident += 1;
                    hit = true;
                }
            }
            found += usize::from(hit);
        }
        let positives = self.queries.iter().filter(|q| q.truth.is_some()).count();
        BandEvaluation {
            confident,
            true_confident,
            positives,
            precision: if confident == 0 {
                1.0
            } else {
                true_confident as f64 / confident as f64
            },
            recall: if positives == 0 {
                1.0
            } else {
                found as f64 / positives as f64
            },
        }
    }
}

fn vary_case(name: &str, rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..3) {
        0 => name.to_string(),
        1 => name.to_uppercase(),
        _ => match name.split_once(", ") {
            Some((surname, given)) => format!("{given} {surname}"),
            None => name.to_string(),
        },
    }
}

fn one_letter_off(name: &str, rng: &mut ChaCha8Rng) -> String {
    let chars: Vec<char> = name.chars().collect();
    let letters: Vec<usize> = (1..chars.len())
        .filter(|&i| chars[i].is_ascii_lowercase())
        .collect();
    let i = letters[rng.random_range(0..letters.len())];
    let mut out = chars.clone();
    out[i] = if chars[i] == 'x' { 'y' } else { 'x' };
    out.into_iter().collect()
}

/// An authority index of 150 people and organisations plus 200 labeled
/// query records: spelling and order variants of indexed people, one-letter
/// typos, namesakes centuries apart, organisations sharing a person's name,
/// unrelated names, undated variants, and the Gavasio and Gavazzi records.
/// Indexed and unrelated names are drawn so that no two distinct identities
/// reach the confident name score, so every label is unambiguous.
pub fn labeled_match_fixture(seed: u64) -> LabeledMatchFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let confident = Thresholds::default().confident;
    let mut forms: Vec<String> = vec![normalize_name(GAVASIO).form];
    let mut fresh = |rng: &mut ChaCha8Rng| loop {
        let name = made_up_name(rng);
        let form = normalize_name(&name).form;
        if forms.iter().all(|f| name_similarity(f, &form) < confident) {
            forms.push(form);
            return name;
        }
    };

    let mut people: Vec<(TargetRecord, String, i32, i32)> = Vec::new();
    let mut targets = vec![TargetRecord {
        uri: uri(GAVASIO_ULAN),
        names: vec![GAVASIO.to_string()],
        class: EntityClass::Person,
        dates: DateSpec::YearRange {
            start: 1480,
            end: 1540,
        },
    }];
    for i in 0..150 {
        let name = fresh(&mut rng);
        let birth = rng.random_range(1300..1850);
        let death = birth + rng.random_range(25..85);
        let class = if i % 10 == 9 {
            EntityClass::Organisation
        } else {
            EntityClass::Person
        };
        let t = TargetRecord {
            uri: at(ULAN, 500_100_000 + i),
            names: vec![name.clone()],
            class,
            dates: DateSpec::YearRange {
                start: birth,
                end: death,
            },
        };
        if class == EntityClass::Person {
            people.push((t.clone(), name, birth, death));
        }
        targets.push(t);
    }

    let mut queries = Vec::new();
    fn push(
        queries: &mut Vec<LabeledQuery>,
        name: String,
        class: EntityClass,
        dates: ActorDates,
        truth: Option<EntityUri>,
        kind: &'static str,
    ) {
        let n = queries.len();
        let mut record = actor(
            FIXTURE_INSTITUTIONS[n % 3],
            &format!("q{n:04}"),
            &name,
            vec![],
        );
        record.entity_class = class;
        record.dates = dates;
        queries.push(LabeledQuery {
            record,
            truth,
            kind,
        });
    }
    let life = |a: i32, b: i32| ActorDates::life(DateSpec::ExactYear(a), DateSpec::ExactYear(b));
    push(
        &mut queries,
        GAVASIO.into(),
        EntityClass::Person,
        life(1485, 1535),
        Some(uri(GAVASIO_ULAN)),
        "gavasio",
    );
    push(
        &mut queries,
        GAVAZZI.into(),
        EntityClass::Person,
        life(1485, 1535),
        None,
        "gavazzi",
    );
    let pick = |rng: &mut ChaCha8Rng| people[rng.random_range(0..people.len())].clone();
    let active = |rng: &mut ChaCha8Rng, b: i32, d: i32| {
        let s = rng.random_range(b..d);
        ActorDates::from_span(
            DateKind::Activity,
            DateSpec::YearRange {
                start: s,
                end: rng.random_range(s..=d),
            },
        )
    };
    for _ in 0..90 {
        let (t, name, b, d) = pick(&mut rng);
        let dates = if rng.random_bool(0.5) {
            life(b, d)
        } else {
            active(&mut rng, b, d)
        };
        push(
            &mut queries,
            vary_case(&name, &mut rng),
            EntityClass::Person,
            dates,
            Some(t.uri),
            "variant",
        );
    }
    for _ in 0..15 {
        let (t, name, ..) = pick(&mut rng);
        push(
            &mut queries,
            name,
            EntityClass::Person,
            ActorDates::default(),
            Some(t.uri),
            "undated",
        );
    }
    for _ in 0..30 {
        let (t, name, b, d) = pick(&mut rng);
        push(
            &mut queries,
            one_letter_off(&name, &mut rng),
            EntityClass::Person,
            life(b, d),
            Some(t.uri),
            "typo",
        );
    }
    for _ in 0..25 {
        let (_, name, b, d) = pick(&mut rng);
        let shift = if b > 1600 { -300 } else { 300 };
        push(
            &mut queries,
            name,
            EntityClass::Person,
            life(b + shift, d + shift),
            None,
            "namesake",
        );
    }
    for _ in 0..15 {
        let (_, name, b, d) = pick(&mut rng);
        push(
            &mut queries,
            name,
            EntityClass::Organisation,
            life(b, d),
            None,
            "organisation",
        );
    }
    while queries.len() < LABELED_QUERIES {
        let (_, name, b, d) = pick(&mut rng);
        // Shares the given name, so blocking still pairs it with the target.
        let given = name.split_once(", ").map_or("", |(_, g)| g).to_string();
        let other = fresh(&mut rng);
        let surname = other.split_once(", ").map_or(other.as_str(), |(s, _)| s);
        let candidate = format!("{surname}, {given}");
        let form = normalize_name(&candidate).form;
        if targets
            .iter()
            .all(|t| name_similarity(&normalize_name(&t.names[0]).form, &form) < confident)
        {
            push(
                &mut queries,
                candidate,
                EntityClass::Person,
                life(b, d),
                None,
                "unrelated",
            );
        }
    }
    LabeledMatchFixture { targets, queries }
}

/// Facet entities for every umbrella member of the modeling fixture, with
/// labels and a few attributed artworks, alongside the umbrellas.
pub fn facet_fixture() -> Result<(Vec<FacetEntity>, Vec<UmbrellaTerm>)> {
    let fixture = modeling_fixture()?;
    let label_predicate = Predicate::vocab("label");
    let labels: BTreeMap<&EntityUri, &str> = fixture
        .statements
        .iter()
        .filter(|s| s.predicate == label_predicate)
        .filter_map(|s| match &s.object {
            Object::Literal(l) => Some((&s.subject, l.value.as_str())),
            Object::Uri(_) => None,
        })
        .collect();
    let mut entities: BTreeMap<EntityUri, FacetEntity> = BTreeMap::new();
    let mut work = 0;
    for umbrella in &fixture.umbrellas {
        for member in &umbrella.members {
            let label = labels
                .get(member)
                .map(|l| l.to_string())
                .unwrap_or_else(|| {
                    let tail = member.as_str().rsplit('/').next().unwrap_or_default();
                    tail.split('-')
                        .map(capitalize)
                        .collect::<Vec<_>>()
                        .join(" ")
                });
            let works = if label.contains("(collective name)") {
                0
            } else {
                2
            };
            let artworks = (0..works)
                .map(|_| {
                    work += 1;
                    local(&format!("zeri/artwork/{work}"))
                })
                .collect();
            entities.entry(member.clone()).or_insert(FacetEntity {
                uri: member.clone(),
                label,
                artworks,
            });
        }
    }
    Ok((entities.into_values().collect(), fixture.umbrellas))
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    c.next()
        .map(|f| f.to_uppercase().collect::<String>() + c.as_str())
        .unwrap_or_default()
}
