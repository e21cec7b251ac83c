use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use artrecon_core::fixtures::{self, FixtureConfig};
use artrecon_core::harmonizer::{inconsistency_rate, Cluster, Harmonizer};
use artrecon_core::ingest::{
    actor_statements, diagnostics_to_jsonl, export_quads, parse_actor_records, parse_statements,
    ActorRecord, ColumnMapping, Diagnostic, ParseOptions,
};
use artrecon_core::matcher::{
    generate_candidates, CandidateIndex, Confidence, Constraints, MatchCandidate,
    NegativeConstraints, TargetRecord,
};
use artrecon_core::merge::{build_facet_tree, ReconciledEntity};
use artrecon_core::model::{AuthorityId, AuthorityTable, BatchContext, Statement};
use artrecon_core::provider::{CachedProvider, FixtureDirProvider, LinkProvider};
use artrecon_core::review::{
    apply_decisions, status_counts, DecisionLog, ReviewContext, ReviewDecision,
};
use artrecon_service::{DeskData, ReviewDesk};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::config::{Header, RunConfig};
use crate::live::LiveProvider;
use crate::{CliError, Command};

/// Where each stage keeps its files.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }
    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus")
    }
    pub fn records(&self) -> PathBuf {
        self.root.join("store").join("records.jsonl")
    }
    pub fn statements(&self) -> PathBuf {
        self.root.join("store").join("statements.nq")
    }
    pub fn diagnostics(&self) -> PathBuf {
        self.root.join("store").join("diagnostics.jsonl")
    }
    pub fn clusters(&self) -> PathBuf {
        self.root.join("clusters.jsonl")
    }
    pub fn conflicts(&self) -> PathBuf {
        self.root.join("conflicts.json")
    }
    pub fn candidates(&self) -> PathBuf {
        self.root.join("candidates.jsonl")
    }
    pub fn negatives(&self) -> PathBuf {
        self.root.join("negatives.json")
    }
    pub fn decisions(&self) -> PathBuf {
        self.root.join("decisions.jsonl")
    }
    pub fn export(&self) -> PathBuf {
        self.root.join("export.nq")
    }
}

const BATCH: &str = "artrecon";

fn batch_context(config: &RunConfig) -> BatchContext {
    BatchContext::new(config.namespace.clone(), BATCH, config.retrieved_at)
}

fn review_context(config: &RunConfig) -> ReviewContext {
    ReviewContext {
        table: AuthorityTable::default_table(),
        priority: config.priority.clone(),
        context: batch_context(config),
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::data("io", format!("{}: {e}", path.display()))
}

fn read(path: &Path, hint: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::data(
            "missing_input",
            format!("{} not found; {hint}", path.display()),
        ),
        _ => io_error(path, e),
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn check_header(path: &Path, line: &str, config: &RunConfig) {
    let found = serde_json::from_str::<serde_json::Value>(line)
        .ok()
        .and_then(|v| {
            v.pointer("/artrecon/config_hash")
                .and_then(|h| h.as_str().map(str::to_string))
        });
    if let Some(hash) = found {
        if hash != config.hash() {
            tracing::warn!(file = %path.display(), written = %hash, current = %config.hash(), "file written under a different configuration");
        }
    }
}

fn read_jsonl<T: DeserializeOwned>(
    path: &Path,
    hint: &str,
    config: &RunConfig,
) -> Result<Vec<T>, CliError> {
    let text = read(path, hint)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if n == 0 && line.starts_with("{\"artrecon\"") {
            check_header(path, line, config);
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| {
            CliError::data("parse", format!("{} line {}: {e}", path.display(), n + 1))
        })?);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, header: &Header, items: &[T]) -> Result<(), CliError> {
    let mut text = header.json_line();
    for item in items {
        text.push_str(&serde_json::to_string(item).map_err(|e| CliError::internal(e.to_string()))?);
        text.push('\n');
    }
    write(path, &text)
}

fn write_json(path: &Path, header: &Header, mut value: serde_json::Value) -> Result<(), CliError> {
    value["artrecon"] = json!(header);
    let text =
        serde_json::to_string_pretty(&value).map_err(|e| CliError::internal(e.to_string()))? + "\n";
    write(path, &text)
}

fn say(out: &mut dyn Write, line: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::internal(format!("stdout: {e}")))
}

pub fn dispatch(config: &RunConfig, command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let layout = Layout::new(&config.data_dir);
    match command {
        Command::MakeFixtures {
            clusters,
            conflicts,
            out: dir,
            bazzi,
        } => make_fixtures(config, &layout, clusters, conflicts, dir, bazzi, out),
        Command::Ingest { inputs } => ingest(config, &layout, inputs, out),
        Command::Harmonize => harmonize(config, &layout, out),
        Command::Match { targets } => match_records(config, &layout, targets, out),
        Command::Report { json } => report(config, &layout, json, out),
        Command::Export { out: path } => export(config, &layout, path, out),
        Command::Serve {
            listen,
            fixture,
            log,
        } => serve(config, &layout, listen, fixture, log, out),
    }
}

fn make_fixtures(
    config: &RunConfig,
    layout: &Layout,
    clusters: usize,
    conflicts: usize,
    dir: Option<PathBuf>,
    bazzi: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let dir = dir.unwrap_or_else(|| layout.corpus());
    if bazzi {
        let (record, provider) = fixtures::bazzi();
        fixtures::write_corpus(&dir, &[record], &provider)?;
        return say(out, format!("wrote the Bazzi corpus to {}", dir.display()));
    }
    let corpus = fixtures::make_fixtures(&FixtureConfig::new(config.seed, clusters, conflicts))?;
    corpus.write_to(&dir)?;
    say(
        out,
        format!(
            "wrote {} records ({} with an injected conflict) to {}",
            corpus.records.len(),
            corpus.manifest.conflicted.len(),
            dir.display()
        ),
    )
}

/// Inputs in a stable order: directories contribute their *.csv and *.nq
/// files sorted by name.
fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| io_error(input, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "nq")))
                .collect();
            found.sort();
            files.extend(found);
        } else if input.exists() {
            files.push(input.clone());
        } else {
            return Err(CliError::data(
                "missing_input",
                format!("{} not found", input.display()),
            ));
        }
    }
    Ok(files)
}

fn file_label(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

fn ingest(
    config: &RunConfig,
    layout: &Layout,
    inputs: Vec<PathBuf>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let inputs = if inputs.is_empty() {
        vec![layout.corpus().join("actors")]
    } else {
        inputs
    };
    let files = collect_inputs(&inputs)?;
    let ctx = batch_context(config);
    let mut records: Vec<ActorRecord> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut statements: Vec<Statement> = Vec::new();
    let mut diagnostics: Vec<Diagnostic> = Vec::new();
    for path in &files {
        let label = file_label(path);
        let text = read(path, "check the input path")?;
        if path.extension().and_then(|e| e.to_str()) == Some("nq") {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("import");
            let options = ParseOptions {
                context: ctx.clone(),
                source: AuthorityId::local(stem)?,
                strict: false,
                file: Some(label),
            };
            let outcome = parse_statements(&text, &options)?;
            statements.extend(outcome.statements);
            diagnostics.extend(outcome.diagnostics);
            continue;
        }
        let mapping_path = path.with_extension("mapping.json");
        let mapping: ColumnMapping =
            serde_json::from_str(&read(&mapping_path, "every CSV needs a column mapping")?)
                .map_err(|e| CliError::data("parse", format!("{}: {e}", mapping_path.display())))?;
        let (parsed, diags) = parse_actor_records(&text, &mapping, Some(&label))?;
        diagnostics.extend(diags);
        for record in parsed {
            if !seen.insert(record.uri.clone()) {
                diagnostics.push(Diagnostic::new(
                    Some(&label),
                    0,
                    format!("duplicate record {}, first kept", record.uri),
                ));
                continue;
            }
            statements.extend(actor_statements(&record, &ctx));
            records.push(record);
        }
    }
    let header = config.header();
    write_jsonl(&layout.records(), &header, &records)?;
    let quads = export_quads(&statements);
    write(&layout.statements(), &(header.comment() + &quads))?;
    write(&layout.diagnostics(), &diagnostics_to_jsonl(&diagnostics))?;
    say(
        out,
        format!(
            "ingested {} records and {} statements from {} files; {} diagnostics",
            records.len(),
            quads.lines().count(),
            files.len(),
            diagnostics.len()
        ),
    )
}

fn provider(config: &RunConfig) -> Result<Box<dyn LinkProvider>, CliError> {
    if config.online {
        return Ok(Box::new(CachedProvider::new(
            LiveProvider::new()?,
            &config.cache_dir,
        )));
    }
    if !config.fixture_dir.is_dir() {
        return Err(CliError::data(
            "missing_input",
            format!(
                "fixture directory {} not found; run make-fixtures or pass --online",
                config.fixture_dir.display()
            ),
        ));
    }
    Ok(Box::new(FixtureDirProvider::open(&config.fixture_dir)?))
}

const INGEST_FIRST: &str = "run `artrecon ingest` first";
const HARMONIZE_FIRST: &str = "run `artrecon harmonize` first";

fn harmonize(config: &RunConfig, layout: &Layout, out: &mut dyn Write) -> Result<(), CliError> {
    let records: Vec<ActorRecord> = read_jsonl(&layout.records(), INGEST_FIRST, config)?;
    let provider = provider(config)?;
    let harmonizer = Harmonizer::new(
        AuthorityTable::default_table(),
        config.priority.clone(),
        batch_context(config),
    );
    let clusters = records
        .iter()
        .map(|r| harmonizer.harmonize_cluster(r, provider.as_ref()))
        .collect::<artrecon_core::Result<Vec<Cluster>>>()?;
    let rate = inconsistency_rate(&clusters);
    let header = config.header();
    write_jsonl(&layout.clusters(), &header, &clusters)?;
    let conflicted: Vec<_> = clusters
        .iter()
        .filter(|c| c.is_conflicted())
        .map(|c| {
            json!({
                "seed": c.seed,
                "detected": c.detected_conflicts,
                "unresolved": c.unresolved_conflicts,
                "discarded": c.discarded,
            })
        })
        .collect();
    write_json(
        &layout.conflicts(),
        &header,
        json!({ "inconsistency_rate": rate, "clusters": conflicted }),
    )?;
    let unresolved = clusters
        .iter()
        .filter(|c| !c.unresolved_conflicts.is_empty())
        .count();
    say(out, format!("harmonized {} clusters", clusters.len()))?;
    say(out, format!("inconsistency rate: {rate}"))?;
    say(
        out,
        format!("clusters with unresolved conflicts: {unresolved}"),
    )
}

fn read_optional<T: DeserializeOwned>(path: &Path, config: &RunConfig) -> Result<Vec<T>, CliError> {
    if path.exists() {
        read_jsonl(path, "", config)
    } else {
        Ok(Vec::new())
    }
}

/// Negative constraints: those recorded by earlier runs plus every reject
/// in the decision log.
fn negatives(config: &RunConfig, layout: &Layout) -> Result<NegativeConstraints, CliError> {
    let mut negatives: NegativeConstraints = if layout.negatives().exists() {
        let text = read(&layout.negatives(), "")?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::data("parse", format!("negatives.json: {e}")))?;
        serde_json::from_value(value["negatives"].clone())
            .map_err(|e| CliError::data("parse", format!("negatives.json: {e}")))?
    } else {
        NegativeConstraints::default()
    };
    let decisions: Vec<ReviewDecision> = read_optional(&layout.decisions(), config)?;
    if !decisions.is_empty() {
        let previous: Vec<MatchCandidate> = read_optional(&layout.candidates(), config)?;
        let previous: BTreeMap<String, MatchCandidate> =
            previous.into_iter().map(|c| (c.id.clone(), c)).collect();
        let state = apply_decisions(&[], &previous, &decisions, &review_context(config))?;
        for (a, b) in state.negatives.iter() {
            negatives.insert(a, b);
        }
    }
    Ok(negatives)
}

/// Every record against the records of the other institutions, plus any
/// extra targets. Candidates are deduplicated by pair id.
pub fn find_candidates(
    records: &[ActorRecord],
    extra: &[TargetRecord],
    config: &RunConfig,
    negatives: &NegativeConstraints,
) -> Vec<MatchCandidate> {
    let institutions: BTreeSet<&AuthorityId> = records.iter().map(|r| &r.institution).collect();
    let indexes: BTreeMap<&AuthorityId, CandidateIndex> = institutions
        .into_iter()
        .map(|inst| {
            let mut targets: Vec<TargetRecord> = records
                .iter()
                .filter(|r| &r.institution != inst)
                .map(TargetRecord::from)
                .collect();
            targets.extend(extra.iter().cloned());
            (inst, CandidateIndex::build(targets))
        })
        .collect();
    let mut found = Vec::new();
    for r in records {
        found.extend(generate_candidates(
            r,
            &indexes[&r.institution],
            &Constraints::default(),
            &config.thresholds,
            negatives,
        ));
    }
    found.sort_by(|a, b| a.id.cmp(&b.id));
    found.dedup_by(|a, b| a.id == b.id);
    found
}

fn match_records(
    config: &RunConfig,
    layout: &Layout,
    targets: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let records: Vec<ActorRecord> = read_jsonl(&layout.records(), INGEST_FIRST, config)?;
    let extra: Vec<TargetRecord> = match &targets {
        Some(path) => read_jsonl(path, "check the --targets path", config)?,
        None => Vec::new(),
    };
    let negatives = negatives(config, layout)?;
    let found = find_candidates(&records, &extra, config, &negatives);
    let header = config.header();
    write_jsonl(&layout.candidates(), &header, &found)?;
    write_json(
        &layout.negatives(),
        &header,
        json!({ "negatives": negatives }),
    )?;
    let band = |c: Confidence| found.iter().filter(|m| m.confidence == c).count();
    say(out, format!("found {} candidates", found.len()))?;
    say(
        out,
        format!(
            "confident {}, review {}, rejected {}",
            band(Confidence::Confident),
            band(Confidence::Review),
            band(Confidence::Rejected)
        ),
    )?;
    say(out, format!("negative constraints: {}", negatives.len()))
}

fn entities(clusters: Vec<Cluster>) -> Vec<ReconciledEntity> {
    clusters
        .into_iter()
        .map(ReconciledEntity::from_cluster)
        .collect()
}

fn report(
    config: &RunConfig,
    layout: &Layout,
    as_json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let clusters: Vec<Cluster> = read_jsonl(&layout.clusters(), HARMONIZE_FIRST, config)?;
    let rate = inconsistency_rate(&clusters);
    let unresolved = clusters
        .iter()
        .filter(|c| !c.unresolved_conflicts.is_empty())
        .count();
    let candidates: Vec<MatchCandidate> = read_optional(&layout.candidates(), config)?;
    let decisions: Vec<ReviewDecision> = read_optional(&layout.decisions(), config)?;
    let mut bands: BTreeMap<Confidence, usize> = BTreeMap::new();
    for c in &candidates {
        *bands.entry(c.confidence).or_default() += 1;
    }
    let by_id: BTreeMap<String, MatchCandidate> = candidates
        .iter()
        .map(|c| (c.id.clone(), c.clone()))
        .collect();
    let state = apply_decisions(
        &entities(clusters.clone()),
        &by_id,
        &decisions,
        &review_context(config),
    )?;
    let statuses = status_counts(&by_id, &state);
    if as_json {
        let value = json!({
            "artrecon": config.header(),
            "clusters": clusters.len(),
            "inconsistency_rate": rate,
            "unresolved": unresolved,
            "candidates": bands,
            "statuses": statuses,
            "decisions": decisions.len(),
            "entities": state.entities.len(),
        });
        return say(out, value);
    }
    say(out, format!("clusters: {}", clusters.len()))?;
    say(out, format!("inconsistency rate: {rate}"))?;
    say(
        out,
        format!("clusters with unresolved conflicts: {unresolved}"),
    )?;
    let count = |c| bands.get(&c).copied().unwrap_or(0);
    say(
        out,
        format!(
            "candidates: {} (confident {}, review {}, rejected {})",
            candidates.len(),
            count(Confidence::Confident),
            count(Confidence::Review),
            count(Confidence::Rejected)
        ),
    )?;
    let statuses: Vec<String> = statuses
        .iter()
        .map(|(s, n)| {
            format!(
                "{} {n}",
                serde_json::to_value(s)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default()
            )
        })
        .collect();
    if decisions.is_empty() {
        say(out, "decisions: 0")?;
    } else {
        say(
            out,
            format!("decisions: {} ({})", decisions.len(), statuses.join(", ")),
        )?;
    }
    say(
        out,
        format!("entities after review: {}", state.entities.len()),
    )
}

fn export(
    config: &RunConfig,
    layout: &Layout,
    path: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let ctx = batch_context(config);
    let text = read(&layout.statements(), INGEST_FIRST)?;
    let options = ParseOptions {
        context: ctx.clone(),
        source: AuthorityId::local("store")?,
        strict: true,
        file: Some("statements.nq".into()),
    };
    let mut statements = parse_statements(&text, &options)?.statements;
    if layout.clusters().exists() {
        let clusters: Vec<Cluster> = read_jsonl(&layout.clusters(), "", config)?;
        for c in &clusters {
            statements.extend(c.statements(&ctx));
        }
        let decisions: Vec<ReviewDecision> = read_optional(&layout.decisions(), config)?;
        if !decisions.is_empty() {
            let candidates: Vec<MatchCandidate> = read_optional(&layout.candidates(), config)?;
            let by_id = candidates.into_iter().map(|c| (c.id.clone(), c)).collect();
            let state = apply_decisions(
                &entities(clusters),
                &by_id,
                &decisions,
                &review_context(config),
            )?;
            statements.extend(state.statements);
        }
    }
    let quads = export_quads(&statements);
    let path = path.unwrap_or_else(|| layout.export());
    write(&path, &(config.header().comment() + &quads))?;
    say(
        out,
        format!(
            "exported {} statements to {}",
            quads.lines().count(),
            path.display()
        ),
    )
}

fn serve(
    config: &RunConfig,
    layout: &Layout,
    listen: Option<String>,
    fixture: bool,
    log: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let data = if fixture {
        DeskData::fixture(config.seed)?
    } else {
        let clusters: Vec<Cluster> = read_jsonl(&layout.clusters(), HARMONIZE_FIRST, config)?;
        DeskData {
            candidates: read_jsonl(&layout.candidates(), "run `artrecon match` first", config)?,
            records: read_jsonl(&layout.records(), INGEST_FIRST, config)?,
            entities: entities(clusters),
            facets: build_facet_tree(&[], &[]),
            context: review_context(config),
        }
    };
    let log = match log {
        Some(path) => DecisionLog::open(&path)?,
        None if fixture => DecisionLog::in_memory(),
        None => DecisionLog::open(&layout.decisions())?,
    };
    let desk = ReviewDesk::new(
        data,
        config.registry.clone(),
        log,
        artrecon_service::system_clock(),
    )?;
    let addr = listen.unwrap_or_else(|| config.listen.clone());
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::internal(format!("runtime: {e}")))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::usage(format!("cannot listen on {addr}: {e}")))?;
        let bound = listener
            .local_addr()
            .map_err(|e| CliError::internal(e.to_string()))?;
        say(out, format!("listening on http://{bound}"))?;
        out.flush().map_err(|e| CliError::internal(e.to_string()))?;
        artrecon_service::serve(listener, artrecon_service::shared(desk))
            .await
            .map_err(|e| CliError::internal(format!("server: {e}")))
    })
}
