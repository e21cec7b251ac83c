//! The `artrecon` command line.
//!
//! Stages read and write files under a data directory:
//!
//! ```text
//! corpus/            make-fixtures output (actors/*.csv, authority/*.json)
//! store/records.jsonl, store/statements.nq, store/diagnostics.jsonl
//! clusters.jsonl, conflicts.json
//! candidates.jsonl, negatives.json
//! decisions.jsonl    the review log
//! export.nq
//! ```
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 bad or missing data,
//! 3 internal failure. Failures print one JSON line on stderr.

pub mod config;
pub mod live;
mod pipeline;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

pub use config::{FileConfig, Header, Overrides, RunConfig};
pub use pipeline::Layout;

#[derive(Debug, Parser)]
#[command(
    name = "artrecon",
    version,
    about = "Reconcile actor records across institutions and authorities"
)]
pub struct Cli {
    /// TOML file with run settings; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    /// Resolve links from the fixture directory only (the default).
    #[arg(long, global = true, conflicts_with = "online")]
    pub offline: bool,
    /// Fetch Wikidata and VIAF records over the network, through the cache.
    #[arg(long, global = true)]
    pub online: bool,
    /// Authority priority, e.g. "loc,gnd,rkd,ulan,wikidata;exclude=viaf".
    #[arg(long, global = true)]
    pub priority: Option<String>,
    #[arg(long, global = true)]
    pub threshold_confident: Option<f64>,
    #[arg(long, global = true)]
    pub threshold_review: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus with a known number of conflicts.
    MakeFixtures {
        #[arg(long, default_value_t = 100)]
        clusters: usize,
        #[arg(long, default_value_t = 27)]
        conflicts: usize,
        /// Output directory; defaults to DATA_DIR/corpus.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the single-record Bazzi corpus instead.
        #[arg(long)]
        bazzi: bool,
    },
    /// Read CSV exports (with sibling *.mapping.json) and N-Quads files.
    Ingest {
        /// Files or directories; defaults to DATA_DIR/corpus/actors.
        inputs: Vec<PathBuf>,
    },
    /// Expand and filter every record's linkset.
    Harmonize,
    /// Propose matches between institutions' records.
    Match {
        /// Extra target records as JSON Lines.
        #[arg(long)]
        targets: Option<PathBuf>,
    },
    /// Summarize the current run.
    Report {
        #[arg(long)]
        json: bool,
    },
    /// Write the store plus harmonized and reviewed links as N-Quads.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the review service.
    Serve {
        /// Address to bind, e.g. 127.0.0.1:0.
        #[arg(long)]
        listen: Option<String>,
        /// Serve the built-in review fixture instead of the data directory.
        #[arg(long)]
        fixture: bool,
        /// Decision log; defaults to DATA_DIR/decisions.jsonl.
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            kind: "usage".into(),
            message: message.into(),
        }
    }

    pub fn data(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            kind: "internal".into(),
            message: message.into(),
        }
    }

    pub fn to_json_line(&self) -> String {
        json!({ "error": { "code": self.code, "kind": self.kind, "message": self.message } })
            .to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<artrecon_core::Error> for CliError {
    fn from(e: artrecon_core::Error) -> Self {
        use artrecon_core::Error as E;
        let kind = match &e {
            E::Config(_) => return CliError::usage(e.to_string()),
            E::InvalidUri { .. } => "invalid_uri",
            E::Invalid(_) => "invalid",
            E::DeprecationCycle(_) | E::DeprecationChainTooLong { .. } | E::Cycle(_) => "cycle",
            E::Parse { .. } | E::Json(_) | E::Csv(_) => "parse",
            E::NotFound(_) => "not_found",
            E::Provider { .. } => "provider",
            E::Io(_) => "io",
        };
        CliError::data(kind, e.to_string())
    }
}

impl From<artrecon_service::DeskError> for CliError {
    fn from(e: artrecon_service::DeskError) -> Self {
        match e {
            artrecon_service::DeskError::Internal(m) => CliError::internal(m),
            other => CliError::data(other.kind(), other.message()),
        }
    }
}

fn init_tracing() {
    let level = std::env::var("ARTRECON_LOG")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(tracing::Level::WARN);
    let _ = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(level)
        .try_init();
}

/// Resolves configuration and runs one command, writing its report to
/// `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let online = if cli.online {
        Some(true)
    } else if cli.offline {
        Some(false)
    } else {
        None
    };
    let flags = Overrides {
        data_dir: cli.data_dir,
        priority: cli.priority,
        threshold_confident: cli.threshold_confident,
        threshold_review: cli.threshold_review,
        seed: cli.seed,
        online,
    };
    let config = RunConfig::resolve(file, flags)?;
    pipeline::dispatch(&config, cli.command, out)
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with(args: impl IntoIterator<Item = OsString>) -> i32 {
    init_tracing();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let rendered = e.render().to_string();
            let message = rendered
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(message).to_json_line());
            return 1;
        }
    };
    let stdout = std::io::stdout();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        run(cli, &mut stdout.lock())
    }));
    let result = outcome.unwrap_or_else(|panic| {
        let message = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(CliError::internal(message))
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.code
        }
    }
}
