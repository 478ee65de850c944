//! The `tht` command line.
//!
//! Exit codes: 0 on success, 1 on a domain error (reported on stderr as
//! `error[Code]: message`), 2 on a usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::corpus::{CorpusError, UnitId, DEFAULT_SIBLING_LIMIT};
use crate::evidence::{self, SupportStats, TransmissionReport};
use crate::phylogeny::{self, DistanceMode, PhyloError, SourceSelector, TreeMethod, TreeRequest, UnitScope};
use crate::service::{self, AppState, AuthError, Role, UserStore, DEFAULT_PORT, DEFAULT_TOKEN_TTL};
use crate::store::{self, Command, InterchangeDocument, Store, StoreConfig, StoreError, TAXONOMY_FILE, USERS_FILE};

#[derive(Debug, Parser)]
#[command(name = "tht", version, about = "Commentary corpus, evidence reports and stemma trees")]
struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "THT_DATA_DIR")]
    data_dir: Option<PathBuf>,

    /// Maximum number of layers under one node.
    #[arg(long, global = true, env = "THT_SIBLING_LIMIT", default_value_t = DEFAULT_SIBLING_LIMIT)]
    sibling_limit: usize,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Create an empty store.
    Init,
    /// Manage service accounts.
    #[command(subcommand)]
    User(UserCmd),
    /// Replace the corpus with an interchange document.
    Import { file: PathBuf },
    /// Write the corpus as a canonical interchange document (`-` for stdout).
    Export { file: PathBuf },
    /// Evidence reports.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Build a distance matrix and tree.
    Tree(TreeArgs),
    /// Show or replace the evidence taxonomy.
    #[command(subcommand)]
    Taxonomy(TaxonomyCmd),
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "THT_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
    },
}

#[derive(Debug, Subcommand)]
enum UserCmd {
    /// Add an account; the password is prompted for.
    Add {
        name: String,
        #[arg(long, default_value = "annotator")]
        role: Role,
        /// Read the password from the first line of stdin.
        #[arg(long)]
        password_stdin: bool,
    },
    List,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
enum ReportCmd {
    /// Share of base-text words a commentary supports.
    Support {
        #[arg(long)]
        work: String,
        /// Comma-separated unit ids.
        #[arg(long, value_delimiter = ',', required = true)]
        units: Vec<UnitId>,
        #[arg(long)]
        layer: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Quotation uniformity per commentary and archetype hints.
    Transmission {
        #[arg(long)]
        work: String,
        #[arg(long)]
        unit: UnitId,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

#[derive(Debug, Args)]
struct TreeArgs {
    #[arg(long)]
    work: String,
    #[arg(long, default_value = "upgma")]
    method: TreeMethod,
    #[arg(long, default_value = "manuscripts")]
    sources: SourceSelector,
    /// Comma-separated unit ids; all units when absent.
    #[arg(long, value_delimiter = ',')]
    units: Vec<UnitId>,
    #[arg(long, default_value = "normalized")]
    distance: DistanceMode,
    /// Newick output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Distance matrix CSV output file.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum TaxonomyCmd {
    Show,
    /// Install a taxonomy file and record the change.
    Load { file: PathBuf },
}

/// Domain failure reported with exit code 1.
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
}

impl CliError {
    fn new(code: &str, message: impl Into<String>) -> Self {
        CliError { code: code.to_owned(), message: message.into() }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        CliError::new("IoError", format!("{}: {e}", path.display()))
    }
}

macro_rules! coded_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError { code: e.code().to_owned(), message: e.to_string() }
            }
        }
    )*};
}
coded_error!(StoreError, CorpusError, PhyloError, AuthError);

type CliResult = Result<(), CliError>;

/// Runs the CLI with `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                2
            } else {
                let _ = write!(stdout, "{rendered}");
                0
            };
        }
    };
    let Some(data_dir) = cli.data_dir.clone() else {
        let _ = writeln!(stderr, "error: --data-dir (or THT_DATA_DIR) is required");
        return 2;
    };
    let config = StoreConfig { sibling_limit: cli.sibling_limit };
    match dispatch(cli.command, &data_dir, config, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {}", e.code, e.message);
            1
        }
    }
}

fn actor() -> String {
    std::env::var("USER").ok().filter(|u| !u.is_empty()).unwrap_or_else(|| "cli".to_owned())
}

fn out_err(e: io::Error) -> CliError {
    CliError::new("IoError", format!("writing output: {e}"))
}

fn dispatch(cmd: Cmd, dir: &Path, config: StoreConfig, out: &mut dyn Write) -> CliResult {
    match cmd {
        Cmd::Init => {
            Store::init(dir, config)?;
            writeln!(out, "initialized store in {}", dir.display()).map_err(out_err)
        }
        Cmd::User(cmd) => user(cmd, dir, out),
        Cmd::Import { file } => {
            let text = std::fs::read_to_string(&file).map_err(|e| CliError::io(&file, e))?;
            let doc = InterchangeDocument::from_json(&text)?;
            let mut store = Store::open(dir, config)?;
            let applied = store.import(&actor(), doc)?;
            store.checkpoint()?;
            let corpus = store.snapshot();
            writeln!(
                out,
                "imported {} work(s), {} witness(es) as event {}",
                corpus.works().count(),
                corpus.witnesses().count(),
                applied.seq
            )
            .map_err(out_err)
        }
        Cmd::Export { file } => {
            let store = Store::open(dir, config)?;
            let json = store.export().to_canonical_json();
            if file.as_os_str() == "-" {
                out.write_all(json.as_bytes()).map_err(out_err)
            } else {
                store::write_atomic(&file, json.as_bytes()).map_err(|e| CliError::io(&file, e))
            }
        }
        Cmd::Report(cmd) => report(cmd, dir, config, out),
        Cmd::Tree(args) => tree(args, dir, config, out),
        Cmd::Taxonomy(TaxonomyCmd::Show) => {
            let store = Store::open(dir, config)?;
            let json = serde_json::to_string_pretty(store.snapshot().taxonomy()).expect("taxonomy serializes");
            writeln!(out, "{json}").map_err(out_err)
        }
        Cmd::Taxonomy(TaxonomyCmd::Load { file }) => {
            let text = std::fs::read_to_string(&file).map_err(|e| CliError::io(&file, e))?;
            let taxonomy = evidence::load_taxonomy(&text)?;
            let mut store = Store::open(dir, config)?;
            if &taxonomy == store.snapshot().taxonomy() {
                return writeln!(out, "taxonomy unchanged").map_err(out_err);
            }
            // Event first, so a rejected taxonomy never reaches the file.
            let applied = store.execute(&actor(), Command::SetTaxonomy(taxonomy.clone()))?;
            let json = serde_json::to_string_pretty(&taxonomy).expect("taxonomy serializes");
            let path = dir.join(TAXONOMY_FILE);
            store::write_atomic(&path, json.as_bytes()).map_err(|e| CliError::io(&path, e))?;
            writeln!(out, "taxonomy installed as event {}", applied.seq).map_err(out_err)
        }
        Cmd::Serve { port, bind } => serve(dir, config, &bind, port, out),
    }
}

fn user(cmd: UserCmd, dir: &Path, out: &mut dyn Write) -> CliResult {
    if !dir.join(store::EVENTS_FILE).exists() {
        return Err(StoreError::NotInitialized(dir.to_path_buf()).into());
    }
    let path = dir.join(USERS_FILE);
    let mut users = UserStore::load(&path)?;
    match cmd {
        UserCmd::Add { name, role, password_stdin } => {
            let password = if password_stdin {
                let mut line = String::new();
                io::stdin().lock().read_line(&mut line).map_err(|e| CliError::new("IoError", e.to_string()))?;
                line.trim_end_matches(['\r', '\n']).to_owned()
            } else {
                rpassword::prompt_password(format!("password for {name}: "))
                    .map_err(|e| CliError::new("IoError", e.to_string()))?
            };
            if password.is_empty() {
                return Err(CliError::new("EmptyPassword", "password must not be empty"));
            }
            users.add(&name, &password, role)?;
            users.save(&path)?;
            writeln!(out, "added user {name} ({role:?})").map_err(out_err)
        }
        UserCmd::List => {
            for u in users.users() {
                writeln!(out, "{}\t{:?}", u.username, u.role).map_err(out_err)?;
            }
            Ok(())
        }
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> CliResult {
    let json = serde_json::to_string_pretty(value).expect("report serializes");
    writeln!(out, "{json}").map_err(out_err)
}

fn report(cmd: ReportCmd, dir: &Path, config: StoreConfig, out: &mut dyn Write) -> CliResult {
    let store = Store::open(dir, config)?;
    let corpus = store.snapshot();
    match cmd {
        ReportCmd::Support { work, units, layer, format } => {
            let stats = evidence::support_report(&corpus, &work, &units, &layer)?;
            match format {
                Format::Json => print_json(out, &stats),
                Format::Table => {
                    let w = corpus.work(&work)?;
                    out.write_all(render_support(&stats, |u| w.unit(u).map(|u| u.token_count).unwrap_or(0)).as_bytes())
                        .map_err(out_err)
                }
            }
        }
        ReportCmd::Transmission { work, unit, format } => {
            let report = evidence::transmission_report(&corpus, &work, &unit)?;
            match format {
                Format::Json => print_json(out, &report),
                Format::Table => out.write_all(render_transmission(&report).as_bytes()).map_err(out_err),
            }
        }
    }
}

/// Table with one row per unit, a total row and a summary line.
pub fn render_support(stats: &SupportStats, token_count: impl Fn(&UnitId) -> usize) -> String {
    let mut rows: Vec<[String; 3]> = vec![["unit".into(), "tokens".into(), "supported".into()]];
    for id in &stats.unit_ids {
        let supported = stats.supported_token_indices.get(id).map_or(0, |s| s.len());
        rows.push([id.to_string(), token_count(id).to_string(), supported.to_string()]);
    }
    rows.push(["total".into(), stats.total_tokens.to_string(), stats.supported_count.to_string()]);
    let width = rows.iter().map(|r| r[0].chars().count()).max().unwrap_or(0);

    let mut s = String::new();
    let _ = writeln!(s, "layer: {}", stats.layer_label);
    for r in &rows {
        let _ = writeln!(s, "{:<width$}  {:>6}  {:>9}", r[0], r[1], r[2]);
    }
    let _ = writeln!(s, "support: {stats}");
    s
}

pub fn render_transmission(report: &TransmissionReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "unit {}: {} tokens, {} manuscript reading(s)",
        report.unit_id, report.token_count, report.manuscript_readings
    );
    let width = report.layers.iter().map(|l| l.label.chars().count()).max().unwrap_or(5).max(5);
    let _ = writeln!(s, "{:<width$}  {:>9}  {:<7}  variations", "layer", "supported", "uniform");
    for layer in &report.layers {
        let uniform = if layer.uniform { "yes" } else { "no" };
        let _ = writeln!(
            s,
            "{:<width$}  {:>9}  {:<7}  {}",
            layer.label,
            layer.supported_count,
            uniform,
            layer.variations.len()
        );
        for v in &layer.variations {
            let base = if v.base_form.is_empty() { "-" } else { &v.base_form };
            let quoted = if v.quoted_form.is_empty() { "-" } else { &v.quoted_form };
            let _ = writeln!(s, "    @{} {base} -> {quoted} ({})", v.token_index, v.annotation);
        }
    }
    if report.archetype_hints.is_empty() {
        let _ = writeln!(s, "archetype hints: none");
    } else {
        let _ = writeln!(s, "archetype hints: {}", report.archetype_hints.join(", "));
    }
    s
}

fn tree(args: TreeArgs, dir: &Path, config: StoreConfig, out: &mut dyn Write) -> CliResult {
    let store = Store::open(dir, config)?;
    let corpus = store.snapshot();
    let request = TreeRequest {
        sources: args.sources,
        method: args.method,
        units: if args.units.is_empty() { UnitScope::All } else { UnitScope::Units(args.units) },
        distance: args.distance,
    };
    let result = phylogeny::build_tree(&corpus, &args.work, &request)?;
    if let Some(path) = &args.matrix {
        store::write_atomic(path, result.matrix.to_csv().as_bytes()).map_err(|e| CliError::io(path, e))?;
    }
    match &args.out {
        Some(path) => {
            let mut text = result.newick.clone();
            text.push('\n');
            store::write_atomic(path, text.as_bytes()).map_err(|e| CliError::io(path, e))?;
            writeln!(out, "wrote {} ({} taxa)", path.display(), result.matrix.len()).map_err(out_err)?;
        }
        None => writeln!(out, "{}", result.newick).map_err(out_err)?,
    }
    for w in &result.warnings {
        writeln!(out, "warning: {w}").map_err(out_err)?;
    }
    Ok(())
}

fn serve(dir: &Path, config: StoreConfig, bind: &str, port: u16, out: &mut dyn Write) -> CliResult {
    let secret = std::env::var("THT_AUTH_SECRET")
        .ok()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| CliError::new("MissingSecret", "THT_AUTH_SECRET must be set to serve"))?;
    let store = Store::open(dir, config)?;
    let state = Arc::new(AppState::new(store, secret.into_bytes(), DEFAULT_TOKEN_TTL)?);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new("IoError", e.to_string()))?;
    let addr = format!("{bind}:{port}");
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr).await.map_err(|e| CliError::new("IoError", format!("{addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| CliError::new("IoError", e.to_string()))?;
        writeln!(out, "listening on http://{local}").map_err(out_err)?;
        out.flush().map_err(out_err)?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        service::serve(listener, Arc::clone(&state), shutdown)
            .await
            .map_err(|e| CliError::new("IoError", e.to_string()))
    })?;
    runtime.shutdown_timeout(Duration::from_secs(1));
    state.with_store(|s| s.checkpoint())?;
    Ok(())
}
