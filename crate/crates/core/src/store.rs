//! Event-sourced persistence.
//!
//! Every mutation is a [`Command`]. The [`Store`] validates it against a
//! private copy of the current corpus, appends the resulting [`Event`] to
//! `events.log` (one JSON object per line, fsynced), and only then publishes
//! the new snapshot. Replaying the log from the first event reconstructs
//! the corpus exactly.
//!
//! The interchange document (`corpus.json`) is a canonical, self-contained
//! serialization of a snapshot: object keys sorted, lists in document order,
//! text NFC-normalized.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collation::{nfc, tokenize};
use crate::corpus::{
    validate_label, Corpus, CorpusError, FunctionalUnit, Layer, NodePath, Reading, UnitId, UnitKind, Witness,
    WitnessKind, Work, DEFAULT_SIBLING_LIMIT,
};
use crate::evidence::{self, EvidenceAnnotation, EvidenceTaxonomy, NewAnnotation};

pub const FORMAT_MARKER: &str = "tht-corpus";
pub const FORMAT_VERSION: u32 = 1;

pub const EVENTS_FILE: &str = "events.log";
pub const CORPUS_FILE: &str = "corpus.json";
pub const TAXONOMY_FILE: &str = "taxonomy.json";
pub const USERS_FILE: &str = "users.json";

/// `corpus.json` is rewritten every this many events.
pub const CHECKPOINT_INTERVAL: u64 = 100;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    ValidationFailed(#[from] CorpusError),
    #[error("corrupt event log at seq {seq}: {reason}")]
    CorruptLog { seq: u64, reason: String },
    #[error("unsupported document: format `{format}` version {version}")]
    UnsupportedVersion { format: String, version: u32 },
    #[error("integrity violation: {0}")]
    IntegrityViolation(String),
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("data directory {0} is not initialized (run `tht init`)")]
    NotInitialized(PathBuf),
    #[error("data directory {0} already contains a store")]
    AlreadyInitialized(PathBuf),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::ValidationFailed(e) => e.code(),
            StoreError::CorruptLog { .. } => "CorruptLog",
            StoreError::UnsupportedVersion { .. } => "UnsupportedVersion",
            StoreError::IntegrityViolation(_) => "IntegrityViolation",
            StoreError::MalformedDocument(_) => "MalformedDocument",
            StoreError::NotInitialized(_) => "NotInitialized",
            StoreError::AlreadyInitialized(_) => "AlreadyInitialized",
            StoreError::Io(_) => "IoError",
        }
    }
}

/// A corpus mutation, as recorded in the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", content = "payload")]
pub enum Command {
    CreateWork { id: String, title: String, script: String },
    AddUnit { work: String, unit: String, kind: UnitKind, base_text: String },
    AddLayer { parent: NodePath, label: String, text: String },
    EditLayer { path: NodePath, text: String, expected_revision: u64 },
    AddWitness(Witness),
    RecordReading { work: String, unit: UnitId, witness: String, text: String },
    Annotate(NewAnnotation),
    DeleteAnnotation { source: NodePath, id: String },
    SetTaxonomy(EvidenceTaxonomy),
    Import(Box<InterchangeDocument>),
}

impl Command {
    pub fn action(&self) -> &'static str {
        match self {
            Command::CreateWork { .. } => "CreateWork",
            Command::AddUnit { .. } => "AddUnit",
            Command::AddLayer { .. } => "AddLayer",
            Command::EditLayer { .. } => "EditLayer",
            Command::AddWitness(_) => "AddWitness",
            Command::RecordReading { .. } => "RecordReading",
            Command::Annotate(_) => "Annotate",
            Command::DeleteAnnotation { .. } => "DeleteAnnotation",
            Command::SetTaxonomy(_) => "SetTaxonomy",
            Command::Import(_) => "Import",
        }
    }
}

/// What a successful command produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Outcome {
    Work(Work),
    Unit(FunctionalUnit),
    Layer(Layer),
    Witness(Witness),
    Reading(Reading),
    Annotation(EvidenceAnnotation),
    AnnotationDeleted(EvidenceAnnotation),
    Taxonomy(EvidenceTaxonomy),
    Imported,
}

impl Outcome {
    /// Layer revision after the command, for layer mutations.
    pub fn revision(&self) -> Option<u64> {
        match self {
            Outcome::Layer(l) => Some(l.revision),
            _ => None,
        }
    }
}

/// Applies one command to `corpus`. On error the corpus is unchanged.
pub fn apply(corpus: &mut Corpus, command: &Command) -> Result<Outcome, StoreError> {
    Ok(match command {
        Command::CreateWork { id, title, script } => Outcome::Work(corpus.create_work(id, title, script)?),
        Command::AddUnit { work, unit, kind, base_text } => {
            Outcome::Unit(corpus.add_unit(work, unit, kind.clone(), base_text)?)
        }
        Command::AddLayer { parent, label, text } => Outcome::Layer(corpus.add_layer(parent, label, text)?),
        Command::EditLayer { path, text, expected_revision } => {
            Outcome::Layer(corpus.edit_layer(path, text, *expected_revision)?)
        }
        Command::AddWitness(w) => Outcome::Witness(corpus.add_witness(w.clone())?),
        Command::RecordReading { work, unit, witness, text } => {
            Outcome::Reading(corpus.record_reading(work, unit, witness, text)?)
        }
        Command::Annotate(new) => Outcome::Annotation(corpus.annotate(new.clone())?),
        Command::DeleteAnnotation { source, id } => Outcome::AnnotationDeleted(corpus.delete_annotation(source, id)?),
        Command::SetTaxonomy(t) => {
            corpus.set_taxonomy(t.clone())?;
            Outcome::Taxonomy(t.clone())
        }
        Command::Import(doc) => {
            *corpus = import_corpus(doc, corpus.sibling_limit())?;
            Outcome::Imported
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    /// UTC, RFC 3339.
    pub timestamp: String,
    pub actor: String,
    #[serde(flatten)]
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resulting_revision: Option<u64>,
}

/// Rebuilds a corpus from a log that starts at seq 1 with no gaps.
pub fn replay(events: &[Event], sibling_limit: usize) -> Result<Corpus, StoreError> {
    let mut corpus = Corpus::new(sibling_limit);
    for (i, event) in events.iter().enumerate() {
        let expected = i as u64 + 1;
        if event.seq != expected {
            return Err(StoreError::CorruptLog { seq: event.seq, reason: format!("expected seq {expected}") });
        }
        apply(&mut corpus, &event.command)
            .map_err(|e| StoreError::CorruptLog { seq: event.seq, reason: e.to_string() })?;
    }
    Ok(corpus)
}

/// Reads a JSON-lines event log. Blank lines are ignored.
pub fn read_log(path: &Path) -> Result<Vec<Event>, StoreError> {
    let file = File::open(path)?;
    let mut events = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(&line).map_err(|e| StoreError::CorruptLog {
            seq: events.len() as u64 + 1,
            reason: format!("line {}: {e}", n + 1),
        })?;
        events.push(event);
    }
    Ok(events)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreConfig {
    pub sibling_limit: usize,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig { sibling_limit: DEFAULT_SIBLING_LIMIT }
    }
}

impl StoreConfig {
    /// Reads `THT_SIBLING_LIMIT`, falling back to the default of 8.
    pub fn from_env() -> Self {
        let sibling_limit = std::env::var("THT_SIBLING_LIMIT")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_SIBLING_LIMIT);
        StoreConfig { sibling_limit }
    }
}

/// Result of a successfully persisted command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Applied {
    pub seq: u64,
    pub outcome: Outcome,
}

/// Single-writer event store. Readers take cheap [`Arc`] snapshots that are
/// never mutated.
#[derive(Debug)]
pub struct Store {
    dir: Option<PathBuf>,
    log_file: Option<File>,
    events: Vec<Event>,
    snapshot: Arc<Corpus>,
    config: StoreConfig,
}

impl Store {
    pub fn in_memory(config: StoreConfig) -> Self {
        Store { dir: None, log_file: None, events: Vec::new(), snapshot: Arc::new(Corpus::new(config.sibling_limit)), config }
    }

    /// Creates an empty store in `dir` with the default taxonomy file.
    pub fn init(dir: &Path, config: StoreConfig) -> Result<Self, StoreError> {
        fs::create_dir_all(dir)?;
        let events = dir.join(EVENTS_FILE);
        if events.exists() {
            return Err(StoreError::AlreadyInitialized(dir.to_path_buf()));
        }
        File::create(&events)?.sync_all()?;
        let taxonomy = serde_json::to_string_pretty(&EvidenceTaxonomy::default()).expect("taxonomy serializes");
        write_atomic(&dir.join(TAXONOMY_FILE), taxonomy.as_bytes())?;
        Self::open(dir, config)
    }

    /// Opens an initialized store, replaying its log. A `taxonomy.json` that
    /// differs from the replayed taxonomy is installed with a `SetTaxonomy`
    /// event.
    pub fn open(dir: &Path, config: StoreConfig) -> Result<Self, StoreError> {
        let log_path = dir.join(EVENTS_FILE);
        if !log_path.exists() {
            return Err(StoreError::NotInitialized(dir.to_path_buf()));
        }
        let events = read_log(&log_path)?;
        let corpus = replay(&events, config.sibling_limit)?;
        let log_file = OpenOptions::new().append(true).open(&log_path)?;
        let mut store = Store {
            dir: Some(dir.to_path_buf()),
            log_file: Some(log_file),
            events,
            snapshot: Arc::new(corpus),
            config,
        };

        let taxonomy_path = dir.join(TAXONOMY_FILE);
        if taxonomy_path.exists() {
            let taxonomy = evidence::load_taxonomy(&fs::read_to_string(&taxonomy_path)?)?;
            if &taxonomy != store.snapshot.taxonomy() {
                store.execute("config", Command::SetTaxonomy(taxonomy))?;
            }
        }
        Ok(store)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn config(&self) -> StoreConfig {
        self.config
    }

    pub fn snapshot(&self) -> Arc<Corpus> {
        Arc::clone(&self.snapshot)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Validates `command`, persists its event, then publishes the new
    /// snapshot. Nothing changes when validation or persistence fails.
    pub fn execute(&mut self, actor: &str, command: Command) -> Result<Applied, StoreError> {
        let mut next = (*self.snapshot).clone();
        let outcome = apply(&mut next, &command)?;
        let seq = self.events.len() as u64 + 1;
        let event = Event {
            seq,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            actor: actor.to_owned(),
            resulting_revision: outcome.revision(),
            command,
        };
        if let Some(file) = self.log_file.as_mut() {
            let mut line = serde_json::to_string(&event).expect("events serialize");
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.sync_data()?;
        }
        self.events.push(event);
        self.snapshot = Arc::new(next);
        if seq % CHECKPOINT_INTERVAL == 0 {
            // The log stays authoritative; a failed checkpoint only delays
            // the next one.
            let _ = self.checkpoint();
        }
        Ok(Applied { seq, outcome })
    }

    /// Alias of [`Store::execute`] named after the log operation.
    pub fn append_event(&mut self, actor: &str, command: Command) -> Result<u64, StoreError> {
        self.execute(actor, command).map(|a| a.seq)
    }

    /// Replaces the corpus with the document's content via one `Import` event.
    pub fn import(&mut self, actor: &str, document: InterchangeDocument) -> Result<Applied, StoreError> {
        self.execute(actor, Command::Import(Box::new(document)))
    }

    pub fn export(&self) -> InterchangeDocument {
        export_corpus(&self.snapshot)
    }

    /// Writes the canonical snapshot to `<data_dir>/corpus.json`.
    pub fn checkpoint(&self) -> Result<Option<PathBuf>, StoreError> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let path = dir.join(CORPUS_FILE);
        write_atomic(&path, self.export().to_canonical_json().as_bytes())?;
        Ok(Some(path))
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Self-contained serialization of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterchangeDocument {
    pub format: String,
    pub version: u32,
    pub taxonomy: EvidenceTaxonomy,
    #[serde(default)]
    pub witnesses: Vec<Witness>,
    #[serde(default)]
    pub works: Vec<Work>,
}

impl InterchangeDocument {
    /// Pretty-printed JSON with object keys in sorted order.
    pub fn to_canonical_json(&self) -> String {
        // serde_json::Value keeps object keys in a BTreeMap.
        let value = serde_json::to_value(self).expect("document serializes");
        let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, StoreError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| StoreError::MalformedDocument(e.to_string()))?;
        let format = value.get("format").and_then(|v| v.as_str()).unwrap_or_default().to_owned();
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if format != FORMAT_MARKER || version != FORMAT_VERSION {
            return Err(StoreError::UnsupportedVersion { format, version });
        }
        serde_json::from_value(value).map_err(|e| StoreError::MalformedDocument(e.to_string()))
    }
}

pub fn export_corpus(corpus: &Corpus) -> InterchangeDocument {
    InterchangeDocument {
        format: FORMAT_MARKER.to_owned(),
        version: FORMAT_VERSION,
        taxonomy: corpus.taxonomy().clone(),
        witnesses: corpus.witnesses().cloned().collect(),
        works: corpus.works().cloned().collect(),
    }
}

/// Validates a document and builds the corpus it describes.
pub fn import_corpus(doc: &InterchangeDocument, sibling_limit: usize) -> Result<Corpus, StoreError> {
    if doc.format != FORMAT_MARKER || doc.version != FORMAT_VERSION {
        return Err(StoreError::UnsupportedVersion { format: doc.format.clone(), version: doc.version });
    }
    let integrity = |msg: String| StoreError::IntegrityViolation(msg);

    // Round-trip the taxonomy through its loader for validation.
    let taxonomy = evidence::taxonomy_from_value(&serde_json::to_value(&doc.taxonomy).expect("taxonomy serializes"))?;

    let mut witnesses = BTreeMap::new();
    for w in &doc.witnesses {
        validate_label(&w.id).map_err(|e| integrity(e.to_string()))?;
        if w.kind == WitnessKind::CommentaryDerived {
            return Err(integrity(format!("witness `{}` is commentary-derived", w.id)));
        }
        if witnesses.insert(w.id.clone(), Witness { siglum: nfc(&w.siglum), ..w.clone() }).is_some() {
            return Err(integrity(format!("duplicate witness `{}`", w.id)));
        }
    }

    let mut works = BTreeMap::new();
    let mut annotation_ids = BTreeSet::new();
    for w in &doc.works {
        validate_label(&w.id).map_err(|e| integrity(e.to_string()))?;
        let mut work = Work { id: w.id.clone(), title: nfc(&w.title), script: w.script.clone(), units: Vec::new() };
        let mut units = w.units.clone();
        units.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(pair) = units.windows(2).find(|p| p[0].id == p[1].id) {
            return Err(integrity(format!("duplicate unit `{}/{}`", w.id, pair[0].id)));
        }
        let unit_ids: BTreeMap<UnitId, usize> = units
            .iter()
            .map(|u| {
                let base = nfc(&u.base_text);
                (u.id.clone(), tokenize(&base, &w.script).len())
            })
            .collect();

        for u in &units {
            let base_text = nfc(&u.base_text);
            let token_count = unit_ids[&u.id];
            if u.token_count != token_count {
                return Err(integrity(format!(
                    "unit `{}/{}` declares {} tokens but its text has {token_count}",
                    w.id, u.id, u.token_count
                )));
            }
            let mut readings = Vec::new();
            let mut seen = BTreeSet::new();
            for r in &u.readings {
                if !witnesses.contains_key(&r.witness_id) {
                    return Err(integrity(format!(
                        "reading of `{}/{}` references unknown witness `{}`",
                        w.id, u.id, r.witness_id
                    )));
                }
                if r.unit_id != u.id {
                    return Err(integrity(format!("reading under `{}/{}` names unit `{}`", w.id, u.id, r.unit_id)));
                }
                if !seen.insert(r.witness_id.clone()) {
                    return Err(integrity(format!("duplicate reading of `{}/{}` by `{}`", w.id, u.id, r.witness_id)));
                }
                readings.push(Reading { text: nfc(&r.text), ..r.clone() });
            }
            readings.sort_by(|a, b| a.witness_id.cmp(&b.witness_id));

            let path = NodePath::unit(&w.id, u.id.clone());
            let ctx = LayerCheck { taxonomy: &taxonomy, unit_ids: &unit_ids, sibling_limit };
            let layers = ctx.layers(&u.layers, &path, 1, &mut annotation_ids)?;
            work.units.push(FunctionalUnit {
                id: u.id.clone(),
                kind: u.kind.clone(),
                base_text,
                token_count,
                readings,
                layers,
            });
        }
        if works.insert(w.id.clone(), work).is_some() {
            return Err(integrity(format!("duplicate work `{}`", w.id)));
        }
    }

    // Placement rules for unit kinds are enforced by replaying the units
    // through the regular constructor.
    let mut probe = Corpus::new(sibling_limit);
    for work in works.values() {
        probe.create_work(&work.id, &work.title, &work.script)?;
        for u in &work.units {
            probe.add_unit(&work.id, u.id.as_str(), u.kind.clone(), "")?;
        }
    }

    Ok(Corpus::from_parts(works, witnesses, taxonomy, sibling_limit))
}

struct LayerCheck<'a> {
    taxonomy: &'a EvidenceTaxonomy,
    unit_ids: &'a BTreeMap<UnitId, usize>,
    sibling_limit: usize,
}

impl LayerCheck<'_> {
    fn layers(
        &self,
        layers: &[Layer],
        parent: &NodePath,
        depth: u32,
        annotation_ids: &mut BTreeSet<String>,
    ) -> Result<Vec<Layer>, StoreError> {
        let integrity = StoreError::IntegrityViolation;
        if layers.len() > self.sibling_limit {
            return Err(integrity(format!("`{parent}` has {} layers, limit {}", layers.len(), self.sibling_limit)));
        }
        let mut out = Vec::with_capacity(layers.len());
        let mut labels = BTreeSet::new();
        for l in layers {
            validate_label(&l.label).map_err(|e| integrity(e.to_string()))?;
            if !labels.insert(l.label.clone()) {
                return Err(integrity(format!("duplicate layer `{}` under `{parent}`", l.label)));
            }
            let path = parent.child(&l.label);
            if l.depth != depth {
                return Err(integrity(format!("layer `{path}` declares depth {} but sits at {depth}", l.depth)));
            }
            if l.revision == 0 {
                return Err(integrity(format!("layer `{path}` has revision 0")));
            }
            let mut annotations = Vec::with_capacity(l.annotations.len());
            for a in &l.annotations {
                if a.source != path {
                    return Err(integrity(format!("annotation `{}` under `{path}` names source `{}`", a.id, a.source)));
                }
                let Some(&token_count) = self.unit_ids.get(&a.target_unit) else {
                    return Err(integrity(format!(
                        "annotation `{}` references missing unit `{}/{}`",
                        a.id, path.work, a.target_unit
                    )));
                };
                if a.span.start >= a.span.end || a.span.end > token_count {
                    return Err(integrity(format!("annotation `{}` span out of range", a.id)));
                }
                self.taxonomy
                    .check(a.kind, a.subtype.as_deref())
                    .map_err(|e| integrity(format!("annotation `{}`: {e}", a.id)))?;
                if !annotation_ids.insert(a.id.clone()) {
                    return Err(integrity(format!("duplicate annotation id `{}`", a.id)));
                }
                annotations.push(EvidenceAnnotation { quoted_form: a.quoted_form.as_deref().map(nfc), ..a.clone() });
            }
            let children = self.layers(&l.layers, &path, depth + 1, annotation_ids)?;
            out.push(Layer {
                label: l.label.clone(),
                text: nfc(&l.text),
                revision: l.revision,
                depth,
                annotations,
                layers: children,
            });
        }
        out.sort_by(|a, b| a.label.cmp(&b.label));
        Ok(out)
    }
}
