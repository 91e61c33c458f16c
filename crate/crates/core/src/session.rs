//! Persistent tutoring sessions.
//!
//! Layout under the data directory:
//!
//! ```text
//! problems/*.brd.xml          graph library, read-only
//! sessions/<id>/session.json  id, graph id, creation time
//! sessions/<id>/events.jsonl  append-only log, one record per line
//! sessions/<id>/audit.log     rejected requests
//! sessions/<id>/files/<name>  uploaded tables
//! results/<id>.txt            processing reports, never rewritten
//! ```
//!
//! Transaction records in `events.jsonl` are bare transactions
//! (`selection`, `action`, `input`, `timestamp`), so the file doubles as a
//! transaction log for the `replay` command. Other records carry an `event`
//! field. Session state is rebuilt by replaying the log from the start.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::adjacency::{
    analyze, export_report, InputFile, PipelineError, TabError, DEFAULT_GAP_THRESHOLD,
    DEFAULT_MIN_MATCH_LEN,
};
use crate::graph::{parse_graph, validate_graph, BehaviorGraph, Severity};
use crate::mastery::{
    init_mastery, select_next_problem, MasteryError, SkillMastery, MASTERY_THRESHOLD,
};
use crate::tracer::{start_trace, HintResponse, TraceError, TraceState, Transaction, Verdict};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub port: u16,
    pub data_dir: PathBuf,
    pub gap_threshold: u64,
    pub min_match_len: usize,
    pub mastery_threshold: f64,
    /// Count each hint request as an error on the hinted link's skills.
    pub hints_are_errors: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            port: 8080,
            data_dir: PathBuf::from("data"),
            gap_threshold: DEFAULT_GAP_THRESHOLD,
            min_match_len: DEFAULT_MIN_MATCH_LEN,
            mastery_threshold: MASTERY_THRESHOLD,
            hints_are_errors: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("no problem with id {0:?}")]
    UnknownGraph(String),
    #[error("no session with id {0:?}")]
    UnknownSession(String),
    #[error("no result with id {0:?}")]
    UnknownResult(String),
    #[error("the session is complete; no further steps are accepted")]
    SessionDone,
    #[error("the problem is already complete")]
    AlreadyDone,
    #[error("{file}: {error}")]
    Parse { file: String, error: TabError },
    #[error("a file named {0:?} was already uploaded")]
    DuplicateName(String),
    #[error("file name {0:?} is not allowed")]
    InvalidName(String),
    #[error("no files uploaded")]
    NoFiles,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("session {session}: {reason}")]
    Corrupt { session: String, reason: String },
    #[error(transparent)]
    Mastery(#[from] MasteryError),
    #[error("problem library: {0}")]
    Library(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl ServiceError {
    /// Stable machine-readable name.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownGraph(_) => "UnknownGraph",
            ServiceError::UnknownSession(_) => "UnknownSession",
            ServiceError::UnknownResult(_) => "UnknownResult",
            ServiceError::SessionDone => "SessionDone",
            ServiceError::AlreadyDone => "AlreadyDone",
            ServiceError::Parse { .. } => "ParseError",
            ServiceError::DuplicateName(_) => "DuplicateName",
            ServiceError::InvalidName(_) => "InvalidName",
            ServiceError::NoFiles => "NoFiles",
            ServiceError::Pipeline(_) => "ProcessingError",
            ServiceError::Corrupt { .. } => "CorruptSession",
            ServiceError::Mastery(_) => "MasteryError",
            ServiceError::Library(_) => "LibraryError",
            ServiceError::Io(_) => "IoError",
        }
    }

    /// Source line for parse errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            ServiceError::Parse { error, .. } => Some(error.line()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredFile {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionMeta {
    session_id: String,
    graph_id: String,
    created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Hint {
        timestamp: u64,
    },
    Upload {
        name: String,
        timestamp: u64,
    },
    Process {
        result_id: String,
        gap_threshold: u64,
        timestamp: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Record {
    Step(Transaction),
    Other(Event),
}

impl Record {
    fn parse(line: &str) -> serde_json::Result<Record> {
        let value: serde_json::Value = serde_json::from_str(line)?;
        if value.get("event").is_some() {
            serde_json::from_value(value).map(Record::Other)
        } else {
            serde_json::from_value(value).map(Record::Step)
        }
    }

    fn to_line(&self) -> String {
        let json = match self {
            Record::Step(t) => serde_json::to_string(t),
            Record::Other(e) => serde_json::to_string(e),
        };
        json.expect("records always serialize")
    }
}

/// Reads the transactions out of a log, skipping other records.
pub fn read_transaction_log(text: &str) -> Result<Vec<Transaction>, (usize, serde_json::Error)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if let Record::Step(t) = Record::parse(line).map_err(|e| (i + 1, e))? {
            out.push(t);
        }
    }
    Ok(out)
}

/// Writes transactions one per line.
pub fn write_transaction_log(txns: &[Transaction]) -> String {
    txns.iter()
        .map(|t| Record::Step(t.clone()).to_line() + "\n")
        .collect()
}

#[derive(Debug, Clone)]
pub struct TutorSession {
    pub session_id: String,
    pub graph_id: String,
    pub trace: TraceState,
    pub mastery: SkillMastery,
    pub uploaded_files: Vec<StoredFile>,
    pub result_id: Option<String>,
    pub created_at: u64,
}

/// Outcome of a step.
#[derive(Debug, Clone, Serialize)]
pub struct StepOutcome {
    pub verdict: Verdict,
    pub is_done: bool,
    pub mastery: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepView {
    pub transaction: Transaction,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillView {
    pub name: String,
    pub label: String,
    pub p_know: f64,
    pub opportunities: u32,
    pub mastered: bool,
}

/// Everything observable about a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub graph_id: String,
    pub created_at: u64,
    pub is_done: bool,
    pub steps: Vec<StepView>,
    /// Matched link ids of every live interpretation.
    pub interpretations: Vec<Vec<String>>,
    pub hint_levels: BTreeMap<String, usize>,
    pub skills: Vec<SkillView>,
    pub uploaded_files: Vec<String>,
    pub result_id: Option<String>,
    /// Library problem best suited to the learner's current mastery.
    pub next_problem: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub id: String,
    pub title: String,
    pub steps: usize,
    pub skills: Vec<String>,
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn new_id() -> String {
    format!("{:032x}", rand::random::<u128>())
}

fn is_id(s: &str) -> bool {
    s.len() == 32
        && s.bytes()
            .all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
}

fn valid_file_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && name.len() <= 255
        && !name.contains(['/', '\\', '\0'])
        && !name.chars().any(char::is_control)
}

/// Writes `bytes` to `path` through a temporary file and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

fn append_line(path: &Path, line: &str) -> io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(format!("{line}\n").as_bytes())?;
    f.sync_data()
}

impl TutorSession {
    fn fresh(meta: &SessionMeta, graph: &BehaviorGraph) -> Result<Self, ServiceError> {
        let trace = start_trace(graph.clone()).map_err(|e| ServiceError::Library(e.to_string()))?;
        Ok(TutorSession {
            session_id: meta.session_id.clone(),
            graph_id: meta.graph_id.clone(),
            mastery: init_mastery(graph),
            trace,
            uploaded_files: Vec::new(),
            result_id: None,
            created_at: meta.created_at,
        })
    }

    pub fn is_done(&self) -> bool {
        self.trace.is_done()
    }

    fn step(&self, txn: Transaction) -> Result<(TutorSession, StepOutcome), ServiceError> {
        if self.trace.is_done() {
            return Err(ServiceError::SessionDone);
        }
        let target = self.trace.hint_target().map(|l| l.id.clone());
        let (trace, verdict) = self.trace.trace(txn);
        let mastery = self
            .mastery
            .apply_verdict(trace.graph(), &verdict, target.as_deref())?;
        let next = TutorSession {
            trace,
            mastery,
            ..self.clone()
        };
        let outcome = StepOutcome {
            verdict,
            is_done: next.trace.is_done(),
            mastery: next
                .mastery
                .entries()
                .map(|(k, e)| (k.to_string(), e.p_know))
                .collect(),
        };
        Ok((next, outcome))
    }

    fn hint(&self, hints_are_errors: bool) -> Result<(TutorSession, HintResponse), ServiceError> {
        let (trace, response) = self.trace.request_hint().map_err(|e| match e {
            TraceError::AlreadyDone => ServiceError::AlreadyDone,
            other => ServiceError::Library(other.to_string()),
        })?;
        let mut mastery = self.mastery.clone();
        if hints_are_errors {
            if let Some(link) = trace.link(&response.target_link) {
                for skill in &link.skills {
                    mastery = mastery.update_on_evidence(skill, false)?.mastery;
                }
            }
        }
        Ok((
            TutorSession {
                trace,
                mastery,
                ..self.clone()
            },
            response,
        ))
    }

    pub fn view(&self, mastery_threshold: f64, library: &[BehaviorGraph]) -> SessionView {
        let graph = self.trace.graph();
        SessionView {
            session_id: self.session_id.clone(),
            graph_id: self.graph_id.clone(),
            created_at: self.created_at,
            is_done: self.trace.is_done(),
            steps: self
                .trace
                .history()
                .iter()
                .map(|(t, v)| StepView {
                    transaction: t.clone(),
                    verdict: v.clone(),
                })
                .collect(),
            interpretations: self
                .trace
                .interpretations()
                .iter()
                .map(|i| i.path.clone())
                .collect(),
            hint_levels: self.trace.hint_levels().clone(),
            skills: skill_views(&self.mastery, graph, mastery_threshold),
            uploaded_files: self.uploaded_files.iter().map(|f| f.name.clone()).collect(),
            result_id: self.result_id.clone(),
            next_problem: select_next_problem(&self.mastery, library)
                .ok()
                .map(|g| g.id.clone()),
        }
    }
}

pub fn skill_views(
    mastery: &SkillMastery,
    graph: &BehaviorGraph,
    threshold: f64,
) -> Vec<SkillView> {
    mastery
        .entries()
        .map(|(name, e)| SkillView {
            name: name.to_string(),
            label: graph
                .skill(name)
                .map(|s| s.label.clone())
                .unwrap_or_default(),
            p_know: e.p_know,
            opportunities: e.opportunities,
            mastered: e.p_know >= threshold,
        })
        .collect()
}

type Slot = Arc<RwLock<TutorSession>>;

/// Sessions and results under one data directory.
///
/// Mutating operations on a session hold its write lock for the whole
/// operation, log append included; reads share the read lock.
pub struct SessionStore {
    config: ServiceConfig,
    library: Vec<BehaviorGraph>,
    sessions: Mutex<HashMap<String, Slot>>,
}

impl SessionStore {
    /// Opens the data directory, creating the layout when missing, and loads
    /// the problem library. Graphs that fail to parse or validate are skipped
    /// with a warning.
    pub fn open(config: ServiceConfig) -> Result<Self, ServiceError> {
        for sub in ["problems", "sessions", "results"] {
            fs::create_dir_all(config.data_dir.join(sub))?;
        }
        let probe = config.data_dir.join(".write-probe");
        fs::write(&probe, b"")?;
        fs::remove_file(probe)?;

        let mut library: Vec<BehaviorGraph> = Vec::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(config.data_dir.join("problems"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".brd.xml"))
            .collect();
        paths.sort();
        for path in paths {
            let text = fs::read_to_string(&path)?;
            let graph = match parse_graph(&text) {
                Ok(g) => g,
                Err(e) => {
                    tracing::warn!(path = %path.display(), error = %e, "skipping unparsable problem");
                    continue;
                }
            };
            if validate_graph(&graph)
                .iter()
                .any(|d| d.severity() == Severity::Error)
            {
                tracing::warn!(path = %path.display(), "skipping problem with validation errors");
                continue;
            }
            if library.iter().any(|g| g.id == graph.id) {
                return Err(ServiceError::Library(format!(
                    "duplicate problem id {:?}",
                    graph.id
                )));
            }
            library.push(graph);
        }
        library.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(SessionStore {
            config,
            library,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn library(&self) -> &[BehaviorGraph] {
        &self.library
    }

    pub fn problems(&self) -> Vec<ProblemSummary> {
        self.library
            .iter()
            .map(|g| ProblemSummary {
                id: g.id.clone(),
                title: g.title.clone(),
                steps: g.step_count(),
                skills: g.skills.iter().map(|s| s.name.clone()).collect(),
            })
            .collect()
    }

    fn graph(&self, id: &str) -> Option<&BehaviorGraph> {
        self.library.iter().find(|g| g.id == id)
    }

    fn session_dir(&self, id: &str) -> PathBuf {
        self.config.data_dir.join("sessions").join(id)
    }

    fn result_path(&self, id: &str) -> PathBuf {
        self.config
            .data_dir
            .join("results")
            .join(format!("{id}.txt"))
    }

    pub fn create_session(&self, graph_id: &str) -> Result<SessionView, ServiceError> {
        let graph = self
            .graph(graph_id)
            .ok_or_else(|| ServiceError::UnknownGraph(graph_id.to_string()))?;
        let meta = SessionMeta {
            session_id: new_id(),
            graph_id: graph_id.to_string(),
            created_at: now_millis(),
        };
        let session = TutorSession::fresh(&meta, graph)?;
        let dir = self.session_dir(&meta.session_id);
        fs::create_dir_all(dir.join("files"))?;
        File::create(dir.join("events.jsonl"))?.sync_all()?;
        write_atomic(
            &dir.join("session.json"),
            &serde_json::to_vec_pretty(&meta).expect("meta serializes"),
        )?;
        let view = self.view_of(&session);
        self.sessions
            .lock()
            .expect("session map poisoned")
            .insert(meta.session_id.clone(), Arc::new(RwLock::new(session)));
        tracing::info!(session = %meta.session_id, graph = graph_id, "session created");
        Ok(view)
    }

    fn view_of(&self, s: &TutorSession) -> SessionView {
        s.view(self.config.mastery_threshold, &self.library)
    }

    /// Looks a session up in memory, rebuilding it from disk on first use.
    fn slot(&self, id: &str) -> Result<Slot, ServiceError> {
        if !is_id(id) {
            return Err(ServiceError::UnknownSession(id.to_string()));
        }
        let mut map = self.sessions.lock().expect("session map poisoned");
        if let Some(slot) = map.get(id) {
            return Ok(Arc::clone(slot));
        }
        let session = self.load(id)?;
        let slot = Arc::new(RwLock::new(session));
        map.insert(id.to_string(), Arc::clone(&slot));
        Ok(slot)
    }

    /// Rebuilds a session from its metadata and event log.
    pub fn load(&self, id: &str) -> Result<TutorSession, ServiceError> {
        let dir = self.session_dir(id);
        let corrupt = |reason: String| ServiceError::Corrupt {
            session: id.to_string(),
            reason,
        };
        let meta_text = match fs::read_to_string(dir.join("session.json")) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(ServiceError::UnknownSession(id.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        let meta: SessionMeta =
            serde_json::from_str(&meta_text).map_err(|e| corrupt(e.to_string()))?;
        let graph = self.graph(&meta.graph_id).ok_or_else(|| {
            corrupt(format!(
                "problem {:?} is no longer in the library",
                meta.graph_id
            ))
        })?;
        let mut session = TutorSession::fresh(&meta, graph)?;
        let log = fs::read_to_string(dir.join("events.jsonl"))?;
        let lines: Vec<&str> = log.lines().collect();
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record = match Record::parse(line) {
                Ok(r) => r,
                // A torn final line from a crash mid-append.
                Err(e) if i + 1 == lines.len() && !log.ends_with('\n') => {
                    tracing::warn!(session = id, error = %e, "ignoring incomplete final log line");
                    break;
                }
                Err(e) => return Err(corrupt(format!("events.jsonl line {}: {e}", i + 1))),
            };
            session = self
                .replay_record(session, record)
                .map_err(|e| corrupt(format!("events.jsonl line {}: {e}", i + 1)))?;
        }
        Ok(session)
    }

    fn replay_record(
        &self,
        session: TutorSession,
        record: Record,
    ) -> Result<TutorSession, ServiceError> {
        Ok(match record {
            Record::Step(txn) => session.step(txn)?.0,
            Record::Other(Event::Hint { .. }) => session.hint(self.config.hints_are_errors)?.0,
            Record::Other(Event::Upload { name, .. }) => {
                let path = self
                    .session_dir(&session.session_id)
                    .join("files")
                    .join(&name);
                let mut s = session;
                s.uploaded_files.push(StoredFile { name, path });
                s
            }
            Record::Other(Event::Process { result_id, .. }) => TutorSession {
                result_id: Some(result_id),
                ..session
            },
        })
    }

    fn append(&self, id: &str, record: &Record) -> io::Result<()> {
        append_line(
            &self.session_dir(id).join("events.jsonl"),
            &record.to_line(),
        )
    }

    fn audit(&self, id: &str, op: &str, err: &ServiceError) {
        let line = serde_json::json!({
            "timestamp": now_millis(),
            "op": op,
            "error": err.code(),
            "message": err.to_string(),
        });
        if let Err(e) = append_line(&self.session_dir(id).join("audit.log"), &line.to_string()) {
            tracing::warn!(session = id, error = %e, "audit log write failed");
        }
    }

    /// Runs `op` under the session's write lock; the new state is committed
    /// only after its log record is on disk.
    fn mutate<T>(
        &self,
        id: &str,
        op_name: &str,
        op: impl FnOnce(&TutorSession) -> Result<(TutorSession, T, Record), ServiceError>,
    ) -> Result<T, ServiceError> {
        let slot = self.slot(id)?;
        let mut guard = slot.write().expect("session lock poisoned");
        let result = op(&guard).and_then(|(next, out, record)| {
            self.append(id, &record)?;
            Ok((next, out))
        });
        match result {
            Ok((next, out)) => {
                *guard = next;
                Ok(out)
            }
            Err(e) => {
                self.audit(id, op_name, &e);
                Err(e)
            }
        }
    }

    pub fn get_session(&self, id: &str) -> Result<SessionView, ServiceError> {
        let slot = self.slot(id)?;
        let guard = slot.read().expect("session lock poisoned");
        Ok(self.view_of(&guard))
    }

    pub fn post_transaction(
        &self,
        id: &str,
        txn: Transaction,
    ) -> Result<StepOutcome, ServiceError> {
        self.mutate(id, "transaction", |s| {
            let txn = Transaction {
                timestamp: now_millis(),
                ..txn
            };
            let (next, outcome) = s.step(txn.clone())?;
            Ok((next, outcome, Record::Step(txn)))
        })
    }

    pub fn get_hint(&self, id: &str) -> Result<HintResponse, ServiceError> {
        let hints_are_errors = self.config.hints_are_errors;
        self.mutate(id, "hint", |s| {
            let (next, response) = s.hint(hints_are_errors)?;
            Ok((
                next,
                response,
                Record::Other(Event::Hint {
                    timestamp: now_millis(),
                }),
            ))
        })
    }

    pub fn upload_file(
        &self,
        id: &str,
        name: &str,
        bytes: &[u8],
    ) -> Result<StoredFile, ServiceError> {
        self.mutate(id, "upload", |s| {
            if !valid_file_name(name) {
                return Err(ServiceError::InvalidName(name.to_string()));
            }
            if s.uploaded_files.iter().any(|f| f.name == name) {
                return Err(ServiceError::DuplicateName(name.to_string()));
            }
            let text = String::from_utf8_lossy(bytes);
            crate::adjacency::parse_refseq_tab(&text).map_err(|error| ServiceError::Parse {
                file: name.to_string(),
                error,
            })?;
            let path = self.session_dir(id).join("files").join(name);
            write_atomic(&path, bytes)?;
            let stored = StoredFile {
                name: name.to_string(),
                path,
            };
            let mut next = s.clone();
            next.uploaded_files.push(stored.clone());
            let record = Record::Other(Event::Upload {
                name: name.to_string(),
                timestamp: now_millis(),
            });
            Ok((next, stored, record))
        })
    }

    /// Runs the adjacency pipeline over the uploaded files and stores the report.
    pub fn process_files(
        &self,
        id: &str,
        gap_threshold: Option<u64>,
    ) -> Result<String, ServiceError> {
        let gap_threshold = gap_threshold.unwrap_or(self.config.gap_threshold);
        self.mutate(id, "process", |s| {
            if s.uploaded_files.is_empty() {
                return Err(ServiceError::NoFiles);
            }
            let files = s
                .uploaded_files
                .iter()
                .map(|f| {
                    Ok(InputFile {
                        name: f.name.clone(),
                        text: fs::read_to_string(&f.path)?,
                    })
                })
                .collect::<Result<Vec<_>, io::Error>>()?;
            let analysis = analyze(&files, gap_threshold, self.config.min_match_len)?;
            let result_id = new_id();
            write_atomic(
                &self.result_path(&result_id),
                export_report(&analysis).as_bytes(),
            )?;
            let next = TutorSession {
                result_id: Some(result_id.clone()),
                ..s.clone()
            };
            let record = Record::Other(Event::Process {
                result_id: result_id.clone(),
                gap_threshold,
                timestamp: now_millis(),
            });
            Ok((next, result_id, record))
        })
    }

    pub fn get_result(&self, result_id: &str) -> Result<Vec<u8>, ServiceError> {
        if !is_id(result_id) {
            return Err(ServiceError::UnknownResult(result_id.to_string()));
        }
        match fs::read(self.result_path(result_id)) {
            Ok(bytes) => Ok(bytes),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                Err(ServiceError::UnknownResult(result_id.to_string()))
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn get_skills(&self, id: &str) -> Result<Vec<SkillView>, ServiceError> {
        let slot = self.slot(id)?;
        let guard = slot.read().expect("session lock poisoned");
        Ok(skill_views(
            &guard.mastery,
            guard.trace.graph(),
            self.config.mastery_threshold,
        ))
    }

    /// Mastery table as tab-separated text.
    pub fn get_skills_tsv(&self, id: &str) -> Result<String, ServiceError> {
        let slot = self.slot(id)?;
        let guard = slot.read().expect("session lock poisoned");
        Ok(guard.mastery.to_tsv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracer::VerdictKind;

    const GRAPH: &str = r#"<graph id="two" title="Two steps" start="a">
  <skill name="press" label="Pressing" p-init="0.5" p-transit="0.3" p-slip="0.1" p-guess="0.2"/>
  <node id="a"/><node id="b"/><node id="c"/>
  <link id="one" source="a" target="b"><matcher selection="ONE" action="Press"/><hint>press one</hint><hint>press ONE now</hint><skill name="press"/></link>
  <link id="two" source="b" target="c"><matcher selection="TWO" action="Press"/><hint>press two</hint><skill name="press"/></link>
</graph>"#;

    fn store(dir: &Path) -> SessionStore {
        fs::create_dir_all(dir.join("problems")).unwrap();
        fs::write(dir.join("problems/two.brd.xml"), GRAPH).unwrap();
        SessionStore::open(ServiceConfig {
            data_dir: dir.to_path_buf(),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn steps_hints_and_reload() {
        let tmp = tempfile::tempdir().unwrap();
        let s = store(tmp.path());
        let id = s.create_session("two").unwrap().session_id;
        assert_eq!(s.get_hint(&id).unwrap().message, "press one");
        assert_eq!(s.get_hint(&id).unwrap().message, "press ONE now");
        let wrong = s
            .post_transaction(&id, Transaction::new("TWO", "Press", ""))
            .unwrap();
        assert_eq!(wrong.verdict.kind, VerdictKind::Incorrect);
        let ok = s
            .post_transaction(&id, Transaction::new("ONE", "Press", ""))
            .unwrap();
        assert!(ok.verdict.is_correct());
        let before = s.get_session(&id).unwrap();

        let reopened = store(tmp.path());
        assert_eq!(reopened.get_session(&id).unwrap(), before);
    }

    #[test]
    fn done_sessions_reject_steps_and_hints() {
        let tmp = tempfile::tempdir().unwrap();
        let s = store(tmp.path());
        let id = s.create_session("two").unwrap().session_id;
        s.post_transaction(&id, Transaction::new("ONE", "Press", ""))
            .unwrap();
        assert!(
            s.post_transaction(&id, Transaction::new("TWO", "Press", ""))
                .unwrap()
                .is_done
        );
        let log =
            fs::read_to_string(tmp.path().join("sessions").join(&id).join("events.jsonl")).unwrap();
        assert!(matches!(
            s.post_transaction(&id, Transaction::new("ONE", "Press", "")),
            Err(ServiceError::SessionDone)
        ));
        assert!(matches!(s.get_hint(&id), Err(ServiceError::AlreadyDone)));
        let after =
            fs::read_to_string(tmp.path().join("sessions").join(&id).join("events.jsonl")).unwrap();
        assert_eq!(log, after);
        let audit =
            fs::read_to_string(tmp.path().join("sessions").join(&id).join("audit.log")).unwrap();
        assert_eq!(audit.lines().count(), 2);
    }

    #[test]
    fn unknown_ids() {
        let tmp = tempfile::tempdir().unwrap();
        let s = store(tmp.path());
        assert!(matches!(
            s.create_session("nope"),
            Err(ServiceError::UnknownGraph(_))
        ));
        assert!(matches!(
            s.get_session(&"0".repeat(32)),
            Err(ServiceError::UnknownSession(_))
        ));
        assert!(matches!(
            s.get_session("../etc"),
            Err(ServiceError::UnknownSession(_))
        ));
        assert!(matches!(
            s.get_result(&"0".repeat(32)),
            Err(ServiceError::UnknownResult(_))
        ));
    }

    #[test]
    fn uploads_and_processing() {
        let tmp = tempfile::tempdir().unwrap();
        let s = store(tmp.path());
        let id = s.create_session("two").unwrap().session_id;
        assert!(matches!(
            s.process_files(&id, None),
            Err(ServiceError::NoFiles)
        ));
        let table = b"genome_id\tgene_id\tstrand\tstart\tend\nG\ta\t+\t1\t100\nG\tb\t+\t150\t300\n";
        s.upload_file(&id, "g.cds.tab", table).unwrap();
        assert!(matches!(
            s.upload_file(&id, "g.cds.tab", table),
            Err(ServiceError::DuplicateName(_))
        ));
        assert!(matches!(
            s.upload_file(&id, "../x", table),
            Err(ServiceError::InvalidName(_))
        ));
        let bad = s
            .upload_file(
                &id,
                "bad.tab",
                b"genome_id\tgene_id\tstrand\tstart\tend\nG\ta\t.\t1\t2\n",
            )
            .unwrap_err();
        assert_eq!(bad.line(), Some(2));
        let rid = s.process_files(&id, None).unwrap();
        let report = String::from_utf8(s.get_result(&rid).unwrap()).unwrap();
        assert!(report.contains("unit genes 1..2"));
        assert_eq!(s.get_result(&rid).unwrap(), report.as_bytes());
        assert_eq!(
            store(tmp.path()).get_session(&id).unwrap().result_id,
            Some(rid)
        );
    }

    #[test]
    fn torn_final_line_is_ignored() {
        let tmp = tempfile::tempdir().unwrap();
        let s = store(tmp.path());
        let id = s.create_session("two").unwrap().session_id;
        s.post_transaction(&id, Transaction::new("ONE", "Press", ""))
            .unwrap();
        let before = s.get_session(&id).unwrap();
        append_line(
            &tmp.path().join("sessions").join(&id).join("events.jsonl"),
            "",
        )
        .unwrap();
        let log = tmp.path().join("sessions").join(&id).join("events.jsonl");
        let mut f = OpenOptions::new().append(true).open(&log).unwrap();
        f.write_all(b"{\"selection\":\"TW").unwrap();
        assert_eq!(store(tmp.path()).get_session(&id).unwrap(), before);
    }

    #[test]
    fn transaction_log_round_trip() {
        let txns = vec![
            Transaction::new("A", "B", "c\td"),
            Transaction {
                timestamp: 7,
                ..Transaction::new("x", "y", "")
            },
        ];
        let text = write_transaction_log(&txns);
        assert_eq!(read_transaction_log(&text).unwrap(), txns);
        let mixed = format!("{{\"event\":\"hint\",\"timestamp\":1}}\n{text}");
        assert_eq!(read_transaction_log(&mixed).unwrap(), txns);
    }
}
