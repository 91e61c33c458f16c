//! Example-tracing tutor engine with a gene adjacency host toolkit.
//!
//! - [`graph`]: behavior graphs, their XML format, validation and skill matrix.
//! - [`tracer`]: matches learner transactions against a graph, gives feedback and hints.
//! - [`mastery`]: per-skill Bayesian knowledge tracing and problem selection.
//! - [`adjacency`]: `.cds.tab` parsing, adjacency codes, transcriptional units, code search, reports.
//! - [`session`]: persistent tutoring sessions backing the HTTP service.

pub mod graph;

pub use graph::{
    parse_graph, serialize_graph, skill_matrix, validate_graph, BehaviorGraph, Diagnostic,
    Evaluation, GraphError, GraphLink, GraphNode, MatchPattern, PatternKind, Severity, SkillDef,
    SkillMatrix, SkillParams, StepMatcher,
};
pub mod tracer;

pub use tracer::{
    replay, start_trace, HintResponse, Interpretation, TraceError, TraceState, Transaction,
    Verdict, VerdictKind,
};
pub mod mastery;

pub use mastery::{
    init_mastery, select_next_problem, MasteryError, SkillMastery, MASTERY_THRESHOLD,
};

pub mod adjacency;

pub use adjacency::{
    adjacency_code, analyze, compare_genomes, export_report, match_pattern, parse_refseq_tab,
    predict_units, AdjacencyCode, BitString, GeneRecord, Genome, Strand, TranscriptionalUnit,
    DEFAULT_GAP_THRESHOLD,
};

pub mod session;

pub use session::{ServiceConfig, ServiceError, SessionStore, SessionView, TutorSession};
