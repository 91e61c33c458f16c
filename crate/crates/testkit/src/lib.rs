//! Reference implementations and generators for tests.
//!
//! Nothing here shares code paths with the engine it checks: the tracer
//! oracle enumerates graph walks directly, the genome oracles work on plain
//! vectors and strings.

pub mod genomes;
pub mod graphs;
pub mod oracle;
pub mod strings;

use std::path::PathBuf;

/// Repository root, for loading shared fixtures.
pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture(rel: &str) -> PathBuf {
    repo_root().join("fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    let path = fixture(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}
