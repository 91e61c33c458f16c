//! Benchmark workloads.

use gatutor_core::adjacency::{GeneRecord, Genome, Strand};
use gatutor_core::{parse_graph, BehaviorGraph, Transaction};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// A chain of `steps` links with a buggy self-loop at every node and
/// unordered groups of three along the way.
pub fn chain_graph(steps: usize) -> BehaviorGraph {
    let mut xml = String::from(r#"<graph id="chain" start="n0"><skill name="s"/>"#);
    for i in 0..=steps {
        xml += &format!(r#"<node id="n{i}"/>"#);
    }
    for i in 0..steps {
        xml += &format!(
            r#"<link id="c{i}" source="n{i}" target="n{}"><matcher selection="S{i}" action="Press"/><hint>step {i}</hint><skill name="s"/></link>"#,
            i + 1
        );
        xml += &format!(
            r#"<link id="x{i}" source="n{i}" target="n{i}" evaluation="incorrect" buggy="no"><matcher selection="WRONG" action="Press"/></link>"#
        );
    }
    for g in 0..steps / 3 {
        xml += &format!(
            r#"<group links="c{} c{} c{}"/>"#,
            3 * g,
            3 * g + 1,
            3 * g + 2
        );
    }
    parse_graph(&(xml + "</graph>")).expect("benchmark graph parses")
}

/// Walks the chain, reversing each group and inserting a wrong step every
/// fifth transaction.
pub fn chain_transactions(steps: usize) -> Vec<Transaction> {
    let mut order: Vec<usize> = (0..steps).collect();
    for block in order.chunks_mut(3) {
        if block.len() == 3 {
            block.reverse();
        }
    }
    let mut out = Vec::new();
    for (k, i) in order.into_iter().enumerate() {
        if k % 5 == 4 {
            out.push(Transaction::new("WRONG", "Press", ""));
        }
        out.push(Transaction::new(format!("S{i}"), "Press", ""));
    }
    out
}

pub fn genome(genes: usize, seed: u64) -> Genome {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut pos = 1;
    let records = (0..genes)
        .map(|i| {
            let start = pos + rng.random_range(0..400);
            let end = start + rng.random_range(100..2000);
            pos = end;
            GeneRecord {
                genome_id: format!("G{seed}"),
                gene_id: format!("g{i}"),
                strand: if rng.random_bool(0.7) {
                    Strand::Forward
                } else {
                    Strand::Reverse
                },
                start,
                end,
            }
        })
        .collect();
    Genome::new(format!("G{seed}"), records).expect("generated genome is consistent")
}
