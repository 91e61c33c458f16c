//! Random gene tables and a plain-vector reference for adjacency codes.

use gatutor_core::adjacency::{GeneRecord, Strand};
use rand::rngs::StdRng;
use rand::Rng;

/// Random genes with strictly increasing starts and ends (overlaps allowed,
/// no gene nested inside another), shuffled. Gaps cluster around `scale`.
pub fn random_genes(
    rng: &mut StdRng,
    genome_id: &str,
    max_genes: usize,
    scale: u64,
) -> Vec<GeneRecord> {
    let n = rng.random_range(0..=max_genes);
    let mut out = Vec::with_capacity(n);
    let (mut start, mut end) = (rng.random_range(1..=scale.max(1)), 0u64);
    for i in 0..n {
        let len = rng.random_range(30..=1500u64);
        let e = (start + len).max(end + 1);
        out.push(GeneRecord {
            genome_id: genome_id.to_string(),
            gene_id: format!("{genome_id}_g{i}"),
            strand: if rng.random_bool(0.5) {
                Strand::Forward
            } else {
                Strand::Reverse
            },
            start,
            end: e,
        });
        end = e;
        // Next start may fall inside the current gene, but strictly after its start.
        let back = rng.random_range(0..=len.min(60));
        let gap = rng.random_range(0..=2 * scale);
        start = (end + gap).saturating_sub(back).max(start + 1);
    }
    for i in (1..out.len()).rev() {
        let j = rng.random_range(0..=i);
        out.swap(i, j);
    }
    out
}

/// Reverse-complement view: coordinates reflected inside `[1, span]`,
/// strands flipped.
pub fn mirrored(genes: &[GeneRecord], span: u64) -> Vec<GeneRecord> {
    genes
        .iter()
        .map(|g| GeneRecord {
            genome_id: g.genome_id.clone(),
            gene_id: g.gene_id.clone(),
            strand: g.strand.flipped(),
            start: span + 1 - g.end,
            end: span + 1 - g.start,
        })
        .collect()
}

pub fn span(genes: &[GeneRecord]) -> u64 {
    genes.iter().map(|g| g.end).max().unwrap_or(1)
}

fn sorted(genes: &[GeneRecord]) -> Vec<&GeneRecord> {
    let mut v: Vec<&GeneRecord> = genes.iter().collect();
    v.sort_by(|a, b| (a.start, a.end, &a.gene_id).cmp(&(b.start, b.end, &b.gene_id)));
    v
}

/// Code as a `0`/`1` string, computed from scratch.
pub fn reference_code(genes: &[GeneRecord], threshold: u64) -> String {
    let s = sorted(genes);
    (1..s.len())
        .map(|i| {
            let close = s[i].start as i128 - s[i - 1].end as i128 <= threshold as i128;
            if s[i].strand == s[i - 1].strand && close {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

/// Units as inclusive index ranges: genes `i` and `j` share a unit when
/// every neighbouring pair between them is joined.
pub fn reference_units(genes: &[GeneRecord], threshold: u64) -> Vec<(usize, usize)> {
    let code: Vec<char> = reference_code(genes, threshold).chars().collect();
    let n = genes.len();
    let joined = |i: usize, j: usize| (i..j).all(|k| code[k] == '1');
    let mut out: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        let first = (0..=i).find(|&f| joined(f, i)).unwrap();
        let last = (i..n).rev().find(|&l| joined(i, l)).unwrap();
        if out.last() != Some(&(first, last)) {
            out.push((first, last));
        }
    }
    out
}
