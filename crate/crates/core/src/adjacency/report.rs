use std::fmt::Write as _;

use super::{
    adjacency_code, compare_genomes, parse_refseq_tab, predict_units, AdjacencyCode,
    AdjacencyError, Genome, SharedSegment, TabError, TranscriptionalUnit,
};

/// An uploaded annotation table.
#[derive(Debug, Clone)]
pub struct InputFile {
    pub name: String,
    pub text: String,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{file}: {error}")]
    Parse { file: String, error: TabError },
    #[error(transparent)]
    Genome(#[from] AdjacencyError),
}

/// Shared code segment between two genomes (`genome_a` < `genome_b`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossMatch {
    pub genome_a: String,
    pub genome_b: String,
    pub segment: SharedSegment,
}

/// Everything a processing run produces, ordered by genome id.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub gap_threshold: u64,
    pub min_match_len: usize,
    pub genomes: Vec<Genome>,
    pub codes: Vec<AdjacencyCode>,
    pub units: Vec<Vec<TranscriptionalUnit>>,
    pub matches: Vec<CrossMatch>,
}

/// Parses the files, merges records by genome id and runs every analysis.
pub fn analyze(
    files: &[InputFile],
    gap_threshold: u64,
    min_match_len: usize,
) -> Result<Analysis, PipelineError> {
    let mut records = Vec::new();
    for f in files {
        records.extend(
            parse_refseq_tab(&f.text).map_err(|error| PipelineError::Parse {
                file: f.name.clone(),
                error,
            })?,
        );
    }
    let genomes = Genome::group(records)?;
    let codes: Vec<AdjacencyCode> = genomes
        .iter()
        .map(|g| adjacency_code(g, gap_threshold))
        .collect();
    let units = genomes
        .iter()
        .zip(&codes)
        .map(|(g, c)| predict_units(g, c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut matches = Vec::new();
    for (i, a) in codes.iter().enumerate() {
        for b in &codes[i + 1..] {
            matches.extend(
                compare_genomes(a, b, min_match_len)
                    .into_iter()
                    .map(|segment| CrossMatch {
                        genome_a: a.genome_id.clone(),
                        genome_b: b.genome_id.clone(),
                        segment,
                    }),
            );
        }
    }
    Ok(Analysis {
        gap_threshold,
        min_match_len,
        genomes,
        codes,
        units,
        matches,
    })
}

/// Human-readable text report.
pub fn export_report(analysis: &Analysis) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Gene Adjacency Report");
    let _ = writeln!(out, "gap threshold: {} bp", analysis.gap_threshold);
    let _ = writeln!(out, "genomes: {}", analysis.genomes.len());
    for ((genome, code), units) in analysis
        .genomes
        .iter()
        .zip(&analysis.codes)
        .zip(&analysis.units)
    {
        let _ = writeln!(out);
        let _ = writeln!(out, "== genome {} ==", genome.genome_id());
        let _ = writeln!(out, "genes: {}", genome.len());
        let _ = writeln!(out, "code: {}", code.bits);
        for (i, g) in genome.genes().iter().enumerate() {
            let _ = writeln!(
                out,
                "gene {}\t{}\t{}\t{}\t{}",
                i + 1,
                g.gene_id,
                g.strand,
                g.start,
                g.end
            );
        }
        for u in units {
            let _ = writeln!(
                out,
                "unit genes {}..{}",
                u.genes.first + 1,
                u.genes.last + 1
            );
        }
    }
    for (i, a) in analysis.genomes.iter().enumerate() {
        for b in &analysis.genomes[i + 1..] {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "== comparison {} vs {} (min length {}) ==",
                a.genome_id(),
                b.genome_id(),
                analysis.min_match_len
            );
            let mut any = false;
            for m in analysis
                .matches
                .iter()
                .filter(|m| m.genome_a == a.genome_id() && m.genome_b == b.genome_id())
            {
                any = true;
                let s = &m.segment;
                let _ = writeln!(
                    out,
                    "shared {} at offset {} in {}, offset {} in {}",
                    s.bits, s.offset_a, m.genome_a, s.offset_b, m.genome_b
                );
            }
            if !any {
                let _ = writeln!(out, "no shared segments");
            }
        }
    }
    out
}

/// One tab-separated record per line, for downstream tools.
///
/// Record kinds: `genome`, `gene`, `unit`, `match`. Gene and unit numbers
/// are 1-based; code offsets are 0-based.
pub fn export_records(analysis: &Analysis) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "#gap_threshold\t{}", analysis.gap_threshold);
    let _ = writeln!(out, "#min_match_len\t{}", analysis.min_match_len);
    for ((genome, code), units) in analysis
        .genomes
        .iter()
        .zip(&analysis.codes)
        .zip(&analysis.units)
    {
        let id = genome.genome_id();
        let _ = writeln!(out, "genome\t{id}\t{}\t{}", genome.len(), code.bits);
        for (i, g) in genome.genes().iter().enumerate() {
            let _ = writeln!(
                out,
                "gene\t{id}\t{}\t{}\t{}\t{}\t{}",
                i + 1,
                g.gene_id,
                g.strand,
                g.start,
                g.end
            );
        }
        for u in units {
            let _ = writeln!(
                out,
                "unit\t{id}\t{}\t{}",
                u.genes.first + 1,
                u.genes.last + 1
            );
        }
    }
    for m in &analysis.matches {
        let s = &m.segment;
        let _ = writeln!(
            out,
            "match\t{}\t{}\t{}\t{}\t{}",
            m.genome_a, s.offset_a, m.genome_b, s.offset_b, s.bits
        );
    }
    out
}
