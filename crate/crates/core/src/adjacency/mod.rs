//! Gene adjacency analysis.
//!
//! Genes of a genome, sorted by start coordinate, are reduced to a bit
//! string: bit `i` is set when gene `i` and gene `i + 1` sit on the same
//! strand and the intergenic gap is at most a threshold. Runs of set bits
//! give predicted transcriptional units (operon candidates), and the bit
//! strings of different genomes can be searched and compared.

mod report;
mod search;
mod tab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use report::{
    analyze, export_records, export_report, Analysis, CrossMatch, InputFile, PipelineError,
};
pub use search::{compare_genomes, match_pattern, PatternHit, SearchError, SharedSegment};
pub use tab::{parse_refseq_tab, TabError, TAB_HEADER};

/// Default maximum intergenic distance, in base pairs, for adjacent genes.
pub const DEFAULT_GAP_THRESHOLD: u64 = 200;
/// Default minimum length of shared code segments reported across genomes.
pub const DEFAULT_MIN_MATCH_LEN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strand {
    #[serde(rename = "+")]
    Forward,
    #[serde(rename = "-")]
    Reverse,
}

impl Strand {
    pub fn flipped(self) -> Self {
        match self {
            Strand::Forward => Strand::Reverse,
            Strand::Reverse => Strand::Forward,
        }
    }
}

impl fmt::Display for Strand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strand::Forward => "+",
            Strand::Reverse => "-",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneRecord {
    pub genome_id: String,
    pub gene_id: String,
    pub strand: Strand,
    /// 1-based inclusive coordinates.
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdjacencyError {
    #[error("gene {gene_id:?} belongs to {found:?}, not {expected:?}")]
    MixedGenome {
        expected: String,
        found: String,
        gene_id: String,
    },
    #[error("gene {gene_id:?} has start {start} after end {end}")]
    InvertedCoordinates {
        gene_id: String,
        start: u64,
        end: u64,
    },
    #[error("code for {genome_id:?} has {found} bits, expected {expected}")]
    LengthMismatch {
        genome_id: String,
        expected: usize,
        found: usize,
    },
}

/// Genes of one genome, ordered by start coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genome {
    genome_id: String,
    genes: Vec<GeneRecord>,
}

impl Genome {
    /// Builds a genome, sorting genes by (start, end, gene id).
    pub fn new(
        genome_id: impl Into<String>,
        mut genes: Vec<GeneRecord>,
    ) -> Result<Self, AdjacencyError> {
        let genome_id = genome_id.into();
        for g in &genes {
            if g.genome_id != genome_id {
                return Err(AdjacencyError::MixedGenome {
                    expected: genome_id,
                    found: g.genome_id.clone(),
                    gene_id: g.gene_id.clone(),
                });
            }
            if g.start > g.end {
                return Err(AdjacencyError::InvertedCoordinates {
                    gene_id: g.gene_id.clone(),
                    start: g.start,
                    end: g.end,
                });
            }
        }
        genes.sort_by(|a, b| (a.start, a.end, &a.gene_id).cmp(&(b.start, b.end, &b.gene_id)));
        Ok(Genome { genome_id, genes })
    }

    /// Splits records into genomes, ordered by genome id.
    pub fn group(records: Vec<GeneRecord>) -> Result<Vec<Genome>, AdjacencyError> {
        let mut by_id: std::collections::BTreeMap<String, Vec<GeneRecord>> = Default::default();
        for r in records {
            by_id.entry(r.genome_id.clone()).or_default().push(r);
        }
        by_id
            .into_iter()
            .map(|(id, genes)| Genome::new(id, genes))
            .collect()
    }

    pub fn genome_id(&self) -> &str {
        &self.genome_id
    }

    pub fn genes(&self) -> &[GeneRecord] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }
}

/// A string of bits, written as `0`/`1` characters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Self {
        BitString(self.0.iter().rev().copied().collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a bit string: unexpected {0:?}")]
pub struct BitParseError(pub char);

impl FromStr for BitString {
    type Err = BitParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitParseError(other)),
            })
            .collect::<Result<_, _>>()
            .map(BitString)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyCode {
    pub genome_id: String,
    pub bits: BitString,
}

/// Inclusive range of gene indices (0-based, into the sorted gene list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnitRange {
    pub first: usize,
    pub last: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptionalUnit {
    pub genome_id: String,
    pub genes: UnitRange,
}

/// Intergenic distance from the end of `a` to the start of `b`; negative
/// when the genes overlap.
fn gap(a: &GeneRecord, b: &GeneRecord) -> i128 {
    b.start as i128 - a.end as i128
}

pub fn adjacency_code(genome: &Genome, gap_threshold: u64) -> AdjacencyCode {
    let bits = genome
        .genes
        .windows(2)
        .map(|w| w[0].strand == w[1].strand && gap(&w[0], &w[1]) <= gap_threshold as i128)
        .collect();
    AdjacencyCode {
        genome_id: genome.genome_id.clone(),
        bits: BitString(bits),
    }
}

/// Groups genes joined by set bits into units; every gene lands in exactly one.
pub fn predict_units(
    genome: &Genome,
    code: &AdjacencyCode,
) -> Result<Vec<TranscriptionalUnit>, AdjacencyError> {
    let n = genome.len();
    let expected = n.saturating_sub(1);
    if code.bits.len() != expected {
        return Err(AdjacencyError::LengthMismatch {
            genome_id: genome.genome_id.clone(),
            expected,
            found: code.bits.len(),
        });
    }
    let mut units = Vec::new();
    let mut first = 0;
    for i in 0..n {
        let joined = code.bits.0.get(i).copied().unwrap_or(false);
        if !joined {
            units.push(TranscriptionalUnit {
                genome_id: genome.genome_id.clone(),
                genes: UnitRange { first, last: i },
            });
            first = i + 1;
        }
    }
    Ok(units)
}
