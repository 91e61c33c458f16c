use super::{AdjacencyCode, BitString};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("search pattern is empty")]
    EmptyPattern,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PatternHit {
    pub genome_id: String,
    pub offset: usize,
}

/// A maximal segment two codes have in common.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SharedSegment {
    pub offset_a: usize,
    pub offset_b: usize,
    pub bits: BitString,
}

/// Failure function for Knuth-Morris-Pratt.
fn prefix_table(p: &[bool]) -> Vec<usize> {
    let mut table = vec![0; p.len()];
    let mut k = 0;
    for i in 1..p.len() {
        while k > 0 && p[i] != p[k] {
            k = table[k - 1];
        }
        if p[i] == p[k] {
            k += 1;
        }
        table[i] = k;
    }
    table
}

/// Every occurrence of `pattern` in every code, overlaps included, ordered
/// by genome id then offset.
pub fn match_pattern(
    codes: &[AdjacencyCode],
    pattern: &BitString,
) -> Result<Vec<PatternHit>, SearchError> {
    let p = pattern.bits();
    if p.is_empty() {
        return Err(SearchError::EmptyPattern);
    }
    let table = prefix_table(p);
    let mut hits = Vec::new();
    for code in codes {
        let mut k = 0;
        for (i, &b) in code.bits.bits().iter().enumerate() {
            while k > 0 && b != p[k] {
                k = table[k - 1];
            }
            if b == p[k] {
                k += 1;
            }
            if k == p.len() {
                hits.push(PatternHit {
                    genome_id: code.genome_id.clone(),
                    offset: i + 1 - p.len(),
                });
                k = table[k - 1];
            }
        }
    }
    hits.sort();
    Ok(hits)
}

/// Maximal common segments of length at least `min_len` (treated as 1 when
/// 0), ordered by offset in `a` then offset in `b`.
///
/// Scans each diagonal of the match matrix; a run of agreeing positions
/// bounded by a disagreement or a string end cannot be extended either way.
pub fn compare_genomes(a: &AdjacencyCode, b: &AdjacencyCode, min_len: usize) -> Vec<SharedSegment> {
    let (x, y) = (a.bits.bits(), b.bits.bits());
    let min_len = min_len.max(1);
    let mut out = Vec::new();
    let diagonals = (0..y.len())
        .map(|j| (0, j))
        .chain((1..x.len()).map(|i| (i, 0)));
    for (i0, j0) in diagonals {
        let mut run = 0;
        let steps = (x.len() - i0).min(y.len() - j0);
        for s in 0..=steps {
            if s < steps && x[i0 + s] == y[j0 + s] {
                run += 1;
                continue;
            }
            if run >= min_len {
                let start = s - run;
                out.push(SharedSegment {
                    offset_a: i0 + start,
                    offset_b: j0 + start,
                    bits: BitString::new(x[i0 + start..i0 + s].to_vec()),
                });
            }
            run = 0;
        }
    }
    out.sort();
    out
}
