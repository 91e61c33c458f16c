use super::{GeneRecord, Strand};

/// Column header every `.cds.tab` file starts with.
pub const TAB_HEADER: [&str; 5] = ["genome_id", "gene_id", "strand", "start", "end"];

/// Problems in a `.cds.tab` file. Lines are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TabError {
    #[error("line {line}: expected header `genome_id<TAB>gene_id<TAB>strand<TAB>start<TAB>end`")]
    BadHeader { line: usize },
    #[error("line {line}: expected 5 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: strand must be + or -, got {value:?}")]
    BadStrand { line: usize, value: String },
    #[error("line {line}: {reason}: {value:?}")]
    BadCoordinate {
        line: usize,
        value: String,
        reason: &'static str,
    },
    #[error("line {line}: empty gene id")]
    EmptyGeneId { line: usize },
}

impl TabError {
    pub fn line(&self) -> usize {
        match self {
            TabError::BadHeader { line }
            | TabError::ColumnCount { line, .. }
            | TabError::BadStrand { line, .. }
            | TabError::BadCoordinate { line, .. }
            | TabError::EmptyGeneId { line } => *line,
        }
    }
}

fn coordinate(line: usize, raw: &str) -> Result<u64, TabError> {
    match raw.trim().parse::<u64>() {
        Ok(0) => Err(TabError::BadCoordinate {
            line,
            value: raw.to_string(),
            reason: "coordinates start at 1",
        }),
        Ok(v) => Ok(v),
        Err(_) => Err(TabError::BadCoordinate {
            line,
            value: raw.to_string(),
            reason: "not a positive integer",
        }),
    }
}

/// Reads a tab-separated coding-sequence table.
///
/// Blank lines and lines starting with `#` are skipped anywhere, including
/// before the header.
pub fn parse_refseq_tab(text: &str) -> Result<Vec<GeneRecord>, TabError> {
    let mut records = Vec::new();
    let mut seen_header = false;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let row = raw.strip_suffix('\r').unwrap_or(raw);
        if row.trim().is_empty() || row.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = row.split('\t').collect();
        if !seen_header {
            if cols.iter().map(|c| c.trim()).ne(TAB_HEADER) {
                return Err(TabError::BadHeader { line });
            }
            seen_header = true;
            continue;
        }
        if cols.len() != TAB_HEADER.len() {
            return Err(TabError::ColumnCount {
                line,
                found: cols.len(),
            });
        }
        let strand = match cols[2].trim() {
            "+" => Strand::Forward,
            "-" | "\u{2212}" => Strand::Reverse,
            other => {
                return Err(TabError::BadStrand {
                    line,
                    value: other.to_string(),
                })
            }
        };
        let start = coordinate(line, cols[3])?;
        let end = coordinate(line, cols[4])?;
        if start > end {
            return Err(TabError::BadCoordinate {
                line,
                value: format!("{start}..{end}"),
                reason: "start after end",
            });
        }
        let gene_id = cols[1].trim();
        if gene_id.is_empty() {
            return Err(TabError::EmptyGeneId { line });
        }
        records.push(GeneRecord {
            genome_id: cols[0].trim().to_string(),
            gene_id: gene_id.to_string(),
            strand,
            start,
            end,
        });
    }
    if !seen_header {
        return Err(TabError::BadHeader {
            line: last_line.max(1),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "genome_id\tgene_id\tstrand\tstart\tend\n";

    #[test]
    fn three_records() {
        let text =
            format!("{HEADER}G\ta\t+\t1\t100\n# note\n\nG\tb\t-\t150\t300\r\nG\tc\t+\t400\t450");
        let recs = parse_refseq_tab(&text).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[1].strand, Strand::Reverse);
        assert_eq!(recs[1].end, 300);
        assert_eq!(recs[2].gene_id, "c");
    }

    #[test]
    fn header_only_is_empty() {
        assert_eq!(parse_refseq_tab(HEADER).unwrap(), vec![]);
    }

    #[test]
    fn missing_or_wrong_header() {
        assert_eq!(
            parse_refseq_tab("").unwrap_err(),
            TabError::BadHeader { line: 1 }
        );
        assert_eq!(
            parse_refseq_tab("# c\nG\ta\t+\t1\t2\n").unwrap_err(),
            TabError::BadHeader { line: 2 }
        );
    }

    #[test]
    fn dot_strand_is_rejected_with_line() {
        let text = format!("{HEADER}G\ta\t+\t1\t100\nG\tb\t.\t150\t300\n");
        assert_eq!(
            parse_refseq_tab(&text).unwrap_err(),
            TabError::BadStrand {
                line: 3,
                value: ".".into()
            }
        );
    }

    #[test]
    fn coordinate_errors() {
        let bad = |row: &str| parse_refseq_tab(&format!("{HEADER}{row}\n")).unwrap_err();
        assert!(matches!(
            bad("G\ta\t+\tx\t100"),
            TabError::BadCoordinate { line: 2, .. }
        ));
        assert!(matches!(
            bad("G\ta\t+\t0\t100"),
            TabError::BadCoordinate { .. }
        ));
        assert!(matches!(
            bad("G\ta\t+\t200\t100"),
            TabError::BadCoordinate { .. }
        ));
        assert_eq!(
            bad("G\ta\t+\t1"),
            TabError::ColumnCount { line: 2, found: 4 }
        );
        assert_eq!(bad("G\t\t+\t1\t2"), TabError::EmptyGeneId { line: 2 });
    }
}
