//! Brute-force string searches over `0`/`1` strings.

/// Start offsets of every occurrence of `pat` in `text`, overlaps included.
pub fn naive_find(text: &str, pat: &str) -> Vec<usize> {
    if pat.is_empty() || pat.len() > text.len() {
        return Vec::new();
    }
    (0..=text.len() - pat.len())
        .filter(|&i| &text[i..i + pat.len()] == pat)
        .collect()
}

/// Every common substring of length at least `min_len` that cannot be
/// extended on either side, as (offset in a, offset in b, substring), sorted.
pub fn maximal_common(a: &str, b: &str, min_len: usize) -> Vec<(usize, usize, String)> {
    let (x, y) = (a.as_bytes(), b.as_bytes());
    let mut out = Vec::new();
    for i in 0..x.len() {
        for j in 0..y.len() {
            if i > 0 && j > 0 && x[i - 1] == y[j - 1] {
                continue;
            }
            let mut len = 0;
            while i + len < x.len() && j + len < y.len() && x[i + len] == y[j + len] {
                len += 1;
            }
            if len >= min_len.max(1) {
                out.push((i, j, a[i..i + len].to_string()));
            }
        }
    }
    out.sort();
    out
}
