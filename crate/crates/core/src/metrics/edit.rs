//! Character-level edit distance.

/// Exact Levenshtein distance over Unicode scalar values with unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

pub(crate) fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    // Keep the shorter sequence along the row.
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let above = row[j + 1];
            let sub = diag + usize::from(ca != cb);
            row[j + 1] = sub.min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[b.len()]
}

/// Edit distance restricted to a diagonal band.
///
/// Only alignments whose offset `j - i` stays within `band` of the range
/// spanned by the length difference are explored. The result is never below
/// the exact distance, and equals it whenever the optimal alignment fits in
/// the band (always the case when both inputs are no longer than `band`).
pub fn levenshtein_banded(a: &str, b: &str, band: usize) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_banded_chars(&a, &b, band)
}

pub(crate) fn levenshtein_banded_chars(a: &[char], b: &[char], band: usize) -> usize {
    let n = a.len();
    let m = b.len();
    if n == 0 || m == 0 {
        return n.max(m);
    }
    let diff = m as isize - n as isize;
    let lo_off = diff.min(0) - band as isize;
    let hi_off = diff.max(0) + band as isize;
    let width = (hi_off - lo_off + 1) as usize;
    const INF: usize = usize::MAX / 2;

    // prev[k] holds D[i-1][j] for j = (i-1) + lo_off + k.
    let mut prev = vec![INF; width];
    let mut cur = vec![INF; width];
    // Row 0: D[0][j] = j.
    for (k, slot) in prev.iter_mut().enumerate() {
        let j = lo_off + k as isize;
        if (0..=m as isize).contains(&j) {
            *slot = j as usize;
        }
    }
    for i in 1..=n {
        for k in 0..width {
            let j = i as isize + lo_off + k as isize;
            if j < 0 || j > m as isize {
                cur[k] = INF;
                continue;
            }
            let j = j as usize;
            if j == 0 {
                cur[k] = i;
                continue;
            }
            // D[i-1][j-1] sits at the same k in prev; D[i-1][j] at k+1; D[i][j-1] at k-1.
            let diag = prev[k] + usize::from(a[i - 1] != b[j - 1]);
            let up = if k + 1 < width { prev[k + 1] + 1 } else { INF };
            let left = if k > 0 { cur[k - 1] + 1 } else { INF };
            cur[k] = diag.min(up).min(left);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let k = (m as isize - n as isize - lo_off) as usize;
    prev[k]
}
