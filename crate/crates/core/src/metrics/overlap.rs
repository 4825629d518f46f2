//! Token-overlap metrics: BLEU and ROUGE.

use std::collections::HashMap;

use super::{tokenize, BleuSmoothing, MetricConfig, RougeVariant};

/// Maps both token lists onto shared integer ids.
fn intern(candidate: &[String], reference: &[String]) -> (Vec<u32>, Vec<u32>) {
    let mut ids: HashMap<&str, u32> = HashMap::with_capacity(reference.len());
    let mut out = [Vec::with_capacity(reference.len()), Vec::with_capacity(candidate.len())];
    for (k, tokens) in [reference, candidate].into_iter().enumerate() {
        for t in tokens {
            let next = ids.len() as u32;
            out[k].push(*ids.entry(t.as_str()).or_insert(next));
        }
    }
    let [r, c] = out;
    (c, r)
}

fn sorted_grams(tokens: &[u32], n: usize) -> Vec<&[u32]> {
    let mut grams: Vec<&[u32]> = if tokens.len() >= n { tokens.windows(n).collect() } else { Vec::new() };
    grams.sort_unstable();
    grams
}

/// Sum over distinct n-grams of `min(count in a, count in b)`.
fn clipped_matches(a: &[u32], b: &[u32], n: usize) -> usize {
    let (x, y) = (sorted_grams(a, n), sorted_grams(b, n));
    let (mut i, mut j, mut matched) = (0, 0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let gram = x[i];
                let ci = x[i..].iter().take_while(|g| **g == gram).count();
                let cj = y[j..].iter().take_while(|g| **g == gram).count();
                matched += ci.min(cj);
                i += ci;
                j += cj;
            }
        }
    }
    matched
}

/// Sentence BLEU on pre-tokenized input.
pub fn bleu_tokens(candidate: &[String], reference: &[String], cfg: &MetricConfig) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let max_n = cfg.bleu_max_ngram.max(1);
    let (cand_ids, ref_ids) = intern(candidate, reference);
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_n {
        let matched = clipped_matches(&cand_ids, &ref_ids, n);
        let total = candidate.len().saturating_sub(n - 1);
        let p = match cfg.bleu_smoothing {
            // Unigram precision is never smoothed, so disjoint texts stay at 0.
            BleuSmoothing::AddOne if n > 1 => (matched as f64 + 1.0) / (total as f64 + 1.0),
            _ => {
                if total == 0 {
                    // Candidate shorter than n: fall back to the effective order.
                    continue;
                }
                matched as f64 / total as f64
            }
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
        orders += 1;
    }
    if orders == 0 {
        return 0.0;
    }
    let c = candidate.len() as f64;
    let r = reference.len() as f64;
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    (bp * (log_sum / orders as f64).exp()).clamp(0.0, 1.0)
}

pub fn bleu(candidate: &str, reference: &str, cfg: &MetricConfig) -> f64 {
    bleu_tokens(&tokenize(candidate), &tokenize(reference), cfg)
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { above.max(row[j]) };
            diag = above;
        }
    }
    row[b.len()]
}

fn f1(overlap: usize, cand_len: usize, ref_len: usize) -> f64 {
    if overlap == 0 || cand_len == 0 || ref_len == 0 {
        return 0.0;
    }
    let p = overlap as f64 / cand_len as f64;
    let r = overlap as f64 / ref_len as f64;
    2.0 * p * r / (p + r)
}

pub fn rouge_tokens(candidate: &[String], reference: &[String], cfg: &MetricConfig) -> f64 {
    if candidate.is_empty() {
        return 0.0;
    }
    let overlap = match cfg.rouge_variant {
        RougeVariant::Rouge1F => {
            let (c, r) = intern(candidate, reference);
            clipped_matches(&c, &r, 1)
        }
        RougeVariant::RougeLF => lcs_len(candidate, reference),
    };
    f1(overlap, candidate.len(), reference.len()).clamp(0.0, 1.0)
}

pub fn rouge(candidate: &str, reference: &str, cfg: &MetricConfig) -> f64 {
    rouge_tokens(&tokenize(candidate), &tokenize(reference), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GROUNDTRUTH: &str = "The gravitational force between two masses is directly proportional to the product of their masses and inversely proportional to the square of the distance between them.";
    const CANDIDATE: &str = "The gravitational force inversely masses the proportional distance between two products and is directly proportional to the square of objects.";

    #[test]
    fn sentence_anchor_values() {
        let cfg = MetricConfig::default();
        // Counts (1..4-gram): 18/20, 10/19, 6/18, 4/17; BP = exp(1 - 26/20).
        let bp = (1.0f64 - 26.0 / 20.0).exp();
        let smoothed = bp * ((18.0 / 20.0f64) * (11.0 / 20.0) * (7.0 / 19.0) * (5.0 / 18.0)).powf(0.25);
        let b = bleu(CANDIDATE, GROUNDTRUTH, &cfg);
        assert!((b - smoothed).abs() < 1e-12, "{b} vs {smoothed}");
        let unsmoothed = MetricConfig { bleu_smoothing: BleuSmoothing::None, ..cfg.clone() };
        let plain = bp * ((18.0 / 20.0f64) * (10.0 / 19.0) * (6.0 / 18.0) * (4.0 / 17.0)).powf(0.25);
        assert!((bleu(CANDIDATE, GROUNDTRUTH, &unsmoothed) - plain).abs() < 1e-12);
        // ROUGE-1: 18 clipped unigram matches, |c| = 20, |r| = 26.
        let r = rouge(CANDIDATE, GROUNDTRUTH, &cfg);
        assert!((r - 36.0 / 46.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn identity_and_disjoint() {
        let cfg = MetricConfig::default();
        assert_eq!(bleu("one two three four five", "one two three four five", &cfg), 1.0);
        assert_eq!(bleu("aa bb", "cc dd", &cfg), 0.0);
        assert_eq!(rouge("aa", "bb", &cfg), 0.0);
        assert_eq!(rouge("same text", "same text", &cfg), 1.0);
        assert_eq!(bleu("", "x", &cfg), 0.0);
        assert_eq!(rouge("", "x", &cfg), 0.0);
    }

    #[test]
    fn short_identical_text_is_one_under_both_smoothings() {
        let mut cfg = MetricConfig::default();
        assert_eq!(bleu("ab cd", "ab cd", &cfg), 1.0);
        cfg.bleu_smoothing = BleuSmoothing::None;
        assert_eq!(bleu("ab cd", "ab cd", &cfg), 1.0);
    }

    #[test]
    fn rouge_l_uses_subsequence() {
        let cfg = MetricConfig { rouge_variant: RougeVariant::RougeLF, ..MetricConfig::default() };
        // LCS("a b c d", "a c b d") = 3.
        assert!((rouge("a b c d", "a c b d", &cfg) - 0.75).abs() < 1e-12);
    }
}
