use serde::{Deserialize, Serialize};

/// Cheap aggregate statistics of an extracted text.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TextStats {
    pub char_count: usize,
    pub word_count: usize,
    /// Alphabetic share of the non-whitespace characters.
    pub alpha_ratio: f64,
    pub whitespace_ratio: f64,
    pub replacement_char_count: usize,
    pub mean_word_len: f64,
    pub backslash_density: f64,
}

/// Computes [`TextStats`]; empty text yields all zeros.
pub fn text_stats(text: &str) -> TextStats {
    let mut chars = 0usize;
    let mut whitespace = 0usize;
    let mut alpha = 0usize;
    let mut replacement = 0usize;
    let mut backslash = 0usize;
    for c in text.chars() {
        chars += 1;
        if c.is_whitespace() {
            whitespace += 1;
        } else if c.is_alphabetic() {
            alpha += 1;
        }
        match c {
            '\u{FFFD}' => replacement += 1,
            '\\' => backslash += 1,
            _ => {}
        }
    }
    let words = text.split_whitespace().count();
    let visible = chars - whitespace;
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    TextStats {
        char_count: chars,
        word_count: words,
        alpha_ratio: ratio(alpha, visible),
        whitespace_ratio: ratio(whitespace, chars),
        replacement_char_count: replacement,
        mean_word_len: ratio(visible, words),
        backslash_density: ratio(backslash, chars),
    }
}

/// Acceptance thresholds for the validity check on a first-page extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidityThresholds {
    pub min_chars: usize,
    pub min_alpha: f64,
    pub max_replacement: usize,
}

impl Default for ValidityThresholds {
    fn default() -> Self {
        ValidityThresholds { min_chars: 200, min_alpha: 0.5, max_replacement: 20 }
    }
}

/// First-stage check: is the cheap extraction usable at all?
pub fn cls1_validity(stats: &TextStats, thresholds: &ValidityThresholds) -> bool {
    stats.char_count >= thresholds.min_chars
        && stats.alpha_ratio >= thresholds.min_alpha
        && stats.replacement_char_count <= thresholds.max_replacement
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{perturb, synth_corpus, PerturbationMode, PerturbationSpec, SynthProfile};

    #[test]
    fn empty_text_is_all_zero() {
        assert_eq!(text_stats(""), TextStats::default());
        assert!(!cls1_validity(&text_stats(""), &ValidityThresholds::default()));
    }

    #[test]
    fn hand_counted() {
        let s = text_stats("ab cd");
        assert_eq!(s.char_count, 5);
        assert_eq!(s.word_count, 2);
        assert!((s.whitespace_ratio - 0.2).abs() < 1e-12);
        assert_eq!(s.alpha_ratio, 1.0);
        assert_eq!(s.mean_word_len, 2.0);
        let mixed = format!("{}{}", "a".repeat(100), "\\".repeat(100));
        assert_eq!(text_stats(&mixed).backslash_density, 0.5);
    }

    #[test]
    fn clean_pages_are_valid() {
        let docs = synth_corpus(300, &SynthProfile::default(), 21).unwrap();
        let th = ValidityThresholds::default();
        let valid = docs
            .iter()
            .flat_map(|d| d.groundtruth_pages().unwrap())
            .filter(|p| cls1_validity(&text_stats(p), &th))
            .count();
        let total: usize = docs.iter().map(|d| d.page_count()).sum();
        assert!(valid as f64 >= 0.99 * total as f64, "{valid}/{total}");
    }

    #[test]
    fn scrambled_page_is_invalid() {
        let docs = synth_corpus(20, &SynthProfile::default(), 22).unwrap();
        let spec = PerturbationSpec::new(PerturbationMode::CharScramble, 0.8, 4);
        for d in &docs {
            let page = d.groundtruth_pages().unwrap()[0];
            let scrambled = perturb(page, &spec);
            assert!(!cls1_validity(&text_stats(&scrambled), &ValidityThresholds::default()));
        }
    }
}
