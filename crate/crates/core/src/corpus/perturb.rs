//! Seeded text-layer corruptions modelled on common parser failure modes.
//!
//! Units are selected through one seeded permutation, so for a fixed seed the
//! units corrupted at a lower rate are a subset of those corrupted at a
//! higher rate, and each unit's corruption depends only on `(seed, unit)`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::mix;
use crate::metrics::PAGE_BREAK;

use super::record::join_pages;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationMode {
    WhitespaceInjection,
    WordSubstitution,
    CharScramble,
    CharSubstitution,
    IdentifierCorruption,
    LatexFlatten,
    PageDrop,
}

impl PerturbationMode {
    pub const ALL: [PerturbationMode; 7] = [
        PerturbationMode::WhitespaceInjection,
        PerturbationMode::WordSubstitution,
        PerturbationMode::CharScramble,
        PerturbationMode::CharSubstitution,
        PerturbationMode::IdentifierCorruption,
        PerturbationMode::LatexFlatten,
        PerturbationMode::PageDrop,
    ];
}

/// Which characters `char_substitution` goes after.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubstitutionTarget {
    /// Single characters swapped for look-alikes (l/1, O/0, ...) or their other case.
    #[default]
    Glyph,
    /// Mixed-case words (pH, mRNA, ...) get their case flipped.
    Case,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub mode: PerturbationMode,
    pub rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub target: SubstitutionTarget,
}

impl PerturbationSpec {
    pub fn new(mode: PerturbationMode, rate: f64, seed: u64) -> Self {
        PerturbationSpec { mode, rate, seed, target: SubstitutionTarget::Glyph }
    }

    pub fn with_target(mut self, target: SubstitutionTarget) -> Self {
        self.target = target;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(Error::Config(format!("perturbation rate {} outside [0,1]", self.rate)));
        }
        Ok(())
    }
}

/// `ceil(rate * n)`, robust to floating error such as `(1/7) * 7`.
pub fn unit_count(rate: f64, n: usize) -> usize {
    if rate <= 0.0 || n == 0 {
        return 0;
    }
    ((rate * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

fn select_units(n: usize, rate: f64, seed: u64) -> Vec<usize> {
    let k = unit_count(rate, n);
    if k == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.truncate(k);
    order
}

fn unit_rng(seed: u64, unit: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, unit as u64 + 1))
}

/// Indices of the pages a `page_drop` spec removes from an `n`-page document.
pub fn dropped_pages(n: usize, spec: &PerturbationSpec) -> Vec<usize> {
    let mut idx = select_units(n, spec.rate, spec.seed);
    idx.sort_unstable();
    idx
}

/// Applies `spec` to a flattened text (pages joined by [`PAGE_BREAK`]).
pub fn perturb(text: &str, spec: &PerturbationSpec) -> String {
    if spec.rate <= 0.0 {
        return text.to_owned();
    }
    match spec.mode {
        PerturbationMode::PageDrop => {
            let pages: Vec<&str> = text.split(PAGE_BREAK).collect();
            let drop = dropped_pages(pages.len(), spec);
            let kept: Vec<&str> = pages
                .iter()
                .enumerate()
                .filter(|(i, _)| drop.binary_search(i).is_err())
                .map(|(_, p)| *p)
                .collect();
            join_pages(&kept)
        }
        PerturbationMode::WhitespaceInjection => inject_whitespace(text, spec),
        PerturbationMode::CharSubstitution if spec.target == SubstitutionTarget::Glyph => {
            substitute_glyphs(text, spec)
        }
        _ => rewrite_words(text, spec),
    }
}

/// Page-aware variant of [`perturb`]; only `page_drop` changes the page count.
pub fn perturb_pages<S: AsRef<str>>(pages: &[S], spec: &PerturbationSpec) -> Vec<String> {
    let joined = join_pages(pages);
    let out = perturb(&joined, spec);
    if out.is_empty() && spec.mode == PerturbationMode::PageDrop && unit_count(spec.rate, pages.len()) == pages.len() {
        return Vec::new();
    }
    out.split(PAGE_BREAK).map(str::to_owned).collect()
}

#[derive(Debug, Clone, Copy)]
struct Span {
    start: usize,
    end: usize,
}

fn word_spans(text: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                spans.push(Span { start: s, end: i });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push(Span { start: s, end: text.len() });
    }
    spans
}

fn inject_whitespace(text: &str, spec: &PerturbationSpec) -> String {
    // Slots: byte offsets strictly inside words, between two characters.
    let slots: Vec<usize> = word_spans(text)
        .iter()
        .flat_map(|w| text[w.start..w.end].char_indices().skip(1).map(move |(i, _)| w.start + i))
        .collect();
    let mut chosen: Vec<usize> = select_units(slots.len(), spec.rate, spec.seed)
        .into_iter()
        .map(|u| slots[u])
        .collect();
    chosen.sort_unstable();
    let mut out = String::with_capacity(text.len() + chosen.len());
    let mut last = 0;
    for pos in chosen {
        out.push_str(&text[last..pos]);
        out.push(' ');
        last = pos;
    }
    out.push_str(&text[last..]);
    out
}

const CONFUSABLES: &[(char, char)] = &[
    ('l', '1'), ('1', 'l'), ('O', '0'), ('0', 'O'), ('I', 'l'), ('S', '5'), ('5', 'S'),
    ('B', '8'), ('8', 'B'), ('e', 'c'), ('c', 'e'), ('m', 'n'), ('n', 'm'), ('u', 'v'),
    ('v', 'u'), ('h', 'b'), ('b', 'h'), ('Z', '2'), ('2', 'Z'), ('g', 'q'), ('q', 'g'),
];

fn swap_case(c: char) -> Option<char> {
    if c.is_lowercase() {
        c.to_uppercase().next().filter(|u| *u != c)
    } else if c.is_uppercase() {
        c.to_lowercase().next().filter(|l| *l != c)
    } else {
        None
    }
}

fn glyph_substitute(c: char, rng: &mut ChaCha8Rng) -> Option<char> {
    let lookalike = CONFUSABLES.iter().find(|(from, _)| *from == c).map(|&(_, to)| to);
    match (lookalike, swap_case(c)) {
        (Some(l), Some(s)) => Some(if rng.gen_bool(0.5) { l } else { s }),
        (Some(l), None) => Some(l),
        (None, s) => s,
    }
}

fn substitute_glyphs(text: &str, spec: &PerturbationSpec) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let eligible: Vec<usize> = chars
        .iter()
        .enumerate()
        .filter(|(_, &c)| CONFUSABLES.iter().any(|(f, _)| *f == c) || swap_case(c).is_some())
        .map(|(i, _)| i)
        .collect();
    for unit in select_units(eligible.len(), spec.rate, spec.seed) {
        let pos = eligible[unit];
        if let Some(r) = glyph_substitute(chars[pos], &mut unit_rng(spec.seed, unit)) {
            chars[pos] = r;
        }
    }
    chars.into_iter().collect()
}

const GARBLE: &[char] = &[
    '#', '@', '%', '&', '~', '^', '|', '*', '+', '=', '<', '>', '¤', '§', '¦', '°', '±', '\u{FFFD}',
];

const IDENT_POOL: &[char] = &[
    '(', ')', '[', ']', '=', '#', '@', '+', '-', '0', '1', '2', '3', '4', '5', '6', '7', '8', '9',
    'C', 'N', 'O', 'S', 'H', 'c', 'n', 'o', 's',
];

/// Replacement vocabulary for word substitution.
pub(crate) const SUBSTITUTES: &[&str] = &[
    "the", "of", "and", "in", "to", "is", "for", "that", "with", "as", "on", "by", "this",
    "from", "be", "are", "an", "at", "which", "it", "model", "result", "data", "value",
    "system", "method", "effect", "measure", "sample", "field", "state", "phase", "rate",
    "energy", "signal", "form", "case", "line", "point", "order", "level", "mode",
];

fn is_identifier(word: &str) -> bool {
    let balanced = |open: char, close: char| {
        word.chars().filter(|&c| c == open).count() == word.chars().filter(|&c| c == close).count()
    };
    word.chars().any(|c| c.is_ascii_digit()) || !balanced('(', ')') || !balanced('[', ']')
}

fn is_mixed_case(word: &str) -> bool {
    word.chars().any(char::is_uppercase) && word.chars().any(char::is_lowercase)
}

fn flatten_latex(word: &str) -> String {
    let mut out = String::with_capacity(word.len());
    let mut chars = word.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                // Drop the command name (or the single escaped symbol).
                if chars.peek().is_some_and(|n| n.is_ascii_alphabetic()) {
                    while chars.peek().is_some_and(|n| n.is_ascii_alphabetic()) {
                        chars.next();
                    }
                } else {
                    chars.next();
                }
            }
            '{' | '}' => {}
            _ => out.push(c),
        }
    }
    out
}

fn different_char(pool: &[char], avoid: char, rng: &mut ChaCha8Rng) -> char {
    loop {
        let c = pool[rng.gen_range(0..pool.len())];
        if c != avoid {
            return c;
        }
    }
}

fn corrupt_word(word: &str, spec: &PerturbationSpec, rng: &mut ChaCha8Rng) -> String {
    match spec.mode {
        PerturbationMode::WordSubstitution => {
            let lower = word.to_lowercase();
            loop {
                let w = SUBSTITUTES[rng.gen_range(0..SUBSTITUTES.len())];
                if w != lower {
                    return w.to_owned();
                }
            }
        }
        PerturbationMode::CharScramble => {
            word.chars().map(|c| different_char(GARBLE, c, rng)).collect()
        }
        PerturbationMode::CharSubstitution => {
            word.chars().map(|c| swap_case(c).unwrap_or(c)).collect()
        }
        PerturbationMode::IdentifierCorruption => {
            let mut chars: Vec<char> = word.chars().collect();
            let pos = rng.gen_range(0..chars.len());
            match rng.gen_range(0..3) {
                0 => chars[pos] = different_char(IDENT_POOL, chars[pos], rng),
                1 if chars.len() > 1 => {
                    chars.remove(pos);
                }
                _ => chars.insert(pos, IDENT_POOL[rng.gen_range(0..IDENT_POOL.len())]),
            }
            chars.into_iter().collect()
        }
        PerturbationMode::LatexFlatten => flatten_latex(word),
        _ => word.to_owned(),
    }
}

fn rewrite_words(text: &str, spec: &PerturbationSpec) -> String {
    let spans = word_spans(text);
    let eligible: Vec<usize> = spans
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            let w = &text[s.start..s.end];
            match spec.mode {
                PerturbationMode::IdentifierCorruption => is_identifier(w),
                PerturbationMode::LatexFlatten => w.contains(['\\', '{', '}']),
                PerturbationMode::CharSubstitution => is_mixed_case(w),
                _ => true,
            }
        })
        .map(|(i, _)| i)
        .collect();
    let mut replaced: HashMap<usize, String> = HashMap::new();
    for unit in select_units(eligible.len(), spec.rate, spec.seed) {
        let idx = eligible[unit];
        let s = spans[idx];
        let new = corrupt_word(&text[s.start..s.end], spec, &mut unit_rng(spec.seed, unit));
        replaced.insert(idx, new);
    }
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (i, s) in spans.iter().enumerate() {
        if let Some(new) = replaced.get(&i) {
            out.push_str(&text[last..s.start]);
            out.push_str(new);
            last = s.end;
        }
    }
    out.push_str(&text[last..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "The gravitational force between two masses is proportional to their product";

    #[test]
    fn zero_rate_is_identity() {
        for mode in PerturbationMode::ALL {
            let spec = PerturbationSpec::new(mode, 0.0, 9);
            assert_eq!(perturb(TEXT, &spec), TEXT, "{mode:?}");
        }
    }

    #[test]
    fn positive_rate_changes_text() {
        let text = format!("{TEXT} C6H12O6 \\alpha{{x}} pH{PAGE_BREAK}second page");
        for mode in PerturbationMode::ALL {
            let spec = PerturbationSpec::new(mode, 0.3, 9);
            assert_ne!(perturb(&text, &spec), text, "{mode:?}");
        }
    }

    #[test]
    fn case_targeted_substitution_turns_ph_into_ph() {
        let spec = PerturbationSpec::new(PerturbationMode::CharSubstitution, 1.0, 0)
            .with_target(SubstitutionTarget::Case);
        assert_eq!(perturb("pH value", &spec), "Ph value");
    }

    #[test]
    fn page_drop_one_of_seven() {
        let pages: Vec<String> = (0..7).map(|i| format!("page {i}")).collect();
        let spec = PerturbationSpec::new(PerturbationMode::PageDrop, 1.0 / 7.0, 42);
        let a = perturb_pages(&pages, &spec);
        let b = perturb_pages(&pages, &spec);
        assert_eq!(a.len(), 6);
        assert_eq!(a, b);
    }

    #[test]
    fn unit_count_rounding() {
        assert_eq!(unit_count(1.0 / 7.0, 7), 1);
        assert_eq!(unit_count(0.15, 20), 3);
        assert_eq!(unit_count(0.01, 5), 1);
        assert_eq!(unit_count(1.0, 5), 5);
        assert_eq!(unit_count(0.0, 5), 0);
    }

    #[test]
    fn latex_flatten_strips_commands_and_braces() {
        assert_eq!(flatten_latex("\\frac{a}{b}"), "ab");
        assert_eq!(flatten_latex("x^{2}"), "x^2");
        assert_eq!(flatten_latex("\\alpha"), "");
        let spec = PerturbationSpec::new(PerturbationMode::LatexFlatten, 1.0, 1);
        let out = perturb("let \\alpha be x^{2} here", &spec);
        assert!(!out.contains('\\'));
        assert_eq!(out, "let \\alpha be x^{2} here".replace("\\alpha", "").replace("{2}", "2"));
    }

    #[test]
    fn scramble_lowers_alpha_content() {
        let spec = PerturbationSpec::new(PerturbationMode::CharScramble, 1.0, 3);
        let out = perturb(TEXT, &spec);
        assert!(out.chars().all(|c| !c.is_alphabetic()));
        assert_eq!(out.split_whitespace().count(), TEXT.split_whitespace().count());
    }

    #[test]
    fn identifiers_detected() {
        assert!(is_identifier("C6H12O6"));
        assert!(is_identifier("CC(=O"));
        assert!(!is_identifier("benzene"));
        assert!(!is_identifier("f(x)"));
    }

    #[test]
    fn higher_rate_corrupts_superset() {
        let lo = PerturbationSpec::new(PerturbationMode::WordSubstitution, 0.2, 5);
        let hi = PerturbationSpec::new(PerturbationMode::WordSubstitution, 0.5, 5);
        let a: Vec<String> = perturb(TEXT, &lo).split(' ').map(str::to_owned).collect();
        let b: Vec<String> = perturb(TEXT, &hi).split(' ').map(str::to_owned).collect();
        let orig: Vec<&str> = TEXT.split(' ').collect();
        for i in 0..orig.len() {
            if a[i] != orig[i] {
                assert_eq!(a[i], b[i]);
            }
        }
    }
}
