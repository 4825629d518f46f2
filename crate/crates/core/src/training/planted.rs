//! Synthetic training sets with a known signal, for checking that training
//! recovers it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PreferencePair, RegressionExample};

/// Token present in every preferred text of [`planted_preferences`].
pub const MARKER: &str = "zqxv";

fn vocab(size: usize) -> Vec<String> {
    (0..size).map(|i| format!("w{i:03}")).collect()
}

fn sentence(rng: &mut ChaCha8Rng, words: &[String], len: usize) -> Vec<String> {
    (0..len).map(|_| words.choose(rng).expect("vocab").clone()).collect()
}

/// Targets are an affine function of the mean per-word weight vector, with
/// a fifth of the vocabulary carrying signal. Returns examples in a fixed order.
pub fn planted_regression(n: usize, m: usize, seed: u64) -> Vec<RegressionExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = vocab(200);
    let weights: Vec<Vec<f64>> = words
        .iter()
        .map(|_| {
            if rng.gen_bool(0.2) {
                (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()
            } else {
                vec![0.0; m]
            }
        })
        .collect();
    (0..n)
        .map(|_| {
            let len = rng.gen_range(20..60);
            let idx: Vec<usize> = (0..len).map(|_| rng.gen_range(0..words.len())).collect();
            let text = idx.iter().map(|&i| words[i].as_str()).collect::<Vec<_>>().join(" ");
            let targets = (0..m)
                .map(|j| {
                    let mean = idx.iter().map(|&i| weights[i][j]).sum::<f64>() / len as f64;
                    (0.5 + 2.0 * mean).clamp(0.0, 1.0)
                })
                .collect();
            RegressionExample::new(text, targets)
        })
        .collect()
}

/// Pairs of near-identical sentences: the preferred one contains [`MARKER`]
/// where the rejected one has an ordinary word.
pub fn planted_preferences(n: usize, seed: u64) -> Vec<PreferencePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = vocab(200);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(15..40);
            let mut good = sentence(&mut rng, &words, len);
            let mut bad = good.clone();
            let at = rng.gen_range(0..len);
            good[at] = MARKER.to_owned();
            bad[at] = words.choose(&mut rng).expect("vocab").clone();
            PreferencePair::new(format!("planted-{i}"), good.join(" "), bad.join(" "))
        })
        .collect()
}
