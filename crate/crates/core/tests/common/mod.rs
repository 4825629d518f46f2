#![allow(dead_code)]

use adaparse::selector::{EmbeddingConfig, PredictorModel};
use adaparse::training::Gradients;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small model with every parameter group randomized.
pub fn random_model(m: usize, seed: u64) -> PredictorModel {
    let ids = (0..m).map(|i| format!("p{i}")).collect();
    let mut model = PredictorModel::new(EmbeddingConfig { dim: 4, ..Default::default() }, ids, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    model.embedding.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    model.head_weights.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    model.head_bias.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
    model.pref_weights.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    model.pref_bias = rng.gen_range(-0.5..0.5);
    model
}

#[derive(Debug, Clone, Copy)]
pub enum Coord {
    Embedding(usize),
    HeadWeight(usize),
    HeadBias(usize),
    PrefWeight(usize),
    PrefBias,
}

pub fn param(model: &mut PredictorModel, c: Coord) -> &mut f64 {
    match c {
        Coord::Embedding(i) => &mut model.embedding[i],
        Coord::HeadWeight(i) => &mut model.head_weights[i],
        Coord::HeadBias(i) => &mut model.head_bias[i],
        Coord::PrefWeight(i) => &mut model.pref_weights[i],
        Coord::PrefBias => &mut model.pref_bias,
    }
}

pub fn grad(g: &Gradients, c: Coord) -> f64 {
    match c {
        Coord::Embedding(i) => g.embedding[i],
        Coord::HeadWeight(i) => g.head_weights[i],
        Coord::HeadBias(i) => g.head_bias[i],
        Coord::PrefWeight(i) => g.pref_weights[i],
        Coord::PrefBias => g.pref_bias,
    }
}

/// Coordinates the loss actually depends on: embedding rows of the given
/// buckets plus the listed head parameters.
pub fn live_coords(model: &PredictorModel, buckets: &[u32], heads: &[Coord]) -> Vec<Coord> {
    let dim = model.dim();
    let mut rows: Vec<u32> = buckets.to_vec();
    rows.sort_unstable();
    rows.dedup();
    let mut out: Vec<Coord> = rows
        .iter()
        .flat_map(|&b| (0..dim).map(move |k| Coord::Embedding(b as usize * dim + k)))
        .collect();
    out.extend_from_slice(heads);
    out
}

/// Max relative error between analytic and central-difference gradients
/// over `count` random coordinates from `pool`.
pub fn max_relative_error<F>(model: &PredictorModel, analytic: &Gradients, pool: &[Coord], count: usize, seed: u64, loss: F) -> f64
where
    F: Fn(&PredictorModel) -> f64,
{
    let step = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let c = pool[rng.gen_range(0..pool.len())];
        let mut plus = model.clone();
        *param(&mut plus, c) += step;
        let mut minus = model.clone();
        *param(&mut minus, c) -= step;
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * step);
        let a = grad(analytic, c);
        let scale = a.abs().max(numeric.abs());
        let err = if scale < 1e-12 { 0.0 } else { (a - numeric).abs() / scale };
        worst = worst.max(err);
    }
    worst
}
