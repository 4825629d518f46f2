//! Scores a candidate transcription against its groundtruth.
//!
//! `cargo run --release --example metrics`
use adaparse::metrics::{bleu, car, levenshtein, rouge, MetricConfig};

fn main() {
    let cfg = MetricConfig::default();
    let reference = "The gravitational force between two masses is directly proportional to the product of their masses and inversely proportional to the square of the distance between them.";
    let candidate = "The gravitational force inversely masses the proportional distance between two products and is directly proportional to the square of objects.";
    println!("bleu  {:.4}", bleu(candidate, reference, &cfg));
    println!("rouge {:.4}", rouge(candidate, reference, &cfg));
    println!("car   {:.4}", car(candidate, reference, &cfg));

    let (a, b) = ("hyperthyroidism", "hypothyroidism");
    println!("{a} -> {b}: distance {}, car {:.4}", levenshtein(a, b), car(a, b, &cfg));
}
