use adaparse::corpus::{perturb, perturb_pages, PerturbationMode, PerturbationSpec};
use adaparse::harness::rank_from_matrix;
use adaparse::metrics::{bleu, car, levenshtein, levenshtein_banded, rouge, MetricConfig};
use adaparse::parsers::{reference_parsers, ParserProfile};
use adaparse::scheduler::{compute_alpha, partition, plan_predictions, Budget};
use adaparse::selector::heavy_cap;
use proptest::prelude::*;

fn words(min: usize) -> impl Strategy<Value = String> {
    prop::collection::vec("[a-zA-Z]{1,8}", min..40).prop_map(|w| w.join(" "))
}

fn mode() -> impl Strategy<Value = PerturbationMode> {
    prop::sample::select(PerturbationMode::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn levenshtein_is_a_metric(a in "[a-c]{0,12}", b in "[a-c]{0,12}", c in "[a-c]{0,12}") {
        prop_assert_eq!(levenshtein(&a, &a), 0);
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        prop_assert!(levenshtein(&a, &b) >= a.chars().count().abs_diff(b.chars().count()));
    }

    #[test]
    fn banded_distance_never_underestimates(a in "[a-d]{0,30}", b in "[a-d]{0,30}", band in 1usize..8) {
        prop_assert!(levenshtein_banded(&a, &b, band) >= levenshtein(&a, &b));
    }

    #[test]
    fn scores_are_bounded(cand in words(0), reference in words(0)) {
        let cfg = MetricConfig::default();
        for s in [bleu(&cand, &reference, &cfg), rouge(&cand, &reference, &cfg), car(&cand, &reference, &cfg)] {
            prop_assert!((0.0..=1.0).contains(&s), "{s}");
        }
    }

    #[test]
    fn identical_texts_score_one(text in words(4)) {
        let cfg = MetricConfig::default();
        prop_assert!((bleu(&text, &text, &cfg) - 1.0).abs() < 1e-12);
        prop_assert!((rouge(&text, &text, &cfg) - 1.0).abs() < 1e-12);
        prop_assert_eq!(car(&text, &text, &cfg), 1.0);
    }

    #[test]
    fn perturbation_is_seeded(text in words(1), m in mode(), rate in 0.0f64..1.0, seed: u64) {
        let spec = PerturbationSpec::new(m, rate, seed);
        prop_assert_eq!(perturb(&text, &spec), perturb(&text, &spec));
        prop_assert_eq!(perturb(&text, &PerturbationSpec::new(m, 0.0, seed)), text);
    }

    #[test]
    fn page_drop_removes_the_ceiling(n in 1usize..20, rate in 0.0f64..=1.0, seed: u64) {
        let pages: Vec<String> = (0..n).map(|i| format!("page {i}")).collect();
        let out = perturb_pages(&pages, &PerturbationSpec::new(PerturbationMode::PageDrop, rate, seed));
        let expected = n - (rate * n as f64 - 1e-9).ceil().max(0.0) as usize;
        prop_assert_eq!(out.len(), expected);
        // Survivors keep their order.
        let idx: Vec<usize> = out.iter().map(|p| p[5..].parse().unwrap()).collect();
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn heavy_cap_respects_alpha(alpha in 0.0f64..=1.0, k in 1usize..2000) {
        let cap = heavy_cap(alpha, k).unwrap();
        prop_assert!(cap <= k);
        prop_assert!(cap as f64 <= alpha * k as f64 + 1e-6);
        prop_assert!(cap as f64 > alpha * k as f64 - 1.0);
    }

    #[test]
    fn plans_stay_under_cap(
        alpha in 0.0f64..=1.0,
        preds in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 1..64),
    ) {
        let parsers = reference_parsers();
        let heavy = parsers.heavy_parser().parser_id.clone();
        let rows: Vec<(String, Vec<f64>)> = preds.into_iter().enumerate().map(|(i, p)| (format!("d{i:03}"), p)).collect();
        let plan = plan_predictions(0, &rows, alpha, &parsers).unwrap();
        let realized = plan.assignments.iter().filter(|(_, p)| *p == heavy).count();
        prop_assert_eq!(realized, plan.heavy_count);
        prop_assert!(plan.heavy_count <= heavy_cap(alpha, rows.len()).unwrap());
        let ids: Vec<&str> = plan.assignments.iter().map(|(d, _)| d.as_str()).collect();
        let expected: Vec<&str> = rows.iter().map(|(d, _)| d.as_str()).collect();
        prop_assert_eq!(ids, expected);
        // Every heavy pick is a strict improvement over the default parser.
        let (d, h) = (parsers.default_index(), parsers.heavy_index());
        for ((_, p), (_, row)) in plan.assignments.iter().zip(&rows) {
            if *p == heavy {
                prop_assert!(row[h] > row[d]);
            }
        }
    }

    #[test]
    fn partition_conserves_docs_and_budget(n in 1usize..500, nodes in 1usize..32, total in 1.0f64..1e5) {
        prop_assume!(nodes <= n);
        let ids: Vec<String> = (0..n).map(|i| format!("doc{i}")).collect();
        let parts = partition(&ids, nodes, &Budget::new(total, n, 0.05).unwrap()).unwrap();
        prop_assert_eq!(parts.len(), nodes);
        let joined: Vec<String> = parts.iter().flat_map(|p| p.doc_ids.clone()).collect();
        prop_assert_eq!(joined, ids);
        let sizes: Vec<usize> = parts.iter().map(|p| p.doc_ids.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let spent: f64 = parts.iter().map(|p| p.budget_seconds).sum();
        prop_assert!((spent - total).abs() <= 1e-9 * total);
    }

    #[test]
    fn alpha_grows_with_budget(cheap in 0.001f64..1.0, ratio in 1.5f64..100.0, n in 1usize..10_000, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let (c, h) = (ParserProfile::builtin("c", cheap), ParserProfile::builtin("h", cheap * ratio));
        let span = n as f64 * cheap * ratio * 1.2;
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a_lo = compute_alpha(lo * span + 1e-9, n, &c, &h).unwrap();
        let a_hi = compute_alpha(hi * span + 1e-9, n, &c, &h).unwrap();
        prop_assert!((0.0..=1.0).contains(&a_lo) && (0.0..=1.0).contains(&a_hi));
        prop_assert!(a_lo <= a_hi);
    }

    #[test]
    fn constant_parser_keeps_rank(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 3), 1..40),
        constant in 0.0f64..1.0,
    ) {
        let ids: Vec<String> = (0..rows.len()).map(|i| format!("d{i:02}")).collect();
        let widened: Vec<Vec<f64>> = rows.iter().map(|r| [r.as_slice(), &[constant]].concat()).collect();
        let before = rank_from_matrix(&ids, 3, &rows).unwrap();
        let after = rank_from_matrix(&ids, 4, &widened).unwrap();
        // Means are affine in the old means, so only float ties may reorder.
        for (b, a) in before.iter().zip(&after) {
            if b.doc_id != a.doc_id {
                let (x, y) = (&before.iter().find(|r| r.doc_id == a.doc_id).unwrap().mean_bleu, &b.mean_bleu);
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
        prop_assert!(after.iter().enumerate().all(|(i, r)| r.rank == i + 1));
    }
}
