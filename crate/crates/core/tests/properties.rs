//! Property tests over randomly generated documents and inputs.

use proptest::prelude::*;
use std::collections::BTreeSet;

use swarmsum::fitness::{normalize_coefficients, select_summary, weights_from_scaled};
use swarmsum::metrics::{compute_feature_matrix, similarity_metrics, NUM_METRICS};
use swarmsum::preprocess::{build_document, Document, PreprocessConfig, RawDocument};
use swarmsum::pso::LimitRange;

fn doc_from_words(sentences: Vec<Vec<String>>) -> Document {
    let paragraphs = vec![sentences
        .iter()
        .map(|words| format!("{}.", words.join(" ")))
        .collect::<Vec<_>>()
        .join(" ")];
    build_document(
        &RawDocument {
            id: "prop".to_string(),
            title_blocks: vec!["alpha beta".to_string()],
            paragraphs,
        },
        &PreprocessConfig::default(),
    )
    .unwrap()
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("alpha".to_string()),
        Just("beta".to_string()),
        Just("gamma".to_string()),
        Just("delta".to_string()),
        Just("running".to_string()),
        Just("models".to_string()),
        Just("the".to_string()),
        Just("of".to_string()),
    ]
}

fn sentences() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec(word(), 1..8), 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn word_counts_sum_to_total(sents in sentences()) {
        let doc = doc_from_words(sents);
        let sum: usize = doc.sentences.iter().map(|s| s.words.len()).sum();
        prop_assert_eq!(doc.total_words, sum);
    }

    #[test]
    fn term_stats_match_brute_force(sents in sentences()) {
        let doc = doc_from_words(sents);
        for (term, stats) in &doc.term_stats {
            let tf: usize = doc.sentences.iter()
                .map(|s| s.terms.iter().filter(|t| *t == term).count())
                .sum();
            let sf = doc.sentences.iter().filter(|s| s.terms.contains(term)).count();
            prop_assert_eq!(stats.tf_count, tf);
            prop_assert_eq!(stats.sf_count, sf);
        }
    }

    #[test]
    fn scaled_features_within_unit_interval(sents in sentences()) {
        let doc = doc_from_words(sents);
        let fm = compute_feature_matrix(&doc);
        prop_assert_eq!(fm.rows, doc.sentence_count());
        for &v in &fm.scaled {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn similarity_is_symmetric(
        a in prop::collection::vec(word(), 0..10),
        b in prop::collection::vec(word(), 0..10),
    ) {
        let ab = similarity_metrics(&a, &b);
        let ba = similarity_metrics(&b, &a);
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn normalized_weights_are_a_distribution(
        real in prop::collection::vec(-3.0f64..=3.0, NUM_METRICS),
        mask in prop::collection::vec(any::<bool>(), NUM_METRICS),
    ) {
        let limit4 = LimitRange::new(0.0, 6.0);
        let w = normalize_coefficients(&real, &mask, limit4);
        let selected = mask.iter().filter(|&&m| m).count();
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        for (j, &m) in mask.iter().enumerate() {
            if !m {
                prop_assert_eq!(w[j], 0.0);
            }
        }
        if selected > 0 {
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        } else {
            prop_assert!(w.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn scaling_invariance_of_weight_ratios(
        scaled in prop::collection::vec(0.0f64..=1.0, NUM_METRICS),
        mask in prop::collection::vec(any::<bool>(), NUM_METRICS),
        c in 0.01f64..=100.0,
    ) {
        let boosted: Vec<f64> = scaled.iter().map(|&s| s * c).collect();
        let wa = weights_from_scaled(&scaled, &mask);
        let wb = weights_from_scaled(&boosted, &mask);
        for (a, b) in wa.iter().zip(&wb) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn summary_size_and_subset(scores in prop::collection::vec(0.0f64..=1.0, 1..60), ratio in 0.05f64..=1.0) {
        let picked: BTreeSet<usize> = select_summary(&scores, ratio);
        let t = ((ratio * scores.len() as f64).round() as usize).max(1).min(scores.len());
        prop_assert_eq!(picked.len(), t);
        prop_assert!(picked.iter().all(|&i| i < scores.len()));
    }
}
