//! Seeded synthetic corpora with labels planted by a hidden criterion.
//! Used by the acceptance suite and benchmarks; handy for smoke-testing
//! the full pipeline without real data.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::corpus::{Corpus, LabelSet};
use crate::error::Result;
use crate::fitness::{select_summary, sentence_score, Criterion};
use crate::metrics::{compute_feature_matrix, FeatureMatrix, COLUMN_NAMES, NUM_METRICS};
use crate::preprocess::{build_document, PreprocessConfig, RawDocument};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub vocab_size: usize,
    /// Zipf exponent for term draws.
    pub zipf_exponent: f64,
    pub min_words: usize,
    pub max_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_docs: 80,
            min_sentences: 30,
            max_sentences: 60,
            vocab_size: 500,
            zipf_exponent: 1.1,
            min_words: 4,
            max_words: 18,
        }
    }
}

/// Generate raw documents with Zipf-distributed vocabulary and titles
/// drawn from the frequent end of it.
pub fn generate_raw_documents(cfg: &SynthConfig, seed: u64) -> Vec<RawDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = Zipf::new(cfg.vocab_size as u64, cfg.zipf_exponent).unwrap();
    let word = |rank: u64| format!("term{rank:03}");

    (0..cfg.n_docs)
        .map(|d| {
            let n_sentences = rng.gen_range(cfg.min_sentences..=cfg.max_sentences);
            let title_len = rng.gen_range(3..=6);
            let title: Vec<String> = (0..title_len)
                .map(|_| word(zipf.sample(&mut rng) as u64))
                .collect();
            let sentences: Vec<String> = (0..n_sentences)
                .map(|_| {
                    let n_words = rng.gen_range(cfg.min_words..=cfg.max_words);
                    let mut words: Vec<String> = (0..n_words)
                        .map(|_| word(zipf.sample(&mut rng) as u64))
                        .collect();
                    // Sprinkle title terms into some sentences so title
                    // similarity carries signal.
                    if rng.gen_bool(0.3) {
                        let t = title[rng.gen_range(0..title.len())].clone();
                        let pos = rng.gen_range(0..=words.len());
                        words.insert(pos, t);
                    }
                    format!("{}.", words.join(" "))
                })
                .collect();
            RawDocument {
                id: format!("synth-{d:03}"),
                title_blocks: vec![title.join(" ")],
                paragraphs: vec![sentences.join(" ")],
            }
        })
        .collect()
}

/// A hidden criterion given as (metric name, weight) pairs; weights are
/// normalized over the named metrics.
pub fn criterion_from_named(weights: &[(&str, f64)]) -> Criterion {
    let mut mask = vec![false; NUM_METRICS];
    let mut w = vec![0.0; NUM_METRICS];
    let total: f64 = weights.iter().map(|(_, v)| v).sum();
    for (name, value) in weights {
        let j = COLUMN_NAMES
            .iter()
            .position(|c| c == name)
            .unwrap_or_else(|| panic!("unknown metric '{name}'"));
        mask[j] = true;
        w[j] = value / total;
    }
    Criterion::new(mask, w)
}

/// Label each document with the top-`ratio` sentences under the hidden
/// criterion, scored over scaled features.
pub fn plant_labels(
    matrices: &[FeatureMatrix],
    criterion: &Criterion,
    ratio: f64,
) -> Vec<LabelSet> {
    matrices
        .iter()
        .map(|fm| {
            let scores: Vec<f64> = (0..fm.rows)
                .map(|r| sentence_score(criterion, fm.scaled_row(r)))
                .collect();
            LabelSet {
                doc_id: fm.doc_id.clone(),
                positive_sentence_indices: select_summary(&scores, ratio),
            }
        })
        .collect()
}

/// End-to-end synthetic corpus: documents, feature matrices and planted
/// labels, as (corpus, matrices).
pub fn labeled_synthetic_corpus(
    cfg: &SynthConfig,
    seed: u64,
    hidden: &Criterion,
    ratio: f64,
) -> Result<(Corpus, Vec<FeatureMatrix>)> {
    let preprocess = PreprocessConfig::default();
    let raws = generate_raw_documents(cfg, seed);
    let documents = raws
        .iter()
        .map(|r| build_document(r, &preprocess))
        .collect::<Result<Vec<_>>>()?;
    let mut corpus = Corpus { documents };
    let matrices: Vec<FeatureMatrix> =
        corpus.documents.iter().map(compute_feature_matrix).collect();
    let labels = plant_labels(&matrices, hidden, ratio);
    let by_id: BTreeMap<&str, &LabelSet> =
        labels.iter().map(|l| (l.doc_id.as_str(), l)).collect();
    for doc in &mut corpus.documents {
        doc.labels = Some(by_id[doc.id.as_str()].positive_sentence_indices.clone());
    }
    Ok((corpus, matrices))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig { n_docs: 3, ..Default::default() };
        let a = generate_raw_documents(&cfg, 5);
        let b = generate_raw_documents(&cfg, 5);
        assert_eq!(a.len(), 3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.paragraphs, y.paragraphs);
            assert_eq!(x.title_blocks, y.title_blocks);
        }
    }

    #[test]
    fn planted_labels_match_ratio() {
        let cfg = SynthConfig { n_docs: 4, ..Default::default() };
        let hidden = criterion_from_named(&[("tf", 0.5), ("len_ch", 0.5)]);
        let (corpus, matrices) = labeled_synthetic_corpus(&cfg, 11, &hidden, 0.10).unwrap();
        for (doc, fm) in corpus.documents.iter().zip(&matrices) {
            let t = ((0.10 * fm.rows as f64).round() as usize).max(1);
            assert_eq!(doc.labels.as_ref().unwrap().len(), t);
            assert!((cfg.min_sentences..=cfg.max_sentences).contains(&doc.sentence_count()));
        }
    }
}
