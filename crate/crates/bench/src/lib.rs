//! Shared fixtures for the criterion benches.

use swarmsum::fitness::SummarizationFitness;
use swarmsum::metrics::FeatureMatrix;
use swarmsum::pso::LimitRange;
use swarmsum::synth::{criterion_from_named, labeled_synthetic_corpus, SynthConfig};
use swarmsum::Corpus;

pub fn corpus_fixture(n_docs: usize, seed: u64) -> (Corpus, Vec<FeatureMatrix>) {
    let cfg = SynthConfig { n_docs, ..Default::default() };
    let hidden = criterion_from_named(&[("tf", 0.5), ("len_ch", 0.3), ("title_j", 0.2)]);
    labeled_synthetic_corpus(&cfg, seed, &hidden, 0.10).unwrap()
}

pub fn fitness_fixture(corpus: &Corpus, matrices: &[FeatureMatrix]) -> SummarizationFitness {
    let docs = corpus
        .documents
        .iter()
        .zip(matrices)
        .map(|(d, fm)| (fm.clone(), d.labels.clone().unwrap()))
        .collect();
    SummarizationFitness::new(docs, 0.10, LimitRange::new(0.0, 6.0)).unwrap()
}
