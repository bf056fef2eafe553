//! Trainable extractive summarization.
//!
//! Learns a user's summarization criterion from labeled documents by
//! running a hybrid binary/continuous particle swarm over 16 sentence
//! scoring metrics, then applies the learned metric subset and weights to
//! rank and extract sentences from new documents.

pub mod corpus;
pub mod error;
pub mod fitness;
pub mod metrics;
pub mod preprocess;
pub mod pso;
pub mod summarizer;
pub mod synth;

pub use corpus::{attach_labels, load_corpus, Corpus, CorpusFormat, LabelSet};
pub use error::{Error, Result};
pub use fitness::{Criterion, SummarizationFitness};
pub use metrics::{compute_feature_matrix, FeatureMatrix, COLUMN_NAMES, NUM_METRICS, SCHEMA_VERSION};
pub use preprocess::{build_document, Document, PreprocessConfig, RawDocument};
pub use pso::{Swarm, SwarmConfig};
pub use summarizer::{
    accuracy_curve, evaluate, feature_matrices, load_model, save_model, summarize, train,
    RunReport, SummarizerModel, TrainOptions,
};
