use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}, byte {offset}: {message}")]
    Parse {
        path: String,
        line: usize,
        offset: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("label index {index} out of range for document '{doc_id}' with {sentences} sentences")]
    LabelOutOfRange {
        doc_id: String,
        index: usize,
        sentences: usize,
    },

    #[error("unknown document id '{0}' in label set")]
    UnknownDocId(String),

    #[error("document '{0}' has no sentences after preprocessing")]
    EmptyDocument(String),

    #[error("corpus has no labeled documents")]
    UnlabeledCorpus,

    #[error("model schema version {found} does not match expected {expected}; re-train or re-cache")]
    SchemaVersion { expected: u32, found: u32 },

    #[error("model schema mismatch: {0}; re-train the model against the current metric columns")]
    SchemaMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
