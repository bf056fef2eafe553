//! Corpus ingestion (JSON-lines documents + a JSON label file) and the
//! on-disk feature matrix cache.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::{FeatureMatrix, NUM_METRICS, SCHEMA_VERSION};
use crate::preprocess::{build_document, Document, PreprocessConfig, RawDocument};

/// Supported corpus file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    /// One JSON document per line: `{"id", "titles", "paragraphs"}`.
    JsonLines,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == doc_id)
    }

    pub fn labeled_documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| d.is_labeled())
    }

    /// Stable digest over document ids and sentence counts, recorded in
    /// trained models.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for d in &self.documents {
            hasher.update(d.id.as_bytes());
            hasher.update(d.sentence_count().to_le_bytes());
        }
        hex_digest(&hasher.finalize()[..8])
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Positive sentence indices for one document, 0-based into the
/// preprocessed sentence list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelSet {
    pub doc_id: String,
    pub positive_sentence_indices: BTreeSet<usize>,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parse raw documents from a JSON-lines file without preprocessing.
pub fn read_raw_documents(path: &Path) -> Result<Vec<RawDocument>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut raws = Vec::new();
    let mut seen = BTreeSet::new();
    let mut offset = 0usize;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let line_bytes = line.len() + 1;
        if !line.trim().is_empty() {
            let raw: RawDocument = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: line_no + 1,
                offset: offset + e.column().saturating_sub(1),
                message: e.to_string(),
            })?;
            if raw.id.is_empty() {
                return Err(Error::Validation(format!(
                    "document at line {} has an empty id",
                    line_no + 1
                )));
            }
            if !seen.insert(raw.id.clone()) {
                return Err(Error::Validation(format!("duplicate document id '{}'", raw.id)));
            }
            if raw.paragraphs.is_empty() {
                return Err(Error::Validation(format!(
                    "document '{}' has no paragraphs",
                    raw.id
                )));
            }
            raws.push(raw);
        }
        offset += line_bytes;
    }
    Ok(raws)
}

/// Load and fully preprocess a corpus, preserving file order.
pub fn load_corpus(path: &Path, format: CorpusFormat, config: &PreprocessConfig) -> Result<Corpus> {
    let CorpusFormat::JsonLines = format;
    let documents = read_raw_documents(path)?
        .iter()
        .map(|raw| build_document(raw, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus { documents })
}

/// Read the label file: a JSON object `{doc_id: [indices]}`.
pub fn read_labels(path: &Path) -> Result<Vec<LabelSet>> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| io_err(path, e))?;
    let map: BTreeMap<String, BTreeSet<usize>> =
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            offset: e.column(),
            message: e.to_string(),
        })?;
    Ok(map
        .into_iter()
        .map(|(doc_id, positive_sentence_indices)| LabelSet {
            doc_id,
            positive_sentence_indices,
        })
        .collect())
}

/// Attach label sets to their documents. Unreferenced documents stay
/// unlabeled; unknown ids and out-of-range indices are errors.
pub fn attach_labels(corpus: &mut Corpus, labels: &[LabelSet]) -> Result<()> {
    for set in labels {
        let doc = corpus
            .documents
            .iter_mut()
            .find(|d| d.id == set.doc_id)
            .ok_or_else(|| Error::UnknownDocId(set.doc_id.clone()))?;
        let s_total = doc.sentences.len();
        if let Some(&bad) = set.positive_sentence_indices.iter().find(|&&i| i >= s_total) {
            return Err(Error::LabelOutOfRange {
                doc_id: set.doc_id.clone(),
                index: bad,
                sentences: s_total,
            });
        }
        doc.labels = Some(set.positive_sentence_indices.clone());
    }
    Ok(())
}

const CACHE_MAGIC: &[u8; 4] = b"FMAT";

fn cache_path(cache_dir: &Path, doc_id: &str) -> PathBuf {
    cache_dir.join(format!("{doc_id}.fmat"))
}

/// Persist a feature matrix: fixed header (magic, schema version,
/// preprocessing fingerprint, row count, column count) followed by the raw
/// and scaled matrices as little-endian f64, row-major. Round-trips are
/// bit-exact.
pub fn cache_store(
    cache_dir: &Path,
    matrix: &FeatureMatrix,
    fingerprint: u64,
) -> Result<()> {
    std::fs::create_dir_all(cache_dir).map_err(|e| io_err(cache_dir, e))?;
    let path = cache_path(cache_dir, &matrix.doc_id);
    let tmp = path.with_extension("fmat.tmp");
    {
        let mut file = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        let mut buf = Vec::with_capacity(24 + matrix.raw.len() * 16);
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&SCHEMA_VERSION.to_le_bytes());
        buf.extend_from_slice(&fingerprint.to_le_bytes());
        buf.extend_from_slice(&(matrix.rows as u32).to_le_bytes());
        buf.extend_from_slice(&(NUM_METRICS as u32).to_le_bytes());
        for &v in matrix.raw.iter().chain(matrix.scaled.iter()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        file.write_all(&buf).map_err(|e| io_err(&tmp, e))?;
    }
    std::fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))?;
    Ok(())
}

/// Load a cached matrix. Missing files, stale fingerprints or schema
/// versions, and corrupt entries all read as absent (corruption logs a
/// warning).
pub fn cache_load(cache_dir: &Path, doc_id: &str, fingerprint: u64) -> Option<FeatureMatrix> {
    let path = cache_path(cache_dir, doc_id);
    let mut bytes = Vec::new();
    match File::open(&path) {
        Ok(mut f) => {
            if f.read_to_end(&mut bytes).is_err() {
                log::warn!("unreadable cache entry {}; recomputing", path.display());
                return None;
            }
        }
        Err(_) => return None,
    }
    parse_cache_entry(&bytes, doc_id, fingerprint).or_else(|| {
        log::warn!("invalid or stale cache entry {}; recomputing", path.display());
        None
    })
}

fn parse_cache_entry(bytes: &[u8], doc_id: &str, fingerprint: u64) -> Option<FeatureMatrix> {
    if bytes.len() < 24 || &bytes[0..4] != CACHE_MAGIC {
        return None;
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().ok()?);
    let stored_fp = u64::from_le_bytes(bytes[8..16].try_into().ok()?);
    let rows = u32::from_le_bytes(bytes[16..20].try_into().ok()?) as usize;
    let cols = u32::from_le_bytes(bytes[20..24].try_into().ok()?) as usize;
    if version != SCHEMA_VERSION || stored_fp != fingerprint || cols != NUM_METRICS {
        return None;
    }
    let cells = rows * cols;
    let expected_len = 24 + cells * 16;
    if bytes.len() != expected_len {
        return None;
    }
    let mut values = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let raw: Vec<f64> = values.by_ref().take(cells).collect();
    let scaled: Vec<f64> = values.collect();
    Some(FeatureMatrix {
        doc_id: doc_id.to_string(),
        rows,
        raw,
        scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::compute_feature_matrix;

    fn write_corpus(dir: &Path, lines: &[&str]) -> PathBuf {
        let path = dir.join("corpus.jsonl");
        let mut f = File::create(&path).unwrap();
        for line in lines {
            writeln!(f, "{line}").unwrap();
        }
        path
    }

    const DOC_A: &str =
        r#"{"id":"a","titles":["Alpha title"],"paragraphs":["First sentence here. Second sentence there."]}"#;
    const DOC_B: &str =
        r#"{"id":"b","titles":[],"paragraphs":["One short paragraph. With two sentences. And a third."]}"#;

    #[test]
    fn load_two_documents() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_corpus(dir.path(), &[DOC_A, DOC_B]);
        let corpus = load_corpus(&path, CorpusFormat::JsonLines, &PreprocessConfig::default()).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.documents[0].id, "a");
        assert_eq!(corpus.documents[1].sentence_count(), 3);
    }

    #[test]
    fn empty_paragraphs_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_corpus(dir.path(), &[r#"{"id":"x","titles":[],"paragraphs":[]}"#]);
        let err = load_corpus(&path, CorpusFormat::JsonLines, &PreprocessConfig::default());
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn duplicate_id_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_corpus(dir.path(), &[DOC_A, DOC_A]);
        let err = load_corpus(&path, CorpusFormat::JsonLines, &PreprocessConfig::default());
        assert!(matches!(err, Err(Error::Validation(msg)) if msg.contains("duplicate")));
    }

    #[test]
    fn malformed_json_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_corpus(dir.path(), &[DOC_A, "{not json"]);
        match load_corpus(&path, CorpusFormat::JsonLines, &PreprocessConfig::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn repeated_loads_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_corpus(dir.path(), &[DOC_A, DOC_B]);
        let cfg = PreprocessConfig::default();
        let a = load_corpus(&path, CorpusFormat::JsonLines, &cfg).unwrap();
        let b = load_corpus(&path, CorpusFormat::JsonLines, &cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (da, db) in a.documents.iter().zip(&b.documents) {
            assert_eq!(da.id, db.id);
            assert_eq!(da.sentences, db.sentences);
            assert_eq!(da.term_stats, db.term_stats);
        }
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn attach_labels_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_corpus(
            dir.path(),
            &[r#"{"id":"a","titles":[],"paragraphs":["S0. S1. S2. S3. S4."]}"#],
        );
        let mut corpus =
            load_corpus(&path, CorpusFormat::JsonLines, &PreprocessConfig::default()).unwrap();
        let sentences_before: Vec<String> = corpus.documents[0]
            .sentences
            .iter()
            .map(|s| s.raw_text.clone())
            .collect();
        attach_labels(
            &mut corpus,
            &[LabelSet {
                doc_id: "a".into(),
                positive_sentence_indices: [0usize, 3].into_iter().collect(),
            }],
        )
        .unwrap();
        let doc = &corpus.documents[0];
        assert_eq!(doc.labels.as_ref().unwrap().len(), 2);
        let sentences_after: Vec<String> =
            doc.sentences.iter().map(|s| s.raw_text.clone()).collect();
        assert_eq!(sentences_before, sentences_after);
    }

    #[test]
    fn label_out_of_range_and_unknown_id() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_corpus(
            dir.path(),
            &[r#"{"id":"a","titles":[],"paragraphs":["S0. S1. S2. S3. S4."]}"#],
        );
        let mut corpus =
            load_corpus(&path, CorpusFormat::JsonLines, &PreprocessConfig::default()).unwrap();
        let err = attach_labels(
            &mut corpus,
            &[LabelSet {
                doc_id: "a".into(),
                positive_sentence_indices: [7usize].into_iter().collect(),
            }],
        );
        assert!(matches!(
            err,
            Err(Error::LabelOutOfRange { index: 7, sentences: 5, .. })
        ));
        let err = attach_labels(
            &mut corpus,
            &[LabelSet {
                doc_id: "zz".into(),
                positive_sentence_indices: [0usize].into_iter().collect(),
            }],
        );
        assert!(matches!(err, Err(Error::UnknownDocId(_))));
        // No label sets: everything stays unlabeled.
        attach_labels(&mut corpus, &[]).unwrap();
        assert!(corpus.labeled_documents().next().is_none());
    }

    fn sample_matrix() -> FeatureMatrix {
        let raw = RawDocument {
            id: "doc-1".into(),
            title_blocks: vec!["A title".into()],
            paragraphs: vec!["Alpha beta gamma. Delta epsilon. Zeta eta theta iota.".into()],
        };
        let doc = build_document(&raw, &PreprocessConfig::default()).unwrap();
        compute_feature_matrix(&doc)
    }

    #[test]
    fn cache_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let matrix = sample_matrix();
        cache_store(dir.path(), &matrix, 0xDEAD).unwrap();
        let loaded = cache_load(dir.path(), "doc-1", 0xDEAD).unwrap();
        assert_eq!(loaded, matrix);
        for (a, b) in loaded.scaled.iter().zip(&matrix.scaled) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn cache_stale_fingerprint_absent() {
        let dir = tempfile::tempdir().unwrap();
        let matrix = sample_matrix();
        cache_store(dir.path(), &matrix, 1).unwrap();
        assert!(cache_load(dir.path(), "doc-1", 2).is_none());
        assert!(cache_load(dir.path(), "other", 1).is_none());
    }

    #[test]
    fn cache_corrupt_treated_as_absent() {
        let dir = tempfile::tempdir().unwrap();
        let matrix = sample_matrix();
        cache_store(dir.path(), &matrix, 1).unwrap();
        let path = cache_path(dir.path(), "doc-1");
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 5);
        std::fs::write(&path, &bytes).unwrap();
        assert!(cache_load(dir.path(), "doc-1", 1).is_none());
        std::fs::write(&path, b"garbage").unwrap();
        assert!(cache_load(dir.path(), "doc-1", 1).is_none());
    }
}
