//! Text preprocessing: sentence splitting, tokenization, stopword removal
//! and stemming. Everything downstream (metrics, training, summarization)
//! consumes the [`Document`] produced here.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A raw, pre-cleaned input document. Callers are expected to have already
/// stripped non-content sections (references, figure captions, etc.).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(rename = "titles")]
    pub title_blocks: Vec<String>,
    pub paragraphs: Vec<String>,
}

/// One sentence of a preprocessed document.
#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    /// 0-based position in the document's sentence list.
    pub index: usize,
    pub raw_text: String,
    /// Unicode scalar count of `raw_text`.
    pub char_len: usize,
    /// Raw whitespace-delimited word tokens.
    pub words: Vec<String>,
    /// Lowercased, stemmed, non-stopword tokens, in word order.
    pub terms: Vec<String>,
}

/// Per-term counts within a single document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermStats {
    /// Occurrences of the term across all sentences of the document.
    pub tf_count: usize,
    /// Number of sentences that contain the term at least once.
    pub sf_count: usize,
}

/// A fully preprocessed document, the unit of summarization.
#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
    /// Stemmed, non-stopword tokens of all title blocks (with repetitions).
    pub title_terms: Vec<String>,
    pub term_stats: BTreeMap<String, TermStats>,
    /// Total raw word tokens across all sentences.
    pub total_words: usize,
    /// Positive (in-summary) sentence indices, when labeled.
    pub labels: Option<BTreeSet<usize>>,
}

impl Document {
    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.is_some()
    }
}

/// Identifier of the stemming algorithm, hashed into the preprocessing
/// fingerprint so cached feature matrices invalidate on change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StemmerId {
    /// Snowball English (Porter2).
    English,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Lowercase stopwords, alphanumeric characters only.
    pub stopwords: BTreeSet<String>,
    /// Tokens ending in a period that never terminate a sentence.
    pub abbreviations: Vec<String>,
    pub stemmer: StemmerId,
}

const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "Fig.", "Figs.", "Eq.", "Eqs.", "et al.", "e.g.",
    "i.e.", "vs.", "cf.", "ca.", "approx.", "No.",
];

impl Default for PreprocessConfig {
    fn default() -> Self {
        let stopwords = include_str!("stopwords_en.txt")
            .lines()
            .map(clean_token)
            .filter(|w| !w.is_empty())
            .collect();
        Self {
            stopwords,
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
            stemmer: StemmerId::English,
        }
    }
}

impl PreprocessConfig {
    /// Stable hash over every setting that affects preprocessing output.
    /// Stored with cached feature matrices; a mismatch invalidates them.
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = Sha256::new();
        for w in &self.stopwords {
            hasher.update(w.as_bytes());
            hasher.update([0u8]);
        }
        hasher.update([1u8]);
        for a in &self.abbreviations {
            hasher.update(a.as_bytes());
            hasher.update([0u8]);
        }
        hasher.update([2u8]);
        hasher.update(match self.stemmer {
            StemmerId::English => b"english".as_slice(),
        });
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }

    fn stemmer(&self) -> rust_stemmers::Stemmer {
        match self.stemmer {
            StemmerId::English => rust_stemmers::Stemmer::create(rust_stemmers::Algorithm::English),
        }
    }
}

/// Lowercase a token and keep only alphanumeric characters.
fn clean_token(token: &str) -> String {
    token
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(|c| c.to_lowercase())
        .collect()
}

/// Split a paragraph into sentences on periods (and terminal `!`/`?`),
/// except periods inside numbers and a configured abbreviation list.
pub fn split_sentences(paragraph: &str, abbreviations: &[String]) -> Vec<String> {
    let chars: Vec<char> = paragraph.chars().collect();
    if chars.is_empty() {
        return Vec::new();
    }

    // Periods inside abbreviation occurrences never split. Mark them up front.
    let mut protected = vec![false; chars.len()];
    for abbr in abbreviations {
        let abbr_chars: Vec<char> = abbr.chars().collect();
        if abbr_chars.is_empty() {
            continue;
        }
        let mut start = 0;
        while start + abbr_chars.len() <= chars.len() {
            let matches = chars[start..start + abbr_chars.len()]
                .iter()
                .zip(&abbr_chars)
                .all(|(a, b)| a.eq_ignore_ascii_case(b));
            let boundary_before =
                start == 0 || !(chars[start - 1].is_alphanumeric() || chars[start - 1] == '.');
            if matches && boundary_before {
                for (offset, c) in abbr_chars.iter().enumerate() {
                    if *c == '.' {
                        protected[start + offset] = true;
                    }
                }
            }
            start += 1;
        }
    }

    let mut sentences = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        current.push(c);
        let terminal = match c {
            '!' | '?' => true,
            '.' => {
                let in_number = i > 0
                    && i + 1 < chars.len()
                    && chars[i - 1].is_ascii_digit()
                    && chars[i + 1].is_ascii_digit();
                !protected[i] && !in_number
            }
            _ => false,
        };
        if terminal {
            let trimmed = current.trim();
            if !trimmed.is_empty() {
                sentences.push(trimmed.to_string());
            }
            current.clear();
        }
    }
    let trimmed = current.trim();
    if !trimmed.is_empty() {
        sentences.push(trimmed.to_string());
    }
    sentences
}

/// Lowercase, strip punctuation, drop stopwords and stem, preserving order.
pub fn normalize(
    words: &[String],
    stopwords: &BTreeSet<String>,
    stemmer: &rust_stemmers::Stemmer,
) -> Vec<String> {
    words
        .iter()
        .filter_map(|w| {
            let cleaned = clean_token(w);
            if cleaned.is_empty() || stopwords.contains(&cleaned) {
                None
            } else {
                Some(stemmer.stem(&cleaned).into_owned())
            }
        })
        .collect()
}

/// Build the canonical document model from raw text.
pub fn build_document(raw: &RawDocument, config: &PreprocessConfig) -> Result<Document> {
    let stemmer = config.stemmer();
    let mut sentences = Vec::new();
    for paragraph in &raw.paragraphs {
        for text in split_sentences(paragraph, &config.abbreviations) {
            let words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
            let terms = normalize(&words, &config.stopwords, &stemmer);
            sentences.push(Sentence {
                index: sentences.len(),
                char_len: text.chars().count(),
                raw_text: text,
                words,
                terms,
            });
        }
    }
    if sentences.is_empty() {
        return Err(Error::EmptyDocument(raw.id.clone()));
    }

    let title_words: Vec<String> = raw
        .title_blocks
        .iter()
        .flat_map(|t| t.split_whitespace())
        .map(str::to_string)
        .collect();
    let title_terms = normalize(&title_words, &config.stopwords, &stemmer);

    let mut term_stats: BTreeMap<String, TermStats> = BTreeMap::new();
    let mut total_words = 0;
    for sentence in &sentences {
        total_words += sentence.words.len();
        let mut seen = BTreeSet::new();
        for term in &sentence.terms {
            let entry = term_stats.entry(term.clone()).or_insert(TermStats {
                tf_count: 0,
                sf_count: 0,
            });
            entry.tf_count += 1;
            if seen.insert(term.clone()) {
                entry.sf_count += 1;
            }
        }
    }

    Ok(Document {
        id: raw.id.clone(),
        sentences,
        title_terms,
        term_stats,
        total_words,
        labels: None,
    })
}
