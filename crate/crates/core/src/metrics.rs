//! The 16 per-sentence scoring metrics and per-document [0,1] scaling.

use std::collections::{BTreeMap, BTreeSet};

use crate::preprocess::{Document, Sentence};

/// Number of metric columns.
pub const NUM_METRICS: usize = 16;

/// Canonical column order. Changing this order or any name is a
/// `SCHEMA_VERSION` bump: the order is baked into cache files, model files
/// and report CSVs.
pub const COLUMN_NAMES: [&str; NUM_METRICS] = [
    "pos_f", "pos_l", "pos_b", "len_w", "len_ch", "luhn", "key_tf", "key_cov", "tf", "tf_isf",
    "title_o", "title_j", "title_c", "d_cov_o", "d_cov_j", "d_cov_c",
];

pub const SCHEMA_VERSION: u32 = 1;

/// The six metric types; combination enumeration picks one member per
/// selected type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricType {
    Position,
    Length,
    Keywords,
    Frequency,
    Title,
    Coverage,
}

#[derive(Debug, Clone)]
pub struct MetricTypeGroup {
    pub type_id: MetricType,
    pub member_columns: Vec<usize>,
}

/// The 3+2+3+2+3+3 partition of the 16 columns.
pub fn metric_groups() -> Vec<MetricTypeGroup> {
    vec![
        MetricTypeGroup { type_id: MetricType::Position, member_columns: vec![0, 1, 2] },
        MetricTypeGroup { type_id: MetricType::Length, member_columns: vec![3, 4] },
        MetricTypeGroup { type_id: MetricType::Keywords, member_columns: vec![5, 6, 7] },
        MetricTypeGroup { type_id: MetricType::Frequency, member_columns: vec![8, 9] },
        MetricTypeGroup { type_id: MetricType::Title, member_columns: vec![10, 11, 12] },
        MetricTypeGroup { type_id: MetricType::Coverage, member_columns: vec![13, 14, 15] },
    ]
}

/// Metric type of a column index.
pub fn column_type(column: usize) -> MetricType {
    match column {
        0..=2 => MetricType::Position,
        3..=4 => MetricType::Length,
        5..=7 => MetricType::Keywords,
        8..=9 => MetricType::Frequency,
        10..=12 => MetricType::Title,
        13..=15 => MetricType::Coverage,
        _ => panic!("column {column} out of range"),
    }
}

/// Per-sentence metric vectors for one document, raw and min-max scaled
/// per column to [0,1]. Row-major, `rows x 16`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub doc_id: String,
    pub rows: usize,
    pub raw: Vec<f64>,
    pub scaled: Vec<f64>,
}

impl FeatureMatrix {
    pub fn scaled_row(&self, row: usize) -> &[f64] {
        &self.scaled[row * NUM_METRICS..(row + 1) * NUM_METRICS]
    }

    pub fn raw_row(&self, row: usize) -> &[f64] {
        &self.raw[row * NUM_METRICS..(row + 1) * NUM_METRICS]
    }
}

/// Document keywords: the top slice of the vocabulary by in-document
/// frequency, Luhn-style: the top 10% of distinct terms (at least 5, at
/// most 100), ties broken by term order.
#[derive(Debug, Clone)]
pub struct KeywordSet {
    pub terms: BTreeSet<String>,
    pub selection_fraction: f64,
}

pub const KEYWORD_FRACTION: f64 = 0.10;
pub const KEYWORD_MIN: usize = 5;
pub const KEYWORD_MAX: usize = 100;

/// Luhn clustering: a window ends when this many consecutive non-keywords
/// appear between keyword occurrences.
pub const LUHN_GAP_LIMIT: usize = 4;

pub fn select_keywords(doc: &Document) -> KeywordSet {
    let vocab_size = doc.term_stats.len();
    let target = ((vocab_size as f64 * KEYWORD_FRACTION).ceil() as usize)
        .clamp(KEYWORD_MIN, KEYWORD_MAX)
        .min(vocab_size);
    // Sort by tf_count descending, then lexicographically.
    let mut ranked: Vec<(&String, usize)> = doc
        .term_stats
        .iter()
        .map(|(term, stats)| (term, stats.tf_count))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    KeywordSet {
        terms: ranked.into_iter().take(target).map(|(t, _)| t.clone()).collect(),
        selection_fraction: KEYWORD_FRACTION,
    }
}

/// Position metrics for a 1-based sentence index.
pub fn position_metrics(i: usize, s_total: usize) -> (f64, f64, f64) {
    assert!(i >= 1 && i <= s_total, "1-based index {i} out of [1, {s_total}]");
    let i_f = i as f64;
    let from_end = (s_total - i + 1) as f64;
    (i_f, 1.0 / i_f, (1.0 / i_f).max(1.0 / from_end))
}

pub fn length_metrics(sentence: &Sentence) -> (f64, f64) {
    (sentence.words.len() as f64, sentence.char_len as f64)
}

fn tf(term: &str, doc: &Document) -> f64 {
    if doc.total_words == 0 {
        return 0.0;
    }
    doc.term_stats
        .get(term)
        .map_or(0.0, |st| st.tf_count as f64 / doc.total_words as f64)
}

fn isf(term: &str, doc: &Document) -> f64 {
    let s_total = doc.sentence_count() as f64;
    doc.term_stats.get(term).map_or(0.0, |st| {
        (1.0 - (s_total / st.sf_count as f64).ln()).max(0.0)
    })
}

/// Luhn significance, keyword TF sum and keyword coverage.
pub fn keyword_metrics(sentence: &Sentence, keywords: &KeywordSet, doc: &Document) -> (f64, f64, f64) {
    let is_kw: Vec<bool> = sentence
        .terms
        .iter()
        .map(|t| keywords.terms.contains(t))
        .collect();

    // Luhn: maximal clusters bracketed by keywords, broken by a run of
    // LUHN_GAP_LIMIT or more non-keywords; score the full cluster span.
    let kw_positions: Vec<usize> =
        is_kw.iter().enumerate().filter(|(_, &kw)| kw).map(|(pos, _)| pos).collect();
    let mut luhn = 0.0f64;
    let mut i = 0;
    while i < kw_positions.len() {
        let start = kw_positions[i];
        let mut end = start;
        let mut count = 1usize;
        while i + 1 < kw_positions.len() && kw_positions[i + 1] - end <= LUHN_GAP_LIMIT {
            i += 1;
            end = kw_positions[i];
            count += 1;
        }
        let span = (end - start + 1) as f64;
        luhn = luhn.max((count as f64).powi(2) / span);
        i += 1;
    }

    let key_tf: f64 = sentence
        .terms
        .iter()
        .filter(|t| keywords.terms.contains(*t))
        .map(|t| tf(t, doc))
        .sum();

    let distinct_in_s: BTreeSet<&String> = sentence
        .terms
        .iter()
        .filter(|t| keywords.terms.contains(*t))
        .collect();
    let key_cov = if keywords.terms.is_empty() {
        0.0
    } else {
        distinct_in_s.len() as f64 / keywords.terms.len() as f64
    };

    (luhn, key_tf, key_cov)
}

/// Mean TF and TF-ISF sum over the sentence's terms.
pub fn frequency_metrics(sentence: &Sentence, doc: &Document) -> (f64, f64) {
    if sentence.terms.is_empty() {
        return (0.0, 0.0);
    }
    let tf_sum: f64 = sentence.terms.iter().map(|t| tf(t, doc)).sum();
    let tf_isf: f64 = sentence.terms.iter().map(|t| tf(t, doc) * isf(t, doc)).sum();
    (tf_sum / sentence.terms.len() as f64, tf_isf)
}

fn freq_map(terms: &[String]) -> BTreeMap<&String, usize> {
    let mut map = BTreeMap::new();
    for t in terms {
        *map.entry(t).or_insert(0) += 1;
    }
    map
}

/// Overlap, Jaccard and cosine similarity between two token multisets.
/// Overlap and Jaccard use distinct-term sets; cosine uses term-frequency
/// vectors. Zero denominators yield 0.
pub fn similarity_metrics(a_terms: &[String], b_terms: &[String]) -> (f64, f64, f64) {
    let a: BTreeSet<&String> = a_terms.iter().collect();
    let b: BTreeSet<&String> = b_terms.iter().collect();
    let inter = a.intersection(&b).count() as f64;
    let union = a.union(&b).count() as f64;
    let min_card = a.len().min(b.len()) as f64;

    let overlap = if min_card == 0.0 { 0.0 } else { inter / min_card };
    let jaccard = if union == 0.0 { 0.0 } else { inter / union };

    let fa = freq_map(a_terms);
    let fb = freq_map(b_terms);
    let dot: f64 = fa
        .iter()
        .filter_map(|(t, &ca)| fb.get(t).map(|&cb| (ca * cb) as f64))
        .sum();
    let norm_a: f64 = fa.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    let norm_b: f64 = fb.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
    let cosine = if norm_a == 0.0 || norm_b == 0.0 {
        0.0
    } else {
        dot / (norm_a * norm_b)
    };

    (overlap, jaccard, cosine)
}

/// Coverage metrics against the rest of the document (all terms of `d`
/// except sentence `s`). The middle variant divides by the distinct term
/// count of the whole document rather than the union.
fn coverage_metrics(sentence: &Sentence, rest_terms: &[String], doc_vocab: usize) -> (f64, f64, f64) {
    let (overlap, _, cosine) = similarity_metrics(&sentence.terms, rest_terms);
    let a: BTreeSet<&String> = sentence.terms.iter().collect();
    let b: BTreeSet<&String> = rest_terms.iter().collect();
    let inter = a.intersection(&b).count() as f64;
    let d_cov_j = if doc_vocab == 0 { 0.0 } else { inter / doc_vocab as f64 };
    (overlap, d_cov_j, cosine)
}

/// Compute the raw S x 16 matrix and min-max scale each column to [0,1]
/// per document. Constant columns scale to all zeros.
pub fn compute_feature_matrix(doc: &Document) -> FeatureMatrix {
    let s_total = doc.sentence_count();
    let keywords = select_keywords(doc);
    let doc_vocab = doc.term_stats.len();

    let mut raw = vec![0.0f64; s_total * NUM_METRICS];
    for sentence in &doc.sentences {
        let row = &mut raw[sentence.index * NUM_METRICS..(sentence.index + 1) * NUM_METRICS];
        let (pos_f, pos_l, pos_b) = position_metrics(sentence.index + 1, s_total);
        let (len_w, len_ch) = length_metrics(sentence);
        let (luhn, key_tf, key_cov) = keyword_metrics(sentence, &keywords, doc);
        let (tf_mean, tf_isf) = frequency_metrics(sentence, doc);
        let (title_o, title_j, title_c) = similarity_metrics(&sentence.terms, &doc.title_terms);

        let rest_terms: Vec<String> = doc
            .sentences
            .iter()
            .filter(|other| other.index != sentence.index)
            .flat_map(|other| other.terms.iter().cloned())
            .collect();
        let (d_cov_o, d_cov_j, d_cov_c) = coverage_metrics(sentence, &rest_terms, doc_vocab);

        row.copy_from_slice(&[
            pos_f, pos_l, pos_b, len_w, len_ch, luhn, key_tf, key_cov, tf_mean, tf_isf, title_o,
            title_j, title_c, d_cov_o, d_cov_j, d_cov_c,
        ]);
    }

    let mut scaled = raw.clone();
    for col in 0..NUM_METRICS {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in 0..s_total {
            let v = raw[row * NUM_METRICS + col];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let span = hi - lo;
        for row in 0..s_total {
            let cell = &mut scaled[row * NUM_METRICS + col];
            *cell = if span == 0.0 { 0.0 } else { (*cell - lo) / span };
        }
    }

    FeatureMatrix {
        doc_id: doc.id.clone(),
        rows: s_total,
        raw,
        scaled,
    }
}
