//! From particle to summarization criterion to fitness: coefficient
//! normalization, sentence scoring, per-type combination enumeration,
//! confusion matrices, MCC and the corpus-weighted fitness.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::metrics::{metric_groups, FeatureMatrix, NUM_METRICS};
use crate::pso::{Evaluation, FitnessEval, LimitRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    /// Count cells from a label set and a prediction set over `s_total`
    /// sentences.
    pub fn from_sets(labels: &BTreeSet<usize>, predicted: &BTreeSet<usize>, s_total: usize) -> Self {
        let mut m = ConfusionMatrix::default();
        for i in 0..s_total {
            match (labels.contains(&i), predicted.contains(&i)) {
                (true, true) => m.tp += 1,
                (true, false) => m.fn_ += 1,
                (false, true) => m.fp += 1,
                (false, false) => m.tn += 1,
            }
        }
        m
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Matthews correlation coefficient; any zero factor in the denominator
/// yields 0.
pub fn mcc(m: &ConfusionMatrix) -> f64 {
    let (tp, fp, fn_, tn) = (m.tp as f64, m.fp as f64, m.fn_ as f64, m.tn as f64);
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    if factors.contains(&0.0) {
        return 0.0;
    }
    (tp * tn - fp * fn_) / factors.iter().product::<f64>().sqrt()
}

/// A learned summarization criterion: which metrics participate and with
/// what weight. Weights are zero outside the mask and sum to 1 over it.
#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub mask: Vec<bool>,
    pub weights: Vec<f64>,
}

impl Criterion {
    pub fn new(mask: Vec<bool>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(mask.len(), weights.len());
        Self { mask, weights }
    }
}

/// Map raw coefficients in [-delta4, delta4] to normalized weights: scale
/// each masked coefficient to [0,1], then divide by the cumulative total.
/// An all-at-lower-bound mask falls back to uniform weights.
pub fn normalize_coefficients(real: &[f64], mask: &[bool], limit4: LimitRange) -> Vec<f64> {
    let delta = limit4.delta();
    let scaled: Vec<f64> = real
        .iter()
        .zip(mask)
        .map(|(&r, &m)| if m && delta > 0.0 { (r + delta) / (2.0 * delta) } else { 0.0 })
        .collect();
    weights_from_scaled(&scaled, mask)
}

/// Second normalization step, split out so the positive-scaling invariance
/// (weights unchanged under `scaled * c`, c > 0) is directly testable.
pub fn weights_from_scaled(scaled: &[f64], mask: &[bool]) -> Vec<f64> {
    let selected = mask.iter().filter(|&&m| m).count();
    if selected == 0 {
        return vec![0.0; mask.len()];
    }
    let sum: f64 = scaled.iter().zip(mask).filter(|(_, &m)| m).map(|(&s, _)| s).sum();
    if sum == 0.0 {
        return mask
            .iter()
            .map(|&m| if m { 1.0 / selected as f64 } else { 0.0 })
            .collect();
    }
    scaled
        .iter()
        .zip(mask)
        .map(|(&s, &m)| if m { s / sum } else { 0.0 })
        .collect()
}

/// Linear combination of a scaled feature row under a criterion.
pub fn sentence_score(criterion: &Criterion, feature_row: &[f64]) -> f64 {
    criterion
        .weights
        .iter()
        .zip(feature_row)
        .map(|(&w, &f)| w * f)
        .sum()
}

/// Indices of the best `t` sentences, `t = max(1, round(ratio * S))`.
/// Ties go to the earlier sentence.
pub fn select_summary(scores: &[f64], ratio: f64) -> BTreeSet<usize> {
    assert!(ratio > 0.0 && ratio <= 1.0, "ratio {ratio} outside (0, 1]");
    let s_total = scores.len();
    let t = ((ratio * s_total as f64).round() as usize).max(1).min(s_total);
    let mut order: Vec<usize> = (0..s_total).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    order.into_iter().take(t).collect()
}

/// All candidate masks for a bit vector: the Cartesian product choosing
/// exactly one selected metric per non-empty type group. The all-zero
/// vector yields no candidates.
pub fn enumerate_combinations(bin: &[bool]) -> Vec<Vec<bool>> {
    debug_assert_eq!(bin.len(), NUM_METRICS);
    let per_group: Vec<Vec<usize>> = metric_groups()
        .iter()
        .map(|g| {
            g.member_columns
                .iter()
                .copied()
                .filter(|&c| bin[c])
                .collect::<Vec<usize>>()
        })
        .filter(|cols| !cols.is_empty())
        .collect();
    if per_group.is_empty() {
        return Vec::new();
    }
    let mut masks = vec![vec![false; NUM_METRICS]];
    for group in &per_group {
        let mut next = Vec::with_capacity(masks.len() * group.len());
        for mask in &masks {
            for &col in group {
                let mut m = mask.clone();
                m[col] = true;
                next.push(m);
            }
        }
        masks = next;
    }
    masks
}

fn mask_value(mask: &[bool]) -> u32 {
    mask.iter()
        .enumerate()
        .fold(0u32, |acc, (j, &b)| if b { acc | (1 << j) } else { acc })
}

fn mask_bits(mask: &[bool]) -> usize {
    mask.iter().filter(|&&b| b).count()
}

/// One labeled document prepared for fitness evaluation.
#[derive(Debug, Clone)]
pub struct LabeledDoc {
    pub doc_id: String,
    pub scaled: Vec<f64>,
    pub rows: usize,
    pub labels: BTreeSet<usize>,
}

/// Shared, immutable evaluation context: the labeled part of a corpus with
/// its scaled feature matrices and the compression ratio.
#[derive(Debug, Clone)]
pub struct SummarizationFitness {
    pub docs: Vec<LabeledDoc>,
    pub ratio: f64,
    pub limit4: LimitRange,
    total_label_count: usize,
}

impl SummarizationFitness {
    pub fn new(
        docs: Vec<(FeatureMatrix, BTreeSet<usize>)>,
        ratio: f64,
        limit4: LimitRange,
    ) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::UnlabeledCorpus);
        }
        let docs: Vec<LabeledDoc> = docs
            .into_iter()
            .map(|(fm, labels)| LabeledDoc {
                doc_id: fm.doc_id,
                rows: fm.rows,
                scaled: fm.scaled,
                labels,
            })
            .collect();
        let total_label_count = docs.iter().map(|d| d.labels.len()).sum();
        if total_label_count == 0 {
            return Err(Error::UnlabeledCorpus);
        }
        Ok(Self {
            docs,
            ratio,
            limit4,
            total_label_count,
        })
    }

    /// Fitness of one criterion: MCC per document, weighted
    /// by that document's share of all labeled summary sentences.
    pub fn criterion_fitness(&self, criterion: &Criterion) -> f64 {
        self.docs
            .iter()
            .map(|d| {
                let weight = d.labels.len() as f64 / self.total_label_count as f64;
                weight * self.doc_mcc(criterion, d)
            })
            .sum()
    }

    fn doc_mcc(&self, criterion: &Criterion, d: &LabeledDoc) -> f64 {
        let scores: Vec<f64> = (0..d.rows)
            .map(|row| sentence_score(criterion, &d.scaled[row * NUM_METRICS..(row + 1) * NUM_METRICS]))
            .collect();
        let predicted = select_summary(&scores, self.ratio);
        mcc(&ConfusionMatrix::from_sets(&d.labels, &predicted, d.rows))
    }

    /// Evaluate a particle: try every candidate combination, keep the best
    /// (ties prefer fewer metrics, then the smaller mask value). An
    /// all-zero bit vector gets the worst possible fitness.
    pub fn evaluate_particle(&self, bin: &[bool], real: &[f64]) -> Evaluation {
        let candidates = enumerate_combinations(bin);
        if candidates.is_empty() {
            return Evaluation {
                fit: -1.0,
                fit_mask: vec![false; bin.len()],
            };
        }
        let mut best: Option<(f64, Vec<bool>)> = None;
        for mask in candidates {
            let weights = normalize_coefficients(real, &mask, self.limit4);
            let criterion = Criterion::new(mask.clone(), weights);
            let fit = self.criterion_fitness(&criterion);
            let better = match &best {
                None => true,
                Some((bf, bm)) => {
                    fit > *bf
                        || (fit == *bf
                            && (mask_bits(&mask), mask_value(&mask))
                                < (mask_bits(bm), mask_value(bm)))
                }
            };
            if better {
                best = Some((fit, mask));
            }
        }
        let (fit, fit_mask) = best.unwrap();
        Evaluation { fit, fit_mask }
    }
}

impl FitnessEval for SummarizationFitness {
    fn evaluate(&self, bin: &[bool], real: &[f64]) -> Evaluation {
        self.evaluate_particle(bin, real)
    }
}
