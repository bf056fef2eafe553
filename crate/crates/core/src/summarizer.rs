//! Training orchestration, model persistence, summary extraction and
//! held-out evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{cache_load, cache_store, Corpus};
use crate::error::{Error, Result};
use crate::fitness::{
    mcc, normalize_coefficients, select_summary, sentence_score, ConfusionMatrix, Criterion,
    SummarizationFitness,
};
use crate::metrics::{compute_feature_matrix, FeatureMatrix, COLUMN_NAMES, NUM_METRICS,
    SCHEMA_VERSION};
use crate::pso::{Swarm, SwarmConfig, TraceRow};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainingMeta {
    pub seed: u64,
    pub runs: usize,
    pub pop_size: usize,
    pub max_ite: usize,
    pub ratio: f64,
    pub corpus_fingerprint: String,
    pub final_fitness: f64,
}

/// The learned criterion plus enough metadata to audit and reapply it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SummarizerModel {
    pub schema_version: u32,
    /// Canonical metric column order the weights refer to.
    pub columns: Vec<String>,
    /// Metric name -> learned weight; absent or zero means deselected.
    pub weights: BTreeMap<String, f64>,
    pub selected: Vec<String>,
    pub training_meta: TrainingMeta,
}

impl SummarizerModel {
    pub fn criterion(&self) -> Result<Criterion> {
        self.check_schema()?;
        let mut mask = vec![false; NUM_METRICS];
        let mut weights = vec![0.0; NUM_METRICS];
        for (j, name) in COLUMN_NAMES.iter().enumerate() {
            if let Some(&w) = self.weights.get(*name) {
                weights[j] = w;
            }
            mask[j] = self.selected.iter().any(|s| s == name);
        }
        Ok(Criterion::new(mask, weights))
    }

    fn check_schema(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                expected: SCHEMA_VERSION,
                found: self.schema_version,
            });
        }
        if self.columns.len() != NUM_METRICS
            || self.columns.iter().zip(COLUMN_NAMES).any(|(a, b)| a != b)
        {
            return Err(Error::SchemaMismatch(format!(
                "model columns {:?} do not match the canonical metric order",
                self.columns
            )));
        }
        Ok(())
    }
}

/// Per-run and aggregate training statistics, the Table-2/Fig-2 style
/// report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub best_fitness_per_run: Vec<f64>,
    /// Fraction of runs whose winning mask selected each metric.
    pub participation: Vec<f64>,
    pub weight_mean: Vec<f64>,
    pub weight_std: Vec<f64>,
    /// accuracy_vs_k[k-1] = training accuracy using the top-k metrics by
    /// mean coefficient.
    pub accuracy_vs_k: Vec<f64>,
    /// Per-iteration convergence trace of the winning run, when requested.
    #[serde(skip)]
    pub winning_trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub swarm: SwarmConfig,
    pub ratio: f64,
    pub runs: usize,
    /// Run r uses seed base_seed + r.
    pub base_seed: u64,
    /// Worker threads for independent runs; results are ordered by run
    /// index, so parallelism never changes the outcome.
    pub jobs: usize,
    pub collect_traces: bool,
}

impl TrainOptions {
    pub fn defaults(base_seed: u64) -> Self {
        Self {
            swarm: SwarmConfig::defaults(NUM_METRICS, base_seed),
            ratio: 0.10,
            runs: 30,
            base_seed,
            jobs: 1,
            collect_traces: false,
        }
    }
}

/// Feature matrices for every document, cache-aware when `cache_dir` is
/// given.
pub fn feature_matrices(
    corpus: &Corpus,
    cache_dir: Option<&Path>,
    fingerprint: u64,
) -> Result<Vec<FeatureMatrix>> {
    corpus
        .documents
        .iter()
        .map(|doc| {
            if let Some(dir) = cache_dir {
                if let Some(cached) = cache_load(dir, &doc.id, fingerprint) {
                    if cached.rows == doc.sentence_count() {
                        return Ok(cached);
                    }
                }
                let fm = compute_feature_matrix(doc);
                cache_store(dir, &fm, fingerprint)?;
                Ok(fm)
            } else {
                Ok(compute_feature_matrix(doc))
            }
        })
        .collect()
}

fn labeled_pairs(
    corpus: &Corpus,
    matrices: &[FeatureMatrix],
) -> Result<Vec<(FeatureMatrix, BTreeSet<usize>)>> {
    let pairs: Vec<_> = corpus
        .documents
        .iter()
        .zip(matrices)
        .filter_map(|(doc, fm)| doc.labels.clone().map(|l| (fm.clone(), l)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::UnlabeledCorpus);
    }
    Ok(pairs)
}

#[derive(Debug, Clone)]
struct RunOutcome {
    fit: f64,
    mask: Vec<bool>,
    weights: Vec<f64>,
    trace: Vec<TraceRow>,
}

/// Train the summarization criterion: `runs` independent swarm
/// optimizations with derived seeds; the shipped model is the single best
/// run, the report aggregates all of them.
pub fn train(
    corpus: &Corpus,
    matrices: &[FeatureMatrix],
    opts: &TrainOptions,
) -> Result<(SummarizerModel, RunReport)> {
    if corpus.documents.iter().all(|d| d.sentence_count() == 1) {
        log::warn!("every document has a single sentence; the learned criterion is degenerate");
    }
    let fitness =
        SummarizationFitness::new(labeled_pairs(corpus, matrices)?, opts.ratio, opts.swarm.limit4)?;

    let run_one = |run: usize| -> RunOutcome {
        let mut cfg = opts.swarm.clone();
        cfg.rng_seed = opts.base_seed.wrapping_add(run as u64);
        let result = Swarm::new(cfg, &fitness).run_traced(opts.collect_traces);
        let weights =
            normalize_coefficients(&result.best.real, &result.best.fit_mask, opts.swarm.limit4);
        RunOutcome {
            fit: result.best.fit,
            mask: result.best.fit_mask,
            weights,
            trace: result.trace,
        }
    };

    let outcomes: Vec<RunOutcome> = if opts.jobs > 1 && opts.runs > 1 {
        let mut slots: Vec<Option<RunOutcome>> = vec![None; opts.runs];
        std::thread::scope(|scope| {
            for (chunk_idx, chunk) in slots.chunks_mut(opts.runs.div_ceil(opts.jobs)).enumerate() {
                let run_one = &run_one;
                let chunk_size = opts.runs.div_ceil(opts.jobs);
                scope.spawn(move || {
                    for (i, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(run_one(chunk_idx * chunk_size + i));
                    }
                });
            }
        });
        slots.into_iter().map(Option::unwrap).collect()
    } else {
        (0..opts.runs).map(run_one).collect()
    };

    // Best run wins; earliest run on ties.
    let best_run = outcomes
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.fit.partial_cmp(&b.fit).unwrap().then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .expect("runs >= 1");

    let runs_f = outcomes.len() as f64;
    let mut participation = vec![0.0; NUM_METRICS];
    let mut weight_mean = vec![0.0; NUM_METRICS];
    let mut weight_std = vec![0.0; NUM_METRICS];
    for o in &outcomes {
        for j in 0..NUM_METRICS {
            if o.mask[j] {
                participation[j] += 1.0 / runs_f;
            }
            weight_mean[j] += o.weights[j] / runs_f;
        }
    }
    for o in &outcomes {
        for j in 0..NUM_METRICS {
            weight_std[j] += (o.weights[j] - weight_mean[j]).powi(2) / runs_f;
        }
    }
    for v in &mut weight_std {
        *v = v.sqrt();
    }

    let accuracy_vs_k = accuracy_curve(&fitness, &weight_mean);

    let report = RunReport {
        best_fitness_per_run: outcomes.iter().map(|o| o.fit).collect(),
        participation,
        weight_mean,
        weight_std,
        accuracy_vs_k,
        winning_trace: outcomes[best_run].trace.clone(),
    };

    let winner = &outcomes[best_run];
    let model = SummarizerModel {
        schema_version: SCHEMA_VERSION,
        columns: COLUMN_NAMES.iter().map(|s| s.to_string()).collect(),
        weights: COLUMN_NAMES
            .iter()
            .enumerate()
            .map(|(j, name)| (name.to_string(), winner.weights[j]))
            .collect(),
        selected: COLUMN_NAMES
            .iter()
            .enumerate()
            .filter(|(j, _)| winner.mask[*j])
            .map(|(_, name)| name.to_string())
            .collect(),
        training_meta: TrainingMeta {
            seed: opts.base_seed,
            runs: opts.runs,
            pop_size: opts.swarm.pop_size,
            max_ite: opts.swarm.max_ite,
            ratio: opts.ratio,
            corpus_fingerprint: corpus.fingerprint(),
            final_fitness: winner.fit,
        },
    };

    Ok((model, report))
}

/// Classification accuracy as metrics are added one at a time in
/// decreasing coefficient order (ties toward lower column index): entry
/// k-1 uses the top-k metrics with their coefficients renormalized.
pub fn accuracy_curve(fitness: &SummarizationFitness, coefficients: &[f64]) -> Vec<f64> {
    let mut rank: Vec<usize> = (0..NUM_METRICS).collect();
    rank.sort_by(|&a, &b| {
        coefficients[b].partial_cmp(&coefficients[a]).unwrap().then(a.cmp(&b))
    });
    (1..=NUM_METRICS)
        .map(|k| {
            let mut mask = vec![false; NUM_METRICS];
            for &j in rank.iter().take(k) {
                mask[j] = true;
            }
            let sum: f64 = rank.iter().take(k).map(|&j| coefficients[j]).sum();
            let weights: Vec<f64> = (0..NUM_METRICS)
                .map(|j| {
                    if !mask[j] {
                        0.0
                    } else if sum > 0.0 {
                        coefficients[j] / sum
                    } else {
                        1.0 / k as f64
                    }
                })
                .collect();
            let criterion = Criterion::new(mask, weights);
            corpus_accuracy(fitness, &criterion)
        })
        .collect()
}

fn corpus_accuracy(fitness: &SummarizationFitness, criterion: &Criterion) -> f64 {
    let mut agree = 0usize;
    let mut total = 0usize;
    for d in &fitness.docs {
        let scores: Vec<f64> = (0..d.rows)
            .map(|r| sentence_score(criterion, &d.scaled[r * NUM_METRICS..(r + 1) * NUM_METRICS]))
            .collect();
        let predicted = select_summary(&scores, fitness.ratio);
        let m = ConfusionMatrix::from_sets(&d.labels, &predicted, d.rows);
        agree += m.tp + m.tn;
        total += d.rows;
    }
    agree as f64 / total as f64
}

/// One extracted sentence, in original document order.
#[derive(Debug, Clone, Serialize)]
pub struct SummarySentence {
    pub index: usize,
    pub text: String,
    pub score: f64,
    /// 1-based rank by score (ties resolved toward earlier sentences).
    pub rank: usize,
}

/// Apply a trained model to one document.
pub fn summarize(
    doc_text_sentences: &[String],
    matrix: &FeatureMatrix,
    model: &SummarizerModel,
    ratio: f64,
) -> Result<Vec<SummarySentence>> {
    let criterion = model.criterion()?;
    let scores: Vec<f64> = (0..matrix.rows)
        .map(|r| sentence_score(&criterion, matrix.scaled_row(r)))
        .collect();
    let selected = select_summary(&scores, ratio);
    let mut order: Vec<usize> = (0..matrix.rows).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let rank_of: BTreeMap<usize, usize> =
        order.iter().enumerate().map(|(rank, &idx)| (idx, rank + 1)).collect();
    Ok(selected
        .into_iter()
        .map(|index| SummarySentence {
            index,
            text: doc_text_sentences.get(index).cloned().unwrap_or_default(),
            score: scores[index],
            rank: rank_of[&index],
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct DocEvaluation {
    pub doc_id: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub mcc: f64,
    /// |predicted ∩ labels| / |labels|, the selection-agreement ratio.
    pub agreement: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub mean_mcc: f64,
    pub per_doc: Vec<DocEvaluation>,
}

/// Evaluate a model on a labeled corpus: classification accuracy over all
/// sentences plus the label-count-weighted mean MCC.
pub fn evaluate(
    corpus: &Corpus,
    matrices: &[FeatureMatrix],
    model: &SummarizerModel,
    ratio: f64,
) -> Result<EvaluationReport> {
    let criterion = model.criterion()?;
    let mut per_doc = Vec::new();
    let mut agree = 0usize;
    let mut total = 0usize;
    let mut total_labels = 0usize;
    for (doc, fm) in corpus.documents.iter().zip(matrices) {
        let Some(labels) = &doc.labels else { continue };
        let scores: Vec<f64> = (0..fm.rows)
            .map(|r| sentence_score(&criterion, fm.scaled_row(r)))
            .collect();
        let predicted = select_summary(&scores, ratio);
        let m = ConfusionMatrix::from_sets(labels, &predicted, fm.rows);
        agree += m.tp + m.tn;
        total += fm.rows;
        total_labels += labels.len();
        per_doc.push(DocEvaluation {
            doc_id: doc.id.clone(),
            tp: m.tp,
            fp: m.fp,
            fn_: m.fn_,
            tn: m.tn,
            mcc: mcc(&m),
            agreement: if labels.is_empty() { 0.0 } else { m.tp as f64 / labels.len() as f64 },
        });
    }
    if per_doc.is_empty() {
        return Err(Error::UnlabeledCorpus);
    }
    let mean_mcc = per_doc
        .iter()
        .map(|d| ((d.tp + d.fn_) as f64 / total_labels as f64) * d.mcc)
        .sum();
    Ok(EvaluationReport {
        accuracy: agree as f64 / total as f64,
        mean_mcc,
        per_doc,
    })
}

/// Write the model atomically as pretty JSON.
pub fn save_model(model: &SummarizerModel, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(model).expect("model serialization is infallible");
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, json.as_bytes()).map_err(|e| Error::Io {
        path: tmp.display().to_string(),
        source: e,
    })?;
    std::fs::rename(&tmp, path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SummarizerModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let model: SummarizerModel = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        offset: e.column(),
        message: e.to_string(),
    })?;
    model.check_schema()?;
    Ok(model)
}
