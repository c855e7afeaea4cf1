//! Mention-based and span-based F1 with per-type breakdowns, plus the
//! per-category timing harness.
//!
//! Mention correctness requires (sentence, start, end, type) to match a
//! gold span exactly; the span metric ignores the type (and collapses
//! duplicate predicted spans that differ only in type). Overall scores are
//! micro-averaged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::corpus::{Document, MentionSpan};
use crate::features::Category;
use crate::pipeline::{tag_corpus, ModelBundle, PipelineError};
use crate::resources::KnowledgeResources;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions reference unknown document id {0:?}")]
    UnknownDocument(String),
    #[error("benchmark corpus is empty")]
    EmptyCorpus,
    #[error("benchmark needs at least 3 repetitions, got {0}")]
    TooFewRepetitions(usize),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Precision, recall, F1 with the zero conventions for empty denominators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Raw confusion counts of one evaluation cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

impl Counts {
    pub fn prf(&self) -> Prf {
        let precision = if self.predicted == 0 {
            0.0
        } else {
            self.correct as f64 / self.predicted as f64
        };
        let recall = if self.gold == 0 {
            0.0
        } else {
            self.correct as f64 / self.gold as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

/// Full evaluation result: per-type cells, the micro-averaged mention cell,
/// and the type-blind span cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    per_type: BTreeMap<String, Counts>,
    mention: Counts,
    span: Counts,
}

impl EvalReport {
    pub fn per_type(&self) -> &BTreeMap<String, Counts> {
        &self.per_type
    }

    pub fn mention_counts(&self) -> Counts {
        self.mention
    }

    pub fn span_counts(&self) -> Counts {
        self.span
    }

    pub fn mention(&self) -> Prf {
        self.mention.prf()
    }

    pub fn span(&self) -> Prf {
        self.span.prf()
    }

    /// Aligned plain-text table.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>6} {:>7} {:>9} {:>9} {:>9}",
            "cell", "gold", "pred", "correct", "precision", "recall", "f1"
        );
        let mut row = |name: &str, c: &Counts| {
            let prf = c.prf();
            let _ = writeln!(
                out,
                "{:<12} {:>6} {:>6} {:>7} {:>9.4} {:>9.4} {:>9.4}",
                name, c.gold, c.predicted, c.correct, prf.precision, prf.recall, prf.f1
            );
        };
        for (ty, counts) in &self.per_type {
            row(ty, counts);
        }
        row("ALL-mention", &self.mention);
        row("ALL-span", &self.span);
        out
    }

    /// Machine-readable TSV (one row per cell).
    pub fn render_tsv(&self) -> String {
        let mut out = String::from("cell\tgold\tpredicted\tcorrect\tprecision\trecall\tf1\n");
        let mut row = |name: &str, c: &Counts| {
            let prf = c.prf();
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
                c.gold, c.predicted, c.correct, prf.precision, prf.recall, prf.f1
            );
        };
        for (ty, counts) in &self.per_type {
            row(ty, counts);
        }
        row("ALL-mention", &self.mention);
        row("ALL-span", &self.span);
        out
    }
}

type SpanKey = (usize, usize, usize, String);

fn span_key(span: &MentionSpan) -> SpanKey {
    (
        span.sentence_index,
        span.start,
        span.end,
        span.entity_type.clone(),
    )
}

/// Evaluates predictions (keyed by document id) against gold documents.
///
/// Every prediction key must name a gold document; gold documents without
/// predictions count as all-missed. Duplicate predicted spans are collapsed
/// before counting.
pub fn mention_f1(
    gold_docs: &[Document],
    predictions: &BTreeMap<String, Vec<MentionSpan>>,
) -> Result<EvalReport, EvalError> {
    let known: BTreeSet<&str> = gold_docs.iter().map(Document::id).collect();
    for id in predictions.keys() {
        if !known.contains(id.as_str()) {
            return Err(EvalError::UnknownDocument(id.clone()));
        }
    }
    let mut per_type: BTreeMap<String, Counts> = BTreeMap::new();
    let mut mention = Counts::default();
    let mut span = Counts::default();
    for doc in gold_docs {
        let gold: BTreeSet<SpanKey> = doc
            .gold_mentions()
            .into_iter()
            .flatten()
            .map(span_key)
            .collect();
        let pred: BTreeSet<SpanKey> = predictions
            .get(doc.id())
            .into_iter()
            .flatten()
            .map(span_key)
            .collect();
        for key in &gold {
            let cell = per_type.entry(key.3.clone()).or_default();
            cell.gold += 1;
            mention.gold += 1;
        }
        for key in &pred {
            let cell = per_type.entry(key.3.clone()).or_default();
            cell.predicted += 1;
            mention.predicted += 1;
            if gold.contains(key) {
                cell.correct += 1;
                mention.correct += 1;
            }
        }
        // span metric: drop the type and collapse
        let gold_spans: BTreeSet<(usize, usize, usize)> =
            gold.iter().map(|k| (k.0, k.1, k.2)).collect();
        let pred_spans: BTreeSet<(usize, usize, usize)> =
            pred.iter().map(|k| (k.0, k.1, k.2)).collect();
        span.gold += gold_spans.len();
        span.predicted += pred_spans.len();
        span.correct += pred_spans.intersection(&gold_spans).count();
    }
    Ok(EvalReport {
        per_type,
        mention,
        span,
    })
}

/// Type-blind boundary F1 (see [`mention_f1`] for alignment rules).
pub fn span_f1(
    gold_docs: &[Document],
    predictions: &BTreeMap<String, Vec<MentionSpan>>,
) -> Result<Prf, EvalError> {
    Ok(mention_f1(gold_docs, predictions)?.span())
}

/// One category's timing row.
#[derive(Debug, Clone)]
pub struct TimingRow {
    pub category: Category,
    pub mean_ms_per_doc: f64,
    pub documents: usize,
    pub total_ms: f64,
}

/// Wall-clock tagging cost per category.
#[derive(Debug, Clone)]
pub struct TimingReport {
    rows: Vec<TimingRow>,
}

impl TimingReport {
    pub fn rows(&self) -> &[TimingRow] {
        &self.rows
    }

    pub fn row(&self, category: Category) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.category == category)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>12} {:>10} {:>12}",
            "category", "ms/doc", "documents", "total ms"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} {:>12.3} {:>10} {:>12.3}",
                row.category.as_str(),
                row.mean_ms_per_doc,
                row.documents,
                row.total_ms
            );
        }
        out
    }

    pub fn render_tsv(&self) -> String {
        let mut out = String::from("category\tms_per_doc\tdocuments\ttotal_ms\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{:.6}\t{}\t{:.6}",
                row.category.as_str(),
                row.mean_ms_per_doc,
                row.documents,
                row.total_ms
            );
        }
        out
    }
}

/// Times each bundle over the corpus: one untimed warm-up pass, then
/// `repetitions` timed passes; the median repetition is reported as
/// mean-milliseconds-per-document.
pub fn benchmark(
    bundles: &[&ModelBundle],
    corpus: &[Document],
    resources: Option<&KnowledgeResources>,
    repetitions: usize,
) -> Result<TimingReport, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    if repetitions < 3 {
        return Err(EvalError::TooFewRepetitions(repetitions));
    }
    let mut rows = Vec::with_capacity(bundles.len());
    for bundle in bundles {
        tag_corpus(bundle, corpus, resources)?; // warm-up, excluded
        let mut times: Vec<Duration> = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let start = Instant::now();
            tag_corpus(bundle, corpus, resources)?;
            times.push(start.elapsed());
        }
        times.sort();
        let median = if repetitions % 2 == 1 {
            times[repetitions / 2]
        } else {
            (times[repetitions / 2 - 1] + times[repetitions / 2]) / 2
        };
        let total_ms = median.as_secs_f64() * 1e3;
        rows.push(TimingRow {
            category: bundle.category(),
            mean_ms_per_doc: total_ms / corpus.len() as f64,
            documents: corpus.len(),
            total_ms,
        });
    }
    Ok(TimingReport { rows })
}
