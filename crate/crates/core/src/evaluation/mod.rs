//! Scoring: confusion counts, exact ACC/Se/+P, the two-step pipeline with
//! the artifact rule, and Table-1-style comparison reports.

mod report;
pub mod reproduce;

use num_rational::Ratio;
use rayon::prelude::*;

use crate::classifiers::TrainedModel;
use crate::dataset_io::{Corpus, Label, Role};
use crate::error::{LltError, Result};
use crate::linear_law::LinearLaw;
use crate::llt_features::binary_features;

pub use report::{
    compare_report, metrics_csv_header, metrics_csv_row, percent, BaselineRow, Comparison, ReportRow,
    STATE_OF_THE_ART_TEST, TABLE1,
};

/// Tallies with Normal as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same tallies with Ectopic as the positive class.
    pub fn swapped(&self) -> Self {
        ConfusionCounts {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

fn is_normal(l: Label, what: &str, idx: usize) -> Result<bool> {
    match l {
        Label::Normal => Ok(true),
        Label::Ectopic => Ok(false),
        Label::Unlabeled => Err(LltError::param(format!("{what} {idx} is unlabeled"))),
    }
}

pub fn score(predictions: &[Label], truth: &[Label]) -> Result<ConfusionCounts> {
    if predictions.len() != truth.len() {
        return Err(LltError::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (i, (&p, &t)) in predictions.iter().zip(truth).enumerate() {
        match (is_normal(p, "prediction", i)?, is_normal(t, "truth", i)?) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub type Rate = Ratio<u64>;

fn ratio(num: u64, den: u64) -> Option<Rate> {
    (den > 0).then(|| Ratio::new(num, den))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub acc: Rate,
    pub se_normal: Option<Rate>,
    pub pp_normal: Option<Rate>,
    pub se_ectopic: Option<Rate>,
    pub pp_ectopic: Option<Rate>,
    pub counts: ConfusionCounts,
    pub artifact_count: usize,
    pub role: Role,
}

/// Exact metrics; a ratio with a zero denominator is absent.
pub fn metrics(counts: ConfusionCounts, artifact_count: usize, role: Role) -> Result<MetricsReport> {
    let total = counts.total();
    if total == 0 {
        return Err(LltError::EmptyEvaluation);
    }
    let e = counts.swapped();
    Ok(MetricsReport {
        acc: Ratio::new(counts.tp + counts.tn, total),
        se_normal: ratio(counts.tp, counts.tp + counts.fn_),
        pp_normal: ratio(counts.tp, counts.tp + counts.fp),
        se_ectopic: ratio(e.tp, e.tp + e.fn_),
        pp_ectopic: ratio(e.tp, e.tp + e.fp),
        counts,
        artifact_count,
        role,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    /// Leave artifact beats out of the tallies (they are still counted in
    /// `artifact_count`).
    pub exclude_artifacts: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    /// One label per beat in corpus order; artifact beats carry the rule label.
    pub predictions: Vec<Label>,
}

/// Two-step classification: artifact beats are labeled Ectopic by rule,
/// every other beat goes through the law features and the model.
pub fn evaluate_pipeline(
    corpus: &Corpus,
    law: &LinearLaw,
    model: &TrainedModel,
    opts: EvalOptions,
) -> Result<Evaluation> {
    let predictions: Vec<Label> = corpus
        .beats
        .par_iter()
        .map(|beat| match binary_features(beat, law)? {
            None => Ok(Label::Ectopic),
            Some(fv) => model.predict(&fv.xi),
        })
        .collect::<Result<_>>()?;
    let (pred, truth): (Vec<Label>, Vec<Label>) = corpus
        .beats
        .iter()
        .zip(&predictions)
        .filter(|(b, _)| !(opts.exclude_artifacts && b.artifact))
        .map(|(b, p)| (*p, b.label))
        .unzip();
    let counts = score(&pred, &truth)?;
    Ok(Evaluation {
        report: metrics(counts, corpus.artifact_count(), corpus.role)?,
        predictions,
    })
}
