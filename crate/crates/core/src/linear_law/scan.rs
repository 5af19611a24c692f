use super::{fit_class_law, law_variance, FitOptions};
use crate::dataset_io::{Corpus, Label};
use crate::error::{LltError, Result};

/// Fraction of trace(C) below which λ is replaced in the gap denominator.
const GAP_FLOOR_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LawScanEntry {
    pub law_len: usize,
    pub lambda_train: f64,
    pub var_validation: f64,
    /// `|var_validation − λ| / λ`, with λ floored at a small fraction of the
    /// mean training power so exact laws do not divide by rounding noise.
    pub gap: f64,
    pub feature_count: usize,
    pub multiplicity_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LawScanReport {
    pub entries: Vec<LawScanEntry>,
}

/// Fits the Normal-class law on `train` for each length and measures how
/// well it carries over to the Normal beats of `validation`.
pub fn scan_law_length(
    train: &Corpus,
    validation: &Corpus,
    lengths: std::ops::RangeInclusive<usize>,
) -> Result<LawScanReport> {
    let beat_len = train.beat_len;
    if *lengths.start() < 2 || *lengths.end() > beat_len || lengths.is_empty() {
        return Err(LltError::param(format!(
            "law length range {}..={} must lie within [2, {beat_len}]",
            lengths.start(),
            lengths.end()
        )));
    }
    let fit_beats = train.class_beats(Label::Normal);
    let val_beats: Vec<&[f64]> = validation
        .class_beats(Label::Normal)
        .into_iter()
        .map(|b| b.samples.as_slice())
        .collect();
    if fit_beats.is_empty() || val_beats.is_empty() {
        return Err(LltError::EmptyClass);
    }
    let power = fit_beats
        .iter()
        .flat_map(|b| b.samples.iter())
        .map(|v| v * v)
        .sum::<f64>()
        / (fit_beats.len() * beat_len) as f64;

    let mut entries = Vec::new();
    for law_len in lengths {
        let law = fit_class_law(&fit_beats, law_len, Label::Normal, FitOptions { allow_degenerate: true })?;
        let strict = fit_class_law(&fit_beats, law_len, Label::Normal, FitOptions::default()).is_err();
        let var_validation = law_variance(&val_beats, &law)?;
        let floor = (GAP_FLOOR_REL * power * law_len as f64).max(f64::MIN_POSITIVE);
        entries.push(LawScanEntry {
            law_len,
            lambda_train: law.lambda,
            var_validation,
            gap: (var_validation - law.lambda).abs() / law.lambda.max(floor),
            feature_count: beat_len - law_len + 1,
            multiplicity_warning: strict,
        });
    }
    Ok(LawScanReport { entries })
}

/// Columns: `l,lambda_train,var_val,gap,feature_count`.
pub fn render_scan_csv(report: &LawScanReport) -> String {
    let mut out = String::from("l,lambda_train,var_val,gap,feature_count\n");
    for e in &report.entries {
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{}\n",
            e.law_len, e.lambda_train, e.var_validation, e.gap, e.feature_count
        ));
    }
    out
}
