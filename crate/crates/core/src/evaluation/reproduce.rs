//! The full experiment: fit the Normal law on training beats, transform,
//! train every classifier, score validation and test, and write reports.

use std::fs;
use std::path::{Path, PathBuf};

use super::{compare_report, evaluate_pipeline, metrics_csv_header, metrics_csv_row, Comparison, EvalOptions, MetricsReport, ReportRow};
use crate::classifiers::{fit, heuristic_k, select_by_validation, GridEntry, Hyperparams, ModelKind, SelectionRule, TrainedModel};
use crate::config::RunConfig;
use crate::dataset_io::{format_real, load_corpus, save_law, split_train_validation, Corpus, CorpusFormat, Label, Role};
use crate::error::{LltError, Result};
use crate::linear_law::{fit_class_law, render_scan_csv, scan_law_length, FitOptions, LawScanReport, LinearLaw};
use crate::llt_features::binary_features;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    Fit,
    Select,
    Evaluate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditEntry {
    pub stage: String,
    pub kind: StageKind,
    pub role: Role,
}

/// Which corpus role fed each stage.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AuditLog {
    pub entries: Vec<AuditEntry>,
}

impl AuditLog {
    pub fn record(&mut self, stage: impl Into<String>, kind: StageKind, role: Role) {
        self.entries.push(AuditEntry {
            stage: stage.into(),
            kind,
            role,
        });
    }

    /// Fails if test data fed any fit or selection stage.
    pub fn check(&self) -> Result<()> {
        match self
            .entries
            .iter()
            .find(|e| e.role == Role::Test && e.kind != StageKind::Evaluate)
        {
            Some(e) => Err(LltError::Audit(format!("test corpus used as input to `{}`", e.stage))),
            None => Ok(()),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::from("stage,kind,role\n");
        for e in &self.entries {
            let kind = match e.kind {
                StageKind::Fit => "fit",
                StageKind::Select => "select",
                StageKind::Evaluate => "evaluate",
            };
            out.push_str(&format!("{},{kind},{}\n", e.stage, e.role.name()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceInputs {
    pub train: Corpus,
    /// When absent, the training corpus is split by the configured fraction.
    pub validation: Option<Corpus>,
    pub test: Corpus,
}

/// Reads `train.csv`, `test.csv` and, if present, `validation.csv`.
pub fn load_inputs(data_dir: impl AsRef<Path>) -> Result<ReproduceInputs> {
    let dir = data_dir.as_ref();
    let validation_path = dir.join("validation.csv");
    Ok(ReproduceInputs {
        train: load_corpus(dir.join("train.csv"), &CorpusFormat::Csv, Role::Train)?,
        validation: if validation_path.exists() {
            Some(load_corpus(validation_path, &CorpusFormat::Csv, Role::Validation)?)
        } else {
            None
        },
        test: load_corpus(dir.join("test.csv"), &CorpusFormat::Csv, Role::Test)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub name: String,
    /// Slug used for the model file name.
    pub slug: String,
    pub baseline: Option<&'static str>,
    pub model: TrainedModel,
    pub validation: MetricsReport,
    pub test: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceOutcome {
    pub law: LinearLaw,
    pub scan: LawScanReport,
    pub models: Vec<ModelOutcome>,
    pub rf_grid: Vec<GridEntry>,
    pub audit: AuditLog,
    pub comparison: Comparison,
    pub train: Corpus,
    pub validation: Corpus,
    pub test: Corpus,
}

impl ReproduceOutcome {
    pub fn model(&self, name: &str) -> Option<&ModelOutcome> {
        self.models.iter().find(|m| m.name == name)
    }
}

/// Law features of the non-artifact beats with their labels.
pub fn corpus_features(corpus: &Corpus, law: &LinearLaw) -> Result<(Vec<Vec<f64>>, Vec<Label>)> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, beat) in corpus.beats.iter().enumerate() {
        if let Some(fv) = binary_features(beat, law)? {
            if beat.label == Label::Unlabeled {
                return Err(LltError::param(format!("{} beat {} is unlabeled", corpus.role.name(), i + 1)));
            }
            x.push(fv.xi);
            y.push(beat.label);
        }
    }
    Ok((x, y))
}

struct Plan {
    name: String,
    slug: String,
    baseline: Option<&'static str>,
    kind: ModelKind,
    hp: Hyperparams,
}

const RF_DEPTH_GRID: [usize; 5] = [2, 4, 6, 8, 10];

pub fn reproduce(inputs: ReproduceInputs, cfg: &RunConfig) -> Result<ReproduceOutcome> {
    cfg.validate()?;
    let mut audit = AuditLog::default();
    let (train, validation) = match inputs.validation {
        Some(v) => (inputs.train, v),
        None => {
            audit.record("split", StageKind::Select, inputs.train.role);
            split_train_validation(&inputs.train, &cfg.split)?
        }
    };
    let test = inputs.test;
    if validation.is_empty() {
        return Err(LltError::EmptyEvaluation);
    }
    if cfg.law_len > train.beat_len {
        return Err(LltError::param(format!(
            "law_len {} exceeds beat length {}",
            cfg.law_len, train.beat_len
        )));
    }

    audit.record("fit-law Normal", StageKind::Fit, train.role);
    let law = fit_class_law(
        &train.class_beats(Label::Normal),
        cfg.law_len,
        Label::Normal,
        FitOptions {
            allow_degenerate: cfg.allow_degenerate,
        },
    )?;
    audit.record("scan-law-length", StageKind::Fit, train.role);
    audit.record("scan-law-length", StageKind::Select, validation.role);
    let scan_max = cfg.scan_max.min(train.beat_len);
    let scan = scan_law_length(&train, &validation, cfg.scan_min.min(scan_max)..=scan_max)?;

    let (train_x, train_y) = corpus_features(&train, &law)?;
    let (val_x, val_y) = corpus_features(&validation, &law)?;
    if train_x.is_empty() {
        return Err(LltError::param("no non-artifact training beats"));
    }
    let base = cfg.hyperparams.clone();

    let mut rf_grid = Vec::new();
    let rf_hp = if cfg.rf_select {
        audit.record("select rf depth", StageKind::Select, validation.role);
        let candidates: Vec<Hyperparams> = RF_DEPTH_GRID
            .iter()
            .map(|&d| Hyperparams { rf_depth: d, ..base.clone() })
            .collect();
        let (best, table) = select_by_validation(
            ModelKind::RandomForest,
            &candidates,
            (&train_x, &train_y),
            (&val_x, &val_y),
            SelectionRule::GapPenalized { penalty: 0.5 },
        )?;
        rf_grid = table;
        best.meta.hyperparams
    } else {
        base.clone()
    };

    let large_k = cfg.knn_large_k.unwrap_or_else(|| heuristic_k(train_x.len()));
    let plans = vec![
        Plan {
            name: "RF".into(),
            slug: "rf".into(),
            baseline: Some("RF"),
            kind: ModelKind::RandomForest,
            hp: rf_hp,
        },
        Plan {
            name: "SVM".into(),
            slug: "svm".into(),
            baseline: Some("SVM"),
            kind: ModelKind::RbfSvm,
            hp: base.clone(),
        },
        Plan {
            name: "SVM (linear)".into(),
            slug: "svm-linear".into(),
            baseline: Some("SVM (linear)"),
            kind: ModelKind::LinearSvm,
            hp: base.clone(),
        },
        Plan {
            name: "NN".into(),
            slug: "nn".into(),
            baseline: Some("NN"),
            kind: ModelKind::Mlp,
            hp: base.clone(),
        },
        Plan {
            name: format!("KNN (k={})", base.knn_k),
            slug: format!("knn-k{}", base.knn_k),
            baseline: Some("KNN (k=4)"),
            kind: ModelKind::Knn,
            hp: base.clone(),
        },
        Plan {
            name: format!("KNN (k={large_k})"),
            slug: format!("knn-k{large_k}"),
            baseline: Some("KNN (k=57)"),
            kind: ModelKind::Knn,
            hp: Hyperparams { knn_k: large_k, ..base.clone() },
        },
    ];

    let opts = EvalOptions {
        exclude_artifacts: cfg.exclude_artifacts,
    };
    let mut models = Vec::new();
    for plan in plans {
        log::info!("training {}", plan.name);
        audit.record(format!("train {}", plan.slug), StageKind::Fit, train.role);
        let model = fit(plan.kind, &train_x, &train_y, &plan.hp)?;
        audit.record(format!("evaluate {}", plan.slug), StageKind::Evaluate, validation.role);
        let val = evaluate_pipeline(&validation, &law, &model, opts)?.report;
        audit.record(format!("evaluate {}", plan.slug), StageKind::Evaluate, test.role);
        let tst = evaluate_pipeline(&test, &law, &model, opts)?.report;
        models.push(ModelOutcome {
            name: plan.name,
            slug: plan.slug,
            baseline: plan.baseline,
            model,
            validation: val,
            test: tst,
        });
    }
    audit.check()?;

    let rows: Vec<ReportRow> = models
        .iter()
        .map(|m| ReportRow {
            method: m.name.clone(),
            baseline: m.baseline,
            validation: Some(m.validation.clone()),
            test: Some(m.test.clone()),
        })
        .collect();
    let comparison = compare_report(&rows);
    Ok(ReproduceOutcome {
        law,
        scan,
        models,
        rf_grid,
        audit,
        comparison,
        train,
        validation,
        test,
    })
}

/// Per class and feature index: mean, standard deviation and mean |ξ|.
pub fn xi_distribution_csv(corpora: &[&Corpus], law: &LinearLaw) -> Result<String> {
    let mut out = String::from("role,label,index,mean,std,mean_abs\n");
    for corpus in corpora {
        let (x, y) = corpus_features(corpus, law)?;
        for label in [Label::Normal, Label::Ectopic] {
            let rows: Vec<&Vec<f64>> = x.iter().zip(&y).filter(|(_, l)| **l == label).map(|(r, _)| r).collect();
            if rows.is_empty() {
                continue;
            }
            let n = rows.len() as f64;
            for i in 0..rows[0].len() {
                let mean = rows.iter().map(|r| r[i]).sum::<f64>() / n;
                let var = rows.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / n;
                let mean_abs = rows.iter().map(|r| r[i].abs()).sum::<f64>() / n;
                out.push_str(&format!(
                    "{},{},{i},{},{},{}\n",
                    corpus.role.name(),
                    label.name(),
                    format_real(mean),
                    format_real(var.sqrt()),
                    format_real(mean_abs)
                ));
            }
        }
    }
    Ok(out)
}

pub fn law_coefficients_csv(law: &LinearLaw) -> String {
    let mut out = String::from("index,coefficient\n");
    for (i, w) in law.coefficients.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", format_real(*w)));
    }
    out
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(|e| LltError::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes laws, models, metrics, comparison tables, plot CSVs and the audit
/// log under `out_dir`; returns the written paths.
pub fn write_outputs(outcome: &ReproduceOutcome, cfg: &RunConfig, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    let models_dir = dir.join("models");
    fs::create_dir_all(&models_dir).map_err(|e| LltError::io(&models_dir, e))?;
    let header = cfg.comment_block();
    let mut written = Vec::new();

    write(dir.join("config.txt"), &cfg.render(), &mut written)?;
    let law_path = dir.join("law_normal.law");
    save_law(&outcome.law, &law_path)?;
    written.push(law_path);
    for m in &outcome.models {
        let path = models_dir.join(format!("{}.model", m.slug));
        m.model.save(&path)?;
        written.push(path);
    }

    let mut metrics = header.clone();
    metrics.push_str(metrics_csv_header());
    metrics.push('\n');
    for m in &outcome.models {
        for r in [&m.validation, &m.test] {
            metrics.push_str(&metrics_csv_row(&m.name, r));
            metrics.push('\n');
        }
    }
    write(dir.join("metrics.csv"), &metrics, &mut written)?;

    let md = format!(
        "# LLT classification results\n\n{}\n## Run configuration\n\n```\n{}```\n",
        outcome.comparison.markdown,
        cfg.render()
    );
    write(dir.join("comparison.md"), &md, &mut written)?;
    write(dir.join("comparison.csv"), &format!("{header}{}", outcome.comparison.csv), &mut written)?;
    write(dir.join("scan.csv"), &format!("{header}{}", render_scan_csv(&outcome.scan)), &mut written)?;
    write(dir.join("law_coefficients.csv"), &law_coefficients_csv(&outcome.law), &mut written)?;
    write(
        dir.join("xi_distribution.csv"),
        &xi_distribution_csv(&[&outcome.train, &outcome.validation, &outcome.test], &outcome.law)?,
        &mut written,
    )?;
    write(dir.join("audit.csv"), &format!("{header}{}", outcome.audit.render()), &mut written)?;
    if !outcome.rf_grid.is_empty() {
        let mut grid = format!("{header}rf_depth,train_acc,val_acc,score\n");
        for g in &outcome.rf_grid {
            grid.push_str(&format!(
                "{},{},{},{}\n",
                g.hyperparams.rf_depth,
                format_real(g.train_accuracy),
                format_real(g.validation_accuracy),
                format_real(g.score)
            ));
        }
        write(dir.join("rf_selection.csv"), &grid, &mut written)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn audit_rejects_test_inputs() {
        let mut log = AuditLog::default();
        log.record("fit-law Normal", StageKind::Fit, Role::Train);
        log.record("evaluate svm", StageKind::Evaluate, Role::Test);
        assert!(log.check().is_ok());
        log.record("select k", StageKind::Select, Role::Test);
        assert!(matches!(log.check(), Err(LltError::Audit(_))));
    }

    #[test]
    fn test_corpus_as_training_input_fails_audit() {
        let spec = crate::synth::SynthSpec { beats_per_class: 10, ..Default::default() };
        let c = crate::synth::generate(&spec).unwrap();
        let inputs = ReproduceInputs {
            train: c.test.clone(),
            validation: Some(c.validation),
            test: c.test,
        };
        let cfg = RunConfig { scan_max: 4, ..RunConfig::default() };
        let cfg = RunConfig {
            hyperparams: Hyperparams { knn_k: 1, mlp_epochs: 10, svm_epochs: 5, ..cfg.hyperparams.clone() },
            knn_large_k: Some(1),
            ..cfg
        };
        assert!(matches!(reproduce(inputs, &cfg), Err(LltError::Audit(_))));
    }
}
