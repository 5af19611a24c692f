//! Classifiers trained on LLT features.
//!
//! Every fit is a pure function of (features, labels, hyperparameters incl.
//! seed). Models persist in the same text container as laws, with a JSON
//! payload specific to the model kind.

mod forest;
mod knn;
mod linear_svm;
pub mod mlp;
pub mod rbf_svm;
mod scaler;
mod selection;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset_io::{ArtifactHeader, Label};
use crate::error::{LltError, Result};

pub use forest::{ForestModel, Node, Tree};
pub use knn::{chebyshev, euclidean, heuristic_k, KnnModel};
pub use linear_svm::LinearSvmModel;
pub use mlp::MlpModel;
pub use rbf_svm::RbfSvmModel;
pub use scaler::FeatureScaler;
pub use selection::{select_by_validation, GridEntry, SelectionRule};

pub const MODEL_VERSION: &str = "llt-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Knn,
    LinearSvm,
    RbfSvm,
    RandomForest,
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Knn => "knn",
            ModelKind::LinearSvm => "svm-linear",
            ModelKind::RbfSvm => "svm",
            ModelKind::RandomForest => "rf",
            ModelKind::Mlp => "mlp",
        }
    }

    pub fn from_name(name: &str) -> Option<ModelKind> {
        match name {
            "knn" => Some(ModelKind::Knn),
            "svm-linear" => Some(ModelKind::LinearSvm),
            "svm" => Some(ModelKind::RbfSvm),
            "rf" => Some(ModelKind::RandomForest),
            "mlp" => Some(ModelKind::Mlp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Chebyshev,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub knn_k: usize,
    pub knn_metric: Metric,
    /// Standardize features (fit on train) before measuring distances.
    pub knn_standardize: bool,
    pub rf_estimators: usize,
    pub rf_depth: usize,
    pub rf_bootstrap: bool,
    pub svm_c: f64,
    /// `None` selects `1 / (feature_dim · var(features))`.
    pub rbf_gamma: Option<f64>,
    pub svm_epochs: usize,
    pub smo_tol: f64,
    pub smo_max_iter: usize,
    pub mlp_hidden: usize,
    pub mlp_epochs: usize,
    pub mlp_lr: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            knn_k: 4,
            knn_metric: Metric::Chebyshev,
            knn_standardize: false,
            rf_estimators: 10,
            rf_depth: 6,
            rf_bootstrap: true,
            svm_c: 1.0,
            rbf_gamma: None,
            svm_epochs: 200,
            smo_tol: 1e-3,
            smo_max_iter: 1_000_000,
            mlp_hidden: 8,
            mlp_epochs: 2000,
            mlp_lr: 0.5,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("knn_k", self.knn_k),
            ("rf_estimators", self.rf_estimators),
            ("rf_depth", self.rf_depth),
            ("svm_epochs", self.svm_epochs),
            ("smo_max_iter", self.smo_max_iter),
            ("mlp_hidden", self.mlp_hidden),
            ("mlp_epochs", self.mlp_epochs),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(LltError::param(format!("{name} must be positive")));
            }
        }
        if !(self.mlp_lr > 0.0) {
            return Err(LltError::param("mlp_lr must be positive"));
        }
        if !(self.svm_c > 0.0) {
            return Err(LltError::param("svm_c must be positive"));
        }
        if let Some(g) = self.rbf_gamma {
            if !(g > 0.0) {
                return Err(LltError::param("rbf_gamma must be positive"));
            }
        }
        if !(self.smo_tol > 0.0) {
            return Err(LltError::param("smo_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub train_size: usize,
    pub class_counts: Vec<(Label, usize)>,
    pub hyperparams: Hyperparams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    Knn(KnnModel),
    LinearSvm(LinearSvmModel),
    RbfSvm(RbfSvmModel),
    RandomForest(ForestModel),
    Mlp(MlpModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub feature_dim: usize,
    pub params: ModelParams,
    pub meta: TrainMeta,
}

/// Checks shapes and finiteness; returns the feature dimension.
pub(crate) fn check_training_set(features: &[Vec<f64>], labels: &[Label]) -> Result<usize> {
    if features.len() != labels.len() {
        return Err(LltError::LengthMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    let dim = features
        .first()
        .map(|f| f.len())
        .ok_or_else(|| LltError::param("empty training set"))?;
    if dim == 0 {
        return Err(LltError::param("feature dimension must be positive"));
    }
    for f in features {
        if f.len() != dim {
            return Err(LltError::DimensionMismatch {
                expected: dim,
                actual: f.len(),
            });
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(LltError::NonFinite("features"));
        }
    }
    Ok(dim)
}

/// The two classes of a binary problem, in label order.
pub(crate) fn binary_classes(labels: &[Label]) -> Result<[Label; 2]> {
    let mut classes: Vec<Label> = labels.to_vec();
    classes.sort();
    classes.dedup();
    match classes.as_slice() {
        [a, b] => Ok([*a, *b]),
        [_] | [] => Err(LltError::SingleClass),
        _ => Err(LltError::param("only binary problems are supported")),
    }
}

fn class_counts(labels: &[Label]) -> Vec<(Label, usize)> {
    let mut counts: Vec<(Label, usize)> = Vec::new();
    for &l in labels {
        match counts.iter_mut().find(|(c, _)| *c == l) {
            Some(entry) => entry.1 += 1,
            None => counts.push((l, 1)),
        }
    }
    counts.sort();
    counts
}

pub fn fit(kind: ModelKind, features: &[Vec<f64>], labels: &[Label], hp: &Hyperparams) -> Result<TrainedModel> {
    hp.validate()?;
    let feature_dim = check_training_set(features, labels)?;
    let params = match kind {
        ModelKind::Knn => ModelParams::Knn(KnnModel::fit(features, labels, hp)?),
        ModelKind::LinearSvm => ModelParams::LinearSvm(LinearSvmModel::fit(features, labels, hp)?),
        ModelKind::RbfSvm => ModelParams::RbfSvm(RbfSvmModel::fit(features, labels, hp)?),
        ModelKind::RandomForest => ModelParams::RandomForest(ForestModel::fit(features, labels, hp)?),
        ModelKind::Mlp => ModelParams::Mlp(MlpModel::fit(features, labels, hp)?),
    };
    Ok(TrainedModel {
        kind,
        feature_dim,
        params,
        meta: TrainMeta {
            train_size: features.len(),
            class_counts: class_counts(labels),
            hyperparams: hp.clone(),
        },
    })
}

pub fn knn_fit(features: &[Vec<f64>], labels: &[Label], hp: &Hyperparams) -> Result<TrainedModel> {
    fit(ModelKind::Knn, features, labels, hp)
}

pub fn linear_svm_fit(features: &[Vec<f64>], labels: &[Label], hp: &Hyperparams) -> Result<TrainedModel> {
    fit(ModelKind::LinearSvm, features, labels, hp)
}

pub fn rbf_svm_fit(features: &[Vec<f64>], labels: &[Label], hp: &Hyperparams) -> Result<TrainedModel> {
    fit(ModelKind::RbfSvm, features, labels, hp)
}

pub fn rf_fit(features: &[Vec<f64>], labels: &[Label], hp: &Hyperparams) -> Result<TrainedModel> {
    fit(ModelKind::RandomForest, features, labels, hp)
}

pub fn mlp_fit(features: &[Vec<f64>], labels: &[Label], hp: &Hyperparams) -> Result<TrainedModel> {
    fit(ModelKind::Mlp, features, labels, hp)
}

impl TrainedModel {
    pub fn predict(&self, fv: &[f64]) -> Result<Label> {
        if fv.len() != self.feature_dim {
            return Err(LltError::DimensionMismatch {
                expected: self.feature_dim,
                actual: fv.len(),
            });
        }
        Ok(match &self.params {
            ModelParams::Knn(m) => m.predict(fv),
            ModelParams::LinearSvm(m) => m.predict(fv),
            ModelParams::RbfSvm(m) => m.predict(fv),
            ModelParams::RandomForest(m) => m.predict(fv),
            ModelParams::Mlp(m) => m.predict(fv),
        })
    }

    pub fn predict_batch(&self, features: &[Vec<f64>]) -> Result<Vec<Label>> {
        use rayon::prelude::*;
        features.par_iter().map(|f| self.predict(f)).collect()
    }

    pub fn render(&self) -> Result<String> {
        let hp = serde_json::to_string(&self.meta.hyperparams).map_err(json_err)?;
        let counts: Vec<String> = self
            .meta
            .class_counts
            .iter()
            .map(|(l, n)| format!("{}:{n}", l.name()))
            .collect();
        let payload = serde_json::to_string(&self.params).map_err(json_err)? + "\n";
        let fields = vec![
            ("kind".to_string(), self.kind.name().to_string()),
            ("feature_dim".to_string(), self.feature_dim.to_string()),
            ("train_size".to_string(), self.meta.train_size.to_string()),
            ("class_counts".to_string(), counts.join(",")),
            ("hyperparams".to_string(), hp),
        ];
        Ok(ArtifactHeader::new(MODEL_VERSION, fields, payload).render())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let header = ArtifactHeader::parse(text, MODEL_VERSION)?;
        header.verify_checksum()?;
        let kind_name = header.get("kind")?;
        let kind = ModelKind::from_name(kind_name)
            .ok_or_else(|| LltError::Format(format!("unknown model kind {kind_name:?}")))?;
        let feature_dim: usize = header.get_parsed("feature_dim")?;
        let train_size: usize = header.get_parsed("train_size")?;
        let mut class_counts = Vec::new();
        for item in header.get("class_counts")?.split(',').filter(|s| !s.is_empty()) {
            let (name, n) = item
                .split_once(':')
                .ok_or_else(|| LltError::Format(format!("bad class count {item:?}")))?;
            let label = Label::from_name(name).ok_or_else(|| LltError::Format(format!("unknown class {name:?}")))?;
            let n = n.parse().map_err(|_| LltError::Format(format!("bad class count {item:?}")))?;
            class_counts.push((label, n));
        }
        let hyperparams: Hyperparams = serde_json::from_str(header.get("hyperparams")?).map_err(json_err)?;
        let params: ModelParams = serde_json::from_str(header.payload.trim_end()).map_err(json_err)?;
        let payload_kind = match &params {
            ModelParams::Knn(_) => ModelKind::Knn,
            ModelParams::LinearSvm(_) => ModelKind::LinearSvm,
            ModelParams::RbfSvm(_) => ModelKind::RbfSvm,
            ModelParams::RandomForest(_) => ModelKind::RandomForest,
            ModelParams::Mlp(_) => ModelKind::Mlp,
        };
        if payload_kind != kind {
            return Err(LltError::Format(format!(
                "header kind {} does not match payload {}",
                kind.name(),
                payload_kind.name()
            )));
        }
        Ok(TrainedModel {
            kind,
            feature_dim,
            params,
            meta: TrainMeta {
                train_size,
                class_counts,
                hyperparams,
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.render()?).map_err(|e| LltError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| LltError::io(path, e))?;
        Self::parse(&text)
    }
}

fn json_err(e: serde_json::Error) -> LltError {
    LltError::Format(format!("model payload: {e}"))
}
