//! Resolved run configuration, stored as a flat `key=value` text file.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::classifiers::{Hyperparams, Metric};
use crate::dataset_io::SplitSpec;
use crate::error::{LltError, Result};
use crate::preprocess::{PeakExpectation, PreprocessConfig};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "LLT_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preprocess: PreprocessConfig,
    pub peak_expectation: PeakExpectation,
    pub law_len: usize,
    pub allow_degenerate: bool,
    pub scan_min: usize,
    pub scan_max: usize,
    pub split: SplitSpec,
    pub hyperparams: Hyperparams,
    /// `None` uses `round(√N)` over the training features.
    pub knn_large_k: Option<usize>,
    /// Choose the forest depth on the validation set instead of using `rf_depth`.
    pub rf_select: bool,
    pub exclude_artifacts: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preprocess: PreprocessConfig::default(),
            peak_expectation: PeakExpectation::SingleBeat,
            law_len: 12,
            allow_degenerate: false,
            scan_min: 2,
            scan_max: 20,
            split: SplitSpec::default(),
            hyperparams: Hyperparams::default(),
            knn_large_k: None,
            rf_select: false,
            exclude_artifacts: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| LltError::param(format!("bad value for `{key}`: {value:?}")))
}

fn auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.trim() == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn show_auto<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_else(|| "auto".into())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.preprocess;
        let h = &mut self.hyperparams;
        match key {
            "lowpass_hz" => p.lowpass_hz = parse(key, value)?,
            "highpass_hz" => p.highpass_hz = parse(key, value)?,
            "filter_order" => p.filter_order = parse(key, value)?,
            "window_len" => p.window_len = parse(key, value)?,
            "fs" => p.fs = parse(key, value)?,
            "refractory_ms" => p.refractory_ms = parse(key, value)?,
            "peak_threshold" => p.peak_threshold = parse(key, value)?,
            "peak_expectation" => {
                self.peak_expectation = match value.trim() {
                    "single" => PeakExpectation::SingleBeat,
                    "multi" => PeakExpectation::MultiBeat,
                    _ => return Err(LltError::param(format!("peak_expectation must be single or multi, got {value:?}"))),
                }
            }
            "law_len" => self.law_len = parse(key, value)?,
            "allow_degenerate" => self.allow_degenerate = parse(key, value)?,
            "scan_min" => self.scan_min = parse(key, value)?,
            "scan_max" => self.scan_max = parse(key, value)?,
            "train_fraction" => self.split.train_fraction = parse(key, value)?,
            "split_seed" => self.split.seed = parse(key, value)?,
            "stratified" => self.split.stratified = parse(key, value)?,
            "knn_k" => h.knn_k = parse(key, value)?,
            "knn_metric" => {
                h.knn_metric = match value.trim() {
                    "chebyshev" => Metric::Chebyshev,
                    "euclidean" => Metric::Euclidean,
                    _ => return Err(LltError::param(format!("knn_metric must be chebyshev or euclidean, got {value:?}"))),
                }
            }
            "knn_standardize" => h.knn_standardize = parse(key, value)?,
            "knn_large_k" => self.knn_large_k = auto(key, value)?,
            "rf_estimators" => h.rf_estimators = parse(key, value)?,
            "rf_depth" => h.rf_depth = parse(key, value)?,
            "rf_bootstrap" => h.rf_bootstrap = parse(key, value)?,
            "rf_select" => self.rf_select = parse(key, value)?,
            "svm_c" => h.svm_c = parse(key, value)?,
            "rbf_gamma" => h.rbf_gamma = auto(key, value)?,
            "svm_epochs" => h.svm_epochs = parse(key, value)?,
            "smo_tol" => h.smo_tol = parse(key, value)?,
            "smo_max_iter" => h.smo_max_iter = parse(key, value)?,
            "mlp_hidden" => h.mlp_hidden = parse(key, value)?,
            "mlp_epochs" => h.mlp_epochs = parse(key, value)?,
            "mlp_lr" => h.mlp_lr = parse(key, value)?,
            "seed" => h.seed = parse(key, value)?,
            "exclude_artifacts" => self.exclude_artifacts = parse(key, value)?,
            _ => return Err(LltError::param(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.preprocess;
        let h = &self.hyperparams;
        vec![
            ("lowpass_hz", p.lowpass_hz.to_string()),
            ("highpass_hz", p.highpass_hz.to_string()),
            ("filter_order", p.filter_order.to_string()),
            ("window_len", p.window_len.to_string()),
            ("fs", p.fs.to_string()),
            ("refractory_ms", p.refractory_ms.to_string()),
            ("peak_threshold", p.peak_threshold.to_string()),
            (
                "peak_expectation",
                match self.peak_expectation {
                    PeakExpectation::SingleBeat => "single",
                    PeakExpectation::MultiBeat => "multi",
                }
                .into(),
            ),
            ("law_len", self.law_len.to_string()),
            ("allow_degenerate", self.allow_degenerate.to_string()),
            ("scan_min", self.scan_min.to_string()),
            ("scan_max", self.scan_max.to_string()),
            ("train_fraction", self.split.train_fraction.to_string()),
            ("split_seed", self.split.seed.to_string()),
            ("stratified", self.split.stratified.to_string()),
            ("knn_k", h.knn_k.to_string()),
            (
                "knn_metric",
                match h.knn_metric {
                    Metric::Chebyshev => "chebyshev",
                    Metric::Euclidean => "euclidean",
                }
                .into(),
            ),
            ("knn_standardize", h.knn_standardize.to_string()),
            ("knn_large_k", show_auto(&self.knn_large_k)),
            ("rf_estimators", h.rf_estimators.to_string()),
            ("rf_depth", h.rf_depth.to_string()),
            ("rf_bootstrap", h.rf_bootstrap.to_string()),
            ("rf_select", self.rf_select.to_string()),
            ("svm_c", h.svm_c.to_string()),
            ("rbf_gamma", show_auto(&h.rbf_gamma)),
            ("svm_epochs", h.svm_epochs.to_string()),
            ("smo_tol", h.smo_tol.to_string()),
            ("smo_max_iter", h.smo_max_iter.to_string()),
            ("mlp_hidden", h.mlp_hidden.to_string()),
            ("mlp_epochs", h.mlp_epochs.to_string()),
            ("mlp_lr", h.mlp_lr.to_string()),
            ("seed", h.seed.to_string()),
            ("exclude_artifacts", self.exclude_artifacts.to_string()),
        ]
    }

    pub fn render(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Applies `key=value` lines on top of `self`. Blank lines and `#`
    /// comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| LltError::Parse {
                row: idx + 1,
                column: 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| LltError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.hyperparams.validate()?;
        if self.law_len < 2 || self.law_len > self.preprocess.window_len {
            return Err(LltError::param(format!(
                "law_len {} must lie in [2, {}]",
                self.law_len, self.preprocess.window_len
            )));
        }
        if self.scan_min < 2 || self.scan_min > self.scan_max {
            return Err(LltError::param("scan range must satisfy 2 ≤ scan_min ≤ scan_max"));
        }
        if !(self.split.train_fraction > 0.0 && self.split.train_fraction <= 1.0) {
            return Err(LltError::param("train_fraction must lie in (0, 1]"));
        }
        if self.knn_large_k == Some(0) {
            return Err(LltError::param("knn_large_k must be positive"));
        }
        Ok(())
    }

    /// The configuration as `# key=value` comment lines for report headers.
    pub fn comment_block(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
    }
}
