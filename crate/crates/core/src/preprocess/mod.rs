//! Raw signal to standardized, peak-centered beats.
//!
//! Chain: band-pass (Butterworth high-pass then low-pass, run forward and
//! backward) -> threshold/refractory peak search -> fixed window around each
//! peak -> zero mean, unit max-abs. Records whose peak search fails become
//! artifact beats instead of being dropped.

pub mod filter;

use serde::{Deserialize, Serialize};

use crate::dataset_io::{Beat, Label};
use crate::error::{LltError, Result};
use filter::{FilterKind, SosFilter};

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub values: Vec<f64>,
    pub fs: f64,
}

impl Signal {
    pub fn new(values: Vec<f64>, fs: f64) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(LltError::param(format!("sampling rate must be positive, got {fs}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LltError::NonFinite("signal values"));
        }
        Ok(Signal { values, fs })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub lowpass_hz: f64,
    pub highpass_hz: f64,
    /// Order of each of the two Butterworth filters.
    pub filter_order: usize,
    pub window_len: usize,
    /// Sampling rate assumed when a record does not carry its own (MIT-BIH uses 360 Hz).
    pub fs: f64,
    pub refractory_ms: f64,
    /// Fraction of the global maximum a local maximum must exceed.
    pub peak_threshold: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            lowpass_hz: 20.0,
            highpass_hz: 0.5,
            filter_order: 4,
            window_len: 30,
            fs: 360.0,
            refractory_ms: 200.0,
            peak_threshold: 0.5,
        }
    }
}

impl PreprocessConfig {
    pub fn refractory_samples(&self, fs: f64) -> usize {
        ((self.refractory_ms * fs / 1000.0).round() as usize).max(1)
    }

    fn validate(&self, fs: f64) -> Result<()> {
        if !(0.0 < self.highpass_hz && self.highpass_hz < self.lowpass_hz && self.lowpass_hz < fs / 2.0) {
            return Err(LltError::param(format!(
                "need 0 < highpass ({}) < lowpass ({}) < Nyquist ({})",
                self.highpass_hz,
                self.lowpass_hz,
                fs / 2.0
            )));
        }
        if !(self.peak_threshold > 0.0 && self.peak_threshold < 1.0) {
            return Err(LltError::param(format!(
                "peak_threshold must be in (0, 1), got {}",
                self.peak_threshold
            )));
        }
        if self.window_len < 2 {
            return Err(LltError::param("window_len must be at least 2"));
        }
        if !(self.refractory_ms > 0.0) {
            return Err(LltError::param("refractory period must be positive"));
        }
        Ok(())
    }

    pub fn bandpass_filter(&self, fs: f64) -> Result<SosFilter> {
        self.validate(fs)?;
        let hp = SosFilter::butterworth(FilterKind::HighPass, self.filter_order, self.highpass_hz, fs)?;
        let lp = SosFilter::butterworth(FilterKind::LowPass, self.filter_order, self.lowpass_hz, fs)?;
        Ok(hp.then(lp))
    }
}

/// How many peaks a record is expected to contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeakExpectation {
    /// One labeled beat per record; zero or several peaks make the record an artifact.
    SingleBeat,
    /// Every detected peak yields a beat; no peak yields one artifact.
    MultiBeat,
}

pub fn bandpass(signal: &Signal, cfg: &PreprocessConfig) -> Result<Signal> {
    let filt = cfg.bandpass_filter(signal.fs)?;
    let min_len = 6 * cfg.filter_order;
    if signal.len() <= min_len {
        return Err(LltError::param(format!(
            "signal of {} samples is too short to filter (need more than {min_len})",
            signal.len()
        )));
    }
    Ok(Signal {
        values: filt.filtfilt(&signal.values),
        fs: signal.fs,
    })
}

/// Zero mean, then divide by the largest absolute value.
pub fn standardize(window: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if window.is_empty() || !(hi > lo) {
        return Err(LltError::DegenerateWindow);
    }
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    let centered: Vec<f64> = window.iter().map(|v| v - mean).collect();
    let scale = centered.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) {
        return Err(LltError::DegenerateWindow);
    }
    Ok(centered.into_iter().map(|v| v / scale).collect())
}

/// Local maxima above `peak_threshold * max`, at least the refractory period
/// apart. Conflicts keep the taller peak (earlier index on ties).
pub fn detect_peaks(signal: &Signal, cfg: &PreprocessConfig) -> Vec<usize> {
    let x = &signal.values;
    let n = x.len();
    let global_max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if n < 3 || !(global_max > 0.0) {
        return Vec::new();
    }
    let threshold = cfg.peak_threshold * global_max;
    let refractory = cfg.refractory_samples(signal.fs);

    let mut candidates: Vec<usize> = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i] > x[i - 1] && x[i] > threshold {
            // walk across a plateau; it counts as one peak at its first index
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                candidates.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }

    candidates.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut accepted: Vec<usize> = Vec::new();
    for c in candidates {
        if accepted.iter().all(|&p| p.abs_diff(c) >= refractory) {
            accepted.push(c);
        }
    }
    accepted.sort_unstable();
    accepted
}

/// Cuts `window_len` samples with the peak at offset `window_len / 2` and
/// standardizes them. Out-of-bounds or flat windows come back as artifacts.
pub fn extract_beat(signal: &Signal, peak: usize, window_len: usize) -> Beat {
    let half = window_len / 2;
    let artifact = || Beat::artifact(window_len, Label::Unlabeled, "");
    if peak < half || peak - half + window_len > signal.len() {
        return artifact();
    }
    let start = peak - half;
    match standardize(&signal.values[start..start + window_len]) {
        Ok(samples) => Beat::new(samples, Label::Unlabeled),
        Err(_) => artifact(),
    }
}

pub fn preprocess_record(
    signal: &Signal,
    cfg: &PreprocessConfig,
    expectation: PeakExpectation,
) -> Result<Vec<Beat>> {
    cfg.validate(signal.fs)?;
    let artifact = || vec![Beat::artifact(cfg.window_len, Label::Unlabeled, "")];
    if signal.len() <= 6 * cfg.filter_order {
        return Ok(artifact());
    }
    let filtered = bandpass(signal, cfg)?;
    let peaks = detect_peaks(&filtered, cfg);
    let beats = match (expectation, peaks.len()) {
        (_, 0) => artifact(),
        (PeakExpectation::SingleBeat, 1) => vec![extract_beat(&filtered, peaks[0], cfg.window_len)],
        (PeakExpectation::SingleBeat, _) => artifact(),
        (PeakExpectation::MultiBeat, _) => peaks
            .iter()
            .map(|&p| extract_beat(&filtered, p, cfg.window_len))
            .collect(),
    };
    Ok(beats)
}
