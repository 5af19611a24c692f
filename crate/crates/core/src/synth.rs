//! Synthetic two-class corpora with exactly known linear laws.
//!
//! Class A beats are labeled Normal and class B beats Ectopic. Each beat is
//! one realization of a linear recurrence (a sinusoid or an autoregressive
//! process) with a random start, plus optional white noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset_io::{format_real, Beat, Corpus, Label, Role};
use crate::error::{LltError, Result};
use crate::linear_law::{canonical_sign, LinearLaw};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Recurrence {
    /// `y_k = 2 cos ω · y_{k−1} − y_{k−2}`.
    Sinusoid { omega: f64 },
    /// `y_k = Σ a_i · y_{k−i}`.
    Autoregressive { coeffs: Vec<f64> },
}

impl Recurrence {
    pub fn order(&self) -> usize {
        match self {
            Recurrence::Sinusoid { .. } => 2,
            Recurrence::Autoregressive { coeffs } => coeffs.len(),
        }
    }

    /// Coefficients `c` with `c · [y_k, y_{k−1}, …] = 0`, leading entry 1.
    pub fn annihilator(&self) -> Vec<f64> {
        match self {
            Recurrence::Sinusoid { omega } => vec![1.0, -2.0 * omega.cos(), 1.0],
            Recurrence::Autoregressive { coeffs } => {
                std::iter::once(1.0).chain(coeffs.iter().map(|a| -a)).collect()
            }
        }
    }

    fn validate(&self, beat_len: usize) -> Result<()> {
        match self {
            Recurrence::Sinusoid { omega } => {
                if !(*omega > 0.0 && *omega < std::f64::consts::PI) {
                    return Err(LltError::param(format!("omega {omega} must lie in (0, π)")));
                }
            }
            Recurrence::Autoregressive { coeffs } => {
                if coeffs.is_empty() || coeffs.len() >= beat_len {
                    return Err(LltError::param("AR order must be in [1, L)"));
                }
                if coeffs.iter().any(|a| !a.is_finite()) {
                    return Err(LltError::NonFinite("AR coefficients"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub class_a: Recurrence,
    pub class_b: Recurrence,
    pub beats_per_class: usize,
    pub beat_len: usize,
    pub noise_sigma: f64,
    /// Sinusoid phases are drawn uniformly from `[−phase_spread, phase_spread]`.
    pub phase_spread: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            class_a: Recurrence::Sinusoid { omega: 0.3 },
            class_b: Recurrence::Sinusoid { omega: 0.9 },
            beats_per_class: 200,
            beat_len: 30,
            noise_sigma: 0.01,
            phase_spread: std::f64::consts::FRAC_PI_4,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.beats_per_class < 4 {
            return Err(LltError::param("beats_per_class must be at least 4"));
        }
        if self.beat_len < 3 {
            return Err(LltError::param("beat length must be at least 3"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(LltError::param("noise_sigma must be finite and non-negative"));
        }
        if !(self.phase_spread >= 0.0 && self.phase_spread.is_finite()) {
            return Err(LltError::param("phase_spread must be finite and non-negative"));
        }
        self.class_a.validate(self.beat_len)?;
        self.class_b.validate(self.beat_len)
    }

    /// Beats per class in (train, validation, test): 40/30/30.
    pub fn role_sizes(&self) -> [usize; 3] {
        let n = self.beats_per_class;
        let train = n * 4 / 10;
        let val = n * 3 / 10;
        [train, val, n - train - val]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub train: Corpus,
    pub validation: Corpus,
    pub test: Corpus,
}

fn noiseless_beat(rec: &Recurrence, len: usize, phase_spread: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match rec {
        Recurrence::Sinusoid { omega } => {
            let amp = rng.gen_range(0.5..1.5);
            let phase = if phase_spread > 0.0 {
                rng.gen_range(-phase_spread..=phase_spread)
            } else {
                0.0
            };
            (0..len).map(|k| amp * (omega * k as f64 + phase).cos()).collect()
        }
        Recurrence::Autoregressive { coeffs } => {
            let p = coeffs.len();
            let mut y: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for k in p..len {
                let next = coeffs.iter().enumerate().map(|(i, a)| a * y[k - 1 - i]).sum();
                y.push(next);
            }
            y
        }
    }
}

fn class_beats(spec: &SynthSpec, role: Role, class: usize, count: usize) -> Vec<Beat> {
    let (rec, label) = if class == 0 {
        (&spec.class_a, Label::Normal)
    } else {
        (&spec.class_b, Label::Ectopic)
    };
    let role_idx = match role {
        Role::Train => 0,
        Role::Validation => 1,
        Role::Test => 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(role_idx * 2 + class as u64);
    let noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
    (0..count)
        .map(|i| {
            let mut samples = noiseless_beat(rec, spec.beat_len, spec.phase_spread, &mut rng);
            if spec.noise_sigma > 0.0 {
                for s in samples.iter_mut() {
                    *s += noise.sample(&mut rng);
                }
            }
            let mut beat = Beat::new(samples, label);
            beat.source_id = format!("synth:{}:{}:{i}", role.name(), label.token());
            beat
        })
        .collect()
}

/// Generates the three role corpora. Each (role, class) pair draws from its
/// own random stream, so the roles never share realizations.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let sizes = spec.role_sizes();
    let build = |role: Role, n: usize| -> Result<Corpus> {
        let mut beats = class_beats(spec, role, 0, n);
        beats.extend(class_beats(spec, role, 1, n));
        Corpus::new(beats, spec.beat_len, role)
    };
    Ok(SynthCorpus {
        train: build(Role::Train, sizes[0])?,
        validation: build(Role::Validation, sizes[1])?,
        test: build(Role::Test, sizes[2])?,
    })
}

/// The recurrence's annihilating coefficients, zero-padded to `width` and
/// normalized.
pub fn exact_law(rec: &Recurrence, width: usize, class_tag: Label) -> Result<LinearLaw> {
    let c = rec.annihilator();
    if c.len() > width {
        return Err(LltError::param(format!(
            "recurrence of order {} needs law length ≥ {}, got {width}",
            rec.order(),
            c.len()
        )));
    }
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut w: Vec<f64> = c.iter().map(|v| v / norm).collect();
    w.resize(width, 0.0);
    canonical_sign(&mut w);
    Ok(LinearLaw {
        coefficients: w,
        lambda: 0.0,
        lambda_next: None,
        class_tag,
        train_rows: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecordSpec {
    pub records_per_class: usize,
    /// Samples per record.
    pub record_len: usize,
    pub fs: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for RawRecordSpec {
    fn default() -> Self {
        RawRecordSpec {
            records_per_class: 20,
            record_len: 432,
            fs: 360.0,
            noise_sigma: 0.01,
            seed: 0,
        }
    }
}

/// Single-beat ECG-like records with baseline wander: narrow QRS spikes for
/// Normal, wide spikes followed by an inverted wave for Ectopic.
pub fn raw_records(spec: &RawRecordSpec) -> Result<Vec<(Label, Vec<f64>)>> {
    if spec.records_per_class == 0 || spec.record_len < 100 {
        return Err(LltError::param("raw records need at least one record of 100 samples"));
    }
    if !(spec.fs > 0.0) || !(spec.noise_sigma >= 0.0) {
        return Err(LltError::param("invalid sampling rate or noise level"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
    let n = spec.record_len;
    let mut out = Vec::with_capacity(2 * spec.records_per_class);
    for i in 0..2 * spec.records_per_class {
        let label = if i % 2 == 0 { Label::Normal } else { Label::Ectopic };
        let centre = n as f64 / 2.0 + rng.gen_range(-10.0..10.0);
        let amp = rng.gen_range(0.8..1.2);
        let drift_amp = rng.gen_range(0.0..0.3);
        let drift_phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let values = (0..n)
            .map(|k| {
                let t = k as f64;
                let drift = drift_amp * (std::f64::consts::TAU * 0.2 * t / spec.fs + drift_phase).sin();
                let beat = match label {
                    Label::Normal => amp * (-((t - centre) / 4.0).powi(2)).exp(),
                    _ => {
                        amp * (-((t - centre) / 8.0).powi(2)).exp()
                            - 0.3 * amp * (-((t - centre - 25.0) / 10.0).powi(2)).exp()
                    }
                };
                let e = if spec.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                drift + beat + e
            })
            .collect();
        out.push((label, values));
    }
    Ok(out)
}

/// Renders records in the `label;fs;v0,v1,...` raw format.
pub fn render_raw_records(records: &[(Label, Vec<f64>)], fs: f64) -> String {
    let mut out = String::new();
    for (label, values) in records {
        let vals: Vec<String> = values.iter().map(|v| format_real(*v)).collect();
        out.push_str(&format!("{};{};{}\n", label.token(), fs, vals.join(",")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless() -> SynthSpec {
        SynthSpec { noise_sigma: 0.0, ..SynthSpec::default() }
    }

    #[test]
    fn noiseless_sinusoid_satisfies_recurrence() {
        let c = generate(&noiseless()).unwrap();
        let k2 = 2.0 * 0.3f64.cos();
        for b in c.train.class_beats(Label::Normal) {
            for k in 2..b.len() {
                let r = b.samples[k] - k2 * b.samples[k - 1] + b.samples[k - 2];
                assert!(r.abs() <= 1e-12, "{r}");
            }
        }
    }

    #[test]
    fn sizes_and_labels() {
        let c = generate(&SynthSpec::default()).unwrap();
        assert_eq!(c.train.len(), 160);
        assert_eq!(c.validation.len(), 120);
        assert_eq!(c.test.len(), 120);
        assert_eq!(c.test.class_beats(Label::Ectopic).len(), 60);
        assert_eq!(c.test.role, Role::Test);
        assert_eq!(c.train.artifact_count(), 0);
    }

    #[test]
    fn roles_never_share_beats() {
        let c = generate(&SynthSpec::default()).unwrap();
        for b in &c.test.beats {
            assert!(c.train.beats.iter().all(|t| t.samples != b.samples));
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = generate(&SynthSpec::default()).unwrap();
        assert_eq!(a, generate(&SynthSpec::default()).unwrap());
        let b = generate(&SynthSpec { seed: 1, ..SynthSpec::default() }).unwrap();
        assert_ne!(a.train.beats[0].samples, b.train.beats[0].samples);
    }

    #[test]
    fn exact_law_examples() {
        let w = exact_law(&Recurrence::Sinusoid { omega: 0.3 }, 3, Label::Normal).unwrap().coefficients;
        let raw = [1.0, -2.0 * 0.3f64.cos(), 1.0];
        let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..3 {
            assert!((w[i] - raw[i] / n).abs() < 1e-15);
        }
        let ar = exact_law(&Recurrence::Autoregressive { coeffs: vec![0.9] }, 2, Label::Normal).unwrap();
        let n = (1.0f64 + 0.81).sqrt();
        assert!((ar.coefficients[0] - 1.0 / n).abs() < 1e-15);
        assert!((ar.coefficients[1] + 0.9 / n).abs() < 1e-15);
        assert_eq!(exact_law(&Recurrence::Sinusoid { omega: 0.3 }, 5, Label::Normal).unwrap().coefficients[4], 0.0);
        assert!(exact_law(&Recurrence::Sinusoid { omega: 0.3 }, 2, Label::Normal).is_err());
    }

    #[test]
    fn autoregressive_beats_follow_their_law() {
        let spec = SynthSpec {
            class_a: Recurrence::Autoregressive { coeffs: vec![1.2, -0.5] },
            noise_sigma: 0.0,
            ..SynthSpec::default()
        };
        let c = generate(&spec).unwrap();
        let law = exact_law(&spec.class_a, 4, Label::Normal).unwrap();
        for b in c.train.class_beats(Label::Normal) {
            let xi = crate::llt_features::transform(&b.samples, &law).unwrap();
            assert!(xi.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            SynthSpec { beats_per_class: 3, ..SynthSpec::default() },
            SynthSpec { class_a: Recurrence::Sinusoid { omega: 3.2 }, ..SynthSpec::default() },
            SynthSpec { noise_sigma: f64::NAN, ..SynthSpec::default() },
            SynthSpec { class_b: Recurrence::Autoregressive { coeffs: vec![0.5; 30] }, ..SynthSpec::default() },
        ];
        for s in bad {
            assert!(generate(&s).is_err());
        }
    }

    #[test]
    fn raw_records_render_and_parse() {
        let spec = RawRecordSpec { records_per_class: 3, ..RawRecordSpec::default() };
        let recs = raw_records(&spec).unwrap();
        assert_eq!(recs.len(), 6);
        let text = render_raw_records(&recs, spec.fs);
        let parsed = crate::dataset_io::parse_raw_records(&text, 360.0, "raw").unwrap();
        assert_eq!(parsed.len(), 6);
        assert_eq!(parsed[1].0, Label::Ectopic);
        assert_eq!(parsed[0].1.values, recs[0].1);
    }
}
