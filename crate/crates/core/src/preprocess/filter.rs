//! Butterworth sections and forward-backward (zero phase) filtering.

use std::f64::consts::PI;

use crate::error::{LltError, Result};

/// Direct-form II transposed biquad, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }

    /// State that makes a constant input `u` pass through without a transient.
    fn steady_state(&self, u: f64) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = (self.b[2] - self.a[2] * g) * u;
        let z1 = (self.b[1] - self.a[1] * g) * u + z2;
        [z1, z2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterKind {
    LowPass,
    HighPass,
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

impl SosFilter {
    /// Even-order Butterworth design through the bilinear transform with prewarping.
    pub fn butterworth(kind: FilterKind, order: usize, cutoff_hz: f64, fs: f64) -> Result<Self> {
        if order == 0 || order % 2 != 0 {
            return Err(LltError::param(format!("filter order must be even and positive, got {order}")));
        }
        if !(fs > 0.0) || !(cutoff_hz > 0.0) || cutoff_hz >= fs / 2.0 {
            return Err(LltError::param(format!(
                "cutoff {cutoff_hz} Hz must lie in (0, Nyquist = {} Hz)",
                fs / 2.0
            )));
        }
        let k = (PI * cutoff_hz / fs).tan();
        let sections = (0..order / 2)
            .map(|i| {
                let theta = PI * (2 * i + 1) as f64 / (2 * order) as f64;
                let q = 1.0 / (2.0 * theta.cos());
                let norm = 1.0 / (1.0 + k / q + k * k);
                let a = [1.0, 2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm];
                let b = match kind {
                    FilterKind::LowPass => {
                        let b0 = k * k * norm;
                        [b0, 2.0 * b0, b0]
                    }
                    FilterKind::HighPass => [norm, -2.0 * norm, norm],
                };
                Biquad { b, a }
            })
            .collect();
        Ok(SosFilter { sections })
    }

    pub fn then(mut self, other: SosFilter) -> Self {
        self.sections.extend(other.sections);
        self
    }

    /// Single causal pass. `x0` seeds each section's state at the steady
    /// state for a constant input of that value.
    pub fn filter(&self, x: &[f64], x0: f64) -> Vec<f64> {
        let mut y = x.to_vec();
        let mut u = x0;
        for s in &self.sections {
            let [mut z1, mut z2] = s.steady_state(u);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[1] * out + z2;
                z2 = s.b[2] * input - s.a[2] * out;
                *v = out;
            }
            u *= s.dc_gain();
        }
        y
    }

    /// Number of samples of odd extension added at each end before filtering.
    pub fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    /// Forward then backward pass over an odd-extended copy; the output has
    /// zero phase and magnitude response |H|².
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = self.pad_len().min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let forward = self.filter(&ext, ext[0]);
        let mut reversed: Vec<f64> = forward.into_iter().rev().collect();
        let start = reversed[0];
        reversed = self.filter(&reversed, start);
        reversed.reverse();
        reversed[pad..pad + n].to_vec()
    }

    /// |H(e^{iω})| of one causal pass at frequency `f` Hz.
    pub fn magnitude(&self, f: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * f / fs;
        self.sections
            .iter()
            .map(|s| {
                let eval = |c: &[f64; 3]| {
                    let re = c[0] + c[1] * w.cos() + c[2] * (2.0 * w).cos();
                    let im = -c[1] * w.sin() - c[2] * (2.0 * w).sin();
                    (re * re + im * im).sqrt()
                };
                eval(&s.b) / eval(&s.a)
            })
            .product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_lowpass_is_minus_3db_at_cutoff() {
        let f = SosFilter::butterworth(FilterKind::LowPass, 2, 20.0, 360.0).unwrap();
        assert!((f.magnitude(20.0, 360.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((f.magnitude(0.0, 360.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fourth_order_highpass_blocks_dc() {
        let f = SosFilter::butterworth(FilterKind::HighPass, 4, 0.5, 360.0).unwrap();
        assert!(f.magnitude(0.0, 360.0) < 1e-12);
        assert!((f.magnitude(0.5, 360.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!((f.magnitude(100.0, 360.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_cutoff_at_nyquist_and_odd_order() {
        assert!(SosFilter::butterworth(FilterKind::LowPass, 4, 180.0, 360.0).is_err());
        assert!(SosFilter::butterworth(FilterKind::LowPass, 3, 20.0, 360.0).is_err());
    }

    #[test]
    fn steady_state_start_has_no_step_transient() {
        let f = SosFilter::butterworth(FilterKind::LowPass, 4, 20.0, 360.0).unwrap();
        let y = f.filter(&[2.5; 50], 2.5);
        assert!(y.iter().all(|v| (v - 2.5).abs() < 1e-9));
    }
}
