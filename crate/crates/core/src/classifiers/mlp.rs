//! One-hidden-layer perceptron: tanh hidden units, two-way softmax output,
//! mean cross-entropy loss, full-batch gradient descent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{binary_classes, FeatureScaler, Hyperparams};
use crate::dataset_io::Label;
use crate::error::{LltError, Result};

/// Stop once an epoch changes the loss by less than this.
const LOSS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub input: usize,
    pub hidden: usize,
    /// `hidden × input`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `2 × hidden`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpParams {
    /// Xavier-uniform weights, zero biases.
    pub fn init(input: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a1 = (6.0 / (input + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + 2) as f64).sqrt();
        MlpParams {
            input,
            hidden,
            w1: (0..hidden * input).map(|_| rng.gen_range(-a1..a1)).collect(),
            b1: vec![0.0; hidden],
            w2: (0..2 * hidden).map(|_| rng.gen_range(-a2..a2)).collect(),
            b2: vec![0.0; 2],
        }
    }

    fn zeros_like(&self) -> Self {
        MlpParams {
            input: self.input,
            hidden: self.hidden,
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; 2],
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_flat(&mut self, v: &[f64]) {
        let mut it = v.iter().copied();
        for slot in self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
        {
            *slot = it.next().expect("flat vector length");
        }
    }

    fn hidden_act(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| {
                let row = &self.w1[h * self.input..(h + 1) * self.input];
                (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[h]).tanh()
            })
            .collect()
    }

    /// Class probabilities for one input.
    pub fn forward(&self, x: &[f64]) -> [f64; 2] {
        softmax(self.logits(&self.hidden_act(x)))
    }

    fn logits(&self, a: &[f64]) -> [f64; 2] {
        let mut z = self.b2.clone();
        for (k, zk) in z.iter_mut().enumerate() {
            *zk += self.w2[k * self.hidden..(k + 1) * self.hidden]
                .iter()
                .zip(a)
                .map(|(w, v)| w * v)
                .sum::<f64>();
        }
        [z[0], z[1]]
    }
}

fn softmax(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

/// Mean cross-entropy over `(x, target)` pairs; targets are 0 or 1.
pub fn loss(p: &MlpParams, x: &[Vec<f64>], target: &[usize]) -> f64 {
    x.iter()
        .zip(target)
        .map(|(xi, &t)| {
            let z = p.logits(&p.hidden_act(xi));
            let m = z[0].max(z[1]);
            let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
            lse - z[t]
        })
        .sum::<f64>()
        / x.len() as f64
}

/// Loss and its gradient by back-propagation.
pub fn loss_and_grad(p: &MlpParams, x: &[Vec<f64>], target: &[usize]) -> (f64, MlpParams) {
    let n = x.len() as f64;
    let mut g = p.zeros_like();
    let mut total = 0.0;
    for (xi, &t) in x.iter().zip(target) {
        let a = p.hidden_act(xi);
        let z = p.logits(&a);
        let m = z[0].max(z[1]);
        let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
        total += lse - z[t];
        let prob = softmax(z);
        let dz = [prob[0] - f64::from(t == 0), prob[1] - f64::from(t == 1)];
        let mut da = vec![0.0; p.hidden];
        for k in 0..2 {
            g.b2[k] += dz[k] / n;
            for h in 0..p.hidden {
                g.w2[k * p.hidden + h] += dz[k] * a[h] / n;
                da[h] += dz[k] * p.w2[k * p.hidden + h];
            }
        }
        for h in 0..p.hidden {
            let dpre = da[h] * (1.0 - a[h] * a[h]) / n;
            g.b1[h] += dpre;
            for (gw, v) in g.w1[h * p.input..(h + 1) * p.input].iter_mut().zip(xi) {
                *gw += dpre * v;
            }
        }
    }
    (total / n, g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// Output unit `k` scores `classes[k]`.
    pub classes: [Label; 2],
    pub scaler: FeatureScaler,
    pub params: MlpParams,
    pub final_loss: f64,
    pub epochs_run: usize,
}

impl MlpModel {
    pub fn fit(features: &[Vec<f64>], labels: &[Label], hp: &Hyperparams) -> Result<Self> {
        let classes = binary_classes(labels)?;
        let scaler = FeatureScaler::fit(features);
        let x = scaler.apply_all(features);
        let target: Vec<usize> = labels.iter().map(|&l| usize::from(l != classes[0])).collect();
        let mut params = MlpParams::init(x[0].len(), hp.mlp_hidden, hp.seed);
        let mut flat = params.flat();
        let mut prev = f64::INFINITY;
        let mut epochs_run = 0;
        let mut final_loss = f64::NAN;
        for epoch in 0..hp.mlp_epochs {
            let (l, g) = loss_and_grad(&params, &x, &target);
            if !l.is_finite() {
                return Err(LltError::Divergence { epoch });
            }
            final_loss = l;
            epochs_run = epoch + 1;
            if (prev - l).abs() < LOSS_TOL {
                break;
            }
            prev = l;
            for (w, d) in flat.iter_mut().zip(g.flat()) {
                *w -= hp.mlp_lr * d;
            }
            if flat.iter().any(|w| !w.is_finite()) {
                return Err(LltError::Divergence { epoch });
            }
            params.set_flat(&flat);
        }
        Ok(MlpModel {
            classes,
            scaler,
            params,
            final_loss,
            epochs_run,
        })
    }

    pub fn probabilities(&self, fv: &[f64]) -> [f64; 2] {
        self.params.forward(&self.scaler.apply(fv))
    }

    pub fn predict(&self, fv: &[f64]) -> Label {
        let p = self.probabilities(fv);
        if p[0] >= p[1] {
            self.classes[0]
        } else {
            self.classes[1]
        }
    }
}
