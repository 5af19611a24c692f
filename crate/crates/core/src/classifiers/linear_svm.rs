use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{binary_classes, FeatureScaler, Hyperparams};
use crate::dataset_io::Label;
use crate::error::Result;

/// Soft-margin linear SVM trained by stochastic sub-gradient descent on the
/// primal hinge loss with `λ = 1 / (C · N)`. Inputs are standardized and the
/// bias is learned as the weight of a constant unit feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    /// `classes[0]` is the positive side of the decision function.
    pub classes: [Label; 2],
    pub scaler: FeatureScaler,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvmModel {
    pub fn fit(features: &[Vec<f64>], labels: &[Label], hp: &Hyperparams) -> Result<Self> {
        let classes = binary_classes(labels)?;
        let scaler = FeatureScaler::fit(features);
        let x: Vec<Vec<f64>> = scaler
            .apply_all(features)
            .into_iter()
            .map(|mut v| {
                v.push(1.0);
                v
            })
            .collect();
        let y: Vec<f64> = labels.iter().map(|&l| if l == classes[0] { 1.0 } else { -1.0 }).collect();
        let n = x.len();
        let dim = x[0].len();
        let lambda = 1.0 / (hp.svm_c * n as f64);

        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let mut order: Vec<usize> = (0..n).collect();
        let mut w = vec![0.0; dim];
        // iterate average over the second half of training
        let mut avg = vec![0.0; dim];
        let mut averaged = 0usize;
        let mut t = 0usize;
        for epoch in 0..hp.svm_epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let margin = y[i] * dot(&w, &x[i]);
                let shrink = 1.0 - eta * lambda;
                for wj in w.iter_mut() {
                    *wj *= shrink;
                }
                if margin < 1.0 {
                    for (wj, xj) in w.iter_mut().zip(&x[i]) {
                        *wj += eta * y[i] * xj;
                    }
                }
                if 2 * epoch >= hp.svm_epochs {
                    averaged += 1;
                    let a = 1.0 / averaged as f64;
                    for (m, wj) in avg.iter_mut().zip(&w) {
                        *m += a * (wj - *m);
                    }
                }
            }
        }
        let bias = avg.pop().unwrap_or(0.0);
        Ok(LinearSvmModel {
            classes,
            scaler,
            weights: avg,
            bias,
        })
    }

    pub fn decision(&self, fv: &[f64]) -> f64 {
        dot(&self.weights, &self.scaler.apply(fv)) + self.bias
    }

    pub fn predict(&self, fv: &[f64]) -> Label {
        if self.decision(fv) >= 0.0 {
            self.classes[0]
        } else {
            self.classes[1]
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
