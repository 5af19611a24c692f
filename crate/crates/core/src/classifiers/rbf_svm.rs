//! Kernel SVM solved in the dual by SMO with maximal-violating-pair working
//! set selection.

use serde::{Deserialize, Serialize};

use super::{binary_classes, Hyperparams};
use crate::dataset_io::Label;
use crate::error::{LltError, Result};

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// `1 / (d · var(X))` over all feature entries; 1 for constant data.
pub fn default_gamma(features: &[Vec<f64>]) -> f64 {
    let d = features[0].len();
    let count = (features.len() * d) as f64;
    let mean = features.iter().flatten().sum::<f64>() / count;
    let var = features.iter().flatten().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfSvmModel {
    /// `classes[0]` is the `y = +1` side.
    pub classes: [Label; 2],
    pub gamma: f64,
    pub support: Vec<Vec<f64>>,
    /// `α_i y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

/// Solver state handed to an observer after every SMO step.
pub struct SmoStep<'a> {
    pub iteration: usize,
    pub alpha: &'a [f64],
    pub y: &'a [f64],
}

const TAU: f64 = 1e-12;

impl RbfSvmModel {
    pub fn fit(features: &[Vec<f64>], labels: &[Label], hp: &Hyperparams) -> Result<Self> {
        Self::fit_observed(features, labels, hp, &mut |_| {})
    }

    pub fn fit_observed(
        features: &[Vec<f64>],
        labels: &[Label],
        hp: &Hyperparams,
        observer: &mut dyn FnMut(&SmoStep),
    ) -> Result<Self> {
        let classes = binary_classes(labels)?;
        let n = features.len();
        let c = hp.svm_c;
        let gamma = hp.rbf_gamma.unwrap_or_else(|| default_gamma(features));
        let y: Vec<f64> = labels.iter().map(|&l| if l == classes[0] { 1.0 } else { -1.0 }).collect();
        let kernel_row = |i: usize| -> Vec<f64> {
            features.iter().map(|x| rbf_kernel(&features[i], x, gamma)).collect()
        };

        let mut alpha = vec![0.0; n];
        // gradient of ½ αᵀQα − eᵀα
        let mut grad = vec![-1.0; n];
        let mut iteration = 0;
        loop {
            let (up, low) = select_pair(&alpha, &y, &grad, c);
            let (i, m) = match up {
                Some(p) => p,
                None => break,
            };
            let (j, big_m) = match low {
                Some(p) => p,
                None => break,
            };
            if m - big_m < hp.smo_tol {
                break;
            }
            if iteration == hp.smo_max_iter {
                return Err(LltError::SmoNoConvergence {
                    iterations: iteration,
                    violations: count_violations(&alpha, &y, &grad, c, hp.smo_tol),
                });
            }
            iteration += 1;

            let ki = kernel_row(i);
            let kj = kernel_row(j);
            let (old_i, old_j) = (alpha[i], alpha[j]);
            let quad = (ki[i] + kj[j] - 2.0 * ki[j]).max(TAU);
            if y[i] != y[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for t in 0..n {
                grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
            }
            observer(&SmoStep {
                iteration,
                alpha: &alpha,
                y: &y,
            });
        }

        let bias = -rho(&alpha, &y, &grad, c);
        let mut support = Vec::new();
        let mut dual_coef = Vec::new();
        for t in 0..n {
            if alpha[t] > 0.0 {
                support.push(features[t].clone());
                dual_coef.push(alpha[t] * y[t]);
            }
        }
        Ok(RbfSvmModel {
            classes,
            gamma,
            support,
            dual_coef,
            bias,
            iterations: iteration,
        })
    }

    pub fn decision(&self, fv: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.dual_coef)
            .map(|(s, a)| a * rbf_kernel(s, fv, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, fv: &[f64]) -> Label {
        if self.decision(fv) >= 0.0 {
            self.classes[0]
        } else {
            self.classes[1]
        }
    }
}

fn in_up(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(a: f64, y: f64, c: f64) -> bool {
    (y < 0.0 && a < c) || (y > 0.0 && a > 0.0)
}

/// Returns `(argmax_{I_up} −y G, max)` and `(argmin_{I_low} −y G, min)`.
#[allow(clippy::type_complexity)]
fn select_pair(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> (Option<(usize, f64)>, Option<(usize, f64)>) {
    let mut up: Option<(usize, f64)> = None;
    let mut low: Option<(usize, f64)> = None;
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(alpha[t], y[t], c) && up.is_none_or(|(_, best)| v > best) {
            up = Some((t, v));
        }
        if in_low(alpha[t], y[t], c) && low.is_none_or(|(_, best)| v < best) {
            low = Some((t, v));
        }
    }
    (up, low)
}

fn count_violations(alpha: &[f64], y: &[f64], grad: &[f64], c: f64, tol: f64) -> usize {
    let (up, low) = select_pair(alpha, y, grad, c);
    let (m, big_m) = match (up, low) {
        (Some(u), Some(l)) => (u.1, l.1),
        _ => return 0,
    };
    (0..alpha.len())
        .filter(|&t| {
            let v = -y[t] * grad[t];
            (in_up(alpha[t], y[t], c) && v > big_m + tol) || (in_low(alpha[t], y[t], c) && v < m - tol)
        })
        .count()
}

/// Offset from the free variables, or the midpoint of the feasible interval
/// when none are free.
fn rho(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dual_objective(x: &[Vec<f64>], y: &[f64], alpha: &[f64], gamma: f64) -> f64 {
        let mut quad = 0.0;
        for i in 0..x.len() {
            for j in 0..x.len() {
                quad += alpha[i] * alpha[j] * y[i] * y[j] * rbf_kernel(&x[i], &x[j], gamma);
            }
        }
        alpha.iter().sum::<f64>() - 0.5 * quad
    }

    fn noisy_rings(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let r = if i % 2 == 0 { 1.0 } else { 2.0 } + rng.gen_range(-0.6..0.6);
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            x.push(vec![r * t.cos(), r * t.sin()]);
            y.push(if i % 2 == 0 { Label::Normal } else { Label::Ectopic });
        }
        (x, y)
    }

    #[test]
    fn dual_objective_never_decreases_and_stays_feasible() {
        let (x, labels) = noisy_rings(5, 60);
        let hp = Hyperparams { svm_c: 1.0, rbf_gamma: Some(0.7), ..Hyperparams::default() };
        let mut trace = Vec::new();
        let model = RbfSvmModel::fit_observed(&x, &labels, &hp, &mut |s| {
            let dot: f64 = s.alpha.iter().zip(s.y).map(|(a, y)| a * y).sum();
            assert!(dot.abs() <= 1e-9, "yᵀα = {dot}");
            assert!(s.alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
            trace.push(dual_objective(&x, s.y, s.alpha, 0.7));
        })
        .unwrap();
        assert!(model.iterations > 5);
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn separates_rings() {
        let (x, labels) = noisy_rings(6, 200);
        let m = RbfSvmModel::fit(&x, &labels, &Hyperparams { svm_c: 10.0, ..Hyperparams::default() }).unwrap();
        let acc = x.iter().zip(&labels).filter(|(p, l)| m.predict(p) == **l).count();
        assert!(acc as f64 / 200.0 > 0.9, "{acc}");
    }

    #[test]
    fn linearly_separable_pair_has_symmetric_boundary() {
        let x = vec![vec![-1.0], vec![1.0]];
        let labels = vec![Label::Normal, Label::Ectopic];
        let m = RbfSvmModel::fit(&x, &labels, &Hyperparams::default()).unwrap();
        assert!(m.decision(&[0.0]).abs() < 1e-12);
        assert_eq!(m.predict(&[-0.9]), Label::Normal);
        assert_eq!(m.predict(&[0.9]), Label::Ectopic);
    }

    #[test]
    fn iteration_cap_reports_violations() {
        let (x, labels) = noisy_rings(7, 40);
        let hp = Hyperparams { smo_max_iter: 2, ..Hyperparams::default() };
        match RbfSvmModel::fit(&x, &labels, &hp) {
            Err(LltError::SmoNoConvergence { iterations, violations }) => {
                assert_eq!(iterations, 2);
                assert!(violations > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn default_gamma_scale() {
        assert_eq!(default_gamma(&[vec![0.0, 2.0], vec![2.0, 0.0]]), 0.5);
        assert_eq!(default_gamma(&[vec![3.0], vec![3.0]]), 1.0);
    }
}
