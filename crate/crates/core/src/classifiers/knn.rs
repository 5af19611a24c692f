use serde::{Deserialize, Serialize};

use super::{FeatureScaler, Hyperparams, Metric};
use crate::dataset_io::Label;
use crate::error::{LltError, Result};

/// `round(√n)`, at least 1.
pub fn heuristic_k(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).max(1)
}

pub fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub metric: Metric,
    pub scaler: Option<FeatureScaler>,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
}

impl KnnModel {
    pub fn fit(features: &[Vec<f64>], labels: &[Label], hp: &Hyperparams) -> Result<Self> {
        if hp.knn_k > features.len() {
            return Err(LltError::param(format!(
                "k = {} exceeds training set size {}",
                hp.knn_k,
                features.len()
            )));
        }
        let scaler = hp.knn_standardize.then(|| FeatureScaler::fit(features));
        let points = match &scaler {
            Some(s) => s.apply_all(features),
            None => features.to_vec(),
        };
        Ok(KnnModel {
            k: hp.knn_k,
            metric: hp.knn_metric,
            scaler,
            points,
            labels: labels.to_vec(),
        })
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.metric {
            Metric::Chebyshev => chebyshev(a, b),
            Metric::Euclidean => euclidean(a, b),
        }
    }

    /// Majority vote of the k nearest points (ties in distance go to the
    /// earlier training point). A tied vote goes to the class whose voters
    /// are closer in total, then to label order.
    pub fn predict(&self, fv: &[f64]) -> Label {
        let query = match &self.scaler {
            Some(s) => s.apply(fv),
            None => fv.to_vec(),
        };
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (self.distance(p, &query), i))
            .collect();
        let k = self.k.min(dist.len());
        dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes: Vec<(Label, usize, f64)> = Vec::new();
        for &(d, i) in &dist[..k] {
            let l = self.labels[i];
            match votes.iter_mut().find(|v| v.0 == l) {
                Some(v) => {
                    v.1 += 1;
                    v.2 += d;
                }
                None => votes.push((l, 1, d)),
            }
        }
        votes.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)));
        votes[0].0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(points: Vec<Vec<f64>>, labels: Vec<Label>, k: usize, metric: Metric) -> KnnModel {
        let hp = Hyperparams { knn_k: k, knn_metric: metric, ..Hyperparams::default() };
        KnnModel::fit(&points, &labels, &hp).unwrap()
    }

    #[test]
    fn heuristic_k_values() {
        assert_eq!(heuristic_k(3249), 57);
        assert_eq!(heuristic_k(0), 1);
        assert_eq!(heuristic_k(1), 1);
        assert_eq!(heuristic_k(3408), 58);
    }

    #[test]
    fn metrics() {
        assert_eq!(chebyshev(&[0.0, 0.0], &[3.0, -4.0]), 4.0);
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, -4.0]), 5.0);
    }

    #[test]
    fn single_point() {
        let m = model(vec![vec![1.0, 2.0]], vec![Label::Ectopic], 1, Metric::Chebyshev);
        assert_eq!(m.predict(&[100.0, -7.0]), Label::Ectopic);
    }

    #[test]
    fn nearest_neighbour_wins_at_k1() {
        let m = model(
            vec![vec![0.0], vec![10.0]],
            vec![Label::Normal, Label::Ectopic],
            1,
            Metric::Euclidean,
        );
        assert_eq!(m.predict(&[2.0]), Label::Normal);
        assert_eq!(m.predict(&[7.0]), Label::Ectopic);
    }

    #[test]
    fn metric_changes_the_neighbour() {
        // under Chebyshev (3, 3) is closer to the origin than (0, 4); under Euclidean it is not
        let pts = vec![vec![3.0, 3.0], vec![0.0, 4.0]];
        let labels = vec![Label::Normal, Label::Ectopic];
        assert_eq!(model(pts.clone(), labels.clone(), 1, Metric::Chebyshev).predict(&[0.0, 0.0]), Label::Normal);
        assert_eq!(model(pts, labels, 1, Metric::Euclidean).predict(&[0.0, 0.0]), Label::Ectopic);
    }

    #[test]
    fn tied_vote_goes_to_closer_class() {
        let m = model(
            vec![vec![1.0], vec![-3.0], vec![-2.0], vec![2.5]],
            vec![Label::Normal, Label::Normal, Label::Ectopic, Label::Ectopic],
            4,
            Metric::Euclidean,
        );
        // Normal total 1 + 3 = 4, Ectopic total 2 + 2.5 = 4.5
        assert_eq!(m.predict(&[0.0]), Label::Normal);
        // exact tie in both count and distance goes to label order
        let m = model(vec![vec![-1.0], vec![1.0]], vec![Label::Ectopic, Label::Normal], 2, Metric::Euclidean);
        assert_eq!(m.predict(&[0.0]), Label::Normal);
    }

    #[test]
    fn k_larger_than_training_set_is_rejected() {
        let hp = Hyperparams { knn_k: 3, ..Hyperparams::default() };
        assert!(KnnModel::fit(&[vec![0.0]], &[Label::Normal], &hp).is_err());
    }
}
