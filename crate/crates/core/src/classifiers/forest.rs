//! Bagged CART trees with Gini splits and √d candidate features per node.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Hyperparams;
use crate::dataset_io::Label;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(Label),
    /// `x[feature] <= threshold` goes to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, fv: &[f64]) -> Label {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(l) => return *l,
                Node::Split { feature, threshold, left, right } => {
                    at = if fv[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [Label],
    max_depth: usize,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

fn counts(y: &[Label], idx: &[usize]) -> Vec<(Label, usize)> {
    let mut c: Vec<(Label, usize)> = Vec::new();
    for &i in idx {
        match c.iter_mut().find(|e| e.0 == y[i]) {
            Some(e) => e.1 += 1,
            None => c.push((y[i], 1)),
        }
    }
    c.sort();
    c
}

fn majority(c: &[(Label, usize)]) -> Label {
    c.iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|e| e.0)
        .expect("non-empty node")
}

#[cfg(test)]
fn gini(c: &[(Label, usize)], n: usize) -> f64 {
    let n = n as f64;
    1.0 - c.iter().map(|e| (e.1 as f64 / n).powi(2)).sum::<f64>()
}

impl Builder<'_> {
    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let at = self.nodes.len();
        let c = counts(self.y, &idx);
        self.nodes.push(Node::Leaf(majority(&c)));
        if depth >= self.max_depth || c.len() < 2 {
            return at;
        }
        let Some((feature, threshold)) = self.best_split(&idx) else {
            return at;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[at] = Node::Split { feature, threshold, left, right };
        at
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<(usize, f64)> {
        let dim = self.x[0].len();
        let mut features = sample(&mut self.rng, dim, self.mtry).into_vec();
        features.sort_unstable();
        let labels: Vec<Label> = counts(self.y, idx).into_iter().map(|e| e.0).collect();
        let n = idx.len();
        let mut best: Option<(f64, usize, f64)> = None;
        for f in features {
            let mut order = idx.to_vec();
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left = vec![0usize; labels.len()];
            let total: Vec<usize> = labels
                .iter()
                .map(|l| idx.iter().filter(|&&i| self.y[i] == *l).count())
                .collect();
            for k in 0..n - 1 {
                let i = order[k];
                let slot = labels.iter().position(|l| *l == self.y[i]).expect("label present");
                left[slot] += 1;
                let (v, next) = (self.x[i][f], self.x[order[k + 1]][f]);
                if v == next {
                    continue;
                }
                let nl = k + 1;
                let nr = n - nl;
                let gl = 1.0 - left.iter().map(|&c| (c as f64 / nl as f64).powi(2)).sum::<f64>();
                let gr = 1.0
                    - total
                        .iter()
                        .zip(&left)
                        .map(|(&t, &c)| ((t - c) as f64 / nr as f64).powi(2))
                        .sum::<f64>();
                let score = (nl as f64 * gl + nr as f64 * gr) / n as f64;
                if best.is_none_or(|b| score < b.0) {
                    let mid = v + (next - v) / 2.0;
                    // guard against the midpoint rounding onto the upper value
                    let threshold = if mid < next { mid } else { v };
                    best = Some((score, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

pub(crate) fn fit_tree(x: &[Vec<f64>], y: &[Label], idx: Vec<usize>, max_depth: usize, seed: u64) -> Tree {
    let dim = x[0].len();
    let mtry = ((dim as f64).sqrt().round() as usize).clamp(1, dim);
    let mut b = Builder {
        x,
        y,
        max_depth,
        mtry,
        rng: ChaCha8Rng::seed_from_u64(seed),
        nodes: Vec::new(),
    };
    b.build(idx, 0);
    Tree { nodes: b.nodes }
}

impl ForestModel {
    pub fn fit(features: &[Vec<f64>], labels: &[Label], hp: &Hyperparams) -> Result<Self> {
        let n = features.len();
        let mut master = ChaCha8Rng::seed_from_u64(hp.seed);
        let plans: Vec<(Vec<usize>, u64)> = (0..hp.rf_estimators)
            .map(|_| {
                let idx = if hp.rf_bootstrap {
                    (0..n).map(|_| master.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                (idx, master.gen())
            })
            .collect();
        let trees = plans
            .into_par_iter()
            .map(|(idx, seed)| fit_tree(features, labels, idx, hp.rf_depth, seed))
            .collect();
        Ok(ForestModel { trees })
    }

    /// Majority vote; ties go to label order.
    pub fn predict(&self, fv: &[f64]) -> Label {
        let votes: Vec<Label> = self.trees.iter().map(|t| t.predict(fv)).collect();
        let idx: Vec<usize> = (0..votes.len()).collect();
        majority(&counts(&votes, &idx))
    }
}

#[cfg(test)]
fn node_impurity(y: &[Label], idx: &[usize]) -> f64 {
    gini(&counts(y, idx), idx.len())
}
