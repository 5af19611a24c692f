use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Corpus, Label, Role};
use crate::error::{LltError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// Split each label separately (floor of the fraction per label).
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.40,
            seed: 0,
            stratified: false,
        }
    }
}

/// Seeded split of a training corpus into (train, validation).
///
/// Selected beats keep their original relative order in both outputs.
pub fn split_train_validation(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0) {
        return Err(LltError::param(format!(
            "train_fraction must be in (0, 1], got {}",
            spec.train_fraction
        )));
    }
    if corpus.role != Role::Train {
        return Err(LltError::param(format!(
            "only a train corpus can be split, got role {}",
            corpus.role
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut selected = vec![false; corpus.len()];
    if spec.stratified {
        for label in [Label::Normal, Label::Ectopic, Label::Unlabeled] {
            let mut idx: Vec<usize> = (0..corpus.len())
                .filter(|&i| corpus.beats[i].label == label)
                .collect();
            idx.shuffle(&mut rng);
            let take = take_count(idx.len(), spec.train_fraction);
            for &i in &idx[..take] {
                selected[i] = true;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..corpus.len()).collect();
        idx.shuffle(&mut rng);
        let take = take_count(idx.len(), spec.train_fraction);
        for &i in &idx[..take] {
            selected[i] = true;
        }
    }

    let (mut train, mut validation) = (Vec::new(), Vec::new());
    for (beat, keep) in corpus.beats.iter().zip(selected) {
        if keep {
            train.push(beat.clone());
        } else {
            validation.push(beat.clone());
        }
    }
    Ok((
        Corpus {
            beats: train,
            beat_len: corpus.beat_len,
            role: Role::Train,
        },
        Corpus {
            beats: validation,
            beat_len: corpus.beat_len,
            role: Role::Validation,
        },
    ))
}

fn take_count(n: usize, fraction: f64) -> usize {
    // Guard against 0.4 * 10 = 3.9999999999999996 style truncation.
    ((n as f64 * fraction) + 1e-9).floor().min(n as f64) as usize
}
