use super::{fit, Hyperparams, ModelKind, TrainedModel};
use crate::dataset_io::Label;
use crate::error::{LltError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionRule {
    ValidationAccuracy,
    /// `val − penalty · |train − val|`, discouraging over-fit candidates.
    GapPenalized { penalty: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub hyperparams: Hyperparams,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
    pub score: f64,
}

fn accuracy(model: &TrainedModel, x: &[Vec<f64>], y: &[Label]) -> Result<f64> {
    let pred = model.predict_batch(x)?;
    Ok(pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64)
}

/// Fits every candidate on the training set and keeps the best by `rule`;
/// the first candidate wins ties. The test set never enters here.
pub fn select_by_validation(
    kind: ModelKind,
    candidates: &[Hyperparams],
    train: (&[Vec<f64>], &[Label]),
    validation: (&[Vec<f64>], &[Label]),
    rule: SelectionRule,
) -> Result<(TrainedModel, Vec<GridEntry>)> {
    if candidates.is_empty() {
        return Err(LltError::param("empty hyperparameter grid"));
    }
    if validation.0.is_empty() {
        return Err(LltError::EmptyEvaluation);
    }
    let mut best: Option<(f64, TrainedModel)> = None;
    let mut table = Vec::with_capacity(candidates.len());
    for hp in candidates {
        let model = fit(kind, train.0, train.1, hp)?;
        let tr = accuracy(&model, train.0, train.1)?;
        let va = accuracy(&model, validation.0, validation.1)?;
        let score = match rule {
            SelectionRule::ValidationAccuracy => va,
            SelectionRule::GapPenalized { penalty } => va - penalty * (tr - va).abs(),
        };
        table.push(GridEntry {
            hyperparams: hp.clone(),
            train_accuracy: tr,
            validation_accuracy: va,
            score,
        });
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, model));
        }
    }
    Ok((best.expect("non-empty grid").1, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_best_k_and_keeps_first_on_ties() {
        // a single mislabeled point: k = 1 memorizes it, k = 3 votes it away
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let mut y: Vec<Label> = (0..10).map(|i| if i < 5 { Label::Normal } else { Label::Ectopic }).collect();
        y[2] = Label::Ectopic;
        let vx = vec![vec![2.1], vec![7.0]];
        let vy = vec![Label::Normal, Label::Ectopic];
        let grid: Vec<Hyperparams> = [1, 3, 5]
            .iter()
            .map(|&k| Hyperparams { knn_k: k, ..Hyperparams::default() })
            .collect();
        let (m, table) = select_by_validation(
            ModelKind::Knn,
            &grid,
            (&x, &y),
            (&vx, &vy),
            SelectionRule::GapPenalized { penalty: 0.5 },
        )
        .unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table[0].validation_accuracy, 0.5);
        assert_eq!(table[1].validation_accuracy, 1.0);
        assert_eq!(m.meta.hyperparams.knn_k, 3);
    }
}
