//! Law residual features.
//!
//! A beat's features under one law are the residuals `ξ = Y w` of its own
//! embedding. Several laws stack their residual segments in lexicographic
//! order of the class name; the binary (reference-class) mode uses the
//! Normal law alone.

use serde::{Deserialize, Serialize};

use crate::dataset_io::{Beat, Label};
use crate::embedding::embed_beat;
use crate::error::{LltError, Result};
use crate::linear_law::LinearLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureMode {
    MultiClass,
    BinaryReference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub xi: Vec<f64>,
    /// (class of the law, segment length) in output order.
    pub layout: Vec<(Label, usize)>,
    pub mode: FeatureMode,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

/// Laws of equal length, kept in lexicographic class-name order.
#[derive(Debug, Clone, PartialEq)]
pub struct LawSet {
    laws: Vec<LinearLaw>,
}

impl LawSet {
    pub fn new(mut laws: Vec<LinearLaw>) -> Result<Self> {
        let first = laws.first().ok_or_else(|| LltError::param("a law set needs at least one law"))?;
        let width = first.len();
        if laws.iter().any(|l| l.len() != width) {
            return Err(LltError::param("all laws in a set must have the same length"));
        }
        laws.sort_by(|a, b| a.class_tag.name().cmp(b.class_tag.name()));
        if laws.windows(2).any(|w| w[0].class_tag == w[1].class_tag) {
            return Err(LltError::param("duplicate class in law set"));
        }
        Ok(LawSet { laws })
    }

    pub fn laws(&self) -> &[LinearLaw] {
        &self.laws
    }

    pub fn law_len(&self) -> usize {
        self.laws[0].len()
    }

    pub fn get(&self, class: Label) -> Option<&LinearLaw> {
        self.laws.iter().find(|l| l.class_tag == class)
    }
}

/// Residuals of `law` over every window of `samples`; length `L − l + 1`.
pub fn transform(samples: &[f64], law: &LinearLaw) -> Result<Vec<f64>> {
    if samples.len() < law.len() {
        return Err(LltError::DimensionMismatch {
            expected: law.len(),
            actual: samples.len(),
        });
    }
    embed_beat(samples, law.len())?.apply(&law.coefficients)
}

pub fn stack_features(samples: &[f64], laws: &LawSet) -> Result<FeatureVector> {
    let mut xi = Vec::new();
    let mut layout = Vec::with_capacity(laws.laws.len());
    for law in &laws.laws {
        let seg = transform(samples, law)?;
        layout.push((law.class_tag, seg.len()));
        xi.extend(seg);
    }
    Ok(FeatureVector {
        xi,
        layout,
        mode: FeatureMode::MultiClass,
    })
}

/// Single-segment features from the reference law. Artifact beats get `None`:
/// they are classified by rule, not by a model.
pub fn binary_features(beat: &Beat, reference: &LinearLaw) -> Result<Option<FeatureVector>> {
    if beat.artifact {
        return Ok(None);
    }
    let xi = transform(&beat.samples, reference)?;
    Ok(Some(FeatureVector {
        layout: vec![(reference.class_tag, xi.len())],
        xi,
        mode: FeatureMode::BinaryReference,
    }))
}

/// Keeps elements `0, factor, 2·factor, …` of every segment.
pub fn downsample_features(fv: &FeatureVector, factor: usize) -> Result<FeatureVector> {
    if factor == 0 {
        return Err(LltError::param("downsampling factor must be at least 1"));
    }
    let mut xi = Vec::new();
    let mut layout = Vec::with_capacity(fv.layout.len());
    let mut start = 0;
    for &(class, len) in &fv.layout {
        if factor > len {
            return Err(LltError::param(format!(
                "downsampling factor {factor} exceeds segment length {len}"
            )));
        }
        let seg: Vec<f64> = fv.xi[start..start + len].iter().step_by(factor).copied().collect();
        layout.push((class, seg.len()));
        xi.extend(seg);
        start += len;
    }
    Ok(FeatureVector {
        xi,
        layout,
        mode: fv.mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_law::fit_law;
    use proptest::prelude::*;

    fn law(w: Vec<f64>, class: Label) -> LinearLaw {
        LinearLaw {
            coefficients: w,
            lambda: 0.0,
            lambda_next: None,
            class_tag: class,
            train_rows: 0,
        }
    }

    fn diff_law() -> LinearLaw {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        law(vec![h, -h], Label::Normal)
    }

    #[test]
    fn zero_beat_gives_zero_features() {
        let xi = transform(&[0.0; 8], &law(vec![0.6, 0.0, 0.8], Label::Normal)).unwrap();
        assert_eq!(xi, vec![0.0; 6]);
    }

    #[test]
    fn differencing_law_kills_constants() {
        assert_eq!(transform(&[1.0; 4], &diff_law()).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn sinusoid_with_its_recurrence() {
        let omega: f64 = 0.3;
        let raw = [1.0, -2.0 * omega.cos(), 1.0];
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let l = law(raw.iter().map(|v| v / norm).collect(), Label::Normal);
        let beat: Vec<f64> = (0..30).map(|k| (omega * k as f64 + 0.4).sin()).collect();
        let xi = transform(&beat, &l).unwrap();
        assert!(xi.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn short_beat_errors() {
        assert!(transform(&[1.0], &diff_law()).is_err());
    }

    #[test]
    fn stacked_length_and_order() {
        let beat: Vec<f64> = (0..30).map(|k| (k as f64 * 0.2).sin()).collect();
        let w = |seed: f64| -> Vec<f64> {
            let raw: Vec<f64> = (0..12).map(|i| ((i as f64 + 1.0) * seed).cos()).collect();
            let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            raw.iter().map(|v| v / n).collect()
        };
        let set = LawSet::new(vec![law(w(0.3), Label::Normal), law(w(0.9), Label::Ectopic)]).unwrap();
        let fv = stack_features(&beat, &set).unwrap();
        assert_eq!(fv.len(), 38);
        assert_eq!(fv.layout, vec![(Label::Ectopic, 19), (Label::Normal, 19)]);
        assert_eq!(stack_features(&beat, &set).unwrap().layout, fv.layout);

        let single = LawSet::new(vec![law(w(0.3), Label::Normal)]).unwrap();
        let fv1 = stack_features(&beat, &single).unwrap();
        assert_eq!(fv1.xi, transform(&beat, single.get(Label::Normal).unwrap()).unwrap());
    }

    #[test]
    fn law_set_rejects_mixed_lengths() {
        assert!(LawSet::new(vec![diff_law(), law(vec![1.0, 0.0, 0.0], Label::Ectopic)]).is_err());
        assert!(LawSet::new(vec![]).is_err());
    }

    #[test]
    fn binary_features_and_artifact_bypass() {
        let raw: Vec<f64> = (0..12).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let l = law(raw, Label::Normal);
        let beat = Beat::new((0..30).map(|k| k as f64).collect(), Label::Normal);
        let fv = binary_features(&beat, &l).unwrap().unwrap();
        assert_eq!(fv.len(), 19);
        assert_eq!(fv.mode, FeatureMode::BinaryReference);
        let art = Beat::artifact(30, Label::Ectopic, "x");
        assert!(binary_features(&art, &l).unwrap().is_none());
    }

    #[test]
    fn downsampling() {
        let fv = FeatureVector {
            xi: (0..19).map(|i| i as f64).collect(),
            layout: vec![(Label::Normal, 19)],
            mode: FeatureMode::BinaryReference,
        };
        assert_eq!(downsample_features(&fv, 1).unwrap(), fv);
        let half = downsample_features(&fv, 2).unwrap();
        assert_eq!(half.xi, (0..19).step_by(2).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(half.layout, vec![(Label::Normal, 10)]);
        assert!(downsample_features(&fv, 20).is_err());
        assert!(downsample_features(&fv, 0).is_err());
    }

    #[test]
    fn training_aggregate_equals_lambda() {
        let beats: Vec<Vec<f64>> = (0..10)
            .map(|m| (0..30).map(|k| ((k * 7 + m * 13) % 17) as f64 / 17.0 - 0.5).collect())
            .collect();
        let l = fit_law(&beats, 8, Label::Normal).unwrap();
        let agg: f64 = beats
            .iter()
            .map(|b| {
                let xi = transform(b, &l).unwrap();
                xi.iter().map(|v| v * v).sum::<f64>() / xi.len() as f64
            })
            .sum::<f64>()
            / beats.len() as f64;
        assert!((agg - l.lambda).abs() <= 1e-10 * l.lambda);
    }

    proptest! {
        #[test]
        fn transform_is_linear(
            x in proptest::collection::vec(-10.0f64..10.0, 16),
            y in proptest::collection::vec(-10.0f64..10.0, 16),
            a in -3.0f64..3.0, b in -3.0f64..3.0,
        ) {
            let l = law(vec![0.5, -0.5, 0.5, -0.5], Label::Normal);
            let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let (tx, ty, tc) = (transform(&x, &l).unwrap(), transform(&y, &l).unwrap(), transform(&combo, &l).unwrap());
            for i in 0..tc.len() {
                prop_assert!((tc[i] - (a * tx[i] + b * ty[i])).abs() <= 1e-12 * (1.0 + tc[i].abs()));
            }
        }

        #[test]
        fn downsampled_layout_is_consistent(len_a in 1usize..30, len_b in 1usize..30, factor in 1usize..5) {
            prop_assume!(factor <= len_a.min(len_b));
            let fv = FeatureVector {
                xi: vec![1.0; len_a + len_b],
                layout: vec![(Label::Ectopic, len_a), (Label::Normal, len_b)],
                mode: FeatureMode::MultiClass,
            };
            let d = downsample_features(&fv, factor).unwrap();
            prop_assert_eq!(d.layout.iter().map(|s| s.1).sum::<usize>(), d.xi.len());
            prop_assert_eq!(d.layout[0].1, len_a.div_ceil(factor));
        }
    }
}
