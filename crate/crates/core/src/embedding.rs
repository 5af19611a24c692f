//! Time-delay embedding of beats.
//!
//! Row `j` of a single-beat embedding of width `l` is
//! `[s[j+l-1], s[j+l-2], ..., s[j]]`: newest sample first. Every offset is
//! used, so consecutive rows overlap in `l - 1` entries.

use crate::dataset_io::Beat;
use crate::error::{LltError, Result};

impl AsRef<[f64]> for Beat {
    fn as_ref(&self) -> &[f64] {
        &self.samples
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedMatrix {
    width: usize,
    data: Vec<f64>,
    /// (beat index, index of the newest sample in the row)
    provenance: Vec<(usize, usize)>,
}

impl EmbeddedMatrix {
    pub fn rows(&self) -> usize {
        self.provenance.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width)
    }

    pub fn provenance(&self) -> &[(usize, usize)] {
        &self.provenance
    }

    /// `Y w`, one residual per row.
    pub fn apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.width {
            return Err(LltError::DimensionMismatch {
                expected: self.width,
                actual: w.len(),
            });
        }
        Ok(self
            .row_iter()
            .map(|row| row.iter().zip(w).map(|(y, c)| y * c).sum())
            .collect())
    }

    /// Debug dump: `beat,offset,c0,...` per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beat,offset");
        for i in 0..self.width {
            out.push_str(&format!(",c{i}"));
        }
        out.push('\n');
        for (row, (m, k)) in self.row_iter().zip(&self.provenance) {
            out.push_str(&format!("{m},{k}"));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn check_width(len: usize, width: usize) -> Result<()> {
    if width < 2 {
        return Err(LltError::param(format!("law length must be at least 2, got {width}")));
    }
    if width > len {
        return Err(LltError::param(format!(
            "law length {width} exceeds beat length {len}"
        )));
    }
    Ok(())
}

fn push_rows(samples: &[f64], width: usize, beat_idx: usize, m: &mut EmbeddedMatrix) {
    for newest in width - 1..samples.len() {
        m.data.extend((0..width).map(|i| samples[newest - i]));
        m.provenance.push((beat_idx, newest));
    }
}

pub fn embed_beat(samples: &[f64], width: usize) -> Result<EmbeddedMatrix> {
    check_width(samples.len(), width)?;
    let mut m = EmbeddedMatrix {
        width,
        data: Vec::with_capacity((samples.len() - width + 1) * width),
        provenance: Vec::new(),
    };
    push_rows(samples, width, 0, &mut m);
    Ok(m)
}

/// Stacks the embeddings of all beats vertically, in input order.
pub fn embed_class<B: AsRef<[f64]>>(beats: &[B], width: usize) -> Result<EmbeddedMatrix> {
    let first = beats.first().ok_or(LltError::EmptyClass)?.as_ref().len();
    check_width(first, width)?;
    let mut m = EmbeddedMatrix {
        width,
        data: Vec::with_capacity(beats.len() * (first - width + 1) * width),
        provenance: Vec::new(),
    };
    for (idx, beat) in beats.iter().enumerate() {
        let samples = beat.as_ref();
        if samples.len() != first {
            return Err(LltError::param(format!(
                "beat {idx} has length {} but the class uses {first}",
                samples.len()
            )));
        }
        push_rows(samples, width, idx, &mut m);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn newest_first_rows() {
        let m = embed_beat(&[1.0, 2.0, 3.0, 4.0, 5.0], 3).unwrap();
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.to_vec()).collect();
        assert_eq!(rows, vec![vec![3.0, 2.0, 1.0], vec![4.0, 3.0, 2.0], vec![5.0, 4.0, 3.0]]);
    }

    #[test]
    fn row_count_for_ecg_window() {
        let s: Vec<f64> = (0..30).map(|i| i as f64).collect();
        assert_eq!(embed_beat(&s, 12).unwrap().rows(), 19);
    }

    #[test]
    fn full_width_is_reversed_beat() {
        let m = embed_beat(&[1.0, 2.0, 3.0, 4.0], 4).unwrap();
        assert_eq!(m.rows(), 1);
        assert_eq!(m.row(0), &[4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn width_errors() {
        assert!(embed_beat(&[1.0, 2.0], 3).is_err());
        assert!(embed_beat(&[1.0, 2.0], 1).is_err());
        let empty: Vec<Vec<f64>> = vec![];
        assert!(matches!(embed_class(&empty, 2), Err(LltError::EmptyClass)));
        assert_eq!(
            embed_class(&empty, 2).unwrap_err().to_string(),
            "cannot fit law on empty class"
        );
    }

    #[test]
    fn class_blocks_and_provenance() {
        let beats = vec![vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![6.0, 7.0, 8.0, 9.0, 10.0]];
        let m = embed_class(&beats, 3).unwrap();
        assert_eq!(m.rows(), 6);
        let idx: Vec<usize> = m.provenance().iter().map(|p| p.0).collect();
        assert_eq!(idx, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(m.row(3), &[8.0, 7.0, 6.0]);
    }

    #[test]
    fn clinical_row_count() {
        let beats = vec![vec![0.0; 30]; 3408];
        assert_eq!(embed_class(&beats, 12).unwrap().rows(), (30 - 12 + 1) * 3408);
        assert_eq!((30 - 12 + 1) * 3408, 64752);
    }

    #[test]
    fn mixed_lengths_rejected() {
        let beats = vec![vec![0.0; 5], vec![0.0; 6]];
        assert!(embed_class(&beats, 2).is_err());
    }

    proptest! {
        #[test]
        fn indexing_and_overlap_laws(
            beats in (2usize..20).prop_flat_map(|len| proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, len), 1..6)),
            w_frac in 0.0f64..1.0,
        ) {
            let len = beats[0].len();
            let width = 2 + ((len - 2) as f64 * w_frac) as usize;
            let m = embed_class(&beats, width).unwrap();
            prop_assert_eq!(m.rows(), beats.len() * (len - width + 1));
            for r in 0..m.rows() {
                let (b, k) = m.provenance()[r];
                for i in 0..width {
                    prop_assert_eq!(m.row(r)[i], beats[b][k - i]);
                }
                if r + 1 < m.rows() && m.provenance()[r + 1].0 == b {
                    for i in 0..width - 1 {
                        prop_assert_eq!(m.row(r + 1)[i + 1], m.row(r)[i]);
                    }
                }
            }
        }
    }
}
