//! Linear laws: the unit vector `w` minimizing the mean squared residual
//! `‖Yw‖² / K` over the embedded rows of a class.
//!
//! The minimizer is the eigenvector of `C = YᵀY / K` with the smallest
//! eigenvalue, and that eigenvalue equals the mean squared residual on the
//! fitting rows. [`fit_law`] checks that identity before returning.

pub mod jacobi;
mod scan;

use crate::dataset_io::{Beat, Label};
use crate::embedding::{embed_class, EmbeddedMatrix};
use crate::error::{LltError, Result};
use crate::llt_features;
use jacobi::{symmetric_eigen, SymmetricEigen};

pub use scan::{render_scan_csv, scan_law_length, LawScanEntry, LawScanReport};

/// Allowed deviation of ‖w‖ from 1.
pub const UNIT_NORM_TOL: f64 = 1e-9;
/// Relative tolerance of the variance identity `mean ξ² = λ`.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Eigenvalues below this fraction of trace(C) are treated as numerically
/// zero when forming relative errors; both sides of the identity carry
/// roughly `ε·‖C‖` of rounding there.
pub const LAMBDA_FLOOR_REL: f64 = 1e-5;
/// Eigenvalues within this fraction of trace(C) of the minimum count toward
/// its multiplicity.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Smallest eigenvalue may dip this far below zero (times trace) from rounding.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearLaw {
    pub coefficients: Vec<f64>,
    /// Smallest eigenvalue of the fitting correlation matrix, evaluated as
    /// the mean squared residual `‖Yw‖² / K` of the fitting rows.
    pub lambda: f64,
    /// Second-smallest eigenvalue, kept as a conditioning diagnostic.
    pub lambda_next: Option<f64>,
    pub class_tag: Label,
    pub train_rows: usize,
}

impl LinearLaw {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    dim: usize,
    data: Vec<f64>,
    rows: usize,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Builds a matrix from row-major data, enforcing exact symmetry from the upper triangle.
    pub fn from_symmetric(data: Vec<f64>, dim: usize) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(LltError::DimensionMismatch {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        let mut data = data;
        for i in 0..dim {
            for j in 0..i {
                data[i * dim + j] = data[j * dim + i];
            }
        }
        Ok(CorrelationMatrix { dim, data, rows: 0 })
    }
}

/// `C = YᵀY / K` with `K` the number of embedded rows.
pub fn correlation(y: &EmbeddedMatrix) -> Result<CorrelationMatrix> {
    let n = y.width();
    let k = y.rows();
    if k == 0 {
        return Err(LltError::EmptyClass);
    }
    let mut upper = vec![0.0; n * n];
    for row in y.row_iter() {
        for i in 0..n {
            let yi = row[i];
            for j in i..n {
                upper[i * n + j] += yi * row[j];
            }
        }
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = upper[i * n + j] / k as f64;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(CorrelationMatrix { dim: n, data, rows: k })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallestEigenpair {
    pub lambda: f64,
    pub vector: Vec<f64>,
    /// All eigenvalues, ascending.
    pub spectrum: Vec<f64>,
    /// Number of eigenvalues within the degeneracy tolerance of `lambda`.
    pub multiplicity: usize,
}

/// Flips `w` so its first non-negligible component is positive.
pub fn canonical_sign(w: &mut [f64]) {
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(first) = w.iter().find(|v| v.abs() > 1e-12 * scale) {
        if *first < 0.0 {
            w.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

fn degeneracy_tol(spectrum: &[f64], trace: f64) -> f64 {
    let scale = trace.max(spectrum.last().copied().unwrap_or(0.0)).max(f64::MIN_POSITIVE);
    DEGENERACY_TOL * scale
}

pub fn smallest_eigenpair(c: &CorrelationMatrix) -> Result<SmallestEigenpair> {
    let eig = symmetric_eigen(c.as_slice(), c.dim())?;
    Ok(pick_smallest(&eig, c.trace(), false))
}

/// `resolve_degenerate` replaces the solver's arbitrary choice inside a
/// degenerate cluster by the normalized projection of the lowest-index
/// basis vector onto the cluster's eigenspace.
fn pick_smallest(eig: &SymmetricEigen, trace: f64, resolve_degenerate: bool) -> SmallestEigenpair {
    let lambda = eig.values[0];
    let tol = degeneracy_tol(&eig.values, trace);
    let multiplicity = eig.values.iter().take_while(|v| **v - lambda <= tol).count();
    let mut vector = eig.vectors[0].clone();
    if resolve_degenerate && multiplicity > 1 {
        let n = vector.len();
        let cluster = &eig.vectors[..multiplicity];
        for i in 0..n {
            let mut p = vec![0.0; n];
            for v in cluster {
                for (pk, vk) in p.iter_mut().zip(v) {
                    *pk += v[i] * vk;
                }
            }
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                vector = p.into_iter().map(|x| x / norm).collect();
                break;
            }
        }
    }
    canonical_sign(&mut vector);
    SmallestEigenpair {
        lambda,
        vector,
        spectrum: eig.values.clone(),
        multiplicity,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FitOptions {
    /// Accept a degenerate smallest eigenvalue and pick a deterministic vector from its eigenspace.
    pub allow_degenerate: bool,
}

pub fn fit_law<B: AsRef<[f64]>>(beats: &[B], width: usize, class_tag: Label) -> Result<LinearLaw> {
    fit_law_with(beats, width, class_tag, FitOptions::default())
}

pub fn fit_law_with<B: AsRef<[f64]>>(
    beats: &[B],
    width: usize,
    class_tag: Label,
    opts: FitOptions,
) -> Result<LinearLaw> {
    let y = embed_class(beats, width)?;
    let c = correlation(&y)?;
    let trace = c.trace();
    let eig = symmetric_eigen(c.as_slice(), c.dim())?;
    let pair = pick_smallest(&eig, trace, opts.allow_degenerate);

    if pair.lambda < -PSD_TOL * trace {
        return Err(LltError::Audit(format!(
            "correlation matrix is not positive semidefinite (smallest eigenvalue {:e})",
            pair.lambda
        )));
    }
    if pair.multiplicity > 1 && !opts.allow_degenerate {
        return Err(LltError::RankDeficient {
            lambda: pair.lambda,
            multiplicity: pair.multiplicity,
        });
    }
    // The eigenvalue of the rounded C is only good to about ε·‖C‖; the mean
    // squared residual of the data itself resolves exact laws down to ε².
    // The two must agree before the law is accepted.
    let residuals = y.apply(&pair.vector)?;
    let variance = mean_square(&residuals);
    check_identity(variance, pair.lambda.max(0.0), trace)?;

    Ok(LinearLaw {
        coefficients: pair.vector,
        lambda: variance,
        lambda_next: pair.spectrum.get(1).copied(),
        class_tag,
        train_rows: y.rows(),
    })
}

/// `|variance − λ| ≤ IDENTITY_TOL · max(λ, LAMBDA_FLOOR_REL · trace)`.
pub fn identity_holds(variance: f64, lambda: f64, trace: f64) -> bool {
    let scale = lambda.max(LAMBDA_FLOOR_REL * trace);
    (variance - lambda).abs() <= IDENTITY_TOL * scale
}

fn check_identity(variance: f64, lambda: f64, trace: f64) -> Result<()> {
    if identity_holds(variance, lambda, trace) {
        Ok(())
    } else {
        Err(LltError::VarianceIdentity { variance, lambda })
    }
}

fn mean_square(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
}

/// Mean of ξ² over every embedded row of `beats`.
pub fn law_variance<B: AsRef<[f64]>>(beats: &[B], law: &LinearLaw) -> Result<f64> {
    if beats.is_empty() {
        return Err(LltError::EmptyClass);
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for beat in beats {
        let xi = llt_features::transform(beat.as_ref(), law)?;
        sum += xi.iter().map(|x| x * x).sum::<f64>();
        count += xi.len();
    }
    Ok(sum / count as f64)
}

/// Convenience for corpora: fit on the non-artifact beats of one label.
pub fn fit_class_law(beats: &[&Beat], width: usize, class_tag: Label, opts: FitOptions) -> Result<LinearLaw> {
    let samples: Vec<&[f64]> = beats.iter().map(|b| b.samples.as_slice()).collect();
    fit_law_with(&samples, width, class_tag, opts)
}
