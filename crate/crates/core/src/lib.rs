//! Linear-law feature space transformation (LLT) for time-series classification.
//!
//! A *linear law* of a class is the unit coefficient vector `w` that maps
//! every time-delay-embedded window of the class's samples as close to zero
//! as possible. Applying a class law to a new sample yields its residual
//! sequence, a compact feature vector on which simple classifiers separate
//! classes well. The crate covers the whole ECG normal-vs-ectopic pipeline:
//! preprocessing, law fitting, feature transformation, classifiers and
//! scoring, plus a synthetic corpus generator with exactly known laws.

pub mod classifiers;
pub mod config;
pub mod dataset_io;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod linear_law;
pub mod llt_features;
pub mod preprocess;
pub mod synth;

pub use config::RunConfig;
pub use error::{LltError, Result};
