//! Beat corpora on disk, the train/validation split, and persisted artifacts.
//!
//! Beat CSV rows look like `N,0.12,0.53,...`: a label token (`N`, `E` or `?`)
//! followed by `L` samples. A trailing `*` on the label token (`E*`) marks a
//! beat whose peak detection failed; its samples are zeros.

mod artifact;
mod split;

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LltError, Result};
use crate::preprocess::{self, PeakExpectation, PreprocessConfig, Signal};

pub use artifact::{load_law, parse_law, render_law, save_law, ArtifactHeader, LAW_VERSION};
pub use split::{split_train_validation, SplitSpec};

/// Default beat length used by the ECG corpus.
pub const DEFAULT_BEAT_LEN: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Normal,
    Ectopic,
    Unlabeled,
}

impl Label {
    pub fn token(self) -> &'static str {
        match self {
            Label::Normal => "N",
            Label::Ectopic => "E",
            Label::Unlabeled => "?",
        }
    }

    pub fn from_token(token: &str) -> Option<Label> {
        match token {
            "N" => Some(Label::Normal),
            "E" => Some(Label::Ectopic),
            "?" => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Normal => "Normal",
            Label::Ectopic => "Ectopic",
            Label::Unlabeled => "Unlabeled",
        }
    }

    pub fn from_name(name: &str) -> Option<Label> {
        match name {
            "Normal" | "N" => Some(Label::Normal),
            "Ectopic" | "E" => Some(Label::Ectopic),
            "Unlabeled" | "?" => Some(Label::Unlabeled),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One fixed-length window of a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Beat {
    pub samples: Vec<f64>,
    pub label: Label,
    /// Set when peak detection failed for the record this beat came from.
    pub artifact: bool,
    pub source_id: String,
}

impl Beat {
    pub fn new(samples: Vec<f64>, label: Label) -> Self {
        Beat {
            samples,
            label,
            artifact: false,
            source_id: String::new(),
        }
    }

    pub fn artifact(len: usize, label: Label, source_id: impl Into<String>) -> Self {
        Beat {
            samples: vec![0.0; len],
            label,
            artifact: true,
            source_id: source_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Train,
    Validation,
    Test,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Validation => "validation",
            Role::Test => "test",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub beats: Vec<Beat>,
    pub beat_len: usize,
    pub role: Role,
}

impl Corpus {
    /// Builds a corpus after checking that every beat has `beat_len` finite samples.
    pub fn new(beats: Vec<Beat>, beat_len: usize, role: Role) -> Result<Self> {
        if beat_len < 2 {
            return Err(LltError::param(format!("beat length must be at least 2, got {beat_len}")));
        }
        for (i, beat) in beats.iter().enumerate() {
            if beat.len() != beat_len {
                return Err(LltError::RowLength {
                    row: i + 1,
                    expected: beat_len,
                    got: beat.len(),
                });
            }
            if beat.samples.iter().any(|v| !v.is_finite()) {
                return Err(LltError::NonFinite("beat samples"));
            }
        }
        Ok(Corpus {
            beats,
            beat_len,
            role,
        })
    }

    pub fn len(&self) -> usize {
        self.beats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beats.is_empty()
    }

    /// Non-artifact beats carrying `label`, in corpus order.
    pub fn class_beats(&self, label: Label) -> Vec<&Beat> {
        self.beats
            .iter()
            .filter(|b| b.label == label && !b.artifact)
            .collect()
    }

    pub fn artifact_count(&self) -> usize {
        self.beats.iter().filter(|b| b.artifact).count()
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusFormat {
    /// Pre-extracted beats, one per row.
    Csv,
    /// Raw records, one per line as `[label;]fs;v0,v1,...`, run through preprocessing.
    RawSignalCsv {
        config: PreprocessConfig,
        expectation: PeakExpectation,
    },
}

pub fn load_corpus(path: impl AsRef<Path>, format: &CorpusFormat, role: Role) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| LltError::io(path, e))?;
    let source = path.display().to_string();
    match format {
        CorpusFormat::Csv => parse_beat_csv(&text, None, role, &source),
        CorpusFormat::RawSignalCsv {
            config,
            expectation,
        } => {
            let records = parse_raw_records(&text, config.fs, &source)?;
            let mut beats = Vec::new();
            for (label, signal, id) in records {
                for mut beat in preprocess::preprocess_record(&signal, config, *expectation)? {
                    beat.label = label;
                    beat.source_id = id.clone();
                    beats.push(beat);
                }
            }
            Corpus::new(beats, config.window_len, role)
        }
    }
}

/// Parses beat CSV text. When `expected_len` is `None` the first data row fixes `L`.
pub fn parse_beat_csv(
    text: &str,
    expected_len: Option<usize>,
    role: Role,
    source: &str,
) -> Result<Corpus> {
    let mut beats = Vec::new();
    let mut beat_len = expected_len;
    for (idx, line) in text.lines().enumerate() {
        let row = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let token = fields.next().unwrap_or("").trim();
        let (token, artifact) = match token.strip_suffix('*') {
            Some(t) => (t, true),
            None => (token, false),
        };
        let label = Label::from_token(token).ok_or_else(|| LltError::Parse {
            row,
            column: 1,
            message: format!("unknown label token {token:?}"),
        })?;
        let mut samples = Vec::new();
        for (col, field) in fields.enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| LltError::Parse {
                row,
                column: col + 2,
                message: format!("not a number: {:?}", field.trim()),
            })?;
            if !value.is_finite() {
                return Err(LltError::Parse {
                    row,
                    column: col + 2,
                    message: "non-finite sample".into(),
                });
            }
            samples.push(value);
        }
        let expected = *beat_len.get_or_insert(samples.len());
        if samples.len() != expected {
            return Err(LltError::RowLength {
                row,
                expected,
                got: samples.len(),
            });
        }
        beats.push(Beat {
            samples,
            label,
            artifact,
            source_id: format!("{source}:{row}"),
        });
    }
    Corpus::new(beats, beat_len.unwrap_or(DEFAULT_BEAT_LEN), role)
}

/// Renders beats in the CSV layout read by [`parse_beat_csv`].
pub fn render_beat_csv(corpus: &Corpus) -> String {
    let mut out = String::new();
    for beat in &corpus.beats {
        out.push_str(beat.label.token());
        if beat.artifact {
            out.push('*');
        }
        for v in &beat.samples {
            out.push(',');
            out.push_str(&format_real(*v));
        }
        out.push('\n');
    }
    out
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_beat_csv(corpus)).map_err(|e| LltError::io(path, e))
}

/// Parses raw records: `[label;]fs;v0,v1,...` per line. Without a leading
/// label the record is `Unlabeled`; a line holding only values uses `default_fs`.
pub fn parse_raw_records(
    text: &str,
    default_fs: f64,
    source: &str,
) -> Result<Vec<(Label, Signal, String)>> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let row = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(';').collect();
        let (label, fs, values) = match parts.as_slice() {
            [values] => (Label::Unlabeled, default_fs, *values),
            [fs, values] => (Label::Unlabeled, parse_fs(fs, row)?, *values),
            [label, fs, values] => {
                let label = Label::from_token(label.trim()).ok_or_else(|| LltError::Parse {
                    row,
                    column: 1,
                    message: format!("unknown label token {:?}", label.trim()),
                })?;
                (label, parse_fs(fs, row)?, *values)
            }
            _ => {
                return Err(LltError::Parse {
                    row,
                    column: 1,
                    message: "expected `[label;]fs;v0,v1,...`".into(),
                })
            }
        };
        let mut samples = Vec::new();
        for (col, field) in values.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| LltError::Parse {
                row,
                column: col + 1,
                message: format!("not a number: {:?}", field.trim()),
            })?;
            samples.push(v);
        }
        let signal = Signal::new(samples, fs)?;
        records.push((label, signal, format!("{source}:{row}")));
    }
    Ok(records)
}

fn parse_fs(field: &str, row: usize) -> Result<f64> {
    field.trim().parse().map_err(|_| LltError::Parse {
        row,
        column: 1,
        message: format!("bad sampling rate {:?}", field.trim()),
    })
}

/// Round-trip exact decimal text for a real (17 significant digits).
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_row() {
        let c = parse_beat_csv("N,0.1,0.2,0.3\n", Some(3), Role::Train, "t").unwrap();
        assert_eq!(c.beats.len(), 1);
        assert_eq!(c.beats[0].label, Label::Normal);
        assert_eq!(c.beats[0].samples, vec![0.1, 0.2, 0.3]);
        assert!(!c.beats[0].artifact);
    }

    #[test]
    fn short_row_names_row_and_expected_len() {
        let err = parse_beat_csv("E,0.1,0.2\n", Some(3), Role::Train, "t").unwrap_err();
        assert_eq!(err.to_string(), "row 1: expected 3 samples, got 2");
    }

    #[test]
    fn inconsistent_rows_use_first_row_length() {
        let err = parse_beat_csv("N,1,2,3\nE,1,2\n", None, Role::Train, "t").unwrap_err();
        assert_eq!(err.to_string(), "row 2: expected 3 samples, got 2");
    }

    #[test]
    fn malformed_value_names_column() {
        let err = parse_beat_csv("N,1,x,3\n", None, Role::Train, "t").unwrap_err();
        match err {
            LltError::Parse { row, column, .. } => assert_eq!((row, column), (1, 3)),
            other => panic!("unexpected {other}"),
        }
        assert!(parse_beat_csv("Q,1,2\n", None, Role::Train, "t").is_err());
    }

    #[test]
    fn artifact_marker_round_trips() {
        let beats = vec![
            Beat::new(vec![0.25, -1.0], Label::Normal),
            Beat::artifact(2, Label::Ectopic, "x"),
        ];
        let corpus = Corpus::new(beats, 2, Role::Test).unwrap();
        let text = render_beat_csv(&corpus);
        assert!(text.contains("E*,"));
        let back = parse_beat_csv(&text, None, Role::Test, "t").unwrap();
        assert_eq!(back.beats[1].artifact, true);
        assert_eq!(back.beats[0].samples, corpus.beats[0].samples);
    }

    #[test]
    fn raw_records_accept_optional_label() {
        let recs = parse_raw_records("N;360;1,2,3\n250;4,5\n7,8\n", 360.0, "r").unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].0, Label::Normal);
        assert_eq!(recs[1].1.fs, 250.0);
        assert_eq!(recs[2].1.values, vec![7.0, 8.0]);
    }

    #[test]
    fn format_real_is_exact() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, std::f64::consts::PI] {
            assert_eq!(format_real(v).parse::<f64>().unwrap(), v);
        }
    }
}
