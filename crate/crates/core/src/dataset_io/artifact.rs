//! Text artifact container shared by law and model files.
//!
//! ```text
//! version=<kind>/<n>
//! key=value
//! ...
//! checksum=sha256:<hex>
//! ---
//! <payload>
//! ```
//!
//! The checksum covers every line except the checksum line itself.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{format_real, Label};
use crate::error::{LltError, Result};
use crate::linear_law::{LinearLaw, UNIT_NORM_TOL};

pub const LAW_VERSION: &str = "llt-law/1";
const SEPARATOR: &str = "---";

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactHeader {
    pub version: String,
    pub fields: Vec<(String, String)>,
    pub payload: String,
    stored_checksum: String,
}

impl ArtifactHeader {
    pub fn new(version: &str, fields: Vec<(String, String)>, payload: String) -> Self {
        let mut header = ArtifactHeader {
            version: version.to_string(),
            fields,
            payload,
            stored_checksum: String::new(),
        };
        header.stored_checksum = header.checksum();
        header
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| LltError::Format(format!("missing header field `{key}`")))
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| LltError::Format(format!("bad value for `{key}`: {raw:?}")))
    }

    fn canonical(&self) -> String {
        let mut out = format!("version={}\n", self.version);
        for (k, v) in &self.fields {
            out.push_str(&format!("{k}={v}\n"));
        }
        out.push_str(SEPARATOR);
        out.push('\n');
        out.push_str(&self.payload);
        out
    }

    fn checksum(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    }

    pub fn verify_checksum(&self) -> Result<()> {
        let computed = self.checksum();
        if computed != self.stored_checksum {
            return Err(LltError::Checksum {
                expected: self.stored_checksum.clone(),
                computed,
            });
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = format!("version={}\n", self.version);
        for (k, v) in &self.fields {
            out.push_str(&format!("{k}={v}\n"));
        }
        out.push_str(&format!("checksum={}\n", self.checksum()));
        out.push_str(SEPARATOR);
        out.push('\n');
        out.push_str(&self.payload);
        out
    }

    /// Parses the container and checks the version tag. The checksum is
    /// left for the caller to verify with [`ArtifactHeader::verify_checksum`].
    pub fn parse(text: &str, expected_version: &str) -> Result<Self> {
        let (head, payload) = text
            .split_once(&format!("\n{SEPARATOR}\n"))
            .ok_or_else(|| LltError::Format("missing `---` separator".into()))?;
        let mut version = None;
        let mut checksum = None;
        let mut fields = Vec::new();
        for line in head.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LltError::Format(format!("header line without `=`: {line:?}")))?;
            match k {
                "version" => version = Some(v.to_string()),
                "checksum" => checksum = Some(v.to_string()),
                _ => fields.push((k.to_string(), v.to_string())),
            }
        }
        let version = version.ok_or_else(|| LltError::Format("missing version".into()))?;
        if version != expected_version {
            return Err(LltError::Version {
                expected: expected_version.to_string(),
                found: version,
            });
        }
        Ok(ArtifactHeader {
            version,
            fields,
            payload: payload.to_string(),
            stored_checksum: checksum.ok_or_else(|| LltError::Format("missing checksum".into()))?,
        })
    }
}

pub fn render_law(law: &LinearLaw) -> String {
    let mut fields = vec![
        ("class".to_string(), law.class_tag.name().to_string()),
        ("l".to_string(), law.len().to_string()),
        ("lambda".to_string(), format_real(law.lambda)),
    ];
    fields.push((
        "lambda_next".to_string(),
        law.lambda_next.map(format_real).unwrap_or_else(|| "none".into()),
    ));
    fields.push(("train_rows".to_string(), law.train_rows.to_string()));
    let payload: String = law
        .coefficients
        .iter()
        .map(|w| format!("{}\n", format_real(*w)))
        .collect();
    ArtifactHeader::new(LAW_VERSION, fields, payload).render()
}

pub fn parse_law(text: &str) -> Result<LinearLaw> {
    let header = ArtifactHeader::parse(text, LAW_VERSION)?;
    let class_name = header.get("class")?;
    let class_tag = Label::from_name(class_name)
        .ok_or_else(|| LltError::Format(format!("unknown class {class_name:?}")))?;
    let len: usize = header.get_parsed("l")?;
    let lambda: f64 = header.get_parsed("lambda")?;
    let lambda_next = match header.get("lambda_next")? {
        "none" => None,
        _ => Some(header.get_parsed("lambda_next")?),
    };
    let train_rows: usize = header.get_parsed("train_rows")?;
    let coefficients = header
        .payload
        .lines()
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| LltError::Format(format!("bad coefficient {l:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if coefficients.len() != len {
        return Err(LltError::Format(format!(
            "header declares l={len} but {} coefficients follow",
            coefficients.len()
        )));
    }
    let norm = coefficients.iter().map(|w| w * w).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(LltError::NotUnitNorm { norm });
    }
    header.verify_checksum()?;
    Ok(LinearLaw {
        coefficients,
        lambda,
        lambda_next,
        class_tag,
        train_rows,
    })
}

pub fn save_law(law: &LinearLaw, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_law(law)).map_err(|e| LltError::io(path, e))
}

pub fn load_law(path: impl AsRef<Path>) -> Result<LinearLaw> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| LltError::io(path, e))?;
    parse_law(&text)
}
