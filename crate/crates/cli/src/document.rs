//! Channel documents and the small auxiliary file formats.
//!
//! Complex entries are `[re, im]` pairs. Numbers are written with the
//! shortest representation that parses back to the same `f64`, so
//! `parse(emit(form))` reproduces every entry bit for bit.

use std::collections::BTreeMap;

use ebchan::{
    ChannelError, ComplexMatrix, DensityMatrix, HolevoForm, HolevoPair, StochasticMatrix,
    Tolerances, C64,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: &str = "1";

/// `rows` of `[re, im]` entries.
pub type MatrixLiteral = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairLiteral {
    #[serde(rename = "F")]
    pub f: MatrixLiteral,
    #[serde(rename = "R")]
    pub r: MatrixLiteral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDocument {
    pub format_version: String,
    pub n: usize,
    pub pairs: Vec<PairLiteral>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticFile {
    pub r: usize,
    pub entries: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub n: usize,
    pub rho: MatrixLiteral,
}

/// Rank-one Kraus operators `V_k`, each an `n x n` literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausFile {
    pub n: usize,
    pub kraus: Vec<MatrixLiteral>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocumentError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("{0}")]
    Validation(#[from] ValidationError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("unsupported format_version {0:?}, expected \"1\"")]
    FormatVersion(String),
    #[error("{what}: {detail}")]
    Shape {
        what: String,
        pair: Option<usize>,
        detail: String,
    },
    #[error("ZeroEffect: pair {pair}: {source}")]
    ZeroEffect { pair: usize, source: ChannelError },
    #[error("NotPOVM{}: {source}", pair_suffix(*.pair))]
    NotPovm {
        pair: Option<usize>,
        source: ChannelError,
    },
    #[error("NotDensity: pair {pair}: {source}")]
    NotDensity { pair: usize, source: ChannelError },
    #[error("{0}")]
    Other(ChannelError),
}

fn pair_suffix(pair: Option<usize>) -> String {
    pair.map(|k| format!(": pair {k}")).unwrap_or_default()
}

impl ValidationError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::FormatVersion(_) => "FormatVersion",
            Self::Shape { .. } => "Shape",
            Self::ZeroEffect { .. } => "ZeroEffect",
            Self::NotPovm { .. } => "NotPOVM",
            Self::NotDensity { .. } => "NotDensity",
            Self::Other(_) => "Other",
        }
    }

    pub fn pair(&self) -> Option<usize> {
        match self {
            Self::Shape { pair, .. } | Self::NotPovm { pair, .. } => *pair,
            Self::ZeroEffect { pair, .. } | Self::NotDensity { pair, .. } => Some(*pair),
            Self::FormatVersion(_) | Self::Other(_) => None,
        }
    }
}

impl From<ChannelError> for ValidationError {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::ZeroEffect { pair } => Self::ZeroEffect { pair, source: e },
            ChannelError::NotPovm { pair, .. } => Self::NotPovm { pair, source: e },
            ChannelError::NotDensity { pair, .. } => Self::NotDensity { pair, source: e },
            other => Self::Other(other),
        }
    }
}

/// Deserializes JSON, reporting failures as a byte offset into `text`.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, DocumentError> {
    serde_json::from_str(text).map_err(|e| DocumentError::Syntax {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })
}

/// serde_json reports 1-based lines and byte columns.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

pub fn matrix_from_literal(
    lit: &MatrixLiteral,
    n: usize,
    what: &str,
    pair: Option<usize>,
) -> Result<ComplexMatrix, ValidationError> {
    let shape_err = |detail: String| ValidationError::Shape {
        what: what.to_string(),
        pair,
        detail,
    };
    if lit.len() != n || lit.iter().any(|row| row.len() != n) {
        let cols: Vec<usize> = lit.iter().map(Vec::len).collect();
        return Err(shape_err(format!(
            "expected {n}x{n}, got {} rows with lengths {cols:?}",
            lit.len()
        )));
    }
    let data = lit
        .iter()
        .flatten()
        .map(|&[re, im]| C64::new(re, im))
        .collect();
    ComplexMatrix::new(n, n, data).map_err(|e| shape_err(e.to_string()))
}

pub fn matrix_to_literal(m: &ComplexMatrix) -> MatrixLiteral {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

impl ChannelDocument {
    pub fn from_form(form: &HolevoForm, metadata: Option<BTreeMap<String, String>>) -> Self {
        Self {
            format_version: FORMAT_VERSION.to_string(),
            n: form.n(),
            pairs: form
                .pairs()
                .iter()
                .map(|p| PairLiteral {
                    f: matrix_to_literal(&p.effect),
                    r: matrix_to_literal(&p.state),
                })
                .collect(),
            metadata,
        }
    }

    pub fn to_form(&self, tol: &Tolerances) -> Result<HolevoForm, ValidationError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ValidationError::FormatVersion(self.format_version.clone()));
        }
        if self.n == 0 {
            return Err(ValidationError::Shape {
                what: "n".into(),
                pair: None,
                detail: "must be positive".into(),
            });
        }
        let pairs = self
            .pairs
            .iter()
            .enumerate()
            .map(|(k, p)| {
                Ok(HolevoPair::new(
                    matrix_from_literal(&p.f, self.n, &format!("F of pair {k}"), Some(k))?,
                    matrix_from_literal(&p.r, self.n, &format!("R of pair {k}"), Some(k))?,
                ))
            })
            .collect::<Result<Vec<_>, ValidationError>>()?;
        Ok(HolevoForm::new(self.n, pairs, tol)?)
    }

    /// Pretty JSON with one matrix row per line.
    pub fn emit(&self) -> String {
        let matrix = |m: &MatrixLiteral| {
            let rows: Vec<String> = m
                .iter()
                .map(|row| format!("        {}", compact(row)))
                .collect();
            format!("[\n{}\n      ]", rows.join(",\n"))
        };
        let pairs: Vec<String> = self
            .pairs
            .iter()
            .map(|p| {
                format!(
                    "    {{\n      \"F\": {},\n      \"R\": {}\n    }}",
                    matrix(&p.f),
                    matrix(&p.r)
                )
            })
            .collect();
        let mut text = format!(
            "{{\n  \"format_version\": {},\n  \"n\": {},\n  \"pairs\": [\n{}\n  ]",
            compact(&self.format_version),
            self.n,
            pairs.join(",\n")
        );
        if let Some(meta) = &self.metadata {
            text += &format!(",\n  \"metadata\": {}", compact(meta));
        }
        text += "\n}\n";
        text
    }
}

fn compact<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("documents always serialize")
}

pub fn parse_document(text: &str) -> Result<ChannelDocument, DocumentError> {
    from_json(text)
}

/// Parses and validates a channel document.
pub fn parse_channel_document(text: &str, tol: &Tolerances) -> Result<HolevoForm, DocumentError> {
    Ok(parse_document(text)?.to_form(tol)?)
}

pub fn emit_channel_document(form: &HolevoForm) -> String {
    ChannelDocument::from_form(form, None).emit()
}

impl StochasticFile {
    pub fn to_matrix(&self, tol: &Tolerances) -> Result<StochasticMatrix, String> {
        if self.entries.len() != self.r || self.entries.iter().any(|row| row.len() != self.r) {
            return Err(format!("entries must be {0}x{0}", self.r));
        }
        StochasticMatrix::from_rows(&self.entries, tol).map_err(|e| e.to_string())
    }
}

impl StateFile {
    pub fn to_state(&self, tol: &Tolerances) -> Result<DensityMatrix, String> {
        let m = matrix_from_literal(&self.rho, self.n, "rho", None).map_err(|e| e.to_string())?;
        DensityMatrix::new(m, tol).map_err(|e| e.to_string())
    }
}

impl KrausFile {
    pub fn to_form(&self, tol: &Tolerances) -> Result<HolevoForm, String> {
        let ops = self
            .kraus
            .iter()
            .enumerate()
            .map(|(k, lit)| matrix_from_literal(lit, self.n, &format!("Kraus operator {k}"), None))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        HolevoForm::from_rank_one_kraus(&ops, tol).map_err(|e| e.to_string())
    }
}
