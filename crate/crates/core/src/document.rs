//! Versioned JSON documents for repositories (`*.refrepo.json`) and models
//! (`*.refmodel.json`).
//!
//! Both carry a top-level `schema_version`. Output is canonical: pretty
//! printed, everything sorted by id, trailing newline. Saving the same value
//! twice yields the same bytes.

use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Model;

pub const SCHEMA_VERSION: u32 = 1;

/// Malformed document, positioned at the offending line and column (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        // serde_json appends " at line L column C" to Display; keep the bare message
        let full = e.to_string();
        let message = match full.rfind(" at line ") {
            Some(i) => full[..i].to_string(),
            None => full,
        };
        ParseError {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaVersionMismatch { found: u64, expected: u32 },
}

#[derive(Deserialize)]
struct Header {
    schema_version: Option<u64>,
}

/// Parses `text` after checking its schema version.
pub(crate) fn parse_versioned<T: DeserializeOwned>(text: &str) -> Result<T, DocumentError> {
    let header: Header = serde_json::from_str(text).map_err(ParseError::from)?;
    match header.schema_version {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(found) => {
            return Err(DocumentError::SchemaVersionMismatch {
                found,
                expected: SCHEMA_VERSION,
            })
        }
        None => {
            return Err(ParseError {
                line: 1,
                column: 1,
                message: "missing field `schema_version`".into(),
            }
            .into())
        }
    }
    Ok(serde_json::from_str(text).map_err(ParseError::from)?)
}

pub(crate) fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("document values are always serializable");
    s.push('\n');
    s
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    schema_version: u32,
    model: Model,
}

#[derive(Serialize)]
struct ModelDocumentRef<'a> {
    schema_version: u32,
    model: &'a Model,
}

pub fn model_to_json(model: &Model) -> String {
    to_canonical_json(&ModelDocumentRef {
        schema_version: SCHEMA_VERSION,
        model,
    })
}

/// Loads a model document. Block-local invariants are enforced while
/// parsing; cross-references (connection and trace endpoints) are left for
/// [`crate::composition::validate_configuration`] to report.
pub fn model_from_json(text: &str) -> Result<Model, DocumentError> {
    parse_versioned::<ModelDocument>(text).map(|d| d.model)
}
