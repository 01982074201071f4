//! Versioned JSON documents holding an ordered list of spells.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "author": "...",
//!   "description": "...",
//!   "spells": [
//!     {
//!       "kind": "DistanceToNearest",
//!       "filter": "fclass=embassy",
//!       "layer": "pois",
//!       "feature_name": "dist_embassy",
//!       "params": { "cap": 10000.0 }
//!     }
//!   ]
//! }
//! ```
//!
//! Serialization is canonical: fixed key order, two-space indentation, a
//! trailing newline, and filters in their canonical printed form. Unknown
//! keys are rejected on read. Layers are bound by name only; where a layer
//! lives is decided by whoever casts or compiles the book.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::catalog::{parse_filter, Catalog, FilterError};
use crate::dataset::PointDataset;
use crate::matrix::FeatureMatrix;
use crate::spells::{cast_all, CastError, Spell, SpellError, SpellKind};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpellBook {
    pub author: String,
    pub description: String,
    pub spells: Vec<Spell>,
}

/// A problem with a book, tied to the spells involved (none for book-level
/// problems).
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub spells: Vec<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.spells.as_slice() {
            [] => write!(f, "{}", self.message),
            [one] => write!(f, "spell {one}: {}", self.message),
            many => {
                let list: Vec<String> = many.iter().map(|i| i.to_string()).collect();
                write!(f, "spells {}: {}", list.join(", "), self.message)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpellBookError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("spellbook must be a JSON object")]
    NotAnObject,
    #[error("missing schema_version")]
    MissingVersion,
    #[error("unsupported schema_version {0}")]
    UnsupportedVersion(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("spell {index}: {source}")]
    Spell { index: usize, source: SpellError },
    #[error("spell {index}: invalid filter '{filter}': {source}")]
    Filter { index: usize, filter: String, source: FilterError },
    #[error("spell {index}: params must be exactly {{\"{expected}\": <meters>}}")]
    Params { index: usize, expected: &'static str },
    #[error("invalid spellbook: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

fn join_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(Diagnostic::to_string).collect::<Vec<_>>().join("; ")
}

impl SpellBookError {
    /// The error as diagnostics, one per line of output.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            SpellBookError::Invalid(d) => d.clone(),
            SpellBookError::Spell { index, source } => {
                vec![Diagnostic { spells: vec![*index], message: source.to_string() }]
            }
            other => vec![Diagnostic { spells: vec![], message: other.to_string() }],
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BookDoc {
    schema_version: u64,
    #[serde(default)]
    author: String,
    #[serde(default)]
    description: String,
    spells: Vec<SpellDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpellDoc {
    kind: String,
    filter: String,
    layer: String,
    feature_name: String,
    params: BTreeMap<String, f64>,
}

impl SpellBook {
    pub fn new(spells: Vec<Spell>) -> Self {
        Self { spells, ..Default::default() }
    }

    pub fn with_metadata(mut self, author: impl Into<String>, description: impl Into<String>) -> Self {
        self.author = author.into();
        self.description = description.into();
        self
    }

    /// Builder-style append.
    pub fn push(&mut self, spell: Spell) -> &mut Self {
        self.spells.push(spell);
        self
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        validate(self)
    }

    pub fn to_json(&self) -> Result<Vec<u8>, SpellBookError> {
        to_json(self)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, SpellBookError> {
        from_json(bytes)
    }

    pub fn cast(&self, ds: &PointDataset, cat: &Catalog) -> Result<FeatureMatrix, CastError> {
        cast_all(self, ds, cat)
    }
}

/// Empty iff every spell satisfies its invariants and feature names are
/// unique.
pub fn validate(book: &SpellBook) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut by_name: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, spell) in book.spells.iter().enumerate() {
        for problem in spell.problems() {
            out.push(Diagnostic { spells: vec![i], message: problem.to_string() });
        }
        by_name.entry(spell.feature_name.as_str()).or_default().push(i);
    }
    let mut dups: Vec<(&str, Vec<usize>)> = by_name.into_iter().filter(|(_, ix)| ix.len() > 1).collect();
    dups.sort_by_key(|(_, ix)| ix[0]);
    for (name, indices) in dups {
        out.push(Diagnostic { spells: indices, message: format!("duplicate feature_name \"{name}\"") });
    }
    out
}

/// Canonical bytes of a valid book.
pub fn to_json(book: &SpellBook) -> Result<Vec<u8>, SpellBookError> {
    let diagnostics = validate(book);
    if !diagnostics.is_empty() {
        return Err(SpellBookError::Invalid(diagnostics));
    }
    let doc = BookDoc {
        schema_version: SCHEMA_VERSION,
        author: book.author.clone(),
        description: book.description.clone(),
        spells: book
            .spells
            .iter()
            .map(|s| SpellDoc {
                kind: s.kind.name().to_string(),
                filter: s.filter.to_string(),
                layer: s.layer.clone(),
                feature_name: s.feature_name.clone(),
                params: [(s.kind.param_name().to_string(), s.kind.extent_m())].into_iter().collect(),
            })
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("spellbook documents always serialize");
    bytes.push(b'\n');
    Ok(bytes)
}

/// Parses and validates a book.
pub fn from_json(bytes: &[u8]) -> Result<SpellBook, SpellBookError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| SpellBookError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or(SpellBookError::NotAnObject)?;
    // the version gates everything else about the document's shape
    match obj.get("schema_version") {
        None => return Err(SpellBookError::MissingVersion),
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(SpellBookError::UnsupportedVersion(v.to_string())),
    }
    let doc: BookDoc = serde_json::from_value(value).map_err(|e| SpellBookError::Schema(e.to_string()))?;

    let mut spells = Vec::with_capacity(doc.spells.len());
    for (index, s) in doc.spells.into_iter().enumerate() {
        if !SpellKind::NAMES.contains(&s.kind.as_str()) {
            return Err(SpellBookError::Spell { index, source: SpellError::UnknownKind(s.kind) });
        }
        let expected = if s.kind == "DistanceToNearest" { "cap" } else { "radius" };
        let extent = match (s.params.len(), s.params.get(expected)) {
            (1, Some(v)) => *v,
            _ => return Err(SpellBookError::Params { index, expected }),
        };
        let kind = SpellKind::from_parts(&s.kind, extent).map_err(|source| SpellBookError::Spell { index, source })?;
        let filter = parse_filter(&s.filter).map_err(|source| SpellBookError::Filter {
            index,
            filter: s.filter.clone(),
            source,
        })?;
        spells.push(Spell { kind, filter, layer: s.layer, feature_name: s.feature_name });
    }
    let book = SpellBook { author: doc.author, description: doc.description, spells };
    let diagnostics = validate(&book);
    if !diagnostics.is_empty() {
        return Err(SpellBookError::Invalid(diagnostics));
    }
    Ok(book)
}
