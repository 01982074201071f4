//! Reference layers: ingestion, tag filters, and the name → layer catalog.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::index::{Entry, GeometryKind, IndexedLayer};

pub mod filter;
pub mod ingest;

pub use filter::{eval_filter, parse_filter, FilterError, TagFilter, SHORTHAND_KEY};
pub use ingest::{load_csv, load_geojson, CsvLayerConfig, IngestError};

/// Attribute map of a reference geometry. Ordered so iteration is stable.
pub type Tags = BTreeMap<String, String>;

/// A named, single-kind set of tagged geometries as read from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceLayer {
    pub name: String,
    pub kind: GeometryKind,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("layer '{0}' is already registered")]
    DuplicateLayer(String),
    #[error("unknown layer '{name}' (available: {})", list_or_none(.available))]
    UnknownLayer { name: String, available: Vec<String> },
}

fn list_or_none(names: &[String]) -> String {
    if names.is_empty() {
        "none".to_string()
    } else {
        names.join(", ")
    }
}

#[derive(Debug)]
pub struct CatalogLayer {
    pub kind: GeometryKind,
    pub index: IndexedLayer,
}

/// Sealed set of indexed layers, looked up by exact name.
#[derive(Debug, Default)]
pub struct Catalog {
    layers: BTreeMap<String, CatalogLayer>,
}

#[derive(Debug, Default)]
pub struct CatalogBuilder {
    layers: BTreeMap<String, CatalogLayer>,
}

impl CatalogBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, layer: ReferenceLayer) -> Result<&mut Self, CatalogError> {
        if self.layers.contains_key(&layer.name) {
            return Err(CatalogError::DuplicateLayer(layer.name));
        }
        let index = IndexedLayer::build(layer.entries);
        self.layers.insert(layer.name, CatalogLayer { kind: layer.kind, index });
        Ok(self)
    }

    pub fn seal(self) -> Catalog {
        Catalog { layers: self.layers }
    }
}

impl Catalog {
    pub fn builder() -> CatalogBuilder {
        CatalogBuilder::new()
    }

    pub fn from_layers(layers: impl IntoIterator<Item = ReferenceLayer>) -> Result<Self, CatalogError> {
        let mut builder = CatalogBuilder::new();
        for layer in layers {
            builder.add(layer)?;
        }
        Ok(builder.seal())
    }

    pub fn get(&self, name: &str) -> Result<&CatalogLayer, CatalogError> {
        self.layers.get(name).ok_or_else(|| CatalogError::UnknownLayer {
            name: name.to_string(),
            available: self.names().map(str::to_string).collect(),
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.layers.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}
