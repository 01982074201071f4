//! Spatial feature engineering over point datasets.
//!
//! A [`Spell`] maps each point of a [`PointDataset`] to one value computed
//! against a named reference layer in a [`Catalog`]: the distance to the
//! nearest matching geometry, how many lie within a radius, or how much line
//! length falls inside it. A [`SpellBook`] is an ordered, versioned list of
//! spells that can be shared as JSON and cast onto other data, producing a
//! [`FeatureMatrix`]. Spells can also be compiled to SQL for PostGIS,
//! SpatiaLite or BigQuery.
//!
//! ```
//! use spellcast::{Catalog, PointDataset, Spell, SpellBook};
//! use spellcast::catalog::load_geojson;
//!
//! let pois = load_geojson(br#"{"type":"FeatureCollection","features":[
//!   {"type":"Feature","geometry":{"type":"Point","coordinates":[103.85,1.29]},
//!    "properties":{"fclass":"embassy"}}]}"#, "pois").unwrap();
//! let catalog = Catalog::from_layers([pois]).unwrap();
//! let points = PointDataset::from_csv(b"lon,lat\n103.85,1.30\n", "lon", "lat").unwrap();
//!
//! let book = SpellBook::new(vec![Spell::distance_to_nearest("embassy", "pois").build().unwrap()]);
//! let matrix = book.cast(&points, &catalog).unwrap();
//! let d = matrix.feature("dist_embassy").unwrap().values[0].unwrap();
//! assert!((d - 1111.95).abs() < 0.01);
//! ```

pub mod backends;
pub mod bench;
pub mod catalog;
pub mod dataset;
pub mod geo;
pub mod index;
pub mod matrix;
pub mod spellbook;
pub mod spells;

use thiserror::Error;

pub use backends::{compile, parse_dburl, CompiledQuery, ConnectionSpec, Dialect};
pub use catalog::{parse_filter, Catalog, ReferenceLayer, TagFilter};
pub use dataset::PointDataset;
pub use geo::{haversine_m, BoundingBox, Coordinate, Polyline};
pub use index::{GeometryKind, IndexedLayer};
pub use matrix::{FeatureColumn, FeatureMatrix};
pub use spellbook::SpellBook;
pub use spells::{Spell, SpellKind};

/// Any error the library reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geo(#[from] geo::GeoError),
    #[error(transparent)]
    Filter(#[from] catalog::FilterError),
    #[error(transparent)]
    Ingest(#[from] catalog::IngestError),
    #[error(transparent)]
    Catalog(#[from] catalog::CatalogError),
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Spell(#[from] spells::SpellError),
    #[error(transparent)]
    Cast(#[from] spells::CastError),
    #[error(transparent)]
    SpellBook(#[from] spellbook::SpellBookError),
    #[error(transparent)]
    DbUrl(#[from] backends::DbUrlError),
    #[error(transparent)]
    Compile(#[from] backends::CompileError),
}
