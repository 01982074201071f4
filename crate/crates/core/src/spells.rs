//! Spells: declarative feature functions mapping a coordinate to one value,
//! evaluated against a catalog layer.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::catalog::{parse_filter, Catalog, CatalogError, FilterError, TagFilter};
use crate::dataset::PointDataset;
use crate::geo::{clipped_length_in_radius_m, Coordinate};
use crate::index::{Geometry, GeometryKind, IndexedLayer, QueryStats};
use crate::matrix::{FeatureColumn, FeatureMatrix, ValueKind};
use crate::spellbook::SpellBook;

/// Search cap used by `DistanceToNearest` unless one is given.
pub const DEFAULT_CAP_M: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpellKind {
    /// Distance to the closest matching geometry within `cap_m`, else null.
    DistanceToNearest { cap_m: f64 },
    /// Number of matching geometries within `radius_m`.
    NumberOf { radius_m: f64 },
    /// Total length of matching lines inside the `radius_m` disc.
    LengthOf { radius_m: f64 },
}

impl SpellKind {
    pub const NAMES: [&'static str; 3] = ["DistanceToNearest", "NumberOf", "LengthOf"];

    pub fn name(&self) -> &'static str {
        match self {
            SpellKind::DistanceToNearest { .. } => "DistanceToNearest",
            SpellKind::NumberOf { .. } => "NumberOf",
            SpellKind::LengthOf { .. } => "LengthOf",
        }
    }

    /// The cap or radius, in meters.
    pub fn extent_m(&self) -> f64 {
        match *self {
            SpellKind::DistanceToNearest { cap_m } => cap_m,
            SpellKind::NumberOf { radius_m } | SpellKind::LengthOf { radius_m } => radius_m,
        }
    }

    /// Name of the extent parameter in serialized form.
    pub fn param_name(&self) -> &'static str {
        match self {
            SpellKind::DistanceToNearest { .. } => "cap",
            _ => "radius",
        }
    }

    /// Builds a kind from its name and extent.
    pub fn from_parts(name: &str, extent_m: f64) -> Result<Self, SpellError> {
        match name {
            "DistanceToNearest" => Ok(SpellKind::DistanceToNearest { cap_m: extent_m }),
            "NumberOf" => Ok(SpellKind::NumberOf { radius_m: extent_m }),
            "LengthOf" => Ok(SpellKind::LengthOf { radius_m: extent_m }),
            other => Err(SpellError::UnknownKind(other.to_string())),
        }
    }

    fn name_prefix(&self) -> &'static str {
        match self {
            SpellKind::DistanceToNearest { .. } => "dist_",
            SpellKind::NumberOf { .. } => "num_",
            SpellKind::LengthOf { .. } => "len_",
        }
    }

    pub fn value_kind(&self) -> ValueKind {
        match self {
            SpellKind::NumberOf { .. } => ValueKind::Count,
            _ => ValueKind::Meters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpellError {
    #[error("unknown spell kind '{0}' (supported: DistanceToNearest, NumberOf, LengthOf)")]
    UnknownKind(String),
    #[error("filter '{0}' does not name a single tag; give the spell an explicit feature_name")]
    NoDefaultName(String),
    #[error("feature_name '{0}' must match [A-Za-z_][A-Za-z0-9_]*")]
    InvalidName(String),
    #[error("{param} must be positive and finite, got {value}")]
    InvalidExtent { param: &'static str, value: f64 },
    #[error("layer name is empty")]
    EmptyLayer,
    #[error("invalid filter: {0}")]
    Filter(#[from] FilterError),
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `dist_`/`num_`/`len_` followed by the tag value of a single-tag filter.
pub fn default_feature_name(kind: &SpellKind, filter: &TagFilter) -> Result<String, SpellError> {
    let name = filter.single_tag().map(|tag| format!("{}{tag}", kind.name_prefix())).filter(|name| is_identifier(name));
    name.ok_or_else(|| SpellError::NoDefaultName(filter.to_string()))
}

/// One feature function bound to a catalog layer by name.
#[derive(Debug, Clone, PartialEq)]
pub struct Spell {
    pub kind: SpellKind,
    pub filter: TagFilter,
    pub layer: String,
    pub feature_name: String,
}

impl Spell {
    pub fn builder(kind: SpellKind, filter: TagFilter, layer: impl Into<String>) -> SpellBuilder {
        SpellBuilder { kind, filter: Ok(filter), layer: layer.into(), feature_name: None }
    }

    /// `DistanceToNearest` with the default 10 km cap.
    pub fn distance_to_nearest(filter: &str, layer: impl Into<String>) -> SpellBuilder {
        SpellBuilder::parsed(SpellKind::DistanceToNearest { cap_m: DEFAULT_CAP_M }, filter, layer)
    }

    pub fn number_of(filter: &str, layer: impl Into<String>, radius_m: f64) -> SpellBuilder {
        SpellBuilder::parsed(SpellKind::NumberOf { radius_m }, filter, layer)
    }

    pub fn length_of(filter: &str, layer: impl Into<String>, radius_m: f64) -> SpellBuilder {
        SpellBuilder::parsed(SpellKind::LengthOf { radius_m }, filter, layer)
    }

    /// Every invariant violation, as messages.
    pub fn problems(&self) -> Vec<SpellError> {
        let mut out = Vec::new();
        if !is_identifier(&self.feature_name) {
            out.push(SpellError::InvalidName(self.feature_name.clone()));
        }
        let extent = self.kind.extent_m();
        if !(extent.is_finite() && extent > 0.0) {
            out.push(SpellError::InvalidExtent { param: self.kind.param_name(), value: extent });
        }
        if self.layer.is_empty() {
            out.push(SpellError::EmptyLayer);
        }
        out
    }

    /// Evaluates the spell over every row of `ds`.
    pub fn cast(&self, ds: &PointDataset, cat: &Catalog) -> Result<FeatureColumn, CastError> {
        cast(self, ds, cat)
    }
}

#[derive(Debug, Clone)]
pub struct SpellBuilder {
    kind: SpellKind,
    filter: Result<TagFilter, FilterError>,
    layer: String,
    feature_name: Option<String>,
}

impl SpellBuilder {
    fn parsed(kind: SpellKind, filter: &str, layer: impl Into<String>) -> Self {
        Self { kind, filter: parse_filter(filter), layer: layer.into(), feature_name: None }
    }

    pub fn feature_name(mut self, name: impl Into<String>) -> Self {
        self.feature_name = Some(name.into());
        self
    }

    /// Overrides the cap or radius.
    pub fn extent_m(mut self, meters: f64) -> Self {
        self.kind = match self.kind {
            SpellKind::DistanceToNearest { .. } => SpellKind::DistanceToNearest { cap_m: meters },
            SpellKind::NumberOf { .. } => SpellKind::NumberOf { radius_m: meters },
            SpellKind::LengthOf { .. } => SpellKind::LengthOf { radius_m: meters },
        };
        self
    }

    pub fn build(self) -> Result<Spell, SpellError> {
        let filter = self.filter?;
        let feature_name = match self.feature_name {
            Some(name) => name,
            None => default_feature_name(&self.kind, &filter)?,
        };
        let spell = Spell { kind: self.kind, filter, layer: self.layer, feature_name };
        match spell.problems().into_iter().next() {
            Some(problem) => Err(problem),
            None => Ok(spell),
        }
    }
}

impl fmt::Display for Spell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({}, layer={}, {}={}) -> {}",
            self.kind.name(),
            self.filter,
            self.layer,
            self.kind.param_name(),
            self.kind.extent_m(),
            self.feature_name
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CastError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("spell '{feature}': {kind} needs a LineString layer but '{layer}' holds {}", .found.name())]
    KindMismatch { feature: String, kind: &'static str, layer: String, found: GeometryKind },
    #[error("spell '{feature}': {source}")]
    InvalidSpell { feature: String, source: SpellError },
    #[error("duplicate feature names: {}", .0.join(", "))]
    DuplicateNames(Vec<String>),
    #[error("feature name '{0}' collides with a dataset column")]
    ColumnClash(String),
}

/// Work done by a cast, for reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CastStats {
    pub queries: usize,
    pub candidates: usize,
    pub peak_candidates: usize,
}

impl CastStats {
    fn absorb(&mut self, other: CastStats) {
        self.queries += other.queries;
        self.candidates += other.candidates;
        self.peak_candidates = self.peak_candidates.max(other.peak_candidates);
    }
}

/// One spell at one point.
fn evaluate(spell: &Spell, layer: &IndexedLayer, p: Coordinate, stats: &mut QueryStats) -> Option<f64> {
    match spell.kind {
        SpellKind::DistanceToNearest { cap_m } => layer.nearest_stats(p, cap_m, &spell.filter, stats).map(|(_, d)| d),
        SpellKind::NumberOf { radius_m } => {
            Some(layer.within_radius_stats(p, radius_m, &spell.filter, stats).len() as f64)
        }
        SpellKind::LengthOf { radius_m } => {
            let total = layer
                .candidates(p, radius_m, &spell.filter, stats)
                .into_iter()
                .map(|id| match &layer.entry(id).geometry {
                    Geometry::Polyline(line) => clipped_length_in_radius_m(line, p, radius_m),
                    Geometry::Point(_) => 0.0,
                })
                .fold(0.0, |acc, len| acc + len);
            Some(total)
        }
    }
}

fn resolve<'c>(spell: &Spell, cat: &'c Catalog) -> Result<&'c IndexedLayer, CastError> {
    if let Some(source) = spell.problems().into_iter().next() {
        return Err(CastError::InvalidSpell { feature: spell.feature_name.clone(), source });
    }
    let layer = cat.get(&spell.layer)?;
    if matches!(spell.kind, SpellKind::LengthOf { .. }) && layer.kind != GeometryKind::Polyline {
        return Err(CastError::KindMismatch {
            feature: spell.feature_name.clone(),
            kind: spell.kind.name(),
            layer: spell.layer.clone(),
            found: layer.kind,
        });
    }
    Ok(&layer.index)
}

/// Evaluates `spell` at every row, in row order. Rows are processed on the
/// current rayon pool; the output does not depend on its size.
pub fn cast(spell: &Spell, ds: &PointDataset, cat: &Catalog) -> Result<FeatureColumn, CastError> {
    cast_with_stats(spell, ds, cat).map(|(col, _)| col)
}

pub fn cast_with_stats(
    spell: &Spell,
    ds: &PointDataset,
    cat: &Catalog,
) -> Result<(FeatureColumn, CastStats), CastError> {
    let layer = resolve(spell, cat)?;
    let evaluated: Vec<(Option<f64>, usize)> = ds
        .rows
        .par_iter()
        .map(|row| {
            let mut qs = QueryStats::default();
            let v = evaluate(spell, layer, row.coord, &mut qs);
            (v, qs.candidates)
        })
        .collect();
    let mut stats = CastStats { queries: evaluated.len(), ..Default::default() };
    let values = evaluated
        .into_iter()
        .map(|(v, c)| {
            stats.candidates += c;
            stats.peak_candidates = stats.peak_candidates.max(c);
            v
        })
        .collect();
    let column = FeatureColumn { name: spell.feature_name.clone(), kind: spell.kind.value_kind(), values };
    Ok((column, stats))
}

/// Casts every spell of `book` and appends the columns, in book order, to the
/// dataset's own columns.
pub fn cast_all(book: &SpellBook, ds: &PointDataset, cat: &Catalog) -> Result<FeatureMatrix, CastError> {
    cast_all_with_stats(book, ds, cat).map(|(m, _)| m)
}

pub fn cast_all_with_stats(
    book: &SpellBook,
    ds: &PointDataset,
    cat: &Catalog,
) -> Result<(FeatureMatrix, CastStats), CastError> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for spell in &book.spells {
        *counts.entry(spell.feature_name.as_str()).or_default() += 1;
    }
    let dups: Vec<String> = counts.iter().filter(|(_, n)| **n > 1).map(|(k, _)| k.to_string()).collect();
    if !dups.is_empty() {
        return Err(CastError::DuplicateNames(dups));
    }
    let taken: HashSet<&str> = ds.column_names().into_iter().collect();
    if let Some(clash) = book.spells.iter().find(|s| taken.contains(s.feature_name.as_str())) {
        return Err(CastError::ColumnClash(clash.feature_name.clone()));
    }
    // resolve everything up front so a bad spell fails before any work
    for spell in &book.spells {
        resolve(spell, cat)?;
    }
    let mut stats = CastStats::default();
    let mut features = Vec::with_capacity(book.spells.len());
    for spell in &book.spells {
        let (col, s) = cast_with_stats(spell, ds, cat)?;
        stats.absorb(s);
        features.push(col);
    }
    Ok((FeatureMatrix { dataset: ds.clone(), features }, stats))
}
