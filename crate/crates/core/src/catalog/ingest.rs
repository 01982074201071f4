//! Strict readers for GeoJSON and CSV reference layers. Any bad record fails
//! the whole file with its location.

use serde_json::Value;
use thiserror::Error;

use super::{ReferenceLayer, Tags};
use crate::geo::{Coordinate, GeoError, Polyline, MAX_SEGMENT_M};
use crate::index::{Entry, Geometry, GeometryKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("malformed JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("invalid GeoJSON: {0}")]
    Schema(String),
    #[error("feature {index}: {message}")]
    Feature { index: usize, message: String },
    #[error("mixed geometry kinds: {} and {} (first {} at feature {index})", .first.name(), .second.name(), .second.name())]
    MixedKinds { first: GeometryKind, second: GeometryKind, index: usize },
    #[error("feature {index}: invalid coordinate: {source}")]
    FeatureCoordinate { index: usize, source: GeoError },
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("row {row}: invalid coordinate: {source}")]
    RowCoordinate { row: usize, source: GeoError },
    #[error("malformed CSV: {0}")]
    Csv(String),
}

/// Byte offset of a 1-based line/column position.
fn byte_offset(src: &[u8], line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, chunk) in src.split(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(src.len());
        }
        offset += chunk.len() + 1;
    }
    src.len()
}

fn feature_err(index: usize, message: impl Into<String>) -> IngestError {
    IngestError::Feature { index, message: message.into() }
}

fn position(value: &Value, index: usize) -> Result<Coordinate, IngestError> {
    let arr = value
        .as_array()
        .filter(|a| a.len() == 2 || a.len() == 3)
        .ok_or_else(|| feature_err(index, "position must be an array of 2 or 3 numbers"))?;
    let num = |v: &Value| v.as_f64().ok_or_else(|| feature_err(index, "position values must be numbers"));
    let (lon, lat) = (num(&arr[0])?, num(&arr[1])?);
    if let Some(z) = arr.get(2) {
        num(z)?;
    }
    Coordinate::new(lon, lat).map_err(|source| IngestError::FeatureCoordinate { index, source })
}

fn properties(value: Option<&Value>, index: usize) -> Result<Tags, IngestError> {
    let mut tags = Tags::new();
    let map = match value {
        None | Some(Value::Null) => return Ok(tags),
        Some(Value::Object(map)) => map,
        Some(_) => return Err(feature_err(index, "properties must be an object or null")),
    };
    for (key, v) in map {
        let text = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Null | Value::Array(_) | Value::Object(_) => continue,
        };
        if key.is_empty() {
            return Err(feature_err(index, "empty property name"));
        }
        tags.insert(key.clone(), text);
    }
    Ok(tags)
}

fn geometry(value: Option<&Value>, index: usize) -> Result<Geometry, IngestError> {
    let obj = value.and_then(Value::as_object).ok_or_else(|| feature_err(index, "missing geometry"))?;
    let kind = obj.get("type").and_then(Value::as_str).unwrap_or("");
    let coords = obj.get("coordinates").ok_or_else(|| feature_err(index, "geometry has no coordinates"))?;
    match kind {
        "Point" => Ok(Geometry::Point(position(coords, index)?)),
        "LineString" => {
            let vertices = coords
                .as_array()
                .ok_or_else(|| feature_err(index, "LineString coordinates must be an array"))?
                .iter()
                .map(|p| position(p, index))
                .collect::<Result<Vec<_>, _>>()?;
            let line = Polyline::new(vertices).map_err(|e| feature_err(index, e.to_string()))?;
            Ok(Geometry::Polyline(line.split_long_segments(MAX_SEGMENT_M)))
        }
        other => Err(feature_err(index, format!("unsupported geometry type '{other}'"))),
    }
}

/// Reads an RFC 7946 FeatureCollection of Point or LineString features.
/// LineString segments over 50 km are split.
pub fn load_geojson(bytes: &[u8], layer_name: &str) -> Result<ReferenceLayer, IngestError> {
    let doc: Value = serde_json::from_slice(bytes)
        .map_err(|e| IngestError::Json { offset: byte_offset(bytes, e.line(), e.column()), message: e.to_string() })?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::Schema("top-level object must be a FeatureCollection".into()));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::Schema("FeatureCollection has no features array".into()))?;

    let mut kind: Option<GeometryKind> = None;
    let mut entries = Vec::with_capacity(features.len());
    for (index, feature) in features.iter().enumerate() {
        if feature.get("type").and_then(Value::as_str) != Some("Feature") {
            return Err(feature_err(index, "expected an object with type \"Feature\""));
        }
        let geometry = geometry(feature.get("geometry"), index)?;
        match kind {
            None => kind = Some(geometry.kind()),
            Some(first) if first != geometry.kind() => {
                return Err(IngestError::MixedKinds { first, second: geometry.kind(), index });
            }
            Some(_) => {}
        }
        let tags = properties(feature.get("properties"), index)?;
        entries.push(Entry { geometry, tags });
    }
    Ok(ReferenceLayer { name: layer_name.to_string(), kind: kind.unwrap_or(GeometryKind::Point), entries })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvLayerConfig {
    pub lon_col: String,
    pub lat_col: String,
    /// Columns copied into tags; `None` takes every other column.
    pub tag_cols: Option<Vec<String>>,
}

impl Default for CsvLayerConfig {
    fn default() -> Self {
        Self { lon_col: "lon".into(), lat_col: "lat".into(), tag_cols: None }
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, IngestError> {
    headers.iter().position(|h| h == name).ok_or_else(|| IngestError::MissingColumn(name.to_string()))
}

/// Reads a headed CSV of points. Rows are numbered from 1, not counting the
/// header. Empty tag cells are left out of the entry's tags.
pub fn load_csv(bytes: &[u8], layer_name: &str, config: &CsvLayerConfig) -> Result<ReferenceLayer, IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers = reader.headers().map_err(|e| IngestError::Csv(e.to_string()))?.clone();
    let lon_idx = column(&headers, &config.lon_col)?;
    let lat_idx = column(&headers, &config.lat_col)?;
    let tag_idx: Vec<(usize, String)> = match &config.tag_cols {
        Some(cols) => cols.iter().map(|c| column(&headers, c).map(|i| (i, c.clone()))).collect::<Result<_, _>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, h)| *i != lon_idx && *i != lat_idx && !h.is_empty())
            .map(|(i, h)| (i, h.to_string()))
            .collect(),
    };
    if let Some((_, empty)) = tag_idx.iter().find(|(_, name)| name.is_empty()) {
        return Err(IngestError::MissingColumn(empty.clone()));
    }

    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| IngestError::Row { row, message: e.to_string() })?;
        let coord = |idx: usize, name: &str| -> Result<f64, IngestError> {
            let cell = record.get(idx).unwrap_or("").trim();
            cell.parse::<f64>().map_err(|_| IngestError::Row {
                row,
                message: format!("column '{name}' is not a decimal number: '{cell}'"),
            })
        };
        let lon = coord(lon_idx, &config.lon_col)?;
        let lat = coord(lat_idx, &config.lat_col)?;
        let point = Coordinate::new(lon, lat).map_err(|source| IngestError::RowCoordinate { row, source })?;
        let tags = tag_idx
            .iter()
            .filter_map(|(idx, name)| {
                let v = record.get(*idx).unwrap_or("");
                (!v.is_empty()).then(|| (name.clone(), v.to_string()))
            })
            .collect();
        entries.push(Entry { geometry: Geometry::Point(point), tags });
    }
    Ok(ReferenceLayer { name: layer_name.to_string(), kind: GeometryKind::Point, entries })
}
