//! The feature matrix produced by casting a spellbook, and its CSV and
//! GeoJSON renderings.

use std::io::{self, Write};

use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

use crate::dataset::{PointDataset, ROW_ID_COLUMN};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    /// Non-negative integers.
    Count,
    /// Non-negative reals in meters.
    Meters,
}

/// One spell's values, aligned with the dataset rows. `None` is null.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: ValueKind,
    pub values: Vec<Option<f64>>,
}

impl FeatureColumn {
    /// Text form of row `i`; empty for null.
    pub fn format(&self, i: usize) -> String {
        match (self.values[i], self.kind) {
            (None, _) => String::new(),
            (Some(v), ValueKind::Count) => format!("{}", v as u64),
            (Some(v), ValueKind::Meters) => format!("{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub dataset: PointDataset,
    pub features: Vec<FeatureColumn>,
}

impl FeatureMatrix {
    pub fn column_names(&self) -> Vec<&str> {
        let mut cols = self.dataset.column_names();
        cols.extend(self.features.iter().map(|f| f.name.as_str()));
        cols
    }

    pub fn row_count(&self) -> usize {
        self.dataset.len()
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureColumn> {
        self.features.iter().find(|f| f.name == name)
    }

    /// CSV with a header row; nulls are empty fields.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(self.column_names())?;
        for (i, row) in self.dataset.rows.iter().enumerate() {
            let mut record = vec![row.row_id.clone(), format!("{}", row.coord.lon()), format!("{}", row.coord.lat())];
            record.extend(row.passthrough.iter().cloned());
            record.extend(self.features.iter().map(|f| f.format(i)));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        buf
    }

    /// A FeatureCollection of points; the row id, passthrough columns and
    /// features become properties.
    pub fn write_geojson<W: Write>(&self, mut out: W) -> io::Result<()> {
        serde_json::to_writer(&mut out, &Collection(self))?;
        out.write_all(b"\n")
    }

    pub fn to_geojson_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_geojson(&mut buf).expect("writing to memory");
        buf
    }
}

struct Collection<'a>(&'a FeatureMatrix);
struct Features<'a>(&'a FeatureMatrix);
struct Feature<'a>(&'a FeatureMatrix, usize);
struct PointGeometry(f64, f64);
struct Properties<'a>(&'a FeatureMatrix, usize);

impl Serialize for Collection<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("type", "FeatureCollection")?;
        m.serialize_entry("features", &Features(self.0))?;
        m.end()
    }
}

impl Serialize for Features<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.row_count()))?;
        for i in 0..self.0.row_count() {
            seq.serialize_element(&Feature(self.0, i))?;
        }
        seq.end()
    }
}

impl Serialize for Feature<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let row = &self.0.dataset.rows[self.1];
        let mut m = s.serialize_map(Some(3))?;
        m.serialize_entry("type", "Feature")?;
        m.serialize_entry("geometry", &PointGeometry(row.coord.lon(), row.coord.lat()))?;
        m.serialize_entry("properties", &Properties(self.0, self.1))?;
        m.end()
    }
}

impl Serialize for PointGeometry {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("type", "Point")?;
        m.serialize_entry("coordinates", &[self.0, self.1])?;
        m.end()
    }
}

impl Serialize for Properties<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (matrix, i) = (self.0, self.1);
        let row = &matrix.dataset.rows[i];
        let mut m = s.serialize_map(None)?;
        m.serialize_entry(ROW_ID_COLUMN, &row.row_id)?;
        for (name, value) in matrix.dataset.passthrough_columns.iter().zip(&row.passthrough) {
            m.serialize_entry(name, value)?;
        }
        for f in &matrix.features {
            match (f.values[i], f.kind) {
                (None, _) => m.serialize_entry(&f.name, &())?,
                (Some(v), ValueKind::Count) => m.serialize_entry(&f.name, &(v as u64))?,
                (Some(v), ValueKind::Meters) => m.serialize_entry(&f.name, &v)?,
            }
        }
        m.end()
    }
}
