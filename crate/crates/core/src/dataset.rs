use std::collections::HashSet;

use thiserror::Error;

use crate::geo::{Coordinate, GeoError};

/// Column holding row ids when an input file provides them.
pub const ROW_ID_COLUMN: &str = "row_id";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("row {row}: invalid coordinate: {source}")]
    Coordinate { row: usize, source: GeoError },
    #[error("duplicate row_id '{0}'")]
    DuplicateRowId(String),
    #[error("duplicate column '{0}'")]
    DuplicateColumn(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataRow {
    pub row_id: String,
    pub coord: Coordinate,
    /// Values for [`PointDataset::passthrough_columns`], in order.
    pub passthrough: Vec<String>,
}

/// Points to cast features onto. Row order is preserved end to end.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointDataset {
    pub lon_col: String,
    pub lat_col: String,
    pub passthrough_columns: Vec<String>,
    pub rows: Vec<DataRow>,
}

impl PointDataset {
    /// A dataset without passthrough columns; ids must be unique.
    pub fn from_points(points: impl IntoIterator<Item = (String, Coordinate)>) -> Result<Self, DatasetError> {
        let rows: Vec<DataRow> =
            points.into_iter().map(|(row_id, coord)| DataRow { row_id, coord, passthrough: Vec::new() }).collect();
        let ds = Self { lon_col: "lon".into(), lat_col: "lat".into(), passthrough_columns: Vec::new(), rows };
        ds.check_unique_ids()?;
        Ok(ds)
    }

    /// Reads a headed CSV. Ids come from a `row_id` column when present,
    /// otherwise from 1-based row numbers; every other column besides the
    /// coordinates passes through untouched.
    pub fn from_csv(bytes: &[u8], lon_col: &str, lat_col: &str) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let headers = reader.headers().map_err(|e| DatasetError::Csv(e.to_string()))?.clone();
        let mut seen = HashSet::new();
        for h in headers.iter() {
            if !seen.insert(h) {
                return Err(DatasetError::DuplicateColumn(h.to_string()));
            }
        }
        let find = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
        };
        let lon_idx = find(lon_col)?;
        let lat_idx = find(lat_col)?;
        let id_idx = headers.iter().position(|h| h == ROW_ID_COLUMN);
        let pass_idx: Vec<usize> =
            (0..headers.len()).filter(|i| *i != lon_idx && *i != lat_idx && Some(*i) != id_idx).collect();

        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| DatasetError::Row { row, message: e.to_string() })?;
            let num = |idx: usize, name: &str| -> Result<f64, DatasetError> {
                let cell = record.get(idx).unwrap_or("").trim();
                cell.parse().map_err(|_| DatasetError::Row {
                    row,
                    message: format!("column '{name}' is not a decimal number: '{cell}'"),
                })
            };
            let coord = Coordinate::new(num(lon_idx, lon_col)?, num(lat_idx, lat_col)?)
                .map_err(|source| DatasetError::Coordinate { row, source })?;
            let row_id = match id_idx {
                Some(idx) => record.get(idx).unwrap_or("").to_string(),
                None => row.to_string(),
            };
            let passthrough = pass_idx.iter().map(|&i| record.get(i).unwrap_or("").to_string()).collect();
            rows.push(DataRow { row_id, coord, passthrough });
        }
        let ds = Self {
            lon_col: lon_col.to_string(),
            lat_col: lat_col.to_string(),
            passthrough_columns: pass_idx.iter().map(|&i| headers[i].to_string()).collect(),
            rows,
        };
        ds.check_unique_ids()?;
        Ok(ds)
    }

    fn check_unique_ids(&self) -> Result<(), DatasetError> {
        let mut seen = HashSet::with_capacity(self.rows.len());
        for r in &self.rows {
            if !seen.insert(r.row_id.as_str()) {
                return Err(DatasetError::DuplicateRowId(r.row_id.clone()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Output column names contributed by the dataset, in order.
    pub fn column_names(&self) -> Vec<&str> {
        let mut cols = vec![ROW_ID_COLUMN, self.lon_col.as_str(), self.lat_col.as_str()];
        cols.extend(self.passthrough_columns.iter().map(String::as_str));
        cols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_ids_and_passthrough() {
        let ds =
            PointDataset::from_csv(b"name,lat,lon,row_id\nA,1.3,103.8,a1\nB,1.4,103.9,b2\n", "lon", "lat").unwrap();
        assert_eq!(ds.passthrough_columns, vec!["name"]);
        assert_eq!(ds.rows[1].row_id, "b2");
        assert_eq!(ds.rows[1].passthrough, vec!["B"]);
        assert_eq!(ds.column_names(), vec!["row_id", "lon", "lat", "name"]);
    }

    #[test]
    fn numbers_rows_without_ids() {
        let ds = PointDataset::from_csv(b"x,y\n0,0\n1,1\n", "x", "y").unwrap();
        assert_eq!(ds.rows.iter().map(|r| r.row_id.as_str()).collect::<Vec<_>>(), vec!["1", "2"]);
    }

    #[test]
    fn errors() {
        assert_eq!(
            PointDataset::from_csv(b"lon\n0\n", "lon", "lat").unwrap_err(),
            DatasetError::MissingColumn("lat".into())
        );
        assert!(matches!(
            PointDataset::from_csv(b"lon,lat\n0,0\n0,-91\n", "lon", "lat").unwrap_err(),
            DatasetError::Coordinate { row: 2, .. }
        ));
        assert_eq!(
            PointDataset::from_csv(b"row_id,lon,lat\na,0,0\na,1,1\n", "lon", "lat").unwrap_err(),
            DatasetError::DuplicateRowId("a".into())
        );
        assert!(matches!(
            PointDataset::from_csv(b"lon,lat,lat\n0,0,0\n", "lon", "lat").unwrap_err(),
            DatasetError::DuplicateColumn(_)
        ));
    }

    #[test]
    fn header_only_is_empty() {
        let ds = PointDataset::from_csv(b"lon,lat\n", "lon", "lat").unwrap();
        assert!(ds.is_empty());
    }
}
