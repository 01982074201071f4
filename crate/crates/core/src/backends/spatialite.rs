//! Running compiled SpatiaLite queries against a local database file.
//!
//! Tables written here follow the layout the compiler expects: a `geom`
//! BLOB in SpatiaLite's internal format plus one TEXT column per tag key for
//! reference layers, and `row_id`, `geom` for point tables.

use std::collections::BTreeSet;
use std::ffi::{c_int, c_void};
use std::fmt::Write;
use std::path::Path;

use rusqlite::{params, Connection};
use thiserror::Error;

use super::sql::check_table;
use super::{CompileError, CompiledQuery};
use crate::catalog::ReferenceLayer;
use crate::dataset::PointDataset;
use crate::index::Geometry;
use crate::spells::is_identifier;

#[link(name = "libspatialite.so.7", kind = "dylib", modifiers = "+verbatim")]
extern "C" {
    fn spatialite_alloc_connection() -> *mut c_void;
    fn spatialite_init_ex(db: *mut rusqlite::ffi::sqlite3, cache: *const c_void, verbose: c_int);
    fn spatialite_cleanup_ex(cache: *const c_void);
}

#[derive(Debug, Error)]
pub enum SpatialiteError {
    #[error(transparent)]
    Sqlite(#[from] rusqlite::Error),
    #[error(transparent)]
    Name(#[from] CompileError),
    #[error("could not allocate a SpatiaLite connection cache")]
    Init,
}

/// A SQLite connection with the SpatiaLite functions registered.
pub struct SpatialDb {
    conn: Option<Connection>,
    cache: *mut c_void,
}

impl SpatialDb {
    pub fn open(path: &Path) -> Result<Self, SpatialiteError> {
        Self::init(Connection::open(path)?)
    }

    pub fn open_in_memory() -> Result<Self, SpatialiteError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self, SpatialiteError> {
        // SAFETY: the cache is owned by this value and released in Drop after
        // the connection that uses it has been closed.
        let cache = unsafe { spatialite_alloc_connection() };
        if cache.is_null() {
            return Err(SpatialiteError::Init);
        }
        unsafe { spatialite_init_ex(conn.handle(), cache, 0) };
        let db = Self { conn: Some(conn), cache };
        // geodesic functions look the SRID up in spatial_ref_sys
        let has_meta: i64 = db.connection().query_row("SELECT CheckSpatialMetaData()", [], |r| r.get(0))?;
        if has_meta == 0 {
            db.connection().query_row("SELECT InitSpatialMetaData(1, 'WGS84_ONLY')", [], |_| Ok(()))?;
        }
        Ok(db)
    }

    pub fn connection(&self) -> &Connection {
        self.conn.as_ref().expect("open until dropped")
    }

    /// Creates `table` and fills it with the layer's geometries and tags.
    pub fn write_layer(&mut self, table: &str, layer: &ReferenceLayer) -> Result<(), SpatialiteError> {
        check_table(table)?;
        let keys: BTreeSet<&str> = layer.entries.iter().flat_map(|e| e.tags.keys().map(String::as_str)).collect();
        if let Some(bad) = keys.iter().find(|k| !is_identifier(k)) {
            return Err(CompileError::InvalidKey(bad.to_string()).into());
        }
        let mut ddl = format!("CREATE TABLE \"{table}\" (geom BLOB NOT NULL");
        for k in &keys {
            let _ = write!(ddl, ", \"{k}\" TEXT");
        }
        ddl.push(')');
        let cols: Vec<String> = keys.iter().map(|k| format!("\"{k}\"")).collect();
        let holders: Vec<String> = (0..keys.len()).map(|i| format!("?{}", i + 2)).collect();
        let insert = format!(
            "INSERT INTO \"{table}\" (geom{}{}) VALUES (GeomFromText(?1, 4326){}{})",
            if cols.is_empty() { "" } else { ", " },
            cols.join(", "),
            if holders.is_empty() { "" } else { ", " },
            holders.join(", ")
        );

        let tx = self.conn.as_mut().expect("open until dropped").transaction()?;
        tx.execute(&ddl, [])?;
        {
            let mut stmt = tx.prepare(&insert)?;
            for entry in &layer.entries {
                let mut values: Vec<Option<&str>> = vec![None; keys.len() + 1];
                let wkt = wkt(&entry.geometry);
                values[0] = Some(&wkt);
                for (i, k) in keys.iter().enumerate() {
                    values[i + 1] = entry.tags.get(*k).map(String::as_str);
                }
                stmt.execute(rusqlite::params_from_iter(values))?;
            }
        }
        tx.commit()?;
        Ok(())
    }

    /// Creates `table (row_id, geom)` from the dataset rows.
    pub fn write_points(&mut self, table: &str, ds: &PointDataset) -> Result<(), SpatialiteError> {
        check_table(table)?;
        let tx = self.conn.as_mut().expect("open until dropped").transaction()?;
        tx.execute(&format!("CREATE TABLE \"{table}\" (row_id TEXT PRIMARY KEY, geom BLOB NOT NULL)"), [])?;
        {
            let mut stmt = tx.prepare(&format!("INSERT INTO \"{table}\" VALUES (?1, MakePoint(?2, ?3, 4326))"))?;
            for row in &ds.rows {
                stmt.execute(params![row.row_id, row.coord.lon(), row.coord.lat()])?;
            }
        }
        tx.commit()?;
        Ok(())
    }

    /// Runs a compiled query and returns `(row_id, value)` pairs in result
    /// order.
    pub fn execute(&self, query: &CompiledQuery) -> Result<Vec<(String, Option<f64>)>, SpatialiteError> {
        let mut stmt = self.connection().prepare(&query.sql)?;
        let rows = stmt.query_map([], |row| Ok((row.get::<_, String>(0)?, row.get::<_, Option<f64>>(1)?)))?;
        Ok(rows.collect::<Result<_, _>>()?)
    }
}

impl Drop for SpatialDb {
    fn drop(&mut self) {
        drop(self.conn.take());
        // SAFETY: allocated in init and no connection refers to it any more.
        unsafe { spatialite_cleanup_ex(self.cache) };
    }
}

fn wkt(g: &Geometry) -> String {
    match g {
        Geometry::Point(c) => format!("POINT({} {})", c.lon(), c.lat()),
        Geometry::Polyline(line) => {
            let coords: Vec<String> = line.vertices().iter().map(|c| format!("{} {}", c.lon(), c.lat())).collect();
            format!("LINESTRING({})", coords.join(", "))
        }
    }
}
