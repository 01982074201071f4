//! SQL dialect compilation and database URLs.

mod dburl;
#[cfg(feature = "spatialite")]
pub mod spatialite;
mod sql;

use std::fmt;

pub use dburl::{parse_dburl, ConnectionSpec, DbUrlError, SUPPORTED_SCHEMES};
pub use sql::{compile, Binding, CompileError, CompiledQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dialect {
    Postgis,
    Spatialite,
    Bigquery,
}

impl Dialect {
    pub const ALL: [Dialect; 3] = [Dialect::Postgis, Dialect::Spatialite, Dialect::Bigquery];

    pub fn name(self) -> &'static str {
        match self {
            Dialect::Postgis => "postgis",
            Dialect::Spatialite => "spatialite",
            Dialect::Bigquery => "bigquery",
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
