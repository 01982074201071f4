use std::fmt::Write;

use thiserror::Error;

use super::Dialect;
use crate::catalog::TagFilter;
use crate::geo::{METERS_PER_DEGREE, MIN_COS_LAT};
use crate::spells::{is_identifier, Spell, SpellError, SpellKind};

/// Margin on the SpatiaLite bounding-box prefilter; the exact test follows.
const MBR_PAD: f64 = 1.05;
/// Vertex spacing, in degrees of arc, of the SpatiaLite buffer ellipse.
const ELLIPSE_STEP_DEG: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub points_table: String,
    pub source_table: String,
    pub output_column: String,
}

/// One SELECT yielding `(row_id, <feature_name>)` per row of the points table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledQuery {
    pub sql: String,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("spell '{feature}': {source}")]
    InvalidSpell { feature: String, source: SpellError },
    #[error("table name '{0}' must match [A-Za-z_][A-Za-z0-9_.]*")]
    InvalidTable(String),
    #[error("tag key '{0}' is not usable as a column name")]
    InvalidKey(String),
    #[error("tag value for '{key}' contains a quote, backslash or control character")]
    InvalidValue { key: String },
}

pub(crate) fn check_table(name: &str) -> Result<(), CompileError> {
    let ok = !name.is_empty()
        && name.split('.').all(|part| {
            let mut chars = part.chars();
            matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        });
    if ok {
        Ok(())
    } else {
        Err(CompileError::InvalidTable(name.to_string()))
    }
}

fn check_filter(filter: &TagFilter) -> Result<(), CompileError> {
    for (key, value) in filter.leaves() {
        if !is_identifier(key) {
            return Err(CompileError::InvalidKey(key.to_string()));
        }
        if value.chars().any(|c| c == '\'' || c == '\\' || c.is_control()) {
            return Err(CompileError::InvalidValue { key: key.to_string() });
        }
    }
    Ok(())
}

fn table(dialect: Dialect, name: &str) -> String {
    match dialect {
        Dialect::Bigquery => format!("`{name}`"),
        _ => name.split('.').map(|p| format!("\"{p}\"")).collect::<Vec<_>>().join("."),
    }
}

fn column(dialect: Dialect, name: &str) -> String {
    match dialect {
        Dialect::Bigquery => format!("`{name}`"),
        _ => format!("\"{name}\""),
    }
}

/// SQL boolean for `filter`. A missing tag is a NULL column; NULL acts as
/// false under WHERE, and `NOT` coalesces first so it does too.
fn lower_filter(dialect: Dialect, filter: &TagFilter) -> String {
    match filter {
        TagFilter::Any => "TRUE".to_string(),
        TagFilter::Eq { key, value } => format!("{} = '{value}'", column(dialect, key)),
        TagFilter::Not(inner) => format!("NOT COALESCE({}, FALSE)", lower_filter(dialect, inner)),
        TagFilter::And(l, r) => format!("({} AND {})", lower_filter(dialect, l), lower_filter(dialect, r)),
        TagFilter::Or(l, r) => format!("({} OR {})", lower_filter(dialect, l), lower_filter(dialect, r)),
    }
}

/// The scalar subquery's aggregate and spatial predicate.
fn aggregate_and_predicate(dialect: Dialect, kind: SpellKind) -> (String, String) {
    let r = kind.extent_m();
    match dialect {
        Dialect::Postgis => {
            let pg = "p.geom::geography";
            let sg = "s.geom::geography";
            let agg = match kind {
                SpellKind::DistanceToNearest { .. } => format!("MIN(ST_Distance({pg}, {sg}, false))"),
                SpellKind::NumberOf { .. } => "COUNT(*)".to_string(),
                SpellKind::LengthOf { .. } => {
                    format!("COALESCE(SUM(ST_Length(ST_Intersection({sg}, ST_Buffer({pg}, {r})), false)), 0)")
                }
            };
            (agg, format!("ST_DWithin({pg}, {sg}, {r}, false)"))
        }
        Dialect::Spatialite => {
            let lon_scale = format!("({METERS_PER_DEGREE} * MAX(COS(RADIANS(Y(p.geom))), {MIN_COS_LAT}))");
            let mbr = format!(
                "MbrIntersects(s.geom, BuildCircleMbr(X(p.geom), Y(p.geom), {} / {lon_scale}, 4326))",
                r * MBR_PAD
            );
            let within = format!("Distance(p.geom, s.geom, 0) <= {r}");
            match kind {
                SpellKind::DistanceToNearest { .. } => {
                    ("MIN(Distance(p.geom, s.geom, 0))".to_string(), format!("{mbr}\n    AND {within}"))
                }
                SpellKind::NumberOf { .. } => ("COUNT(*)".to_string(), format!("{mbr}\n    AND {within}")),
                SpellKind::LengthOf { .. } => {
                    let disc = format!(
                        "MakePolygon(MakeEllipse(X(p.geom), Y(p.geom), {r} / {lon_scale}, {r} / {METERS_PER_DEGREE}, 4326, {ELLIPSE_STEP_DEG}))"
                    );
                    (format!("COALESCE(SUM(GreatCircleLength(Intersection(s.geom, {disc}))), 0)"), mbr)
                }
            }
        }
        Dialect::Bigquery => {
            let agg = match kind {
                SpellKind::DistanceToNearest { .. } => "MIN(ST_DISTANCE(p.geom, s.geom))".to_string(),
                SpellKind::NumberOf { .. } => "COUNT(*)".to_string(),
                SpellKind::LengthOf { .. } => {
                    format!("COALESCE(SUM(ST_LENGTH(ST_INTERSECTION(s.geom, ST_BUFFER(p.geom, {r})))), 0)")
                }
            };
            (agg, format!("ST_DWITHIN(p.geom, s.geom, {r})"))
        }
    }
}

/// Compiles `spell` against `source_table` (geometry column `geom`, one text
/// column per tag key) and `points_table` (`row_id`, `geom`). Every name and
/// literal is checked against a closed character class before it is
/// spliced into the text.
pub fn compile(
    spell: &Spell,
    dialect: Dialect,
    source_table: &str,
    points_table: &str,
) -> Result<CompiledQuery, CompileError> {
    if let Some(source) = spell.problems().into_iter().next() {
        return Err(CompileError::InvalidSpell { feature: spell.feature_name.clone(), source });
    }
    check_table(source_table)?;
    check_table(points_table)?;
    check_filter(&spell.filter)?;

    let (agg, predicate) = aggregate_and_predicate(dialect, spell.kind);
    let mut sql = String::new();
    let _ = writeln!(sql, "SELECT p.row_id, (");
    let _ = writeln!(sql, "  SELECT {agg}");
    let _ = writeln!(sql, "  FROM {} AS s", table(dialect, source_table));
    match spell.filter {
        TagFilter::Any => {
            let _ = writeln!(sql, "  WHERE {predicate}");
        }
        ref filter => {
            let _ = writeln!(sql, "  WHERE {}", lower_filter(dialect, filter));
            let _ = writeln!(sql, "    AND {predicate}");
        }
    }
    let _ = writeln!(sql, ") AS {}", column(dialect, &spell.feature_name));
    let _ = writeln!(sql, "FROM {} AS p", table(dialect, points_table));
    let _ = writeln!(sql, "ORDER BY p.row_id;");

    Ok(CompiledQuery {
        sql,
        binding: Binding {
            points_table: points_table.to_string(),
            source_table: source_table.to_string(),
            output_column: spell.feature_name.clone(),
        },
    })
}
