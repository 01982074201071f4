//! Random scenarios and a linear-scan oracle shared by the integration and
//! acceptance tests.
#![allow(dead_code)]

pub mod strategies;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spellcast::catalog::{ReferenceLayer, Tags};
use spellcast::geo::{
    clipped_length_in_radius_m, haversine_m, point_polyline_distance_m, Coordinate, Polyline, METERS_PER_DEGREE,
};
use spellcast::index::{Entry, Geometry, GeometryKind};
use spellcast::{parse_filter, Catalog, PointDataset, Spell, SpellBook, SpellKind};

pub const POI_CLASSES: [&str; 5] = ["mall", "embassy", "supermarket", "school", "cafe"];
pub const ROAD_CLASSES: [&str; 4] = ["primary", "secondary", "residential", "service"];

/// Centers scenarios are drawn around, including the antimeridian and the
/// high Arctic.
pub const CENTERS: [(f64, f64); 5] = [(103.82, 1.35), (179.9, -16.5), (-179.95, 10.0), (15.0, 78.0), (0.0, 0.0)];

pub struct Scenario {
    pub pois: ReferenceLayer,
    pub roads: ReferenceLayer,
    pub points: PointDataset,
    pub book: SpellBook,
}

impl Scenario {
    pub fn catalog(&self) -> Catalog {
        Catalog::from_layers([self.pois.clone(), self.roads.clone()]).unwrap()
    }

    pub fn layer(&self, name: &str) -> &ReferenceLayer {
        match name {
            "pois" => &self.pois,
            "roads" => &self.roads,
            other => panic!("no layer {other}"),
        }
    }
}

fn near(rng: &mut ChaCha8Rng, center: (f64, f64), spread_deg: f64) -> Coordinate {
    let lat = (center.1 + rng.gen_range(-spread_deg..spread_deg)).clamp(-89.9, 89.9);
    let lon_spread = spread_deg / lat.to_radians().cos().max(0.2);
    Coordinate::wrapping(center.0 + rng.gen_range(-lon_spread..lon_spread), lat).unwrap()
}

fn tags(rng: &mut ChaCha8Rng, classes: &[&str]) -> Tags {
    let mut t = Tags::new();
    // a few entries have no class at all
    if rng.gen_bool(0.95) {
        t.insert("fclass".into(), classes.choose(rng).unwrap().to_string());
    }
    if rng.gen_bool(0.3) {
        t.insert("access".into(), if rng.gen_bool(0.5) { "yes" } else { "no" }.into());
    }
    t
}

fn random_line(rng: &mut ChaCha8Rng, center: (f64, f64), spread_deg: f64) -> Polyline {
    let mut v = vec![near(rng, center, spread_deg)];
    for _ in 0..rng.gen_range(1..6) {
        let last = *v.last().unwrap();
        let step = rng.gen_range(50.0..1500.0) / METERS_PER_DEGREE;
        let heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let lat = (last.lat() + step * heading.cos()).clamp(-89.9, 89.9);
        let lon = last.lon() + step * heading.sin() / lat.to_radians().cos().max(0.2);
        let next = Coordinate::wrapping(lon, lat).unwrap();
        if next != last {
            v.push(next);
        }
    }
    if v.len() < 2 {
        v.push(Coordinate::wrapping(v[0].lon() + 0.001, v[0].lat()).unwrap());
    }
    Polyline::new(v).unwrap()
}

fn random_filter(rng: &mut ChaCha8Rng, classes: &[&str]) -> String {
    let a = classes.choose(rng).unwrap();
    let b = classes.choose(rng).unwrap();
    match rng.gen_range(0..6) {
        0 | 1 => a.to_string(),
        2 => format!("{a} or {b}"),
        3 => format!("not {a}"),
        4 => format!("{a} and access=yes"),
        _ => "*".to_string(),
    }
}

/// A scenario with up to `max_entries` layer entries and `max_points` rows.
pub fn scenario(seed: u64, max_entries: usize, max_points: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = CENTERS[seed as usize % CENTERS.len()];
    let spread = rng.gen_range(0.05..0.3);
    let n_entries = rng.gen_range(max_entries / 10..=max_entries);
    let n_roads = n_entries / 4;
    let n_pois = n_entries - n_roads;
    let n_points = rng.gen_range(1..=max_points);

    let pois = ReferenceLayer {
        name: "pois".into(),
        kind: GeometryKind::Point,
        entries: (0..n_pois)
            .map(|_| Entry {
                geometry: Geometry::Point(near(&mut rng, center, spread)),
                tags: tags(&mut rng, &POI_CLASSES),
            })
            .collect(),
    };
    let roads = ReferenceLayer {
        name: "roads".into(),
        kind: GeometryKind::Polyline,
        entries: (0..n_roads)
            .map(|_| Entry {
                geometry: Geometry::Polyline(random_line(&mut rng, center, spread)),
                tags: tags(&mut rng, &ROAD_CLASSES),
            })
            .collect(),
    };
    let points =
        PointDataset::from_points((0..n_points).map(|i| (format!("r{i}"), near(&mut rng, center, spread * 1.1))))
            .unwrap();

    let mut spells = Vec::new();
    for i in 0..rng.gen_range(3..7) {
        let on_roads = rng.gen_bool(0.4);
        let (layer, classes) = if on_roads { ("roads", &ROAD_CLASSES[..]) } else { ("pois", &POI_CLASSES[..]) };
        let filter = parse_filter(&random_filter(&mut rng, classes)).unwrap();
        let kind = match rng.gen_range(0..3) {
            0 => SpellKind::DistanceToNearest { cap_m: rng.gen_range(500.0..20_000.0) },
            1 => SpellKind::NumberOf { radius_m: rng.gen_range(100.0..3000.0) },
            _ if on_roads => SpellKind::LengthOf { radius_m: rng.gen_range(100.0..3000.0) },
            _ => SpellKind::NumberOf { radius_m: rng.gen_range(100.0..3000.0) },
        };
        spells.push(Spell { kind, filter, layer: layer.into(), feature_name: format!("f{i}") });
    }
    Scenario { pois, roads, points, book: SpellBook::new(spells) }
}

fn distance(g: &Geometry, p: Coordinate) -> f64 {
    match g {
        Geometry::Point(q) => haversine_m(p, *q),
        Geometry::Polyline(line) => point_polyline_distance_m(p, line),
    }
}

/// Linear scan over every entry of the layer, no index involved.
pub fn oracle(spell: &Spell, layer: &ReferenceLayer, p: Coordinate) -> Option<f64> {
    let matching = layer.entries.iter().filter(|e| spell.filter.matches(&e.tags));
    match spell.kind {
        SpellKind::DistanceToNearest { cap_m } => {
            matching.map(|e| distance(&e.geometry, p)).filter(|d| *d <= cap_m).min_by(|a, b| a.total_cmp(b))
        }
        SpellKind::NumberOf { radius_m } => {
            Some(matching.filter(|e| distance(&e.geometry, p) <= radius_m).count() as f64)
        }
        SpellKind::LengthOf { radius_m } => Some(
            matching
                .map(|e| match &e.geometry {
                    Geometry::Polyline(line) => clipped_length_in_radius_m(line, p, radius_m),
                    Geometry::Point(_) => 0.0,
                })
                .sum(),
        ),
    }
}

/// Compares two feature values: counts exactly, lengths and distances within
/// `abs_tol` meters or `rel_tol` of the larger magnitude.
pub fn close(kind: SpellKind, a: Option<f64>, b: Option<f64>, abs_tol: f64, rel_tol: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => match kind {
            SpellKind::NumberOf { .. } => x == y,
            _ => (x - y).abs() <= abs_tol.max(rel_tol * x.abs().max(y.abs())),
        },
        _ => false,
    }
}

/// Fixed scenario for checking compiled SQL against the engine: Singapore
/// area, `n_points` rows, spells of every kind including filters over a tag
/// most entries lack.
pub fn sql_fixture(n_points: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let center = CENTERS[0];
    let pois = ReferenceLayer {
        name: "pois".into(),
        kind: GeometryKind::Point,
        entries: (0..3000)
            .map(|_| Entry {
                geometry: Geometry::Point(near(&mut rng, center, 0.15)),
                tags: tags(&mut rng, &POI_CLASSES),
            })
            .collect(),
    };
    let roads = ReferenceLayer {
        name: "roads".into(),
        kind: GeometryKind::Polyline,
        entries: (0..800)
            .map(|_| Entry {
                geometry: Geometry::Polyline(random_line(&mut rng, center, 0.15)),
                tags: tags(&mut rng, &ROAD_CLASSES),
            })
            .collect(),
    };
    let points =
        PointDataset::from_points((0..n_points).map(|i| (format!("{:04}", i + 1), near(&mut rng, center, 0.15))))
            .unwrap();
    let spell = |kind, filter: &str, layer: &str, name: &str| Spell {
        kind,
        filter: parse_filter(filter).unwrap(),
        layer: layer.into(),
        feature_name: name.into(),
    };
    let book = SpellBook::new(vec![
        spell(SpellKind::DistanceToNearest { cap_m: 3000.0 }, "embassy", "pois", "dist_embassy"),
        spell(SpellKind::NumberOf { radius_m: 1500.0 }, "mall", "pois", "num_mall"),
        spell(SpellKind::NumberOf { radius_m: 800.0 }, "not access=yes and (cafe or school)", "pois", "num_open"),
        spell(SpellKind::DistanceToNearest { cap_m: 2000.0 }, "primary", "roads", "dist_primary"),
        spell(SpellKind::LengthOf { radius_m: 800.0 }, "primary or secondary", "roads", "len_major"),
        spell(SpellKind::NumberOf { radius_m: 500.0 }, "*", "roads", "num_roads"),
    ]);
    Scenario { pois, roads, points, book }
}

/// Compiles every spell of [`sql_fixture`] for SpatiaLite, runs it on an
/// in-memory database holding the same data and compares with the engine:
/// counts exactly, distances and lengths within 0.5%. Returns one line per
/// disagreeing value.
#[cfg(feature = "spatialite")]
pub fn spatialite_mismatches(n_points: usize) -> Vec<String> {
    use spellcast::backends::spatialite::SpatialDb;
    use std::collections::HashMap;

    let s = sql_fixture(n_points);
    let mut db = SpatialDb::open_in_memory().unwrap();
    db.write_layer("pois", &s.pois).unwrap();
    db.write_layer("roads", &s.roads).unwrap();
    db.write_points("points", &s.points).unwrap();
    let matrix = s.book.cast(&s.points, &s.catalog()).unwrap();

    let mut out = Vec::new();
    for (spell, column) in s.book.spells.iter().zip(&matrix.features) {
        let query = spellcast::compile(spell, spellcast::Dialect::Spatialite, &spell.layer, "points").unwrap();
        let rows: HashMap<String, Option<f64>> = db.execute(&query).unwrap().into_iter().collect();
        assert_eq!(rows.len(), s.points.len(), "{}", spell.feature_name);
        for (row, engine) in s.points.rows.iter().zip(&column.values) {
            let sql = rows[&row.row_id];
            if !close(spell.kind, *engine, sql, 1e-6, 0.005) {
                out.push(format!("{} row {}: engine {engine:?}, sql {sql:?}", spell.feature_name, row.row_id));
            }
        }
    }
    out
}
