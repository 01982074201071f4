//! Synthetic throughput benchmark: a uniform point layer, a uniform dataset
//! and a mix of spells, all drawn from a seeded generator.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{Catalog, ReferenceLayer, TagFilter, Tags};
use crate::dataset::PointDataset;
use crate::geo::Coordinate;
use crate::index::{Entry, Geometry, GeometryKind};
use crate::matrix::FeatureMatrix;
use crate::spellbook::SpellBook;
use crate::spells::{cast_all_with_stats, CastError, Spell, SpellKind, DEFAULT_CAP_M};

/// Area the synthetic data is spread over: roughly 44 km by 30 km.
pub const BENCH_EXTENT: (f64, f64, f64, f64) = (103.6, 1.2, 104.0, 1.47);
pub const BENCH_CLASSES: usize = 8;
pub const BENCH_RADIUS_M: f64 = 1500.0;
pub const BENCH_LAYER: &str = "synthetic";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub points: usize,
    pub entries: usize,
    pub spells: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { points: 1000, entries: 10_000, spells: 5, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: BenchConfig,
    /// Feature values computed: points times spells.
    pub values: usize,
    /// Index build plus casting; data generation is excluded.
    pub wall: Duration,
    pub peak_candidates: usize,
    pub threads: usize,
}

impl BenchReport {
    /// Rows per second; 0 when there are no rows or no measurable time.
    pub fn rows_per_s(&self) -> f64 {
        let secs = self.wall.as_secs_f64();
        if self.config.points == 0 || secs == 0.0 {
            0.0
        } else {
            self.config.points as f64 / secs
        }
    }

    /// Single `key=value` line for scripts.
    pub fn machine_line(&self) -> String {
        format!(
            "bench points={} entries={} spells={} threads={} values={} wall_s={:.6} rows_per_s={:.1} peak_candidates={}",
            self.config.points,
            self.config.entries,
            self.config.spells,
            self.threads,
            self.values,
            self.wall.as_secs_f64(),
            self.rows_per_s(),
            self.peak_candidates
        )
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cast {} spells over {} points against {} entries on {} thread(s): {} values in {:.3} s ({:.0} rows/s, peak {} candidates per query)",
            self.config.spells,
            self.config.points,
            self.config.entries,
            self.threads,
            self.values,
            self.wall.as_secs_f64(),
            self.rows_per_s(),
            self.peak_candidates
        )
    }
}

fn random_coord(rng: &mut ChaCha8Rng) -> Coordinate {
    let (min_lon, min_lat, max_lon, max_lat) = BENCH_EXTENT;
    Coordinate::new(rng.gen_range(min_lon..max_lon), rng.gen_range(min_lat..max_lat)).expect("inside the extent")
}

/// The synthetic layer, dataset and book for `config`.
pub fn generate(config: &BenchConfig) -> (ReferenceLayer, PointDataset, SpellBook) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let entries = (0..config.entries)
        .map(|_| {
            let class = format!("c{}", rng.gen_range(0..BENCH_CLASSES));
            let tags: Tags = [("fclass".to_string(), class)].into_iter().collect();
            Entry { geometry: Geometry::Point(random_coord(&mut rng)), tags }
        })
        .collect();
    let layer = ReferenceLayer { name: BENCH_LAYER.into(), kind: GeometryKind::Point, entries };
    let points = (0..config.points).map(|i| (format!("{}", i + 1), random_coord(&mut rng)));
    let dataset = PointDataset::from_points(points).expect("ids are unique");
    let spells = (0..config.spells)
        .map(|i| {
            let class = format!("c{}", i % BENCH_CLASSES);
            let (kind, prefix) = if i % 2 == 0 {
                (SpellKind::DistanceToNearest { cap_m: DEFAULT_CAP_M }, "dist")
            } else {
                (SpellKind::NumberOf { radius_m: BENCH_RADIUS_M }, "num")
            };
            Spell {
                kind,
                filter: TagFilter::eq("fclass", class.clone()),
                layer: BENCH_LAYER.into(),
                feature_name: format!("{prefix}_{class}_{i}"),
            }
        })
        .collect();
    (layer, dataset, SpellBook::new(spells))
}

/// Generates the data, then times index construction and `cast_all` on the
/// current rayon pool.
pub fn run(config: &BenchConfig) -> Result<(BenchReport, FeatureMatrix), CastError> {
    let (layer, dataset, book) = generate(config);
    let start = Instant::now();
    let catalog = Catalog::from_layers([layer])?;
    let (matrix, stats) = cast_all_with_stats(&book, &dataset, &catalog)?;
    let wall = start.elapsed();
    let report = BenchReport {
        config: *config,
        values: matrix.row_count() * matrix.features.len(),
        wall,
        peak_candidates: stats.peak_candidates,
        threads: rayon::current_num_threads(),
    };
    Ok((report, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_run_guards_rate() {
        let (report, matrix) = run(&BenchConfig { points: 0, ..Default::default() }).unwrap();
        assert_eq!(report.values, 0);
        assert_eq!(report.rows_per_s(), 0.0);
        assert_eq!(matrix.row_count(), 0);
        assert!(report.machine_line().contains("points=0"));
    }

    #[test]
    fn value_count_is_points_times_spells() {
        let (report, matrix) = run(&BenchConfig { points: 1000, entries: 10_000, spells: 5, seed: 7 }).unwrap();
        assert_eq!(report.values, 5000);
        assert_eq!(matrix.features.len(), 5);
        assert!(report.peak_candidates > 0);
    }

    #[test]
    fn generation_is_seeded() {
        let cfg = BenchConfig { points: 50, entries: 200, spells: 3, seed: 9 };
        assert_eq!(generate(&cfg), generate(&cfg));
    }
}
