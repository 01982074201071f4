//! Acceptance suite: one check per criterion, each printing a single
//! PASS/FAIL line. Runs without the libtest harness so the lines always show;
//! the process exits non-zero if any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spellcast::bench::{self, BenchConfig};
use spellcast::catalog::{parse_filter, TagFilter};
use spellcast::geo::{haversine_m, point_segment_distance_m, Coordinate, LocalFrame, EARTH_RADIUS_M};
use spellcast::{compile, Dialect, PointDataset, Spell, SpellBook};

use support::strategies::{book, destination, filter_ast};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config { cases, failure_persistence: None, ..Config::default() },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

// 1 ---------------------------------------------------------------------------

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let (mut values, mut entries_max, mut points_max) = (0usize, 0usize, 0usize);
    for seed in 0..20 {
        let s = support::scenario(seed, 10_000, 1_000);
        entries_max = entries_max.max(s.pois.entries.len() + s.roads.entries.len());
        points_max = points_max.max(s.points.len());
        let matrix = s.book.cast(&s.points, &s.catalog()).map_err(|e| format!("seed {seed}: {e}"))?;
        for (spell, column) in s.book.spells.iter().zip(&matrix.features) {
            for (row, got) in s.points.rows.iter().zip(&column.values) {
                let want = support::oracle(spell, s.layer(&spell.layer), row.coord);
                check(support::close(spell.kind, *got, want, 1e-6, 0.0), || {
                    format!("seed {seed} {} row {}: engine {got:?}, scan {want:?}", spell.feature_name, row.row_id)
                })?;
                values += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:.1?}"))?;
    Ok(format!(
        "20 scenarios, {values} values equal to linear scan (<= {entries_max} entries, <= {points_max} points) in {elapsed:.1?}"
    ))
}

// 2 ---------------------------------------------------------------------------

fn geodesic_closed_forms() -> Verdict {
    let c = |lon, lat| Coordinate::new(lon, lat).unwrap();
    // 2R asin(sin(0.5 deg)) = R pi / 180, evaluated independently
    let degree = 111_195.08;
    for (a, b) in [(c(0.0, 0.0), c(0.0, 1.0)), (c(0.0, 0.0), c(1.0, 0.0)), (c(45.0, -30.0), c(45.0, -31.0))] {
        let d = haversine_m(a, b);
        check((d - degree).abs() <= 0.01, || format!("degree {a:?}-{b:?} = {d}"))?;
    }
    check((EARTH_RADIUS_M * std::f64::consts::PI / 180.0 - degree).abs() <= 0.01, || "R pi/180 drifted".into())?;

    // perpendicular foot inside the segment: compare with the great-circle
    // distance to the foot
    let cases = [
        (c(0.0, 0.0), c(-1.0, 1.0), c(1.0, 1.0), c(0.0, 1.0)),
        (c(10.0, 0.0), c(9.5, -0.2), c(9.5, 0.2), c(9.5, 0.0)),
        (c(103.8, 1.3), c(103.7, 1.31), c(103.9, 1.31), c(103.8, 1.31)),
    ];
    let mut worst = 0.0f64;
    for (p, a, b, foot) in cases {
        let want = haversine_m(p, foot);
        let err = (point_segment_distance_m(p, a, b) - want).abs() / want;
        worst = worst.max(err);
        check(err <= 0.005, || format!("perpendicular case {p:?}: relative error {err}"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_proj = 0.0f64;
    for i in 0..100_000 {
        let p = c(rng.gen_range(-180.0..180.0), rng.gen_range(-70.0..=70.0));
        let q = destination(p, rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(1.0..=10_000.0));
        let exact = haversine_m(p, q);
        let err = (LocalFrame::new(p).distance_m(q) - exact).abs() / exact;
        worst_proj = worst_proj.max(err);
        check(err <= 0.005, || format!("sample {i}: projection error {err} at {p:?}"))?;
    }
    Ok(format!(
        "degree = {:.4} m, perpendicular error <= {:.4}%, projection error <= {:.4}% over 100000 samples",
        haversine_m(c(0.0, 0.0), c(0.0, 1.0)),
        worst * 100.0,
        worst_proj * 100.0
    ))
}

// 3 ---------------------------------------------------------------------------

fn spellbook_round_trip() -> Verdict {
    runner(200)
        .run(&book(), |b| {
            let bytes = b.to_json().unwrap();
            let back = SpellBook::from_json(&bytes).unwrap();
            proptest::prop_assert_eq!(&back, &b);
            proptest::prop_assert_eq!(back.to_json().unwrap(), bytes);
            Ok(())
        })
        .map_err(|e| format!("round trip: {e}"))?;

    // someone exports a book, someone else reloads it and casts it over
    // their own points
    let s = support::sql_fixture(10);
    let original = s.book.clone().with_metadata("Juan dela Cruz", "Good Features for Economic Indicators");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("shared.json");
    std::fs::write(&path, original.to_json().unwrap()).map_err(|e| e.to_string())?;
    let reloaded = SpellBook::from_json(&std::fs::read(&path).unwrap()).map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let theirs =
        PointDataset::from_points((0..400).map(|i| {
            (format!("t{i}"), Coordinate::new(rng.gen_range(103.65..104.0), rng.gen_range(1.2..1.48)).unwrap())
        }))
        .unwrap();
    let catalog = s.catalog();
    let a = original.cast(&theirs, &catalog).map_err(|e| e.to_string())?;
    let b = reloaded.cast(&theirs, &catalog).map_err(|e| e.to_string())?;
    check(a.to_csv_bytes() == b.to_csv_bytes(), || "reloaded book casts different CSV".into())?;
    check(a.to_geojson_bytes() == b.to_geojson_bytes(), || "reloaded book casts different GeoJSON".into())?;
    Ok(format!(
        "200 generated books canonical; shared book of {} spells reproduces a {}x{} matrix byte for byte",
        reloaded.spells.len(),
        a.row_count(),
        a.features.len()
    ))
}

// 4 ---------------------------------------------------------------------------

fn sql_golden_matrix() -> Verdict {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden");
    let spells = [
        (Spell::distance_to_nearest("embassy", "pois").build().unwrap(), "gis_osm_pois_free_1"),
        (Spell::number_of("mall", "pois", 1500.0).build().unwrap(), "gis_osm_pois_free_1"),
        (Spell::length_of("primary", "roads", 1000.0).build().unwrap(), "gis_osm_roads_free_1"),
    ];
    let mut n = 0;
    for (spell, table) in &spells {
        for dialect in Dialect::ALL {
            let sql = compile(spell, dialect, table, "points").map_err(|e| e.to_string())?.sql;
            let path = golden.join(format!("{}_{dialect}.sql", spell.feature_name));
            let want = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            check(sql == want, || format!("{} differs", path.display()))?;
            n += 1;
        }
    }
    Ok(format!("{n}/9 compiled queries byte-exact; {}", spatialite_execution()?))
}

#[cfg(feature = "spatialite")]
fn spatialite_execution() -> Verdict {
    let mismatches = support::spatialite_mismatches(500);
    check(mismatches.is_empty(), || format!("SpatiaLite disagrees:\n  {}", mismatches.join("\n  ")))?;
    Ok("SpatiaLite on 500 points matches the engine".into())
}

#[cfg(not(feature = "spatialite"))]
fn spatialite_execution() -> Verdict {
    Ok("SpatiaLite execution skipped (build with --features spatialite)".into())
}

// 5 ---------------------------------------------------------------------------

fn throughput() -> Verdict {
    let cfg = BenchConfig { points: 50_000, entries: 100_000, spells: 10, seed: 42 };
    let on = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| bench::run(&cfg)).map_err(|e| e.to_string())
    };
    let (serial, serial_matrix) = on(1)?;
    check(serial.wall < Duration::from_secs(120), || format!("single thread took {:.1?}", serial.wall))?;
    let (parallel, parallel_matrix) = on(8)?;
    check(serial_matrix.to_csv_bytes() == parallel_matrix.to_csv_bytes(), || "8-thread output differs".into())?;
    Ok(format!(
        "{} values in {:.2?} on 1 thread ({:.0} rows/s), {:.2?} on 8; outputs identical",
        serial.values,
        serial.wall,
        serial.rows_per_s(),
        parallel.wall
    ))
}

// 6 ---------------------------------------------------------------------------

fn filter_grammar() -> Verdict {
    runner(500)
        .run(&filter_ast(), |f| {
            let printed = f.to_string();
            let reparsed = parse_filter(&printed).unwrap();
            proptest::prop_assert_eq!(&reparsed, &f, "printed as {}", printed);
            proptest::prop_assert_eq!(reparsed.to_string(), printed);
            Ok(())
        })
        .map_err(|e| format!("round trip: {e}"))?;

    let eq = |k: &str, v: &str| TagFilter::eq(k, v);
    let w = |v: &str| TagFilter::eq("fclass", v);
    let corpus = [
        ("fclass=embassy", eq("fclass", "embassy")),
        ("embassy", w("embassy")),
        (
            "fclass=mall or fclass=supermarket and cuisine=\"fast food\"",
            w("mall").or(w("supermarket").and(eq("cuisine", "fast food"))),
        ),
        ("a and b or c", w("a").and(w("b")).or(w("c"))),
        ("not a and b", w("a").not().and(w("b"))),
        ("not (a or b)", w("a").or(w("b")).not()),
        ("a or b or c", w("a").or(w("b")).or(w("c"))),
        ("(a or b) and c", w("a").or(w("b")).and(w("c"))),
        ("* and not access=no", TagFilter::Any.and(eq("access", "no").not())),
        ("a and b and c or not d", w("a").and(w("b")).and(w("c")).or(w("d").not())),
    ];
    for (text, want) in &corpus {
        let got = parse_filter(text).map_err(|e| format!("{text}: {e}"))?;
        check(&got == want, || format!("{text}: parsed {got:?}"))?;
    }
    Ok(format!("500 generated filters round trip; {}/10 precedence cases match", corpus.len()))
}

// 7 ---------------------------------------------------------------------------

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn spellcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spellcast")).args(args).output().expect("spawn spellcast")
}

fn cli_contract() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pois = format!("pois={}", fixture("pois.geojson").display());
    let roads = format!("roads={}", fixture("roads.geojson").display());
    let points = fixture("points.csv");
    let cast = |book: &Path, out: &Path, threads: &str| {
        spellcast(&[
            "cast",
            "--layer",
            &pois,
            "--layer",
            &roads,
            "--input",
            points.to_str().unwrap(),
            "--spellbook",
            book.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
            "--parallelism",
            threads,
        ])
    };
    let status = |o: &Output| o.status.code().unwrap_or(-1);

    let book = fixture("book3.json");
    let (one, eight) = (dir.path().join("one.csv"), dir.path().join("eight.csv"));
    for (out, threads) in [(&one, "1"), (&eight, "8")] {
        let o = cast(&book, out, threads);
        check(status(&o) == 0, || format!("cast exited {}: {}", status(&o), String::from_utf8_lossy(&o.stderr)))?;
    }
    let bytes = std::fs::read(&one).unwrap();
    check(bytes == std::fs::read(&eight).unwrap(), || "parallelism 1 and 8 differ".into())?;
    let header = String::from_utf8_lossy(&bytes).lines().next().unwrap_or_default().to_string();
    for name in ["dist_embassy", "dist_primary", "num_supermarkets"] {
        check(header.split(',').any(|h| h == name), || format!("header lacks {name}: {header}"))?;
    }

    // bad spellbook: exit 1, nothing written
    let bad_book = dir.path().join("bad.json");
    std::fs::write(&bad_book, r#"{"schema_version": 2, "spells": []}"#).unwrap();
    let failed = dir.path().join("failed.csv");
    let o = cast(&bad_book, &failed, "2");
    check(status(&o) == 1, || format!("invalid spellbook exited {}", status(&o)))?;
    check(!failed.exists(), || "failed run left an output file".into())?;

    // missing input: exit 2, nothing written
    let o = cast(&dir.path().join("missing.json"), &failed, "2");
    check(status(&o) == 2, || format!("missing file exited {}", status(&o)))?;
    check(!failed.exists(), || "failed run left an output file".into())?;

    let o = spellcast(&["compile", "--spellbook", book.to_str().unwrap(), "--dburl", "mysql://x"]);
    check(status(&o) == 1, || format!("unsupported scheme exited {}", status(&o)))?;
    let o = spellcast(&["cast", "--parallelism", "0"]);
    check(status(&o) == 1, || format!("bad flag exited {}", status(&o)))?;

    Ok(format!("exit codes 0/1/2, no partial output, parallelism 1 = 8; header: {header}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("oracle equivalence", oracle_equivalence),
        ("geodesic closed forms", geodesic_closed_forms),
        ("spellbook round trip", spellbook_round_trip),
        ("SQL golden matrix", sql_golden_matrix),
        ("throughput", throughput),
        ("filter grammar", filter_grammar),
        ("CLI contract", cli_contract),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match verdict {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
