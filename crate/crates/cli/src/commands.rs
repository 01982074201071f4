use std::io::Write;
use std::path::{Path, PathBuf};

use spellcast::bench::{self, BenchConfig};
use spellcast::catalog::{load_csv, load_geojson, CsvLayerConfig, ReferenceLayer};
use spellcast::spellbook::SpellBookError;
use spellcast::{compile as compile_spell, parse_dburl, Catalog, PointDataset, SpellBook};

use crate::config::{LayerFormat, LayerSpec, OutputFormat, RunConfig};
use crate::error::CliError;

fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    value.as_deref().ok_or_else(|| CliError::Validation(format!("missing --{flag}")))
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn load_layer(name: &str, spec: &LayerSpec) -> Result<ReferenceLayer, CliError> {
    let bytes = read(&spec.path)?;
    let layer = match spec.resolved_format() {
        LayerFormat::Geojson => load_geojson(&bytes, name),
        LayerFormat::Csv => {
            let mut cfg = CsvLayerConfig::default();
            if let Some(c) = &spec.lon_col {
                cfg.lon_col = c.clone();
            }
            if let Some(c) = &spec.lat_col {
                cfg.lat_col = c.clone();
            }
            cfg.tag_cols = spec.tags.clone();
            load_csv(&bytes, name, &cfg)
        }
    };
    layer.map_err(|e| CliError::invalid(&spec.path, e))
}

fn load_catalog(cfg: &RunConfig) -> Result<Catalog, CliError> {
    let mut builder = Catalog::builder();
    for (name, spec) in &cfg.layers {
        let layer = load_layer(name, spec)?;
        builder.add(layer).map_err(|e| CliError::Validation(e.to_string()))?;
    }
    Ok(builder.seal())
}

fn load_book(path: &Path) -> Result<SpellBook, CliError> {
    SpellBook::from_json(&read(path)?).map_err(|e| CliError::invalid(path, e))
}

/// Runs `f` on a pool of `threads` workers, or the global pool.
fn on_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Io(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Writes through a temporary file in the same directory, renamed into place
/// only once complete.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).and_then(|_| tmp.as_file().sync_all()).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn cast(cfg: &RunConfig) -> Result<(), CliError> {
    let input = require(&cfg.input, "input")?;
    let book_path = require(&cfg.spellbook, "spellbook")?;
    let output = require(&cfg.output, "output")?;

    let book = load_book(book_path)?;
    let catalog = load_catalog(cfg)?;
    let dataset =
        PointDataset::from_csv(&read(input)?, cfg.lon_col(), cfg.lat_col()).map_err(|e| CliError::invalid(input, e))?;

    let matrix = on_pool(cfg.parallelism, || book.cast(&dataset, &catalog))?
        .map_err(|e| CliError::Validation(format!("{}: {e}", book_path.display())))?;
    let bytes = match cfg.output_format() {
        OutputFormat::Csv => matrix.to_csv_bytes(),
        OutputFormat::Geojson => matrix.to_geojson_bytes(),
    };
    write_atomic(output, &bytes)
}

/// The SQL text `compile` prints: one `-- spell: <name>` block per spell.
pub fn compile_text(book: &SpellBook, cfg: &RunConfig) -> Result<String, CliError> {
    let url = cfg.dburl.as_deref().ok_or_else(|| CliError::Validation("missing --dburl".into()))?;
    let dialect = parse_dburl(url).map_err(|e| CliError::Validation(e.to_string()))?.dialect();
    let mut out = String::new();
    for (i, spell) in book.spells.iter().enumerate() {
        let table = cfg.source_tables.get(&spell.layer).map(String::as_str).unwrap_or(&spell.layer);
        let query = compile_spell(spell, dialect, table, cfg.points_table())
            .map_err(|e| CliError::Validation(format!("spell {i}: {e}")))?;
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("-- spell: {}\n{}", spell.feature_name, query.sql));
    }
    Ok(out)
}

pub fn compile(cfg: &RunConfig) -> Result<(), CliError> {
    let book = load_book(require(&cfg.spellbook, "spellbook")?)?;
    let text = compile_text(&book, cfg)?;
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let path = require(&cfg.spellbook, "spellbook")?;
    let bytes = read(path)?;
    let diagnostics = match SpellBook::from_json(&bytes) {
        Ok(_) => return Ok(()),
        Err(e @ SpellBookError::Json { .. }) => vec![e.to_string()],
        Err(e) => e.diagnostics().iter().map(ToString::to_string).collect(),
    };
    for d in &diagnostics {
        println!("{d}");
    }
    Err(CliError::Validation(format!(
        "{}: {} problem{}",
        path.display(),
        diagnostics.len(),
        if diagnostics.len() == 1 { "" } else { "s" }
    )))
}

pub fn ingest_check(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.layers.is_empty() {
        return Err(CliError::Validation("no --layer given".into()));
    }
    for (name, spec) in &cfg.layers {
        let layer = load_layer(name, spec)?;
        println!("{name}: {} {} entries from {}", layer.entries.len(), layer.kind.name(), spec.path.display());
    }
    Ok(())
}

pub fn bench(cfg: &BenchConfig, threads: Option<usize>) -> Result<(), CliError> {
    let (report, _) = on_pool(threads, || bench::run(cfg))?.map_err(|e| CliError::Validation(e.to_string()))?;
    println!("{}", report.machine_line());
    eprintln!("{report}");
    Ok(())
}
