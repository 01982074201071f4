//! `spellcast`: cast, compile, validate and benchmark spellbooks.
//!
//! Exit status: 0 on success, 1 for invalid input (data, spellbook, URL or
//! arguments), 2 when a file cannot be read or written.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_binding, parse_layer_arg, LayerSpec, OutputFormat, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "spellcast", version, about = "Cast spatial features over point datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cast a spellbook over a point dataset and write the feature matrix.
    Cast(Shared),
    /// Print the SQL for each spell in the dialect named by --dburl.
    Compile(Shared),
    /// Check a spellbook and print one diagnostic per line.
    Validate(Shared),
    /// Time a cast over synthetic data.
    Bench(BenchArgs),
    /// Parse layer files without casting anything.
    IngestCheck(Shared),
}

#[derive(Args, Debug, Default)]
struct Shared {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reference layer as name=path[:geojson|csv]. Repeatable.
    #[arg(long = "layer", value_parser = parse_layer_arg)]
    layers: Vec<(String, LayerSpec)>,
    /// Point dataset (CSV).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Longitude column of the input [default: lon].
    #[arg(long)]
    lon_col: Option<String>,
    /// Latitude column of the input [default: lat].
    #[arg(long)]
    lat_col: Option<String>,
    #[arg(long)]
    spellbook: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format [default: from the output extension, else csv].
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Worker threads [default: one per core].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    parallelism: Option<u64>,
    /// postgresql://..., sqlite:///path or bigquery://project.
    #[arg(long)]
    dburl: Option<String>,
    /// Table holding a layer, as name=table. Repeatable; defaults to the layer name.
    #[arg(long = "source-table", value_parser = parse_binding)]
    source_tables: Vec<(String, String)>,
    /// Table holding the points [default: points].
    #[arg(long)]
    points_table: Option<String>,
}

impl Shared {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.layers.extend(self.layers);
        cfg.source_tables.extend(self.source_tables);
        macro_rules! overlay {
            ($($field:ident),*) => { $( if self.$field.is_some() { cfg.$field = self.$field; } )* };
        }
        overlay!(input, lon_col, lat_col, spellbook, output, format, dburl, points_table);
        if let Some(n) = self.parallelism {
            cfg.parallelism = Some(n as usize);
        }
        if cfg.parallelism == Some(0) {
            return Err(CliError::Validation("parallelism must be at least 1".into()));
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Dataset points (N).
    #[arg(long, default_value_t = 50_000)]
    points: usize,
    /// Layer entries (M).
    #[arg(long, default_value_t = 100_000)]
    entries: usize,
    /// Spells (S).
    #[arg(long, default_value_t = 10)]
    spells: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads [default: one per core].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    parallelism: Option<u64>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cast(args) => commands::cast(&args.into_config()?),
        Command::Compile(args) => commands::compile(&args.into_config()?),
        Command::Validate(args) => commands::validate(&args.into_config()?),
        Command::IngestCheck(args) => commands::ingest_check(&args.into_config()?),
        Command::Bench(args) => {
            let cfg = spellcast::bench::BenchConfig {
                points: args.points,
                entries: args.entries,
                spells: args.spells,
                seed: args.seed,
            };
            commands::bench(&cfg, args.parallelism.map(|n| n as usize))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
