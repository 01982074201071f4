//! Run configuration: an optional TOML file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LayerFormat {
    Geojson,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Geojson,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub path: PathBuf,
    pub format: Option<LayerFormat>,
    /// Coordinate columns of CSV layers.
    pub lon_col: Option<String>,
    pub lat_col: Option<String>,
    /// CSV columns kept as tags; all others when absent.
    pub tags: Option<Vec<String>>,
}

impl LayerSpec {
    pub fn from_path(path: PathBuf, format: Option<LayerFormat>) -> Self {
        Self { path, format, lon_col: None, lat_col: None, tags: None }
    }

    /// Explicit format, else by extension (`.csv` is CSV, anything else GeoJSON).
    pub fn resolved_format(&self) -> LayerFormat {
        self.format.unwrap_or_else(|| match self.path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => LayerFormat::Csv,
            _ => LayerFormat::Geojson,
        })
    }
}

/// Everything a command may need; each command checks what it requires.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub layers: BTreeMap<String, LayerSpec>,
    pub input: Option<PathBuf>,
    pub lon_col: Option<String>,
    pub lat_col: Option<String>,
    pub spellbook: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub parallelism: Option<usize>,
    pub dburl: Option<String>,
    #[serde(default)]
    pub source_tables: BTreeMap<String, String>,
    pub points_table: Option<String>,
}

impl RunConfig {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for layer in cfg.layers.values_mut() {
            rebase(&mut layer.path);
        }
        for p in [&mut cfg.input, &mut cfg.spellbook, &mut cfg.output].into_iter().flatten() {
            rebase(p);
        }
        Ok(cfg)
    }

    pub fn lon_col(&self) -> &str {
        self.lon_col.as_deref().unwrap_or("lon")
    }

    pub fn lat_col(&self) -> &str {
        self.lat_col.as_deref().unwrap_or("lat")
    }

    pub fn points_table(&self) -> &str {
        self.points_table.as_deref().unwrap_or("points")
    }

    /// `--format`, else by output extension, else CSV.
    pub fn output_format(&self) -> OutputFormat {
        self.format.unwrap_or_else(|| match self.output.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("geojson") || ext.eq_ignore_ascii_case("json") => {
                OutputFormat::Geojson
            }
            _ => OutputFormat::Csv,
        })
    }
}

/// Parses `name=path[:format]`.
pub fn parse_layer_arg(arg: &str) -> Result<(String, LayerSpec), String> {
    let (name, rest) = arg.split_once('=').ok_or_else(|| format!("expected name=path[:format], got '{arg}'"))?;
    if name.is_empty() || rest.is_empty() {
        return Err(format!("expected name=path[:format], got '{arg}'"));
    }
    let (path, format) = match rest.rsplit_once(':') {
        Some((p, "geojson")) if !p.is_empty() => (p, Some(LayerFormat::Geojson)),
        Some((p, "csv")) if !p.is_empty() => (p, Some(LayerFormat::Csv)),
        _ => (rest, None),
    };
    Ok((name.to_string(), LayerSpec::from_path(PathBuf::from(path), format)))
}

/// Parses `name=value`.
pub fn parse_binding(arg: &str) -> Result<(String, String), String> {
    match arg.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(format!("expected name=table, got '{arg}'")),
    }
}
