//! The declarative mapping document.
//!
//! ```toml
//! time_field = "time"                 # default
//! fields = ["time", "GPS.lat", "GPS.lon"]  # declared fields, for self-describing sources
//!
//! [rename]            # stream -> source field (after flattening)
//! altitude = "alt_m"
//!
//! [prefix_flatten]    # record field -> prefix; default prefix is the field name
//! GPS = "gps"
//!
//! [scale]             # stream -> multiplier, Float64 streams only
//! altitude = 0.3048
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingConfig {
    #[serde(default = "default_time_field")]
    pub time_field: String,
    /// Dotted field paths a self-describing source (NDJSON) declares; empty
    /// means the time field plus the mapped field of every input.
    #[serde(default)]
    pub fields: Vec<String>,
    #[serde(default)]
    pub rename: BTreeMap<String, String>,
    #[serde(default)]
    pub prefix_flatten: BTreeMap<String, String>,
    #[serde(default)]
    pub scale: BTreeMap<String, f64>,
}

fn default_time_field() -> String {
    "time".to_string()
}

impl Default for MappingConfig {
    fn default() -> Self {
        MappingConfig {
            time_field: default_time_field(),
            fields: Vec::new(),
            rename: BTreeMap::new(),
            prefix_flatten: BTreeMap::new(),
            scale: BTreeMap::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid mapping config: {0}")]
    Parse(#[from] toml::de::Error),
}

impl MappingConfig {
    pub fn parse(text: &str) -> Result<MappingConfig, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<MappingConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        MappingConfig::parse(&text)
    }

    /// The source field an input stream reads, before validation.
    pub fn field_for<'a>(&'a self, stream: &'a str) -> &'a str {
        self.rename.get(stream).map_or(stream, String::as_str)
    }

    /// The declared paths for a self-describing source.
    pub fn declared_paths(&self, inputs: &[&str]) -> Vec<String> {
        if !self.fields.is_empty() {
            return self.fields.clone();
        }
        std::iter::once(self.time_field.clone()).chain(inputs.iter().map(|s| self.field_for(s).to_string())).collect()
    }
}
