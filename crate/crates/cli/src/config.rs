use std::fs;
use std::path::Path;

use anyhow::anyhow;
use finsub::minkowski::NormSpec;
use finsub::Germ;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_path_to_error::Segment;

use crate::CliError;

/// `{"norm": {...}, "germ": {...}, "seed": 0}`; the germ is optional for
/// commands that only need the norm.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub norm: NormSpec,
    #[serde(default)]
    pub germ: Option<Germ>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn germ(&self) -> Result<&Germ, CliError> {
        self.germ
            .as_ref()
            .ok_or_else(|| CliError::Usage(anyhow!("config: missing field at /germ")))
    }
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Reads a JSON file; schema errors name the offending JSON pointer.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(anyhow!("cannot read {}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        CliError::Usage(anyhow!(
            "{}: schema error at {}: {}",
            path.display(),
            pointer(e.path()),
            e.inner()
        ))
    })
}
