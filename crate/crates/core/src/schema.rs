//! Versioning of persisted artifacts.

use std::path::Path;

use crate::error::{Error, Result};

pub const VERSION: &str = "1.0";
pub const MAJOR: u32 = 1;

/// Rejects documents whose `schema_version` is missing or has an unknown major.
pub fn check(text: &str, origin: &Path) -> Result<()> {
    #[derive(serde::Deserialize)]
    struct Probe {
        schema_version: Option<String>,
    }
    let probe: Probe = serde_json::from_str(text).map_err(|e| Error::json(origin, e))?;
    let found = probe.schema_version.unwrap_or_default();
    let major = found.split('.').next().and_then(|m| m.parse::<u32>().ok());
    if major != Some(MAJOR) {
        return Err(Error::SchemaVersion {
            path: origin.to_path_buf(),
            found: if found.is_empty() { "<missing>".into() } else { found },
            expected: MAJOR,
        });
    }
    Ok(())
}
