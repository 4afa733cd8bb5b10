use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline. Field order follows struct order and
/// maps are `BTreeMap`s, so output is stable across runs.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, to_json_pretty(value))
}

/// `round(100 * num / den)` with halves rounded away from zero, computed in
/// integers so that exact halves are never lost to float error.
pub fn round_pct(num: u64, den: u64) -> Option<u64> {
    if den == 0 {
        return None;
    }
    let (num, den) = (num as u128, den as u128);
    Some(((200 * num + den) / (2 * den)) as u64)
}

/// Rounds to two decimals, halves away from zero.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
