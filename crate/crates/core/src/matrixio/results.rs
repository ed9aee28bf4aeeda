use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fusion::FusionResult;
use crate::scalar::Scalar;

/// Writes one JSON record per line, in input order.
pub fn save_results<T: Scalar>(results: &[FusionResult<T>], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for r in results {
        let line = serde_json::to_string(r).map_err(|e| Error::Record(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    super::write_file(path.as_ref(), out.as_bytes())
}

pub fn load_results<T: Scalar>(path: impl AsRef<Path>) -> Result<Vec<FusionResult<T>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Record(format!("line {}: {e}", i + 1))))
        .collect()
}
