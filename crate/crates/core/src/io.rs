//! JSON-lines helpers shared by every JSONL artifact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{DecorrError, Result};

/// Reads one value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| DecorrError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| DecorrError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line)
            .map_err(|e| DecorrError::parse(format!("{}:{}", path.display(), i + 1), e))?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| DecorrError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for value in values {
        serde_json::to_writer(&mut w, value).map_err(|e| DecorrError::parse("jsonl output", e))?;
        w.write_all(b"\n").map_err(|e| DecorrError::io(path, e))?;
    }
    w.flush().map_err(|e| DecorrError::io(path, e))
}
