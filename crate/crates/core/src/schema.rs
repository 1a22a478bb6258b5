//! Self-describing output files.
//!
//! CSV files open with `# key: value` comment lines, the first of which is
//! `# schema_version: N`; JSON documents carry `"schema_version"` as their
//! first key. Readers in this crate skip `#` lines.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Writes the comment preamble of a CSV file.
pub fn write_csv_preamble<W: Write>(w: &mut W, kind: &str, meta: &[(&str, String)]) -> Result<()> {
    let mut text = format!("# schema_version: {SCHEMA_VERSION}\n# kind: {kind}\n");
    for (k, v) in meta {
        text.push_str(&format!("# {k}: {v}\n"));
    }
    w.write_all(text.as_bytes())
        .map_err(|e| Error::Parse(format!("writing csv preamble: {e}")))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    kind: &'a str,
    #[serde(flatten)]
    data: &'a T,
}

/// Pretty JSON with the schema header fields first. `data` must
/// serialize as a map.
pub fn to_json<T: Serialize>(kind: &str, data: &T) -> Result<String> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        kind,
        data,
    };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| Error::Parse(format!("serializing {kind}: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}
