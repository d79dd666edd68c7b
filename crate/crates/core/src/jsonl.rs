use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Reads every non-blank line of a JSON-lines file. Returns the 1-based line
/// number alongside each parse result so callers can report bad lines.
pub(crate) fn read_lines<T: DeserializeOwned>(
    reader: impl BufRead,
) -> io::Result<Vec<(usize, Result<T, serde_json::Error>)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, serde_json::from_str(&line)));
    }
    Ok(out)
}

/// Strict variant for files the workspace itself wrote: any bad line is fatal.
pub(crate) fn read_all<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, String> {
    let file = File::open(path).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for (line, parsed) in read_lines(BufReader::new(file)).map_err(|e| e.to_string())? {
        out.push(parsed.map_err(|e| format!("line {line}: {e}"))?);
    }
    Ok(out)
}

pub(crate) fn write_to<T: Serialize>(writer: impl Write, items: &[T]) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Writes through a sibling temp file and renames, so readers never see a
/// half-written file.
pub(crate) fn write_atomic(path: &Path, f: impl FnOnce(&mut File) -> io::Result<()>) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = File::create(&tmp)?;
        f(&mut file)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub(crate) fn write_all<T: Serialize>(path: &Path, items: &[T]) -> io::Result<()> {
    write_atomic(path, |file| write_to(file, items))
}
