use std::fs;
use std::io::Write;
use std::path::Path;

use markov_recovery::io;
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::CliError;

fn temp_beside(path: &Path) -> Result<NamedTempFile, CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))
}

fn persist(tmp: NamedTempFile, path: &Path) -> Result<(), CliError> {
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = io::to_string(value)?;
    text.push('\n');
    let mut tmp = temp_beside(path)?;
    tmp.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))?;
    persist(tmp, path)
}

pub fn write_csv<R, I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    R: AsRef<[String]>,
    I: IntoIterator<Item = R>,
{
    let tmp = temp_beside(path)?;
    let mut w = csv::Writer::from_writer(tmp.reopen().map_err(|e| CliError::io(path, e))?);
    let csv_err = |e: csv::Error| CliError::new("IOError", format!("{}: {e}", path.display()));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.as_ref()).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    drop(w);
    persist(tmp, path)
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
