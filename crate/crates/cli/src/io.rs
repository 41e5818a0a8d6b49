use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Context};

/// Buffered writer for `path`, creating parent directories.
pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).context(format!("cannot create {}", parent.display()))?;
    }
    let file = File::create(path).context(format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    Ok(csv::Writer::from_writer(create(path)?))
}

pub fn finish_csv<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<(), CliError> {
    w.flush().context(format!("cannot write {}", path.display()))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).context(format!("cannot write {}", path.display()))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .context(format!("cannot write {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).context(missing(path))?;
    serde_json::from_str(&text).context(format!("malformed {}", path.display()))
}

/// Error context for a stage input that an earlier stage should have written.
pub fn missing(path: &Path) -> String {
    format!("cannot read {} (has the producing stage run?)", path.display())
}
