//! File formats and synthetic data: CSV patch sets, PPM chart images, and
//! the seeded generator behind `synth`.

pub mod csv;
pub mod ppm;
pub mod synth;

use std::path::Path;

use crate::Error;

pub(crate) fn io_err(path: &Path, err: std::io::Error) -> Error {
    Error::Io(format!("{}: {err}", path.display()))
}

/// Write-temp-then-rename, so readers never observe a half-written file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}
