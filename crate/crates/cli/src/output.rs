use std::path::Path;

use laplacian_growth::Contour;
use serde::Serialize;

use crate::error::CliError;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io(dir))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(laplacian_growth::Error::from)?;
    text.push('\n');
    std::fs::write(path, text).map_err(io(path))
}

pub fn write_contour(path: &Path, contour: &Contour) -> Result<(), CliError> {
    std::fs::write(path, contour.to_csv()).map_err(io(path))
}
