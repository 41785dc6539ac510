//! Subcommand implementations, grouped by pipeline stage.

pub mod data;
pub mod eval;
pub mod train;

use std::fs;
use std::path::Path;

use saltdens::{Error, Result};

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
