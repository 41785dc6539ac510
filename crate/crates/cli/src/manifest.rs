//! Per-run provenance record.
//!
//! Every subcommand writes `manifest.txt` into its output directory: the
//! subcommand name, the resolved option values, a SHA-256 digest for each
//! input file, and the basename of each output. Paths are reduced to
//! basenames and wall times never appear, so identical runs write identical
//! manifests no matter where their output directories live.

use std::fmt::Display;
use std::path::Path;

use saltdens::digest::file_digest;
use saltdens::kvtext::{fmt_f64, KvDoc};
use saltdens::Result;

pub struct RunManifest {
    doc: KvDoc,
    n_inputs: usize,
    n_outputs: usize,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64, threads: usize) -> Self {
        let mut doc = KvDoc::new();
        doc.push("manifest", "saltdens-run");
        doc.push("tool_version", env!("CARGO_PKG_VERSION"));
        doc.push("subcommand", subcommand);
        doc.push("seed", seed.to_string());
        doc.push("threads", threads.to_string());
        RunManifest { doc, n_inputs: 0, n_outputs: 0 }
    }

    pub fn opt(&mut self, key: &str, value: impl Display) {
        self.doc.push(format!("opt.{key}"), value.to_string());
    }

    pub fn opt_f64(&mut self, key: &str, value: f64) {
        self.opt(key, fmt_f64(value));
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let entry = format!("{} sha256:{}", basename(path), file_digest(path)?);
        self.doc.push(format!("input.{}", self.n_inputs), entry);
        self.n_inputs += 1;
        Ok(())
    }

    pub fn output(&mut self, name: &str) {
        self.doc.push(format!("output.{}", self.n_outputs), name);
        self.n_outputs += 1;
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        self.doc.write(&out_dir.join("manifest.txt"))
    }
}

fn basename(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |name| name.to_string_lossy().into_owned())
}
