//! Settings shared by every subcommand: seed, thread budget, options file.

use std::path::PathBuf;

use clap::Args;
use saltdens::kvtext::{self, KvDoc};
use saltdens::{Error, Result};

#[derive(Args, Debug)]
pub struct Common {
    /// Master seed; every stochastic choice in the run derives from it.
    #[arg(long)]
    pub seed: u64,

    /// Worker-thread budget, at least 1. The numeric core runs on one
    /// thread, so any accepted value produces identical results.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,

    /// Options file of `key = value` lines; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// [`Common`] after validation, with the options file (if any) loaded.
///
/// Tunables resolve in fixed precedence: explicit flag, then options-file
/// key, then the built-in default.
#[derive(Debug)]
pub struct RunContext {
    pub seed: u64,
    pub threads: usize,
    overlay: Option<KvDoc>,
}

impl RunContext {
    pub fn new(common: &Common) -> Result<Self> {
        if common.threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        let overlay = match &common.config {
            None => None,
            Some(path) => Some(KvDoc::read(path).map_err(|e| Error::Config(e.to_string()))?),
        };
        Ok(RunContext { seed: common.seed, threads: common.threads, overlay })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.overlay.as_ref().and_then(|doc| doc.get(key))
    }

    pub fn f64(&self, key: &str, flag: Option<f64>, default: f64) -> Result<f64> {
        match (flag, self.raw(key)) {
            (Some(v), _) => Ok(v),
            (None, None) => Ok(default),
            (None, Some(s)) => kvtext::parse_f64(s)
                .map_err(|msg| Error::Config(format!("config key {key}: {msg}"))),
        }
    }

    pub fn usize(&self, key: &str, flag: Option<usize>, default: usize) -> Result<usize> {
        match (flag, self.raw(key)) {
            (Some(v), _) => Ok(v),
            (None, None) => Ok(default),
            (None, Some(s)) => s.parse().map_err(|_| {
                Error::Config(format!("config key {key}: expected an integer, got {s:?}"))
            }),
        }
    }

    pub fn usize_list(&self, key: &str, flag: Option<&str>, default: &[usize]) -> Result<Vec<usize>> {
        match (flag, self.raw(key)) {
            (Some(s), _) => crate::parsers::usize_list(key, s),
            (None, Some(s)) => crate::parsers::usize_list(key, s),
            (None, None) => Ok(default.to_vec()),
        }
    }
}
