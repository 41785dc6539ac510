//! Density models for molten-salt mixtures.
//!
//! Three model families share one prediction surface (density in kg/m^3 as a
//! function of composition and temperature):
//!
//! * ideal mixing of pure-salt linear correlations,
//! * Redlich-Kister excess expansions fit per binary pair,
//! * a feed-forward network over chemistry descriptors, trained either
//!   directly on experimental data or via a pretrain/freeze/fine-tune
//!   transfer workflow ([`transfer`]).
//!
//! The crate covers the full pipeline: ingesting correlation and coefficient
//! tables ([`ingest`]), expanding them into training datasets ([`dataset`]),
//! training ([`nn`], [`transfer`]), and model comparison ([`eval`]).

pub mod dataset;
pub mod digest;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod kvtext;
pub mod mixture;
pub mod nn;
pub mod synth;
pub mod transfer;

pub use error::{Error, Result};
