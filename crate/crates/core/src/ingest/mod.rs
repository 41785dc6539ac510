//! Parsers for the on-disk data model and descriptor down-selection.
//!
//! Three input files drive everything downstream:
//!
//! * `correlations.csv` — fitted `rho(T) = A - B*T` rows per system,
//! * `components.csv` — molar masses (g/mol in the file, kg/mol in memory),
//! * `rk_coefficients.csv` — Redlich-Kister terms per binary pair,
//!
//! plus a keyed-text descriptor table with one raw vector per compound.
//! Parsing yields immutable databases; [`selection::DescriptorSelection`]
//! then freezes the selected descriptor subset, its standardization, and the
//! temperature scaling for every dataset built afterwards.

mod correlations;
mod descriptors;
mod rk_table;
pub mod selection;

pub use correlations::{parse_correlations, write_correlations, CorrelationDatabase, CorrelationRecord};
pub use descriptors::{parse_descriptors, write_descriptors, DescriptorTable};
pub use rk_table::{parse_rk_coefficients, write_rk_coefficients, RkParseOutcome};
pub use selection::{downselect_indices, DescriptorSelection, DownselectConfig};
