//! Model evaluation: regression metrics, parity exports, temperature and
//! composition sweeps with a smoothness score, and multi-model comparison
//! tables sliced by origin, component count, and anion class. Everything is
//! read-only over immutable models and datasets, aggregates in a fixed order,
//! and exports plot-ready CSV rather than rendering anything itself.

mod compare;
mod evaluators;
mod metrics;
mod parity;
mod sweeps;

pub use compare::{compare_models, write_metrics_csv, MetricRow};
pub use evaluators::{DensityEvaluator, DnnEvaluator, FnEvaluator, IdealEvaluator, RkEvaluator};
pub use metrics::{compute_metrics, MetricSet};
pub use parity::{parity_export, write_parity_csv, ParityRow};
pub use sweeps::{roughness, sweep_composition, sweep_temperature, CompositionPath, SweepResult, SweepSeries};
