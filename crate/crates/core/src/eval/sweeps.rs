//! Temperature and composition sweeps plus the second-difference roughness
//! score.
//!
//! A sweep samples every evaluator over one shared, strictly increasing,
//! uniformly spaced axis. Reference values, when a closed-form truth exists,
//! ride along as one more named series (wrap the truth in an
//! [`FnEvaluator`](crate::eval::FnEvaluator)).

use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::evaluators::DensityEvaluator;
use crate::mixture::MAX_COMPONENTS;

/// One model's densities along the sweep axis. `roughness` is `None` when
/// the axis is too short to form a second difference.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSeries {
    pub name: String,
    pub values: Vec<f64>,
    pub roughness: Option<f64>,
}

/// A bundle of series over one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    axis_label: String,
    axis: Vec<f64>,
    series: Vec<SweepSeries>,
}

impl SweepResult {
    pub fn new(axis_label: impl Into<String>, axis: Vec<f64>, series: Vec<SweepSeries>) -> Result<Self> {
        if axis.len() < 2 {
            return Err(Error::invalid("sweep", format!("{} axis points, need at least 2", axis.len())));
        }
        if !axis.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("sweep", "axis is not strictly increasing"));
        }
        for s in &series {
            if s.values.len() != axis.len() {
                return Err(Error::Shape(format!(
                    "series {} has {} values over {} axis points",
                    s.name,
                    s.values.len(),
                    axis.len()
                )));
            }
        }
        Ok(SweepResult { axis_label: axis_label.into(), axis, series })
    }

    pub fn axis_label(&self) -> &str {
        &self.axis_label
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn series(&self) -> &[SweepSeries] {
        &self.series
    }

    pub fn series_named(&self, name: &str) -> Option<&SweepSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn n_points(&self) -> usize {
        self.axis.len()
    }

    /// CSV export: first column is the axis (named by its label), then one
    /// column per series.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Data(format!("{other:?}")),
        })?;
        let mut header = vec![self.axis_label.clone()];
        header.extend(self.series.iter().map(|s| s.name.clone()));
        w.write_record(&header).map_err(|e| Error::Data(e.to_string()))?;
        for (i, &x) in self.axis.iter().enumerate() {
            let mut row = vec![format!("{x}")];
            row.extend(self.series.iter().map(|s| format!("{}", s.values[i])));
            w.write_record(&row).map_err(|e| Error::Data(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Mean absolute second difference normalized by the mean absolute value;
/// 0 for any exactly affine series, larger for wigglier ones. Assumes the
/// series was sampled on a uniformly spaced axis (as all sweeps here are).
pub fn roughness(values: &[f64]) -> Result<f64> {
    if values.len() < 3 {
        return Err(Error::invalid(
            "roughness input",
            format!("{} points, need at least 3 for a second difference", values.len()),
        ));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite value {bad} in roughness input")));
    }
    let wiggle = values
        .windows(3)
        .map(|w| ((w[2] - w[1]) - (w[1] - w[0])).abs())
        .sum::<f64>()
        / (values.len() - 2) as f64;
    if wiggle == 0.0 {
        return Ok(0.0);
    }
    let scale = values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64;
    Ok(wiggle / scale)
}

fn series_for(
    evaluators: &[&dyn DensityEvaluator],
    points: impl Fn(&dyn DensityEvaluator) -> Result<Vec<f64>>,
) -> Result<Vec<SweepSeries>> {
    if evaluators.is_empty() {
        return Err(Error::invalid("sweep", "no evaluators given"));
    }
    let mut out = Vec::with_capacity(evaluators.len());
    for &ev in evaluators {
        let values = points(ev)?;
        let score = if values.len() >= 3 { Some(roughness(&values)?) } else { None };
        out.push(SweepSeries { name: ev.name().to_string(), values, roughness: score });
    }
    Ok(out)
}

/// Samples every evaluator at `n` evenly spaced temperatures over
/// `t_range` (endpoints included; the last point is forced to the exact
/// upper bound) at a fixed composition.
pub fn sweep_temperature(
    evaluators: &[&dyn DensityEvaluator],
    component_ids: &[String],
    mole_fractions: &[f64],
    t_range: (f64, f64),
    n: usize,
) -> Result<SweepResult> {
    let (t_lo, t_hi) = t_range;
    if n < 2 {
        return Err(Error::invalid("sweep", format!("{n} temperature samples, need at least 2")));
    }
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
        return Err(Error::invalid("sweep", format!("temperature range [{t_lo}, {t_hi}]")));
    }

    let step = (t_hi - t_lo) / (n - 1) as f64;
    let axis: Vec<f64> =
        (0..n).map(|i| if i == n - 1 { t_hi } else { t_lo + step * i as f64 }).collect();

    let series = series_for(evaluators, |ev| {
        axis.iter().map(|&t| ev.predict(component_ids, mole_fractions, t)).collect()
    })?;
    SweepResult::new("T_K", axis, series)
}

/// How composition moves along a sweep. Both shapes keep the mole-fraction
/// sum at exactly the simplex by construction; coordinates that would push
/// any fraction outside `[0, 1]` are rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum CompositionPath {
    /// `varying`'s fraction is the sweep coordinate; the remainder
    /// `1 - x` is split among `others` in proportion to their weights.
    VaryOne {
        varying: String,
        others: Vec<(String, f64)>,
    },
    /// One component pinned at a constant fraction while the ratio
    /// `r = x_b / x_c` between the other two sweeps:
    /// `x_b = (1 - x_fixed) * r / (1 + r)`.
    FixedOneRatio {
        fixed: (String, f64),
        pair: (String, String),
    },
}

impl CompositionPath {
    fn validate(&self) -> Result<()> {
        const WHAT: &str = "composition path";
        match self {
            CompositionPath::VaryOne { varying, others } => {
                if others.is_empty() {
                    return Err(Error::invalid(WHAT, "nothing to split the remainder over"));
                }
                if others.len() + 1 > MAX_COMPONENTS {
                    return Err(Error::invalid(
                        WHAT,
                        format!("{} components, supported maximum is {MAX_COMPONENTS}", others.len() + 1),
                    ));
                }
                let mut ids: Vec<&str> = others.iter().map(|(id, _)| id.as_str()).collect();
                ids.push(varying);
                ids.sort_unstable();
                if ids.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::invalid(WHAT, "repeated component id"));
                }
                if others.iter().any(|&(_, w)| !(w > 0.0) || !w.is_finite()) {
                    return Err(Error::invalid(WHAT, "ratio weights must be positive"));
                }
                Ok(())
            }
            CompositionPath::FixedOneRatio { fixed: (id, x), pair: (b, c) } => {
                if id == b || id == c || b == c {
                    return Err(Error::invalid(WHAT, "repeated component id"));
                }
                if !(0.0..=1.0).contains(x) {
                    return Err(Error::invalid(WHAT, format!("pinned fraction {x} outside [0, 1]")));
                }
                Ok(())
            }
        }
    }

    /// Component ids in the order [`fractions_at`](Self::fractions_at)
    /// produces them.
    pub fn component_ids(&self) -> Vec<String> {
        match self {
            CompositionPath::VaryOne { varying, others } => {
                let mut ids = vec![varying.clone()];
                ids.extend(others.iter().map(|(id, _)| id.clone()));
                ids
            }
            CompositionPath::FixedOneRatio { fixed: (id, _), pair: (b, c) } => {
                vec![id.clone(), b.clone(), c.clone()]
            }
        }
    }

    /// Mole fractions at sweep coordinate `coord`.
    pub fn fractions_at(&self, coord: f64) -> Result<Vec<f64>> {
        const WHAT: &str = "composition path";
        if !coord.is_finite() {
            return Err(Error::invalid(WHAT, format!("coordinate {coord}")));
        }
        match self {
            CompositionPath::VaryOne { others, .. } => {
                if !(0.0..=1.0).contains(&coord) {
                    return Err(Error::invalid(
                        WHAT,
                        format!("fraction {coord} leaves the simplex"),
                    ));
                }
                let total: f64 = others.iter().map(|&(_, w)| w).sum();
                let rest = 1.0 - coord;
                let mut xs = vec![coord];
                xs.extend(others.iter().map(|&(_, w)| rest * (w / total)));
                Ok(xs)
            }
            CompositionPath::FixedOneRatio { fixed: (_, x_fixed), .. } => {
                if !(coord >= 0.0) {
                    return Err(Error::invalid(
                        WHAT,
                        format!("ratio {coord} must be non-negative"),
                    ));
                }
                let rest = 1.0 - x_fixed;
                let x_b = rest * (coord / (1.0 + coord));
                let x_c = rest - x_b;
                Ok(vec![*x_fixed, x_b, x_c])
            }
        }
    }

    /// Axis column name for exports.
    pub fn axis_label(&self) -> String {
        match self {
            CompositionPath::VaryOne { varying, .. } => format!("x_{varying}"),
            CompositionPath::FixedOneRatio { pair: (b, c), .. } => format!("ratio_{b}_{c}"),
        }
    }
}

/// Samples every evaluator along a composition path at fixed temperature,
/// over `n` evenly spaced sweep coordinates spanning `coord_range`
/// (endpoints included, upper bound exact).
pub fn sweep_composition(
    evaluators: &[&dyn DensityEvaluator],
    path: &CompositionPath,
    coord_range: (f64, f64),
    n: usize,
    temperature: f64,
) -> Result<SweepResult> {
    path.validate()?;
    let (lo, hi) = coord_range;
    if n < 2 {
        return Err(Error::invalid("sweep", format!("{n} composition samples, need at least 2")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid("sweep", format!("coordinate range [{lo}, {hi}]")));
    }

    let step = (hi - lo) / (n - 1) as f64;
    let axis: Vec<f64> =
        (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect();
    let ids = path.component_ids();
    let points: Vec<Vec<f64>> =
        axis.iter().map(|&c| path.fractions_at(c)).collect::<Result<_>>()?;

    let series = series_for(evaluators, |ev| {
        points.iter().map(|xs| ev.predict(&ids, xs, temperature)).collect()
    })?;
    SweepResult::new(path.axis_label(), axis, series)
}
