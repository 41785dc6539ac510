//! Side-by-side model scoring over a dataset, sliced overall, by data
//! origin, by component count, and by anion class.
//!
//! Output is a long-format table (`slice, model, metric, value`) so
//! downstream plotting needs no pivoting logic. r² rows are omitted for
//! slices whose references are constant (the statistic is undefined there);
//! MAE/MAPE and the point count are always present.

use std::path::Path;

use crate::dataset::{Dataset, RowMeta};
use crate::error::{Error, Result};
use crate::eval::evaluators::DensityEvaluator;
use crate::eval::metrics::mae_mape;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub slice: String,
    pub model: String,
    pub metric: String,
    pub value: f64,
}

/// Halide class of one compound formula: trailing stoichiometric digits are
/// ignored, two-letter halides win over one-letter ones.
fn anion_class(compound_id: &str) -> &'static str {
    let stripped = compound_id.trim_end_matches(|c: char| c.is_ascii_digit());
    if stripped.ends_with("Cl") {
        "Cl"
    } else if stripped.ends_with("Br") {
        "Br"
    } else if stripped.ends_with('F') {
        "F"
    } else if stripped.ends_with('I') {
        "I"
    } else {
        "other"
    }
}

fn row_anion_class(meta: &RowMeta) -> &'static str {
    let mut class: Option<&'static str> = None;
    for id in &meta.component_ids {
        let c = anion_class(id);
        match class {
            None => class = Some(c),
            Some(prev) if prev != c => return "mixed",
            Some(_) => {}
        }
    }
    class.unwrap_or("other")
}

fn slices(dataset: &Dataset) -> Vec<(String, Vec<usize>)> {
    let meta = dataset.meta();
    let mut out = vec![("overall".to_string(), (0..meta.len()).collect::<Vec<_>>())];

    for origin in ["experimental", "rk-synthetic"] {
        let rows: Vec<usize> =
            (0..meta.len()).filter(|&i| meta[i].origin.as_str() == origin).collect();
        if !rows.is_empty() {
            out.push((format!("origin:{origin}"), rows));
        }
    }

    for count in 1..=crate::mixture::MAX_COMPONENTS {
        let rows: Vec<usize> =
            (0..meta.len()).filter(|&i| meta[i].component_ids.len() == count).collect();
        if !rows.is_empty() {
            out.push((format!("components:{count}"), rows));
        }
    }

    for class in ["F", "Cl", "Br", "I", "other", "mixed"] {
        let rows: Vec<usize> =
            (0..meta.len()).filter(|&i| row_anion_class(&meta[i]) == class).collect();
        if !rows.is_empty() {
            out.push((format!("anion:{class}"), rows));
        }
    }

    out
}

/// Scores every evaluator on every slice of the dataset. Evaluators run once
/// over the full dataset; slices reuse those predictions, so the table is
/// internally consistent by construction.
pub fn compare_models(
    evaluators: &[&dyn DensityEvaluator],
    dataset: &Dataset,
) -> Result<Vec<MetricRow>> {
    if evaluators.is_empty() {
        return Err(Error::invalid("model comparison", "no evaluators given"));
    }
    if dataset.is_empty() {
        return Err(Error::Data("model comparison needs a non-empty dataset".into()));
    }

    let mut predictions: Vec<Vec<f64>> = Vec::with_capacity(evaluators.len());
    for &ev in evaluators {
        ev.check_dataset(dataset)?;
        let preds = dataset
            .meta()
            .iter()
            .map(|m| ev.predict(&m.component_ids, &m.mole_fractions, m.temperature))
            .collect::<Result<Vec<f64>>>()?;
        predictions.push(preds);
    }

    let targets = dataset.targets();
    let mut table = Vec::new();
    for (slice_name, rows) in slices(dataset) {
        let refs: Vec<f64> = rows.iter().map(|&i| targets[i]).collect();
        let constant_refs = refs.iter().all(|&r| r == refs[0]);
        for (&ev, preds) in evaluators.iter().zip(&predictions) {
            let sliced: Vec<f64> = rows.iter().map(|&i| preds[i]).collect();
            let (mae, mape) = mae_mape(&sliced, &refs)?;
            let model = ev.name().to_string();
            table.push(MetricRow {
                slice: slice_name.clone(),
                model: model.clone(),
                metric: "mae".to_string(),
                value: mae,
            });
            table.push(MetricRow {
                slice: slice_name.clone(),
                model: model.clone(),
                metric: "mape".to_string(),
                value: mape,
            });
            if !constant_refs {
                let mean = refs.iter().sum::<f64>() / refs.len() as f64;
                let ss_tot = refs.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>();
                let ss_res =
                    sliced.iter().zip(&refs).map(|(p, r)| (p - r) * (p - r)).sum::<f64>();
                table.push(MetricRow {
                    slice: slice_name.clone(),
                    model: model.clone(),
                    metric: "r_squared".to_string(),
                    value: 1.0 - ss_res / ss_tot,
                });
            }
            table.push(MetricRow {
                slice: slice_name.clone(),
                model,
                metric: "n_points".to_string(),
                value: rows.len() as f64,
            });
        }
    }
    Ok(table)
}

/// Long-format CSV: `slice,model,metric,value`.
pub fn write_metrics_csv(rows: &[MetricRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{other:?}")),
    })?;
    w.write_record(["slice", "model", "metric", "value"])
        .map_err(|e| Error::Data(e.to_string()))?;
    for r in rows {
        w.write_record([r.slice.as_str(), r.model.as_str(), r.metric.as_str(), &format!("{}", r.value)])
            .map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
