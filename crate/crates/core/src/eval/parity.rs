//! Reference-vs-predicted exports for parity plots.

use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::eval::evaluators::DensityEvaluator;
use crate::eval::metrics::{compute_metrics, MetricSet};

#[derive(Debug, Clone, PartialEq)]
pub struct ParityRow {
    pub system_id: String,
    pub origin: String,
    pub reference: f64,
    pub predicted: f64,
}

/// Runs `evaluator` over every dataset row, pairing its prediction with the
/// stored target. Rows come back in dataset order along with the overall
/// metrics.
pub fn parity_export(
    evaluator: &dyn DensityEvaluator,
    dataset: &Dataset,
) -> Result<(Vec<ParityRow>, MetricSet)> {
    if dataset.is_empty() {
        return Err(Error::Data("parity export needs a non-empty dataset".into()));
    }
    evaluator.check_dataset(dataset)?;

    let mut rows = Vec::with_capacity(dataset.n_rows());
    for (meta, &target) in dataset.meta().iter().zip(dataset.targets()) {
        let predicted =
            evaluator.predict(&meta.component_ids, &meta.mole_fractions, meta.temperature)?;
        rows.push(ParityRow {
            system_id: meta.system_id.clone(),
            origin: meta.origin.as_str().to_string(),
            reference: target,
            predicted,
        });
    }

    let predictions: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
    let references: Vec<f64> = rows.iter().map(|r| r.reference).collect();
    let metrics = compute_metrics(&predictions, &references)?;
    Ok((rows, metrics))
}

/// Writes parity rows as CSV:
/// `system_id,origin,reference_kg_m3,predicted_kg_m3`, floats in
/// shortest-roundtrip form.
pub fn write_parity_csv(rows: &[ParityRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{other:?}")),
    })?;
    w.write_record(["system_id", "origin", "reference_kg_m3", "predicted_kg_m3"])
        .map_err(|e| Error::Data(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.system_id.as_str(),
            r.origin.as_str(),
            &format!("{}", r.reference),
            &format!("{}", r.predicted),
        ])
        .map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Origin, RowMeta};
    use crate::eval::evaluators::FnEvaluator;

    fn toy_dataset() -> Dataset {
        let meta = vec![
            RowMeta {
                system_id: "m-1".into(),
                group_id: 0,
                perm_idx: 0,
                origin: Origin::Experimental,
                component_ids: vec!["AX".into()],
                mole_fractions: vec![1.0],
                temperature: 1000.0,
            },
            RowMeta {
                system_id: "m-2".into(),
                group_id: 1,
                perm_idx: 0,
                origin: Origin::RkSynthetic,
                component_ids: vec!["BX".into()],
                mole_fractions: vec![1.0],
                temperature: 1100.0,
            },
        ];
        Dataset::new(
            vec![vec![0.25, 1.0, 0.0], vec![0.5, 1.0, 0.0]],
            vec![2000.0, 2200.0],
            meta,
            3,
            0,
            "sel-x".to_string(),
            900.0,
            1300.0,
            7,
        )
        .unwrap()
    }

    #[test]
    fn export_pairs_rows_with_targets() {
        let ds = toy_dataset();
        let eval = FnEvaluator::new("shift", |_, _, t| Ok(t * 2.0));
        let (rows, metrics) = parity_export(&eval, &ds).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].reference, 2000.0);
        assert_eq!(rows[0].predicted, 2000.0);
        assert_eq!(rows[1].predicted, 2200.0);
        assert_eq!(metrics.mae, 0.0);
        assert_eq!(metrics.n_points, 2);
        assert_eq!(rows[1].origin, "rk-synthetic");
    }

    #[test]
    fn csv_roundtrips_by_eye() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("parity.csv");
        let rows = vec![ParityRow {
            system_id: "m-1".into(),
            origin: "experimental".into(),
            reference: 2000.5,
            predicted: 1999.25,
        }];
        write_parity_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("system_id,origin,reference_kg_m3,predicted_kg_m3\n"));
        assert!(text.contains("m-1,experimental,2000.5,1999.25"));
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let empty = toy_dataset().subset(&[]).unwrap();
        assert!(empty.is_empty());
        let eval = FnEvaluator::new("id", |_, _, _| Ok(1.0));
        assert!(parity_export(&eval, &empty).is_err());
    }
}
