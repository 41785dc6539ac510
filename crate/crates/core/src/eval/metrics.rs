//! MAE / MAPE / r² over aligned prediction-reference pairs.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    /// Mean absolute error, kg/m³.
    pub mae: f64,
    /// Mean absolute percentage error, in percent.
    pub mape: f64,
    /// Coefficient of determination about the reference mean.
    pub r_squared: f64,
    pub n_points: usize,
}

/// MAE = mean |p−r|, MAPE = mean |p−r|/|r| · 100, r² = 1 − SS_res/SS_tot
/// with SS_tot taken about the reference mean. A zero reference makes MAPE
/// undefined and constant references make r² undefined; both are errors
/// rather than silent NaNs.
pub fn compute_metrics(predictions: &[f64], references: &[f64]) -> Result<MetricSet> {
    if predictions.len() != references.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} references",
            predictions.len(),
            references.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Data("metrics need at least one point".into()));
    }
    if let Some(bad) = predictions.iter().chain(references).find(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite value {bad} in metric input")));
    }
    if references.contains(&0.0) {
        return Err(Error::Data("a reference value is zero, MAPE is undefined".into()));
    }

    let n = predictions.len() as f64;
    let mae = predictions.iter().zip(references).map(|(p, r)| (p - r).abs()).sum::<f64>() / n;
    let mape =
        predictions.iter().zip(references).map(|(p, r)| ((p - r) / r).abs()).sum::<f64>() / n * 100.0;

    let mean = references.iter().sum::<f64>() / n;
    let ss_tot = references.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>();
    if ss_tot == 0.0 {
        return Err(Error::Data("references are constant, r² is undefined".into()));
    }
    let ss_res = predictions.iter().zip(references).map(|(p, r)| (p - r) * (p - r)).sum::<f64>();
    let r_squared = 1.0 - ss_res / ss_tot;

    Ok(MetricSet { mae, mape, r_squared, n_points: predictions.len() })
}

/// MAE and MAPE alone, for slices too degenerate for r² (single group,
/// constant references).
pub(crate) fn mae_mape(predictions: &[f64], references: &[f64]) -> Result<(f64, f64)> {
    if predictions.len() != references.len() || predictions.is_empty() {
        return Err(Error::Shape("need equal, non-zero prediction/reference lengths".into()));
    }
    if references.contains(&0.0) {
        return Err(Error::Data("a reference value is zero, MAPE is undefined".into()));
    }
    let n = predictions.len() as f64;
    let mae = predictions.iter().zip(references).map(|(p, r)| (p - r).abs()).sum::<f64>() / n;
    let mape =
        predictions.iter().zip(references).map(|(p, r)| ((p - r) / r).abs()).sum::<f64>() / n * 100.0;
    Ok((mae, mape))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_predictor() {
        let r = [2400.0, 2600.0, 1900.0];
        let m = compute_metrics(&r, &r).unwrap();
        assert_eq!(m.mae, 0.0);
        assert_eq!(m.mape, 0.0);
        assert_eq!(m.r_squared, 1.0);
        assert_eq!(m.n_points, 3);
    }

    #[test]
    fn hand_case_offset_ten() {
        let r = [2000.0, 3000.0];
        let p = [2010.0, 3010.0];
        let m = compute_metrics(&p, &r).unwrap();
        assert_eq!(m.mae, 10.0);
        // (10/2000 + 10/3000)/2 · 100 = 0.41666…%
        assert_abs_diff_eq!(m.mape, 5.0 / 12.0, epsilon = 1e-12);
        // SS_tot = 500000, SS_res = 200 → 1 − 4e-4.
        assert_abs_diff_eq!(m.r_squared, 0.9996, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(compute_metrics(&[1.0], &[0.0]).is_err(), "zero reference");
        assert!(compute_metrics(&[1.0, 2.0], &[5.0, 5.0]).is_err(), "constant references");
        assert!(compute_metrics(&[], &[]).is_err(), "empty");
        assert!(compute_metrics(&[1.0], &[1.0, 2.0]).is_err(), "length mismatch");
        assert!(compute_metrics(&[f64::NAN], &[1.0]).is_err(), "non-finite");
    }

    #[test]
    fn duplicating_every_row_changes_nothing() {
        let r = [2100.0, 2500.0, 2900.0];
        let p = [2090.0, 2510.0, 2950.0];
        let once = compute_metrics(&p, &r).unwrap();
        let twice = compute_metrics(&[p, p].concat(), &[r, r].concat()).unwrap();
        assert_eq!(once.mae, twice.mae);
        assert_eq!(once.mape, twice.mape);
        assert_eq!(once.r_squared, twice.r_squared);
    }

    #[test]
    fn r_squared_never_exceeds_one() {
        let r = [1000.0, 2000.0, 3000.0];
        let p = [9999.0, -500.0, 0.0];
        let m = compute_metrics(&p, &r).unwrap();
        assert!(m.r_squared <= 1.0);
        assert!(m.r_squared < 0.0, "terrible predictor should go negative");
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn row_order_is_irrelevant(
                pairs in prop::collection::vec((500.0..5000.0f64, 500.0..5000.0f64), 2..40),
                seed in 0u64..1000,
            ) {
                let p: Vec<f64> = pairs.iter().map(|&(a, _)| a).collect();
                let r: Vec<f64> = pairs.iter().map(|&(_, b)| b).collect();
                prop_assume!(r.iter().any(|&v| v != r[0]));

                use rand::seq::SliceRandom;
                use rand_chacha::rand_core::SeedableRng;
                let mut idx: Vec<usize> = (0..p.len()).collect();
                idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let ps: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
                let rs: Vec<f64> = idx.iter().map(|&i| r[i]).collect();

                let a = compute_metrics(&p, &r).unwrap();
                let b = compute_metrics(&ps, &rs).unwrap();
                prop_assert!((a.mae - b.mae).abs() <= 1e-9 * a.mae.abs().max(1.0));
                prop_assert!((a.mape - b.mape).abs() <= 1e-9 * a.mape.abs().max(1.0));
                prop_assert!((a.r_squared - b.r_squared).abs() <= 1e-9);
            }
        }
    }
}
