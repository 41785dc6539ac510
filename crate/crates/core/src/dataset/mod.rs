//! Training-data assembly: records, augmentation, featurization, datasets.
//!
//! Two builders produce [`Dataset`]s ready for the network:
//!
//! * [`build_experimental_dataset`] samples every fitted correlation at 50 K
//!   intervals across its ATR,
//! * [`build_rk_dataset`] evaluates the mixture models over a 10% composition
//!   grid for listed pseudo-ternary systems.
//!
//! Every pre-augmentation point becomes a *group* of `S!` permuted clones
//! that share one target and always travel together through [`split`].

mod build;
mod featurize;
mod grid;
mod io;

pub use build::{build_experimental_dataset, build_rk_dataset, split};
pub use featurize::{featurize, featurize_point};
pub use grid::{composition_grid, sample_temperatures, DEFAULT_GRID_STEP, DEFAULT_TEMPERATURE_STEP};
pub use io::{load_dataset, save_dataset, sidecar_path};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mixture::{MAX_COMPONENTS, FRACTION_SUM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Origin {
    Experimental,
    RkSynthetic,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Experimental => "experimental",
            Origin::RkSynthetic => "rk-synthetic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "experimental" => Ok(Origin::Experimental),
            "rk-synthetic" => Ok(Origin::RkSynthetic),
            other => Err(Error::Data(format!("unknown origin tag {other:?}"))),
        }
    }
}

/// One pre-featurization data point.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRecord {
    pub system_id: String,
    pub component_ids: Vec<String>,
    pub mole_fractions: Vec<f64>,
    pub temperature: f64,
    pub target_density: f64,
    pub origin: Origin,
}

impl DataRecord {
    pub fn new(
        system_id: impl Into<String>,
        component_ids: Vec<String>,
        mole_fractions: Vec<f64>,
        temperature: f64,
        target_density: f64,
        origin: Origin,
    ) -> Result<Self> {
        const WHAT: &str = "data record";
        if component_ids.is_empty() || component_ids.len() > MAX_COMPONENTS {
            return Err(Error::invalid(WHAT, format!("{} components", component_ids.len())));
        }
        if component_ids.len() != mole_fractions.len() {
            return Err(Error::invalid(
                WHAT,
                format!("{} components vs {} fractions", component_ids.len(), mole_fractions.len()),
            ));
        }
        let sum: f64 = mole_fractions.iter().sum();
        if (sum - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(Error::invalid(WHAT, format!("mole fractions sum to {sum}")));
        }
        if mole_fractions.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::invalid(WHAT, "mole fraction outside [0, 1]".to_string()));
        }
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::invalid(WHAT, format!("temperature {temperature} K")));
        }
        if !(target_density > 0.0) || !target_density.is_finite() {
            return Err(Error::invalid(WHAT, format!("target density {target_density} kg/m^3")));
        }
        Ok(DataRecord {
            system_id: system_id.into(),
            component_ids,
            mole_fractions,
            temperature,
            target_density,
            origin,
        })
    }

    pub fn n_components(&self) -> usize {
        self.component_ids.len()
    }
}

/// All `S!` slot orderings of a record's real components, identity first,
/// in lexicographic index order. Padded slots never move.
pub fn permute_augment(record: &DataRecord) -> Vec<DataRecord> {
    use itertools::Itertools;
    let s = record.n_components();
    (0..s)
        .permutations(s)
        .map(|perm| DataRecord {
            system_id: record.system_id.clone(),
            component_ids: perm.iter().map(|&i| record.component_ids[i].clone()).collect(),
            mole_fractions: perm.iter().map(|&i| record.mole_fractions[i]).collect(),
            temperature: record.temperature,
            target_density: record.target_density,
            origin: record.origin,
        })
        .collect()
}

/// Per-row bookkeeping kept alongside the feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMeta {
    pub system_id: String,
    /// Pre-augmentation point this row is a permutation clone of.
    pub group_id: usize,
    /// 0 = the original slot ordering.
    pub perm_idx: usize,
    pub origin: Origin,
    pub component_ids: Vec<String>,
    pub mole_fractions: Vec<f64>,
    pub temperature: f64,
}

/// Featurized rows + targets + metadata, with the feature schema provenance
/// (selection digest, temperature scaling) frozen in.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
    meta: Vec<RowMeta>,
    feature_len: usize,
    descriptor_count: usize,
    selection_digest: String,
    t_lo: f64,
    t_hi: f64,
    seed: u64,
}

impl Dataset {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        features: Vec<Vec<f64>>,
        targets: Vec<f64>,
        meta: Vec<RowMeta>,
        feature_len: usize,
        descriptor_count: usize,
        selection_digest: String,
        t_lo: f64,
        t_hi: f64,
        seed: u64,
    ) -> Result<Self> {
        if features.len() != targets.len() || features.len() != meta.len() {
            return Err(Error::Shape(format!(
                "{} feature rows, {} targets, {} metadata rows",
                features.len(),
                targets.len(),
                meta.len()
            )));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != feature_len {
                return Err(Error::Shape(format!("row {i}: {} features, want {feature_len}", row.len())));
            }
        }
        Ok(Dataset {
            features,
            targets,
            meta,
            feature_len,
            descriptor_count,
            selection_digest,
            t_lo,
            t_hi,
            seed,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn meta(&self) -> &[RowMeta] {
        &self.meta
    }

    pub fn feature_len(&self) -> usize {
        self.feature_len
    }

    pub fn descriptor_count(&self) -> usize {
        self.descriptor_count
    }

    pub fn selection_digest(&self) -> &str {
        &self.selection_digest
    }

    pub fn temperature_scaling(&self) -> (f64, f64) {
        (self.t_lo, self.t_hi)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Distinct group ids, in first-appearance (row) order.
    pub fn group_ids(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for m in &self.meta {
            if out.last() != Some(&m.group_id) {
                out.push(m.group_id);
            }
        }
        out
    }

    pub fn n_groups(&self) -> usize {
        self.group_ids().len()
    }

    /// Map group id -> row indices, in row order.
    pub fn rows_by_group(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, m) in self.meta.iter().enumerate() {
            map.entry(m.group_id).or_default().push(i);
        }
        map
    }

    /// New dataset containing `rows` (in the given order), same provenance.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(rows.len());
        let mut targets = Vec::with_capacity(rows.len());
        let mut meta = Vec::with_capacity(rows.len());
        for &i in rows {
            if i >= self.n_rows() {
                return Err(Error::Shape(format!("row index {i} out of range {}", self.n_rows())));
            }
            features.push(self.features[i].clone());
            targets.push(self.targets[i]);
            meta.push(self.meta[i].clone());
        }
        Dataset::new(
            features,
            targets,
            meta,
            self.feature_len,
            self.descriptor_count,
            self.selection_digest.clone(),
            self.t_lo,
            self.t_hi,
            self.seed,
        )
    }

    /// Errors unless `other` was featurized under the same selection.
    pub fn ensure_compatible(&self, other: &Dataset) -> Result<()> {
        if self.selection_digest != other.selection_digest {
            return Err(Error::Incompatible(format!(
                "selection digests differ: {} vs {}",
                self.selection_digest, other.selection_digest
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(ids: &[&str], xs: &[f64]) -> DataRecord {
        DataRecord::new(
            "sys",
            ids.iter().map(|s| s.to_string()).collect(),
            xs.to_vec(),
            1000.0,
            2000.0,
            Origin::Experimental,
        )
        .unwrap()
    }

    #[test]
    fn augment_counts_are_factorial() {
        assert_eq!(permute_augment(&record(&["A"], &[1.0])).len(), 1);
        assert_eq!(permute_augment(&record(&["A", "B"], &[0.4, 0.6])).len(), 2);
        assert_eq!(permute_augment(&record(&["A", "B", "C"], &[0.2, 0.3, 0.5])).len(), 6);
        assert_eq!(
            permute_augment(&record(&["A", "B", "C", "D"], &[0.1, 0.2, 0.3, 0.4])).len(),
            24
        );
    }

    #[test]
    fn augment_binary_orderings() {
        let out = permute_augment(&record(&["C1", "C2"], &[0.4, 0.6]));
        assert_eq!(out[0].component_ids, vec!["C1", "C2"]);
        assert_eq!(out[0].mole_fractions, vec![0.4, 0.6]);
        assert_eq!(out[1].component_ids, vec!["C2", "C1"]);
        assert_eq!(out[1].mole_fractions, vec![0.6, 0.4]);
    }

    #[test]
    fn augment_preserves_target_and_pairs_fractions_with_ids() {
        let rec = record(&["A", "B", "C"], &[0.2, 0.3, 0.5]);
        let out = permute_augment(&rec);
        let mut seen = std::collections::BTreeSet::new();
        for clone in &out {
            assert_eq!(clone.target_density, rec.target_density);
            assert_eq!(clone.temperature, rec.temperature);
            for (id, &x) in clone.component_ids.iter().zip(&clone.mole_fractions) {
                let orig = rec.component_ids.iter().position(|o| o == id).unwrap();
                assert_eq!(x, rec.mole_fractions[orig], "fraction follows its component");
            }
            assert!(seen.insert(clone.component_ids.clone()), "orderings unique");
        }
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn record_validation() {
        assert!(DataRecord::new("s", vec!["A".into()], vec![0.9], 1000.0, 2000.0, Origin::Experimental).is_err());
        assert!(DataRecord::new("s", vec!["A".into()], vec![1.0], -5.0, 2000.0, Origin::Experimental).is_err());
        assert!(DataRecord::new("s", vec!["A".into()], vec![1.0], 1000.0, -2.0, Origin::Experimental).is_err());
        assert!(DataRecord::new("s", vec!["A".into()], vec![1.0], 1000.0, f64::NAN, Origin::Experimental).is_err());
    }
}
