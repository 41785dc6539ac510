//! Deterministic descriptor down-selection and the frozen feature schema.
//!
//! The selection procedure is this repo's own documented recipe (the upstream
//! choice of working descriptors is not reproducible from public material):
//!
//! 1. drop every column whose variance across compounds is ≤ `variance_floor`
//!    (default 0: constants go),
//! 2. scan the remaining columns in ascending index order, dropping any whose
//!    absolute Pearson correlation with an already-kept column exceeds
//!    `corr_threshold` (default 0.95),
//! 3. if more than `target_count` (default 134) survive, keep the
//!    `target_count` highest-variance columns (ties: lower index wins).
//!
//! Fewer survivors than `target_count` is a warning, not an error.
//!
//! The resulting [`DescriptorSelection`] is the single artifact every later
//! stage keys on: it freezes the selected indices, their standardization
//! (zero mean / unit variance over the compound library), the per-compound
//! standardized vectors, and the affine temperature scaling. Datasets and
//! checkpoints embed its digest, so artifacts from different ingest runs
//! cannot be mixed silently.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::digest::Hasher;
use crate::error::{Error, Result};
use crate::ingest::DescriptorTable;
use crate::mixture::MAX_COMPONENTS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownselectConfig {
    pub variance_floor: f64,
    pub corr_threshold: f64,
    pub target_count: usize,
}

impl Default for DownselectConfig {
    fn default() -> Self {
        DownselectConfig { variance_floor: 0.0, corr_threshold: 0.95, target_count: 134 }
    }
}

impl DownselectConfig {
    fn validate(&self) -> Result<()> {
        if !(self.variance_floor >= 0.0) {
            return Err(Error::Config(format!("variance_floor {} must be >= 0", self.variance_floor)));
        }
        if !(self.corr_threshold > 0.0 && self.corr_threshold <= 1.0) {
            return Err(Error::Config(format!("corr_threshold {} must be in (0, 1]", self.corr_threshold)));
        }
        if self.target_count == 0 {
            return Err(Error::Config("target_count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Column-major copy of one descriptor column across compounds (iteration
/// order of the table's sorted compound map).
fn column(table: &DescriptorTable, idx: usize) -> Vec<f64> {
    table.compounds().values().map(|v| v[idx]).collect()
}

/// Population variance, exactly 0 for constant columns (no float residue).
fn variance(values: &[f64]) -> f64 {
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if min == max {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Steps 1–3 above. Returns the ascending selected indices plus any shortfall
/// warning.
pub fn downselect_indices(table: &DescriptorTable, config: &DownselectConfig) -> Result<(Vec<usize>, Vec<String>)> {
    config.validate()?;
    if table.n_compounds() < 2 {
        return Err(Error::invalid(
            "descriptor table",
            format!("{} compounds; down-selection needs at least 2", table.n_compounds()),
        ));
    }

    let columns: Vec<Vec<f64>> = (0..table.d_raw()).map(|i| column(table, i)).collect();
    let variances: Vec<f64> = columns.iter().map(|c| variance(c)).collect();

    // Step 1: variance floor.
    let survivors: Vec<usize> = (0..table.d_raw())
        .filter(|&i| variances[i] > config.variance_floor)
        .collect();

    // Step 2: correlation prune, ascending scan against what's already kept.
    let mut kept: Vec<usize> = Vec::new();
    for &idx in &survivors {
        let correlated = kept
            .iter()
            .any(|&k| pearson(&columns[idx], &columns[k]).abs() > config.corr_threshold);
        if !correlated {
            kept.push(idx);
        }
    }

    // Step 3: variance top-k if over budget.
    let mut warnings = Vec::new();
    if kept.len() > config.target_count {
        kept.sort_by(|&l, &r| {
            variances[r]
                .partial_cmp(&variances[l])
                .expect("variances are finite")
                .then(l.cmp(&r))
        });
        kept.truncate(config.target_count);
        kept.sort_unstable();
    } else if kept.len() < config.target_count {
        warnings.push(format!(
            "down-selection kept {} descriptors, short of the requested {}",
            kept.len(),
            config.target_count
        ));
    }

    Ok((kept, warnings))
}

/// The frozen feature schema: selected descriptor columns, their
/// standardization, per-compound standardized vectors, and temperature
/// scaling. See the module docs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSelection {
    pub d_raw: usize,
    pub selected_indices: Vec<usize>,
    pub selected_names: Vec<String>,
    /// Per selected column, over the compound library.
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Temperature scaling: `T_scaled = (T - t_lo) / (t_hi - t_lo)`.
    pub t_lo: f64,
    pub t_hi: f64,
    pub config: DownselectConfig,
    /// Digest of the descriptor table the selection was computed from.
    pub source_digest: String,
    /// Standardized selected vectors, ready for featurization.
    pub compound_features: BTreeMap<String, Vec<f64>>,
    pub warnings: Vec<String>,
}

impl DescriptorSelection {
    /// Runs down-selection and freezes standardization + scaling.
    /// `(t_lo, t_hi)` is the temperature span scaling maps onto `[0, 1]` —
    /// normally the parsed database's full ATR union, so every dataset built
    /// from one ingest run shares it.
    pub fn compute(table: &DescriptorTable, config: DownselectConfig, t_span: (f64, f64)) -> Result<Self> {
        let (t_lo, t_hi) = t_span;
        if !(t_lo < t_hi) || !t_lo.is_finite() || !t_hi.is_finite() {
            return Err(Error::Config(format!("temperature span [{t_lo}, {t_hi}]")));
        }
        let (selected_indices, warnings) = downselect_indices(table, &config)?;
        if selected_indices.is_empty() {
            return Err(Error::Data("down-selection kept zero descriptors".into()));
        }

        let mut means = Vec::with_capacity(selected_indices.len());
        let mut stds = Vec::with_capacity(selected_indices.len());
        for &idx in &selected_indices {
            let col = column(table, idx);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            // Selected columns have variance > variance_floor >= 0, so the
            // standard deviation is strictly positive.
            let std = variance(&col).sqrt();
            means.push(mean);
            stds.push(std);
        }

        let compound_features: BTreeMap<String, Vec<f64>> = table
            .compounds()
            .iter()
            .map(|(id, raw)| {
                let std = selected_indices
                    .iter()
                    .enumerate()
                    .map(|(k, &idx)| (raw[idx] - means[k]) / stds[k])
                    .collect();
                (id.clone(), std)
            })
            .collect();

        Ok(DescriptorSelection {
            d_raw: table.d_raw(),
            selected_names: selected_indices.iter().map(|&i| table.names()[i].clone()).collect(),
            selected_indices,
            means,
            stds,
            t_lo,
            t_hi,
            config,
            source_digest: table.digest(),
            compound_features,
            warnings,
        })
    }

    /// Number of descriptors per component slot.
    pub fn d(&self) -> usize {
        self.selected_indices.len()
    }

    /// Full feature-vector width: `1 + 4 + 4 * d`.
    pub fn feature_len(&self) -> usize {
        1 + MAX_COMPONENTS + MAX_COMPONENTS * self.d()
    }

    pub fn scale_temperature(&self, t: f64) -> f64 {
        (t - self.t_lo) / (self.t_hi - self.t_lo)
    }

    /// Standardized selected descriptor vector for one compound.
    pub fn features_for(&self, compound_id: &str) -> Result<&[f64]> {
        self.compound_features
            .get(compound_id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownCompound(compound_id.to_string()))
    }

    /// Digest over everything that affects featurization (warnings excluded).
    pub fn digest(&self) -> String {
        let mut h = Hasher::new();
        h.u64(self.d_raw as u64);
        for &i in &self.selected_indices {
            h.u64(i as u64);
        }
        for name in &self.selected_names {
            h.str(name);
        }
        h.f64s(&self.means);
        h.f64s(&self.stds);
        h.f64(self.t_lo);
        h.f64(self.t_hi);
        h.f64(self.config.variance_floor);
        h.f64(self.config.corr_threshold);
        h.u64(self.config.target_count as u64);
        h.str(&self.source_digest);
        for (id, values) in &self.compound_features {
            h.str(id);
            h.f64s(values);
        }
        h.finish()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("selection serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 4 compounds × 6 columns exercising each rule:
    /// col 0: constant            -> dropped in step 1
    /// col 1: varies              -> kept
    /// col 2: exact copy of col 1 -> dropped in step 2 (|r| = 1)
    /// col 3: varies, independent -> kept
    /// col 4: -2 * col 3 + 1      -> dropped in step 2 (|r| = 1)
    /// col 5: weakly related      -> kept
    fn toy_table() -> DescriptorTable {
        let names = (0..6).map(|i| format!("c{i}")).collect();
        let mut compounds = BTreeMap::new();
        compounds.insert("A".to_string(), vec![7.0, 1.0, 1.0, 2.0, -3.0, 0.3]);
        compounds.insert("B".to_string(), vec![7.0, 2.0, 2.0, 8.0, -15.0, 0.1]);
        compounds.insert("C".to_string(), vec![7.0, 4.0, 4.0, 5.0, -9.0, 4.0]);
        compounds.insert("D".to_string(), vec![7.0, 8.0, 8.0, 1.0, -1.0, 2.5]);
        DescriptorTable::new(names, compounds).unwrap()
    }

    #[test]
    fn steps_drop_constant_and_duplicates() {
        let cfg = DownselectConfig { target_count: 10, ..DownselectConfig::default() };
        let (kept, warnings) = downselect_indices(&toy_table(), &cfg).unwrap();
        assert_eq!(kept, vec![1, 3, 5]);
        assert_eq!(warnings.len(), 1, "shortfall vs target 10 warns");
    }

    #[test]
    fn top_k_by_variance_with_index_ties() {
        // Variances: col1 var([1,2,4,8]) > col5 var([.3,.1,4,2.5])? Compute:
        // col1 mean 3.75, var 7.1875; col3 mean 4, var 7.5; col5 mean 1.725, var 2.641875.
        // target 2 keeps the two highest-variance survivors: cols 3 and 1.
        let cfg = DownselectConfig { target_count: 2, ..DownselectConfig::default() };
        let (kept, warnings) = downselect_indices(&toy_table(), &cfg).unwrap();
        assert_eq!(kept, vec![1, 3]);
        assert!(warnings.is_empty());
    }

    #[test]
    fn selection_is_deterministic_and_order_invariant() {
        let table = toy_table();
        let cfg = DownselectConfig::default();
        let s1 = DescriptorSelection::compute(&table, cfg.clone(), (800.0, 1400.0)).unwrap();
        let s2 = DescriptorSelection::compute(&table, cfg, (800.0, 1400.0)).unwrap();
        assert_eq!(s1.digest(), s2.digest());
        // BTreeMap storage makes compound statement order irrelevant by
        // construction; double-check via a rebuilt map in reverse order.
        let mut rev = BTreeMap::new();
        for (k, v) in table.compounds().iter().rev() {
            rev.insert(k.clone(), v.clone());
        }
        let table_rev = DescriptorTable::new(table.names().to_vec(), rev).unwrap();
        let s3 = DescriptorSelection::compute(&table_rev, DownselectConfig::default(), (800.0, 1400.0)).unwrap();
        assert_eq!(s1.digest(), s3.digest());
    }

    #[test]
    fn standardization_is_zero_mean_unit_variance() {
        let sel = DescriptorSelection::compute(&toy_table(), DownselectConfig::default(), (800.0, 1400.0)).unwrap();
        let n = sel.compound_features.len() as f64;
        for k in 0..sel.d() {
            let col: Vec<f64> = sel.compound_features.values().map(|v| v[k]).collect();
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-12, "column {k} mean {mean}");
            assert!((var - 1.0).abs() < 1e-12, "column {k} variance {var}");
        }
    }

    #[test]
    fn temperature_scaling_maps_span_to_unit() {
        let sel = DescriptorSelection::compute(&toy_table(), DownselectConfig::default(), (800.0, 1400.0)).unwrap();
        assert_eq!(sel.scale_temperature(800.0), 0.0);
        assert_eq!(sel.scale_temperature(1400.0), 1.0);
        assert_eq!(sel.scale_temperature(1100.0), 0.5);
        // Extrapolation is allowed, just off the unit interval.
        assert!(sel.scale_temperature(500.0) < 0.0);
    }

    #[test]
    fn save_load_roundtrip_preserves_digest() {
        let sel = DescriptorSelection::compute(&toy_table(), DownselectConfig::default(), (800.0, 1400.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("selection.json");
        sel.save(&p).unwrap();
        let back = DescriptorSelection::load(&p).unwrap();
        assert_eq!(back, sel);
        assert_eq!(back.digest(), sel.digest());
    }

    #[test]
    fn too_few_compounds_rejected() {
        let mut compounds = BTreeMap::new();
        compounds.insert("A".to_string(), vec![1.0, 2.0]);
        let table = DescriptorTable::new(vec!["a".into(), "b".into()], compounds).unwrap();
        assert!(downselect_indices(&table, &DownselectConfig::default()).is_err());
    }
}
