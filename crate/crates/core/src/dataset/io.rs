//! Dataset persistence: CSV (authoritative interchange format) + JSON sidecar.
//!
//! The CSV carries one row per featurized record:
//! `system_id, perm_idx, origin, T_K, x1..x4, f1..f{W}, rho_kg_m3`.
//! The sidecar (`<name>.csv.meta.json`) records the feature schema provenance
//! (selection digest, temperature scaling, descriptor count, seed) plus the
//! per-system base component ordering.
//!
//! Groups are reconstructed on load from the `perm_idx` column: rows of one
//! group are exported consecutively with `perm_idx` counting up from 0, so a
//! zero starts a new group; load renumbers group ids contiguously from 0.
//! Each row's slot ordering is recovered by applying the `perm_idx`-th
//! lexicographic permutation to the system's base ordering. All floats are
//! written with shortest-roundtrip precision, so save → load is bit-exact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Origin, RowMeta};
use crate::error::{Error, Result};
use crate::mixture::MAX_COMPONENTS;

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    selection_digest: String,
    t_lo: f64,
    t_hi: f64,
    descriptor_count: usize,
    feature_len: usize,
    seed: u64,
    n_rows: usize,
    n_groups: usize,
    /// Base (perm_idx = 0) component ordering per system.
    systems: BTreeMap<String, Vec<String>>,
}

/// Sidecar file that belongs to a dataset CSV.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    csv_path.with_file_name(name)
}

fn header(feature_len: usize) -> Vec<String> {
    let mut h = vec!["system_id".to_string(), "perm_idx".to_string(), "origin".to_string(), "T_K".to_string()];
    for i in 1..=MAX_COMPONENTS {
        h.push(format!("x{i}"));
    }
    for i in 1..=feature_len {
        h.push(format!("f{i}"));
    }
    h.push("rho_kg_m3".to_string());
    h
}

pub fn save_dataset(dataset: &Dataset, csv_path: &Path) -> Result<()> {
    // Base ordering per system, from the perm_idx = 0 rows.
    let mut systems: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for m in dataset.meta() {
        if m.perm_idx != 0 {
            continue;
        }
        if let Some(existing) = systems.get(&m.system_id) {
            if existing != &m.component_ids {
                return Err(Error::Data(format!(
                    "system {} has two base component orderings ({existing:?} vs {:?}); \
                     system ids must be unique per component list",
                    m.system_id, m.component_ids
                )));
            }
        } else {
            systems.insert(m.system_id.clone(), m.component_ids.clone());
        }
    }

    let mut w = csv::Writer::from_path(csv_path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(csv_path, io),
        other => Error::Data(format!("{other:?}")),
    })?;
    w.write_record(header(dataset.feature_len()))
        .map_err(|e| Error::Data(e.to_string()))?;

    let mut row: Vec<String> = Vec::with_capacity(9 + dataset.feature_len());
    for (i, m) in dataset.meta().iter().enumerate() {
        row.clear();
        row.push(m.system_id.clone());
        row.push(m.perm_idx.to_string());
        row.push(m.origin.as_str().to_string());
        row.push(format!("{}", m.temperature));
        for slot in 0..MAX_COMPONENTS {
            let x = m.mole_fractions.get(slot).copied().unwrap_or(0.0);
            row.push(format!("{x}"));
        }
        for f in &dataset.features()[i] {
            row.push(format!("{f}"));
        }
        row.push(format!("{}", dataset.targets()[i]));
        w.write_record(&row).map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(csv_path, e))?;

    let (t_lo, t_hi) = dataset.temperature_scaling();
    let sidecar = Sidecar {
        selection_digest: dataset.selection_digest().to_string(),
        t_lo,
        t_hi,
        descriptor_count: dataset.descriptor_count(),
        feature_len: dataset.feature_len(),
        seed: dataset.seed(),
        n_rows: dataset.n_rows(),
        n_groups: dataset.n_groups(),
        systems,
    };
    let meta_path = sidecar_path(csv_path);
    std::fs::write(&meta_path, serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"))
        .map_err(|e| Error::io(&meta_path, e))
}

pub fn load_dataset(csv_path: &Path) -> Result<Dataset> {
    let meta_path = sidecar_path(csv_path);
    let sidecar: Sidecar = serde_json::from_str(
        &std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?,
    )
    .map_err(|e| Error::Data(format!("{}: {e}", meta_path.display())))?;

    // Lexicographic slot permutations per component count, applied to each
    // system's base ordering to recover per-row slot ids.
    let perms_by_size: Vec<Vec<Vec<usize>>> = (0..=MAX_COMPONENTS)
        .map(|s| (0..s).permutations(s).collect::<Vec<_>>())
        .collect();

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(csv_path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(csv_path, io),
            other => Error::parse(csv_path, 0, format!("{other:?}")),
        })?;

    let want_header = header(sidecar.feature_len);
    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut meta: Vec<RowMeta> = Vec::new();
    let mut first = true;
    let mut group_id = 0usize;
    let mut started = false;

    for row in reader.records() {
        let row = row.map_err(|e| Error::parse(csv_path, 0, e.to_string()))?;
        if first {
            let got: Vec<&str> = row.iter().collect();
            if got != want_header.iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(Error::parse(csv_path, 1, "dataset header does not match sidecar feature width"));
            }
            first = false;
            continue;
        }
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != want_header.len() {
            return Err(Error::parse(csv_path, line, format!("{} fields, want {}", row.len(), want_header.len())));
        }
        let err = |msg: String| Error::parse(csv_path, line, msg);
        let num = |raw: &str, what: &str| -> Result<f64> {
            raw.parse::<f64>()
                .map_err(|_| Error::parse(csv_path, line, format!("{what}: bad number {raw:?}")))
        };

        let system_id = row[0].to_string();
        let perm_idx: usize = row[1].parse().map_err(|_| err(format!("perm_idx: bad integer {:?}", &row[1])))?;
        let origin = Origin::parse(&row[2]).map_err(|e| err(e.to_string()))?;
        let temperature = num(&row[3], "T_K")?;

        let base = sidecar
            .systems
            .get(&system_id)
            .ok_or_else(|| err(format!("system {system_id} missing from sidecar")))?;
        let s = base.len();
        let mut xs = Vec::with_capacity(s);
        for slot in 0..MAX_COMPONENTS {
            let x = num(&row[4 + slot], "x")?;
            if slot < s {
                xs.push(x);
            } else if x != 0.0 {
                return Err(err(format!("padded slot x{} must be 0, got {x}", slot + 1)));
            }
        }

        let mut fv = Vec::with_capacity(sidecar.feature_len);
        for k in 0..sidecar.feature_len {
            fv.push(num(&row[4 + MAX_COMPONENTS + k], "f")?);
        }
        let rho = num(&row[4 + MAX_COMPONENTS + sidecar.feature_len], "rho_kg_m3")?;

        // Group bookkeeping: perm_idx 0 opens a group, others must continue it.
        if perm_idx == 0 {
            if started {
                group_id += 1;
            }
            started = true;
        } else {
            let prev = meta.last().ok_or_else(|| err("first row must have perm_idx 0".into()))?;
            if prev.perm_idx + 1 != perm_idx || prev.system_id != system_id {
                return Err(err(format!(
                    "perm_idx {perm_idx} does not continue the open group (previous {})",
                    prev.perm_idx
                )));
            }
        }

        let perm = perms_by_size[s]
            .get(perm_idx)
            .ok_or_else(|| err(format!("perm_idx {perm_idx} out of range for {s} components")))?;
        let component_ids: Vec<String> = perm.iter().map(|&i| base[i].clone()).collect();

        features.push(fv);
        targets.push(rho);
        meta.push(RowMeta {
            system_id,
            group_id,
            perm_idx,
            origin,
            component_ids,
            mole_fractions: xs,
            temperature,
        });
    }
    if first {
        return Err(Error::parse(csv_path, 0, "empty file, want header row"));
    }

    let ds = Dataset::new(
        features,
        targets,
        meta,
        sidecar.feature_len,
        sidecar.descriptor_count,
        sidecar.selection_digest,
        sidecar.t_lo,
        sidecar.t_hi,
        sidecar.seed,
    )?;
    if ds.n_rows() != sidecar.n_rows || ds.n_groups() != sidecar.n_groups {
        return Err(Error::Data(format!(
            "{}: sidecar says {} rows / {} groups, file has {} / {}",
            csv_path.display(),
            sidecar.n_rows,
            sidecar.n_groups,
            ds.n_rows(),
            ds.n_groups()
        )));
    }

    // Augmentation-group integrity: every group carries all s! clones.
    for rows in ds.rows_by_group().values() {
        let s = ds.meta()[rows[0]].component_ids.len();
        let want: usize = (1..=s).product();
        if rows.len() != want {
            return Err(Error::Data(format!(
                "group of system {} has {} rows, want {s}! = {want}",
                ds.meta()[rows[0]].system_id,
                rows.len()
            )));
        }
    }

    Ok(ds)
}
