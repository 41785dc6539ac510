//! Dataset builders and the group-wise split.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{featurize, permute_augment, sample_temperatures, composition_grid};
use crate::dataset::{DataRecord, Dataset, Origin, RowMeta};
use crate::error::{Error, Result};
use crate::ingest::{CorrelationDatabase, DescriptorSelection};
use crate::mixture::{MissingPairPolicy, MixtureSpec, RkCoefficientTable};

/// One pre-augmentation point with its deterministic ordering key.
struct Group {
    system_id: String,
    fractions: Vec<f64>,
    temperature: f64,
    records: Vec<DataRecord>,
}

fn compare_groups(a: &Group, b: &Group) -> Ordering {
    a.system_id
        .cmp(&b.system_id)
        .then_with(|| {
            for (x, y) in a.fractions.iter().zip(&b.fractions) {
                match x.partial_cmp(y).expect("fractions are finite") {
                    Ordering::Equal => continue,
                    other => return other,
                }
            }
            a.fractions.len().cmp(&b.fractions.len())
        })
        .then_with(|| a.temperature.partial_cmp(&b.temperature).expect("temperatures are finite"))
}

/// Sorts groups (system_id, composition, temperature), featurizes every
/// permutation clone, and assembles the dataset. Output row order is fully
/// deterministic regardless of the order groups were generated in.
fn assemble(mut groups: Vec<Group>, selection: &DescriptorSelection, seed: u64) -> Result<Dataset> {
    groups.sort_by(compare_groups);

    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut meta = Vec::new();
    for (group_id, group) in groups.iter().enumerate() {
        for (perm_idx, rec) in group.records.iter().enumerate() {
            features.push(featurize(rec, selection)?);
            targets.push(rec.target_density);
            meta.push(RowMeta {
                system_id: rec.system_id.clone(),
                group_id,
                perm_idx,
                origin: rec.origin,
                component_ids: rec.component_ids.clone(),
                mole_fractions: rec.mole_fractions.clone(),
                temperature: rec.temperature,
            });
        }
    }
    Dataset::new(
        features,
        targets,
        meta,
        selection.feature_len(),
        selection.d(),
        selection.digest(),
        selection.t_lo,
        selection.t_hi,
        seed,
    )
}

/// Samples every correlation of the database at `temp_step` intervals across
/// its ATR; each sampled point becomes a group of `S!` permutation clones
/// whose shared target is the correlation's own density at that temperature.
pub fn build_experimental_dataset(
    db: &CorrelationDatabase,
    selection: &DescriptorSelection,
    temp_step: f64,
    seed: u64,
) -> Result<Dataset> {
    let mut groups = Vec::new();
    for rec in db.records() {
        let corr = &rec.correlation;
        for t in sample_temperatures(corr.t_min(), corr.t_max(), temp_step)? {
            let target = corr.density_at(t).rho;
            let base = DataRecord::new(
                rec.system_id.clone(),
                corr.component_ids().to_vec(),
                corr.mole_fractions().to_vec(),
                t,
                target,
                Origin::Experimental,
            )
            .map_err(|e| Error::Data(format!("system {}: {e}", rec.system_id)))?;
            groups.push(Group {
                system_id: rec.system_id.clone(),
                fractions: corr.mole_fractions().to_vec(),
                temperature: t,
                records: permute_augment(&base),
            });
        }
    }
    assemble(groups, selection, seed)
}

/// Evaluates the mixture models over a composition lattice for each listed
/// pseudo-ternary system, across the intersection of the three pure ATRs.
/// Returns the dataset plus warnings for systems that produced no rows.
pub fn build_rk_dataset(
    db: &CorrelationDatabase,
    coeffs: &RkCoefficientTable,
    ternary_systems: &[Vec<String>],
    selection: &DescriptorSelection,
    grid_step: f64,
    temp_step: f64,
    seed: u64,
) -> Result<(Dataset, Vec<String>)> {
    let mut groups = Vec::new();
    let mut warnings = Vec::new();

    for ids in ternary_systems {
        if ids.len() != 3 {
            return Err(Error::invalid("ternary system", format!("{ids:?} has {} components", ids.len())));
        }
        let mut ids: Vec<String> = ids.clone();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("ternary system", format!("{ids:?} repeats a component")));
        }
        let system_id = format!("rk:{}", ids.join("-"));

        // Strict pair policy, checked up front so the error names the system.
        for i in 0..3 {
            for k in (i + 1)..3 {
                if coeffs.get(&ids[i], &ids[k]).is_none() {
                    return Err(Error::Data(format!(
                        "system {system_id}: no Redlich-Kister coefficients for pair {}-{}",
                        ids[i], ids[k]
                    )));
                }
            }
        }

        let comps: Vec<_> = ids
            .iter()
            .map(|id| db.component(id).cloned())
            .collect::<Result<_>>()?;
        let t_lo = comps
            .iter()
            .map(|c| c.pure_correlation().t_min())
            .fold(f64::NEG_INFINITY, f64::max);
        let t_hi = comps
            .iter()
            .map(|c| c.pure_correlation().t_max())
            .fold(f64::INFINITY, f64::min);
        if !(t_lo < t_hi) {
            warnings.push(format!("system {system_id}: pure ATRs do not overlap; no rows generated"));
            continue;
        }

        for xs in composition_grid(3, grid_step)? {
            for t in sample_temperatures(t_lo, t_hi, temp_step)? {
                let mix = MixtureSpec::new(comps.iter().cloned().zip(xs.iter().copied()).collect(), t)?;
                let breakdown = mix
                    .density_breakdown(Some((coeffs, MissingPairPolicy::Error)))
                    .map_err(|e| Error::Data(format!("system {system_id}: {e}")))?;
                let base = DataRecord::new(
                    system_id.clone(),
                    ids.clone(),
                    xs.clone(),
                    t,
                    breakdown.rho_mix,
                    Origin::RkSynthetic,
                )
                .map_err(|e| Error::Data(format!("system {system_id}: {e}")))?;
                groups.push(Group {
                    system_id: system_id.clone(),
                    fractions: xs.clone(),
                    temperature: t,
                    records: permute_augment(&base),
                });
            }
        }
    }

    Ok((assemble(groups, selection, seed)?, warnings))
}

/// Group-wise seeded split: all permutation clones of one pre-augmentation
/// point land on the same side, so no clone of a test point leaks into
/// training. `round(n_groups * test_fraction)` groups go to test.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if dataset.is_empty() {
        return Err(Error::Data("cannot split an empty dataset".into()));
    }
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside [0, 1]")));
    }

    let mut groups = dataset.group_ids();
    let n_test = (groups.len() as f64 * test_fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);
    let test_groups: BTreeSet<usize> = groups.into_iter().take(n_test).collect();

    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (i, m) in dataset.meta().iter().enumerate() {
        if test_groups.contains(&m.group_id) {
            test_rows.push(i);
        } else {
            train_rows.push(i);
        }
    }
    Ok((dataset.subset(&train_rows)?, dataset.subset(&test_rows)?))
}
