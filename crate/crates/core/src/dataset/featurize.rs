//! Record → fixed-width feature vector.

use crate::dataset::DataRecord;
use crate::error::{Error, Result};
use crate::ingest::DescriptorSelection;
use crate::mixture::{FRACTION_SUM_TOL, MAX_COMPONENTS};

/// Layout: `[T_scaled, x_1..x_4, block_1..block_4]` where block `k` is the
/// standardized selected-descriptor vector of the component in slot `k`.
/// Slots beyond the record's real components stay exactly zero (fractions
/// and blocks both), so lower-order systems embed into the 4-slot width.
pub fn featurize(record: &DataRecord, selection: &DescriptorSelection) -> Result<Vec<f64>> {
    featurize_point(&record.component_ids, &record.mole_fractions, record.temperature, selection)
}

/// Same layout for a bare (components, fractions, temperature) point,
/// validating the composition on the way in.
pub fn featurize_point(
    component_ids: &[String],
    mole_fractions: &[f64],
    temperature: f64,
    selection: &DescriptorSelection,
) -> Result<Vec<f64>> {
    if component_ids.is_empty() || component_ids.len() > MAX_COMPONENTS {
        return Err(Error::invalid(
            "components",
            format!("{} components, supported range is 1..={MAX_COMPONENTS}", component_ids.len()),
        ));
    }
    if component_ids.len() != mole_fractions.len() {
        return Err(Error::invalid(
            "mole_fractions",
            format!("{} fractions for {} components", mole_fractions.len(), component_ids.len()),
        ));
    }
    for (i, a) in component_ids.iter().enumerate() {
        if component_ids[..i].contains(a) {
            return Err(Error::invalid("components", format!("duplicate component {a}")));
        }
    }
    if mole_fractions.iter().any(|x| !x.is_finite() || !(0.0..=1.0).contains(x)) {
        return Err(Error::invalid("mole_fractions", "fractions must lie in [0, 1]"));
    }
    let sum: f64 = mole_fractions.iter().sum();
    if (sum - 1.0).abs() > FRACTION_SUM_TOL {
        return Err(Error::invalid("mole_fractions", format!("fractions sum to {sum}, want 1")));
    }
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(Error::invalid("temperature", format!("{temperature} K")));
    }

    let d = selection.d();
    let mut v = vec![0.0; selection.feature_len()];
    v[0] = selection.scale_temperature(temperature);
    for (slot, (id, &x)) in component_ids.iter().zip(mole_fractions).enumerate() {
        v[1 + slot] = x;
        let block = selection.features_for(id)?;
        let start = 1 + MAX_COMPONENTS + slot * d;
        v[start..start + d].copy_from_slice(block);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Origin;
    use crate::ingest::{DescriptorTable, DownselectConfig};
    use std::collections::BTreeMap;

    fn selection() -> DescriptorSelection {
        // 3 compounds x 4 raw columns, all surviving (no constants, no dupes).
        let names = vec!["a".into(), "b".into(), "c".into(), "d".into()];
        let mut compounds = BTreeMap::new();
        compounds.insert("C1".to_string(), vec![1.0, 5.0, -2.0, 0.3]);
        compounds.insert("C2".to_string(), vec![2.0, 3.0, 4.0, 0.9]);
        compounds.insert("C3".to_string(), vec![4.0, 8.0, 1.0, 0.2]);
        let table = DescriptorTable::new(names, compounds).unwrap();
        DescriptorSelection::compute(&table, DownselectConfig { target_count: 4, ..Default::default() }, (800.0, 1300.0))
            .unwrap()
    }

    fn record(ids: &[&str], xs: &[f64], t: f64) -> DataRecord {
        DataRecord::new(
            "s",
            ids.iter().map(|s| s.to_string()).collect(),
            xs.to_vec(),
            t,
            2500.0,
            Origin::Experimental,
        )
        .unwrap()
    }

    #[test]
    fn layout_and_length() {
        let sel = selection();
        assert_eq!(sel.d(), 4);
        assert_eq!(sel.feature_len(), 1 + 4 + 4 * 4);

        let v = featurize(&record(&["C1", "C2"], &[0.3, 0.7], 1050.0), &sel).unwrap();
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], 0.5); // (1050 - 800) / 500
        assert_eq!(&v[1..5], &[0.3, 0.7, 0.0, 0.0]);
        assert_eq!(&v[5..9], sel.features_for("C1").unwrap());
        assert_eq!(&v[9..13], sel.features_for("C2").unwrap());
        assert!(v[13..].iter().all(|&z| z == 0.0), "padded blocks zero");
    }

    #[test]
    fn default_width_formula() {
        // With the default 134-descriptor budget the width is 1 + 4 + 4*134.
        let sel = selection();
        let d = 134;
        assert_eq!(1 + 4 + 4 * d, 541);
        // And the implementation agrees with the formula at its own d.
        assert_eq!(sel.feature_len(), 1 + 4 + 4 * sel.d());
    }

    #[test]
    fn single_component_pads_rest() {
        let sel = selection();
        let v = featurize(&record(&["C3"], &[1.0], 800.0), &sel).unwrap();
        assert_eq!(v[0], 0.0);
        assert_eq!(&v[1..5], &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(&v[5..9], sel.features_for("C3").unwrap());
        assert!(v[9..].iter().all(|&z| z == 0.0));
    }

    #[test]
    fn component_swap_swaps_blocks() {
        let sel = selection();
        let v12 = featurize(&record(&["C1", "C2"], &[0.3, 0.7], 1000.0), &sel).unwrap();
        let v21 = featurize(&record(&["C2", "C1"], &[0.7, 0.3], 1000.0), &sel).unwrap();
        assert_eq!(v12[0], v21[0]);
        assert_eq!(v12[1], v21[2]);
        assert_eq!(v12[2], v21[1]);
        assert_eq!(&v12[5..9], &v21[9..13]);
        assert_eq!(&v12[9..13], &v21[5..9]);
    }

    #[test]
    fn unknown_compound_is_named() {
        let sel = selection();
        let err = featurize(&record(&["Xx"], &[1.0], 900.0), &sel).unwrap_err();
        assert!(err.to_string().contains("Xx"), "{err}");
    }
}
