//! `correlations.csv` + `components.csv` parsing.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mixture::{ComponentProperties, DensityCorrelation};

/// Fraction sums in files may be off by up to this much; rows inside the
/// tolerance are renormalized to sum exactly to 1.
const FILE_FRACTION_TOL: f64 = 1e-6;

const CORRELATION_HEADER: [&str; 8] = [
    "system_id",
    "components",
    "mole_fractions",
    "A_kg_m3",
    "B_kg_m3K",
    "T_min_K",
    "T_max_K",
    "source",
];

const COMPONENT_HEADER: [&str; 2] = ["compound_id", "molar_mass_g_mol"];

/// One `correlations.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRecord {
    pub system_id: String,
    pub correlation: DensityCorrelation,
}

/// All fitted correlations plus per-compound properties assembled from the
/// pure-salt rows, ready for the mixture models.
#[derive(Debug, Clone)]
pub struct CorrelationDatabase {
    records: Vec<CorrelationRecord>,
    components: BTreeMap<String, ComponentProperties>,
    // Molar masses exactly as stated in the file; kept so re-serialization
    // reproduces the input bit-for-bit.
    masses_g_mol: BTreeMap<String, f64>,
    // Sorted component-id set -> indices into `records`.
    systems: BTreeMap<Vec<String>, Vec<usize>>,
}

impl CorrelationDatabase {
    /// Assembles a database from parsed rows and the molar-mass table.
    ///
    /// Every compound referenced anywhere must have a molar mass and a pure
    /// correlation (a single-component row) — the mixture models need both.
    pub fn from_records(records: Vec<CorrelationRecord>, masses_g_mol: BTreeMap<String, f64>) -> Result<Self> {
        let mut pure: BTreeMap<&str, &DensityCorrelation> = BTreeMap::new();
        for rec in &records {
            if rec.correlation.is_pure() {
                pure.insert(rec.correlation.component_ids()[0].as_str(), &rec.correlation);
            }
        }

        let mut components = BTreeMap::new();
        for rec in &records {
            for id in rec.correlation.component_ids() {
                if components.contains_key(id) {
                    continue;
                }
                let &g_mol = masses_g_mol
                    .get(id)
                    .ok_or_else(|| Error::Data(format!("compound {id} has no molar-mass entry")))?;
                let corr = pure
                    .get(id.as_str())
                    .ok_or_else(|| Error::Data(format!("compound {id} has no pure-salt correlation")))?;
                components.insert(
                    id.clone(),
                    ComponentProperties::new(id.clone(), g_mol / 1000.0, (*corr).clone())?,
                );
            }
        }

        let mut systems: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
        for (i, rec) in records.iter().enumerate() {
            let mut key: Vec<String> = rec.correlation.component_ids().to_vec();
            key.sort();
            systems.entry(key).or_default().push(i);
        }

        Ok(CorrelationDatabase { records, components, masses_g_mol, systems })
    }

    pub fn records(&self) -> &[CorrelationRecord] {
        &self.records
    }

    pub fn components(&self) -> &BTreeMap<String, ComponentProperties> {
        &self.components
    }

    pub fn component(&self, id: &str) -> Result<&ComponentProperties> {
        self.components
            .get(id)
            .ok_or_else(|| Error::UnknownCompound(id.to_string()))
    }

    pub fn masses_g_mol(&self) -> &BTreeMap<String, f64> {
        &self.masses_g_mol
    }

    /// Correlations whose component set equals `ids` (order-insensitive).
    pub fn correlations_for(&self, ids: &[&str]) -> Vec<&CorrelationRecord> {
        let mut key: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
        key.sort();
        match self.systems.get(&key) {
            Some(idx) => idx.iter().map(|&i| &self.records[i]).collect(),
            None => Vec::new(),
        }
    }

    pub fn n_correlations(&self) -> usize {
        self.records.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Union of all ATRs — the span the temperature scaling is frozen over.
    pub fn temperature_span(&self) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for rec in &self.records {
            lo = lo.min(rec.correlation.t_min());
            hi = hi.max(rec.correlation.t_max());
        }
        if lo < hi {
            Ok((lo, hi))
        } else {
            Err(Error::Data("empty database has no temperature span".into()))
        }
    }
}

fn check_header(path: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    let got: Vec<&str> = got.iter().map(str::trim).collect();
    if got != want {
        return Err(Error::parse(
            path,
            1,
            format!("bad header {got:?}, want {want:?}"),
        ));
    }
    Ok(())
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_field_f64(path: &Path, line: u64, name: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("{name}: bad number {raw:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("{name}: non-finite value {raw:?}")));
    }
    Ok(v)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, 0, format!("{other:?}")),
        })
}

fn parse_components_csv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv_reader(path)?;
    let mut masses = BTreeMap::new();
    let mut first = true;
    for row in reader.records() {
        let row = row.map_err(|e| Error::parse(path, 0, e.to_string()))?;
        if first {
            check_header(path, &row, &COMPONENT_HEADER)?;
            first = false;
            continue;
        }
        let line = record_line(&row);
        if row.len() != COMPONENT_HEADER.len() {
            return Err(Error::parse(path, line, format!("{} fields, want {}", row.len(), COMPONENT_HEADER.len())));
        }
        let id = row[0].to_string();
        if id.is_empty() {
            return Err(Error::parse(path, line, "empty compound_id"));
        }
        let g_mol = parse_field_f64(path, line, "molar_mass_g_mol", &row[1])?;
        if g_mol <= 0.0 {
            return Err(Error::parse(path, line, format!("molar mass {g_mol} g/mol must be positive")));
        }
        if masses.insert(id.clone(), g_mol).is_some() {
            return Err(Error::parse(path, line, format!("duplicate compound {id}")));
        }
    }
    if first {
        return Err(Error::parse(path, 0, "empty file, want header row"));
    }
    Ok(masses)
}

/// Parses `correlations.csv` + `components.csv` into a validated database.
pub fn parse_correlations(correlations_path: &Path, components_path: &Path) -> Result<CorrelationDatabase> {
    let masses = parse_components_csv(components_path)?;

    let path = correlations_path;
    let mut reader = csv_reader(path)?;
    let mut records: Vec<CorrelationRecord> = Vec::new();
    // (sorted ids, fraction bits) of every accepted row, for duplicate checks.
    let mut seen: Vec<(Vec<String>, Vec<u64>)> = Vec::new();
    let mut first = true;

    for row in reader.records() {
        let row = row.map_err(|e| Error::parse(path, 0, e.to_string()))?;
        if first {
            check_header(path, &row, &CORRELATION_HEADER)?;
            first = false;
            continue;
        }
        let line = record_line(&row);
        if row.len() != CORRELATION_HEADER.len() {
            return Err(Error::parse(path, line, format!("{} fields, want {}", row.len(), CORRELATION_HEADER.len())));
        }

        let system_id = row[0].to_string();
        if system_id.is_empty() {
            return Err(Error::parse(path, line, "empty system_id"));
        }
        let ids: Vec<String> = row[1]
            .split(';')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if ids.is_empty() {
            return Err(Error::parse(path, line, "empty components list"));
        }
        let mut fractions = Vec::new();
        for tok in row[2].split(';') {
            fractions.push(parse_field_f64(path, line, "mole_fractions", tok)?);
        }
        if fractions.len() != ids.len() {
            return Err(Error::parse(
                path,
                line,
                format!("{} components but {} mole fractions", ids.len(), fractions.len()),
            ));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > FILE_FRACTION_TOL {
            return Err(Error::parse(path, line, format!("mole fractions sum to {sum}, want 1")));
        }
        for x in &mut fractions {
            *x /= sum;
        }

        let a = parse_field_f64(path, line, "A_kg_m3", &row[3])?;
        let b = parse_field_f64(path, line, "B_kg_m3K", &row[4])?;
        let t_min = parse_field_f64(path, line, "T_min_K", &row[5])?;
        let t_max = parse_field_f64(path, line, "T_max_K", &row[6])?;
        if t_min >= t_max {
            return Err(Error::parse(path, line, format!("T_min {t_min} >= T_max {t_max}")));
        }
        let source = row[7].to_string();

        let correlation = DensityCorrelation::new(ids.clone(), fractions.clone(), a, b, t_min, t_max, source)
            .map_err(|e| Error::parse(path, line, e.to_string()))?;

        let mut key: Vec<(String, f64)> = ids.into_iter().zip(fractions).collect();
        key.sort_by(|l, r| l.0.cmp(&r.0));
        let key = (
            key.iter().map(|(id, _)| id.clone()).collect::<Vec<_>>(),
            key.iter().map(|&(_, x)| x.to_bits()).collect::<Vec<_>>(),
        );
        if seen.contains(&key) {
            return Err(Error::parse(path, line, "duplicate (component set, fractions) entry"));
        }
        seen.push(key);

        records.push(CorrelationRecord { system_id, correlation });
    }
    if first {
        return Err(Error::parse(path, 0, "empty file, want header row"));
    }

    CorrelationDatabase::from_records(records, masses)
}

/// Re-serializes a database to the two-file CSV layout `parse_correlations`
/// reads. Parsing the output reproduces the database exactly.
pub fn write_correlations(db: &CorrelationDatabase, correlations_path: &Path, components_path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&CORRELATION_HEADER.join(","));
    out.push('\n');
    for rec in db.records() {
        let c = &rec.correlation;
        let ids = c.component_ids().join(";");
        let xs: Vec<String> = c.mole_fractions().iter().map(|x| format!("{x}")).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            rec.system_id,
            ids,
            xs.join(";"),
            c.coeff_a(),
            c.coeff_b(),
            c.t_min(),
            c.t_max(),
            c.source(),
        ));
    }
    std::fs::write(correlations_path, out).map_err(|e| Error::io(correlations_path, e))?;

    let mut out = String::new();
    out.push_str(&COMPONENT_HEADER.join(","));
    out.push('\n');
    for (id, g_mol) in db.masses_g_mol() {
        // Only compounds the database actually uses.
        if db.components().contains_key(id) {
            out.push_str(&format!("{id},{g_mol}\n"));
        }
    }
    std::fs::write(components_path, out).map_err(|e| Error::io(components_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    const COMPONENTS: &str = "compound_id,molar_mass_g_mol\nLiF,25.94\nNaF,41.99\nKF,58.1\n";

    #[test]
    fn parses_fixture_rows() {
        let dir = tempfile::tempdir().unwrap();
        let corr = write(
            dir.path(),
            "correlations.csv",
            "system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source\n\
             s1,LiF,1.0,2360,0.49,1140,1370,ref-a\n\
             s2,NaF,1.0,2750,0.64,1270,1370,ref-a\n\
             s3,KF,1.0,2640,0.65,1130,1370,ref-b\n\
             s4,LiF;NaF,0.6;0.4,2520,0.57,950,1250,ref-c\n\
             s5,LiF;KF,0.5;0.5,2460,0.59,900,1200,ref-c\n",
        );
        let comp = write(dir.path(), "components.csv", COMPONENTS);
        let db = parse_correlations(&corr, &comp).unwrap();
        assert_eq!(db.n_correlations(), 5);
        assert_eq!(db.n_components(), 3);
        // g/mol -> kg/mol happened once.
        assert_eq!(db.component("LiF").unwrap().molar_mass(), 25.94 / 1000.0);
        assert_eq!(db.correlations_for(&["NaF", "LiF"]).len(), 1);
        assert_eq!(db.correlations_for(&["LiF", "NaF"])[0].system_id, "s4");
        let (lo, hi) = db.temperature_span().unwrap();
        assert_eq!((lo, hi), (900.0, 1370.0));
    }

    #[test]
    fn header_only_gives_empty_database() {
        let dir = tempfile::tempdir().unwrap();
        let corr = write(
            dir.path(),
            "correlations.csv",
            "system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source\n",
        );
        let comp = write(dir.path(), "components.csv", COMPONENTS);
        let db = parse_correlations(&corr, &comp).unwrap();
        assert_eq!(db.n_correlations(), 0);
        assert_eq!(db.n_components(), 0);
        assert!(db.temperature_span().is_err());
    }

    #[test]
    fn bad_fraction_sum_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let corr = write(
            dir.path(),
            "correlations.csv",
            "system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source\n\
             s1,LiF,1.0,2360,0.49,1140,1370,ref\n\
             s2,LiF;NaF,0.6;0.5,2500,0.5,900,1200,ref\n",
        );
        let comp = write(dir.path(), "components.csv", COMPONENTS);
        match parse_correlations(&corr, &comp) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("sum to 1.1"), "{message}");
            }
            other => panic!("want parse error, got {other:?}"),
        }
    }

    #[test]
    fn near_one_fraction_sum_is_renormalized() {
        let dir = tempfile::tempdir().unwrap();
        let corr = write(
            dir.path(),
            "correlations.csv",
            "system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source\n\
             s1,LiF,1.0,2360,0.49,1140,1370,ref\n\
             s2,NaF,1.0,2750,0.64,1270,1370,ref\n\
             s3,LiF;NaF,0.3333333;0.6666666,2500,0.5,900,1200,ref\n",
        );
        let comp = write(dir.path(), "components.csv", COMPONENTS);
        let db = parse_correlations(&corr, &comp).unwrap();
        let xs = db.records()[2].correlation.mole_fractions();
        assert!((xs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn inverted_temperature_range_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let corr = write(
            dir.path(),
            "correlations.csv",
            "system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source\n\
             s1,LiF,1.0,2360,0.49,1370,1140,ref\n",
        );
        let comp = write(dir.path(), "components.csv", COMPONENTS);
        match parse_correlations(&corr, &comp) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("want parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_system_rejected() {
        let dir = tempfile::tempdir().unwrap();
        // Same component set + fractions stated twice (order shuffled).
        let corr = write(
            dir.path(),
            "correlations.csv",
            "system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source\n\
             s1,LiF,1.0,2360,0.49,1140,1370,ref\n\
             s2,NaF,1.0,2750,0.64,1270,1370,ref\n\
             s3,LiF;NaF,0.6;0.4,2500,0.5,900,1200,ref\n\
             s4,NaF;LiF,0.4;0.6,2501,0.51,900,1200,other\n",
        );
        let comp = write(dir.path(), "components.csv", COMPONENTS);
        match parse_correlations(&corr, &comp) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 5);
                assert!(message.contains("duplicate"), "{message}");
            }
            other => panic!("want duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn referenced_compound_needs_mass_and_pure_row() {
        let dir = tempfile::tempdir().unwrap();
        let comp = write(dir.path(), "components.csv", COMPONENTS);

        // BeF2 correlation without a BeF2 mass entry.
        let corr = write(
            dir.path(),
            "correlations.csv",
            "system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source\n\
             s1,BeF2,1.0,2190,0.28,850,1300,ref\n",
        );
        let err = parse_correlations(&corr, &comp).unwrap_err();
        assert!(err.to_string().contains("molar-mass"), "{err}");

        // Binary row whose member has no pure correlation.
        let corr = write(
            dir.path(),
            "correlations.csv",
            "system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source\n\
             s1,LiF,1.0,2360,0.49,1140,1370,ref\n\
             s2,LiF;NaF,0.6;0.4,2500,0.5,900,1200,ref\n",
        );
        let err = parse_correlations(&corr, &comp).unwrap_err();
        assert!(err.to_string().contains("no pure-salt correlation"), "{err}");
    }

    #[test]
    fn wrong_column_count_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let corr = write(
            dir.path(),
            "correlations.csv",
            "system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source\n\
             s1,LiF,1.0,2360,0.49,1140,1370\n",
        );
        let comp = write(dir.path(), "components.csv", COMPONENTS);
        match parse_correlations(&corr, &comp) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("7 fields"), "{message}");
            }
            other => panic!("want parse error, got {other:?}"),
        }
    }

    #[test]
    fn roundtrip_reproduces_database() {
        let dir = tempfile::tempdir().unwrap();
        let corr = write(
            dir.path(),
            "correlations.csv",
            "system_id,components,mole_fractions,A_kg_m3,B_kg_m3K,T_min_K,T_max_K,source\n\
             s1,LiF,1.0,2360.04,0.4902,1140.1,1370,ref-a\n\
             s2,NaF,1.0,2750.7,0.6361,1270,1370.9,ref-a\n\
             s3,LiF;NaF,0.61;0.39,2520.33,0.5699,950,1250,ref-c\n",
        );
        let comp = write(dir.path(), "components.csv", COMPONENTS);
        let db1 = parse_correlations(&corr, &comp).unwrap();

        let corr2 = dir.path().join("correlations2.csv");
        let comp2 = dir.path().join("components2.csv");
        write_correlations(&db1, &corr2, &comp2).unwrap();
        let db2 = parse_correlations(&corr2, &comp2).unwrap();

        assert_eq!(db1.records(), db2.records());
        assert_eq!(db1.components(), db2.components());
        assert_eq!(db1.masses_g_mol().get("LiF"), db2.masses_g_mol().get("LiF"));

        // And a second cycle is byte-stable.
        let corr3 = dir.path().join("correlations3.csv");
        let comp3 = dir.path().join("components3.csv");
        write_correlations(&db2, &corr3, &comp3).unwrap();
        assert_eq!(std::fs::read(&corr2).unwrap(), std::fs::read(&corr3).unwrap());
        assert_eq!(std::fs::read(&comp2).unwrap(), std::fs::read(&comp3).unwrap());
    }
}
