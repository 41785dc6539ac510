//! Seeded synthetic corpus for end-to-end experiments.
//!
//! Real thermophysical databases are licensed, so tests and demos run on a
//! generated stand-in with the same shape: six pure salts with linear
//! correlations, Redlich-Kister coefficients for every binary pair the
//! pseudo-ternary systems need, and per-compound descriptor vectors. Each
//! ternary truth additionally carries a three-body term
//! `x1*x2*x3*(C0 + C1*T)` that a binary-only expansion cannot represent —
//! that gap is what separates the model families on this corpus.
//!
//! "Experimental" correlations are manufactured the way a lab would: sample
//! the truth over a temperature grid, perturb with multiplicative Gaussian
//! noise, and fit `rho = A - B*T` by least squares. Everything is driven by
//! explicit seeds; the same seed reproduces the same corpus bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::sample_temperatures;
use crate::error::{Error, Result};
use crate::ingest::{
    write_correlations, write_descriptors, write_rk_coefficients, CorrelationDatabase,
    CorrelationRecord, DescriptorTable,
};
use crate::mixture::{
    DensityCorrelation, MissingPairPolicy, MixtureSpec, RkCoefficientTable, RkPairCoefficients,
    RkTerm,
};

/// id, molar mass g/mol, correlation A, B, ATR bounds.
const SALTS: [(&str, f64, f64, f64, f64, f64); 6] = [
    ("LiF", 25.94, 2360.0, 0.49, 950.0, 1350.0),
    ("NaF", 41.99, 2750.0, 0.64, 1000.0, 1400.0),
    ("BeF2", 47.01, 2190.0, 0.28, 850.0, 1300.0),
    ("ZrF4", 167.21, 3850.0, 0.89, 950.0, 1250.0),
    ("LiCl", 42.39, 1880.0, 0.43, 900.0, 1300.0),
    ("KCl", 74.55, 2140.0, 0.58, 1050.0, 1400.0),
];

const TERNARIES: [[&str; 3]; 4] = [
    ["LiF", "NaF", "ZrF4"],
    ["BeF2", "LiF", "ZrF4"],
    ["BeF2", "LiF", "NaF"],
    ["KCl", "LiCl", "LiF"],
];

const D_RAW: usize = 24;
/// Deliberately degenerate descriptor columns, to give down-selection work:
/// one constant, one exact duplicate of an earlier column.
const CONSTANT_COL: usize = 4;
const DUPLICATE_COL: usize = 17;
const DUPLICATE_OF: usize = 2;

/// Three-body excess term `x1*x2*x3*(c0 + c1*T)` for one ternary system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TernaryCorrection {
    pub c0: f64,
    pub c1: f64,
}

impl TernaryCorrection {
    pub fn at(&self, mole_fractions: &[f64], t: f64) -> f64 {
        mole_fractions.iter().product::<f64>() * (self.c0 + self.c1 * t)
    }
}

/// The generated corpus: everything needed to run the full pipeline and to
/// score predictions against the exact underlying truth.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pure_db: CorrelationDatabase,
    rk: RkCoefficientTable,
    descriptors: DescriptorTable,
    ternary_systems: Vec<Vec<String>>,
    corrections: BTreeMap<Vec<String>, TernaryCorrection>,
    seed: u64,
}

fn pure_records() -> Vec<CorrelationRecord> {
    SALTS
        .iter()
        .map(|&(id, _, a, b, t_min, t_max)| CorrelationRecord {
            system_id: format!("pure:{id}"),
            correlation: DensityCorrelation::new(
                vec![id.to_string()],
                vec![1.0],
                a,
                b,
                t_min,
                t_max,
                "synthetic",
            )
            .expect("pure salt table entries are valid"),
        })
        .collect()
}

fn masses_g_mol() -> BTreeMap<String, f64> {
    SALTS.iter().map(|&(id, m, ..)| (id.to_string(), m)).collect()
}

/// Builds the whole corpus from one seed.
pub fn generate_corpus(seed: u64) -> Result<SyntheticCorpus> {
    let pure_db = CorrelationDatabase::from_records(pure_records(), masses_g_mol())?;

    let ternary_systems: Vec<Vec<String>> = TERNARIES
        .iter()
        .map(|ids| {
            let mut v: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
            v.sort();
            v
        })
        .collect();

    let mut pairs: Vec<(String, String)> = Vec::new();
    for sys in &ternary_systems {
        for i in 0..3 {
            for k in (i + 1)..3 {
                let pair = (sys[i].clone(), sys[k].clone());
                if !pairs.contains(&pair) {
                    pairs.push(pair);
                }
            }
        }
    }
    pairs.sort();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rk = RkCoefficientTable::new();
    for (a, b) in &pairs {
        let n_terms = rng.random_range(1..=3usize);
        let mut terms = vec![RkTerm {
            a: -rng.random_range(150.0..400.0),
            b: rng.random_range(-0.04..0.04),
        }];
        for _ in 1..n_terms {
            terms.push(RkTerm {
                a: rng.random_range(-60.0..60.0),
                b: rng.random_range(-0.01..0.01),
            });
        }
        rk.insert(RkPairCoefficients::new(a.clone(), b.clone(), terms)?)?;
    }

    let mut corrections = BTreeMap::new();
    for sys in &ternary_systems {
        corrections.insert(
            sys.clone(),
            TernaryCorrection {
                c0: -rng.random_range(1100.0..2200.0),
                c1: rng.random_range(-0.4..0.4),
            },
        );
    }

    let names: Vec<String> = (1..=D_RAW).map(|i| format!("d{i:02}")).collect();
    let mut compounds: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for &(id, ..) in &SALTS {
        let mut row: Vec<f64> = (0..D_RAW).map(|_| rng.random_range(-2.0..4.0)).collect();
        row[CONSTANT_COL] = 1.0;
        row[DUPLICATE_COL] = row[DUPLICATE_OF];
        compounds.insert(id.to_string(), row);
    }
    let descriptors = DescriptorTable::new(names, compounds)?;

    Ok(SyntheticCorpus { pure_db, rk, descriptors, ternary_systems, corrections, seed })
}

impl SyntheticCorpus {
    pub fn pure_db(&self) -> &CorrelationDatabase {
        &self.pure_db
    }

    pub fn rk_table(&self) -> &RkCoefficientTable {
        &self.rk
    }

    pub fn descriptors(&self) -> &DescriptorTable {
        &self.descriptors
    }

    pub fn ternary_systems(&self) -> &[Vec<String>] {
        &self.ternary_systems
    }

    pub fn correction_for(&self, ids: &[String]) -> Option<&TernaryCorrection> {
        let mut key: Vec<String> = ids.to_vec();
        key.sort();
        self.corrections.get(&key)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Intersection of the components' pure ATRs.
    pub fn t_window(&self, ids: &[String]) -> Result<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for id in ids {
            let corr = self.pure_db.component(id)?.pure_correlation();
            lo = lo.max(corr.t_min());
            hi = hi.min(corr.t_max());
        }
        if lo < hi {
            Ok((lo, hi))
        } else {
            Err(Error::Data(format!("pure ATRs of {ids:?} do not overlap")))
        }
    }

    /// The exact density the corpus is built around: ideal mixing plus the
    /// binary Redlich-Kister excess plus, for registered ternary systems,
    /// the three-body correction.
    pub fn truth(&self, component_ids: &[String], mole_fractions: &[f64], temperature: f64)
        -> Result<f64> {
        if component_ids.len() != mole_fractions.len() {
            return Err(Error::Shape(format!(
                "{} component ids vs {} mole fractions",
                component_ids.len(),
                mole_fractions.len()
            )));
        }
        let components = component_ids
            .iter()
            .zip(mole_fractions)
            .map(|(id, &x)| Ok((self.pure_db.component(id)?.clone(), x)))
            .collect::<Result<Vec<_>>>()?;
        let spec = MixtureSpec::new(components, temperature)?;
        let breakdown = spec.density_breakdown(Some((&self.rk, MissingPairPolicy::Error)))?;
        let correction = self
            .correction_for(component_ids)
            .map_or(0.0, |c| c.at(mole_fractions, temperature));
        Ok(breakdown.rho_mix + correction)
    }

    /// Seeded interior compositions (every fraction ≥ 0.12) for each ternary
    /// system, `per_system` apiece — the three-body term is strongest away
    /// from the simplex edges.
    pub fn interior_compositions(&self, per_system: usize, seed: u64)
        -> Vec<(Vec<String>, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(per_system * self.ternary_systems.len());
        for sys in &self.ternary_systems {
            for _ in 0..per_system {
                let xs = loop {
                    let raw: [f64; 3] = [rng.random(), rng.random(), rng.random()];
                    let total: f64 = raw.iter().sum();
                    let x1 = raw[0] / total;
                    let x2 = raw[1] / total;
                    let x3 = 1.0 - x1 - x2;
                    if x1.min(x2).min(x3) >= 0.12 {
                        break vec![x1, x2, x3];
                    }
                };
                out.push((sys.clone(), xs));
            }
        }
        out
    }

    /// Fits an `A - B*T` correlation per composition from noisy truth
    /// samples (multiplicative Gaussian, `noise_pct` percent of the value,
    /// grid spacing `fit_step` K) and assembles them, together with the pure
    /// salts, into an experimental-style database.
    pub fn experimental_db(
        &self,
        points: &[(Vec<String>, Vec<f64>)],
        noise_pct: f64,
        fit_step: f64,
        seed: u64,
    ) -> Result<CorrelationDatabase> {
        if !(noise_pct >= 0.0) || !noise_pct.is_finite() {
            return Err(Error::Config(format!("noise level {noise_pct}%")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut records = pure_records();
        let mut counters: BTreeMap<String, usize> = BTreeMap::new();

        for (ids, xs) in points {
            let (t_lo, t_hi) = self.t_window(ids)?;
            let grid = sample_temperatures(t_lo, t_hi, fit_step)?;
            if grid.len() < 2 {
                return Err(Error::Data(format!(
                    "fit grid for {ids:?} has {} points; use a smaller step",
                    grid.len()
                )));
            }
            let noisy: Vec<f64> = grid
                .iter()
                .map(|&t| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    self.truth(ids, xs, t).map(|rho| rho * (1.0 + noise_pct / 100.0 * z))
                })
                .collect::<Result<_>>()?;

            let n = grid.len() as f64;
            let t_mean = grid.iter().sum::<f64>() / n;
            let y_mean = noisy.iter().sum::<f64>() / n;
            let var = grid.iter().map(|t| (t - t_mean) * (t - t_mean)).sum::<f64>();
            let cov = grid
                .iter()
                .zip(&noisy)
                .map(|(t, y)| (t - t_mean) * (y - y_mean))
                .sum::<f64>();
            let coeff_b = -cov / var;
            let coeff_a = y_mean + coeff_b * t_mean;

            let label = ids.join("-");
            let idx = counters.entry(label.clone()).or_insert(0);
            let system_id = format!("syn:{label}:{idx:02}");
            *idx += 1;
            records.push(CorrelationRecord {
                system_id,
                correlation: DensityCorrelation::new(
                    ids.clone(),
                    xs.clone(),
                    coeff_a,
                    coeff_b,
                    t_lo,
                    t_hi,
                    "synthetic-fit",
                )?,
            });
        }
        CorrelationDatabase::from_records(records, masses_g_mol())
    }

    /// Writes the base corpus: `correlations.csv`, `components.csv`,
    /// `rk_coefficients.csv`, `descriptors.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_correlations(
            &self.pure_db,
            &dir.join("correlations.csv"),
            &dir.join("components.csv"),
        )?;
        write_rk_coefficients(&self.rk, &dir.join("rk_coefficients.csv"))?;
        write_descriptors(&self.descriptors, &dir.join("descriptors.csv"))
    }
}

#[cfg(test)]
mod tests {
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    use super::*;
    use crate::ingest::{parse_correlations, parse_descriptors, parse_rk_coefficients};
    use crate::ingest::{DescriptorSelection, DownselectConfig};

    #[test]
    fn corpus_is_deterministic() {
        let a = generate_corpus(7).unwrap();
        let b = generate_corpus(7).unwrap();
        assert_eq!(a.pure_db.records(), b.pure_db.records());
        assert_eq!(a.descriptors.digest(), b.descriptors.digest());
        assert_eq!(a.corrections, b.corrections);
        let pairs_a: Vec<_> = a.rk.iter().collect();
        let pairs_b: Vec<_> = b.rk.iter().collect();
        assert_eq!(pairs_a, pairs_b);
        assert_eq!(a.interior_compositions(3, 1), b.interior_compositions(3, 1));

        let c = generate_corpus(8).unwrap();
        let pairs_c: Vec<_> = c.rk.iter().collect();
        assert_ne!(pairs_a, pairs_c);
    }

    #[test]
    fn every_ternary_pair_has_coefficients() {
        let corpus = generate_corpus(0).unwrap();
        assert_eq!(corpus.rk_table().len(), 9);
        for sys in corpus.ternary_systems() {
            for i in 0..3 {
                for k in (i + 1)..3 {
                    assert!(
                        corpus.rk_table().get(&sys[i], &sys[k]).is_some(),
                        "missing pair {}-{}",
                        sys[i],
                        sys[k]
                    );
                }
            }
        }
    }

    #[test]
    fn truth_is_rk_plus_the_three_body_term() {
        let corpus = generate_corpus(3).unwrap();
        let sys = corpus.ternary_systems()[0].clone();
        let xs = vec![0.3, 0.45, 0.25];
        let t = 1100.0;

        let components: Vec<_> = sys
            .iter()
            .zip(&xs)
            .map(|(id, &x)| (corpus.pure_db().component(id).unwrap().clone(), x))
            .collect();
        let spec = MixtureSpec::new(components, t).unwrap();
        let rk_only = spec
            .density_breakdown(Some((corpus.rk_table(), MissingPairPolicy::Error)))
            .unwrap()
            .rho_mix;

        let correction = corpus.correction_for(&sys).unwrap();
        let expected = rk_only + xs.iter().product::<f64>() * (correction.c0 + correction.c1 * t);
        assert_relative_eq!(corpus.truth(&sys, &xs, t).unwrap(), expected, max_relative = 1e-14);

        // Binary sub-systems carry no correction.
        let pair = vec![sys[0].clone(), sys[1].clone()];
        let pair_spec = MixtureSpec::new(
            pair.iter()
                .zip([0.4, 0.6])
                .map(|(id, x)| (corpus.pure_db().component(id).unwrap().clone(), x))
                .collect(),
            t,
        )
        .unwrap();
        let pair_rk = pair_spec
            .density_breakdown(Some((corpus.rk_table(), MissingPairPolicy::Error)))
            .unwrap()
            .rho_mix;
        assert_eq!(corpus.truth(&pair, &[0.4, 0.6], t).unwrap(), pair_rk);
    }

    #[test]
    fn centroids_are_measurably_non_ideal() {
        for seed in 0..5 {
            let corpus = generate_corpus(seed).unwrap();
            for sys in corpus.ternary_systems() {
                let xs = vec![1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0];
                let (t_lo, t_hi) = corpus.t_window(sys).unwrap();
                let t = 0.5 * (t_lo + t_hi);
                let components: Vec<_> = sys
                    .iter()
                    .zip(&xs)
                    .map(|(id, &x)| (corpus.pure_db().component(id).unwrap().clone(), x))
                    .collect();
                let ideal = MixtureSpec::new(components, t)
                    .unwrap()
                    .density_breakdown(None)
                    .unwrap()
                    .rho_mix;
                let truth = corpus.truth(sys, &xs, t).unwrap();
                assert!(
                    (truth - ideal).abs() / ideal >= 0.02,
                    "seed {seed} {sys:?}: excess only {:.3}%",
                    100.0 * (truth - ideal).abs() / ideal
                );
            }
        }
    }

    #[test]
    fn interior_compositions_stay_interior() {
        let corpus = generate_corpus(1).unwrap();
        let points = corpus.interior_compositions(12, 5);
        assert_eq!(points.len(), 48);
        for (ids, xs) in &points {
            assert_eq!(ids.len(), 3);
            assert!(xs.iter().all(|&x| x >= 0.12));
            assert_abs_diff_eq!(xs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn noiseless_fits_sit_on_the_truth() {
        let corpus = generate_corpus(2).unwrap();
        let points = corpus.interior_compositions(2, 9);
        let db = corpus.experimental_db(&points, 0.0, 25.0, 11).unwrap();

        for rec in db.records().iter().filter(|r| !r.correlation.is_pure()) {
            let ids = rec.correlation.component_ids();
            let xs = rec.correlation.mole_fractions();
            for t in
                sample_temperatures(rec.correlation.t_min(), rec.correlation.t_max(), 50.0).unwrap()
            {
                let fit = rec.correlation.density_at(t).rho;
                let truth = corpus.truth(&ids.to_vec(), xs, t).unwrap();
                assert!(
                    ((fit - truth) / truth).abs() < 3e-3,
                    "{}: fit {fit} vs truth {truth} at {t} K",
                    rec.system_id
                );
            }
        }
    }

    #[test]
    fn noisy_fits_track_the_truth_loosely() {
        let corpus = generate_corpus(2).unwrap();
        let points = corpus.interior_compositions(3, 9);
        let db = corpus.experimental_db(&points, 0.3, 25.0, 13).unwrap();

        let mut worst: f64 = 0.0;
        for rec in db.records().iter().filter(|r| !r.correlation.is_pure()) {
            let ids = rec.correlation.component_ids().to_vec();
            let xs = rec.correlation.mole_fractions();
            for t in
                sample_temperatures(rec.correlation.t_min(), rec.correlation.t_max(), 50.0).unwrap()
            {
                let fit = rec.correlation.density_at(t).rho;
                let truth = corpus.truth(&ids, xs, t).unwrap();
                worst = worst.max(((fit - truth) / truth).abs());
            }
        }
        assert!(worst > 0.0, "noise did nothing");
        assert!(worst < 0.015, "fits drifted {:.2}% from the truth", worst * 100.0);
    }

    #[test]
    fn experimental_db_is_seed_reproducible() {
        let corpus = generate_corpus(4).unwrap();
        let points = corpus.interior_compositions(4, 21);
        let a = corpus.experimental_db(&points, 0.3, 25.0, 31).unwrap();
        let b = corpus.experimental_db(&points, 0.3, 25.0, 31).unwrap();
        assert_eq!(a.records(), b.records());
        let c = corpus.experimental_db(&points, 0.3, 25.0, 32).unwrap();
        assert_ne!(a.records(), c.records());
    }

    #[test]
    fn written_corpus_parses_back_identically() {
        let corpus = generate_corpus(6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        corpus.write(dir.path()).unwrap();

        let db = parse_correlations(
            &dir.path().join("correlations.csv"),
            &dir.path().join("components.csv"),
        )
        .unwrap();
        assert_eq!(db.records(), corpus.pure_db().records());
        assert_eq!(db.masses_g_mol(), corpus.pure_db().masses_g_mol());

        let rk = parse_rk_coefficients(&dir.path().join("rk_coefficients.csv")).unwrap();
        assert!(rk.warnings.is_empty());
        let got: Vec<_> = rk.table.iter().collect();
        let want: Vec<_> = corpus.rk_table().iter().collect();
        assert_eq!(got, want);

        let desc = parse_descriptors(&dir.path().join("descriptors.csv")).unwrap();
        assert_eq!(desc.digest(), corpus.descriptors().digest());
    }

    #[test]
    fn downselect_drops_the_degenerate_columns() {
        for seed in 0..10 {
            let corpus = generate_corpus(seed).unwrap();
            let config =
                DownselectConfig { variance_floor: 0.0, corr_threshold: 0.95, target_count: 24 };
            let selection =
                DescriptorSelection::compute(corpus.descriptors(), config, (850.0, 1400.0))
                    .unwrap();
            assert!(
                !selection.selected_indices.contains(&CONSTANT_COL),
                "seed {seed} kept the constant column"
            );
            assert!(
                !selection.selected_indices.contains(&DUPLICATE_COL),
                "seed {seed} kept the duplicate column"
            );
            assert!(selection.selected_indices.contains(&DUPLICATE_OF));
            assert!(selection.d() >= 4, "seed {seed} kept only {} columns", selection.d());
        }
    }
}
