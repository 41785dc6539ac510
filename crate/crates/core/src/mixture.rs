//! Closed-form density models for molten-salt mixtures.
//!
//! Pure salts follow a fitted linear correlation `rho(T) = A - B*T` over an
//! applicable temperature range (ATR). Mixtures decompose as
//! `rho_mix = rho_id + rho_ex`, where the ideal part assumes additive molar
//! volumes and the excess part is a Redlich-Kister expansion over binary
//! pairs with temperature-linear interaction parameters
//! `L_j(T) = A_j + B_j*T` (note the opposite sign convention from the pure
//! correlation).
//!
//! All arithmetic here runs in a canonical component order (sorted by
//! compound id), so every operation is exactly — bitwise — invariant under
//! permutation of the caller's component list.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Tolerance on `sum(x) == 1` for validated composition vectors.
pub const FRACTION_SUM_TOL: f64 = 1e-9;

/// Most components a mixture (and the featurizer's slot layout) supports.
pub const MAX_COMPONENTS: usize = 4;

fn check_fractions(what: &'static str, fractions: &[f64]) -> Result<()> {
    for &x in fractions {
        if !(0.0..=1.0).contains(&x) || !x.is_finite() {
            return Err(Error::invalid(what, format!("mole fraction {x} outside [0, 1]")));
        }
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > FRACTION_SUM_TOL {
        return Err(Error::invalid(what, format!("mole fractions sum to {sum}, want 1")));
    }
    Ok(())
}

/// A fitted `rho(T) = A - B*T` density correlation with its ATR.
///
/// Pure salts have a single component; fitted mixture correlations carry the
/// full component list and fixed composition they were measured at.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCorrelation {
    component_ids: Vec<String>,
    mole_fractions: Vec<f64>,
    coeff_a: f64,
    coeff_b: f64,
    t_min: f64,
    t_max: f64,
    source: String,
}

impl DensityCorrelation {
    pub fn new(
        component_ids: Vec<String>,
        mole_fractions: Vec<f64>,
        coeff_a: f64,
        coeff_b: f64,
        t_min: f64,
        t_max: f64,
        source: impl Into<String>,
    ) -> Result<Self> {
        const WHAT: &str = "density correlation";
        if component_ids.is_empty() || component_ids.len() > MAX_COMPONENTS {
            return Err(Error::invalid(
                WHAT,
                format!("{} components, want 1..={MAX_COMPONENTS}", component_ids.len()),
            ));
        }
        if component_ids.len() != mole_fractions.len() {
            return Err(Error::invalid(
                WHAT,
                format!("{} components vs {} fractions", component_ids.len(), mole_fractions.len()),
            ));
        }
        for (i, a) in component_ids.iter().enumerate() {
            if component_ids[i + 1..].contains(a) {
                return Err(Error::invalid(WHAT, format!("duplicate component {a}")));
            }
        }
        check_fractions(WHAT, &mole_fractions)?;
        if !(t_min < t_max) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::invalid(WHAT, format!("temperature range [{t_min}, {t_max}]")));
        }
        if !coeff_a.is_finite() || !coeff_b.is_finite() {
            return Err(Error::invalid(WHAT, "non-finite coefficients".to_string()));
        }
        Ok(DensityCorrelation {
            component_ids,
            mole_fractions,
            coeff_a,
            coeff_b,
            t_min,
            t_max,
            source: source.into(),
        })
    }

    /// Density at `t` in kg/m^3: `A - B*t`. Out-of-ATR temperatures are
    /// evaluated anyway and flagged; callers decide extrapolation policy.
    pub fn density_at(&self, t: f64) -> PureDensity {
        PureDensity {
            rho: self.coeff_a - self.coeff_b * t,
            extrapolated: t < self.t_min || t > self.t_max,
        }
    }

    pub fn component_ids(&self) -> &[String] {
        &self.component_ids
    }

    pub fn mole_fractions(&self) -> &[f64] {
        &self.mole_fractions
    }

    pub fn is_pure(&self) -> bool {
        self.component_ids.len() == 1
    }

    pub fn coeff_a(&self) -> f64 {
        self.coeff_a
    }

    pub fn coeff_b(&self) -> f64 {
        self.coeff_b
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureDensity {
    pub rho: f64,
    /// True when the requested temperature fell outside the correlation's ATR.
    pub extrapolated: bool,
}

/// Everything the mixture models need to know about one pure salt.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentProperties {
    compound_id: String,
    /// kg/mol (converted from the g/mol found in data files at ingestion).
    molar_mass: f64,
    pure_correlation: DensityCorrelation,
}

impl ComponentProperties {
    pub fn new(compound_id: impl Into<String>, molar_mass_kg_mol: f64, pure_correlation: DensityCorrelation) -> Result<Self> {
        let compound_id = compound_id.into();
        if !(molar_mass_kg_mol > 0.0) || !molar_mass_kg_mol.is_finite() {
            return Err(Error::invalid(
                "component",
                format!("{compound_id}: molar mass {molar_mass_kg_mol} kg/mol"),
            ));
        }
        if pure_correlation.component_ids() != [compound_id.as_str()] {
            return Err(Error::invalid(
                "component",
                format!("{compound_id}: pure correlation describes {:?}", pure_correlation.component_ids()),
            ));
        }
        Ok(ComponentProperties { compound_id, molar_mass: molar_mass_kg_mol, pure_correlation })
    }

    pub fn compound_id(&self) -> &str {
        &self.compound_id
    }

    pub fn molar_mass(&self) -> f64 {
        self.molar_mass
    }

    pub fn pure_correlation(&self) -> &DensityCorrelation {
        &self.pure_correlation
    }
}

/// One Redlich-Kister term `L_j(T) = A_j + B_j*T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkTerm {
    pub a: f64,
    pub b: f64,
}

impl RkTerm {
    /// Interaction parameter value at temperature `t`.
    pub fn at(&self, t: f64) -> f64 {
        self.a + self.b * t
    }
}

/// Fitted expansion terms for one binary pair, held in canonical order
/// (`comp_a` lexicographically before `comp_b`). `(x_a - x_b)` is always
/// taken in that order; a swap of the pair flips the sign of even-`j` terms,
/// which [`RkPairCoefficients::from_any_order`] applies when normalizing.
#[derive(Debug, Clone, PartialEq)]
pub struct RkPairCoefficients {
    comp_a: String,
    comp_b: String,
    terms: Vec<RkTerm>,
}

impl RkPairCoefficients {
    /// `comp_a` must already be the lexicographically smaller id.
    pub fn new(comp_a: impl Into<String>, comp_b: impl Into<String>, terms: Vec<RkTerm>) -> Result<Self> {
        let comp_a = comp_a.into();
        let comp_b = comp_b.into();
        if comp_a >= comp_b {
            return Err(Error::invalid(
                "rk pair",
                format!("({comp_a}, {comp_b}) not in canonical (ascending) order"),
            ));
        }
        if terms.is_empty() {
            return Err(Error::invalid("rk pair", format!("({comp_a}, {comp_b}): no terms")));
        }
        Ok(RkPairCoefficients { comp_a, comp_b, terms })
    }

    /// Normalizes a pair stated in either order. Returns the canonical record
    /// and whether a swap (with its even-term sign flips) was applied.
    pub fn from_any_order(first: &str, second: &str, terms: Vec<RkTerm>) -> Result<(Self, bool)> {
        if first == second {
            return Err(Error::invalid("rk pair", format!("pair ({first}, {second}) repeats one compound")));
        }
        if first < second {
            Ok((Self::new(first, second, terms)?, false))
        } else {
            // (x_b - x_a)^{j-1} = (-1)^{j-1} (x_a - x_b)^{j-1}: odd j keeps
            // sign, even j flips.
            let flipped = terms
                .into_iter()
                .enumerate()
                .map(|(i, t)| {
                    let j = i + 1;
                    if j % 2 == 0 {
                        RkTerm { a: -t.a, b: -t.b }
                    } else {
                        t
                    }
                })
                .collect();
            Ok((Self::new(second, first, flipped)?, true))
        }
    }

    pub fn comp_a(&self) -> &str {
        &self.comp_a
    }

    pub fn comp_b(&self) -> &str {
        &self.comp_b
    }

    /// Terms in `j = 1..=n` order.
    pub fn terms(&self) -> &[RkTerm] {
        &self.terms
    }
}

/// All known pair coefficients, keyed by canonical pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RkCoefficientTable {
    pairs: BTreeMap<(String, String), RkPairCoefficients>,
}

impl RkCoefficientTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pair: RkPairCoefficients) -> Result<()> {
        let key = (pair.comp_a.clone(), pair.comp_b.clone());
        if let Some(existing) = self.pairs.get(&key) {
            if *existing != pair {
                return Err(Error::Data(format!(
                    "conflicting Redlich-Kister coefficients for pair {}-{}",
                    key.0, key.1
                )));
            }
            return Ok(());
        }
        self.pairs.insert(key, pair);
        Ok(())
    }

    /// Looks up a pair stated in either order.
    pub fn get(&self, first: &str, second: &str) -> Option<&RkPairCoefficients> {
        let key = if first < second {
            (first.to_string(), second.to_string())
        } else {
            (second.to_string(), first.to_string())
        };
        self.pairs.get(&key)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RkPairCoefficients> {
        self.pairs.values()
    }
}

/// What to do when a pair with nonzero fraction product has no coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPairPolicy {
    /// Fail loudly (default): silent zeros would masquerade as ideal mixing.
    #[default]
    Error,
    /// Treat the pair's excess contribution as zero.
    ZeroExcess,
}

/// A concrete mixture state: up to four components with fixed fractions at
/// one temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    components: Vec<(ComponentProperties, f64)>,
    temperature: f64,
}

impl MixtureSpec {
    pub fn new(components: Vec<(ComponentProperties, f64)>, temperature: f64) -> Result<Self> {
        const WHAT: &str = "mixture";
        if components.is_empty() || components.len() > MAX_COMPONENTS {
            return Err(Error::invalid(
                WHAT,
                format!("{} components, want 1..={MAX_COMPONENTS}", components.len()),
            ));
        }
        for (i, (c, _)) in components.iter().enumerate() {
            if components[i + 1..].iter().any(|(d, _)| d.compound_id == c.compound_id) {
                return Err(Error::invalid(WHAT, format!("duplicate component {}", c.compound_id)));
            }
        }
        let fractions: Vec<f64> = components.iter().map(|&(_, x)| x).collect();
        check_fractions(WHAT, &fractions)?;
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::invalid(WHAT, format!("temperature {temperature} K")));
        }
        Ok(MixtureSpec { components, temperature })
    }

    pub fn components(&self) -> &[(ComponentProperties, f64)] {
        &self.components
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Component indices sorted by compound id — the canonical evaluation
    /// order that makes every sum permutation-independent to the last bit.
    fn canonical_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.components.len()).collect();
        idx.sort_by(|&i, &k| {
            self.components[i]
                .0
                .compound_id
                .cmp(&self.components[k].0.compound_id)
        });
        idx
    }

    /// Ideal-mixing density: `sum(x_i M_i) / sum(x_i M_i / rho_i(T))`.
    ///
    /// A harmonic-type mean of the pure densities, so the result always lies
    /// between the smallest and largest `rho_i(T)`.
    pub fn ideal_density(&self) -> Result<PureDensity> {
        let t = self.temperature;
        let mut mass = 0.0;
        let mut volume = 0.0;
        let mut extrapolated = false;
        for &i in &self.canonical_order() {
            let (comp, x) = &self.components[i];
            let pure = comp.pure_correlation.density_at(t);
            if pure.rho <= 0.0 {
                return Err(Error::DegenerateCorrelation {
                    component: comp.compound_id.clone(),
                    rho: pure.rho,
                    t,
                });
            }
            extrapolated |= pure.extrapolated;
            mass += x * comp.molar_mass;
            volume += x * comp.molar_mass / pure.rho;
        }
        Ok(PureDensity { rho: mass / volume, extrapolated })
    }

    /// Redlich-Kister excess density: for every unordered pair `(a, b)` in
    /// canonical order, `x_a x_b * sum_j L_j(T) (x_a - x_b)^{j-1}`.
    pub fn rk_excess(&self, coeffs: &RkCoefficientTable, policy: MissingPairPolicy) -> Result<f64> {
        let t = self.temperature;
        let order = self.canonical_order();
        let mut total = 0.0;
        for (pos, &i) in order.iter().enumerate() {
            for &k in &order[pos + 1..] {
                let (ca, xa) = {
                    let (c, x) = &self.components[i];
                    (c.compound_id.as_str(), *x)
                };
                let (cb, xb) = {
                    let (c, x) = &self.components[k];
                    (c.compound_id.as_str(), *x)
                };
                let pair = match coeffs.get(ca, cb) {
                    Some(p) => p,
                    None => {
                        if xa * xb == 0.0 || policy == MissingPairPolicy::ZeroExcess {
                            continue;
                        }
                        return Err(Error::MissingPairCoefficients { a: ca.to_string(), b: cb.to_string() });
                    }
                };
                let dx = xa - xb;
                let mut series = 0.0;
                let mut dx_pow = 1.0;
                for term in pair.terms() {
                    series += term.at(t) * dx_pow;
                    dx_pow *= dx;
                }
                total += xa * xb * series;
            }
        }
        Ok(total)
    }

    /// Full decomposition `rho_mix = rho_id + rho_ex`. Pass `None` to run the
    /// pure ideal model (`rho_ex = 0`).
    pub fn density_breakdown(&self, rk: Option<(&RkCoefficientTable, MissingPairPolicy)>) -> Result<DensityBreakdown> {
        let ideal = self.ideal_density()?;
        let rho_ex = match rk {
            Some((coeffs, policy)) => self.rk_excess(coeffs, policy)?,
            None => 0.0,
        };
        Ok(DensityBreakdown {
            rho_id: ideal.rho,
            rho_ex,
            rho_mix: ideal.rho + rho_ex,
            extrapolated: ideal.extrapolated,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityBreakdown {
    pub rho_id: f64,
    pub rho_ex: f64,
    pub rho_mix: f64,
    pub extrapolated: bool,
}


#[cfg(test)]
mod proptests {
    use super::tests::comp;
    use super::*;
    use proptest::prelude::*;

    /// Direct-summation oracle: walk the caller's component list in its given
    /// order, find each unordered pair once, and evaluate Eq.-style terms by
    /// explicitly re-sorting each pair — no shared code with `rk_excess`.
    fn rk_excess_oracle(ids: &[&str], fractions: &[f64], coeffs: &RkCoefficientTable, t: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..ids.len() {
            for k in (i + 1)..ids.len() {
                let (ca, xa, cb, xb) = if ids[i] < ids[k] {
                    (ids[i], fractions[i], ids[k], fractions[k])
                } else {
                    (ids[k], fractions[k], ids[i], fractions[i])
                };
                let Some(pair) = coeffs.get(ca, cb) else { continue };
                let mut series = 0.0;
                for (j_minus_1, term) in pair.terms().iter().enumerate() {
                    series += term.at(t) * (xa - xb).powi(j_minus_1 as i32);
                }
                total += xa * xb * series;
            }
        }
        total
    }

    fn arb_fractions(s: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01f64..1.0, s).prop_map(|raw| {
            let sum: f64 = raw.iter().sum();
            let mut xs: Vec<f64> = raw.iter().map(|r| r / sum).collect();
            // Kill accumulated rounding so the sum is exactly 1 within 1e-9.
            let last = 1.0 - xs.iter().take(xs.len() - 1).sum::<f64>();
            *xs.last_mut().unwrap() = last;
            xs
        })
    }

    fn arb_terms() -> impl Strategy<Value = Vec<RkTerm>> {
        proptest::collection::vec((-200.0f64..200.0, -0.1f64..0.1), 1..=3)
            .prop_map(|raw| raw.into_iter().map(|(a, b)| RkTerm { a, b }).collect())
    }

    fn mixture(ids: &[&str], xs: &[f64], t: f64) -> MixtureSpec {
        let comps = ids
            .iter()
            .zip(xs)
            .map(|(id, &x)| (comp(id, 0.05, 2500.0, 0.2), x))
            .collect();
        MixtureSpec::new(comps, t).unwrap()
    }

    proptest! {
        #[test]
        fn rk_excess_matches_direct_sum_oracle(
            s in 2usize..=4,
            xs in arb_fractions(4),
            all_terms in proptest::collection::vec(arb_terms(), 6),
            t in 600.0f64..1600.0,
        ) {
            let ids = ["C1", "C2", "C3", "C4"];
            let ids = &ids[..s];
            let xs = {
                let sum: f64 = xs[..s].iter().sum();
                let mut v: Vec<f64> = xs[..s].iter().map(|x| x / sum).collect();
                let last = 1.0 - v[..s - 1].iter().sum::<f64>();
                v[s - 1] = last;
                v
            };

            let mut table = RkCoefficientTable::new();
            let mut term_iter = all_terms.into_iter();
            for i in 0..s {
                for k in (i + 1)..s {
                    let terms = term_iter.next().unwrap();
                    let (p, _) = RkPairCoefficients::from_any_order(ids[i], ids[k], terms).unwrap();
                    table.insert(p).unwrap();
                }
            }

            let m = mixture(ids, &xs, t);
            let got = m.rk_excess(&table, MissingPairPolicy::Error).unwrap();
            let want = rk_excess_oracle(ids, &xs, &table, t);
            let denom = want.abs().max(1.0);
            prop_assert!(((got - want) / denom).abs() < 1e-12, "got {got}, oracle {want}");
        }

        #[test]
        fn rk_excess_is_permutation_invariant(
            xs in arb_fractions(3),
            all_terms in proptest::collection::vec(arb_terms(), 3),
            t in 600.0f64..1600.0,
        ) {
            let ids = ["C1", "C2", "C3"];
            let mut table = RkCoefficientTable::new();
            let mut term_iter = all_terms.into_iter();
            for i in 0..3 {
                for k in (i + 1)..3 {
                    let (p, _) = RkPairCoefficients::from_any_order(ids[i], ids[k], term_iter.next().unwrap()).unwrap();
                    table.insert(p).unwrap();
                }
            }

            let reference = mixture(&ids, &xs, t).rk_excess(&table, MissingPairPolicy::Error).unwrap();
            // All 3! orderings must agree bitwise: evaluation is canonicalized.
            for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let pids: Vec<&str> = perm.iter().map(|&i| ids[i]).collect();
                let pxs: Vec<f64> = perm.iter().map(|&i| xs[i]).collect();
                let got = mixture(&pids, &pxs, t).rk_excess(&table, MissingPairPolicy::Error).unwrap();
                prop_assert_eq!(got.to_bits(), reference.to_bits());
            }
        }

        #[test]
        fn ideal_density_bounded_by_pure_densities(
            s in 1usize..=4,
            xs in arb_fractions(4),
            coeffs_a in proptest::collection::vec(1500.0f64..4000.0, 4),
            masses in proptest::collection::vec(0.02f64..0.2, 4),
            t in 600.0f64..1600.0,
        ) {
            let mut comps = Vec::new();
            let sum: f64 = xs[..s].iter().sum();
            let mut fr: Vec<f64> = xs[..s].iter().map(|x| x / sum).collect();
            let last = 1.0 - fr[..s - 1].iter().sum::<f64>();
            fr[s - 1] = last;
            for i in 0..s {
                comps.push((comp(&format!("C{i}"), masses[i], coeffs_a[i], 0.0), fr[i]));
            }
            let m = MixtureSpec::new(comps, t).unwrap();
            let rho = m.ideal_density().unwrap().rho;
            let lo = coeffs_a[..s].iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = coeffs_a[..s].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(rho >= lo - 1e-9 && rho <= hi + 1e-9, "rho {rho} outside [{lo}, {hi}]");
        }

        #[test]
        fn rk_n1_reduces_to_quadratic_form(
            xs in arb_fractions(3),
            l1s in proptest::collection::vec(-300.0f64..300.0, 3),
            t in 600.0f64..1600.0,
        ) {
            let ids = ["C1", "C2", "C3"];
            let mut table = RkCoefficientTable::new();
            let mut it = l1s.iter();
            let mut quadratic = 0.0;
            for i in 0..3 {
                for k in (i + 1)..3 {
                    let l1 = *it.next().unwrap();
                    let (p, _) = RkPairCoefficients::from_any_order(ids[i], ids[k], vec![RkTerm { a: l1, b: 0.0 }]).unwrap();
                    table.insert(p).unwrap();
                    quadratic += xs[i] * xs[k] * l1;
                }
            }
            let got = mixture(&ids, &xs, t).rk_excess(&table, MissingPairPolicy::Error).unwrap();
            prop_assert!((got - quadratic).abs() <= 1e-12 * quadratic.abs().max(1.0));
        }
    }
}
