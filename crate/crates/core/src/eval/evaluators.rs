//! One prediction surface over all model families.
//!
//! Everything downstream — parity exports, sweeps, model comparison — talks
//! to a [`DensityEvaluator`], so the physics-based mixers, the network, and
//! ad-hoc closures (analytic truths in tests, for instance) are
//! interchangeable.

use itertools::Itertools;

use crate::dataset::{featurize_point, Dataset};
use crate::error::{Error, Result};
use crate::ingest::{CorrelationDatabase, DescriptorSelection};
use crate::mixture::{MissingPairPolicy, MixtureSpec, RkCoefficientTable};
use crate::nn::MlpModel;

/// Maps a mixture state to a density in kg/m³.
pub trait DensityEvaluator {
    fn name(&self) -> &str;

    fn predict(&self, component_ids: &[String], mole_fractions: &[f64], temperature: f64)
        -> Result<f64>;

    /// Hook for evaluators with schema requirements; the default accepts any
    /// dataset.
    fn check_dataset(&self, _dataset: &Dataset) -> Result<()> {
        Ok(())
    }
}

fn spec_for(
    db: &CorrelationDatabase,
    component_ids: &[String],
    mole_fractions: &[f64],
    temperature: f64,
) -> Result<MixtureSpec> {
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
        .map(|(id, &x)| Ok((db.component(id)?.clone(), x)))
        .collect::<Result<Vec<_>>>()?;
    MixtureSpec::new(components, temperature)
}

/// Ideal mixing of the pure-salt correlations; no interaction terms.
pub struct IdealEvaluator {
    db: CorrelationDatabase,
}

impl IdealEvaluator {
    pub fn new(db: CorrelationDatabase) -> Self {
        IdealEvaluator { db }
    }
}

impl DensityEvaluator for IdealEvaluator {
    fn name(&self) -> &str {
        "ideal"
    }

    fn predict(&self, component_ids: &[String], mole_fractions: &[f64], temperature: f64)
        -> Result<f64> {
        let spec = spec_for(&self.db, component_ids, mole_fractions, temperature)?;
        Ok(spec.density_breakdown(None)?.rho_mix)
    }
}

/// Ideal mixing plus the pairwise Redlich-Kister excess.
pub struct RkEvaluator {
    db: CorrelationDatabase,
    coefficients: RkCoefficientTable,
    policy: MissingPairPolicy,
}

impl RkEvaluator {
    pub fn new(db: CorrelationDatabase, coefficients: RkCoefficientTable, policy: MissingPairPolicy) -> Self {
        RkEvaluator { db, coefficients, policy }
    }
}

impl DensityEvaluator for RkEvaluator {
    fn name(&self) -> &str {
        "rk"
    }

    fn predict(&self, component_ids: &[String], mole_fractions: &[f64], temperature: f64)
        -> Result<f64> {
        let spec = spec_for(&self.db, component_ids, mole_fractions, temperature)?;
        Ok(spec.density_breakdown(Some((&self.coefficients, self.policy)))?.rho_mix)
    }
}

/// Network inference symmetrized over input ordering.
///
/// The raw network is not exchangeable — permuting which component sits in
/// which feature slot changes the output. This wrapper restores exact
/// exchangeability: components are first sorted by id, then the forward
/// pass is averaged over every ordering of the sorted list, enumerated in
/// one fixed order. Both the term order of the sum and the divisor depend
/// only on the component *set*, so two calls with the same mixture stated
/// in different orders return bitwise-identical densities.
pub struct DnnEvaluator {
    model: MlpModel,
    selection: DescriptorSelection,
    name: String,
}

impl DnnEvaluator {
    pub fn new(name: impl Into<String>, model: MlpModel, selection: DescriptorSelection) -> Result<Self> {
        if model.input_dim() != selection.feature_len() {
            return Err(Error::Shape(format!(
                "model takes {} features, descriptor selection produces {}",
                model.input_dim(),
                selection.feature_len()
            )));
        }
        Ok(DnnEvaluator { model, selection, name: name.into() })
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    pub fn selection(&self) -> &DescriptorSelection {
        &self.selection
    }
}

impl DensityEvaluator for DnnEvaluator {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, component_ids: &[String], mole_fractions: &[f64], temperature: f64)
        -> Result<f64> {
        if component_ids.len() != mole_fractions.len() {
            return Err(Error::Shape(format!(
                "{} component ids vs {} mole fractions",
                component_ids.len(),
                mole_fractions.len()
            )));
        }
        let mut pairs: Vec<(&String, f64)> =
            component_ids.iter().zip(mole_fractions.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.cmp(b.0));

        let mut total = 0.0;
        let mut count = 0usize;
        for perm in pairs.iter().permutations(pairs.len()) {
            let ids: Vec<String> = perm.iter().map(|(id, _)| (*id).clone()).collect();
            let xs: Vec<f64> = perm.iter().map(|&&(_, x)| x).collect();
            let features = featurize_point(&ids, &xs, temperature, &self.selection)?;
            total += self.model.forward_one(&features)?;
            count += 1;
        }
        Ok(total / count as f64)
    }

    fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        self.model.ensure_compatible(dataset)
    }
}

/// An evaluator built from a closure, mostly for analytic references.
pub struct FnEvaluator {
    name: String,
    f: Box<dyn Fn(&[String], &[f64], f64) -> Result<f64> + Send + Sync>,
}

impl FnEvaluator {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&[String], &[f64], f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        FnEvaluator { name: name.into(), f: Box::new(f) }
    }
}

impl DensityEvaluator for FnEvaluator {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, component_ids: &[String], mole_fractions: &[f64], temperature: f64)
        -> Result<f64> {
        (self.f)(component_ids, mole_fractions, temperature)
    }
}
