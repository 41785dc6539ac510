//! Network structure, initialization, and the forward pass.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::digest::Hasher;
use crate::error::{Error, Result};

/// Per-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// `ln(1 + e^z)`, evaluated in the overflow-safe form.
    Softplus,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Softplus => z.max(0.0) + (-z.abs()).exp().ln_1p(),
            Activation::Identity => z,
        }
    }

    /// dφ/dz at the pre-activation `z`.
    pub fn slope(self, z: f64) -> f64 {
        match self {
            Activation::Softplus => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Softplus => "softplus",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "softplus" => Ok(Activation::Softplus),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::invalid("activation", format!("unknown activation {other:?}"))),
        }
    }
}

/// One dense layer: `a_out = φ(W · a_in + b)` with `W` stored row-major
/// (one row per output neuron).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub activation: Activation,
    pub trainable: bool,
}

impl Layer {
    pub fn out_dim(&self) -> usize {
        self.biases.len()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Digest over this layer's parameters and shape (not its freeze flag),
    /// used by the transfer workflow to attest that tensors moved verbatim.
    pub fn digest(&self) -> String {
        let mut h = Hasher::new();
        h.u64(self.out_dim() as u64);
        h.u64(self.in_dim() as u64);
        h.str(self.activation.as_str());
        for row in &self.weights {
            h.f64s(row);
        }
        h.f64s(&self.biases);
        h.finish()
    }
}

/// Fully connected regression network ending in one identity output neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    input_dim: usize,
    seed: u64,
    selection_digest: String,
    provenance: Vec<String>,
}

/// Builds a softplus MLP with `hidden_dims` hidden layers plus a 1-neuron
/// identity output. Weights are drawn uniformly from ±√(6/(fan_in+fan_out)),
/// biases start at zero, and the draw order is fixed, so equal seeds give
/// bit-identical models.
pub fn init_mlp(input_dim: usize, hidden_dims: &[usize], seed: u64) -> Result<MlpModel> {
    if input_dim == 0 {
        return Err(Error::invalid("input_dim", "must be positive"));
    }
    if hidden_dims.is_empty() {
        return Err(Error::invalid("hidden_dims", "need at least one hidden layer"));
    }
    if let Some(&z) = hidden_dims.iter().find(|&&w| w == 0) {
        return Err(Error::invalid("hidden_dims", format!("layer width {z} must be positive")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(hidden_dims.len() + 1);
    let mut fan_in = input_dim;
    for (i, &width) in hidden_dims.iter().chain(std::iter::once(&1)).enumerate() {
        let activation = if i == hidden_dims.len() { Activation::Identity } else { Activation::Softplus };
        layers.push(fresh_layer(fan_in, width, activation, &mut rng));
        fan_in = width;
    }

    Ok(MlpModel {
        layers,
        input_dim,
        seed,
        selection_digest: String::new(),
        provenance: vec![format!("init dims={hidden_dims:?} seed={seed}")],
    })
}

/// One freshly initialized trainable layer, drawing from the shared stream.
pub(crate) fn fresh_layer(fan_in: usize, fan_out: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Layer {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let weights = (0..fan_out)
        .map(|_| (0..fan_in).map(|_| rng.random_range(-bound..=bound)).collect())
        .collect();
    Layer { weights, biases: vec![0.0; fan_out], activation, trainable: true }
}

impl MlpModel {
    /// Reassembles a model from its parts, checking the structural contract:
    /// chained dims, a single identity output neuron, finite parameters.
    pub fn from_parts(
        layers: Vec<Layer>,
        input_dim: usize,
        seed: u64,
        selection_digest: String,
        provenance: Vec<String>,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("model has no layers".into()));
        }
        let mut fan_in = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.biases.is_empty() {
                return Err(Error::Shape(format!("layer {i} has no neurons")));
            }
            for row in &layer.weights {
                if row.len() != fan_in {
                    return Err(Error::Shape(format!(
                        "layer {i} expects {} inputs, previous layer provides {fan_in}",
                        row.len()
                    )));
                }
                if row.iter().any(|w| !w.is_finite()) {
                    return Err(Error::Data(format!("layer {i} has non-finite weights")));
                }
            }
            if layer.weights.len() != layer.biases.len() {
                return Err(Error::Shape(format!(
                    "layer {i}: {} weight rows vs {} biases",
                    layer.weights.len(),
                    layer.biases.len()
                )));
            }
            if layer.biases.iter().any(|b| !b.is_finite()) {
                return Err(Error::Data(format!("layer {i} has non-finite biases")));
            }
            fan_in = layer.out_dim();
        }
        let last = layers.last().expect("non-empty");
        if last.out_dim() != 1 || last.activation != Activation::Identity {
            return Err(Error::Shape("output layer must be one identity neuron".into()));
        }
        Ok(MlpModel { layers, input_dim, seed, selection_digest, provenance })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Hidden-layer count (all layers except the output neuron).
    pub fn n_hidden(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn hidden_dims(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(Layer::out_dim).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.out_dim() * l.in_dim() + l.out_dim())
            .sum()
    }

    /// Digest of the feature schema this model was trained against;
    /// empty until the first training run binds one.
    pub fn selection_digest(&self) -> &str {
        &self.selection_digest
    }

    pub fn set_selection_digest(&mut self, digest: impl Into<String>) {
        self.selection_digest = digest.into();
    }

    /// Short free-text history (initialization, training runs, surgery).
    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn push_provenance(&mut self, line: impl Into<String>) {
        self.provenance.push(line.into());
    }

    /// The model must have been featurized against the same descriptor
    /// selection as `dataset`, and widths must agree.
    pub fn ensure_compatible(&self, dataset: &Dataset) -> Result<()> {
        if !self.selection_digest.is_empty() && self.selection_digest != dataset.selection_digest() {
            return Err(Error::Incompatible(format!(
                "model was trained against selection {} but the dataset carries {}",
                self.selection_digest,
                dataset.selection_digest()
            )));
        }
        if self.input_dim != dataset.feature_len() {
            return Err(Error::Shape(format!(
                "model takes {} features, dataset rows have {}",
                self.input_dim,
                dataset.feature_len()
            )));
        }
        Ok(())
    }

    /// Digest over the full model: structure, flags, and every parameter bit.
    pub fn digest(&self) -> String {
        let mut h = Hasher::new();
        h.u64(self.input_dim as u64);
        h.u64(self.layers.len() as u64);
        for layer in &self.layers {
            h.str(layer.activation.as_str());
            h.u64(layer.trainable as u64);
            h.str(&layer.digest());
        }
        h.finish()
    }

    pub fn forward_one(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "{} features, model takes {}",
                features.len(),
                self.input_dim
            )));
        }
        let mut a = features.to_vec();
        for layer in &self.layers {
            let mut next = Vec::with_capacity(layer.out_dim());
            for (row, &b) in layer.weights.iter().zip(&layer.biases) {
                let z: f64 = row.iter().zip(&a).map(|(w, x)| w * x).sum::<f64>() + b;
                next.push(layer.activation.apply(z));
            }
            a = next;
        }
        Ok(a[0])
    }

    /// Row-independent batch inference: row `i` of the output depends only on
    /// row `i` of the input.
    pub fn forward(&self, batch: &[Vec<f64>]) -> Result<Vec<f64>> {
        batch.iter().map(|row| self.forward_one(row)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn init_shapes_and_param_count() {
        let m = init_mlp(541, &[128, 128, 128, 128], 7).unwrap();
        assert_eq!(m.n_hidden(), 4);
        assert_eq!(m.hidden_dims(), vec![128, 128, 128, 128]);
        assert_eq!(
            m.param_count(),
            541 * 128 + 128 + 3 * (128 * 128 + 128) + 128 + 1
        );
        assert_eq!(m.layers.last().unwrap().activation, Activation::Identity);
        assert!(m.layers.iter().all(|l| l.trainable));
        assert!(m.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = init_mlp(10, &[8, 8], 42).unwrap();
        let b = init_mlp(10, &[8, 8], 42).unwrap();
        let c = init_mlp(10, &[8, 8], 43).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn init_respects_fan_bound() {
        let m = init_mlp(20, &[10], 3).unwrap();
        let bound = (6.0 / 30.0f64).sqrt();
        for row in &m.layers[0].weights {
            assert!(row.iter().all(|w| w.abs() <= bound));
        }
    }

    #[test]
    fn minimal_network_is_valid() {
        let m = init_mlp(3, &[1], 0).unwrap();
        assert_eq!(m.param_count(), 3 + 1 + 1 + 1);
        m.forward_one(&[0.1, 0.2, 0.3]).unwrap();
    }

    #[test]
    fn invalid_inits_rejected() {
        assert!(init_mlp(0, &[4], 0).is_err());
        assert!(init_mlp(4, &[], 0).is_err());
        assert!(init_mlp(4, &[4, 0, 4], 0).is_err());
    }

    #[test]
    fn zero_weight_model_outputs_final_bias() {
        let mut m = init_mlp(5, &[3], 1).unwrap();
        for layer in &mut m.layers {
            for row in &mut layer.weights {
                row.iter_mut().for_each(|w| *w = 0.0);
            }
        }
        m.layers[1].biases[0] = 12.5;
        let out = m.forward(&[vec![1.0; 5], vec![-2.0; 5], vec![0.0; 5]]).unwrap();
        // Hidden softplus of 0 is ln 2, but with zero output weights only the
        // output bias survives.
        assert_eq!(out, vec![12.5, 12.5, 12.5]);
    }

    #[test]
    fn hand_built_2_2_1_matches_hand_computation() {
        let layers = vec![
            Layer {
                weights: vec![vec![0.5, -1.0], vec![2.0, 0.25]],
                biases: vec![0.1, -0.2],
                activation: Activation::Softplus,
                trainable: true,
            },
            Layer {
                weights: vec![vec![1.5, -0.5]],
                biases: vec![0.3],
                activation: Activation::Identity,
                trainable: true,
            },
        ];
        let m = MlpModel::from_parts(layers, 2, 0, String::new(), vec![]).unwrap();

        let x = [0.8, -0.4];
        let z1: f64 = 0.5 * 0.8 + (-1.0) * (-0.4) + 0.1;
        let z2: f64 = 2.0 * 0.8 + 0.25 * (-0.4) + (-0.2);
        let a1 = (1.0 + z1.exp()).ln();
        let a2 = (1.0 + z2.exp()).ln();
        let want = 1.5 * a1 - 0.5 * a2 + 0.3;
        assert_abs_diff_eq!(m.forward_one(&x).unwrap(), want, epsilon = 1e-12);
    }

    #[test]
    fn batch_equals_single_row() {
        let m = init_mlp(4, &[6, 6], 9).unwrap();
        let row = vec![0.3, -1.2, 0.0, 2.2];
        let single = m.forward_one(&row).unwrap();
        let batch = m.forward(&[vec![9.0, 9.0, 9.0, 9.0], row.clone(), vec![0.0; 4]]).unwrap();
        assert_eq!(batch[1], single);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let m = init_mlp(4, &[2], 0).unwrap();
        assert!(matches!(m.forward_one(&[1.0, 2.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn softplus_is_stable_at_extremes() {
        let s = Activation::Softplus;
        assert_eq!(s.apply(800.0), 800.0);
        assert_eq!(s.apply(-800.0), 0.0);
        assert!(s.slope(800.0) <= 1.0 && s.slope(800.0) > 0.999);
        assert_eq!(s.slope(-800.0), 0.0);
        assert_abs_diff_eq!(s.apply(0.0), 2.0f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.slope(0.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn from_parts_enforces_structure() {
        let good = init_mlp(3, &[2], 0).unwrap();
        // Broken chain: output layer expecting 5 inputs.
        let mut layers = good.layers.clone();
        layers[1].weights[0] = vec![1.0; 5];
        assert!(MlpModel::from_parts(layers, 3, 0, String::new(), vec![]).is_err());

        // Non-finite weight.
        let mut layers = good.layers.clone();
        layers[0].weights[0][0] = f64::NAN;
        assert!(MlpModel::from_parts(layers, 3, 0, String::new(), vec![]).is_err());

        // Softplus output is not a regression head.
        let mut layers = good.layers.clone();
        layers[1].activation = Activation::Softplus;
        assert!(MlpModel::from_parts(layers, 3, 0, String::new(), vec![]).is_err());
    }
}
