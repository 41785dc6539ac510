//! Checkpoint persistence: a versioned keyed-text file carrying the full
//! network — dims, activations, freeze flags, and every parameter at full
//! decimal precision — plus seed and feature-schema provenance. A trailing
//! digest over the reloaded content guards against truncation and bit rot;
//! round-trips are exact, so a reloaded model predicts identically.

use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kvtext::KvDoc;
use crate::nn::model::{Activation, Layer, MlpModel};

const FORMAT: &str = "saltdens-mlp";
const VERSION: u64 = 1;

pub fn save_checkpoint(model: &MlpModel, path: &Path) -> Result<()> {
    let mut doc = KvDoc::new();
    doc.push("format", FORMAT);
    doc.push("version", VERSION.to_string());
    doc.push("input_dim", model.input_dim().to_string());
    doc.push("seed", model.seed().to_string());
    doc.push("selection_digest", model.selection_digest());
    doc.push("provenance", model.provenance().join(" | "));
    doc.push("layers", model.layers.len().to_string());
    for (i, layer) in model.layers.iter().enumerate() {
        let k = |name: &str| format!("layer{}_{name}", i + 1);
        doc.push(k("out_dim"), layer.out_dim().to_string());
        doc.push(k("in_dim"), layer.in_dim().to_string());
        doc.push(k("activation"), layer.activation.as_str());
        doc.push(k("trainable"), layer.trainable.to_string());
        let flat: Vec<f64> = layer.weights.iter().flatten().copied().collect();
        doc.push_f64s(k("weights"), &flat);
        doc.push_f64s(k("biases"), &layer.biases);
    }
    doc.push("param_digest", model.digest());
    doc.write(path)
}

pub fn load_checkpoint(path: &Path) -> Result<MlpModel> {
    let doc = KvDoc::read(path)?;
    let bad = |message: String| Error::parse(path, 0, message);

    let format = doc.require("format")?;
    if format != FORMAT {
        return Err(bad(format!("not a model checkpoint (format {format:?})")));
    }
    let version = doc.require_u64("version")?;
    if version != VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }

    let input_dim = doc.require_usize("input_dim")?;
    let seed = doc.require_u64("seed")?;
    let selection_digest = doc.require("selection_digest")?.to_string();
    let provenance: Vec<String> = {
        let p = doc.require("provenance")?;
        if p.is_empty() { vec![] } else { p.split(" | ").map(str::to_string).collect() }
    };

    let n_layers = doc.require_usize("layers")?;
    if n_layers == 0 {
        return Err(bad("checkpoint declares zero layers".into()));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for i in 1..=n_layers {
        let k = |name: &str| format!("layer{i}_{name}");
        let out_dim = doc.require_usize(&k("out_dim"))?;
        let in_dim = doc.require_usize(&k("in_dim"))?;
        let activation = Activation::parse(doc.require(&k("activation"))?)?;
        let trainable = doc.require_bool(&k("trainable"))?;
        let flat = doc.require_f64s(&k("weights"))?;
        if flat.len() != out_dim * in_dim {
            return Err(bad(format!(
                "layer {i}: {} weights, dims say {out_dim}×{in_dim}",
                flat.len()
            )));
        }
        let biases = doc.require_f64s(&k("biases"))?;
        if biases.len() != out_dim {
            return Err(bad(format!("layer {i}: {} biases, dims say {out_dim}", biases.len())));
        }
        let weights = flat.chunks(in_dim.max(1)).map(<[f64]>::to_vec).collect();
        layers.push(Layer { weights, biases, activation, trainable });
    }

    let model = MlpModel::from_parts(layers, input_dim, seed, selection_digest, provenance)?;
    let stored_digest = doc.require("param_digest")?;
    if model.digest() != stored_digest {
        return Err(bad("parameter digest mismatch; checkpoint is corrupted".into()));
    }
    Ok(model)
}

/// Loads a checkpoint and verifies it was featurized against the same
/// descriptor selection (and width) as `dataset`.
pub fn load_checkpoint_for(path: &Path, dataset: &Dataset) -> Result<MlpModel> {
    let model = load_checkpoint(path)?;
    model.ensure_compatible(dataset)?;
    Ok(model)
}
