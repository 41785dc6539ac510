//! Two-stage transfer workflow: pretrain on abundant synthetic mixture data,
//! graft fresh layers onto the early feature extractor, retrain on scarce
//! experimental data with the retained layers frozen, then fine-tune
//! everything at a very small learning rate.
//!
//! Stage layout (checkpoints carry the same names):
//!   a. pretrain a fresh network on the synthetic dataset;
//!   b. surgery — keep the first `retain_layers` hidden layers verbatim
//!      (frozen), discard the rest, graft new hidden layers + a new output;
//!   c. train on the experimental dataset with the retained layers frozen;
//!   d. unfreeze all layers and train once more at the fine-tune rate.
//!
//! Every stage boundary records layer digests; the pipeline refuses to
//! continue if a frozen tensor moved by even one bit.

use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kvtext::KvDoc;
use crate::nn::{init_mlp, save_checkpoint, train, Activation, MlpModel, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq)]
pub struct TlConfig {
    /// Hidden widths of the stage-a network.
    pub pretrain_hidden_dims: Vec<usize>,
    /// How many leading hidden layers survive surgery.
    pub retain_layers: usize,
    /// Hidden widths grafted after the retained stack.
    pub new_hidden_dims: Vec<usize>,
    pub pretrain: TrainConfig,
    pub frozen: TrainConfig,
    pub finetune: TrainConfig,
    /// Master seed; stage seeds derive from it (the `seed` fields of the
    /// per-stage configs are overwritten so one knob controls the whole run).
    pub seed: u64,
}

impl Default for TlConfig {
    fn default() -> Self {
        TlConfig {
            pretrain_hidden_dims: vec![128; 4],
            retain_layers: 2,
            new_hidden_dims: vec![128; 3],
            pretrain: TrainConfig::default(),
            frozen: TrainConfig::default(),
            finetune: TrainConfig {
                learning_rate: 1e-6,
                max_epochs: 50,
                patience: 10,
                ..TrainConfig::default()
            },
            seed: 0,
        }
    }
}

impl TlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.retain_layers == 0 {
            return Err(Error::Config("retain_layers must be at least 1".into()));
        }
        if self.retain_layers >= self.pretrain_hidden_dims.len() {
            return Err(Error::Config(format!(
                "retain_layers {} leaves nothing to discard from {} hidden layers",
                self.retain_layers,
                self.pretrain_hidden_dims.len()
            )));
        }
        if self.new_hidden_dims.is_empty() {
            return Err(Error::Config("new_hidden_dims must not be empty".into()));
        }
        if self.finetune.learning_rate > self.frozen.learning_rate {
            return Err(Error::Config(format!(
                "fine-tune rate {} exceeds the frozen-stage rate {}",
                self.finetune.learning_rate, self.frozen.learning_rate
            )));
        }
        self.pretrain.validate()?;
        self.frozen.validate()?;
        self.finetune.validate()
    }

    /// Hidden widths the final model ends up with.
    pub fn surgery_dims(&self) -> Vec<usize> {
        let mut dims = self.pretrain_hidden_dims[..self.retain_layers].to_vec();
        dims.extend_from_slice(&self.new_hidden_dims);
        dims
    }

    fn stage_config(&self, base: &TrainConfig, salt: u64) -> TrainConfig {
        TrainConfig { seed: self.seed.wrapping_add(salt), ..base.clone() }
    }
}

/// Everything the pipeline attests about one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TlReport {
    pub pretrain: TrainReport,
    pub frozen_stage: TrainReport,
    pub finetune: TrainReport,
    /// Digests of the retained layers as they left stage a.
    pub retained_digests: Vec<String>,
    /// True when the retained tensors were still bit-identical after stage c.
    pub frozen_integrity: bool,
    pub surgery_dims: Vec<usize>,
    pub final_digest: String,
}

impl TlReport {
    /// Deterministic keyed-text rendering (wall times are left out so two
    /// identical runs produce identical report files).
    pub fn to_kv(&self) -> KvDoc {
        let mut doc = KvDoc::new();
        doc.push("report", "transfer-pipeline");
        doc.push(
            "surgery_dims",
            self.surgery_dims.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
        );
        doc.push("retained_digests", self.retained_digests.join(" "));
        doc.push("frozen_integrity", self.frozen_integrity.to_string());
        doc.push("final_digest", self.final_digest.clone());
        self.pretrain.to_kv("pretrain_", &mut doc);
        self.frozen_stage.to_kv("frozen_", &mut doc);
        self.finetune.to_kv("finetune_", &mut doc);
        doc
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.to_kv().write(path)
    }
}

/// Keeps the first `retain_layers` hidden layers of `pretrained` verbatim
/// (marked frozen), grafts freshly initialized hidden layers of widths
/// `new_hidden_dims`, and ends in a new single identity output neuron.
pub fn surgery(
    pretrained: &MlpModel,
    retain_layers: usize,
    new_hidden_dims: &[usize],
    seed: u64,
) -> Result<MlpModel> {
    if retain_layers == 0 {
        return Err(Error::Config("retain_layers must be at least 1".into()));
    }
    if retain_layers >= pretrained.n_hidden() {
        return Err(Error::Config(format!(
            "retain_layers {} leaves nothing to discard from {} hidden layers",
            retain_layers,
            pretrained.n_hidden()
        )));
    }
    if new_hidden_dims.is_empty() {
        return Err(Error::Config("new_hidden_dims must not be empty".into()));
    }
    if new_hidden_dims.iter().any(|&w| w == 0) {
        return Err(Error::Config("new hidden layer widths must be positive".into()));
    }

    let mut layers = Vec::with_capacity(retain_layers + new_hidden_dims.len() + 1);
    for layer in &pretrained.layers[..retain_layers] {
        let mut kept = layer.clone();
        kept.trainable = false;
        layers.push(kept);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fan_in = layers.last().expect("retain_layers >= 1").out_dim();
    for &width in new_hidden_dims {
        layers.push(crate::nn::fresh_layer(fan_in, width, Activation::Softplus, &mut rng));
        fan_in = width;
    }
    layers.push(crate::nn::fresh_layer(fan_in, 1, Activation::Identity, &mut rng));

    let mut model = MlpModel::from_parts(
        layers,
        pretrained.input_dim(),
        seed,
        pretrained.selection_digest().to_string(),
        pretrained.provenance().to_vec(),
    )?;
    model.push_provenance(format!(
        "surgery retained {retain_layers} layers, grafted {new_hidden_dims:?} (seed {seed})"
    ));
    Ok(model)
}

fn tag_divergence(err: Error, stage: &str) -> Error {
    match err {
        Error::Divergence { epoch, batch, .. } => {
            Error::Divergence { stage: stage.to_string(), epoch, batch }
        }
        other => other,
    }
}

/// Runs the full four-stage workflow. Both datasets must carry the same
/// descriptor-selection digest. When `artifacts_dir` is given, the four stage
/// checkpoints (`stage_a.ckpt` … `stage_d.ckpt`) and `tl_report.txt` are
/// written there.
pub fn run_tl_pipeline(
    rk_dataset: &Dataset,
    exp_dataset: &Dataset,
    config: &TlConfig,
    artifacts_dir: Option<&Path>,
) -> Result<(MlpModel, TlReport)> {
    config.validate()?;
    if rk_dataset.is_empty() || exp_dataset.is_empty() {
        return Err(Error::Data("transfer pipeline needs non-empty datasets".into()));
    }
    rk_dataset.ensure_compatible(exp_dataset)?;

    // Stage a: pretrain a fresh network on the synthetic dataset.
    let fresh = init_mlp(rk_dataset.feature_len(), &config.pretrain_hidden_dims, config.seed)?;
    let (model_a, report_a) = train(&fresh, rk_dataset, &config.stage_config(&config.pretrain, 1))
        .map_err(|e| tag_divergence(e, "pretrain"))?;

    let retained_digests: Vec<String> =
        model_a.layers[..config.retain_layers].iter().map(|l| l.digest()).collect();

    // Stage b: layer surgery.
    let model_b = surgery(
        &model_a,
        config.retain_layers,
        &config.new_hidden_dims,
        config.seed.wrapping_add(10),
    )?;

    // Stage c: retrain with the retained layers frozen.
    let (model_c, report_c) = train(&model_b, exp_dataset, &config.stage_config(&config.frozen, 2))
        .map_err(|e| tag_divergence(e, "frozen"))?;

    let after_c: Vec<String> =
        model_c.layers[..config.retain_layers].iter().map(|l| l.digest()).collect();
    if after_c != retained_digests {
        return Err(Error::Data(
            "frozen-layer integrity violated: retained tensors changed during the frozen stage".into(),
        ));
    }

    // Stage d: unfreeze everything, fine-tune at the small rate.
    let mut thawed = model_c.clone();
    for layer in &mut thawed.layers {
        layer.trainable = true;
    }
    let (model_d, report_d) = train(&thawed, exp_dataset, &config.stage_config(&config.finetune, 3))
        .map_err(|e| tag_divergence(e, "finetune"))?;

    let report = TlReport {
        pretrain: report_a,
        frozen_stage: report_c,
        finetune: report_d,
        retained_digests,
        frozen_integrity: true,
        surgery_dims: config.surgery_dims(),
        final_digest: model_d.digest(),
    };

    if let Some(dir) = artifacts_dir {
        save_checkpoint(&model_a, &dir.join("stage_a.ckpt"))?;
        save_checkpoint(&model_b, &dir.join("stage_b.ckpt"))?;
        save_checkpoint(&model_c, &dir.join("stage_c.ckpt"))?;
        save_checkpoint(&model_d, &dir.join("stage_d.ckpt"))?;
        report.write(&dir.join("tl_report.txt"))?;
    }
    Ok((model_d, report))
}

/// Baseline without transfer: a fresh network with the same architecture the
/// pipeline ends up with (retained widths + grafted widths), trained once on
/// the experimental data at the frozen-stage budget.
pub fn train_direct(
    exp_dataset: &Dataset,
    config: &TlConfig,
) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    if exp_dataset.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    let fresh = init_mlp(exp_dataset.feature_len(), &config.surgery_dims(), config.seed)?;
    train(&fresh, exp_dataset, &config.stage_config(&config.frozen, 2))
        .map_err(|e| tag_divergence(e, "direct"))
}
