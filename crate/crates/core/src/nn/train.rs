//! Mini-batch training with Adam-style moments, an L2 weight penalty,
//! early stopping, and per-layer freezing.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kvtext::{fmt_f64, fmt_f64s, KvDoc};
use crate::nn::model::{init_mlp, MlpModel};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Adam step size. Zero is allowed and makes training a checked no-op;
    /// the fine-tune stage's zero-rate limit relies on that.
    pub learning_rate: f64,
    /// Coefficient of the `Σ weight²` penalty (biases are never penalized).
    pub l2_lambda: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Fraction of groups held out for validation, drawn once per call.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            l2_lambda: 1e-5,
            batch_size: 256,
            max_epochs: 500,
            patience: 25,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config(format!("learning_rate {} must be finite and ≥ 0", self.learning_rate)));
        }
        if !self.l2_lambda.is_finite() || self.l2_lambda < 0.0 {
            return Err(Error::Config(format!("l2_lambda {} must be finite and ≥ 0", self.l2_lambda)));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config("batch_size, max_epochs, and patience must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction <= 0.5) {
            return Err(Error::Config(format!(
                "validation_fraction {} must lie in (0, 0.5]",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// Per-epoch record of one training run. Wall time is measured but kept out
/// of every rendered artifact so repeated runs stay byte-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
    /// 1-based epoch whose parameters the returned model carries.
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub n_train_rows: usize,
    pub n_val_rows: usize,
    pub param_digest: String,
    pub wall_time_s: f64,
}

impl TrainReport {
    /// Appends the deterministic fields under `prefix` (wall time excluded).
    pub fn to_kv(&self, prefix: &str, doc: &mut KvDoc) {
        doc.push(format!("{prefix}epochs_run"), self.epochs_run.to_string());
        doc.push(format!("{prefix}best_epoch"), self.best_epoch.to_string());
        doc.push(format!("{prefix}n_train_rows"), self.n_train_rows.to_string());
        doc.push(format!("{prefix}n_val_rows"), self.n_val_rows.to_string());
        doc.push(format!("{prefix}train_loss"), fmt_f64s(&self.train_losses));
        doc.push(format!("{prefix}val_loss"), fmt_f64s(&self.val_losses));
        doc.push(format!("{prefix}param_digest"), self.param_digest.clone());
    }

    pub fn final_val_loss(&self) -> f64 {
        self.val_losses[self.best_epoch - 1]
    }
}

/// Mean squared error plus `l2_lambda · Σ weight²` over every layer
/// (biases excluded from the penalty).
pub fn loss(model: &MlpModel, batch: &[Vec<f64>], targets: &[f64], l2_lambda: f64) -> Result<f64> {
    if batch.len() != targets.len() {
        return Err(Error::Shape(format!("{} rows vs {} targets", batch.len(), targets.len())));
    }
    if batch.is_empty() {
        return Err(Error::Data("loss needs at least one row".into()));
    }
    let preds = model.forward(batch)?;
    let mse = preds
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / batch.len() as f64;
    Ok(mse + l2_lambda * weight_square_sum(model))
}

fn weight_square_sum(model: &MlpModel) -> f64 {
    model
        .layers
        .iter()
        .map(|l| l.weights.iter().map(|row| row.iter().map(|w| w * w).sum::<f64>()).sum::<f64>())
        .sum()
}

/// Per-layer gradient of the batch loss, same shapes as the parameters.
struct Grads {
    w: Vec<Vec<Vec<f64>>>,
    b: Vec<Vec<f64>>,
}

impl Grads {
    fn zeros_like(model: &MlpModel) -> Self {
        Grads {
            w: model
                .layers
                .iter()
                .map(|l| vec![vec![0.0; l.in_dim()]; l.out_dim()])
                .collect(),
            b: model.layers.iter().map(|l| vec![0.0; l.out_dim()]).collect(),
        }
    }
}

/// Backpropagation over the rows selected by `rows`; returns the batch loss
/// (including the L2 penalty) and its gradient for every parameter.
fn backprop(
    model: &MlpModel,
    features: &[Vec<f64>],
    targets: &[f64],
    rows: &[usize],
    l2_lambda: f64,
) -> Result<(f64, Grads)> {
    let n = rows.len();
    debug_assert!(n > 0);
    let n_layers = model.layers.len();
    let mut grads = Grads::zeros_like(model);
    let mut sq_err = 0.0;

    let mut pre: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
    let mut act: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
    for &r in rows {
        let x = &features[r];
        if x.len() != model.input_dim() {
            return Err(Error::Shape(format!("row has {} features, model takes {}", x.len(), model.input_dim())));
        }
        pre.clear();
        act.clear();
        act.push(x.clone());
        for layer in &model.layers {
            let a_in = act.last().expect("seeded with the input row");
            let mut z = layer.biases.clone();
            for (zo, row) in z.iter_mut().zip(&layer.weights) {
                *zo += row.iter().zip(a_in).map(|(w, a)| w * a).sum::<f64>();
            }
            act.push(z.iter().map(|&v| layer.activation.apply(v)).collect());
            pre.push(z);
        }

        let pred = act[n_layers][0];
        let err = pred - targets[r];
        sq_err += err * err;

        // Output layer is identity, so δ_L is just the MSE derivative.
        let mut delta = vec![2.0 * err / n as f64];
        for l in (0..n_layers).rev() {
            let layer = &model.layers[l];
            for (o, &d) in delta.iter().enumerate() {
                grads.b[l][o] += d;
                let gw = &mut grads.w[l][o];
                for (g, a) in gw.iter_mut().zip(&act[l]) {
                    *g += d * a;
                }
            }
            if l == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.in_dim()];
            for (o, &d) in delta.iter().enumerate() {
                for (p, &w) in prev.iter_mut().zip(&layer.weights[o]) {
                    *p += w * d;
                }
            }
            let below = &model.layers[l - 1];
            for (p, &z) in prev.iter_mut().zip(&pre[l - 1]) {
                *p *= below.activation.slope(z);
            }
            delta = prev;
        }
    }

    let mut total = sq_err / n as f64;
    if l2_lambda > 0.0 {
        total += l2_lambda * weight_square_sum(model);
        for (gl, layer) in grads.w.iter_mut().zip(&model.layers) {
            for (grow, wrow) in gl.iter_mut().zip(&layer.weights) {
                for (g, &w) in grow.iter_mut().zip(wrow) {
                    *g += 2.0 * l2_lambda * w;
                }
            }
        }
    }
    Ok((total, grads))
}

/// Compares analytic gradients against central finite differences for every
/// parameter and returns the worst relative discrepancy,
/// `|analytic − numeric| / max(|analytic| + |numeric|, 1e-8)`.
pub fn gradient_check(
    model: &MlpModel,
    batch: &[Vec<f64>],
    targets: &[f64],
    l2_lambda: f64,
    epsilon: f64,
) -> Result<f64> {
    if epsilon <= 0.0 {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    let rows: Vec<usize> = (0..batch.len()).collect();
    if rows.is_empty() {
        return Err(Error::Data("gradient check needs at least one row".into()));
    }
    let (_, grads) = backprop(model, batch, targets, &rows, l2_lambda)?;

    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for l in 0..model.layers.len() {
        let out_dim = model.layers[l].out_dim();
        let in_dim = model.layers[l].in_dim();
        for o in 0..out_dim {
            for i in 0..=in_dim {
                let analytic = if i < in_dim { grads.w[l][o][i] } else { grads.b[l][o] };
                let slot = |m: &mut MlpModel, v: f64| {
                    if i < in_dim {
                        m.layers[l].weights[o][i] = v;
                    } else {
                        m.layers[l].biases[o] = v;
                    }
                };
                let base = if i < in_dim { model.layers[l].weights[o][i] } else { model.layers[l].biases[o] };
                slot(&mut probe, base + epsilon);
                let up = loss(&probe, batch, targets, l2_lambda)?;
                slot(&mut probe, base - epsilon);
                let down = loss(&probe, batch, targets, l2_lambda)?;
                slot(&mut probe, base);
                let numeric = (up - down) / (2.0 * epsilon);
                let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
    }
    Ok(worst)
}

/// Trains a copy of `model` on `dataset` and returns it with the epoch
/// report. The validation slice is drawn once per call from `config.seed`,
/// whole groups at a time so permutation clones of one point never straddle
/// the train/validation boundary. Early stopping restores the parameters of
/// the best validation epoch; layers with `trainable = false` come back
/// bit-identical.
pub fn train(model: &MlpModel, dataset: &Dataset, config: &TrainConfig) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    model.ensure_compatible(dataset)?;
    let started = std::time::Instant::now();

    let mut model = model.clone();
    model.set_selection_digest(dataset.selection_digest());

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut group_order = dataset.group_ids();
    group_order.shuffle(&mut rng);
    let n_groups = group_order.len();
    let n_val_groups = if n_groups < 2 {
        0
    } else {
        (((n_groups as f64) * config.validation_fraction).round() as usize).clamp(1, n_groups - 1)
    };
    let val_set: std::collections::BTreeSet<usize> = group_order[..n_val_groups].iter().copied().collect();

    let meta = dataset.meta();
    let train_rows: Vec<usize> = (0..dataset.n_rows()).filter(|&i| !val_set.contains(&meta[i].group_id)).collect();
    // A single-group dataset degenerates to monitoring the training rows.
    let val_rows: Vec<usize> = if n_val_groups == 0 {
        train_rows.clone()
    } else {
        (0..dataset.n_rows()).filter(|&i| val_set.contains(&meta[i].group_id)).collect()
    };

    let features = dataset.features();
    let targets = dataset.targets();
    let mut moments_m = Grads::zeros_like(&model);
    let mut moments_v = Grads::zeros_like(&model);
    let mut step = 0u64;

    let mut train_losses = Vec::new();
    let mut val_losses = Vec::new();
    let mut best: Option<(f64, usize, Vec<crate::nn::model::Layer>)> = None;
    let mut stall = 0usize;
    let mut order = train_rows.clone();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_idx, batch_rows) in order.chunks(config.batch_size).enumerate() {
            let (batch_loss, grads) = backprop(&model, features, targets, batch_rows, config.l2_lambda)?;
            if !batch_loss.is_finite() {
                return Err(Error::Divergence { stage: "train".into(), epoch, batch: batch_idx + 1 });
            }
            epoch_loss += batch_loss * batch_rows.len() as f64;

            step += 1;
            let bc1 = 1.0 - BETA1.powi(step as i32);
            let bc2 = 1.0 - BETA2.powi(step as i32);
            for (l, layer) in model.layers.iter_mut().enumerate() {
                if !layer.trainable {
                    continue;
                }
                for o in 0..layer.biases.len() {
                    for i in 0..layer.weights[o].len() {
                        let g = grads.w[l][o][i];
                        let m = &mut moments_m.w[l][o][i];
                        let v = &mut moments_v.w[l][o][i];
                        *m = BETA1 * *m + (1.0 - BETA1) * g;
                        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                        layer.weights[o][i] -= config.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
                    }
                    let g = grads.b[l][o];
                    let m = &mut moments_m.b[l][o];
                    let v = &mut moments_v.b[l][o];
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    layer.biases[o] -= config.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
                }
            }
        }
        train_losses.push(epoch_loss / train_rows.len() as f64);

        // Validation monitors pure MSE; the penalty would only shift it.
        let mut v = 0.0;
        for &r in &val_rows {
            let p = model.forward_one(&features[r])?;
            v += (p - targets[r]) * (p - targets[r]);
        }
        let val = v / val_rows.len() as f64;
        if !val.is_finite() {
            return Err(Error::Divergence { stage: "train".into(), epoch, batch: 0 });
        }
        val_losses.push(val);

        if best.as_ref().map_or(true, |(b, _, _)| val < *b) {
            best = Some((val, epoch, model.layers.clone()));
            stall = 0;
        } else {
            stall += 1;
            if stall >= config.patience {
                break;
            }
        }
    }

    let (_, best_epoch, best_layers) = best.expect("at least one epoch ran");
    model.layers = best_layers;
    model.push_provenance(format!(
        "trained {} epochs on {} rows (seed {}, lr {}, best epoch {best_epoch})",
        train_losses.len(),
        train_rows.len(),
        config.seed,
        fmt_f64(config.learning_rate),
    ));

    let report = TrainReport {
        epochs_run: train_losses.len(),
        best_epoch,
        n_train_rows: train_rows.len(),
        n_val_rows: val_rows.len(),
        train_losses,
        val_losses,
        param_digest: model.digest(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}

/// Trains one fresh network per width (all hidden layers share the width,
/// `depth` of them) and returns the width with the lowest best-epoch
/// validation loss, ties to the earlier entry, plus the full scan.
pub fn search_hidden_width(
    dataset: &Dataset,
    widths: &[usize],
    depth: usize,
    config: &TrainConfig,
) -> Result<(usize, Vec<(usize, f64)>)> {
    if widths.is_empty() || depth == 0 {
        return Err(Error::Config("width search needs candidate widths and depth ≥ 1".into()));
    }
    let mut scan = Vec::with_capacity(widths.len());
    for &w in widths {
        let model = init_mlp(dataset.feature_len(), &vec![w; depth], config.seed)?;
        let (_, report) = train(&model, dataset, config)?;
        scan.push((w, report.final_val_loss()));
    }
    let best = scan
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite losses"))
        .expect("non-empty scan")
        .0;
    Ok((best, scan))
}
