//! Training subcommands: pretraining, the transfer pipeline, and the
//! scratch-trained control with the same architecture.

use std::path::{Path, PathBuf};

use clap::Args;
use saltdens::dataset::{load_dataset, sidecar_path};
use saltdens::kvtext::KvDoc;
use saltdens::nn::{init_mlp, save_checkpoint, train, TrainConfig, TrainReport};
use saltdens::transfer::{run_tl_pipeline, train_direct as fit_direct, TlConfig};
use saltdens::Result;

use crate::commands::ensure_out_dir;
use crate::context::{Common, RunContext};
use crate::manifest::RunManifest;

#[derive(Args, Debug)]
pub struct PretrainArgs {
    #[command(flatten)]
    common: Common,

    /// Training dataset CSV (its .meta.json sidecar is read too).
    #[arg(long)]
    dataset: PathBuf,

    /// Directory for the checkpoint, report, and manifest.
    #[arg(long)]
    out_dir: PathBuf,

    /// Comma-separated hidden-layer widths [default: 128,128,128,128].
    #[arg(long)]
    hidden_dims: Option<String>,

    /// Adam learning rate [default: 0.001].
    #[arg(long)]
    learning_rate: Option<f64>,

    /// L2 penalty on weights [default: 0.00001].
    #[arg(long)]
    l2: Option<f64>,

    /// Minibatch size [default: 256].
    #[arg(long)]
    batch_size: Option<usize>,

    /// Epoch budget [default: 500].
    #[arg(long)]
    epochs: Option<usize>,

    /// Early-stopping patience in epochs [default: 25].
    #[arg(long)]
    patience: Option<usize>,

    /// Group-wise validation holdout fraction [default: 0.2].
    #[arg(long)]
    val_fraction: Option<f64>,
}

pub fn pretrain(args: PretrainArgs) -> Result<()> {
    let ctx = RunContext::new(&args.common)?;
    let defaults = TrainConfig::default();
    let hidden_dims =
        ctx.usize_list("hidden-dims", args.hidden_dims.as_deref(), &[128, 128, 128, 128])?;
    let config = TrainConfig {
        learning_rate: ctx.f64("learning-rate", args.learning_rate, defaults.learning_rate)?,
        l2_lambda: ctx.f64("l2", args.l2, defaults.l2_lambda)?,
        batch_size: ctx.usize("batch-size", args.batch_size, defaults.batch_size)?,
        max_epochs: ctx.usize("epochs", args.epochs, defaults.max_epochs)?,
        patience: ctx.usize("patience", args.patience, defaults.patience)?,
        validation_fraction: ctx.f64(
            "val-fraction",
            args.val_fraction,
            defaults.validation_fraction,
        )?,
        seed: ctx.seed,
    };

    let dataset = load_dataset(&args.dataset)?;
    let fresh = init_mlp(dataset.feature_len(), &hidden_dims, ctx.seed)?;
    let (model, report) = train(&fresh, &dataset, &config)?;

    ensure_out_dir(&args.out_dir)?;
    save_checkpoint(&model, &args.out_dir.join("pretrained.ckpt"))?;
    write_train_report(&report, &args.out_dir.join("train_report.txt"))?;

    let mut manifest = RunManifest::new("pretrain", ctx.seed, ctx.threads);
    manifest.opt("hidden-dims", join_dims(&hidden_dims));
    manifest.opt_f64("learning-rate", config.learning_rate);
    manifest.opt_f64("l2", config.l2_lambda);
    manifest.opt("batch-size", config.batch_size);
    manifest.opt("epochs", config.max_epochs);
    manifest.opt("patience", config.patience);
    manifest.opt_f64("val-fraction", config.validation_fraction);
    manifest.input(&args.dataset)?;
    manifest.input(&sidecar_path(&args.dataset))?;
    manifest.output("pretrained.ckpt");
    manifest.output("train_report.txt");
    manifest.write(&args.out_dir)?;

    print_report("train", &report);
    Ok(())
}

#[derive(Args, Debug)]
pub struct TransferArgs {
    #[command(flatten)]
    common: Common,

    /// Synthetic pretraining dataset CSV.
    #[arg(long)]
    rk_dataset: PathBuf,

    /// Experimental fine-tuning dataset CSV.
    #[arg(long)]
    exp_dataset: PathBuf,

    /// Directory for the stage checkpoints, report, and manifest.
    #[arg(long)]
    out_dir: PathBuf,

    /// Hidden widths of the pretrained trunk [default: 128,128,128,128].
    #[arg(long)]
    pretrain_hidden_dims: Option<String>,

    /// Leading hidden layers carried frozen into surgery [default: 2].
    #[arg(long)]
    retain_layers: Option<usize>,

    /// Hidden widths grafted after the retained stack [default: 128,128,128].
    #[arg(long)]
    new_hidden_dims: Option<String>,

    /// Pretraining learning rate [default: 0.001].
    #[arg(long)]
    pretrain_lr: Option<f64>,

    /// Pretraining epoch budget [default: 500].
    #[arg(long)]
    pretrain_epochs: Option<usize>,

    /// Pretraining early-stopping patience [default: 25].
    #[arg(long)]
    pretrain_patience: Option<usize>,

    /// Pretraining minibatch size [default: 256].
    #[arg(long)]
    pretrain_batch_size: Option<usize>,

    /// Frozen-stage learning rate [default: 0.001].
    #[arg(long)]
    frozen_lr: Option<f64>,

    /// Frozen-stage epoch budget [default: 500].
    #[arg(long)]
    frozen_epochs: Option<usize>,

    /// Frozen-stage early-stopping patience [default: 25].
    #[arg(long)]
    frozen_patience: Option<usize>,

    /// Frozen-stage minibatch size [default: 256].
    #[arg(long)]
    frozen_batch_size: Option<usize>,

    /// Fine-tune learning rate; must not exceed the frozen-stage rate [default: 0.000001].
    #[arg(long)]
    finetune_lr: Option<f64>,

    /// Fine-tune epoch budget [default: 50].
    #[arg(long)]
    finetune_epochs: Option<usize>,

    /// Fine-tune early-stopping patience [default: 10].
    #[arg(long)]
    finetune_patience: Option<usize>,

    /// Fine-tune minibatch size [default: 256].
    #[arg(long)]
    finetune_batch_size: Option<usize>,

    /// L2 weight penalty applied in every stage [default: 0.00001].
    #[arg(long)]
    l2: Option<f64>,

    /// Validation holdout fraction used by every stage [default: 0.2].
    #[arg(long)]
    val_fraction: Option<f64>,
}

struct StageFlags {
    lr: Option<f64>,
    epochs: Option<usize>,
    patience: Option<usize>,
    batch_size: Option<usize>,
}

fn resolve_stage(
    ctx: &RunContext,
    name: &str,
    flags: StageFlags,
    stage: &mut TrainConfig,
) -> Result<()> {
    stage.learning_rate = ctx.f64(&format!("{name}-lr"), flags.lr, stage.learning_rate)?;
    stage.max_epochs = ctx.usize(&format!("{name}-epochs"), flags.epochs, stage.max_epochs)?;
    stage.patience = ctx.usize(&format!("{name}-patience"), flags.patience, stage.patience)?;
    stage.batch_size =
        ctx.usize(&format!("{name}-batch-size"), flags.batch_size, stage.batch_size)?;
    Ok(())
}

fn transfer_config(ctx: &RunContext, args: &TransferArgs) -> Result<TlConfig> {
    let defaults = TlConfig::default();
    let mut config = TlConfig::default();
    config.pretrain_hidden_dims = ctx.usize_list(
        "pretrain-hidden-dims",
        args.pretrain_hidden_dims.as_deref(),
        &defaults.pretrain_hidden_dims,
    )?;
    config.retain_layers = ctx.usize("retain-layers", args.retain_layers, defaults.retain_layers)?;
    config.new_hidden_dims = ctx.usize_list(
        "new-hidden-dims",
        args.new_hidden_dims.as_deref(),
        &defaults.new_hidden_dims,
    )?;
    resolve_stage(
        ctx,
        "pretrain",
        StageFlags {
            lr: args.pretrain_lr,
            epochs: args.pretrain_epochs,
            patience: args.pretrain_patience,
            batch_size: args.pretrain_batch_size,
        },
        &mut config.pretrain,
    )?;
    resolve_stage(
        ctx,
        "frozen",
        StageFlags {
            lr: args.frozen_lr,
            epochs: args.frozen_epochs,
            patience: args.frozen_patience,
            batch_size: args.frozen_batch_size,
        },
        &mut config.frozen,
    )?;
    resolve_stage(
        ctx,
        "finetune",
        StageFlags {
            lr: args.finetune_lr,
            epochs: args.finetune_epochs,
            patience: args.finetune_patience,
            batch_size: args.finetune_batch_size,
        },
        &mut config.finetune,
    )?;
    let l2 = ctx.f64("l2", args.l2, defaults.pretrain.l2_lambda)?;
    let val_fraction =
        ctx.f64("val-fraction", args.val_fraction, defaults.pretrain.validation_fraction)?;
    for stage in [&mut config.pretrain, &mut config.frozen, &mut config.finetune] {
        stage.l2_lambda = l2;
        stage.validation_fraction = val_fraction;
    }
    config.seed = ctx.seed;
    Ok(config)
}

pub fn transfer(args: TransferArgs) -> Result<()> {
    let ctx = RunContext::new(&args.common)?;
    let config = transfer_config(&ctx, &args)?;
    let rk_dataset = load_dataset(&args.rk_dataset)?;
    let exp_dataset = load_dataset(&args.exp_dataset)?;

    ensure_out_dir(&args.out_dir)?;
    let (_, report) = run_tl_pipeline(&rk_dataset, &exp_dataset, &config, Some(&args.out_dir))?;

    let mut manifest = RunManifest::new("transfer", ctx.seed, ctx.threads);
    manifest.opt("pretrain-hidden-dims", join_dims(&config.pretrain_hidden_dims));
    manifest.opt("retain-layers", config.retain_layers);
    manifest.opt("new-hidden-dims", join_dims(&config.new_hidden_dims));
    push_stage_opts(&mut manifest, "pretrain", &config.pretrain);
    push_stage_opts(&mut manifest, "frozen", &config.frozen);
    push_stage_opts(&mut manifest, "finetune", &config.finetune);
    manifest.opt_f64("l2", config.pretrain.l2_lambda);
    manifest.opt_f64("val-fraction", config.pretrain.validation_fraction);
    manifest.input(&args.rk_dataset)?;
    manifest.input(&sidecar_path(&args.rk_dataset))?;
    manifest.input(&args.exp_dataset)?;
    manifest.input(&sidecar_path(&args.exp_dataset))?;
    for name in ["stage_a.ckpt", "stage_b.ckpt", "stage_c.ckpt", "stage_d.ckpt", "tl_report.txt"] {
        manifest.output(name);
    }
    manifest.write(&args.out_dir)?;

    print_report("pretrain", &report.pretrain);
    print_report("frozen", &report.frozen_stage);
    print_report("finetune", &report.finetune);
    println!("frozen integrity: {}", report.frozen_integrity);
    println!("final params: {} (stage_d.ckpt)", &report.final_digest[..12]);
    Ok(())
}

#[derive(Args, Debug)]
pub struct TrainDirectArgs {
    #[command(flatten)]
    common: Common,

    /// Experimental dataset CSV.
    #[arg(long)]
    exp_dataset: PathBuf,

    /// Directory for the checkpoint, report, and manifest.
    #[arg(long)]
    out_dir: PathBuf,

    /// Hidden widths of the matching pretrained trunk [default: 128,128,128,128].
    #[arg(long)]
    pretrain_hidden_dims: Option<String>,

    /// Retained-layer count of the matching transfer run [default: 2].
    #[arg(long)]
    retain_layers: Option<usize>,

    /// Grafted hidden widths of the matching transfer run [default: 128,128,128].
    #[arg(long)]
    new_hidden_dims: Option<String>,

    /// Adam learning rate [default: 0.001].
    #[arg(long)]
    learning_rate: Option<f64>,

    /// Epoch budget [default: 500].
    #[arg(long)]
    epochs: Option<usize>,

    /// Early-stopping patience in epochs [default: 25].
    #[arg(long)]
    patience: Option<usize>,

    /// Minibatch size [default: 256].
    #[arg(long)]
    batch_size: Option<usize>,

    /// L2 penalty on weights [default: 0.00001].
    #[arg(long)]
    l2: Option<f64>,

    /// Group-wise validation holdout fraction [default: 0.2].
    #[arg(long)]
    val_fraction: Option<f64>,
}

pub fn train_direct(args: TrainDirectArgs) -> Result<()> {
    let ctx = RunContext::new(&args.common)?;
    let defaults = TlConfig::default();
    let mut config = TlConfig::default();
    config.pretrain_hidden_dims = ctx.usize_list(
        "pretrain-hidden-dims",
        args.pretrain_hidden_dims.as_deref(),
        &defaults.pretrain_hidden_dims,
    )?;
    config.retain_layers = ctx.usize("retain-layers", args.retain_layers, defaults.retain_layers)?;
    config.new_hidden_dims = ctx.usize_list(
        "new-hidden-dims",
        args.new_hidden_dims.as_deref(),
        &defaults.new_hidden_dims,
    )?;
    config.frozen.learning_rate =
        ctx.f64("learning-rate", args.learning_rate, defaults.frozen.learning_rate)?;
    config.frozen.max_epochs = ctx.usize("epochs", args.epochs, defaults.frozen.max_epochs)?;
    config.frozen.patience = ctx.usize("patience", args.patience, defaults.frozen.patience)?;
    config.frozen.batch_size =
        ctx.usize("batch-size", args.batch_size, defaults.frozen.batch_size)?;
    config.frozen.l2_lambda = ctx.f64("l2", args.l2, defaults.frozen.l2_lambda)?;
    config.frozen.validation_fraction =
        ctx.f64("val-fraction", args.val_fraction, defaults.frozen.validation_fraction)?;
    // The fine-tune stage never runs here; zero keeps the rate ordering
    // check satisfiable for any --learning-rate.
    config.finetune.learning_rate = 0.0;
    config.seed = ctx.seed;

    let exp_dataset = load_dataset(&args.exp_dataset)?;
    let (model, report) = fit_direct(&exp_dataset, &config)?;

    ensure_out_dir(&args.out_dir)?;
    save_checkpoint(&model, &args.out_dir.join("direct.ckpt"))?;
    write_train_report(&report, &args.out_dir.join("train_report.txt"))?;

    let mut manifest = RunManifest::new("train-direct", ctx.seed, ctx.threads);
    manifest.opt("pretrain-hidden-dims", join_dims(&config.pretrain_hidden_dims));
    manifest.opt("retain-layers", config.retain_layers);
    manifest.opt("new-hidden-dims", join_dims(&config.new_hidden_dims));
    manifest.opt_f64("learning-rate", config.frozen.learning_rate);
    manifest.opt("epochs", config.frozen.max_epochs);
    manifest.opt("patience", config.frozen.patience);
    manifest.opt("batch-size", config.frozen.batch_size);
    manifest.opt_f64("l2", config.frozen.l2_lambda);
    manifest.opt_f64("val-fraction", config.frozen.validation_fraction);
    manifest.input(&args.exp_dataset)?;
    manifest.input(&sidecar_path(&args.exp_dataset))?;
    manifest.output("direct.ckpt");
    manifest.output("train_report.txt");
    manifest.write(&args.out_dir)?;

    print_report("direct", &report);
    Ok(())
}

fn join_dims(dims: &[usize]) -> String {
    dims.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn push_stage_opts(manifest: &mut RunManifest, stage: &str, config: &TrainConfig) {
    manifest.opt_f64(&format!("{stage}-lr"), config.learning_rate);
    manifest.opt(&format!("{stage}-epochs"), config.max_epochs);
    manifest.opt(&format!("{stage}-patience"), config.patience);
    manifest.opt(&format!("{stage}-batch-size"), config.batch_size);
}

fn write_train_report(report: &TrainReport, path: &Path) -> Result<()> {
    let mut doc = KvDoc::new();
    doc.push("report", "single-run");
    report.to_kv("train_", &mut doc);
    doc.write(path)
}

fn print_report(label: &str, report: &TrainReport) {
    println!(
        "{label}: best epoch {} of {}, val loss {}, params {}",
        report.best_epoch,
        report.epochs_run,
        report.final_val_loss(),
        &report.param_digest[..12],
    );
}
