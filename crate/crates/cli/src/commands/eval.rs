//! Scoring and prediction subcommands over the shared evaluator stack: the
//! network checkpoint next to the Redlich-Kister and ideal-mixing baselines.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use saltdens::dataset::{load_dataset, sidecar_path};
use saltdens::eval::{
    compare_models, parity_export, sweep_composition, sweep_temperature, write_metrics_csv,
    write_parity_csv, CompositionPath, DensityEvaluator, DnnEvaluator, IdealEvaluator,
    RkEvaluator,
};
use saltdens::ingest::{parse_correlations, parse_rk_coefficients, DescriptorSelection};
use saltdens::kvtext::{fmt_f64, KvDoc};
use saltdens::mixture::{MissingPairPolicy, MixtureSpec};
use saltdens::nn::load_checkpoint;
use saltdens::{Error, Result};

use crate::commands::ensure_out_dir;
use crate::context::{Common, RunContext};
use crate::manifest::RunManifest;
use crate::parsers;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MissingPairs {
    /// Fail when a pair has no Redlich-Kister coefficients.
    Error,
    /// Treat absent pairs as zero excess.
    Zero,
}

impl MissingPairs {
    fn policy(self) -> MissingPairPolicy {
        match self {
            MissingPairs::Error => MissingPairPolicy::Error,
            MissingPairs::Zero => MissingPairPolicy::ZeroExcess,
        }
    }

    fn label(self) -> &'static str {
        match self {
            MissingPairs::Error => "error",
            MissingPairs::Zero => "zero",
        }
    }
}

#[derive(Args, Debug)]
struct ModelInputs {
    /// Network checkpoint.
    #[arg(long)]
    model: PathBuf,

    /// Descriptor selection the checkpoint was trained against.
    #[arg(long)]
    selection: PathBuf,
}

#[derive(Args, Debug)]
struct BaselineInputs {
    /// Pure-component density-correlation CSV.
    #[arg(long)]
    correlations: PathBuf,

    /// Component molar-mass CSV.
    #[arg(long)]
    masses: PathBuf,

    /// Redlich-Kister coefficient CSV.
    #[arg(long)]
    rk_coefficients: PathBuf,

    /// How the Redlich-Kister baseline treats pairs missing from the table.
    #[arg(long, value_enum, default_value = "error")]
    missing_pairs: MissingPairs,
}

struct EvalStack {
    db: saltdens::ingest::CorrelationDatabase,
    dnn: DnnEvaluator,
    rk: RkEvaluator,
    ideal: IdealEvaluator,
    warnings: Vec<String>,
}

impl EvalStack {
    fn load(model: &ModelInputs, baselines: &BaselineInputs) -> Result<Self> {
        let selection = DescriptorSelection::load(&model.selection)?;
        let net = load_checkpoint(&model.model)?;
        if net.selection_digest() != selection.digest() {
            return Err(Error::Incompatible(format!(
                "{} was trained against descriptor selection {}, but {} has digest {}",
                model.model.display(),
                &net.selection_digest()[..12.min(net.selection_digest().len())],
                model.selection.display(),
                &selection.digest()[..12],
            )));
        }
        let db = parse_correlations(&baselines.correlations, &baselines.masses)?;
        let outcome = parse_rk_coefficients(&baselines.rk_coefficients)?;
        let dnn = DnnEvaluator::new("dnn", net, selection)?;
        let rk = RkEvaluator::new(db.clone(), outcome.table, baselines.missing_pairs.policy());
        let ideal = IdealEvaluator::new(db.clone());
        Ok(EvalStack { db, dnn, rk, ideal, warnings: outcome.warnings })
    }

    fn evaluators(&self) -> [&dyn DensityEvaluator; 3] {
        [&self.dnn, &self.rk, &self.ideal]
    }

    fn report_warnings(&self) {
        for warning in &self.warnings {
            eprintln!("warning: {warning}");
        }
    }
}

fn push_baseline_inputs(
    manifest: &mut RunManifest,
    model: &ModelInputs,
    baselines: &BaselineInputs,
) -> Result<()> {
    manifest.opt("missing-pairs", baselines.missing_pairs.label());
    manifest.input(&model.model)?;
    manifest.input(&model.selection)?;
    manifest.input(&baselines.correlations)?;
    manifest.input(&baselines.masses)?;
    manifest.input(&baselines.rk_coefficients)?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    common: Common,

    #[command(flatten)]
    model_inputs: ModelInputs,

    #[command(flatten)]
    baselines: BaselineInputs,

    /// Dataset CSV to score.
    #[arg(long)]
    dataset: PathBuf,

    /// Directory for metrics.csv, parity.csv, and manifest.txt.
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let ctx = RunContext::new(&args.common)?;
    let stack = EvalStack::load(&args.model_inputs, &args.baselines)?;
    stack.report_warnings();
    let dataset = load_dataset(&args.dataset)?;

    let metric_rows = compare_models(&stack.evaluators(), &dataset)?;
    let (parity_rows, _) = parity_export(&stack.dnn, &dataset)?;

    ensure_out_dir(&args.out_dir)?;
    write_metrics_csv(&metric_rows, &args.out_dir.join("metrics.csv"))?;
    write_parity_csv(&parity_rows, &args.out_dir.join("parity.csv"))?;

    let mut manifest = RunManifest::new("evaluate", ctx.seed, ctx.threads);
    push_baseline_inputs(&mut manifest, &args.model_inputs, &args.baselines)?;
    manifest.input(&args.dataset)?;
    manifest.input(&sidecar_path(&args.dataset))?;
    manifest.output("metrics.csv");
    manifest.output("parity.csv");
    manifest.write(&args.out_dir)?;

    println!("rows: {} in {} groups", dataset.n_rows(), dataset.n_groups());
    for row in &metric_rows {
        if row.slice == "overall" && row.metric != "n_points" {
            println!("{} {} = {}", row.model, row.metric, fmt_f64(row.value));
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    common: Common,

    #[command(flatten)]
    model_inputs: ModelInputs,

    #[command(flatten)]
    baselines: BaselineInputs,

    /// Comma-separated component ids, like LiF,NaF.
    #[arg(long)]
    components: String,

    /// Matching mole fractions, like 0.6,0.4.
    #[arg(long)]
    fractions: String,

    /// Temperature in kelvin.
    #[arg(long)]
    temp: f64,

    /// Directory for prediction.txt and manifest.txt.
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let ctx = RunContext::new(&args.common)?;
    let ids = parsers::id_list("components", &args.components)?;
    let fractions = parsers::f64_list("fractions", &args.fractions)?;
    let stack = EvalStack::load(&args.model_inputs, &args.baselines)?;
    stack.report_warnings();

    let dnn = stack.dnn.predict(&ids, &fractions, args.temp)?;
    let rk = stack.rk.predict(&ids, &fractions, args.temp)?;
    let ideal = stack.ideal.predict(&ids, &fractions, args.temp)?;
    let components = ids
        .iter()
        .zip(&fractions)
        .map(|(id, &x)| Ok((stack.db.component(id)?.clone(), x)))
        .collect::<Result<Vec<_>>>()?;
    let extrapolated =
        MixtureSpec::new(components, args.temp)?.density_breakdown(None)?.extrapolated;

    let mut doc = KvDoc::new();
    doc.push("components", ids.join(","));
    doc.push(
        "fractions",
        fractions.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","),
    );
    doc.push_f64("temperature_k", args.temp);
    doc.push_f64("dnn_kg_m3", dnn);
    doc.push_f64("rk_kg_m3", rk);
    doc.push_f64("ideal_kg_m3", ideal);
    doc.push_f64("rk_excess_kg_m3", rk - ideal);
    doc.push("extrapolated", extrapolated.to_string());

    ensure_out_dir(&args.out_dir)?;
    doc.write(&args.out_dir.join("prediction.txt"))?;

    let mut manifest = RunManifest::new("predict", ctx.seed, ctx.threads);
    manifest.opt("components", ids.join(","));
    manifest.opt("fractions", &args.fractions);
    manifest.opt_f64("temp", args.temp);
    push_baseline_inputs(&mut manifest, &args.model_inputs, &args.baselines)?;
    manifest.output("prediction.txt");
    manifest.write(&args.out_dir)?;

    print!("{}", doc.render());
    Ok(())
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepMode {
    /// Fixed composition, temperature on the axis.
    Temperature,
    /// Fixed temperature, one composition coordinate on the axis.
    Composition,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    common: Common,

    #[command(flatten)]
    model_inputs: ModelInputs,

    #[command(flatten)]
    baselines: BaselineInputs,

    /// Axis to sweep.
    #[arg(long, value_enum)]
    mode: SweepMode,

    /// Component ids, like LiF,NaF,ZrF4 (temperature mode).
    #[arg(long)]
    components: Option<String>,

    /// Matching mole fractions (temperature mode).
    #[arg(long)]
    fractions: Option<String>,

    /// Axis start in kelvin (temperature mode).
    #[arg(long)]
    t_min: Option<f64>,

    /// Axis end in kelvin (temperature mode).
    #[arg(long)]
    t_max: Option<f64>,

    /// Component whose mole fraction runs over the axis (composition mode).
    #[arg(long)]
    vary: Option<String>,

    /// Relative weights of the remaining components, like NaF:2,LiF:3 (with --vary).
    #[arg(long)]
    others: Option<String>,

    /// Pinned component and fraction, like LiF:0.7 (composition mode).
    #[arg(long)]
    fixed: Option<String>,

    /// Two ids whose ratio runs over the axis, like BeF2,ZrF4 (with --fixed).
    #[arg(long)]
    pair: Option<String>,

    /// Axis start (composition mode) [default: 0].
    #[arg(long)]
    coord_min: Option<f64>,

    /// Axis end (composition mode) [default: 1 with --vary, required with --fixed].
    #[arg(long)]
    coord_max: Option<f64>,

    /// Fixed temperature in kelvin (composition mode).
    #[arg(long)]
    temp: Option<f64>,

    /// Points along the axis [default: 101].
    #[arg(long)]
    n: Option<usize>,

    /// Directory for the sweep CSV and manifest.txt.
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let ctx = RunContext::new(&args.common)?;
    let n = ctx.usize("n", args.n, 101)?;
    let stack = EvalStack::load(&args.model_inputs, &args.baselines)?;
    stack.report_warnings();
    let evaluators = stack.evaluators();

    let mut manifest = RunManifest::new("sweep", ctx.seed, ctx.threads);
    manifest.opt("n", n);

    let (result, csv_name) = match args.mode {
        SweepMode::Temperature => {
            if args.vary.is_some()
                || args.others.is_some()
                || args.fixed.is_some()
                || args.pair.is_some()
                || args.coord_min.is_some()
                || args.coord_max.is_some()
                || args.temp.is_some()
            {
                return Err(Error::Config(
                    "--vary/--others/--fixed/--pair/--coord-min/--coord-max/--temp apply only to --mode composition".into(),
                ));
            }
            let components =
                parsers::require(args.components, "--components", "temperature mode")?;
            let fractions = parsers::require(args.fractions, "--fractions", "temperature mode")?;
            let ids = parsers::id_list("components", &components)?;
            let xs = parsers::f64_list("fractions", &fractions)?;
            let t_min = parsers::require(args.t_min, "--t-min", "temperature mode")?;
            let t_max = parsers::require(args.t_max, "--t-max", "temperature mode")?;
            manifest.opt("mode", "temperature");
            manifest.opt("components", &components);
            manifest.opt("fractions", &fractions);
            manifest.opt_f64("t-min", t_min);
            manifest.opt_f64("t-max", t_max);
            let result = sweep_temperature(&evaluators, &ids, &xs, (t_min, t_max), n)?;
            (result, "sweep_temperature.csv")
        }
        SweepMode::Composition => {
            if args.components.is_some()
                || args.fractions.is_some()
                || args.t_min.is_some()
                || args.t_max.is_some()
            {
                return Err(Error::Config(
                    "--components/--fractions/--t-min/--t-max apply only to --mode temperature".into(),
                ));
            }
            let temp = parsers::require(args.temp, "--temp", "composition mode")?;
            let path = if let Some(varying) = args.vary {
                if args.fixed.is_some() || args.pair.is_some() {
                    return Err(Error::Config("--vary and --fixed are mutually exclusive".into()));
                }
                let others_raw = parsers::require(args.others, "--others", "--vary")?;
                manifest.opt("mode", "composition");
                manifest.opt("vary", &varying);
                manifest.opt("others", &others_raw);
                let others = parsers::weighted("others", &others_raw)?;
                CompositionPath::VaryOne { varying, others }
            } else {
                let fixed_raw =
                    parsers::require(args.fixed, "--fixed", "composition mode without --vary")?;
                let pair_raw = parsers::require(args.pair, "--pair", "--fixed")?;
                manifest.opt("mode", "composition");
                manifest.opt("fixed", &fixed_raw);
                manifest.opt("pair", &pair_raw);
                let fixed = parsers::pinned("fixed", &fixed_raw)?;
                let pair = parsers::pair("pair", &pair_raw)?;
                CompositionPath::FixedOneRatio { fixed, pair }
            };
            let coord_min = ctx.f64("coord-min", args.coord_min, 0.0)?;
            let coord_max = {
                let merged = ctx.f64("coord-max", args.coord_max, f64::NAN)?;
                match (merged.is_nan(), &path) {
                    (false, _) => merged,
                    (true, CompositionPath::VaryOne { .. }) => 1.0,
                    (true, CompositionPath::FixedOneRatio { .. }) => {
                        return Err(Error::Config(
                            "--fixed sweeps need an explicit --coord-max".into(),
                        ))
                    }
                }
            };
            manifest.opt_f64("coord-min", coord_min);
            manifest.opt_f64("coord-max", coord_max);
            manifest.opt_f64("temp", temp);
            let result = sweep_composition(&evaluators, &path, (coord_min, coord_max), n, temp)?;
            (result, "sweep_composition.csv")
        }
    };

    ensure_out_dir(&args.out_dir)?;
    result.write_csv(&args.out_dir.join(csv_name))?;

    push_baseline_inputs(&mut manifest, &args.model_inputs, &args.baselines)?;
    manifest.output(csv_name);
    manifest.write(&args.out_dir)?;

    println!("axis: {} ({} points)", result.axis_label(), result.n_points());
    for series in result.series() {
        match series.roughness {
            Some(r) => println!("{}: roughness {}", series.name, fmt_f64(r)),
            None => println!("{}: roughness n/a", series.name),
        }
    }
    Ok(())
}
