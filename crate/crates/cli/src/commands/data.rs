//! Data preparation: table ingestion, dataset expansion, corpus synthesis.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use saltdens::dataset::{
    build_experimental_dataset, build_rk_dataset, save_dataset, sidecar_path, split, Dataset,
    DEFAULT_GRID_STEP, DEFAULT_TEMPERATURE_STEP,
};
use saltdens::ingest::{
    parse_correlations, parse_descriptors, parse_rk_coefficients, write_correlations,
    DescriptorSelection, DownselectConfig,
};
use saltdens::synth::generate_corpus;
use saltdens::{Error, Result};

use crate::commands::ensure_out_dir;
use crate::context::{Common, RunContext};
use crate::manifest::RunManifest;
use crate::parsers;

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[command(flatten)]
    common: Common,

    /// Pure-component density-correlation CSV.
    #[arg(long)]
    correlations: PathBuf,

    /// Component molar-mass CSV.
    #[arg(long)]
    masses: PathBuf,

    /// Per-component descriptor CSV.
    #[arg(long)]
    descriptors: PathBuf,

    /// Directory for selection.json and manifest.txt.
    #[arg(long)]
    out_dir: PathBuf,

    /// Drop descriptor columns with variance at or below this floor [default: 0].
    #[arg(long)]
    variance_floor: Option<f64>,

    /// Of any column pair correlated beyond this in magnitude, drop the later one [default: 0.95].
    #[arg(long)]
    corr_threshold: Option<f64>,

    /// Keep at most this many descriptor columns [default: 134].
    #[arg(long)]
    target_count: Option<usize>,
}

pub fn ingest(args: IngestArgs) -> Result<()> {
    let ctx = RunContext::new(&args.common)?;
    let defaults = DownselectConfig::default();
    let variance_floor = ctx.f64("variance-floor", args.variance_floor, defaults.variance_floor)?;
    let corr_threshold = ctx.f64("corr-threshold", args.corr_threshold, defaults.corr_threshold)?;
    let target_count = ctx.usize("target-count", args.target_count, defaults.target_count)?;

    let db = parse_correlations(&args.correlations, &args.masses)?;
    let table = parse_descriptors(&args.descriptors)?;
    let config = DownselectConfig { variance_floor, corr_threshold, target_count };
    let selection = DescriptorSelection::compute(&table, config, db.temperature_span()?)?;

    ensure_out_dir(&args.out_dir)?;
    selection.save(&args.out_dir.join("selection.json"))?;

    let mut manifest = RunManifest::new("ingest", ctx.seed, ctx.threads);
    manifest.opt_f64("variance-floor", variance_floor);
    manifest.opt_f64("corr-threshold", corr_threshold);
    manifest.opt("target-count", target_count);
    manifest.input(&args.correlations)?;
    manifest.input(&args.masses)?;
    manifest.input(&args.descriptors)?;
    manifest.output("selection.json");
    manifest.write(&args.out_dir)?;

    for warning in &selection.warnings {
        eprintln!("warning: {warning}");
    }
    println!("components: {}", db.n_components());
    println!("descriptors kept: {} of {}", selection.d(), table.names().len());
    println!("feature width: {}", selection.feature_len());
    println!("selection digest: {}", selection.digest());
    Ok(())
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DatasetKind {
    /// One group per correlation record, sampled over its valid range.
    Experimental,
    /// Redlich-Kister mixtures enumerated over composition lattices.
    Rk,
}

#[derive(Args, Debug)]
pub struct BuildDatasetArgs {
    #[command(flatten)]
    common: Common,

    /// Which rows to generate.
    #[arg(long, value_enum)]
    kind: DatasetKind,

    /// Pure-component density-correlation CSV.
    #[arg(long)]
    correlations: PathBuf,

    /// Component molar-mass CSV.
    #[arg(long)]
    masses: PathBuf,

    /// Frozen descriptor selection from `ingest`.
    #[arg(long)]
    selection: PathBuf,

    /// Redlich-Kister coefficient CSV (`--kind rk` only).
    #[arg(long)]
    rk_coefficients: Option<PathBuf>,

    /// Systems to enumerate, like `LiF-NaF-ZrF4,KCl-LiCl-LiF` (`--kind rk` only).
    #[arg(long)]
    systems: Option<String>,

    /// Mole-fraction lattice spacing (`--kind rk` only) [default: 0.1].
    #[arg(long)]
    grid_step: Option<f64>,

    /// Temperature sampling step in kelvin [default: 50].
    #[arg(long)]
    temp_step: Option<f64>,

    /// Group-wise holdout fraction; 0 writes a single dataset.csv [default: 0].
    #[arg(long)]
    test_fraction: Option<f64>,

    /// Directory for the dataset CSVs and manifest.txt.
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn build_dataset(args: BuildDatasetArgs) -> Result<()> {
    let ctx = RunContext::new(&args.common)?;
    let grid_step = ctx.f64("grid-step", args.grid_step, DEFAULT_GRID_STEP)?;
    let temp_step = ctx.f64("temp-step", args.temp_step, DEFAULT_TEMPERATURE_STEP)?;
    let test_fraction = ctx.f64("test-fraction", args.test_fraction, 0.0)?;

    let db = parse_correlations(&args.correlations, &args.masses)?;
    let selection = DescriptorSelection::load(&args.selection)?;

    let mut manifest = RunManifest::new("build-dataset", ctx.seed, ctx.threads);
    let mut rk_input: Option<PathBuf> = None;
    let dataset = match args.kind {
        DatasetKind::Experimental => {
            if args.rk_coefficients.is_some() || args.systems.is_some() {
                return Err(Error::Config(
                    "--rk-coefficients and --systems apply only to --kind rk".into(),
                ));
            }
            manifest.opt("kind", "experimental");
            build_experimental_dataset(&db, &selection, temp_step, ctx.seed)?
        }
        DatasetKind::Rk => {
            let coeff_path = parsers::require(args.rk_coefficients, "--rk-coefficients", "--kind rk")?;
            let systems_raw = parsers::require(args.systems, "--systems", "--kind rk")?;
            let systems = parsers::systems("systems", &systems_raw)?;
            let outcome = parse_rk_coefficients(&coeff_path)?;
            for warning in &outcome.warnings {
                eprintln!("warning: {warning}");
            }
            manifest.opt("kind", "rk");
            manifest.opt("systems", &systems_raw);
            manifest.opt_f64("grid-step", grid_step);
            let (dataset, warnings) = build_rk_dataset(
                &db,
                &outcome.table,
                &systems,
                &selection,
                grid_step,
                temp_step,
                ctx.seed,
            )?;
            for warning in &warnings {
                eprintln!("warning: {warning}");
            }
            rk_input = Some(coeff_path);
            dataset
        }
    };
    manifest.opt_f64("temp-step", temp_step);
    manifest.opt_f64("test-fraction", test_fraction);
    manifest.input(&args.correlations)?;
    manifest.input(&args.masses)?;
    manifest.input(&args.selection)?;
    if let Some(path) = &rk_input {
        manifest.input(path)?;
    }

    ensure_out_dir(&args.out_dir)?;
    if test_fraction > 0.0 {
        let (train, test) = split(&dataset, test_fraction, ctx.seed)?;
        write_split(&train, &args.out_dir, "train.csv", &mut manifest)?;
        write_split(&test, &args.out_dir, "test.csv", &mut manifest)?;
        println!("train rows: {} in {} groups", train.n_rows(), train.n_groups());
        println!("test rows: {} in {} groups", test.n_rows(), test.n_groups());
    } else {
        write_split(&dataset, &args.out_dir, "dataset.csv", &mut manifest)?;
        println!("rows: {} in {} groups", dataset.n_rows(), dataset.n_groups());
    }
    println!("feature width: {}", dataset.feature_len());
    manifest.write(&args.out_dir)?;
    Ok(())
}

fn write_split(dataset: &Dataset, dir: &Path, name: &str, manifest: &mut RunManifest) -> Result<()> {
    save_dataset(dataset, &dir.join(name))?;
    manifest.output(name);
    manifest.output(&sidecar_path(Path::new(name)).to_string_lossy());
    Ok(())
}

#[derive(Args, Debug)]
pub struct GenCorpusArgs {
    #[command(flatten)]
    common: Common,

    /// Directory for the corpus CSVs and manifest.txt.
    #[arg(long)]
    out_dir: PathBuf,

    /// Multiplicative measurement noise, percent of the true density [default: 0.3].
    #[arg(long)]
    noise_pct: Option<f64>,

    /// Interior mixture compositions fitted per ternary system [default: 12].
    #[arg(long)]
    points_per_system: Option<usize>,

    /// Temperature spacing of the simulated measurements, kelvin [default: 25].
    #[arg(long)]
    fit_step: Option<f64>,
}

pub fn gen_corpus(args: GenCorpusArgs) -> Result<()> {
    let ctx = RunContext::new(&args.common)?;
    let noise_pct = ctx.f64("noise-pct", args.noise_pct, 0.3)?;
    let points_per_system = ctx.usize("points-per-system", args.points_per_system, 12)?;
    let fit_step = ctx.f64("fit-step", args.fit_step, 25.0)?;

    let corpus = generate_corpus(ctx.seed)?;
    let points = corpus.interior_compositions(points_per_system, ctx.seed.wrapping_add(1));
    let experimental =
        corpus.experimental_db(&points, noise_pct, fit_step, ctx.seed.wrapping_add(2))?;

    ensure_out_dir(&args.out_dir)?;
    corpus.write(&args.out_dir)?;
    write_correlations(
        &experimental,
        &args.out_dir.join("experimental_correlations.csv"),
        &args.out_dir.join("experimental_components.csv"),
    )?;
    let systems_path = args.out_dir.join("systems.txt");
    let mut systems_text = corpus
        .ternary_systems()
        .iter()
        .map(|sys| sys.join("-"))
        .collect::<Vec<_>>()
        .join("\n");
    systems_text.push('\n');
    std::fs::write(&systems_path, systems_text).map_err(|e| Error::io(&systems_path, e))?;

    let mut manifest = RunManifest::new("gen-corpus", ctx.seed, ctx.threads);
    manifest.opt_f64("noise-pct", noise_pct);
    manifest.opt("points-per-system", points_per_system);
    manifest.opt_f64("fit-step", fit_step);
    for name in [
        "correlations.csv",
        "components.csv",
        "rk_coefficients.csv",
        "descriptors.csv",
        "experimental_correlations.csv",
        "experimental_components.csv",
        "systems.txt",
    ] {
        manifest.output(name);
    }
    manifest.write(&args.out_dir)?;

    println!("pure components: {}", corpus.pure_db().n_components());
    println!("ternary systems: {}", corpus.ternary_systems().len());
    println!("experimental records: {}", experimental.records().len());
    Ok(())
}
