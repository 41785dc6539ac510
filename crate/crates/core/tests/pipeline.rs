//! End-to-end library workflow: corpus → datasets → transfer pipeline →
//! artifacts on disk, plus checkpoint round-trips.

use saltdens::dataset::{build_experimental_dataset, build_rk_dataset, Dataset};
use saltdens::ingest::{DescriptorSelection, DownselectConfig};
use saltdens::kvtext::KvDoc;
use saltdens::nn::{init_mlp, load_checkpoint, load_checkpoint_for, save_checkpoint};
use saltdens::synth::{generate_corpus, SyntheticCorpus};
use saltdens::transfer::{run_tl_pipeline, TlConfig};
use saltdens::Error;

fn fixture(corpus: &SyntheticCorpus, target_count: usize, seed: u64) -> (Dataset, Dataset, DescriptorSelection) {
    let selection = DescriptorSelection::compute(
        corpus.descriptors(),
        DownselectConfig { variance_floor: 0.0, corr_threshold: 0.95, target_count },
        corpus.pure_db().temperature_span().unwrap(),
    )
    .unwrap();
    let (rk_ds, _) = build_rk_dataset(
        corpus.pure_db(),
        corpus.rk_table(),
        corpus.ternary_systems(),
        &selection,
        0.25,
        100.0,
        seed,
    )
    .unwrap();
    let points = corpus.interior_compositions(2, seed.wrapping_add(1));
    let exp_db = corpus.experimental_db(&points, 0.3, 25.0, seed.wrapping_add(2)).unwrap();
    let exp_ds = build_experimental_dataset(&exp_db, &selection, 50.0, seed).unwrap();
    (rk_ds, exp_ds, selection)
}

#[test]
fn tl_pipeline_writes_complete_artifacts() {
    let corpus = generate_corpus(21).unwrap();
    let (rk_ds, exp_ds, _) = fixture(&corpus, 6, 21);

    let mut config = TlConfig::default();
    config.pretrain_hidden_dims = vec![12, 12, 12];
    config.retain_layers = 2;
    config.new_hidden_dims = vec![12, 12];
    config.pretrain.max_epochs = 12;
    config.pretrain.patience = 12;
    config.frozen.max_epochs = 15;
    config.frozen.patience = 15;
    config.finetune.max_epochs = 8;
    config.finetune.patience = 8;
    config.finetune.learning_rate = 1e-5;
    config.seed = 21;

    let dir = tempfile::tempdir().unwrap();
    let (model, report) = run_tl_pipeline(&rk_ds, &exp_ds, &config, Some(dir.path())).unwrap();

    for name in ["stage_a.ckpt", "stage_b.ckpt", "stage_c.ckpt", "stage_d.ckpt", "tl_report.txt"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let reloaded = load_checkpoint(&dir.path().join("stage_d.ckpt")).unwrap();
    assert_eq!(reloaded.digest(), model.digest());
    assert_eq!(reloaded.digest(), report.final_digest);
    assert!(report.frozen_integrity);

    let doc = KvDoc::read(&dir.path().join("tl_report.txt")).unwrap();
    assert_eq!(doc.get("final_digest"), Some(report.final_digest.as_str()));
    assert_eq!(
        doc.get("frozen_integrity"),
        Some(report.frozen_integrity.to_string().as_str())
    );

    load_checkpoint_for(&dir.path().join("stage_d.ckpt"), &exp_ds).unwrap();
    let (_, narrow_exp, _) = fixture(&corpus, 4, 21);
    let err = load_checkpoint_for(&dir.path().join("stage_d.ckpt"), &narrow_exp).unwrap_err();
    assert!(matches!(err, Error::Incompatible(_) | Error::Shape(_)), "got {err:?}");
}

#[test]
fn checkpoints_round_trip_bit_exactly() {
    let model = {
        let mut m = init_mlp(9, &[7, 5], 3).unwrap();
        m.set_selection_digest("fixture-digest");
        m.push_provenance("round-trip fixture");
        m
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    save_checkpoint(&model, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();

    assert_eq!(loaded.digest(), model.digest());
    assert_eq!(loaded.selection_digest(), "fixture-digest");
    assert_eq!(loaded.input_dim(), 9);
    let probe: Vec<f64> = (0..9).map(|i| 0.3 * i as f64 - 1.0).collect();
    let a = model.forward_one(&probe).unwrap();
    let b = loaded.forward_one(&probe).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}
