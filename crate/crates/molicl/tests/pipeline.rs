//! Experiment-orchestration integration: the ablation grid, the sweep
//! runners, and error paths that cross module boundaries.

use std::path::PathBuf;

use molicl::encoder::EncoderConfig;
use molicl::experiment::{
    run_ablation, run_experiment, sweep_k, sweep_lambda, train_encoder, AblationVariant,
    BackendConfig, ExperimentConfig, ExperimentError, StrategyKind, TrainSection,
};
use molicl::promptllm::Task;

fn quick_config(out_dir: PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        task: Task::Caption,
        dataset: PathBuf::from("data/toy_captions.jsonl"),
        embeddings: Some(PathBuf::from("data/toy_scibert.gemb")),
        embeddings_bert: Some(PathBuf::from("data/toy_bert.gemb")),
        checkpoint: None,
        strategy: StrategyKind::Gamic,
        mmr: true,
        k: None,
        lambda: 0.3,
        repeats: 2,
        seed: 99,
        split_seeds: vec![11, 23, 47],
        split_index: 0,
        backend: BackendConfig::Mock,
        out_dir,
        dump_per_example: false,
        fp_radius: 2,
        fp_nbits: 2048,
        encoder: Some(EncoderConfig {
            hidden_dim: 16,
            heads_layer1: 2,
            out_dim: 64,
            attn_negative_slope: 0.2,
        }),
        train: TrainSection {
            epochs: 3,
            batch_size: 16,
            lr: 3e-3,
            ..TrainSection::default()
        },
    }
}

#[test]
fn ablation_grid_produces_four_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path().join("ablate"));
    for variant in AblationVariant::ALL {
        let out = run_ablation(&cfg, variant).unwrap();
        assert!(out.report.mean("bleu2").is_some(), "{}", variant.name());
        let variant_dir = cfg.out_dir.join(variant.name());
        assert!(variant_dir.join("checkpoint.gckp").exists());
        assert!(variant_dir.join("report.json").exists());
    }
}

#[test]
fn ablation_without_bert_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path().join("ablate"));
    cfg.embeddings_bert = None;
    assert!(matches!(
        run_ablation(&cfg, AblationVariant::GamicBert),
        Err(ExperimentError::Config(_))
    ));
}

#[test]
fn sweeps_write_tables_with_sane_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path().join("sweeps"));
    cfg.out_dir = dir.path().join("train");
    let ckpt = train_encoder(&cfg, false).unwrap();
    cfg.checkpoint = Some(ckpt);
    cfg.out_dir = dir.path().join("sweeps");

    let results = sweep_k(&cfg, &[0, 1, 3]).unwrap();
    assert_eq!(results.len(), 3);
    let k0 = results[0].1.mean("bleu2").unwrap();
    let k1 = results[1].1.mean("bleu2").unwrap();
    assert!(k0 < k1, "zero-shot {k0} should trail one-shot {k1}");
    let csv = std::fs::read_to_string(cfg.out_dir.join("sweep_k.csv")).unwrap();
    assert!(csv.starts_with("k,bleu2,"));
    assert_eq!(csv.lines().count(), 4);

    let results = sweep_lambda(&cfg, &[0.1, 0.9]).unwrap();
    assert_eq!(results.len(), 2);
    let csv = std::fs::read_to_string(cfg.out_dir.join("sweep_lambda.csv")).unwrap();
    assert!(csv.starts_with("lambda,bleu2,"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn checkpoint_kind_must_match_the_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path().join("train"));
    let ckpt = train_encoder(&cfg, false).unwrap(); // gamic kind
    cfg.checkpoint = Some(ckpt);
    cfg.strategy = StrategyKind::Gae;
    cfg.out_dir = dir.path().join("run");
    assert!(matches!(
        run_experiment(&cfg),
        Err(ExperimentError::Config(_))
    ));
}

#[test]
fn gae_strategy_runs_with_a_gae_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path().join("train"));
    let ckpt = train_encoder(&cfg, true).unwrap();
    cfg.checkpoint = Some(ckpt);
    cfg.strategy = StrategyKind::Gae;
    cfg.out_dir = dir.path().join("run");
    let out = run_experiment(&cfg).unwrap();
    assert!(out.report.mean("bleu2").unwrap() > 0.0);
}

#[test]
fn property_task_defaults_to_three_demonstrations() {
    let cfg = ExperimentConfig {
        task: Task::Property,
        ..quick_config(PathBuf::from("unused"))
    };
    assert_eq!(cfg.effective_k(), 3);
    let cfg = ExperimentConfig {
        task: Task::Yield,
        ..quick_config(PathBuf::from("unused"))
    };
    assert_eq!(cfg.effective_k(), 3);
}

#[test]
fn rerunning_into_the_same_directory_overwrites_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path().join("run"));
    cfg.strategy = StrategyKind::Random;
    cfg.mmr = false;
    cfg.repeats = 1;
    run_experiment(&cfg).unwrap();
    let first = std::fs::read(cfg.out_dir.join("report.json")).unwrap();
    run_experiment(&cfg).unwrap();
    let second = std::fs::read(cfg.out_dir.join("report.json")).unwrap();
    assert_eq!(first, second);
    // no temp files left behind
    let leftovers: Vec<_> = std::fs::read_dir(&cfg.out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "tmp"))
        .collect();
    assert!(leftovers.is_empty());
}
