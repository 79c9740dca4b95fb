use std::fs;

use opeval_core::harness::{run_correlation_experiment, ExperimentConfig};
use opeval_core::io::log::{read_episodes, write_episodes};
use opeval_core::io::tables::{read_reports, read_scores};
use opeval_core::io::{self, cmd_collect, cmd_score, read_manifest, LogCheck, Outcome, RunContext, ScoreOptions};
use opeval_core::{annotate, MetricName};

#[test]
fn default_collect_writes_1000_lines_that_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    let ctx = RunContext::from_config(ExperimentConfig::default(), 0);
    let d = cmd_collect(&ctx, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1000);
    assert!(text.ends_with('\n'));
    let env = ctx.config.env.build().unwrap();
    let back = io::read_tree_log(&path, &env).unwrap();
    assert_eq!(back.episodes, d.episodes);
}

#[test]
fn annotated_round_trip_is_exact() {
    let cfg = ExperimentConfig::default();
    let env = cfg.env.build().unwrap();
    let d = opeval_core::harness::validation_dataset(&cfg, &env).unwrap();
    let q = opeval_core::harness::generate_random_q(&env, &cfg.q_distribution, 17, 0);
    let a = annotate(&d, &q).unwrap();
    let mut buf = Vec::new();
    write_episodes(&mut buf, &a.episodes).unwrap();
    assert_eq!(read_episodes(&buf[..], &LogCheck::default()).unwrap(), a.episodes);
}

#[test]
fn score_csv_reingests_bit_exactly() {
    let cfg = ExperimentConfig::default();
    let env = cfg.env.build().unwrap();
    let d = opeval_core::harness::validation_dataset(&cfg, &env).unwrap();
    let q = opeval_core::harness::generate_random_q(&env, &cfg.q_distribution, 3, 0);
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("a.jsonl");
    io::write_log(&log, &annotate(&d, &q).unwrap()).unwrap();
    let table = dir.path().join("q.json");
    io::write_qtable(&table, &q).unwrap();

    let opts = ScoreOptions { extended_opc: true, binary_strict: true, ..ScoreOptions::default() };
    let mut embedded = Vec::new();
    assert_eq!(cmd_score(&log, None, &opts, &mut embedded).unwrap(), Outcome::Success);
    let mut from_table = Vec::new();
    let plain = dir.path().join("p.jsonl");
    io::write_log(&plain, &d).unwrap();
    cmd_score(&plain, Some(&table), &opts, &mut from_table).unwrap();
    assert_eq!(embedded, from_table);

    let direct = io::score_dataset(&d, Some(&q), &opts).unwrap();
    assert_eq!(read_scores(&embedded[..]).unwrap(), direct);
    let opc = direct.iter().find(|r| r.metric == MetricName::Opc).unwrap();
    let ext = direct.iter().find(|r| r.metric == MetricName::ExtOpc).unwrap();
    assert_eq!(opc.value, ext.value);
}

#[test]
fn correlate_outputs_reingest_and_manifest_hashes_match() {
    let cfg = ExperimentConfig { n_qfunctions: 50, n_validation_episodes: 300, ..ExperimentConfig::default() };
    let dir = tempfile::tempdir().unwrap();
    let ctx = RunContext::from_config(cfg.clone(), 7);
    assert_eq!(io::cmd_correlate(&ctx, dir.path()).unwrap(), Outcome::Success);
    let expected = run_correlation_experiment(&cfg).unwrap();
    let bytes = fs::read(dir.path().join("reports.csv")).unwrap();
    assert_eq!(read_reports(&bytes[..]).unwrap(), expected.reports);

    let manifest = read_manifest(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.config, cfg);
    assert_eq!(manifest.created_unix, 7);
    for (name, hash) in &manifest.outputs {
        assert_eq!(&io::sha256_hex(&fs::read(dir.path().join(name)).unwrap()), hash);
    }
}

#[test]
fn config_path_is_hashed_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, "master_seed = 3\nn_qfunctions = 10\n").unwrap();
    let ctx = RunContext::load(Some(&path), Some(11), 0).unwrap();
    assert_eq!(ctx.config.master_seed, 11);
    assert_eq!(ctx.inputs.len(), 1);
    assert!(RunContext::load(Some(&dir.path().join("missing.toml")), None, 0).is_err());
}

#[test]
fn shipped_configs_parse() {
    let tree = ExperimentConfig::from_toml(include_str!("../../../configs/tree.toml")).unwrap();
    let mut expected = ExperimentConfig::default();
    expected.env.success_leaves = Some(vec![0]);
    assert_eq!(tree, expected);
    let failure = ExperimentConfig::from_toml(include_str!("../../../configs/tree_one_failure.toml")).unwrap();
    assert_eq!(failure.env.build().unwrap().success_leaves().len(), 31);
}
