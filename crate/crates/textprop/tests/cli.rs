//! End-to-end CLI checks: verbs, artifacts, and exit codes.

use std::path::Path;
use std::process::Command;

use textprop::synth::{self, SynthConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_textprop"))
}

fn setup(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let csv = dir.join("synth.csv");
    let docs = synth::generate(&SynthConfig {
        docs: 300,
        ..Default::default()
    });
    synth::write_csv(&docs, &csv).unwrap();
    let conf = dir.join("exp.conf");
    std::fs::write(
        &conf,
        format!(
            "dataset_path = {}\nembedding_dim = 16\nvocab_max_size = 1500\nmax_len = 64\n\
             label_fraction = 0.2\nseed = 1\nk = 10\nhidden_dim = 16\nlearning_rate = 0.002\n\
             batch_size = 32\nepochs_baseline = 2\nepochs_lp = 2\nepochs_full = 2\n",
            csv.display()
        ),
    )
    .unwrap();
    (csv, conf)
}

#[test]
fn prepare_baseline_lp_run_chart_flow() {
    let dir = tempfile::tempdir().unwrap();
    let (_csv, conf) = setup(dir.path());
    let out = dir.path().join("out");
    let out_arg = out.to_str().unwrap();
    let conf_arg = conf.to_str().unwrap();

    let status = bin()
        .args(["prepare", "--config", conf_arg, "--out", out_arg])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("vocab.tsv").exists());
    assert!(out.join("indexed_train.tsv").exists());
    assert!(out.join("prepare.json").exists());

    // vocab dump format: token<TAB>id<TAB>frequency, reserved rows first
    let vocab = std::fs::read_to_string(out.join("vocab.tsv")).unwrap();
    let mut lines = vocab.lines();
    assert_eq!(lines.next(), Some("<pad>\t0\t0"));
    assert_eq!(lines.next(), Some("<unk>\t1\t0"));

    let status = bin()
        .args(["baseline", "--config", conf_arg, "--out", out_arg])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("baseline.lpck").exists());

    let status = bin()
        .args(["lp", "--config", conf_arg, "--out", out_arg])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("pseudo_labels.csv").exists());
    assert!(out.join("pseudo_labels.json").exists());
    assert!(out.join("features.lpfm").exists());
    assert!(out.join("graph.lpgr").exists());

    let status = bin()
        .args(["supervised", "--config", conf_arg, "--out", out_arg])
        .status()
        .unwrap();
    assert!(status.success());

    let run_out = dir.path().join("run");
    let status = bin()
        .args(["run", "--config", conf_arg, "--out", run_out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(run_out.join("summary.csv").exists());

    // chart re-emission from the summary
    std::fs::remove_file(run_out.join("chart_accuracy.svg")).unwrap();
    let status = bin()
        .args(["chart", "--out", run_out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(run_out.join("chart_accuracy.svg").exists());
}

#[test]
fn grid_runs_cells_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (_csv, conf) = setup(dir.path());
    let out = dir.path().join("grid");
    let status = bin()
        .args([
            "grid",
            "--config",
            conf.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--label-fractions",
            "0.1,0.2",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    // 2 cells x 3 stages x 3 metrics
    assert_eq!(summary.lines().count(), 1 + 18, "{summary}");
    assert!(out.join("chart_accuracy.svg").exists());
}

#[test]
fn exit_code_2_for_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("broken.conf");
    std::fs::write(&conf, "dataset_path = /nonexistent/file.csv\n").unwrap();
    let status = bin()
        .args(["run", "--config", conf.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // unknown key is also a config error
    let conf2 = dir.path().join("unknown.conf");
    std::fs::write(&conf2, "nonsense_key = 5\n").unwrap();
    let status = bin()
        .args(["run", "--config", conf2.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn exit_code_3_for_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "label,text\nnot_a_label,some text\n").unwrap();
    let conf = dir.path().join("exp.conf");
    std::fs::write(&conf, format!("dataset_path = {}\n", csv.display())).unwrap();
    let status = bin()
        .args(["run", "--config", conf.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn exit_code_4_for_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let (_csv, conf) = setup(dir.path());
    // an absurd learning rate forces divergence within a few updates
    let conf_diverge = dir.path().join("diverge.conf");
    let base = std::fs::read_to_string(&conf).unwrap();
    std::fs::write(&conf_diverge, format!("{base}learning_rate = 1e308\n")).unwrap();
    let status = bin()
        .args([
            "baseline",
            "--config",
            conf_diverge.to_str().unwrap(),
            "--out",
            dir.path().join("div").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}
