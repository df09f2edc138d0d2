use std::path::Path;
use std::process::{Command, Output};

const TINY: &[&str] = &[
    "--classes", "3", "--per-class", "20", "--dims", "4", "--held-out", "15", "--hidden", "8", "--epochs", "3", "--batch-size", "8", "--workers", "1",
];

fn memlab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_memlab"));
    cmd.args(args).env_remove("MEMLAB_OUT");
    if let Some(dir) = env_out {
        cmd.env("MEMLAB_OUT", dir);
    }
    cmd.output().unwrap()
}

fn with_tiny<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(TINY.iter().copied()).collect()
}

#[test]
fn train_writes_one_report_with_epoch_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = memlab(&with_tiny(&["train", "--dataset", "synth", "--noise", "0.0", "--seeds", "1", "--preset", "mlp-small", "--out", out]), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(dir.path().join("noise0.00_seed1/report.csv")).unwrap();
    assert_eq!(report.lines().count(), 4);
    assert!(dir.path().join("noise0.00_seed1/model.nnck").exists());

    let first = std::fs::read(dir.path().join("noise0.00_seed1/report.csv")).unwrap();
    let hash = |o: &Output| String::from_utf8_lossy(&o.stdout).lines().find(|l| l.starts_with("config hash")).unwrap().to_string();
    let o2 = memlab(&with_tiny(&["train", "--dataset", "synth", "--noise", "0.0", "--seeds", "1", "--preset", "mlp-small", "--out", out]), None);
    assert_eq!(hash(&o), hash(&o2));
    assert_eq!(std::fs::read(dir.path().join("noise0.00_seed1/report.csv")).unwrap(), first);

    let r = memlab(&["report", out], None);
    assert!(r.status.success());
    assert!(String::from_utf8_lossy(&r.stdout).contains("verified"));
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(memlab(&with_tiny(&["train", "--noise", "1.5", "--out", out]), None).status.code(), Some(1));
    assert_eq!(memlab(&with_tiny(&["seed-study", "--seeds", "1", "--out", out]), None).status.code(), Some(1));
    assert_eq!(memlab(&["train", "--preset", "vgg11"], None).status.code(), Some(1));
    assert_eq!(memlab(&with_tiny(&["noise-sweep", "--noise", "0,0.5,0.5,1", "--out", out]), None).status.code(), Some(1));
    assert_eq!(memlab(&["frobnicate"], None).status.code(), Some(1));
}

#[test]
fn missing_files_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = memlab(
        &["dissect", "--reference", "nope.nnck", "--probe", "nope.nnck", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.nnck"));
    let o = memlab(&["train", "--dataset", "idx", "--images", "missing-images", "--labels", "missing-labels"], None);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn env_var_sets_output_root_and_config_file_is_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "seeds = [4, 5]\n[training]\nepochs = 7\n").unwrap();
    let o = memlab(&with_tiny(&["train", "--config", cfg.to_str().unwrap()]), Some(dir.path()));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = dir.path().join("train/noise0.00_seed5");
    // the --epochs flag wins over the file
    assert_eq!(std::fs::read_to_string(run.join("report.csv")).unwrap().lines().count(), 4);
    let saved = std::fs::read_to_string(dir.path().join("train/config.toml")).unwrap();
    assert!(saved.contains("seeds = [4, 5]"), "{saved}");
}

#[test]
fn seed_study_svg_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = memlab(&with_tiny(&["seed-study", "--seeds", "1,2", "--noise", "1", "--out", out]), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(dir.path().join("seed_study.svg")).unwrap();
    roxmltree::Document::parse(&svg).unwrap();
}
