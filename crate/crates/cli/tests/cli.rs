use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use slke::dataset::{self, three_blobs};

fn slke(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slke")).args(args).current_dir(dir).output().unwrap()
}

fn blobs(dir: &Path) {
    let (x, y) = three_blobs(3);
    dataset::save_dataset(&dir.join("blobs.csv"), &x, Some(&y)).unwrap();
}

#[test]
fn bench_happy_path_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    blobs(dir.path());
    let out = slke(
        &["bench", "--data", "blobs.csv", "--labels", "--methods", "slke-r", "--kernels", "gaussian:1",
          "--gammas", "1e-3", "--max-iters", "20", "--out", "results/"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["report.txt", "cells.csv", "report.json"] {
        assert!(dir.path().join("results").join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("results/cells.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("slke-r"));
}

#[test]
fn manifest_keys_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    blobs(dir.path());
    fs::write(
        dir.path().join("m.toml"),
        "dataset = \"blobs.csv\"\nkernels = [\"linear\", \"gaussian-t1\"]\ngammas = [1e-4, 1e-3]\n\
         methods = [\"slke-s\"]\nmax_iters = 5\noutput_dir = \"from-manifest\"\ndump_z = true\n",
    )
    .unwrap();
    let out = slke(&["bench", "--manifest", "m.toml", "--gammas", "1e-2", "--out", "cli"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("from-manifest").exists());
    let csv = fs::read_to_string(dir.path().join("cli/cells.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.starts_with("slke-s,") && r.contains(",0.01,")));
    assert!(dir.path().join("cli/Z_slke-s_linear_g1e-2.csv").exists());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = slke(&["bench", "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_flag_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    blobs(dir.path());
    let out = slke(&["bench", "--data", "blobs.csv", "--methods", "kmeans"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = slke(&["bench"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_length_mismatch_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.csv"), "label\n0\n1\n").unwrap();
    fs::write(dir.path().join("b.csv"), "label\n0\n1\n1\n").unwrap();
    let out = slke(&["eval", "--truth", "a.csv", "--pred", "b.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = slke(&["cluster", "--affinity", "nope.csv", "--k", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_scores_relabelled_prediction() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.csv"), "label\n0\n0\n1\n1\n").unwrap();
    fs::write(dir.path().join("b.csv"), "label\n5\n5\n2\n2\n").unwrap();
    let out = slke(&["eval", "--truth", "a.csv", "--pred", "b.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "acc=1\nnmi=1\n");
}

#[test]
fn kernel_fit_cluster_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    blobs(dir.path());
    let d = dir.path();
    let ok = |o: Output| assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    ok(slke(&["kernel", "--data", "blobs.csv", "--labels", "--kernels", "gaussian:1,linear", "--out", "k"], d));
    assert!(d.join("k/K_linear.csv").exists());
    ok(slke(
        &["fit", "--kernel-file", "k/K_gaussian-t1.csv", "--regularizer", "sparse", "--gamma", "1e-3",
          "--max-iters", "10", "--out", "z.csv", "--trace", "trace.csv"],
        d,
    ));
    let z = dataset::load_matrix(&d.join("z.csv")).unwrap();
    assert_eq!(z.shape(), (90, 90));
    let trace = fs::read_to_string(d.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("iteration,objective,r_j,r_w"));
    ok(slke(&["cluster", "--affinity", "z.csv", "--k", "3", "--symmetrize", "--out", "pred.csv"], d));
    assert_eq!(dataset::load_labels(&d.join("pred.csv")).unwrap().len(), 90);
}

#[test]
fn asymmetric_affinity_without_symmetrize_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.csv"), "c0,c1\n1,0.9\n0.1,1\n").unwrap();
    let out = slke(&["cluster", "--affinity", "a.csv", "--k", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = slke(&["cluster", "--affinity", "a.csv", "--k", "2", "--symmetrize"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}
