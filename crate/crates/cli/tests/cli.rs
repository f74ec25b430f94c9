use std::path::Path;
use std::process::{Command, Output};

fn silkit(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_silkit"))
        .current_dir(dir)
        .env_remove("SIL_SEED")
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn data_rows(text: &str) -> usize {
    text.lines().filter(|l| !l.starts_with('#')).count() - 1
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn gen_blobs_row_counts_and_repeatability() {
    let dir = tempfile::tempdir().unwrap();
    let a = silkit(dir.path(), &["gen", "blobs", "--k", "4", "--n", "200", "--seed", "1"]);
    let b = silkit(dir.path(), &["gen", "blobs", "--k", "4", "--n", "200", "--seed", "1"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(data_rows(&String::from_utf8(a.stdout).unwrap()), 800);
    let big = silkit(
        dir.path(),
        &["gen", "blobs", "--k", "12", "--n", "100", "--nucleus-extra", "9900"],
    );
    assert_eq!(data_rows(&String::from_utf8(big.stdout).unwrap()), 11_100);
}

#[test]
fn seed_env_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let with_env = Command::new(env!("CARGO_BIN_EXE_silkit"))
        .current_dir(dir.path())
        .env("SIL_SEED", "9")
        .args([
            "gen", "blobs", "--layout", "square", "--k", "4", "--n", "5", "--seed", "1",
        ])
        .output()
        .unwrap();
    let flag = silkit(
        dir.path(),
        &[
            "gen", "blobs", "--layout", "square", "--k", "4", "--n", "5", "--seed", "9",
        ],
    );
    assert_eq!(with_env.stdout, flag.stdout);
}

#[test]
fn balanced_toy_scores_agree() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("toy.csv"), "x0,label\n0,0\n1,0\n10,1\n11,1\n").unwrap();
    let report = json(&silkit(dir.path(), &["score", "-i", "toy.csv"]));
    let r = &report["result"]["report"];
    assert_eq!(r["micro"], r["macro"]);
    assert!((r["micro"].as_f64().unwrap() - 0.899749373433584).abs() < 1e-9);
}

#[test]
fn sampled_scores_on_the_nucleus_dataset() {
    let dir = tempfile::tempdir().unwrap();
    silkit(
        dir.path(),
        &[
            "gen",
            "blobs",
            "--k",
            "12",
            "--n",
            "100",
            "--nucleus-extra",
            "9900",
            "-o",
            "n.csv",
        ],
    );
    for seed in 0..5 {
        let s = seed.to_string();
        let out = json(&silkit(
            dir.path(),
            &["score", "-i", "n.csv", "--sample", "100", "--seed", &s],
        ));
        assert_eq!(out["result"]["defined"], true);
    }
    // with small outer blobs a uniform draw regularly sees only the nucleus
    silkit(
        dir.path(),
        &[
            "gen",
            "blobs",
            "--k",
            "12",
            "--n",
            "20",
            "--nucleus-extra",
            "9980",
            "-o",
            "m.csv",
        ],
    );
    let undefined = (0..100).any(|seed| {
        let s = seed.to_string();
        let out = json(&silkit(
            dir.path(),
            &[
                "score",
                "-i",
                "m.csv",
                "--sample",
                "50",
                "--strategy",
                "uniform",
                "--seed",
                &s,
            ],
        ));
        out["result"]["defined"] == false && out["result"]["report"].is_null()
    });
    assert!(undefined);
}

#[test]
fn single_k_sweep_and_cluster_output() {
    let dir = tempfile::tempdir().unwrap();
    silkit(
        dir.path(),
        &[
            "gen", "blobs", "--layout", "square", "--k", "4", "--n", "30", "-o", "b.csv",
        ],
    );
    let out = silkit(dir.path(), &["sweep", "-i", "b.csv", "--k-min", "3", "--k-max", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(data_rows(&text), 1);
    assert!(text.lines().any(|l| l == "k,micro,macro,sse"));

    let c = json(&silkit(dir.path(), &["cluster", "-i", "b.csv", "--k", "4"]));
    assert_eq!(c["result"]["k"], 4);
    assert_eq!(c["result"]["labels"].as_array().unwrap().len(), 120);
    assert_eq!(c["result"]["centers"].as_array().unwrap().len(), 4);
}

#[test]
fn rejects_bad_ranges() {
    let dir = tempfile::tempdir().unwrap();
    silkit(
        dir.path(),
        &[
            "gen", "blobs", "--layout", "square", "--k", "4", "--n", "3", "-o", "b.csv",
        ],
    );
    let out = Command::new(env!("CARGO_BIN_EXE_silkit"))
        .current_dir(dir.path())
        .args(["sweep", "-i", "b.csv", "--k-min", "1", "--k-max", "3"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
