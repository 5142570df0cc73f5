use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pbcert::data::{gaussian_blobs, BlobSpec};
use serde_json::Value;

fn write_csv(dir: &Path) -> PathBuf {
    let ds = gaussian_blobs(
        &BlobSpec {
            n: 300,
            features: 3,
            classes: 2,
            separation: 2.5,
            label_noise: 0.0,
        },
        2,
    )
    .unwrap();
    let mut text = String::from("f0,f1,f2,class\n");
    for (i, y) in ds.y.iter().enumerate() {
        let row: Vec<String> = ds.x.row(i).iter().map(|v| v.to_string()).collect();
        text.push_str(&format!("{},{y}\n", row.join(",")));
    }
    let path = dir.join("blobs.csv");
    fs::write(&path, text).unwrap();
    path
}

const SMALL: &[&str] = &[
    "--hidden-units",
    "6",
    "--depth",
    "1",
    "--prior",
    "erm",
    "--prior-epochs",
    "3",
    "--epochs",
    "2",
    "--batch-size",
    "32",
    "--mc-samples",
    "50",
    "--checkpoint-mc-samples",
    "10",
];

fn pbcert(args: &[&str], extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbcert"))
        .args(args)
        .args(extra)
        .output()
        .unwrap()
}

fn last_json(out: &Output) -> Value {
    let stdout = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(stdout.lines().last().expect("some output")).unwrap()
}

#[test]
fn run_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = write_csv(tmp.path());
    let out_dir = tmp.path().join("out");
    let (csv, out_dir) = (csv.to_str().unwrap(), out_dir.to_str().unwrap());
    let out = pbcert(&["run", "--data", csv, "--out", out_dir, "--seed", "3"], SMALL);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = last_json(&out);
    let risk = v["risk_bound"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&risk));
    assert!(Path::new(v["record"].as_str().unwrap()).is_file());

    let again = pbcert(&["run", "--data", csv, "--out", out_dir, "--seed", "3"], SMALL);
    assert_eq!(last_json(&again)["risk_bound"], v["risk_bound"]);

    let rep = pbcert(&["report", "--out", out_dir], &[]);
    assert!(rep.status.success(), "{}", String::from_utf8_lossy(&rep.stderr));
    let table = fs::read_to_string(Path::new(out_dir).join("reports/table.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
}

#[test]
fn staged_commands_chain_through_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = write_csv(tmp.path());
    let out_dir = tmp.path().join("out");
    let (csv, out_dir) = (csv.to_str().unwrap(), out_dir.to_str().unwrap());
    let common = ["--data", csv, "--out", out_dir, "--seed", "5"];

    let prior = pbcert(&[&["train-prior"][..], &common].concat(), SMALL);
    assert!(prior.status.success(), "{}", String::from_utf8_lossy(&prior.stderr));
    let prior_path = last_json(&prior)["prior"].as_str().unwrap().to_string();

    let post = pbcert(
        &[&["train-posterior", "--prior-checkpoint", &prior_path][..], &common].concat(),
        SMALL,
    );
    assert!(post.status.success(), "{}", String::from_utf8_lossy(&post.stderr));
    let post_path = last_json(&post)["posterior"].as_str().unwrap().to_string();

    let cert = pbcert(
        &[
            &[
                "certify",
                "--prior-checkpoint",
                &prior_path,
                "--posterior-checkpoint",
                &post_path,
            ][..],
            &common,
        ]
        .concat(),
        SMALL,
    );
    assert!(cert.status.success(), "{}", String::from_utf8_lossy(&cert.stderr));
    let v = last_json(&cert);
    assert!(v["mc_estimate"].as_f64().unwrap() <= v["emp_bound"].as_f64().unwrap());
    assert!(v["emp_bound"].as_f64().unwrap() <= v["risk_bound"].as_f64().unwrap());
    assert_eq!(v["seed"], 5);
}

#[test]
fn invalid_config_fails_with_stage_message() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = write_csv(tmp.path());
    let out = pbcert(
        &["run", "--data", csv.to_str().unwrap(), "--seed", "1", "--sigma0=-1"],
        SMALL,
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: config:"), "{err}");
}

#[test]
fn config_document_overrides_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = write_csv(tmp.path());
    let doc = tmp.path().join("run.toml");
    fs::write(&doc, "[run.certify]\nm = 0\n").unwrap();
    let out = pbcert(
        &[
            "run",
            "--data",
            csv.to_str().unwrap(),
            "--seed",
            "1",
            "--config",
            doc.to_str().unwrap(),
        ],
        SMALL,
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: config:"), "{err}");
}

#[test]
fn seed_is_required() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = write_csv(tmp.path());
    let out = pbcert(&["run", "--data", csv.to_str().unwrap()], SMALL);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}
