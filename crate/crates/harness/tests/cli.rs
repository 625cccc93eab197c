use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use safefcm::catalog::DatasetName;
use safefcm::csv_io::{load_csv, LabelColumn};

const TINY: &str = r#"
datasets = ["heart"]
algorithms = ["fcm", "ssfcm", "kgbs3fcm"]
mislabel_ratios = [0.0, 0.1]
lambda_grid = [1.0, 10.0]
repeats = 2
"#;

fn safefcm(args: &[&str]) -> Output {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    Command::new(env!("CARGO_BIN_EXE_safefcm"))
        .args(args)
        .env("SAFEFCM_DATA_DIR", data)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = safefcm(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn sweep(config: &Path, out: &Path) -> String {
    ok(&["sweep", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn summary_csvs(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(out.join("summary"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn repeated_sweeps_give_identical_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("tiny.toml");
    fs::write(&config, TINY).unwrap();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        sweep(&config, &out);
        ok(&["report", "--out", out.to_str().unwrap()]);
    }
    let (a, b) = (summary_csvs(&tmp.path().join("a")), summary_csvs(&tmp.path().join("b")));
    assert!(a.iter().any(|(n, _)| n == "aggregates.csv"));
    assert_eq!(a, b);
}

#[test]
fn interrupted_sweep_resumes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("tiny.toml");
    fs::write(&config, TINY).unwrap();
    let out = tmp.path().join("run");
    // 2 ratios × (1 + 2 + 4 λ pairs) × 2 repeats
    assert!(sweep(&config, &out).contains("executed 28 skipped 0"));
    assert!(sweep(&config, &out).contains("executed 0 skipped 28"));

    let file = out.join("runs/heart__kgbs3fcm.jsonl");
    let text = fs::read_to_string(&file).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let keep = lines[..lines.len() - 3].join("\n");
    let torn = &lines[lines.len() - 3][..20];
    fs::write(&file, format!("{keep}\n{torn}")).unwrap();
    assert!(sweep(&config, &out).contains("executed 3 skipped 25"));
    let fresh = tmp.path().join("fresh");
    sweep(&config, &fresh);
    ok(&["report", "--out", out.to_str().unwrap()]);
    ok(&["report", "--out", fresh.to_str().unwrap()]);
    assert_eq!(summary_csvs(&out), summary_csvs(&fresh));
}

#[test]
fn changed_settings_need_a_fresh_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("tiny.toml");
    fs::write(&config, TINY).unwrap();
    let out = tmp.path().join("run");
    sweep(&config, &out);
    fs::write(&config, format!("base_seed = 7\n{TINY}")).unwrap();
    let res = safefcm(&["sweep", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("different seeds"));
}

#[test]
fn single_run_prints_outcome() {
    let text = ok(&["run", "--dataset", "heart", "--algorithm", "kgbs3fcm", "--ratio", "0.1", "--seed", "3"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let acc = v["accuracy"].as_f64().unwrap();
    assert!(acc > 0.5 && acc <= 1.0);
    assert_eq!(v["labeled"].as_u64(), Some(59));
    assert_eq!(v["mislabeled"].as_u64(), Some(6));
    let mut again: serde_json::Value = serde_json::from_str(&ok(&[
        "run", "--dataset", "heart", "--algorithm", "kgbs3fcm", "--ratio", "0.1", "--seed", "3",
    ]))
    .unwrap();
    let mut first = v.clone();
    first["seconds"] = 0.into();
    again["seconds"] = 0.into();
    assert_eq!(first, again);
}

#[test]
fn formula_oracles_pass() {
    let text = ok(&["oracle", "--formulas-only"]);
    let checks: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert!(checks.len() > 20);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn generated_data_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let listed = ok(&["gen-data", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(listed.lines().count(), 3);
    let ds = load_csv(&tmp.path().join("gauss50.csv"), &LabelColumn::Last).unwrap();
    assert_eq!((ds.len(), ds.dim(), ds.num_classes()), DatasetName::Gauss50.shape());
}
