use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wordlab::harness::RunMetadata;

fn wordlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wordlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_dir(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

#[test]
fn gen_standard_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_dir(&dir, "sim");
    let o = wordlab(&["gen", "--seed", "1", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let features = std::fs::read_to_string(PathBuf::from(&out).join("features.csv")).unwrap();
    let mut lines = features.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 17);
    assert_eq!(header[16], "f16");
    assert_eq!(lines.count(), 4532);
    let labels = std::fs::read_to_string(PathBuf::from(&out).join("labels.csv")).unwrap();
    let rows: Vec<&str> = labels.lines().skip(1).collect();
    assert_eq!(rows.len(), 4532);
    assert!(rows.iter().all(|r| r.split(' ').count() == 5));
    assert!(PathBuf::from(&out).join("lexicon.txt").exists());
    let meta = std::fs::read_to_string(PathBuf::from(&out).join("metadata.json")).unwrap();
    assert!(meta.contains("\"source_tag\": \"SIM\""));
}

#[test]
fn gen_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (out_dir(&dir, "a"), out_dir(&dir, "b"));
    let small = ["--set", "data.rows=200", "--seed", "9"];
    for out in [&a, &b] {
        let mut args = vec!["gen", "--out", out.as_str()];
        args.extend(small);
        assert!(wordlab(&args).status.success());
    }
    for file in ["features.csv", "labels.csv", "lexicon.txt"] {
        let x = std::fs::read(PathBuf::from(&a).join(file)).unwrap();
        let y = std::fs::read(PathBuf::from(&b).join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
}

#[test]
fn gen_rejects_more_words_per_object_than_words() {
    let dir = tempfile::tempdir().unwrap();
    let o = wordlab(&["gen", "--set", "tutor.k=101", "--out", &out_dir(&dir, "x")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("k=101"), "{}", stderr(&o));
}

#[test]
fn run_xval_prints_one_row_per_learner() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_dir(&dir, "run");
    let o = wordlab(&["run", "--config", &fixture("small_xval.conf"), "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4, "{text}");
    for name in ["GaussianNB", "KNeighbors[knn.k=3]", "NearestCentroid"] {
        assert!(text.contains(name), "{text}");
    }
    for file in ["results.csv", "results.jsonl", "summary.txt", "frequency.csv", "metadata.json"] {
        assert!(PathBuf::from(&out).join(file).exists(), "{file}");
    }
    let csv = std::fs::read_to_string(PathBuf::from(&out).join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
}

#[test]
fn run_dims_sweep_writes_four_points_per_learner() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_dir(&dir, "dims");
    let o = wordlab(&[
        "run",
        "--config",
        &fixture("small_xval.conf"),
        "--set",
        "experiment.kind=dims_sweep",
        "--set",
        "learners=GaussianNB,NearestCentroid",
        "--out",
        &out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let curve = std::fs::read_to_string(PathBuf::from(&out).join("curve.csv")).unwrap();
    let rows: Vec<&str> = curve.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    let xs: Vec<&str> = rows.iter().filter(|r| r.starts_with("GaussianNB")).map(|r| r.split(',').nth(3).unwrap()).collect();
    assert_eq!(xs, ["10", "100", "1000", "10000"]);
}

#[test]
fn unknown_keys_fail_with_their_name() {
    let o = wordlab(&["run", "--config", &fixture("small_xval.conf"), "--set", "tutor.words=3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("tutor.words"), "{}", stderr(&o));
}

#[test]
fn missing_data_files_are_data_errors() {
    let o = wordlab(&[
        "run",
        "--config",
        &fixture("small_xval.conf"),
        "--set",
        "data.source=files",
        "--set",
        "data.features=/nonexistent/features.csv",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn total_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = wordlab(&[
        "run",
        "--config",
        &fixture("small_xval.conf"),
        "--set",
        "learners=KNeighbors",
        "--set",
        "learner.KNeighbors.knn.k=59",
        "--out",
        &out_dir(&dir, "fail"),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn score_matches_the_manual_fixture() {
    let o = wordlab(&["score", &fixture("truth.csv"), &fixture("pred.csv")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    // (2/3 + 4/5 + 0) / 3, (1 + 2/3 + 0) / 3, (1/2 + 1 + 0) / 3, mean(1, 2/3, 1, 0)
    for line in ["sample_f   48.89", "precision  55.56", "recall     50.00", "macro_f    66.67"] {
        assert!(text.contains(line), "{text}");
    }
    let o = wordlab(&["score", &fixture("truth.csv"), &fixture("truth.csv")]);
    let text = stdout(&o);
    for line in ["sample_f   100.00", "precision  100.00", "recall     100.00", "macro_f    100.00"] {
        assert!(text.contains(line), "{text}");
    }
    let o = wordlab(&["score", &fixture("truth.csv"), &fixture("empty_pred.csv")]);
    assert!(stdout(&o).contains("sample_f   0.00"));
}

#[test]
fn score_rejects_misaligned_files() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.csv");
    std::fs::write(&short, "word_ids\n0\n").unwrap();
    let o = wordlab(&["score", &fixture("truth.csv"), short.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn metadata_regenerates_the_results() {
    let dir = tempfile::tempdir().unwrap();
    let first = out_dir(&dir, "first");
    let o = wordlab(&["run", "--config", &fixture("small_xval.conf"), "--out", &first]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = RunMetadata::load(&PathBuf::from(&first).join("metadata.json")).unwrap();
    let conf = dir.path().join("closure.conf");
    std::fs::write(&conf, meta.config.join("\n")).unwrap();
    let second = out_dir(&dir, "second");
    let o = wordlab(&["run", "--config", conf.to_str().unwrap(), "--out", &second]);
    assert!(o.status.success(), "{}", stderr(&o));
    let strip = |dir: &str| -> Vec<String> {
        let text = std::fs::read_to_string(PathBuf::from(dir).join("results.csv")).unwrap();
        let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
        let t = header.iter().position(|h| *h == "wall_time").unwrap();
        text.lines()
            .map(|l| {
                let mut cells: Vec<&str> = l.split(',').collect();
                cells[t] = "";
                cells.join(",")
            })
            .collect()
    };
    assert_eq!(strip(&first), strip(&second));
}
