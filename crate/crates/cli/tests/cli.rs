use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_galleryflow"))
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/pipeline.toml")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/toy")
}

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = bin();
    c.args(args);
    match threads {
        Some(t) => c.env("GALLERYFLOW_THREADS", t),
        None => c.env_remove("GALLERYFLOW_THREADS"),
    };
    c.output().expect("binary runs")
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn run_all(threads: &str) -> BTreeMap<String, Vec<u8>> {
    let out = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "all",
            "--config",
            fixture().to_str().unwrap(),
            "--outdir",
            out.path().to_str().unwrap(),
        ],
        Some(threads),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    read_dir(out.path())
}

#[test]
fn all_on_toy_fixture_matches_golden_files() {
    let got = run_all("4");
    if std::env::var_os("GALLERYFLOW_BLESS").is_some() {
        let dir = golden_dir();
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        for (name, bytes) in &got {
            std::fs::write(dir.join(name), bytes).unwrap();
        }
    }
    let want = read_dir(&golden_dir());
    assert_eq!(got.keys().collect::<Vec<_>>(), want.keys().collect::<Vec<_>>());
    for (name, bytes) in &want {
        assert!(got[name] == *bytes, "{name} differs from golden copy");
    }
    assert_eq!(run_all("1"), got, "single-threaded run differs");
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("pipeline.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn error_json(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("error.json")).unwrap()).unwrap()
}

#[test]
fn missing_museum_exits_1_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let events = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy/events.jsonl");
    let cfg = write_config(
        dir.path(),
        &format!(
            "[paths]\nevents = {:?}\nmuseum = \"no_such_museum.json\"\noutdir = \"out\"\n",
            events.to_str().unwrap()
        ),
    );
    let o = run(&["ingest", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("no_such_museum.json"), "{stderr}");
    let err = error_json(&dir.path().join("out"));
    assert_eq!(err["exit_code"], 1);
    assert!(err["path"].as_str().unwrap().ends_with("no_such_museum.json"));
}

#[test]
fn mostly_malformed_log_is_a_data_quality_rejection() {
    let dir = tempfile::tempdir().unwrap();
    let mut log =
        String::from("{\"device_id\":\"D1\",\"ts\":1,\"object_id\":\"O01\",\"lang\":\"en\",\"action\":\"play\"}\n");
    log.push_str(&"garbage\n".repeat(5));
    std::fs::write(dir.path().join("events.jsonl"), log).unwrap();
    let cfg = write_config(dir.path(), "[paths]\nevents = \"events.jsonl\"\n");
    let o = run(&["ingest", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = error_json(&dir.path().join("out"));
    assert_eq!(err["kind"], "data_quality");
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[paths]\nevents = \"e.jsonl\"\n[ingest]\nsesion_gap_secs = 5\n",
    );
    let o = run(&["ingest", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sesion_gap_secs"));

    let cfg = write_config(dir.path(), "[stages]\ncluster = false\n");
    let o = run(&["ingest", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("paths.events"));

    assert_eq!(run(&["frobnicate"], None).status.code(), Some(1));
    let o = run(&["ingest", "--config", fixture().to_str().unwrap()], Some("zero"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synth_is_seeded_and_chains_into_all() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let conf = tempfile::tempdir().unwrap();
    let cfg = write_config(conf.path(), "[synth]\nn_trips = 60\nn_reviews = 200\n");
    for (dir, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let o = run(
            &[
                "synth",
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                seed,
                "--outdir",
                dir.path().to_str().unwrap(),
            ],
            None,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb, fc) = (read_dir(a.path()), read_dir(b.path()), read_dir(c.path()));
    for name in ["events.jsonl", "reviews.jsonl", "labels.jsonl", "synth.json"] {
        assert_eq!(fa[name], fb[name], "{name}");
        assert_ne!(fa[name], fc[name], "{name}");
    }

    let o = run(
        &["all", "--config", a.path().join("pipeline.toml").to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("report/ingest.json")).unwrap()).unwrap();
    assert_eq!(report["cleaning"]["trips"], 60);
}

#[test]
fn csv_format_flattens_reports() {
    let out = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "tours",
            "--config",
            fixture().to_str().unwrap(),
            "--outdir",
            out.path().to_str().unwrap(),
            "--format",
            "csv",
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.path().join("tours.csv")).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.contains("\ntool_version,"));
    assert!(text.contains("\ninput_hashes.events,"));
    assert!(!out.path().join("tours.json").exists());
    assert!(out.path().join("tour_survival.csv").exists());
}

#[test]
fn a_successful_run_clears_a_stale_error_report() {
    let out = tempfile::tempdir().unwrap();
    std::fs::write(out.path().join("error.json"), "{}").unwrap();
    let o = run(
        &[
            "ingest",
            "--config",
            fixture().to_str().unwrap(),
            "--outdir",
            out.path().to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success());
    assert!(!out.path().join("error.json").exists());
}
