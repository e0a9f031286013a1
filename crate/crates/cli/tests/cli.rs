mod common;

use std::fs;
use std::path::Path;

use clap::CommandFactory;
use common::*;
use cwb_cli::Cli;
use serde_json::{json, Value};

fn leaf_commands(cmd: &clap::Command, prefix: Vec<String>, out: &mut Vec<(Vec<String>, clap::Command)>) {
    let subs: Vec<&clap::Command> = cmd.get_subcommands().filter(|c| c.get_name() != "help").collect();
    out.push((prefix.clone(), cmd.clone()));
    for sub in subs {
        let mut p = prefix.clone();
        p.push(sub.get_name().to_string());
        leaf_commands(sub, p, out);
    }
}

#[test]
fn help_documents_every_flag() {
    let mut all = Vec::new();
    leaf_commands(&Cli::command(), Vec::new(), &mut all);
    assert!(all.len() >= 12);
    for (path, cmd) in all {
        let mut args: Vec<&str> = path.iter().map(String::as_str).collect();
        args.push("--help");
        let out = cwb(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        let help = String::from_utf8(out.stdout).unwrap();
        for arg in cmd.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(help.contains(&format!("--{long}")), "{args:?} help lacks --{long}");
            }
        }
    }
}

#[test]
fn user_errors_exit_1_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out =
        cwb(&["synth", "enron", "--corpus", path_str(&missing), "--nouns", "n.txt", "--out", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));

    assert_eq!(cwb(&["synth", "enron", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(
        cwb(&["train", "--model", "tfidf", "--data", path_str(dir.path()), "--out", "m.json", "--epochs", "x"])
            .status
            .code(),
        Some(1)
    );

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[synth]\nunknown_key = 1\n").unwrap();
    let out = cwb(&["--config", path_str(&bad), "fixture", "enron", "--out", path_str(&dir.path().join("c.jsonl"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_key"));

    let not_a_model = dir.path().join("junk.json");
    fs::write(&not_a_model, "{}").unwrap();
    let split = dir.path().join("t.jsonl");
    write_samples(&split, &stub_friendly_split());
    let out = cwb(&["eval", "--model", path_str(&not_a_model), "--split", path_str(&split)]);
    assert_eq!(out.status.code(), Some(1));
}

fn fixture_inputs(dir: &Path, sentences: &str) -> (String, String) {
    let corpus = dir.join("corpus.jsonl");
    let nouns = dir.join("nouns.txt");
    cwb_ok(&["fixture", "enron", "--sentences", sentences, "--out", path_str(&corpus), "--nouns", path_str(&nouns)]);
    (path_str(&corpus).to_string(), path_str(&nouns).to_string())
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn synth_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, nouns) = fixture_inputs(dir.path(), "8000");
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args =
            vec!["synth", "enron", "--desk", "--corpus", &corpus, "--nouns", &nouns, "--out", path_str(&out)];
        args.extend_from_slice(extra);
        cwb_ok(&args);
        dir_bytes(&out)
    };
    let a = run("a", &["--seed", "7"]);
    let b = run("b", &["--seed", "7"]);
    let c = run("c", &["--seed", "7", "--sequential"]);
    let d = run("d", &["--seed", "8"]);
    assert_eq!(
        a.iter().map(|f| f.0.as_str()).collect::<Vec<_>>(),
        ["lexicon.json", "manifest.json", "test.jsonl", "train.jsonl", "val.jsonl"]
    );
    assert!(a == b, "same seed must give identical bytes");
    assert!(a == c, "thread count must not matter");
    assert!(a != d);
}

#[test]
fn flags_override_config_file_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, nouns) = fixture_inputs(dir.path(), "3000");
    let cfg = dir.path().join("cwb.toml");
    fs::write(&cfg, "seed = 3\n[synth]\ntrain_size = 100\nval_size = 40\ntest_size = 50\ntest_positives = 5\n")
        .unwrap();
    let out = dir.path().join("ds");
    cwb_ok(&[
        "--config",
        path_str(&cfg),
        "synth",
        "enron",
        "--corpus",
        &corpus,
        "--nouns",
        &nouns,
        "--out",
        path_str(&out),
        "--train-size",
        "80",
    ]);
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["counts"], json!({"train": 80, "val": 40, "test": 50}));
    assert_eq!(manifest["positives"]["test"], 5);
    assert_eq!(manifest["config"]["rng_seed"], 3);
    assert_eq!(manifest["config"]["max_len"], 20);

    let json_cfg = dir.path().join("cwb.json");
    fs::write(
        &json_cfg,
        r#"{"seed": 3, "synth": {"train_size": 100, "val_size": 40, "test_size": 50, "test_positives": 5}}"#,
    )
    .unwrap();
    let out2 = dir.path().join("ds2");
    cwb_ok(&[
        "--config",
        path_str(&json_cfg),
        "synth",
        "enron",
        "--corpus",
        &corpus,
        "--nouns",
        &nouns,
        "--out",
        path_str(&out2),
        "--train-size",
        "80",
        "--seed",
        "3",
    ]);
    assert!(dir_bytes(&out) == dir_bytes(&out2));
}

#[test]
fn train_eval_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (corpus, nouns) = fixture_inputs(dir.path(), "8000");
    let ds = dir.path().join("ds");
    cwb_ok(&["synth", "enron", "--desk", "--corpus", &corpus, "--nouns", &nouns, "--out", path_str(&ds)]);
    let data = dir.path().join("data");
    for model in ["random", "bow", "tfidf"] {
        let m = dir.path().join(format!("{model}.json"));
        cwb_ok(&["train", "--model", model, "--data", path_str(&ds), "--out", path_str(&m)]);
        let report = dir.path().join(format!("{model}.tsv"));
        let table = cwb_ok(&[
            "eval",
            "--model",
            path_str(&m),
            "--split",
            path_str(&ds.join("test.jsonl")),
            "--report",
            path_str(&report),
            "--data-dir",
            path_str(&data),
            "--run-id",
            model,
        ]);
        assert!(table.contains(model));
        let tsv = fs::read_to_string(&report).unwrap();
        assert_eq!(tsv.lines().count(), 2);
        assert!(tsv.starts_with("accuracy\t"));
    }
    let out = cwb_ok(&["report", "--run", "random", "--run", "tfidf", "--data-dir", path_str(&data)]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("Model"));
    assert!(lines[2].starts_with("tfidf"));

    let json_out = cwb_ok(&["report", "--run", "bow", "--data-dir", path_str(&data), "--format", "json"]);
    let v: Value = serde_json::from_str(&json_out).unwrap();
    assert_eq!(v[0]["report"]["n"], 500);

    // Runs are immutable.
    let again = cwb(&[
        "eval",
        "--model",
        path_str(&dir.path().join("bow.json")),
        "--split",
        path_str(&ds.join("test.jsonl")),
        "--data-dir",
        path_str(&data),
        "--run-id",
        "bow",
    ]);
    assert_eq!(again.status.code(), Some(1));
    assert_eq!(cwb(&["report", "--run", "nope", "--data-dir", path_str(&data)]).status.code(), Some(1));
}

#[test]
fn eval_with_perfect_stub_predictions_is_all_ones() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");
    fs::create_dir(&ds).unwrap();
    for name in ["train.jsonl", "val.jsonl", "test.jsonl"] {
        write_samples(&ds.join(name), &stub_friendly_split());
    }
    let stub = Spawned::start(&["backend", "stub", "--tcp"]);
    assert_eq!(cwb_ok(&["backend", "ping", "--endpoint", &stub.line]).trim(), "ok");
    let model = dir.path().join("bert.json");
    cwb_ok(&[
        "train",
        "--model",
        "backend",
        "--backend",
        &stub.line,
        "--data",
        path_str(&ds),
        "--out",
        path_str(&model),
    ]);
    let report = dir.path().join("r.json");
    let table = cwb_ok(&[
        "eval",
        "--model",
        path_str(&model),
        "--split",
        path_str(&ds.join("test.jsonl")),
        "--report",
        path_str(&report),
    ]);
    let row = table.lines().nth(1).unwrap();
    assert_eq!(row.split_whitespace().skip(1).collect::<Vec<_>>(), ["1.00"; 6]);
    let r: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    for key in ["accuracy", "macro_p", "macro_r", "macro_f1", "p1", "r1", "f11"] {
        assert_eq!(r[key], 1.0, "{key}");
    }
}

#[test]
fn backend_errors_are_user_errors() {
    let out = cwb(&["backend", "ping", "--endpoint", "tcp://127.0.0.1:1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cwb(&["backend", "ping"]);
    assert_eq!(out.status.code(), Some(1));
    let exec = format!("exec:{BIN} backend stub");
    assert_eq!(cwb_ok(&["backend", "ping", "--endpoint", &exec]).trim(), "ok");

    let dir = tempfile::tempdir().unwrap();
    let out =
        cwb(&["train", "--model", "backend", "--backend", &exec, "--data", path_str(dir.path()), "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_reddit_from_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let comments = dir.path().join("comments.jsonl");
    let table = dir.path().join("codewords.tsv");
    cwb_ok(&[
        "fixture",
        "reddit",
        "--general",
        "600",
        "--drug",
        "600",
        "--out",
        path_str(&comments),
        "--codewords",
        path_str(&table),
    ]);
    let out = dir.path().join("reddit");
    cwb_ok(&[
        "synth",
        "reddit",
        "--comments",
        path_str(&comments),
        "--codewords",
        path_str(&table),
        "--out",
        path_str(&out),
        "--per-class",
        "100",
    ]);
    let samples = read_split(&out.join("test.jsonl"));
    assert_eq!(samples.len(), 200);
    assert_eq!(samples.iter().filter(|s| s.label == 1).count(), 100);
    let err = cwb(&[
        "synth",
        "reddit",
        "--comments",
        path_str(&comments),
        "--codewords",
        path_str(&table),
        "--out",
        path_str(&out),
        "--per-class",
        "100000",
    ]);
    assert_eq!(err.status.code(), Some(1));
}

fn read_split(path: &Path) -> Vec<cwb_core::corpus::LabeledSample> {
    cwb_core::corpus::read_jsonl(std::io::BufReader::new(fs::File::open(path).unwrap())).unwrap()
}

#[test]
fn serve_rejects_busy_port_and_bad_dir() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve(dir.path());
    let port = server.addr().rsplit(':').next().unwrap().to_string();
    let out = cwb(&["serve", "--port", &port, "--data-dir", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let file = dir.path().join("plain-file");
    fs::write(&file, "x").unwrap();
    let out = cwb(&["serve", "--port", "0", "--data-dir", path_str(&file)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn serve_port_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let probe = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = probe.local_addr().unwrap().port();
    drop(probe);
    let mut child = std::process::Command::new(BIN)
        .args(["serve"])
        .env("CWB_PORT", port.to_string())
        .env("CWB_DATA_DIR", dir.path())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    std::io::BufRead::read_line(&mut std::io::BufReader::new(child.stdout.take().unwrap()), &mut line).unwrap();
    assert!(line.trim().ends_with(&format!(":{port}")), "{line}");
    let (s, v) = http(&format!("127.0.0.1:{port}"), "GET", "/api/health", None);
    assert_eq!((s, v), (200, json!({"status": "ok"})));
    assert!(dir.path().join("matrices").is_dir());
    child.kill().unwrap();
    child.wait().unwrap();
}

#[test]
fn kill_9_during_writes_leaves_matrix_readable() {
    let dir = tempfile::tempdir().unwrap();
    kill_during_writes(dir.path()).unwrap();
}
