use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lexforge_core::cleanse::clean_text;
use lexforge_core::corpus::{infer_metadata, load_corpus};
use lexforge_core::dataset::{
    compute_stats, export_jsonl, ChatRecord, DatasetStats, WhitespaceCounter,
};
use lexforge_core::segment::segment_articles;
use lexforge_mock::{MockServer, Reply};
use serde_json::{json, Value};

const KEY: &str = "cli-test";

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/e2e/corpus")
}

fn lexforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexforge"))
        .args(args)
        .env("LEXFORGE_API_KEY", KEY)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run lexforge")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn ok(config: &Path, args: &[&str]) {
    let mut full = vec!["--config", config.to_str().unwrap()];
    full.extend_from_slice(args);
    let out = lexforge(&full);
    assert!(out.status.success(), "lexforge {args:?}: {}", stderr(&out));
}

/// Answers every generation prompt with one pair citing the prompted article.
fn echo_server() -> MockServer {
    MockServer::start(|req, _| {
        let article = req
            .user()
            .lines()
            .find_map(|l| l.strip_prefix("Law Title and Article: "))
            .and_then(|l| l.rsplit_once(" in Article "))
            .map(|(_, n)| n.trim_end_matches('.').to_string())
            .unwrap_or_default();
        let pair = json!({
            "question": format!("ما حكم المادة {article}؟"),
            "answer": format!("وفقاً للمادة {article} من القانون، الحكم كما ورد في النص."),
        });
        Reply::Content(pair.to_string())
    })
}

fn write_config(dir: &Path, extra: Value) -> PathBuf {
    let mut cfg = json!({
        "corpus_dir": corpus(),
        "output_dir": dir.join("out"),
        "num_questions_per_article": 1,
    });
    for (k, v) in extra.as_object().unwrap() {
        cfg[k] = v.clone();
    }
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
    path
}

fn provider(server: &MockServer) -> Value {
    json!({
        "base_url": server.base_url(),
        "model_name": "mock-model",
        "requests_per_second": 1000.0,
        "backoff_base_ms": 10,
        "backoff_max_ms": 50
    })
}

#[test]
fn export_without_records_names_the_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), json!({}));
    let out = lexforge(&["--config", config.to_str().unwrap(), "export"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("dataset/records.jsonl"), "{err}");
    assert!(err.contains("lexforge assemble"), "{err}");
}

#[test]
fn rerun_requires_force() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), json!({}));
    ok(&config, &["ingest"]);
    let again = lexforge(&["--config", config.to_str().unwrap(), "ingest"]);
    assert!(!again.status.success());
    assert!(stderr(&again).contains("--force"), "{}", stderr(&again));
    ok(&config, &["ingest", "--force"]);
}

#[test]
fn segment_output_matches_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), json!({}));
    ok(&config, &["ingest"]);
    ok(&config, &["clean"]);
    ok(&config, &["segment"]);
    let docs = load_corpus(&corpus(), None).unwrap().documents;
    assert_eq!(docs.len(), 3);
    for doc in docs.into_iter().map(infer_metadata) {
        let (clean, _) = clean_text(&doc.raw_text);
        let cleaned_on_disk =
            std::fs::read_to_string(dir.path().join(format!("out/clean/{}.txt", doc.id))).unwrap();
        assert_eq!(cleaned_on_disk, clean);
        let expected = segment_articles(&doc.id, doc.display_title(), &clean)
            .law
            .to_json();
        let on_disk =
            std::fs::read_to_string(dir.path().join(format!("out/laws/{}.json", doc.id))).unwrap();
        assert_eq!(on_disk, expected, "{}", doc.id);
    }
}

#[test]
fn stats_command_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), json!({"bucket_width": 5}));
    let records: Vec<ChatRecord> = (1..=7)
        .map(|i| ChatRecord {
            system: vec!["نص"; i * 3].join(" "),
            user: format!("سؤال رقم {i}"),
            assistant: vec!["جواب"; i].join(" "),
            law_id: "law".into(),
            article_number: i as u32,
        })
        .collect();
    let input = dir.path().join("records.jsonl");
    export_jsonl(&records, &input).unwrap();
    ok(&config, &["stats", "--input", input.to_str().unwrap()]);
    let got: DatasetStats =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/stats/stats.json")).unwrap())
            .unwrap();
    assert_eq!(got, compute_stats(&records, &WhitespaceCounter, 5).unwrap());
    let csv = std::fs::read_to_string(dir.path().join("out/stats/histogram.csv")).unwrap();
    assert!(csv.starts_with("bucket_start,count\n"));
    assert!(dir.path().join("out/stats/boxplot.json").exists());
}

#[test]
fn emit_train_config_defaults_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), json!({}));
    ok(&config, &["emit-train-config"]);
    let written: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/train_config.json")).unwrap())
            .unwrap();
    assert_eq!(written["epochs"], 10);
    assert_eq!(written["learning_rate"], 2e-6);
    assert_eq!(written["scheduler"], "linear");
    assert_eq!(written["warmup_ratio"], 0.1);
    assert_eq!(written["optimizer"], "adam-8bit");
    assert_eq!(written["lora_rank"], 64);
    assert_eq!(written["batch_size"], 1);

    let bad = lexforge(&[
        "--config",
        config.to_str().unwrap(),
        "emit-train-config",
        "--force",
        "--warmup-ratio",
        "1.5",
    ]);
    assert!(!bad.status.success());
    assert!(stderr(&bad).contains("warmup_ratio"), "{}", stderr(&bad));
}

#[test]
fn unknown_flag_is_rejected() {
    let out = lexforge(&["ingest", "--no-such-flag"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--no-such-flag"));
}

const STAGES: [&str; 7] = [
    "ingest", "clean", "segment", "generate", "assemble", "split", "export",
];

const ARTIFACTS: [&str; 7] = [
    "laws/civil_service_2005.json",
    "qa/pairs.jsonl",
    "dataset/records.jsonl",
    "dataset/split.json",
    "dataset/train.jsonl",
    "dataset/val.jsonl",
    "dataset/test.jsonl",
];

#[test]
fn manifest_config_replays_from_warm_cache() {
    let server = echo_server();
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let config = write_config(
        dir.path(),
        json!({"provider": provider(&server), "cache_dir": cache}),
    );
    for stage in STAGES {
        ok(&config, &[stage]);
    }
    let calls = server.calls();
    assert_eq!(calls, 7);
    drop(server);

    // replay the recorded configuration into a fresh directory with the
    // provider gone; every response must come from the cache
    let manifest: Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("out/manifests/generate.json")).unwrap(),
    )
    .unwrap();
    let mut replay_cfg = manifest["config"].clone();
    replay_cfg["output_dir"] = json!(dir.path().join("replay"));
    let replay = dir.path().join("replay.json");
    std::fs::write(&replay, serde_json::to_vec(&replay_cfg).unwrap()).unwrap();
    for stage in STAGES {
        ok(&replay, &[stage]);
    }
    for rel in ARTIFACTS {
        let a = std::fs::read(dir.path().join("out").join(rel)).unwrap();
        let b = std::fs::read(dir.path().join("replay").join(rel)).unwrap();
        assert_eq!(a, b, "{rel} differs on replay");
    }
    let report: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("replay/qa/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["network_calls"], 0);
    assert_eq!(report["cache_hits"], 7);
}
