//! Subcommand implementations. Each stage reads the artifacts of earlier
//! stages from the output directory and writes its own, plus a run
//! manifest under `manifests/`.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use lexforge_core::cleanse::{clean_text_with, CleanReport};
use lexforge_core::corpus::{infer_metadata, load_corpus, LawDocument};
use lexforge_core::dataset::{
    self, compute_stats, dedup_records, emit_plot_data, export_jsonl, split_assignment, ChatRecord,
    HfTokenCounter, TokenCounter, WhitespaceCounter,
};
use lexforge_core::evalkit::{self, load_cases, run_eval};
use lexforge_core::segment::{read_law_json, segment_articles, write_law_json, LawJson};
use lexforge_core::synth::client::{ChatClient, ResponseCache};
use lexforge_core::synth::generate::{generate_pairs, FilterPolicy, GeneratedPair, GenerationJob};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{emit_training_config, PipelineConfig, TrainingOverrides};

pub const DOCUMENTS: &str = "corpus/documents.jsonl";
pub const CLEAN_DIR: &str = "clean";
pub const CLEAN_REPORT: &str = "clean/report.json";
pub const LAWS_DIR: &str = "laws";
pub const PAIRS: &str = "qa/pairs.jsonl";
pub const REJECTED: &str = "qa/rejected.jsonl";
pub const QA_REPORT: &str = "qa/report.json";
pub const RECORDS: &str = "dataset/records.jsonl";
pub const SPLIT: &str = "dataset/split.json";
pub const SPLIT_FILES: [&str; 3] = [
    "dataset/train.jsonl",
    "dataset/val.jsonl",
    "dataset/test.jsonl",
];
pub const STATS_DIR: &str = "stats";
pub const STATS: &str = "stats/stats.json";
pub const EVAL_REPORT: &str = "eval/report.json";
pub const TRAIN_CONFIG: &str = "train_config.json";
pub const MANIFEST_DIR: &str = "manifests";

pub struct Pipeline {
    config: PipelineConfig,
    force: bool,
    inputs: Vec<(String, String)>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    version: &'a str,
    inputs_hash: String,
    inputs: BTreeMap<&'a str, &'a str>,
    config: &'a PipelineConfig,
    counts: Value,
}

/// Record-to-split assignment written by `split` and consumed by `export`.
#[derive(Debug, Serialize, Deserialize)]
pub struct SplitFile {
    pub records_sha256: String,
    pub record_count: usize,
    pub spec: dataset::SplitSpec,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Serialize)]
struct RejectedLine<'a> {
    law_id: &'a str,
    article_number: u32,
    article_index: usize,
    kind: &'a str,
    detail: Value,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s.into_bytes()
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file =
        std::fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn parse_jsonl<T: DeserializeOwned>(text: &str, path: &Path) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1))
        })
        .collect()
}

impl Pipeline {
    pub fn new(config: PipelineConfig, force: bool) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            force,
            inputs: Vec::new(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn out(&self, rel: &str) -> PathBuf {
        self.config.output_dir.join(rel)
    }

    fn label(&self, path: &Path) -> String {
        path.strip_prefix(&self.config.output_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/")
    }

    /// Reads an input file, recording its hash for the manifest.
    fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes =
            std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.push((self.label(path), sha256_hex(&bytes)));
        Ok(bytes)
    }

    fn read_input_string(&mut self, path: &Path) -> Result<String> {
        let bytes = self.read_input(path)?;
        String::from_utf8(bytes).map_err(|e| anyhow!("{} is not UTF-8: {e}", path.display()))
    }

    /// Fails with an actionable message when an upstream artifact is absent.
    fn require(&self, rel: &str, producer: &str) -> Result<PathBuf> {
        let path = self.out(rel);
        if !path.exists() {
            bail!(
                "missing prerequisite artifact {}: run `lexforge {producer}` first",
                path.display()
            );
        }
        Ok(path)
    }

    /// Refuses to overwrite existing outputs unless forced; when forced,
    /// removes them so no stale files survive.
    fn claim(&self, rels: &[&str]) -> Result<()> {
        for rel in rels {
            let path = self.out(rel);
            if !path.exists() {
                continue;
            }
            if !self.force {
                bail!(
                    "{} already exists; pass --force to overwrite it or choose another --output-dir",
                    path.display()
                );
            }
            if path.is_dir() {
                std::fs::remove_dir_all(&path)
            } else {
                std::fs::remove_file(&path)
            }
            .with_context(|| format!("cannot remove {}", path.display()))?;
        }
        Ok(())
    }

    fn write_manifest(&mut self, command: &str, counts: Value) -> Result<()> {
        let mut inputs = std::mem::take(&mut self.inputs);
        inputs.sort();
        inputs.dedup();
        let mut h = Sha256::new();
        for (name, digest) in &inputs {
            h.update(name.as_bytes());
            h.update([0]);
            h.update(digest.as_bytes());
            h.update(b"\n");
        }
        let manifest = RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            inputs_hash: hex::encode(h.finalize()),
            inputs: inputs
                .iter()
                .map(|(n, d)| (n.as_str(), d.as_str()))
                .collect(),
            config: &self.config,
            counts,
        };
        write_file(
            &self.out(&format!("{MANIFEST_DIR}/{command}.json")),
            &pretty(&manifest),
        )
    }

    fn documents(&mut self) -> Result<Vec<LawDocument>> {
        let path = self.require(DOCUMENTS, "ingest")?;
        let text = self.read_input_string(&path)?;
        parse_jsonl(&text, &path)
    }

    fn clean_path(&self, id: &str) -> PathBuf {
        self.out(&format!("{CLEAN_DIR}/{id}.txt"))
    }

    fn law_path(&self, id: &str) -> PathBuf {
        self.out(&format!("{LAWS_DIR}/{id}.json"))
    }

    fn laws(&mut self) -> Result<Vec<LawJson>> {
        let docs = self.documents()?;
        self.require(LAWS_DIR, "segment")?;
        let mut laws = Vec::with_capacity(docs.len());
        for doc in &docs {
            let path = self.law_path(&doc.id);
            if !path.exists() {
                bail!(
                    "missing prerequisite artifact {}: run `lexforge segment` first",
                    path.display()
                );
            }
            self.read_input(&path)?;
            laws.push(read_law_json(&path)?);
        }
        Ok(laws)
    }

    fn records(&mut self) -> Result<(Vec<ChatRecord>, String)> {
        let path = self.require(RECORDS, "assemble")?;
        let bytes = self.read_input(&path)?;
        let text = String::from_utf8(bytes)?;
        let digest = sha256_hex(text.as_bytes());
        Ok((dataset::read_jsonl_str(&text, &path)?, digest))
    }

    fn client(&self) -> Result<ChatClient> {
        let cache = ResponseCache::on_disk(self.config.cache_dir());
        Ok(ChatClient::new(self.config.provider.clone(), cache)?)
    }

    pub fn ingest(&mut self) -> Result<()> {
        self.claim(&[DOCUMENTS])?;
        let load = load_corpus(&self.config.corpus_dir, self.config.manifest.as_deref())?;
        if let Some(m) = self.config.manifest.clone() {
            self.read_input(&m)?;
        }
        for w in &load.warnings {
            log::warn!("{w}");
        }
        let docs: Vec<LawDocument> = load.documents.into_iter().map(infer_metadata).collect();
        for d in &docs {
            self.inputs.push((
                format!("corpus:{}", d.id),
                sha256_hex(d.raw_text.as_bytes()),
            ));
        }
        write_jsonl(&self.out(DOCUMENTS), &docs)?;
        log::info!("ingested {} documents", docs.len());
        self.write_manifest(
            "ingest",
            json!({"documents": docs.len(), "warnings": load.warnings.len()}),
        )
    }

    pub fn clean(&mut self) -> Result<()> {
        let docs = self.documents()?;
        self.claim(&[CLEAN_DIR])?;
        let mut total = CleanReport::default();
        let mut per_doc = BTreeMap::new();
        for doc in &docs {
            let (text, report) = clean_text_with(&doc.raw_text, &self.config.cleaning);
            write_file(&self.clean_path(&doc.id), text.as_bytes())?;
            total.merge(&report);
            per_doc.insert(doc.id.clone(), report);
        }
        write_file(
            &self.out(CLEAN_REPORT),
            &pretty(&json!({"total": total, "documents": per_doc})),
        )?;
        log::info!(
            "cleaned {} documents, {} characters removed",
            docs.len(),
            total.chars_removed
        );
        self.write_manifest(
            "clean",
            json!({"documents": docs.len(), "chars_removed": total.chars_removed,
                   "lines_joined": total.lines_joined}),
        )
    }

    pub fn segment(&mut self) -> Result<()> {
        let docs = self.documents()?;
        self.require(CLEAN_DIR, "clean")?;
        self.claim(&[LAWS_DIR])?;
        let (mut articles, mut warnings) = (0, 0);
        for doc in &docs {
            let path = self.clean_path(&doc.id);
            if !path.exists() {
                bail!(
                    "missing prerequisite artifact {}: run `lexforge clean` first",
                    path.display()
                );
            }
            let text = self.read_input_string(&path)?;
            let seg = segment_articles(&doc.id, doc.display_title(), &text);
            for w in &seg.warnings {
                log::warn!("{}: {w}", doc.id);
            }
            articles += seg.law.articles.len();
            warnings += seg.warnings.len();
            write_law_json(&seg.law, &self.law_path(&doc.id))?;
        }
        log::info!("segmented {} laws into {articles} articles", docs.len());
        self.write_manifest(
            "segment",
            json!({"laws": docs.len(), "articles": articles, "warnings": warnings}),
        )
    }

    pub fn generate(&mut self) -> Result<()> {
        let laws = self.laws()?;
        self.claim(&[PAIRS, REJECTED, QA_REPORT])?;
        let jobs: Vec<GenerationJob> = laws
            .iter()
            .flat_map(|l| GenerationJob::for_law(l, self.config.num_questions_per_article))
            .collect();
        let policy = if self.config.keep_invalid {
            FilterPolicy::KeepInvalid
        } else {
            FilterPolicy::DropInvalid
        };
        let client = self.client()?;
        let runtime = tokio::runtime::Runtime::new()?;
        log::info!("generating pairs for {} articles", jobs.len());
        let results = runtime.block_on(generate_pairs(&client, &jobs, policy));

        let mut kept: Vec<&GeneratedPair> = Vec::new();
        let mut rejected = Vec::new();
        let (mut failed, mut unparsed, mut dropped, mut malformed) = (0, 0, 0, 0);
        for r in &results {
            let line = |kind, detail| RejectedLine {
                law_id: &r.job.article.law_id,
                article_number: r.job.article.article_number,
                article_index: r.job.article_index,
                kind,
                detail,
            };
            kept.extend(&r.kept);
            if let Some(e) = &r.request_error {
                failed += 1;
                rejected.push(line("request_error", json!(e)));
            }
            if let Some(e) = &r.parse_error {
                unparsed += 1;
                rejected.push(line("parse_error", json!(e)));
            }
            for d in &r.rejected {
                malformed += 1;
                rejected.push(line("malformed_pair", json!(d)));
            }
            for p in &r.dropped {
                dropped += 1;
                rejected.push(line("invalid_pair", json!(p)));
            }
        }
        write_jsonl(&self.out(PAIRS), &kept)?;
        write_jsonl(&self.out(REJECTED), &rejected)?;
        let stats = client.stats();
        let counts = json!({
            "articles": jobs.len(),
            "pairs_kept": kept.len(),
            "pairs_invalid_dropped": dropped,
            "pairs_malformed": malformed,
            "parse_failures": unparsed,
            "request_failures": failed,
            "network_calls": stats.network_calls,
            "retries": stats.retries,
            "cache_hits": stats.cache_hits,
        });
        write_file(&self.out(QA_REPORT), &pretty(&counts))?;
        log::info!("kept {} pairs ({dropped} invalid dropped)", kept.len());
        self.write_manifest("generate", counts)?;
        if failed > 0 {
            bail!(
                "{failed} of {} generation requests failed (see {}); rerun with --force, cached responses are reused",
                jobs.len(),
                self.out(REJECTED).display()
            );
        }
        Ok(())
    }

    pub fn assemble(&mut self) -> Result<()> {
        let pairs_path = self.require(PAIRS, "generate")?;
        let laws = self.laws()?;
        let text = self.read_input_string(&pairs_path)?;
        let pairs: Vec<GeneratedPair> = parse_jsonl(&text, &pairs_path)?;
        self.claim(&[RECORDS])?;
        let by_id: HashMap<&str, &LawJson> = laws.iter().map(|l| (l.law_id.as_str(), l)).collect();
        let mut records = Vec::with_capacity(pairs.len());
        for (i, g) in pairs.iter().enumerate() {
            let p = &g.pair;
            let article = by_id
                .get(p.law_id.as_str())
                .and_then(|law| law.articles.get(p.article_index))
                .filter(|a| a.article_number == p.article_number)
                .ok_or_else(|| {
                    anyhow!(
                        "{}:{}: article {} (index {}) of {} not found in laws/",
                        pairs_path.display(),
                        i + 1,
                        p.article_number,
                        p.article_index,
                        p.law_id
                    )
                })?;
            records.push(dataset::assemble_record(
                article,
                p,
                &self.config.system_preamble,
            )?);
        }
        let before = records.len();
        let records = dedup_records(records);
        export_jsonl(&records, &self.out(RECORDS))?;
        log::info!(
            "assembled {} records ({} duplicates removed)",
            records.len(),
            before - records.len()
        );
        self.write_manifest(
            "assemble",
            json!({"pairs": before, "records": records.len(), "duplicates_removed": before - records.len()}),
        )
    }

    pub fn split(&mut self) -> Result<()> {
        let (records, digest) = self.records()?;
        self.claim(&[SPLIT])?;
        let [train, val, test] = split_assignment(&records, &self.config.split)?;
        let counts = json!({"records": records.len(), "train": train.len(), "val": val.len(), "test": test.len()});
        let file = SplitFile {
            records_sha256: digest,
            record_count: records.len(),
            spec: self.config.split,
            train,
            val,
            test,
        };
        write_file(&self.out(SPLIT), &pretty(&file))?;
        self.write_manifest("split", counts)
    }

    pub fn export(&mut self) -> Result<()> {
        let (records, digest) = self.records()?;
        let split_path = self.require(SPLIT, "split")?;
        let split: SplitFile = serde_json::from_slice(&self.read_input(&split_path)?)
            .with_context(|| format!("invalid {}", split_path.display()))?;
        if split.records_sha256 != digest || split.record_count != records.len() {
            bail!(
                "{} does not match {}; rerun `lexforge split --force`",
                split_path.display(),
                self.out(RECORDS).display()
            );
        }
        let mut seen = vec![false; records.len()];
        for &i in split.train.iter().chain(&split.val).chain(&split.test) {
            if i >= records.len() || std::mem::replace(&mut seen[i], true) {
                bail!(
                    "{} assigns record {i} twice or out of range",
                    split_path.display()
                );
            }
        }
        if seen.contains(&false) {
            bail!("{} leaves records unassigned", split_path.display());
        }
        self.claim(&SPLIT_FILES)?;
        let mut counts = serde_json::Map::new();
        for (rel, idx) in SPLIT_FILES
            .iter()
            .zip([&split.train, &split.val, &split.test])
        {
            let part: Vec<ChatRecord> = idx.iter().map(|&i| records[i].clone()).collect();
            export_jsonl(&part, &self.out(rel))?;
            let name = Path::new(rel)
                .file_stem()
                .unwrap()
                .to_string_lossy()
                .into_owned();
            counts.insert(name, json!(part.len()));
        }
        self.write_manifest("export", Value::Object(counts))
    }

    pub fn stats(&mut self, input: Option<&Path>) -> Result<()> {
        let path = match input {
            Some(p) => p.to_path_buf(),
            None => self.require(RECORDS, "assemble")?,
        };
        let text = self.read_input_string(&path)?;
        let records = dataset::read_jsonl_str(&text, &path)?;
        self.claim(&[STATS_DIR])?;
        let counter: Box<dyn TokenCounter> = match self.config.tokenizer_vocab.clone() {
            Some(vocab) => {
                self.read_input(&vocab)?;
                Box::new(HfTokenCounter::from_file(&vocab)?)
            }
            None => Box::new(WhitespaceCounter),
        };
        let stats = compute_stats(&records, counter.as_ref(), self.config.bucket_width)?;
        write_file(&self.out(STATS), &pretty(&stats))?;
        emit_plot_data(&stats, &self.out(STATS_DIR))?;
        log::info!(
            "{} records, {} words, vocabulary {}, median {} tokens",
            stats.record_count,
            stats.total_words,
            stats.vocab_size,
            stats.token_median
        );
        let tokenizer = self
            .config
            .tokenizer_vocab
            .as_ref()
            .map_or("whitespace".to_string(), |p| p.display().to_string());
        self.write_manifest(
            "stats",
            json!({"records": stats.record_count, "vocab_size": stats.vocab_size, "tokenizer": tokenizer}),
        )
    }

    pub fn eval(&mut self, cases_path: &Path) -> Result<()> {
        self.read_input(cases_path)?;
        let cases = load_cases(cases_path)?;
        self.claim(&[EVAL_REPORT])?;
        let client = self.client()?;
        let runtime = tokio::runtime::Runtime::new()?;
        let outcomes = runtime.block_on(run_eval(&client, &cases, &self.config.system_preamble));
        evalkit::write_eval_report(&outcomes, &self.out(EVAL_REPORT))?;
        let errors = outcomes.iter().filter(|o| o.error.is_some()).count();
        if errors > 0 {
            log::warn!(
                "{errors} of {} eval cases failed to get a response",
                outcomes.len()
            );
        }
        self.write_manifest("eval", json!({"cases": outcomes.len(), "errors": errors}))
    }

    pub fn emit_train_config(&mut self, overrides: &TrainingOverrides) -> Result<()> {
        let config = emit_training_config(overrides)?;
        self.claim(&[TRAIN_CONFIG])?;
        write_file(&self.out(TRAIN_CONFIG), &pretty(&config))?;
        self.write_manifest("emit-train-config", serde_json::to_value(&config)?)
    }
}
