//! Pipeline and training configuration files (JSON).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lexforge_core::cleanse::CleanOptions;
use lexforge_core::dataset::{SplitSpec, DEFAULT_BUCKET_WIDTH};
use lexforge_core::synth::client::ProviderConfig;
use serde::{Deserialize, Serialize};

pub const DEFAULT_PREAMBLE: &str = "أنت مستشار قانوني متخصص في القوانين الفلسطينية. أجب عن السؤال بدقة استناداً إلى نص المادة التالية.";

fn default_corpus_dir() -> PathBuf {
    PathBuf::from("corpus")
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_provider() -> ProviderConfig {
    ProviderConfig::new("https://api.openai.com/v1", "gpt-4o-mini")
}
fn default_num_questions() -> u32 {
    3
}
fn default_preamble() -> String {
    DEFAULT_PREAMBLE.into()
}
fn default_bucket_width() -> usize {
    DEFAULT_BUCKET_WIDTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_corpus_dir")]
    pub corpus_dir: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Optional metadata manifest for the corpus.
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default = "default_provider")]
    pub provider: ProviderConfig,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default = "default_num_questions")]
    pub num_questions_per_article: u32,
    #[serde(default = "default_preamble")]
    pub system_preamble: String,
    #[serde(default)]
    pub cleaning: CleanOptions,
    /// Keep pairs that fail validation instead of dropping them.
    #[serde(default)]
    pub keep_invalid: bool,
    #[serde(default = "default_bucket_width")]
    pub bucket_width: usize,
    /// `tokenizer.json` for token counts; whitespace tokens when unset.
    #[serde(default)]
    pub tokenizer_vocab: Option<PathBuf>,
    /// Response cache directory; `<output_dir>/cache` when unset.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus_dir.as_os_str().is_empty() {
            bail!("corpus_dir is empty");
        }
        if self.output_dir.as_os_str().is_empty() {
            bail!("output_dir is empty");
        }
        if self.num_questions_per_article < 1 {
            bail!("num_questions_per_article must be at least 1");
        }
        if self.bucket_width < 1 {
            bail!("bucket_width must be at least 1");
        }
        self.split.validate()?;
        self.provider.validate()?;
        Ok(())
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir
            .clone()
            .unwrap_or_else(|| self.output_dir.join("cache"))
    }
}

fn default_base_model() -> String {
    "unsloth/Llama-3.2-1B-Instruct-bnb-4bit".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheduler {
    Linear,
}

/// Fine-tuning hyperparameters handed to an external trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub base_model: String,
    pub epochs: u32,
    pub learning_rate: f64,
    pub scheduler: Scheduler,
    pub warmup_ratio: f64,
    /// Free-form optimizer name as understood by the trainer.
    pub optimizer: String,
    pub lora_rank: u32,
    pub batch_size: u32,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            base_model: default_base_model(),
            epochs: 10,
            learning_rate: 2e-6,
            scheduler: Scheduler::Linear,
            warmup_ratio: 0.10,
            optimizer: "adam-8bit".into(),
            lora_rank: 64,
            batch_size: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_model.trim().is_empty() {
            bail!("base_model is empty");
        }
        if self.epochs < 1 {
            bail!("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            bail!("learning_rate must be positive, got {}", self.learning_rate);
        }
        if !(0.0..=1.0).contains(&self.warmup_ratio) {
            bail!("warmup_ratio must be in [0, 1], got {}", self.warmup_ratio);
        }
        if self.lora_rank < 1 {
            bail!("lora_rank must be at least 1");
        }
        if self.batch_size < 1 {
            bail!("batch_size must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingOverrides {
    pub base_model: Option<String>,
    pub epochs: Option<u32>,
    pub learning_rate: Option<f64>,
    pub warmup_ratio: Option<f64>,
    pub optimizer: Option<String>,
    pub lora_rank: Option<u32>,
    pub batch_size: Option<u32>,
}

/// Defaults with `overrides` applied, validated.
pub fn emit_training_config(overrides: &TrainingOverrides) -> Result<TrainingConfig> {
    let mut c = TrainingConfig::default();
    if let Some(v) = &overrides.base_model {
        c.base_model = v.clone();
    }
    if let Some(v) = overrides.epochs {
        c.epochs = v;
    }
    if let Some(v) = overrides.learning_rate {
        c.learning_rate = v;
    }
    if let Some(v) = overrides.warmup_ratio {
        c.warmup_ratio = v;
    }
    if let Some(v) = &overrides.optimizer {
        c.optimizer = v.clone();
    }
    if let Some(v) = overrides.lora_rank {
        c.lora_rank = v;
    }
    if let Some(v) = overrides.batch_size {
        c.batch_size = v;
    }
    c.validate()?;
    Ok(c)
}
