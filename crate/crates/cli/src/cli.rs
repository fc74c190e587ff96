use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use lexforge_core::cleanse;

use crate::config::{PipelineConfig, TrainingOverrides};

#[derive(Debug, Parser)]
#[command(
    name = "lexforge",
    version,
    about = "Build synthetic legal QA instruct datasets"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Pipeline config file (JSON); flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub corpus_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub num_questions: Option<u32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Train, validation and test fractions, e.g. 0.8,0.1,0.1.
    #[arg(long, global = true, value_parser = parse_split)]
    pub split: Option<[f64; 3]>,
    #[arg(long, global = true)]
    pub group_by_law: bool,
    #[arg(long, global = true)]
    pub provider_url: Option<String>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub max_concurrency: Option<usize>,
    /// Requests per second sent to the provider.
    #[arg(long, global = true)]
    pub rps: Option<f64>,
    /// tokenizer.json used for token statistics.
    #[arg(long, global = true)]
    pub tokenizer_vocab: Option<PathBuf>,
    /// Overwrite existing artifacts.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the raw corpus into corpus/documents.jsonl.
    Ingest {
        /// JSON metadata manifest for the corpus.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Normalize every document into clean/.
    Clean(CleanArgs),
    /// Split cleaned documents into articles under laws/.
    Segment,
    /// Generate question-answer pairs for every article into qa/.
    Generate {
        /// Keep pairs that fail validation.
        #[arg(long)]
        keep_invalid: bool,
    },
    /// Build chat records from generated pairs.
    Assemble,
    /// Token and vocabulary statistics.
    Stats {
        /// JSONL dataset to profile (defaults to dataset/records.jsonl).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Assign records to train, validation and test.
    Split,
    /// Write dataset/{train,val,test}.jsonl.
    Export,
    /// Evaluate the configured endpoint on a case file.
    Eval {
        #[arg(long)]
        cases: PathBuf,
    },
    /// Write train_config.json for an external fine-tuning run.
    EmitTrainConfig(TrainArgs),
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    #[arg(long)]
    pub no_strip_invisible: bool,
    #[arg(long)]
    pub no_join_broken_lines: bool,
    #[arg(long)]
    pub no_collapse_repeated_punctuation: bool,
    #[arg(long)]
    pub no_remove_dash_runs: bool,
    #[arg(long)]
    pub no_collapse_blank_lines: bool,
    #[arg(long)]
    pub no_collapse_spaces: bool,
    #[arg(long)]
    pub no_trim: bool,
}

impl CleanArgs {
    pub fn disabled(&self) -> Vec<&'static str> {
        [
            (self.no_strip_invisible, cleanse::STRIP_INVISIBLE),
            (self.no_join_broken_lines, cleanse::JOIN_BROKEN_LINES),
            (
                self.no_collapse_repeated_punctuation,
                cleanse::COLLAPSE_REPEATED_PUNCTUATION,
            ),
            (self.no_remove_dash_runs, cleanse::REMOVE_DASH_RUNS),
            (self.no_collapse_blank_lines, cleanse::COLLAPSE_BLANK_LINES),
            (self.no_collapse_spaces, cleanse::COLLAPSE_SPACES),
            (self.no_trim, cleanse::TRIM),
        ]
        .into_iter()
        .filter_map(|(off, rule)| off.then_some(rule))
        .collect()
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub base_model: Option<String>,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub warmup_ratio: Option<f64>,
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub lora_rank: Option<u32>,
    #[arg(long)]
    pub batch_size: Option<u32>,
}

impl TrainArgs {
    pub fn overrides(&self) -> TrainingOverrides {
        TrainingOverrides {
            base_model: self.base_model.clone(),
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            warmup_ratio: self.warmup_ratio,
            optimizer: self.optimizer.clone(),
            lora_rank: self.lora_rank,
            batch_size: self.batch_size,
        }
    }
}

fn parse_split(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, c] = parts[..] else {
        return Err(format!(
            "expected three comma-separated fractions, got {s:?}"
        ));
    };
    let f = |x: &str| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok([f(a)?, f(b)?, f(c)?])
}

impl GlobalArgs {
    /// Config file (or defaults) with these flags applied on top.
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.corpus_dir {
            c.corpus_dir = v.clone();
        }
        if let Some(v) = &self.output_dir {
            c.output_dir = v.clone();
        }
        if let Some(v) = self.num_questions {
            c.num_questions_per_article = v;
        }
        if let Some(v) = self.seed {
            c.split.seed = v;
        }
        if let Some([t, v, s]) = self.split {
            c.split.train_frac = t;
            c.split.val_frac = v;
            c.split.test_frac = s;
        }
        if self.group_by_law {
            c.split.group_by_law = true;
        }
        if let Some(v) = &self.provider_url {
            c.provider.base_url = v.clone();
        }
        if let Some(v) = &self.model {
            c.provider.model_name = v.clone();
        }
        if let Some(v) = self.max_concurrency {
            c.provider.max_concurrency = v;
        }
        if let Some(v) = self.rps {
            c.provider.requests_per_second = v;
        }
        if let Some(v) = &self.tokenizer_vocab {
            c.tokenizer_vocab = Some(v.clone());
        }
        Ok(c)
    }
}

/// Folds subcommand flags that belong in the config snapshot.
pub fn apply_command(config: &mut PipelineConfig, command: &Command) -> Result<()> {
    match command {
        Command::Ingest { manifest: Some(m) } => config.manifest = Some(m.clone()),
        Command::Clean(args) => {
            for rule in args.disabled() {
                if !config.cleaning.set(rule, false) {
                    bail!("unknown cleaning rule {rule}");
                }
            }
        }
        Command::Generate { keep_invalid: true } => config.keep_invalid = true,
        _ => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_flag_parses() {
        assert_eq!(parse_split("0.8,0.1,0.1").unwrap(), [0.8, 0.1, 0.1]);
        assert!(parse_split("0.8,0.2").is_err());
        assert!(parse_split("a,b,c").is_err());
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from([
            "lexforge",
            "split",
            "--seed",
            "7",
            "--split",
            "0.6,0.2,0.2",
            "--model",
            "m2",
            "--rps",
            "9",
        ])
        .unwrap();
        let c = cli.global.resolve().unwrap();
        assert_eq!(c.split.seed, 7);
        assert_eq!(c.split.train_frac, 0.6);
        assert_eq!(c.provider.model_name, "m2");
        assert_eq!(c.provider.requests_per_second, 9.0);
    }

    #[test]
    fn clean_toggles() {
        let cli = Cli::try_parse_from(["lexforge", "clean", "--no-trim", "--no-remove-dash-runs"])
            .unwrap();
        let mut c = cli.global.resolve().unwrap();
        apply_command(&mut c, &cli.command).unwrap();
        assert!(!c.cleaning.trim && !c.cleaning.remove_dash_runs && c.cleaning.collapse_spaces);
    }

    #[test]
    fn unknown_flag_is_rejected() {
        assert!(Cli::try_parse_from(["lexforge", "stats", "--bogus"]).is_err());
    }
}
