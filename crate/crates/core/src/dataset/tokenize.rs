//! Pluggable token counting for length statistics.

use std::path::Path;

use super::DatasetError;

pub trait TokenCounter: Sync {
    fn count(&self, text: &str) -> usize;
}

/// Whitespace-delimited tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceCounter;

impl TokenCounter for WhitespaceCounter {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

/// Counts with a Hugging Face `tokenizer.json` (BPE vocabulary and merges),
/// without special tokens.
pub struct HfTokenCounter {
    tokenizer: tokenizers::Tokenizer,
}

impl HfTokenCounter {
    pub fn from_file(path: &Path) -> Result<Self, DatasetError> {
        let tokenizer =
            tokenizers::Tokenizer::from_file(path).map_err(|e| DatasetError::Tokenizer {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        Ok(Self { tokenizer })
    }
}

impl TokenCounter for HfTokenCounter {
    fn count(&self, text: &str) -> usize {
        match self.tokenizer.encode(text, false) {
            Ok(enc) => enc.len(),
            Err(e) => {
                log::error!("tokenizer failed, counting 0 tokens: {e}");
                0
            }
        }
    }
}

impl<F> TokenCounter for F
where
    F: Fn(&str) -> usize + Sync,
{
    fn count(&self, text: &str) -> usize {
        self(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_counts() {
        assert_eq!(WhitespaceCounter.count("  نص  قانوني\nجديد "), 3);
        assert_eq!(WhitespaceCounter.count(""), 0);
    }

    #[test]
    fn closures_count() {
        let chars = |s: &str| s.chars().count();
        assert_eq!(chars.count("abc"), 3);
    }

    #[test]
    fn hf_tokenizer_from_file() {
        // minimal word-level tokenizer.json; exercises the adapter plumbing
        let json = r#"{
          "version": "1.0",
          "truncation": null, "padding": null, "added_tokens": [],
          "normalizer": null,
          "pre_tokenizer": {"type": "Whitespace"},
          "post_processor": null, "decoder": null,
          "model": {"type": "WordLevel", "vocab": {"[UNK]": 0, "نص": 1, "قانوني": 2}, "unk_token": "[UNK]"}
        }"#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tokenizer.json");
        std::fs::write(&path, json).unwrap();
        let counter = HfTokenCounter::from_file(&path).unwrap();
        assert_eq!(counter.count("نص قانوني آخر"), 3);
        assert!(HfTokenCounter::from_file(&dir.path().join("missing.json")).is_err());
    }
}
