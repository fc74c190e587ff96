//! Loading raw law files into [`LawDocument`]s.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::numerals::{self, DIGIT_CLASS};

/// Extension of files picked up by [`load_corpus`].
pub const TEXT_EXTENSION: &str = "txt";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { path: PathBuf, offset: usize },
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("duplicate document id {id:?} ({path})")]
    DuplicateId { id: String, path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawStatus {
    Applicable,
    Repealed,
    Amendment,
    #[default]
    Unknown,
}

impl fmt::Display for LawStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LawStatus::Applicable => "applicable",
            LawStatus::Repealed => "repealed",
            LawStatus::Amendment => "amendment",
            LawStatus::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

/// One source law file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawDocument {
    /// Relative path, `/`-separated, without extension.
    pub id: String,
    /// Empty until known from a manifest or [`infer_metadata`].
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub law_number: Option<u32>,
    #[serde(default)]
    pub year: Option<i32>,
    #[serde(default)]
    pub status: LawStatus,
    pub raw_text: String,
    pub source_path: String,
}

impl LawDocument {
    /// Title to show in prompts: the known title, or the id.
    pub fn display_title(&self) -> &str {
        if self.title.trim().is_empty() {
            &self.id
        } else {
            &self.title
        }
    }
}

/// Result of a corpus load: documents in relative-path order plus
/// non-fatal diagnostics.
#[derive(Debug, Default)]
pub struct CorpusLoad {
    pub documents: Vec<LawDocument>,
    pub warnings: Vec<String>,
}

/// Manifest row. Every field but `id` is optional and overrides what was
/// loaded.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub law_number: Option<u32>,
    #[serde(default)]
    pub year: Option<i32>,
    #[serde(default)]
    pub status: Option<LawStatus>,
}

/// Document id for a path relative to the corpus root.
pub fn document_id(relative: &Path) -> String {
    let stem = relative.with_extension("");
    stem.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Loads every `.txt` file under `root` (recursively). Other files are
/// skipped with a warning; so are empty files.
pub fn load_corpus(root: &Path, manifest: Option<&Path>) -> Result<CorpusLoad, CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::MissingRoot(root.to_path_buf()));
    }
    let mut out = CorpusLoad::default();

    let mut files: Vec<(String, PathBuf)> = Vec::new();
    for entry in WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| CorpusError::Io {
            path: e.path().unwrap_or(root).to_path_buf(),
            source: e
                .into_io_error()
                .unwrap_or_else(|| std::io::Error::other("walk error")),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path();
        let rel = path
            .strip_prefix(root)
            .expect("walkdir yields paths under root");
        let is_text = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case(TEXT_EXTENSION));
        if !is_text {
            out.warnings
                .push(format!("skipping non-text file {}", rel.display()));
            continue;
        }
        files.push((relative_key(rel), path.to_path_buf()));
    }
    files.sort();

    let mut seen = HashSet::new();
    for (_, path) in files {
        let rel = path.strip_prefix(root).unwrap();
        let bytes = std::fs::read(&path).map_err(|source| CorpusError::Io {
            path: path.clone(),
            source,
        })?;
        let text = match String::from_utf8(bytes) {
            Ok(t) => t,
            Err(e) => {
                return Err(CorpusError::InvalidUtf8 {
                    path,
                    offset: e.utf8_error().valid_up_to(),
                })
            }
        };
        if text.is_empty() {
            out.warnings
                .push(format!("skipping empty file {}", rel.display()));
            continue;
        }
        let id = document_id(rel);
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id, path });
        }
        out.documents.push(LawDocument {
            id,
            title: String::new(),
            law_number: None,
            year: None,
            status: LawStatus::Unknown,
            raw_text: text,
            source_path: path.to_string_lossy().into_owned(),
        });
    }

    if out.documents.is_empty() {
        out.warnings
            .push(format!("no .txt documents found under {}", root.display()));
    }

    if let Some(manifest) = manifest {
        let entries = read_manifest(manifest)?;
        apply_manifest(&mut out, entries);
    }
    for w in &out.warnings {
        log::warn!("{w}");
    }
    Ok(out)
}

fn relative_key(rel: &Path) -> String {
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CorpusError::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn apply_manifest(load: &mut CorpusLoad, entries: Vec<ManifestEntry>) {
    let mut by_id: BTreeMap<String, ManifestEntry> = BTreeMap::new();
    for entry in entries {
        if by_id.contains_key(&entry.id) {
            load.warnings.push(format!(
                "manifest lists id {:?} more than once; last wins",
                entry.id
            ));
        }
        by_id.insert(entry.id.clone(), entry);
    }
    for doc in &mut load.documents {
        if let Some(entry) = by_id.remove(&doc.id) {
            if let Some(title) = entry.title {
                doc.title = title;
            }
            if entry.law_number.is_some() {
                doc.law_number = entry.law_number;
            }
            if entry.year.is_some() {
                doc.year = entry.year;
            }
            if let Some(status) = entry.status {
                doc.status = status;
            }
        }
    }
    for id in by_id.into_keys() {
        load.warnings
            .push(format!("manifest id {id:?} matches no loaded document"));
    }
}

static LAW_NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"رقم\s*\(\s*([{DIGIT_CLASS}]+)\s*\)")).unwrap());
static LAW_YEAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"لسنة\s*([{DIGIT_CLASS}]{{4}})")).unwrap());

/// Fills title, law number and year from the first non-empty line when it
/// reads like a law title (`... رقم (N) ... لسنة YYYY`). Fields already set
/// are kept; `raw_text` and `status` are never touched.
pub fn infer_metadata(mut doc: LawDocument) -> LawDocument {
    let Some(first) = doc.raw_text.lines().map(str::trim).find(|l| !l.is_empty()) else {
        return doc;
    };
    let number = LAW_NUMBER
        .captures(first)
        .and_then(|c| numerals::parse_digits(&c[1]))
        .and_then(|n| u32::try_from(n).ok());
    let year = LAW_YEAR
        .captures(first)
        .and_then(|c| numerals::parse_digits(&c[1]))
        .and_then(|n| i32::try_from(n).ok());
    if number.is_none() {
        return doc;
    }
    if doc.title.trim().is_empty() {
        doc.title = first.to_string();
    }
    if doc.law_number.is_none() {
        doc.law_number = number;
    }
    if doc.year.is_none() {
        doc.year = year;
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn doc(text: &str) -> LawDocument {
        LawDocument {
            id: "x".into(),
            title: String::new(),
            law_number: None,
            year: None,
            status: LawStatus::Unknown,
            raw_text: text.into(),
            source_path: "x.txt".into(),
        }
    }

    #[test]
    fn loads_in_relative_path_order() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.txt"), "ب").unwrap();
        fs::write(dir.path().join("a.txt"), "أ").unwrap();
        let load = load_corpus(dir.path(), None).unwrap();
        let ids: Vec<_> = load.documents.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        for d in &load.documents {
            assert!(Path::new(&d.source_path).starts_with(dir.path()));
        }
    }

    #[test]
    fn nested_ids_use_forward_slashes() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("labor/2000")).unwrap();
        fs::write(dir.path().join("labor/2000/law7.txt"), "نص").unwrap();
        fs::write(dir.path().join("notes.md"), "x").unwrap();
        let load = load_corpus(dir.path(), None).unwrap();
        assert_eq!(load.documents.len(), 1);
        assert_eq!(load.documents[0].id, "labor/2000/law7");
        assert!(load.warnings.iter().any(|w| w.contains("notes.md")));
    }

    #[test]
    fn empty_dir_warns() {
        let dir = tempfile::tempdir().unwrap();
        let load = load_corpus(dir.path(), None).unwrap();
        assert!(load.documents.is_empty());
        assert_eq!(load.warnings.len(), 1);
    }

    #[test]
    fn invalid_utf8_names_path_and_offset() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("bad.txt"), b"abc\xffdef").unwrap();
        let err = load_corpus(dir.path(), None).unwrap_err();
        match &err {
            CorpusError::InvalidUtf8 { path, offset } => {
                assert!(path.ends_with("bad.txt"));
                assert_eq!(*offset, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        let msg = err.to_string();
        assert!(msg.contains("bad.txt") && msg.contains("offset 3"), "{msg}");
    }

    #[test]
    fn missing_root_is_an_error() {
        let err = load_corpus(Path::new("/definitely/not/here"), None).unwrap_err();
        assert!(matches!(err, CorpusError::MissingRoot(_)));
    }

    #[test]
    fn manifest_joins_by_id() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "نص").unwrap();
        let manifest = dir.path().join("manifest.json");
        fs::write(
            &manifest,
            r#"[{"id":"a","title":"قانون العمل","law_number":7,"year":2000,"status":"applicable"},
                {"id":"ghost","status":"repealed"}]"#,
        )
        .unwrap();
        let load = load_corpus(dir.path(), Some(&manifest)).unwrap();
        let a = &load.documents[0];
        assert_eq!(a.title, "قانون العمل");
        assert_eq!(a.law_number, Some(7));
        assert_eq!(a.year, Some(2000));
        assert_eq!(a.status, LawStatus::Applicable);
        assert!(load.warnings.iter().any(|w| w.contains("ghost")));
    }

    #[test]
    fn bad_manifest_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("m.json");
        fs::write(&manifest, r#"{"id":"a"}"#).unwrap();
        assert!(matches!(
            load_corpus(dir.path(), Some(&manifest)),
            Err(CorpusError::Manifest { .. })
        ));
    }

    #[test]
    fn infers_number_and_year_from_title_line() {
        let d = infer_metadata(doc("قانون رقم (4) لسنة 2005\nمادة (1)\nنص"));
        assert_eq!(d.law_number, Some(4));
        assert_eq!(d.year, Some(2005));
        assert_eq!(d.title, "قانون رقم (4) لسنة 2005");
        assert_eq!(d.status, LawStatus::Unknown);
    }

    #[test]
    fn infers_from_arabic_indic_digits() {
        let d = infer_metadata(doc("\n  قانون رقم (٤) لسنة ٢٠٠٥  \nنص"));
        assert_eq!(d.law_number, Some(4));
        assert_eq!(d.year, Some(2005));
    }

    #[test]
    fn non_title_first_line_sets_nothing() {
        let d = infer_metadata(doc("ملاحظات عامة\nقانون رقم (4) لسنة 2005"));
        assert_eq!(d.law_number, None);
        assert_eq!(d.year, None);
        assert_eq!(d.title, "");
    }

    #[test]
    fn infer_keeps_raw_text_and_existing_fields() {
        let mut d = doc("قانون رقم (4) لسنة 2005");
        d.title = "من البيان".into();
        d.year = Some(1999);
        let raw = d.raw_text.clone();
        let d = infer_metadata(d);
        assert_eq!(d.raw_text, raw);
        assert_eq!(d.title, "من البيان");
        assert_eq!(d.year, Some(1999));
        assert_eq!(d.law_number, Some(4));
    }
}
