//! `{"messages":[system,user,assistant],"meta":{...}}` JSONL files.

use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ChatRecord, DatasetError};

#[derive(Serialize, Deserialize)]
struct Message {
    role: String,
    content: String,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    law_id: String,
    article: u32,
}

#[derive(Serialize, Deserialize)]
struct Line {
    messages: Vec<Message>,
    meta: Meta,
}

/// Serializes one record as a single JSON line (no trailing newline).
pub fn record_to_json_line(r: &ChatRecord) -> String {
    let msg = |role: &str, content: &str| Message {
        role: role.into(),
        content: content.into(),
    };
    let line = Line {
        messages: vec![
            msg("system", &r.system),
            msg("user", &r.user),
            msg("assistant", &r.assistant),
        ],
        meta: Meta {
            law_id: r.law_id.clone(),
            article: r.article_number,
        },
    };
    serde_json::to_string(&line).expect("record serializes")
}

fn record_from_line(line: Line) -> Result<ChatRecord, String> {
    let mut system = None;
    let mut user = None;
    let mut assistant = None;
    for m in line.messages {
        let slot = match m.role.as_str() {
            "system" => &mut system,
            "user" => &mut user,
            "assistant" => &mut assistant,
            other => return Err(format!("unknown role {other:?}")),
        };
        if slot.replace(m.content).is_some() {
            return Err(format!("duplicate {} message", m.role));
        }
    }
    Ok(ChatRecord {
        system: system.ok_or("missing system message")?,
        user: user.ok_or("missing user message")?,
        assistant: assistant.ok_or("missing assistant message")?,
        law_id: line.meta.law_id,
        article_number: line.meta.article,
    })
}

pub fn export_jsonl(records: &[ChatRecord], path: &Path) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    for r in records {
        w.write_all(record_to_json_line(r).as_bytes()).map_err(io)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Parses JSONL text; `origin` only labels errors. Blank lines are skipped.
pub fn read_jsonl_str(text: &str, origin: &Path) -> Result<Vec<ChatRecord>, DatasetError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let err = |message: String| DatasetError::Json {
            path: origin.to_path_buf(),
            line: i + 1,
            message,
        };
        let line: Line = serde_json::from_str(raw).map_err(|e| err(e.to_string()))?;
        out.push(record_from_line(line).map_err(err)?);
    }
    Ok(out)
}

pub fn import_jsonl(path: &Path) -> Result<Vec<ChatRecord>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_jsonl_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::tests::record;

    #[test]
    fn empty_list_writes_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out/empty.jsonl");
        export_jsonl(&[], &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap().len(), 0);
        assert!(import_jsonl(&path).unwrap().is_empty());
    }

    #[test]
    fn embedded_newlines_stay_on_one_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let mut r = record("سطر\nثان", "\"مقتبس\"\r\n");
        r.system = "أ\n\nب".into();
        export_jsonl(&[r.clone(), record("x", "y")], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert_eq!(import_jsonl(&path).unwrap(), [r, record("x", "y")]);
    }

    #[test]
    fn line_shape() {
        let line = record_to_json_line(&record("q", "a"));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["messages"][0]["role"], "system");
        assert_eq!(v["messages"][1]["content"], "q");
        assert_eq!(v["messages"][2]["role"], "assistant");
        assert_eq!(v["meta"]["law_id"], "law");
        assert_eq!(v["meta"]["article"], 1);
    }

    #[test]
    fn bad_line_reports_line_number() {
        let text = format!(
            "{}\n{{\"messages\":[]}}\n",
            record_to_json_line(&record("q", "a"))
        );
        match read_jsonl_str(&text, Path::new("x.jsonl")) {
            Err(DatasetError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
