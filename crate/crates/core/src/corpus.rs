//! Code–comment datasets and adversarial outputs as JSON Lines.

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{self, Lang};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSample {
    pub id: String,
    pub code: String,
    pub comment: String,
    pub lang: Lang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Validation,
    #[default]
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub samples: Vec<CodeSample>,
    pub role: Role,
    /// Lines dropped at load time because the code failed the validity check
    /// or the comment was blank.
    #[serde(skip)]
    pub dropped: usize,
}

impl Dataset {
    pub fn new(name: impl Into<String>, samples: Vec<CodeSample>, role: Role) -> Self {
        Dataset {
            name: name.into(),
            samples,
            role,
            dropped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CodeSample> {
        self.samples.iter().find(|s| s.id == id)
    }
}

/// Output of one attack on one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarialSample {
    pub original_id: String,
    pub adv_code: String,
    pub substitutions: Vec<(String, String)>,
    pub comment: String,
}

#[derive(Deserialize)]
struct RawSample {
    code: String,
    comment: String,
    #[serde(default)]
    id: Option<serde_json::Value>,
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Loads a JSON Lines dataset (`code`, `comment`, optional `id` per line).
///
/// Blank lines are ignored. Samples whose code fails [`lang::validate`] or
/// whose comment is blank are dropped and counted in [`Dataset::dropped`].
/// Missing ids become the zero-padded 1-based line number.
pub fn load_dataset(path: &Path, lang: Lang) -> Result<Dataset, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    let mut samples = Vec::new();
    let mut ids = HashSet::new();
    let mut dropped = 0;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| CorpusError::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        let raw: RawSample = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let id = match raw.id {
            None | Some(serde_json::Value::Null) => format!("{lineno:06}"),
            Some(serde_json::Value::String(s)) => s,
            Some(other) => other.to_string(),
        };
        if !ids.insert(id.clone()) {
            return Err(parse_err(format!("duplicate sample id `{id}`")));
        }
        if normalize_ws(&raw.comment).is_empty() || !lang::validate(&raw.code, lang) {
            dropped += 1;
            continue;
        }
        samples.push(CodeSample {
            id,
            code: raw.code,
            comment: raw.comment,
            lang,
        });
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset {
        name,
        samples,
        role: Role::default(),
        dropped,
    })
}

/// Writes samples as JSON Lines with the same shape [`load_dataset`] reads.
pub fn save_dataset(samples: &[CodeSample], path: &Path) -> Result<(), CorpusError> {
    let rows = samples
        .iter()
        .map(|s| serde_json::json!({ "code": s.code, "comment": s.comment, "id": s.id }));
    write_jsonl(path, rows)
}

/// Writes adversarial samples as JSON Lines with sorted keys.
/// Identical input produces byte-identical files.
pub fn save_adversarial(samples: &[AdversarialSample], path: &Path) -> Result<(), CorpusError> {
    let rows = samples
        .iter()
        .map(|s| serde_json::to_value(s).expect("plain data"));
    write_jsonl(path, rows)
}

pub fn load_adversarial(path: &Path) -> Result<Vec<AdversarialSample>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CorpusError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// serde_json's default map is ordered, so `Value` objects serialize with sorted keys.
pub(crate) fn write_jsonl(
    path: &Path,
    rows: impl IntoIterator<Item = serde_json::Value>,
) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for row in rows {
        serde_json::to_writer(&mut out, &row).map_err(|e| io_err(e.into()))?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_well_formed_lines_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let body = [
            r#"{"code": "int a(){ return 1; }", "comment": "one", "id": "x1"}"#,
            r#"{"code": "int b(){ return 2; }", "comment": "two"}"#,
            r#"{"code": "int c(){ return 3; }", "comment": "three", "id": 7}"#,
        ]
        .join("\n");
        let ds = load_dataset(&write(dir.path(), "d.jsonl", &body), Lang::Java).unwrap();
        let ids: Vec<_> = ds.samples.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["x1", "000002", "7"]);
        assert_eq!(ds.dropped, 0);
        assert_eq!(ds.name, "d");
    }

    #[test]
    fn invalid_code_is_dropped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        assert!(!lang::validate("int x = ;", Lang::Java));
        let body = [
            r#"{"code": "int x = ;", "comment": "broken"}"#,
            r#"{"code": "void f(){ int x = 1; }", "comment": "ok"}"#,
            r#"{"code": "void g(){ }", "comment": "   "}"#,
        ]
        .join("\n");
        let ds = load_dataset(&write(dir.path(), "d.jsonl", &body), Lang::Java).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.dropped, 2);
        assert_eq!(ds.len() + ds.dropped, 3);
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let ds = load_dataset(&write(dir.path(), "e.jsonl", ""), Lang::Python).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn malformed_line_names_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let body = "{\"code\": \"def f(): pass\", \"comment\": \"c\"}\n{not json\n";
        let err = load_dataset(&write(dir.path(), "m.jsonl", body), Lang::Python).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_dataset(Path::new("/nonexistent/x.jsonl"), Lang::Java).unwrap_err();
        assert!(matches!(err, CorpusError::Io { .. }));
    }

    #[test]
    fn adversarial_round_trip_and_stability() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.jsonl");
        save_adversarial(&[], &empty).unwrap();
        assert_eq!(fs::read(&empty).unwrap(), b"");

        let sample = AdversarialSample {
            original_id: "000001".into(),
            adv_code: "void g(){int B=1; B++;}".into(),
            substitutions: vec![("A".into(), "B".into()), ("f".into(), "g".into())],
            comment: "increments \"b\"".into(),
        };
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        save_adversarial(std::slice::from_ref(&sample), &a).unwrap();
        save_adversarial(std::slice::from_ref(&sample), &b).unwrap();
        let bytes = fs::read(&a).unwrap();
        assert_eq!(bytes, fs::read(&b).unwrap());
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("{\"adv_code\":"));
        assert!(text.ends_with("}\n"));
        assert_eq!(load_adversarial(&a).unwrap(), vec![sample]);
    }
}
