//! JSON Lines readers and writers for corpora, chunk stores, datasets and
//! result logs.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use persianrag_core::corpus::{Chunk, ChunkStore, CorpusError, RawDocument};
use persianrag_core::eval::QAExample;
use persianrag_core::textnorm::{CharMap, CharMapError};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}:{line}: missing required field `{field}`")]
    MissingField { path: PathBuf, line: usize, field: &'static str },
    #[error("{path}: {source}")]
    Corpus {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error("{path}: {source}")]
    CharMap {
        path: PathBuf,
        #[source]
        source: CharMapError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io { path: path.to_path_buf(), source }
}

/// Non-blank lines of `path` with their 1-based line numbers.
fn lines(path: &Path) -> Result<Vec<(usize, String)>, FormatError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, FormatError> {
    lines(path)?
        .into_iter()
        .map(|(line, text)| {
            serde_json::from_str(&text).map_err(|e| FormatError::Parse {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn write_jsonl<'a, T, I>(path: &Path, items: I) -> Result<(), FormatError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| FormatError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Corpus records: `id`, `text`, optional `source_file`, `datetime`, `doc_type`.
pub fn read_corpus(path: &Path) -> Result<Vec<RawDocument>, FormatError> {
    read_jsonl(path)
}

pub fn write_chunk_store(path: &Path, store: &ChunkStore) -> Result<(), FormatError> {
    write_jsonl(path, store.chunks())
}

pub fn read_chunk_store(path: &Path) -> Result<ChunkStore, FormatError> {
    let chunks: Vec<Chunk> = read_jsonl(path)?;
    ChunkStore::from_chunks(chunks).map_err(|source| FormatError::Corpus { path: path.to_path_buf(), source })
}

const REQUIRED: [&str; 3] = ["paragraph", "question", "gold_answer"];

/// QA dataset, one example per line. Besides the three required string
/// fields, `question_type` and `source_file` are read when present and any
/// other column is ignored.
pub fn load_dataset(path: &Path) -> Result<Vec<QAExample>, FormatError> {
    let mut out = Vec::new();
    for (line, text) in lines(path)? {
        let parse = |message: String| FormatError::Parse { path: path.to_path_buf(), line, message };
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| parse("expected a JSON object".into()))?;
        for field in REQUIRED {
            match obj.get(field) {
                None | Some(serde_json::Value::Null) => {
                    return Err(FormatError::MissingField { path: path.to_path_buf(), line, field })
                }
                Some(v) if !v.is_string() => return Err(parse(format!("`{field}` must be a string"))),
                Some(_) => {}
            }
        }
        let opt = |key: &str| -> Result<Option<String>, FormatError> {
            match obj.get(key) {
                None | Some(serde_json::Value::Null) => Ok(None),
                Some(serde_json::Value::String(s)) => Ok(Some(s.clone())),
                Some(serde_json::Value::Number(n)) => Ok(Some(n.to_string())),
                Some(_) => Err(parse(format!("`{key}` must be a string"))),
            }
        };
        let ex = QAExample {
            paragraph: obj["paragraph"].as_str().unwrap_or_default().to_string(),
            question: obj["question"].as_str().unwrap_or_default().to_string(),
            gold_answer: obj["gold_answer"].as_str().unwrap_or_default().to_string(),
            question_type: opt("question_type")?,
            source_file: opt("source_file")?,
        };
        ex.validate().map_err(|e| parse(e.to_string()))?;
        out.push(ex);
    }
    Ok(out)
}

/// Character mapping table in the two-column text form.
pub fn load_char_map(path: &Path) -> Result<CharMap, FormatError> {
    let src = fs::read_to_string(path).map_err(io_err(path))?;
    CharMap::parse(&src).map_err(|source| FormatError::CharMap { path: path.to_path_buf(), source })
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
    fn dataset_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "d.jsonl",
            concat!(
                r#"{"paragraph":"a","question":"b","gold_answer":"c"}"#,
                "\n\n",
                r#"{"paragraph":"a","question":"b","gold_answer":"c","question_type":"who","source_file":"x.pdf","id":7}"#,
                "\n",
                r#"{"paragraph":"a","question":"b","gold_answer":"c"}"#,
                "\n"
            ),
        );
        let ds = load_dataset(&p).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds[1].question_type.as_deref(), Some("who"));
        assert_eq!(ds[1].source_file.as_deref(), Some("x.pdf"));
    }

    #[test]
    fn dataset_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "d.jsonl",
            "{\"paragraph\":\"a\",\"question\":\"b\",\"gold_answer\":\"c\"}\n{\"paragraph\":\"a\",\"question\":\"b\"}\n",
        );
        assert!(matches!(load_dataset(&p), Err(FormatError::MissingField { line: 2, field: "gold_answer", .. })));
        let p = write(dir.path(), "e.jsonl", "{\"paragraph\":\"a\",\"question\":\"b\",\"gold_answer\":\"c\"}\n{oops\n");
        assert!(matches!(load_dataset(&p), Err(FormatError::Parse { line: 2, .. })));
        assert!(matches!(load_dataset(&dir.path().join("none")), Err(FormatError::Io { .. })));
    }

    #[test]
    fn corpus_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "c.jsonl", "{\"id\":\"a\",\"text\":\"t\",\"colour\":1}\n");
        assert!(matches!(read_corpus(&p), Err(FormatError::Parse { line: 1, .. })));
    }

    #[test]
    fn char_map_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "m.tsv", "U+0643\tU+06A9\n0660 0030\n");
        let m = load_char_map(&p).unwrap();
        assert_eq!(m.map_letter('\u{0643}'), Some('\u{06A9}'));
        let p = write(dir.path(), "bad.tsv", "U+0643\n");
        assert!(matches!(load_char_map(&p), Err(FormatError::CharMap { .. })));
    }
}
