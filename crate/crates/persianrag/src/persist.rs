//! Index files.
//!
//! Every file starts with the line `PRAG1 <kind>` followed by one JSON
//! document holding the index parameters and contents. Floats are written
//! with round-trip precision, so a reloaded index scores exactly as the
//! original did.

use std::fs;
use std::path::{Path, PathBuf};

use persianrag_core::embed::HashedTfIdf;
use persianrag_core::index::{Bm25Index, IndexError, VectorIndex};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const MAGIC: &str = "PRAG1";

pub const BM25_FILE: &str = "bm25.prag";
pub const VECTORS_FILE: &str = "vectors.prag";
pub const EMBEDDER_FILE: &str = "embedder.prag";

#[derive(Debug, thiserror::Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a {MAGIC} file")]
    BadMagic { path: PathBuf },
    #[error("{path}: holds a `{found}` index, expected `{expected}`")]
    WrongKind { path: PathBuf, expected: &'static str, found: String },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: IndexError,
    },
}

pub fn save<T: Serialize>(path: &Path, kind: &str, value: &T) -> Result<(), PersistError> {
    let json = serde_json::to_string(value).map_err(|e| PersistError::Json { path: path.into(), message: e.to_string() })?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| PersistError::Io { path: dir.into(), source })?;
    }
    fs::write(path, format!("{MAGIC} {kind}\n{json}\n")).map_err(|source| PersistError::Io { path: path.into(), source })
}

pub fn load<T: DeserializeOwned>(path: &Path, kind: &'static str) -> Result<T, PersistError> {
    let src = fs::read_to_string(path).map_err(|source| PersistError::Io { path: path.into(), source })?;
    let (header, body) = src.split_once('\n').ok_or_else(|| PersistError::BadMagic { path: path.into() })?;
    let found = header.strip_prefix(MAGIC).and_then(|r| r.strip_prefix(' ')).ok_or_else(|| PersistError::BadMagic { path: path.into() })?;
    if found != kind {
        return Err(PersistError::WrongKind { path: path.into(), expected: kind, found: found.into() });
    }
    serde_json::from_str(body).map_err(|e| PersistError::Json { path: path.into(), message: e.to_string() })
}

/// What is needed to embed queries against a saved vector index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbedderState {
    /// The fitted reference embedder, IDF table included.
    Reference { model: HashedTfIdf },
    /// A remote service; only the dimension is stored, the endpoint comes
    /// from the configuration.
    Remote { dim: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexBundle {
    pub bm25: Bm25Index,
    pub vectors: VectorIndex,
    pub embedder: EmbedderState,
}

impl IndexBundle {
    pub fn save(&self, dir: &Path) -> Result<(), PersistError> {
        save(&dir.join(BM25_FILE), "bm25", &self.bm25)?;
        save(&dir.join(VECTORS_FILE), "vectors", &self.vectors)?;
        save(&dir.join(EMBEDDER_FILE), "embedder", &self.embedder)
    }

    /// Loads and validates the three index files of `dir`.
    pub fn load(dir: &Path) -> Result<Self, PersistError> {
        let bm25_path = dir.join(BM25_FILE);
        let bm25: Bm25Index = load(&bm25_path, "bm25")?;
        bm25.validate().map_err(|source| PersistError::Invalid { path: bm25_path, source })?;
        let vec_path = dir.join(VECTORS_FILE);
        let mut vectors: VectorIndex = load(&vec_path, "vectors")?;
        vectors.validate().map_err(|source| PersistError::Invalid { path: vec_path, source })?;
        let embedder = load(&dir.join(EMBEDDER_FILE), "embedder")?;
        Ok(Self { bm25, vectors, embedder })
    }

    pub fn exists(dir: &Path) -> bool {
        [BM25_FILE, VECTORS_FILE, EMBEDDER_FILE].iter().all(|f| dir.join(f).is_file())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use persianrag_core::index::Bm25Params;

    #[test]
    fn header_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.prag");
        let idx = Bm25Index::build_from_texts([("a", "سلام دنیا")], Bm25Params::default()).unwrap();
        save(&p, "bm25", &idx).unwrap();
        assert!(fs::read_to_string(&p).unwrap().starts_with("PRAG1 bm25\n"));
        assert_eq!(load::<Bm25Index>(&p, "bm25").unwrap(), idx);
        assert!(matches!(load::<Bm25Index>(&p, "vectors"), Err(PersistError::WrongKind { .. })));
        fs::write(&p, "PRAG0 bm25\n{}").unwrap();
        assert!(matches!(load::<Bm25Index>(&p, "bm25"), Err(PersistError::BadMagic { .. })));
    }
}
