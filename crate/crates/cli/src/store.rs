//! Content-addressed on-disk cache of prediction matrices.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wpsim_core::experiments::{MatrixStore, PredictionMatrix};

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    matrix: PredictionMatrix,
}

/// One JSON file per key, named by the SHA-256 of the key. Entries are
/// written to a temporary file and renamed into place, so readers never see
/// partial files. Failures to write are reported on stderr and otherwise
/// ignored.
pub struct DiskStore {
    dir: PathBuf,
}

impl DiskStore {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(DiskStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{}.json", hex::encode(Sha256::digest(key.as_bytes()))))
    }

    fn write(&self, key: &str, matrix: &PredictionMatrix) -> std::io::Result<()> {
        let path = self.path_for(key);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        serde_json::to_writer(&mut tmp, &Entry { key: key.to_owned(), matrix: matrix.clone() })?;
        tmp.flush()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }
}

impl MatrixStore for DiskStore {
    fn load(&self, key: &str) -> Option<PredictionMatrix> {
        let text = fs::read(self.path_for(key)).ok()?;
        let entry: Entry = serde_json::from_slice(&text).ok()?;
        (entry.key == key).then_some(entry.matrix)
    }

    fn store(&self, key: &str, matrix: &PredictionMatrix) {
        if let Err(e) = self.write(key, matrix) {
            eprintln!("warning: could not cache {}: {e}", self.path_for(key).display());
        }
    }
}
