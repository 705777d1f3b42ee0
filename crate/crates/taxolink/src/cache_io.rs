//! Embedding cache files on disk.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use taxolink_core::cache::{self, CacheContents};
use taxolink_core::{EmbeddingRecord, EmbeddingStrategy, EntityKind, IndexError, VectorIndex};

use crate::error::{Error, Result};

pub const CACHE_EXTENSION: &str = "txlk";

/// `<dir>/<kind>.<strategy>.txlk`, e.g. `cache/skill.s1.txlk`.
pub fn cache_path(dir: &Path, kind: EntityKind, strategy: EmbeddingStrategy) -> PathBuf {
    dir.join(format!("{}.{}.{CACHE_EXTENSION}", kind.slug(), strategy.short_name()))
}

/// Writes atomically: the bytes go to a sibling temp file which is then
/// renamed over `path`.
pub fn save(path: &Path, records: &[EmbeddingRecord], normalized: bool) -> Result<()> {
    let bytes = cache::encode(records, normalized).map_err(|source| Error::Cache {
        path: path.to_path_buf(),
        source,
    })?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
    }
    let tmp = path.with_extension(format!("{CACHE_EXTENSION}.tmp"));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load(path: &Path) -> Result<CacheContents> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading cache {}", path.display()), e))?;
    cache::decode(&bytes).map_err(|source| Error::Cache {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a cache and builds its index, checking that it holds `kind`.
pub fn load_index(path: &Path, kind: EntityKind) -> Result<VectorIndex> {
    let contents = load(path)?;
    let index = VectorIndex::build(&contents.records).map_err(|e| match e {
        IndexError::Empty => Error::Config(format!("cache {} holds no vectors", path.display())),
        other => Error::format(format!("cache {}", path.display()), other),
    })?;
    if index.kind() != kind {
        return Err(Error::Config(format!(
            "cache {} holds {} vectors, expected {kind}",
            path.display(),
            index.kind()
        )));
    }
    Ok(index)
}
