//! On-disk activation cache: one flat file of little-endian `f32` values per
//! model plus a JSON index of `{image_id, tap_id, offset, length}` records,
//! with `offset` and `length` counted in values.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "NFRAME_CACHE";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub image_id: String,
    pub tap_id: usize,
    pub offset: u64,
    pub length: u64,
}

#[derive(Debug)]
pub struct ActivationCache {
    data_path: PathBuf,
    index_path: PathBuf,
    entries: BTreeMap<(String, usize), CacheEntry>,
    /// Values in the data file.
    len: u64,
}

impl ActivationCache {
    /// Opens (or creates) the cache for `key` inside `dir`.
    pub fn open(dir: &Path, key: &str) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let data_path = dir.join(format!("{key}.bin"));
        let index_path = dir.join(format!("{key}.index.json"));
        let mut entries = BTreeMap::new();
        if index_path.exists() {
            let text = std::fs::read_to_string(&index_path).map_err(|e| Error::io(&index_path, e))?;
            let list: Vec<CacheEntry> = serde_json::from_str(&text).map_err(|e| Error::Ingest {
                path: index_path.clone(),
                reason: format!("corrupt cache index: {e}"),
            })?;
            for entry in list {
                entries.insert((entry.image_id.clone(), entry.tap_id), entry);
            }
        }
        let bytes = match std::fs::metadata(&data_path) {
            Ok(m) => m.len(),
            Err(_) => 0,
        };
        let len = bytes / 4;
        if let Some(e) = entries.values().find(|e| e.offset + e.length > len) {
            return Err(Error::Ingest {
                path: data_path,
                reason: format!(
                    "cache entry {}/{} runs past the end of the data file",
                    e.image_id, e.tap_id
                ),
            });
        }
        Ok(Self {
            data_path,
            index_path,
            entries,
            len,
        })
    }

    /// Opens the cache for `key` in `$NFRAME_CACHE`, if the variable is set.
    pub fn from_env(key: &str) -> Result<Option<Self>> {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) if !dir.is_empty() => Self::open(Path::new(&dir), key).map(Some),
            _ => Ok(None),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = &CacheEntry> {
        self.entries.values()
    }

    pub fn get(&self, image_id: &str, tap_id: usize) -> Result<Option<Vec<f32>>> {
        let Some(entry) = self.entries.get(&(image_id.to_string(), tap_id)) else {
            return Ok(None);
        };
        let mut file = File::open(&self.data_path).map_err(|e| Error::io(&self.data_path, e))?;
        file.seek(SeekFrom::Start(entry.offset * 4))
            .map_err(|e| Error::io(&self.data_path, e))?;
        let mut bytes = vec![0u8; entry.length as usize * 4];
        file.read_exact(&mut bytes).map_err(|e| Error::io(&self.data_path, e))?;
        Ok(Some(
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ))
    }

    /// Appends an activation and rewrites the index. An existing entry for
    /// the same key is superseded; its bytes stay in the data file.
    pub fn insert(&mut self, image_id: &str, tap_id: usize, values: &[f64]) -> Result<()> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.data_path)
            .map_err(|e| Error::io(&self.data_path, e))?;
        let bytes: Vec<u8> = values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
        file.write_all(&bytes).map_err(|e| Error::io(&self.data_path, e))?;
        let entry = CacheEntry {
            image_id: image_id.to_string(),
            tap_id,
            offset: self.len,
            length: values.len() as u64,
        };
        self.len += values.len() as u64;
        self.entries.insert((image_id.to_string(), tap_id), entry);
        self.write_index()
    }

    fn write_index(&self) -> Result<()> {
        let list: Vec<&CacheEntry> = self.entries.values().collect();
        let text = serde_json::to_string_pretty(&list).expect("index serializes");
        std::fs::write(&self.index_path, text).map_err(|e| Error::io(&self.index_path, e))
    }
}
