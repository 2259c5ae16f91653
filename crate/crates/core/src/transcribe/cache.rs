//! Per-segment recognition cache stored as JSON lines.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

pub const CACHE_FILE: &str = "segments.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    /// Hex SHA-256 of the narration bytes as stored in the deck.
    pub hash: String,
    pub language: String,
    pub hints_hash: String,
}

#[derive(Serialize, Deserialize)]
struct Record {
    hash: String,
    language: String,
    hints_hash: String,
    text: String,
}

/// Reads are concurrent; appends to the backing file are serialized.
pub struct SegmentCache {
    path: PathBuf,
    entries: RwLock<HashMap<CacheKey, String>>,
    writer: Mutex<File>,
}

impl SegmentCache {
    /// Open (or create) the cache file under `dir`.
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(CACHE_FILE);
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Record>(&line) {
                    Ok(r) => {
                        entries.insert(
                            CacheKey {
                                hash: r.hash,
                                language: r.language,
                                hints_hash: r.hints_hash,
                            },
                            r.text,
                        );
                    }
                    Err(e) => {
                        log::warn!("{}:{}: skipping cache record: {e}", path.display(), n + 1)
                    }
                }
            }
        }
        let writer = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(SegmentCache {
            path,
            entries: RwLock::new(entries),
            writer: Mutex::new(writer),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &CacheKey) -> Option<String> {
        self.entries.read().unwrap().get(key).cloned()
    }

    pub fn insert(&self, key: CacheKey, text: String) -> std::io::Result<()> {
        let record = Record {
            hash: key.hash.clone(),
            language: key.language.clone(),
            hints_hash: key.hints_hash.clone(),
            text: text.clone(),
        };
        let mut line = serde_json::to_string(&record).map_err(std::io::Error::other)?;
        line.push('\n');
        {
            let mut w = self.writer.lock().unwrap();
            w.write_all(line.as_bytes())?;
            w.flush()?;
        }
        self.entries.write().unwrap().insert(key, text);
        Ok(())
    }
}
