//! Deterministic backend driven by a fixture table.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use super::{BackendError, RecognitionRequest, SpeechBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MockFailure {
    Transient,
    Rejected,
    Auth,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum MockEntry {
    Text(String),
    Scripted {
        #[serde(default)]
        text: Option<String>,
        /// Fail transiently this many times before answering.
        #[serde(default)]
        fail_first: u32,
        /// Always fail with this kind.
        #[serde(default)]
        fail: Option<MockFailure>,
    },
}

/// Answers keyed by [`crate::audio::PcmClip::content_hash`].
///
/// Fixture files are a JSON object mapping hashes to either a string or
/// `{"text": .., "fail_first": n}` / `{"fail": "transient"|"rejected"|"auth"}`.
#[derive(Debug, Default)]
pub struct MockBackend {
    table: HashMap<String, MockEntry>,
    state: Mutex<MockState>,
}

#[derive(Debug, Default)]
struct MockState {
    calls: Vec<String>,
    failures_seen: HashMap<String, u32>,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_table(table: HashMap<String, MockEntry>) -> Self {
        MockBackend {
            table,
            state: Mutex::default(),
        }
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        Ok(Self::from_table(serde_json::from_str(json)?))
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{}: {e}", path.display()),
            )
        })
    }

    pub fn with_text(mut self, hash: impl Into<String>, text: impl Into<String>) -> Self {
        self.table.insert(hash.into(), MockEntry::Text(text.into()));
        self
    }

    pub fn with_entry(mut self, hash: impl Into<String>, entry: MockEntry) -> Self {
        self.table.insert(hash.into(), entry);
        self
    }

    /// Content hashes of every request received, in arrival order.
    pub fn calls(&self) -> Vec<String> {
        self.state.lock().unwrap().calls.clone()
    }

    pub fn call_count(&self) -> usize {
        self.state.lock().unwrap().calls.len()
    }
}

impl SpeechBackend for MockBackend {
    fn recognize(&self, request: &RecognitionRequest<'_>) -> Result<String, BackendError> {
        let hash = request.clip.content_hash();
        let mut state = self.state.lock().unwrap();
        state.calls.push(hash.clone());
        match self.table.get(&hash) {
            None => Err(BackendError::Rejected(format!(
                "no mock fixture for clip {hash}"
            ))),
            Some(MockEntry::Text(t)) => Ok(t.clone()),
            Some(MockEntry::Scripted {
                text,
                fail_first,
                fail,
            }) => {
                match fail {
                    Some(MockFailure::Transient) => {
                        return Err(BackendError::Transient("scripted transient failure".into()))
                    }
                    Some(MockFailure::Rejected) => {
                        return Err(BackendError::Rejected("scripted rejection".into()))
                    }
                    Some(MockFailure::Auth) => {
                        return Err(BackendError::Auth("scripted credential rejection".into()))
                    }
                    None => {}
                }
                let seen = state.failures_seen.entry(hash).or_default();
                if *seen < *fail_first {
                    *seen += 1;
                    return Err(BackendError::Transient(format!(
                        "scripted transient failure {seen}"
                    )));
                }
                Ok(text.clone().unwrap_or_default())
            }
        }
    }
}
