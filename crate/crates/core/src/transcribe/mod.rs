//! Per-slide speech recognition seeded with phrase hints from slide text.

mod cache;
mod mock;
mod pacing;
mod rest;

use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{CacheKey, SegmentCache, CACHE_FILE};
pub use mock::{MockBackend, MockEntry, MockFailure};
pub use pacing::{Clock, RateLimiter, SystemClock, VirtualClock};
pub use rest::{interpret_response, request_body, RestBackend};

use crate::audio::{self, PcmClip, TranscoderSpec};
use crate::deck::{Deck, Slide};
use crate::emit::TranscriptDoc;

pub const DEFAULT_HINT_CAP: usize = 500;
pub const DEFAULT_LANGUAGE: &str = "en-US";
pub const DEFAULT_JOBS: usize = 2;

/// Vocabulary suggestions sent along with every recognition request.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhraseHints {
    pub words: Vec<String>,
}

impl PhraseHints {
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Hex SHA-256 over the newline-joined words.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.words.join("\n").as_bytes()))
    }
}

/// Whitespace tokens stripped of surrounding punctuation; interior
/// punctuation such as the hyphen in `re-ranking` stays put.
pub fn mine_hints_from_text<'t>(
    texts: impl IntoIterator<Item = &'t str>,
    cap: usize,
) -> PhraseHints {
    let mut words: Vec<String> = Vec::new();
    for text in texts {
        for raw in text.split_whitespace() {
            if words.len() >= cap {
                return PhraseHints { words };
            }
            let token = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if token.chars().count() < 2 || words.iter().any(|w| w == token) {
                continue;
            }
            words.push(token.to_string());
        }
    }
    PhraseHints { words }
}

/// One deck-wide hint list built from every slide's title and body.
pub fn mine_hints(slides: &[Slide], cap: usize) -> PhraseHints {
    mine_hints_from_text(
        slides
            .iter()
            .flat_map(|s| [s.title.as_str(), s.body_text.as_str()]),
        cap,
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentSource {
    Recognized,
    Empty,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptSegment {
    pub export_index: u32,
    pub title: String,
    pub text: String,
    pub duration_ms: Option<u64>,
    pub source: SegmentSource,
}

impl TranscriptSegment {
    pub fn is_failed(&self) -> bool {
        matches!(self.source, SegmentSource::Failed(_))
    }
}

#[derive(Clone)]
pub struct BackendConfig {
    pub endpoint: String,
    pub api_key: String,
    pub language: String,
    pub max_retries: u32,
    pub requests_per_minute: u32,
    /// First retry delay; doubles on every further retry.
    pub backoff_base: Duration,
}

impl std::fmt::Debug for BackendConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BackendConfig")
            .field("endpoint", &self.endpoint)
            .field("api_key", &"<redacted>")
            .field("language", &self.language)
            .field("max_retries", &self.max_retries)
            .field("requests_per_minute", &self.requests_per_minute)
            .finish()
    }
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: String::new(),
            api_key: String::new(),
            language: DEFAULT_LANGUAGE.to_string(),
            max_retries: 3,
            requests_per_minute: 20,
            backoff_base: Duration::from_millis(500),
        }
    }
}

pub struct RecognitionRequest<'a> {
    pub clip: &'a PcmClip,
    pub hints: &'a PhraseHints,
    pub language: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    /// Credential rejected; never retried.
    #[error("credential rejected: {0}")]
    Auth(String),
    /// Worth retrying.
    #[error("transient failure: {0}")]
    Transient(String),
    /// The request itself is bad; retrying will not help.
    #[error("request rejected: {0}")]
    Rejected(String),
}

pub trait SpeechBackend: Send + Sync {
    fn recognize(&self, request: &RecognitionRequest<'_>) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecognizeError {
    #[error("AuthFailed: {0}")]
    AuthFailed(String),
    #[error("RecognitionFailed after {attempts} attempt(s): {last}")]
    RecognitionFailed { attempts: u32, last: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recognition {
    pub text: String,
    /// `Empty` for silent clips, `Recognized` otherwise.
    pub source: SegmentSource,
    pub attempts: u32,
}

fn backoff_delay(base: Duration, retry: u32) -> Duration {
    base.saturating_mul(1u32 << retry.min(16))
        .min(Duration::from_secs(60))
}

/// Recognize one clip, retrying transient failures with exponential backoff.
pub fn recognize(
    clip: &PcmClip,
    hints: &PhraseHints,
    config: &BackendConfig,
    backend: &dyn SpeechBackend,
    limiter: &RateLimiter,
) -> Result<Recognition, RecognizeError> {
    if clip.duration_ms == 0 {
        return Ok(Recognition {
            text: String::new(),
            source: SegmentSource::Empty,
            attempts: 0,
        });
    }
    let request = RecognitionRequest {
        clip,
        hints,
        language: &config.language,
    };
    let mut attempts = 0;
    loop {
        limiter.acquire();
        attempts += 1;
        match backend.recognize(&request) {
            Ok(text) => {
                let text = text.trim().to_string();
                let source = if text.is_empty() {
                    SegmentSource::Empty
                } else {
                    SegmentSource::Recognized
                };
                return Ok(Recognition {
                    text,
                    source,
                    attempts,
                });
            }
            Err(BackendError::Auth(why)) => return Err(RecognizeError::AuthFailed(why)),
            Err(BackendError::Rejected(why)) => {
                return Err(RecognizeError::RecognitionFailed {
                    attempts,
                    last: why,
                })
            }
            Err(BackendError::Transient(why)) => {
                if attempts > config.max_retries {
                    return Err(RecognizeError::RecognitionFailed {
                        attempts,
                        last: why,
                    });
                }
                log::debug!("attempt {attempts} failed ({why}), backing off");
                limiter
                    .clock()
                    .sleep(backoff_delay(config.backoff_base, attempts - 1));
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum TranscribeError {
    #[error("slide {export_index}: {source}")]
    AuthFailed {
        export_index: u32,
        source: RecognizeError,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TranscribeStats {
    pub backend_calls: usize,
    pub cache_hits: usize,
    pub recognized: usize,
    pub empty: usize,
    pub failed: usize,
}

/// Everything needed to transcribe a deck.
pub struct Transcriber<'a> {
    pub config: &'a BackendConfig,
    pub backend: &'a dyn SpeechBackend,
    pub limiter: &'a RateLimiter,
    pub transcoder: Option<&'a TranscoderSpec>,
    pub cache: Option<&'a SegmentCache>,
    pub workdir: &'a Path,
    pub jobs: usize,
    pub hint_cap: usize,
    pub preamble: String,
}

impl<'a> Transcriber<'a> {
    pub fn new(
        config: &'a BackendConfig,
        backend: &'a dyn SpeechBackend,
        limiter: &'a RateLimiter,
        workdir: &'a Path,
    ) -> Self {
        Transcriber {
            config,
            backend,
            limiter,
            transcoder: None,
            cache: None,
            workdir,
            jobs: DEFAULT_JOBS,
            hint_cap: DEFAULT_HINT_CAP,
            preamble: String::new(),
        }
    }

    /// One segment per slide, in export order.
    ///
    /// Only a rejected credential aborts the run; every other failure is
    /// recorded on its segment.
    pub fn transcribe_deck(
        &self,
        deck: &Deck,
    ) -> Result<(TranscriptDoc, TranscribeStats), TranscribeError> {
        let hints = mine_hints(&deck.slides, self.hint_cap);
        let hints_hash = hints.hash();
        let n = deck.slides.len();
        let results: Vec<Mutex<Option<TranscriptSegment>>> =
            (0..n).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let auth_error: Mutex<Option<TranscribeError>> = Mutex::new(None);
        let calls = AtomicUsize::new(0);
        let hits = AtomicUsize::new(0);

        let worker = || loop {
            if abort.load(Ordering::SeqCst) {
                return;
            }
            let i = next.fetch_add(1, Ordering::SeqCst);
            if i >= n {
                return;
            }
            let slide = &deck.slides[i];
            match self.transcribe_slide(slide, &hints, &hints_hash, &calls, &hits) {
                Ok(seg) => *results[i].lock().unwrap() = Some(seg),
                Err(e) => {
                    abort.store(true, Ordering::SeqCst);
                    auth_error.lock().unwrap().get_or_insert(e);
                    return;
                }
            }
        };
        let jobs = self.jobs.clamp(1, n.max(1));
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(worker);
            }
        });
        if let Some(e) = auth_error.into_inner().unwrap() {
            return Err(e);
        }

        let segments: Vec<TranscriptSegment> = results
            .into_iter()
            .map(|m| m.into_inner().unwrap().expect("every slide processed"))
            .collect();
        let mut stats = TranscribeStats {
            backend_calls: calls.into_inner(),
            cache_hits: hits.into_inner(),
            ..Default::default()
        };
        for s in &segments {
            match s.source {
                SegmentSource::Recognized => stats.recognized += 1,
                SegmentSource::Empty => stats.empty += 1,
                SegmentSource::Failed(_) => stats.failed += 1,
            }
        }
        Ok((
            TranscriptDoc {
                lecture_title: deck.title.clone(),
                preamble: self.preamble.clone(),
                segments,
            },
            stats,
        ))
    }

    fn transcribe_slide(
        &self,
        slide: &Slide,
        hints: &PhraseHints,
        hints_hash: &str,
        calls: &AtomicUsize,
        hits: &AtomicUsize,
    ) -> Result<TranscriptSegment, TranscribeError> {
        let segment = |text: String, source: SegmentSource| TranscriptSegment {
            export_index: slide.export_index,
            title: slide.title.clone(),
            text,
            duration_ms: slide.duration_ms,
            source,
        };
        let Some(narration) = &slide.narration else {
            return Ok(segment(String::new(), SegmentSource::Empty));
        };
        let key = CacheKey {
            hash: hex::encode(Sha256::digest(&narration.raw_bytes)),
            language: self.config.language.clone(),
            hints_hash: hints_hash.to_string(),
        };
        if let Some(text) = self.cache.and_then(|c| c.get(&key)) {
            hits.fetch_add(1, Ordering::SeqCst);
            return Ok(segment(text, SegmentSource::Recognized));
        }
        let clip = match audio::ensure_recognizer_format(
            narration,
            self.transcoder,
            self.workdir,
            slide.export_index as usize,
        ) {
            Ok(clip) => clip,
            Err(e) => {
                log::warn!("slide {}: {e}", slide.export_index);
                return Ok(segment(String::new(), SegmentSource::Failed(e.to_string())));
            }
        };
        let outcome = recognize(&clip, hints, self.config, self.backend, self.limiter);
        match outcome {
            Ok(r) => {
                calls.fetch_add(r.attempts as usize, Ordering::SeqCst);
                if r.source == SegmentSource::Recognized {
                    if let Some(cache) = self.cache {
                        if let Err(e) = cache.insert(key, r.text.clone()) {
                            log::warn!("cache write failed: {e}");
                        }
                    }
                }
                Ok(segment(r.text, r.source))
            }
            Err(RecognizeError::RecognitionFailed { attempts, last }) => {
                calls.fetch_add(attempts as usize, Ordering::SeqCst);
                let e = RecognizeError::RecognitionFailed { attempts, last };
                log::warn!("slide {}: {e}", slide.export_index);
                Ok(segment(String::new(), SegmentSource::Failed(e.to_string())))
            }
            Err(e @ RecognizeError::AuthFailed(_)) => {
                calls.fetch_add(1, Ordering::SeqCst);
                Err(TranscribeError::AuthFailed {
                    export_index: slide.export_index,
                    source: e,
                })
            }
        }
    }
}
