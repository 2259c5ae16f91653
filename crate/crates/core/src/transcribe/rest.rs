//! Generic short-audio REST recognizer.
//!
//! One `POST` per clip with a JSON body:
//!
//! ```json
//! {"language": "en-US", "phrases": ["BM25", "nDCG"],
//!  "audio": {"format": "wav", "sample_rate": 16000, "channels": 1,
//!            "bits_per_sample": 16, "content": "<base64 WAV>"}}
//! ```
//!
//! The key travels as a bearer token. A 2xx answer carries the text under
//! `text` (or `DisplayText`).

use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::{BackendConfig, BackendError, RecognitionRequest, SpeechBackend};

#[derive(Serialize)]
struct AudioPayload<'a> {
    format: &'static str,
    sample_rate: u32,
    channels: u16,
    bits_per_sample: u16,
    content: &'a str,
}

#[derive(Serialize)]
struct RequestBody<'a> {
    language: &'a str,
    phrases: &'a [String],
    audio: AudioPayload<'a>,
}

#[derive(Deserialize)]
struct ResponseBody {
    #[serde(alias = "DisplayText")]
    text: Option<String>,
    #[serde(rename = "RecognitionStatus")]
    status: Option<String>,
}

pub struct RestBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
}

impl RestBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| BackendError::Rejected(format!("http client: {e}")))?;
        Ok(RestBackend {
            client,
            endpoint: config.endpoint.clone(),
            api_key: config.api_key.clone(),
        })
    }
}

/// Encode the request body; exposed for wire-format tests.
pub fn request_body(request: &RecognitionRequest<'_>) -> String {
    let content = base64::engine::general_purpose::STANDARD.encode(request.clip.to_wav_bytes());
    serde_json::to_string(&RequestBody {
        language: request.language,
        phrases: &request.hints.words,
        audio: AudioPayload {
            format: "wav",
            sample_rate: request.clip.sample_rate,
            channels: request.clip.channels,
            bits_per_sample: request.clip.bits_per_sample,
            content: &content,
        },
    })
    .expect("request body serializes")
}

/// Map an HTTP status and body onto the backend contract.
pub fn interpret_response(status: u16, body: &str) -> Result<String, BackendError> {
    match status {
        200..=299 => {
            let parsed: ResponseBody = serde_json::from_str(body)
                .map_err(|e| BackendError::Transient(format!("unparsable response: {e}")))?;
            match parsed.status.as_deref() {
                None | Some("Success") => Ok(parsed.text.unwrap_or_default()),
                Some("NoMatch" | "InitialSilenceTimeout") => Ok(String::new()),
                Some(other) => Err(BackendError::Rejected(format!(
                    "recognition status {other}"
                ))),
            }
        }
        401 | 403 => Err(BackendError::Auth(format!(
            "HTTP {status}: {}",
            body.trim()
        ))),
        408 | 429 | 500..=599 => Err(BackendError::Transient(format!(
            "HTTP {status}: {}",
            body.trim()
        ))),
        _ => Err(BackendError::Rejected(format!(
            "HTTP {status}: {}",
            body.trim()
        ))),
    }
}

impl SpeechBackend for RestBackend {
    fn recognize(&self, request: &RecognitionRequest<'_>) -> Result<String, BackendError> {
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .header(reqwest::header::ACCEPT, "application/json")
            .body(request_body(request))
            .send()
            .map_err(|e| BackendError::Transient(format!("request failed: {e}")))?;
        let status = response.status().as_u16();
        let body = response
            .text()
            .map_err(|e| BackendError::Transient(format!("reading response: {e}")))?;
        interpret_response(status, &body)
    }
}
