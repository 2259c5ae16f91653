//! Config file parsing and resolution of the effective run settings.
//!
//! The file is plain text, one `key = value` per line, `#` starts a comment.
//! Keys are the global flag names without dashes, e.g.
//!
//! ```text
//! language = de-DE
//! rate-limit = 10
//! transcoder = ffmpeg -y -i {input} -ac 1 -ar 16000 -sample_fmt s16 {output}
//! no-cues = true
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use slidescribe::transcribe::{DEFAULT_HINT_CAP, DEFAULT_JOBS, DEFAULT_LANGUAGE};
use thiserror::Error;

use crate::args::{BackendKind, GlobalArgs};

pub const DEFAULT_KEY_ENV: &str = "SPEECH_API_KEY";
pub const DEFAULT_RATE_LIMIT: u32 = 20;
pub const DEFAULT_MAX_RETRIES: u32 = 3;

#[derive(Debug, Error)]
pub enum SettingsError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {detail}")]
    Syntax {
        path: PathBuf,
        line: usize,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub language: String,
    pub backend: BackendKind,
    pub mock_fixtures: Option<PathBuf>,
    pub transcoder: Option<String>,
    pub jobs: usize,
    pub rate_limit: u32,
    pub hint_cap: usize,
    pub fallback_duration_ms: Option<u64>,
    pub cache_dir: Option<PathBuf>,
    pub no_cues: bool,
    pub key_env: String,
    pub endpoint: Option<String>,
    pub max_retries: u32,
    pub preamble: String,
}

impl RunConfig {
    /// Flags first, then the config file, then built-in defaults.
    pub fn resolve(flags: &GlobalArgs) -> Result<RunConfig, SettingsError> {
        let file = match &flags.config {
            Some(path) => parse_config_file(path)?,
            None => GlobalArgs::default(),
        };
        let g = merge(flags, &file);
        Ok(RunConfig {
            output_dir: g.output_dir.unwrap_or_else(|| PathBuf::from(".")),
            language: g.language.unwrap_or_else(|| DEFAULT_LANGUAGE.to_string()),
            backend: g.backend.unwrap_or(BackendKind::Rest),
            mock_fixtures: g.mock_fixtures,
            transcoder: g.transcoder,
            jobs: g.jobs.map_or(DEFAULT_JOBS, |j| j as usize),
            rate_limit: g.rate_limit.unwrap_or(DEFAULT_RATE_LIMIT),
            hint_cap: g.hint_cap.unwrap_or(DEFAULT_HINT_CAP),
            fallback_duration_ms: g.fallback_duration.map(|s| s * 1000),
            cache_dir: g.cache_dir,
            no_cues: g.no_cues,
            key_env: g.key_env.unwrap_or_else(|| DEFAULT_KEY_ENV.to_string()),
            endpoint: g.endpoint,
            max_retries: g.max_retries.unwrap_or(DEFAULT_MAX_RETRIES),
            preamble: g.preamble.unwrap_or_default(),
        })
    }
}

fn merge(flags: &GlobalArgs, file: &GlobalArgs) -> GlobalArgs {
    let f = flags.clone();
    let d = file.clone();
    GlobalArgs {
        config: f.config,
        output_dir: f.output_dir.or(d.output_dir),
        language: f.language.or(d.language),
        backend: f.backend.or(d.backend),
        mock_fixtures: f.mock_fixtures.or(d.mock_fixtures),
        transcoder: f.transcoder.or(d.transcoder),
        jobs: f.jobs.or(d.jobs),
        rate_limit: f.rate_limit.or(d.rate_limit),
        hint_cap: f.hint_cap.or(d.hint_cap),
        fallback_duration: f.fallback_duration.or(d.fallback_duration),
        cache_dir: f.cache_dir.or(d.cache_dir),
        no_cues: f.no_cues || d.no_cues,
        key_env: f.key_env.or(d.key_env),
        endpoint: f.endpoint.or(d.endpoint),
        max_retries: f.max_retries.or(d.max_retries),
        preamble: f.preamble.or(d.preamble),
    }
}

pub fn parse_config_file(path: &Path) -> Result<GlobalArgs, SettingsError> {
    let text = std::fs::read_to_string(path).map_err(|source| SettingsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(|(line, detail)| SettingsError::Syntax {
        path: path.to_path_buf(),
        line,
        detail,
    })
}

/// Relative paths in the file are taken as written, i.e. relative to the
/// working directory.
pub fn parse_config(text: &str) -> Result<GlobalArgs, (usize, String)> {
    let mut g = GlobalArgs::default();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or((n, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let err = |what: &str| (n, format!("{key}: {what} `{value}`"));
        match key {
            "output-dir" => g.output_dir = Some(value.into()),
            "language" => g.language = Some(value.into()),
            "backend" => {
                g.backend =
                    Some(BackendKind::from_str(value, true).map_err(|_| err("unknown backend"))?)
            }
            "mock-fixtures" => g.mock_fixtures = Some(value.into()),
            "transcoder" => g.transcoder = Some(value.into()),
            "jobs" => {
                g.jobs =
                    Some(positive(value).ok_or_else(|| err("expected a positive integer, got"))?)
            }
            "rate-limit" => {
                g.rate_limit =
                    Some(positive(value).ok_or_else(|| err("expected a positive integer, got"))?)
            }
            "hint-cap" => {
                g.hint_cap = Some(number(value).ok_or_else(|| err("expected an integer, got"))?)
            }
            "fallback-duration" => {
                g.fallback_duration =
                    Some(number(value).ok_or_else(|| err("expected seconds, got"))?)
            }
            "cache-dir" => g.cache_dir = Some(value.into()),
            "no-cues" => {
                g.no_cues = match value {
                    "true" | "yes" | "1" => true,
                    "false" | "no" | "0" => false,
                    _ => return Err(err("expected true or false, got")),
                }
            }
            "key-env" => g.key_env = Some(value.into()),
            "endpoint" => g.endpoint = Some(value.into()),
            "max-retries" => {
                g.max_retries = Some(number(value).ok_or_else(|| err("expected an integer, got"))?)
            }
            "preamble" => g.preamble = Some(value.into()),
            "api-key" | "key" | "speech-api-key" => {
                return Err((
                    n,
                    format!("{key}: keys are read from the environment only (see key-env)"),
                ))
            }
            _ => return Err((n, format!("unknown setting `{key}`"))),
        }
    }
    Ok(g)
}

fn number<T: FromStr>(s: &str) -> Option<T> {
    s.parse().ok()
}

fn positive(s: &str) -> Option<u32> {
    number::<u32>(s).filter(|&n| n >= 1)
}
