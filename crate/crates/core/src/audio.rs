//! Narration audio: RIFF/WAVE parsing and conversion to the recognizer profile.
//!
//! Only uncompressed integer PCM is decoded natively. Everything else is
//! handed to an external transcoder command configured by the user.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::deck::AudioRef;

/// Sample rate the recognizer expects.
pub const TARGET_SAMPLE_RATE: u32 = 16_000;
pub const TARGET_CHANNELS: u16 = 1;
pub const TARGET_BITS: u16 = 16;

const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("NotRiff: missing RIFF/WAVE magic")]
    NotRiff,
    #[error("UnsupportedEncoding: {0}")]
    UnsupportedEncoding(String),
    #[error(
        "TruncatedChunk: chunk `{chunk}` declares {declared} bytes but only {available} remain"
    )]
    TruncatedChunk {
        chunk: String,
        declared: u64,
        available: u64,
    },
    #[error("TranscoderRequired: {content_type} audio at {media_path} needs a transcoder")]
    TranscoderRequired {
        media_path: String,
        content_type: String,
    },
    #[error("TranscoderFailed: {0}")]
    TranscoderFailed(String),
    #[error("invalid transcoder template: {0}")]
    InvalidTemplate(String),
    #[error("audio I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Decoded integer PCM audio.
#[derive(Clone, PartialEq, Eq)]
pub struct PcmClip {
    pub sample_rate: u32,
    pub channels: u16,
    pub bits_per_sample: u16,
    /// Interleaved little-endian samples, exactly the `data` chunk payload.
    pub samples: Vec<u8>,
    pub duration_ms: u64,
}

impl fmt::Debug for PcmClip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PcmClip")
            .field("sample_rate", &self.sample_rate)
            .field("channels", &self.channels)
            .field("bits_per_sample", &self.bits_per_sample)
            .field("data_bytes", &self.samples.len())
            .field("duration_ms", &self.duration_ms)
            .finish()
    }
}

impl PcmClip {
    pub fn new(sample_rate: u32, channels: u16, bits_per_sample: u16, samples: Vec<u8>) -> Self {
        let duration_ms =
            pcm_duration_ms(samples.len() as u64, sample_rate, channels, bits_per_sample);
        PcmClip {
            sample_rate,
            channels,
            bits_per_sample,
            samples,
            duration_ms,
        }
    }

    pub fn is_target_profile(&self) -> bool {
        self.sample_rate == TARGET_SAMPLE_RATE
            && self.channels == TARGET_CHANNELS
            && self.bits_per_sample == TARGET_BITS
    }

    /// Hex SHA-256 of the sample payload.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(&self.samples))
    }

    /// Serialize as a canonical 44-byte-header WAV file.
    pub fn to_wav_bytes(&self) -> Vec<u8> {
        let block_align = self.channels * (self.bits_per_sample / 8);
        let byte_rate = self.sample_rate * u32::from(block_align);
        let data_len = self.samples.len() as u32;
        let mut out = Vec::with_capacity(44 + self.samples.len());
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + data_len).to_le_bytes());
        out.extend_from_slice(b"WAVEfmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
        out.extend_from_slice(&self.channels.to_le_bytes());
        out.extend_from_slice(&self.sample_rate.to_le_bytes());
        out.extend_from_slice(&byte_rate.to_le_bytes());
        out.extend_from_slice(&block_align.to_le_bytes());
        out.extend_from_slice(&self.bits_per_sample.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&data_len.to_le_bytes());
        out.extend_from_slice(&self.samples);
        out
    }
}

/// `floor(1000 * bytes / (rate * channels * bits/8))`, exact integer arithmetic.
pub fn pcm_duration_ms(data_bytes: u64, sample_rate: u32, channels: u16, bits: u16) -> u64 {
    let bytes_per_second = u64::from(sample_rate) * u64::from(channels) * u64::from(bits / 8);
    if bytes_per_second == 0 {
        return 0;
    }
    data_bytes * 1000 / bytes_per_second
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parse a RIFF/WAVE byte stream holding integer PCM.
pub fn parse_wav(bytes: &[u8]) -> Result<PcmClip, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::NotRiff);
    }
    let riff_len = u64::from(read_u32(bytes, 4));
    let available = bytes.len() as u64 - 8;
    if riff_len > available {
        return Err(AudioError::TruncatedChunk {
            chunk: "RIFF".into(),
            declared: riff_len,
            available,
        });
    }
    let end = 8 + riff_len as usize;

    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut pos = 12;
    while pos + 8 <= end {
        let id = &bytes[pos..pos + 4];
        let len = read_u32(bytes, pos + 4) as usize;
        let body = pos + 8;
        let remaining = end - body;
        if len > remaining {
            return Err(AudioError::TruncatedChunk {
                chunk: String::from_utf8_lossy(id).into_owned(),
                declared: len as u64,
                available: remaining as u64,
            });
        }
        match id {
            b"fmt " => {
                if len < 16 {
                    return Err(AudioError::UnsupportedEncoding(format!(
                        "format chunk of {len} bytes"
                    )));
                }
                let mut tag = read_u16(bytes, body);
                let channels = read_u16(bytes, body + 2);
                let rate = read_u32(bytes, body + 4);
                let bits = read_u16(bytes, body + 14);
                if tag == FORMAT_EXTENSIBLE && len >= 40 {
                    // Sub-format GUID starts with the plain format tag.
                    tag = read_u16(bytes, body + 24);
                }
                fmt = Some((tag, channels, rate, bits));
            }
            b"data" => {
                let (tag, channels, rate, bits) = fmt.ok_or_else(|| {
                    AudioError::UnsupportedEncoding("data chunk before format chunk".into())
                })?;
                if tag != FORMAT_PCM {
                    return Err(AudioError::UnsupportedEncoding(format!(
                        "format tag {tag:#06x} is not integer PCM"
                    )));
                }
                if rate == 0 || !(1..=2).contains(&channels) || !(bits == 8 || bits == 16) {
                    return Err(AudioError::UnsupportedEncoding(format!(
                        "{rate} Hz, {channels} channels, {bits} bits"
                    )));
                }
                return Ok(PcmClip::new(
                    rate,
                    channels,
                    bits,
                    bytes[body..body + len].to_vec(),
                ));
            }
            _ => {}
        }
        // Chunks are word aligned.
        pos = body + len + (len & 1);
    }
    Err(AudioError::TruncatedChunk {
        chunk: "data".into(),
        declared: 0,
        available: 0,
    })
}

/// Whether an archive content type or file header says this is a WAV file.
pub fn looks_like_wav(audio: &AudioRef) -> bool {
    let ct = audio.content_type.to_ascii_lowercase();
    ct.contains("wav") || ct.contains("wave") || audio.raw_bytes.starts_with(b"RIFF")
}

/// An external command that converts arbitrary audio into 16 kHz mono 16-bit WAV.
///
/// The template uses `{input}` and `{output}` placeholders, each exactly once,
/// and is run through `sh -c` with both paths shell-quoted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscoderSpec {
    command_template: String,
}

impl TranscoderSpec {
    pub const INPUT: &'static str = "{input}";
    pub const OUTPUT: &'static str = "{output}";

    pub fn new(template: impl Into<String>) -> Result<Self, AudioError> {
        let command_template = template.into();
        for placeholder in [Self::INPUT, Self::OUTPUT] {
            let n = command_template.matches(placeholder).count();
            if n != 1 {
                return Err(AudioError::InvalidTemplate(format!(
                    "`{placeholder}` must appear exactly once, found {n}"
                )));
            }
        }
        Ok(TranscoderSpec { command_template })
    }

    pub fn template(&self) -> &str {
        &self.command_template
    }

    pub fn expand(&self, input: &Path, output: &Path) -> String {
        self.command_template
            .replace(Self::INPUT, &shell_quote(&input.to_string_lossy()))
            .replace(Self::OUTPUT, &shell_quote(&output.to_string_lossy()))
    }

    fn run(&self, input: &Path, output: &Path) -> Result<PcmClip, AudioError> {
        let command = self.expand(input, output);
        log::debug!("running transcoder: {command}");
        let result = Command::new("sh").arg("-c").arg(&command).output()?;
        if !result.status.success() {
            return Err(AudioError::TranscoderFailed(format!(
                "`{command}` exited with {}: {}",
                result.status,
                String::from_utf8_lossy(&result.stderr).trim()
            )));
        }
        let bytes = std::fs::read(output).map_err(|e| {
            AudioError::TranscoderFailed(format!("no output at {}: {e}", output.display()))
        })?;
        let clip = parse_wav(&bytes)
            .map_err(|e| AudioError::TranscoderFailed(format!("unparsable output: {e}")))?;
        if !clip.is_target_profile() {
            return Err(AudioError::TranscoderFailed(format!(
                "output is {} Hz, {} channels, {} bits; expected 16000 Hz mono 16-bit",
                clip.sample_rate, clip.channels, clip.bits_per_sample
            )));
        }
        Ok(clip)
    }
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

fn extension_for(audio: &AudioRef) -> &str {
    Path::new(&audio.media_path)
        .extension()
        .and_then(|e| e.to_str())
        .filter(|e| e.chars().all(|c| c.is_ascii_alphanumeric()))
        .unwrap_or("bin")
}

struct TempFiles(Vec<PathBuf>);

impl Drop for TempFiles {
    fn drop(&mut self) {
        for p in &self.0 {
            let _ = std::fs::remove_file(p);
        }
    }
}

/// Produce a clip in the recognizer profile, transcoding when necessary.
///
/// `slot` distinguishes temp files of concurrent calls sharing `workdir`.
pub fn ensure_recognizer_format(
    audio: &AudioRef,
    transcoder: Option<&TranscoderSpec>,
    workdir: &Path,
    slot: usize,
) -> Result<PcmClip, AudioError> {
    let reason = if looks_like_wav(audio) {
        match parse_wav(&audio.raw_bytes) {
            Ok(clip) if clip.is_target_profile() => return Ok(clip),
            Ok(clip) => format!(
                "{} Hz, {} channels, {} bits",
                clip.sample_rate, clip.channels, clip.bits_per_sample
            ),
            Err(AudioError::UnsupportedEncoding(why)) => why,
            Err(e) => return Err(e),
        }
    } else {
        audio.content_type.clone()
    };
    let Some(transcoder) = transcoder else {
        return Err(AudioError::TranscoderRequired {
            media_path: audio.media_path.clone(),
            content_type: reason,
        });
    };
    std::fs::create_dir_all(workdir)?;
    let input = workdir.join(format!("slide-{slot}-in.{}", extension_for(audio)));
    let output = workdir.join(format!("slide-{slot}-out.wav"));
    let _cleanup = TempFiles(vec![input.clone(), output.clone()]);
    let _ = std::fs::remove_file(&output);
    std::fs::write(&input, &audio.raw_bytes)?;
    transcoder.run(&input, &output)
}
