//! Post-production for narrated slide decks.
//!
//! A deck recorded with per-slide narration is turned into a Markdown
//! transcript, a chapter list for the video description, WebVTT cues and
//! plain caption text. [`analyze`] measures how much of an automatic
//! transcript survived human correction.

pub mod analyze;
pub mod audio;
pub mod deck;
pub mod emit;
mod ooxml;
pub mod transcribe;

pub use analyze::{corpus_report, diff_report, tokenize, word_diff, CorpusReport, DiffReport};
pub use audio::{ensure_recognizer_format, parse_wav, AudioError, PcmClip, TranscoderSpec};
pub use deck::{open_deck, AudioRef, Deck, DeckError, DurationSource, Slide};
pub use emit::{
    chapter_marks, markdown_to_caption_text, render_chapters, render_cues, render_markdown,
    ChapterList, ChapterMark, EmitError, TranscriptDoc,
};
pub use transcribe::{
    mine_hints, recognize, BackendConfig, PhraseHints, SegmentSource, SpeechBackend, Transcriber,
    TranscriptSegment,
};
