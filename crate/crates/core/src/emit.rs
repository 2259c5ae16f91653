//! Publication formats: Markdown transcript, video chapter list, WebVTT cues
//! and plain caption text recovered from a (possibly hand-corrected)
//! Markdown transcript.

use std::fmt::Write as _;

use thiserror::Error;

use crate::transcribe::{SegmentSource, TranscriptSegment};

/// Paragraph written in place of a segment whose recognition failed.
pub const FAILED_PLACEHOLDER: &str = "[transcription failed]";

/// The video platform ignores chapters shorter than this.
pub const MIN_CHAPTER_MS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("MissingDuration: slide {export_index} has no duration and no fallback was given")]
    MissingDuration { export_index: u32 },
    #[error("NotTranscriptLayout: line {line}: {content:?}")]
    NotTranscriptLayout { line: usize, content: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TranscriptDoc {
    pub lecture_title: String,
    pub preamble: String,
    pub segments: Vec<TranscriptSegment>,
}

impl TranscriptDoc {
    /// Copy with every missing segment duration set to `fallback_ms`.
    pub fn with_fallback_duration(&self, fallback_ms: u64) -> TranscriptDoc {
        let mut doc = self.clone();
        for s in &mut doc.segments {
            s.duration_ms.get_or_insert(fallback_ms);
        }
        doc
    }

    pub fn total_duration_ms(&self) -> Option<u64> {
        self.segments.iter().map(|s| s.duration_ms).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChapterMark {
    pub offset_ms: u64,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChapterList {
    pub marks: Vec<ChapterMark>,
    pub warnings: Vec<String>,
}

fn display_title(seg: &TranscriptSegment) -> String {
    let title = seg.title.split_whitespace().collect::<Vec<_>>().join(" ");
    if title.is_empty() {
        format!("Slide {}", seg.export_index)
    } else {
        title
    }
}

/// Chapter `k` starts at the summed durations of segments `1..k`.
///
/// A zero-length slide before the last would repeat an offset; its mark is
/// dropped with a warning so offsets stay strictly increasing.
pub fn chapter_marks(
    doc: &TranscriptDoc,
    gap_fallback_ms: Option<u64>,
) -> Result<ChapterList, EmitError> {
    let mut list = ChapterList::default();
    let mut offset = 0u64;
    let last = doc.segments.len().saturating_sub(1);
    for (i, seg) in doc.segments.iter().enumerate() {
        let duration = seg
            .duration_ms
            .or(gap_fallback_ms)
            .ok_or(EmitError::MissingDuration {
                export_index: seg.export_index,
            })?;
        if duration == 0 && i != last {
            list.warnings.push(format!(
                "slide {} has zero duration; no chapter emitted for it",
                seg.export_index
            ));
            continue;
        }
        if duration < MIN_CHAPTER_MS {
            list.warnings.push(format!(
                "slide {} runs {} ms, below the {} s minimum chapter length",
                seg.export_index,
                duration,
                MIN_CHAPTER_MS / 1000
            ));
        }
        list.marks.push(ChapterMark {
            offset_ms: offset,
            label: format!("{} - {}", seg.export_index, display_title(seg)),
        });
        offset += duration;
    }
    Ok(list)
}

/// `M:SS` below one hour, `H:MM:SS` from there on; milliseconds are floored.
pub fn format_chapter_timestamp(offset_ms: u64) -> String {
    let secs = offset_ms / 1000;
    if secs < 3600 {
        format!("{}:{:02}", secs / 60, secs % 60)
    } else {
        format!("{}:{:02}:{:02}", secs / 3600, secs / 60 % 60, secs % 60)
    }
}

pub fn render_chapters(marks: &ChapterList) -> String {
    let mut out = String::new();
    for m in &marks.marks {
        let _ = writeln!(out, "{} {}", format_chapter_timestamp(m.offset_ms), m.label);
    }
    out
}

/// Read a chapter list back; offsets come out in whole seconds (as ms).
pub fn parse_chapters(text: &str) -> Option<Vec<ChapterMark>> {
    text.lines()
        .map(|line| {
            let (stamp, label) = line.split_once(' ')?;
            let parts: Vec<u64> = stamp
                .split(':')
                .map(|p| p.parse().ok())
                .collect::<Option<_>>()?;
            let secs = match parts.as_slice() {
                [m, s] if *s < 60 => m * 60 + s,
                [h, m, s] if *m < 60 && *s < 60 => h * 3600 + m * 60 + s,
                _ => return None,
            };
            Some(ChapterMark {
                offset_ms: secs * 1000,
                label: label.to_string(),
            })
        })
        .collect()
}

fn seconds_phrase(ms: u64) -> String {
    match ms / 1000 {
        1 => "1 second".to_string(),
        n => format!("{n} seconds"),
    }
}

fn paragraph_of(seg: &TranscriptSegment) -> Option<&str> {
    match &seg.source {
        SegmentSource::Failed(_) => Some(FAILED_PLACEHOLDER),
        _ => {
            let t = seg.text.trim();
            (!t.is_empty()).then_some(t)
        }
    }
}

pub fn render_markdown(doc: &TranscriptDoc) -> String {
    let title = doc.lecture_title.trim();
    let mut out = format!(
        "# {}\n",
        if title.is_empty() {
            "Transcript"
        } else {
            title
        }
    );
    let preamble = doc.preamble.trim();
    if !preamble.is_empty() {
        let _ = write!(out, "\n*{preamble}*\n");
    }
    for seg in &doc.segments {
        let _ = write!(out, "\n## {}. {}\n", seg.export_index, display_title(seg));
        if let Some(p) = paragraph_of(seg) {
            let _ = write!(out, "\n{p}\n");
        }
        if let Some(ms) = seg.duration_ms {
            let _ = write!(out, "\n*{}*\n", seconds_phrase(ms));
        }
    }
    out
}

/// ATX heading level of a line, if it is one.
fn heading_level(line: &str) -> Option<usize> {
    let hashes = line.chars().take_while(|&c| c == '#').count();
    if hashes == 0 || hashes > 6 {
        return None;
    }
    let rest = &line[hashes..];
    (rest.is_empty() || rest.starts_with([' ', '\t'])).then_some(hashes)
}

fn is_slide_heading(line: &str) -> bool {
    let Some(rest) = line.strip_prefix("## ") else {
        return false;
    };
    let digits = rest.chars().take_while(char::is_ascii_digit).count();
    digits > 0 && rest[digits..].starts_with('.')
}

fn is_italic_line(line: &str) -> bool {
    let l = line.trim();
    l.len() >= 3
        && ((l.starts_with('*') && l.ends_with('*') && !l.starts_with("**"))
            || (l.starts_with('_') && l.ends_with('_') && !l.starts_with("__")))
}

fn is_duration_line(line: &str) -> bool {
    let l = line.trim();
    let Some(inner) = l
        .strip_prefix('*')
        .and_then(|s| s.strip_suffix('*'))
        .or_else(|| l.strip_prefix('_').and_then(|s| s.strip_suffix('_')))
    else {
        return false;
    };
    let Some((n, unit)) = inner.trim().split_once(' ') else {
        return false;
    };
    !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) && matches!(unit, "seconds" | "second")
}

/// Narration text of a transcript: headings, preamble, duration lines and
/// failure placeholders removed, paragraphs separated by one blank line.
pub fn markdown_to_caption_text(markdown: &str) -> Result<String, EmitError> {
    let bad = |line: usize, content: &str| EmitError::NotTranscriptLayout {
        line,
        content: content.to_string(),
    };
    let mut paragraphs: Vec<String> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut seen_h1 = false;
    let mut in_section = false;

    let flush = |current: &mut Vec<&str>, paragraphs: &mut Vec<String>| {
        if !current.is_empty() {
            let p = current.join("\n");
            if p.trim() != FAILED_PLACEHOLDER {
                paragraphs.push(p);
            }
            current.clear();
        }
    };

    for (i, raw) in markdown.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() {
            flush(&mut current, &mut paragraphs);
            continue;
        }
        if !seen_h1 {
            if heading_level(line) == Some(1) {
                seen_h1 = true;
                continue;
            }
            return Err(bad(n, line));
        }
        if let Some(level) = heading_level(line) {
            if level == 2 && is_slide_heading(line) {
                flush(&mut current, &mut paragraphs);
                in_section = true;
                continue;
            }
            return Err(bad(n, line));
        }
        if !in_section {
            if is_italic_line(line) {
                continue;
            }
            return Err(bad(n, line));
        }
        if is_duration_line(line) && current.is_empty() {
            continue;
        }
        current.push(line);
    }
    flush(&mut current, &mut paragraphs);
    if !seen_h1 {
        return Err(bad(1, markdown.lines().next().unwrap_or_default()));
    }
    Ok(paragraphs.join("\n\n"))
}

/// `HH:MM:SS.mmm`.
pub fn format_cue_timestamp(ms: u64) -> String {
    format!(
        "{:02}:{:02}:{:02}.{:03}",
        ms / 3_600_000,
        ms / 60_000 % 60,
        ms / 1000 % 60,
        ms % 1000
    )
}

fn cue_payload(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.replace("-->", "->"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// WebVTT with one cue per slide spanning its display time. Slides with no
/// recognized text (empty or failed) advance the clock but produce no cue.
pub fn render_cues(doc: &TranscriptDoc) -> Result<String, EmitError> {
    let mut out = String::from("WEBVTT\n");
    let mut offset = 0u64;
    for seg in &doc.segments {
        let duration = seg.duration_ms.ok_or(EmitError::MissingDuration {
            export_index: seg.export_index,
        })?;
        let end = offset + duration;
        if seg.source == SegmentSource::Recognized {
            let payload = cue_payload(&seg.text);
            if !payload.is_empty() && duration > 0 {
                let _ = write!(
                    out,
                    "\n{}\n{} --> {}\n{}\n",
                    seg.export_index,
                    format_cue_timestamp(offset),
                    format_cue_timestamp(end),
                    payload
                );
            }
        }
        offset = end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(i: u32, title: &str, text: &str, secs: Option<u64>) -> TranscriptSegment {
        TranscriptSegment {
            export_index: i,
            title: title.into(),
            text: text.into(),
            duration_ms: secs.map(|s| s * 1000),
            source: if text.is_empty() {
                SegmentSource::Empty
            } else {
                SegmentSource::Recognized
            },
        }
    }

    fn doc(segments: Vec<TranscriptSegment>) -> TranscriptDoc {
        TranscriptDoc {
            lecture_title: "Week 3 - Learning to Rank".into(),
            preamble: "Captions generated automatically".into(),
            segments,
        }
    }

    #[test]
    fn chapter_offsets_are_prefix_sums() {
        let d = doc(vec![
            seg(1, "Intro", "a", Some(30)),
            seg(2, "BM25", "b", Some(95)),
            seg(3, "nDCG", "c", Some(61)),
        ]);
        let marks = chapter_marks(&d, None).unwrap();
        assert_eq!(
            render_chapters(&marks),
            "0:00 1 - Intro\n0:30 2 - BM25\n2:05 3 - nDCG\n"
        );
        assert!(marks.warnings.is_empty());
    }

    #[test]
    fn single_segment_single_mark() {
        let marks = chapter_marks(&doc(vec![seg(1, "", "", Some(3))]), None).unwrap();
        assert_eq!(marks.marks.len(), 1);
        assert_eq!(marks.marks[0].offset_ms, 0);
        assert_eq!(marks.marks[0].label, "1 - Slide 1");
        assert_eq!(marks.warnings.len(), 1, "short-slide warning");
    }

    #[test]
    fn hour_rollover() {
        let d = doc(vec![
            seg(1, "a", "", Some(1800)),
            seg(2, "b", "", Some(1800)),
            seg(3, "c", "", Some(61)),
            seg(42, "Summary", "", Some(10)),
        ]);
        let marks = chapter_marks(&d, None).unwrap();
        assert_eq!(marks.marks[3].offset_ms, 3_661_000);
        let text = render_chapters(&marks);
        assert!(text.ends_with("1:01:01 42 - Summary\n"), "{text}");
        assert!(text.contains("\n30:00 2 - b\n"));
    }

    #[test]
    fn timestamp_flooring() {
        assert_eq!(format_chapter_timestamp(0), "0:00");
        assert_eq!(format_chapter_timestamp(125_900), "2:05");
        assert_eq!(format_chapter_timestamp(3_599_999), "59:59");
        assert_eq!(format_chapter_timestamp(3_600_000), "1:00:00");
        assert_eq!(format_chapter_timestamp(3_661_000), "1:01:01");
    }

    #[test]
    fn missing_duration_names_slide() {
        let d = doc(vec![seg(1, "a", "", Some(10)), seg(2, "b", "", None)]);
        assert_eq!(
            chapter_marks(&d, None),
            Err(EmitError::MissingDuration { export_index: 2 })
        );
        let marks = chapter_marks(&d, Some(20_000)).unwrap();
        assert_eq!(marks.marks[1].offset_ms, 10_000);
        assert!(matches!(
            render_cues(&d),
            Err(EmitError::MissingDuration { export_index: 2 })
        ));
    }

    #[test]
    fn zero_length_slide_is_skipped() {
        let d = doc(vec![
            seg(1, "a", "", Some(20)),
            seg(2, "b", "", Some(0)),
            seg(3, "c", "", Some(20)),
        ]);
        let marks = chapter_marks(&d, None).unwrap();
        let offsets: Vec<u64> = marks.marks.iter().map(|m| m.offset_ms).collect();
        assert_eq!(offsets, vec![0, 20_000]);
        assert_eq!(marks.marks[1].label, "3 - c");
    }

    #[test]
    fn markdown_segment_layout() {
        let d = doc(vec![seg(
            3,
            "Evaluation",
            "We now measure quality.",
            Some(95),
        )]);
        let md = render_markdown(&d);
        assert!(md.ends_with("## 3. Evaluation\n\nWe now measure quality.\n\n*95 seconds*\n"));
    }

    #[test]
    fn markdown_empty_doc() {
        assert_eq!(
            render_markdown(&doc(vec![])),
            "# Week 3 - Learning to Rank\n\n*Captions generated automatically*\n"
        );
    }

    #[test]
    fn failed_segment_placeholder() {
        let mut s = seg(1, "", "", Some(5));
        s.source = SegmentSource::Failed("boom".into());
        let md = render_markdown(&doc(vec![s]));
        assert!(md.contains("## 1. Slide 1\n\n[transcription failed]\n\n*5 seconds*\n"));
        assert_eq!(markdown_to_caption_text(&md).unwrap(), "");
    }

    #[test]
    fn captions_from_edited_transcript() {
        let md = "# L\n\n*pre*\n\n## 1. A\n\nFixed BERT text,\nsecond line.\n\n*30 seconds*\n\n## 2. B\n\nMore.\n";
        assert_eq!(
            markdown_to_caption_text(md).unwrap(),
            "Fixed BERT text,\nsecond line.\n\nMore."
        );
    }

    #[test]
    fn captions_reject_foreign_layouts() {
        let err = markdown_to_caption_text("# L\n\n## 1. A\n\n#### Deep\n").unwrap_err();
        assert_eq!(
            err,
            EmitError::NotTranscriptLayout {
                line: 5,
                content: "#### Deep".into()
            }
        );
        assert!(markdown_to_caption_text("# Project\n\n## Install\n\nrun it\n").is_err());
        assert!(markdown_to_caption_text("plain text\n").is_err());
        assert!(markdown_to_caption_text("").is_err());
    }

    #[test]
    fn cue_layout() {
        let d = doc(vec![
            seg(1, "a", "Hello.", Some(30)),
            seg(2, "b", "World.", Some(5)),
        ]);
        assert_eq!(
            render_cues(&d).unwrap(),
            "WEBVTT\n\n1\n00:00:00.000 --> 00:00:30.000\nHello.\n\n2\n00:00:30.000 --> 00:00:35.000\nWorld.\n"
        );
        assert_eq!(render_cues(&doc(vec![])).unwrap(), "WEBVTT\n");
        assert_eq!(format_cue_timestamp(3_723_004), "01:02:03.004");
    }

    #[test]
    fn chapter_parse_back() {
        let parsed = parse_chapters("0:00 1 - Intro\n1:01:01 42 - Summary\n").unwrap();
        assert_eq!(parsed[1].offset_ms, 3_661_000);
        assert_eq!(parsed[1].label, "42 - Summary");
        assert!(parse_chapters("0:61 x").is_none());
    }
}
