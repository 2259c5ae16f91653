//! Fixture writers shared by the slidescribe test suites.
//!
//! Everything here is written directly against the container and RIFF
//! layouts, without going through the parsers under test, so the files it
//! produces can serve as independent oracles.

use std::io::{Cursor, Write};

use zip::write::SimpleFileOptions;
use zip::ZipWriter;

const NS_P: &str = "http://schemas.openxmlformats.org/presentationml/2006/main";
const NS_A: &str = "http://schemas.openxmlformats.org/drawingml/2006/main";
const NS_R: &str = "http://schemas.openxmlformats.org/officeDocument/2006/relationships";
const NS_P14: &str = "http://schemas.microsoft.com/office/powerpoint/2010/main";

const REL_SLIDE: &str = "http://schemas.openxmlformats.org/officeDocument/2006/relationships/slide";
const REL_AUDIO: &str = "http://schemas.openxmlformats.org/officeDocument/2006/relationships/audio";
const REL_MEDIA: &str = "http://schemas.microsoft.com/office/2007/relationships/media";
const REL_NOTES: &str =
    "http://schemas.openxmlformats.org/officeDocument/2006/relationships/notesSlide";

/// Writes a canonical little-endian PCM WAV file.
pub fn wav_bytes(sample_rate: u32, channels: u16, bits: u16, data: &[u8]) -> Vec<u8> {
    WavSpec::pcm(sample_rate, channels, bits).write(data)
}

/// A WAV whose data chunk is `data_len` bytes of a deterministic pattern.
pub fn wav_of_len(sample_rate: u32, channels: u16, bits: u16, data_len: usize) -> Vec<u8> {
    wav_bytes(
        sample_rate,
        channels,
        bits,
        &pattern(data_len, sample_rate as u64),
    )
}

/// Deterministic filler bytes; distinct seeds give distinct content.
pub fn pattern(len: usize, seed: u64) -> Vec<u8> {
    let mut state = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    (0..len)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) as u8
        })
        .collect()
}

/// A WAV writer with knobs for malformed and unusual layouts.
#[derive(Debug, Clone)]
pub struct WavSpec {
    pub format_tag: u16,
    pub sample_rate: u32,
    pub channels: u16,
    pub bits: u16,
    /// Emit a `LIST` chunk between `fmt ` and `data`.
    pub list_chunk: bool,
    /// Overrides the declared data chunk length.
    pub declared_data_len: Option<u32>,
}

impl WavSpec {
    pub fn pcm(sample_rate: u32, channels: u16, bits: u16) -> Self {
        WavSpec {
            format_tag: 1,
            sample_rate,
            channels,
            bits,
            list_chunk: false,
            declared_data_len: None,
        }
    }

    pub fn write(&self, data: &[u8]) -> Vec<u8> {
        let block_align = self.channels * (self.bits / 8);
        let byte_rate = self.sample_rate * block_align as u32;
        let mut body = Vec::new();
        body.extend_from_slice(b"WAVE");
        body.extend_from_slice(b"fmt ");
        body.extend_from_slice(&16u32.to_le_bytes());
        body.extend_from_slice(&self.format_tag.to_le_bytes());
        body.extend_from_slice(&self.channels.to_le_bytes());
        body.extend_from_slice(&self.sample_rate.to_le_bytes());
        body.extend_from_slice(&byte_rate.to_le_bytes());
        body.extend_from_slice(&block_align.to_le_bytes());
        body.extend_from_slice(&self.bits.to_le_bytes());
        if self.list_chunk {
            // Odd-sized chunk to exercise the pad byte.
            let info = b"INFOISFT\x05\0\0\0test\0";
            body.extend_from_slice(b"LIST");
            body.extend_from_slice(&(info.len() as u32).to_le_bytes());
            body.extend_from_slice(info);
            if info.len() % 2 == 1 {
                body.push(0);
            }
        }
        body.extend_from_slice(b"data");
        let declared = self.declared_data_len.unwrap_or(data.len() as u32);
        body.extend_from_slice(&declared.to_le_bytes());
        body.extend_from_slice(data);
        let mut out = Vec::with_capacity(body.len() + 8);
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(body.len() as u32).to_le_bytes());
        out.extend_from_slice(&body);
        out
    }
}

/// An embedded narration clip.
#[derive(Debug, Clone)]
pub struct Narration {
    pub bytes: Vec<u8>,
    pub extension: String,
    pub content_type: String,
}

impl Narration {
    pub fn wav(bytes: Vec<u8>) -> Self {
        Narration {
            bytes,
            extension: "wav".into(),
            content_type: "audio/wav".into(),
        }
    }

    /// A 16 kHz mono 16-bit clip of the given length, with content seeded by `seed`.
    pub fn wav_ms(ms: u64, seed: u64) -> Self {
        let len = (ms * 32) as usize;
        Narration::wav(wav_bytes(16_000, 1, 16, &pattern(len, seed)))
    }

    pub fn m4a(bytes: Vec<u8>) -> Self {
        Narration {
            bytes,
            extension: "m4a".into(),
            content_type: "audio/mp4".into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SlideSpec {
    /// Title placeholder text; `\n` becomes a manual line break.
    pub title: Option<String>,
    /// Body paragraphs; each paragraph is a list of runs.
    pub body: Vec<Vec<String>>,
    pub hidden: bool,
    pub advance_ms: Option<u64>,
    pub narration: Option<Narration>,
    /// Additional audio shapes placed after the narration.
    pub extra_audio: Vec<Narration>,
    /// Speaker notes, written to a separate notes part.
    pub notes: Option<String>,
}

impl SlideSpec {
    pub fn titled(title: &str) -> Self {
        SlideSpec {
            title: Some(title.to_string()),
            ..Default::default()
        }
    }

    pub fn body(mut self, paragraphs: &[&str]) -> Self {
        self.body = paragraphs.iter().map(|p| vec![p.to_string()]).collect();
        self
    }

    pub fn hidden(mut self) -> Self {
        self.hidden = true;
        self
    }

    pub fn advance(mut self, ms: u64) -> Self {
        self.advance_ms = Some(ms);
        self
    }

    pub fn narration(mut self, n: Narration) -> Self {
        self.narration = Some(n);
        self
    }

    pub fn notes(mut self, text: &str) -> Self {
        self.notes = Some(text.to_string());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Prefixes {
    /// `p:`, `a:`, `r:` as emitted by the authoring tool.
    #[default]
    Standard,
    /// Unusual prefixes bound to the same namespace URIs.
    Unusual,
}

#[derive(Debug, Clone, Default)]
pub struct DeckBuilder {
    pub title: Option<String>,
    pub slides: Vec<SlideSpec>,
    pub prefixes: Prefixes,
    /// Number slide parts in reverse so file names disagree with manifest order.
    pub reverse_part_names: bool,
    /// Omit `[Content_Types].xml`.
    pub omit_content_types: bool,
    /// Replace the body of the given slide part (by manifest position, 0-based) with junk.
    pub corrupt_slide: Option<usize>,
}

struct Names {
    p: &'static str,
    a: &'static str,
    r: &'static str,
}

impl DeckBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn slide(mut self, slide: SlideSpec) -> Self {
        self.slides.push(slide);
        self
    }

    pub fn title(mut self, title: &str) -> Self {
        self.title = Some(title.to_string());
        self
    }

    fn names(&self) -> Names {
        match self.prefixes {
            Prefixes::Standard => Names {
                p: "p",
                a: "a",
                r: "r",
            },
            Prefixes::Unusual => Names {
                p: "pres",
                a: "dml",
                r: "rel",
            },
        }
    }

    /// Archive path of the media entry holding slide `i`'s narration.
    pub fn narration_path(&self, i: usize) -> Option<String> {
        self.slides[i]
            .narration
            .as_ref()
            .map(|n| format!("ppt/media/media{}a.{}", i + 1, n.extension))
    }

    pub fn build(&self) -> Vec<u8> {
        let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
        let opts = SimpleFileOptions::default();
        let n = self.slides.len();
        let part_number = |i: usize| {
            if self.reverse_part_names {
                n - i
            } else {
                i + 1
            }
        };

        let mut overrides = String::new();
        overrides.push_str(
            r#"<Override PartName="/ppt/presentation.xml" ContentType="application/vnd.openxmlformats-officedocument.presentationml.presentation.main+xml"/>"#,
        );
        overrides.push_str(
            r#"<Override PartName="/docProps/core.xml" ContentType="application/vnd.openxmlformats-package.core-properties+xml"/>"#,
        );
        for i in 0..n {
            overrides.push_str(&format!(
                r#"<Override PartName="/ppt/slides/slide{}.xml" ContentType="application/vnd.openxmlformats-officedocument.presentationml.slide+xml"/>"#,
                part_number(i)
            ));
        }
        // Media content types go through extension defaults.
        let mut defaults = String::from(
            r#"<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/><Default Extension="xml" ContentType="application/xml"/>"#,
        );
        let mut seen_ext: Vec<String> = Vec::new();
        for s in &self.slides {
            for a in s.narration.iter().chain(s.extra_audio.iter()) {
                if !seen_ext.contains(&a.extension) {
                    seen_ext.push(a.extension.clone());
                    defaults.push_str(&format!(
                        r#"<Default Extension="{}" ContentType="{}"/>"#,
                        a.extension, a.content_type
                    ));
                }
            }
        }
        if !self.omit_content_types {
            zip.start_file("[Content_Types].xml", opts).unwrap();
            write!(
                zip,
                r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?><Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">{defaults}{overrides}</Types>"#
            )
            .unwrap();
        }

        zip.start_file("_rels/.rels", opts).unwrap();
        zip.write_all(br#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?><Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships"><Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument" Target="ppt/presentation.xml"/><Relationship Id="rId2" Type="http://schemas.openxmlformats.org/package/2006/relationships/metadata/core-properties" Target="docProps/core.xml"/></Relationships>"#).unwrap();

        zip.start_file("docProps/core.xml", opts).unwrap();
        let title = self
            .title
            .as_ref()
            .map(|t| format!("<dc:title>{}</dc:title>", escape(t)))
            .unwrap_or_default();
        write!(zip, r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?><cp:coreProperties xmlns:cp="http://schemas.openxmlformats.org/package/2006/metadata/core-properties" xmlns:dc="http://purl.org/dc/elements/1.1/">{title}</cp:coreProperties>"#).unwrap();

        let nm = self.names();
        let mut ids = String::new();
        let mut pres_rels = String::new();
        for i in 0..n {
            ids.push_str(&format!(
                r#"<{p}:sldId id="{}" {r}:id="rId{}"/>"#,
                256 + i,
                i + 10,
                p = nm.p,
                r = nm.r
            ));
            pres_rels.push_str(&format!(
                r#"<Relationship Id="rId{}" Type="{REL_SLIDE}" Target="slides/slide{}.xml"/>"#,
                i + 10,
                part_number(i)
            ));
        }
        zip.start_file("ppt/presentation.xml", opts).unwrap();
        write!(
            zip,
            r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?><{p}:presentation xmlns:{a}="{NS_A}" xmlns:{r}="{NS_R}" xmlns:{p}="{NS_P}"><{p}:sldMasterIdLst/><{p}:sldIdLst>{ids}</{p}:sldIdLst><{p}:sldSz cx="12192000" cy="6858000"/></{p}:presentation>"#,
            p = nm.p,
            a = nm.a,
            r = nm.r
        )
        .unwrap();
        zip.start_file("ppt/_rels/presentation.xml.rels", opts)
            .unwrap();
        write!(zip, r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?><Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">{pres_rels}</Relationships>"#).unwrap();

        for (i, slide) in self.slides.iter().enumerate() {
            let num = part_number(i);
            let (xml, rels, media) = self.slide_xml(i, slide);
            zip.start_file(format!("ppt/slides/slide{num}.xml"), opts)
                .unwrap();
            if self.corrupt_slide == Some(i) {
                zip.write_all(b"<p:sld><unclosed").unwrap();
            } else {
                zip.write_all(xml.as_bytes()).unwrap();
            }
            zip.start_file(format!("ppt/slides/_rels/slide{num}.xml.rels"), opts)
                .unwrap();
            zip.write_all(rels.as_bytes()).unwrap();
            for (path, bytes) in media {
                zip.start_file(path, opts).unwrap();
                zip.write_all(&bytes).unwrap();
            }
            if let Some(notes) = &slide.notes {
                zip.start_file(format!("ppt/notesSlides/notesSlide{num}.xml"), opts)
                    .unwrap();
                write!(
                    zip,
                    r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?><p:notes xmlns:a="{NS_A}" xmlns:r="{NS_R}" xmlns:p="{NS_P}"><p:cSld><p:spTree><p:sp><p:txBody><a:p><a:r><a:t>{}</a:t></a:r></a:p></p:txBody></p:sp></p:spTree></p:cSld></p:notes>"#,
                    escape(notes)
                )
                .unwrap();
            }
        }
        zip.finish().unwrap().into_inner()
    }

    pub fn write_to(&self, path: &std::path::Path) {
        std::fs::write(path, self.build()).unwrap();
    }

    fn slide_xml(&self, i: usize, slide: &SlideSpec) -> (String, String, Vec<(String, Vec<u8>)>) {
        let Names { p, a, r } = self.names();
        let mut shapes = String::new();
        let mut rels = String::new();
        let mut media = Vec::new();
        let mut timing_targets = Vec::new();

        if let Some(title) = &slide.title {
            let mut runs = String::new();
            for (k, line) in title.split('\n').enumerate() {
                if k > 0 {
                    runs.push_str(&format!("<{a}:br/>"));
                }
                runs.push_str(&format!(
                    "<{a}:r><{a}:rPr lang=\"en-US\"/><{a}:t>{}</{a}:t></{a}:r>",
                    escape(line)
                ));
            }
            shapes.push_str(&format!(
                r#"<{p}:sp><{p}:nvSpPr><{p}:cNvPr id="2" name="Title 1"/><{p}:cNvSpPr/><{p}:nvPr><{p}:ph type="title"/></{p}:nvPr></{p}:nvSpPr><{p}:spPr/><{p}:txBody><{a}:bodyPr/><{a}:p>{runs}</{a}:p></{p}:txBody></{p}:sp>"#
            ));
        }
        if !slide.body.is_empty() {
            let mut paras = String::new();
            for para in &slide.body {
                paras.push_str(&format!("<{a}:p>"));
                for run in para {
                    paras.push_str(&format!("<{a}:r><{a}:t>{}</{a}:t></{a}:r>", escape(run)));
                }
                paras.push_str(&format!("</{a}:p>"));
            }
            shapes.push_str(&format!(
                r#"<{p}:sp><{p}:nvSpPr><{p}:cNvPr id="3" name="Content 2"/><{p}:cNvSpPr/><{p}:nvPr><{p}:ph idx="1"/></{p}:nvPr></{p}:nvSpPr><{p}:spPr/><{p}:txBody><{a}:bodyPr/>{paras}</{p}:txBody></{p}:sp>"#
            ));
        }
        let audio: Vec<&Narration> = slide
            .narration
            .iter()
            .chain(slide.extra_audio.iter())
            .collect();
        for (k, clip) in audio.iter().enumerate() {
            let shape_id = 10 + k;
            let embed = format!("rId{}", 2 * k + 2);
            let link = format!("rId{}", 2 * k + 3);
            let suffix = if k == 0 && slide.narration.is_some() {
                "a".to_string()
            } else {
                format!("x{k}")
            };
            let path = format!("ppt/media/media{}{}.{}", i + 1, suffix, clip.extension);
            let target = format!("../media/media{}{}.{}", i + 1, suffix, clip.extension);
            rels.push_str(&format!(
                r#"<Relationship Id="{embed}" Type="{REL_MEDIA}" Target="{target}"/><Relationship Id="{link}" Type="{REL_AUDIO}" Target="{target}"/>"#
            ));
            media.push((path, clip.bytes.clone()));
            shapes.push_str(&format!(
                r#"<{p}:pic><{p}:nvPicPr><{p}:cNvPr id="{shape_id}" name="Recorded Sound {k}"><{a}:hlinkClick {r}:id="" action="ppaction://media"/></{p}:cNvPr><{p}:cNvPicPr/><{p}:nvPr><{a}:audioFile {r}:link="{link}"/><{p}:extLst><{p}:ext uri="{{DAA4B4D4-6D71-4841-9C94-3DA1F8E0D3F5}}"><p14:media xmlns:p14="{NS_P14}" {r}:embed="{embed}"/></{p}:ext></{p}:extLst></{p}:nvPr></{p}:nvPicPr><{p}:blipFill/><{p}:spPr/></{p}:pic>"#
            ));
            timing_targets.push(shape_id);
        }
        if let Some(_notes) = &slide.notes {
            rels.push_str(&format!(
                r#"<Relationship Id="rId1" Type="{REL_NOTES}" Target="../notesSlides/notesSlide{}.xml"/>"#,
                if self.reverse_part_names { self.slides.len() - i } else { i + 1 }
            ));
        }

        let show = if slide.hidden { r#" show="0""# } else { "" };
        let transition = match slide.advance_ms {
            Some(ms) => format!(r#"<{p}:transition spd="slow" advClick="0" advTm="{ms}"/>"#),
            None => String::new(),
        };
        let timing = if timing_targets.is_empty() {
            String::new()
        } else {
            let mut nodes = String::new();
            for id in &timing_targets {
                nodes.push_str(&format!(
                    r#"<{p}:audio><{p}:cMediaNode vol="80000"><{p}:cTn id="{}" fill="hold" display="0"/><{p}:tgtEl><{p}:spTgt spid="{id}"/></{p}:tgtEl></{p}:cMediaNode></{p}:audio>"#,
                    id + 100
                ));
            }
            format!(
                r#"<{p}:timing><{p}:tnLst><{p}:par><{p}:cTn id="1" dur="indefinite" nodeType="tmRoot"><{p}:childTnLst>{nodes}</{p}:childTnLst></{p}:cTn></{p}:par></{p}:tnLst></{p}:timing>"#
            )
        };
        let xml = format!(
            r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?><{p}:sld xmlns:{a}="{NS_A}" xmlns:{r}="{NS_R}" xmlns:{p}="{NS_P}"{show}><{p}:cSld><{p}:spTree><{p}:nvGrpSpPr><{p}:cNvPr id="1" name=""/><{p}:cNvGrpSpPr/><{p}:nvPr/></{p}:nvGrpSpPr><{p}:grpSpPr/>{shapes}</{p}:spTree></{p}:cSld><{p}:clrMapOvr><{a}:masterClrMapping/></{p}:clrMapOvr>{transition}{timing}</{p}:sld>"#
        );
        let rels = format!(
            r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?><Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">{rels}</Relationships>"#
        );
        (xml, rels, media)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Names of all entries in a ZIP archive, in stored order.
pub fn zip_entry_names(bytes: &[u8]) -> Vec<String> {
    let archive = zip::ZipArchive::new(Cursor::new(bytes)).unwrap();
    archive.file_names().map(str::to_string).collect()
}

/// A ZIP archive with no entries.
pub fn empty_zip() -> Vec<u8> {
    ZipWriter::new(Cursor::new(Vec::new()))
        .finish()
        .unwrap()
        .into_inner()
}
