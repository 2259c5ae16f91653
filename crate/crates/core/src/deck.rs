//! Reading narrated presentations.
//!
//! A presentation file is a ZIP container of XML parts. The slide order comes
//! from the `sldIdLst` of the presentation part, each slide part is parsed for
//! its text, its hidden flag, its advance time and the audio object carrying
//! the narration. Elements are always matched by namespace URI and local name.

use std::path::{Path, PathBuf};

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::audio;
use crate::ooxml::{
    self, ContentTypes, Package, PackageError, Relationships, CONTENT_TYPES_PART, NS_DC,
    NS_DRAWING, NS_P14, NS_PRESENTATION, NS_RELATIONSHIPS, REL_AUDIO, REL_CORE_PROPERTIES,
    REL_MEDIA, REL_OFFICE_DOCUMENT,
};

#[derive(Debug, Error)]
pub enum DeckError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("NotAnArchive: {0}")]
    NotAnArchive(String),
    #[error("NotAPresentation: {0}")]
    NotAPresentation(String),
    #[error("MalformedPart: {part}: {detail}")]
    MalformedPart { part: String, detail: String },
}

impl DeckError {
    fn malformed(part: &str, detail: impl ToString) -> Self {
        DeckError::MalformedPart {
            part: part.to_string(),
            detail: detail.to_string(),
        }
    }
}

impl From<PackageError> for DeckError {
    fn from(e: PackageError) -> Self {
        match e {
            PackageError::NotAnArchive(d) => DeckError::NotAnArchive(d),
            PackageError::Read { part, detail } => DeckError::MalformedPart { part, detail },
        }
    }
}

/// Where a slide's duration came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DurationSource {
    AdvanceTime,
    AudioLength,
    None,
}

impl std::fmt::Display for DurationSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DurationSource::AdvanceTime => "advance-time",
            DurationSource::AudioLength => "audio-length",
            DurationSource::None => "none",
        })
    }
}

/// An embedded media entry resolved through a slide relationship.
#[derive(Clone, PartialEq, Eq)]
pub struct AudioRef {
    pub media_path: String,
    pub content_type: String,
    pub raw_bytes: Vec<u8>,
}

impl std::fmt::Debug for AudioRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AudioRef")
            .field("media_path", &self.media_path)
            .field("content_type", &self.content_type)
            .field("len", &self.raw_bytes.len())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slide {
    /// 1-based position among visible slides.
    pub export_index: u32,
    /// 1-based position in the manifest, hidden slides included.
    pub source_number: u32,
    pub title: String,
    pub body_text: String,
    pub narration: Option<AudioRef>,
    pub duration_ms: Option<u64>,
    pub duration_source: DurationSource,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deck {
    pub title: String,
    pub slides: Vec<Slide>,
    pub source_path: PathBuf,
    /// Non-fatal oddities met while parsing.
    pub warnings: Vec<String>,
}

impl Deck {
    pub fn total_duration_ms(&self) -> Option<u64> {
        self.slides.iter().map(|s| s.duration_ms).sum()
    }
}

/// Something that can tell how long a narration clip plays.
pub trait DurationProbe {
    fn duration_ms(&self, audio: &AudioRef) -> Result<u64, String>;
}

/// Probes uncompressed WAV narration natively; anything else is unknown.
#[derive(Debug, Clone, Copy, Default)]
pub struct WavProbe;

impl DurationProbe for WavProbe {
    fn duration_ms(&self, audio: &AudioRef) -> Result<u64, String> {
        if !audio::looks_like_wav(audio) {
            return Err(format!(
                "cannot measure {} ({}) without decoding it",
                audio.media_path, audio.content_type
            ));
        }
        audio::parse_wav(&audio.raw_bytes)
            .map(|clip| clip.duration_ms)
            .map_err(|e| format!("{}: {e}", audio.media_path))
    }
}

/// A parsed slide part.
pub struct SlidePart<'a> {
    name: String,
    doc: Document<'a>,
}

fn is(node: &Node, ns: &str, local: &str) -> bool {
    node.is_element() && node.tag_name().name() == local && node.tag_name().namespace() == Some(ns)
}

fn child<'a, 'i>(node: Node<'a, 'i>, ns: &str, local: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| is(c, ns, local))
}

/// Attribute `r:<local>` in the relationships namespace.
fn rel_attr<'a>(node: &Node<'a, '_>, local: &str) -> Option<&'a str> {
    node.attribute((NS_RELATIONSHIPS, local))
}

impl<'a> SlidePart<'a> {
    pub fn parse(name: &str, xml: &'a str) -> Result<Self, DeckError> {
        let doc = Document::parse(xml).map_err(|e| DeckError::malformed(name, e))?;
        if !is(&doc.root_element(), NS_PRESENTATION, "sld") {
            return Err(DeckError::malformed(
                name,
                format!(
                    "root element is `{}`, not a slide",
                    doc.root_element().tag_name().name()
                ),
            ));
        }
        Ok(SlidePart {
            name: name.to_string(),
            doc,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `show="0"` (or `false`) on the slide root.
    pub fn is_hidden(&self) -> bool {
        matches!(
            self.doc.root_element().attribute("show"),
            Some("0" | "false")
        )
    }

    /// The transition's `advTm` attribute in milliseconds.
    pub fn advance_time_ms(&self) -> Option<u64> {
        self.doc
            .descendants()
            .filter(|n| is(n, NS_PRESENTATION, "transition"))
            .find_map(|n| n.attribute("advTm"))
            .and_then(|v| v.trim().parse::<u64>().ok())
    }

    fn common_slide_data(&self) -> Option<Node<'_, 'a>> {
        child(self.doc.root_element(), NS_PRESENTATION, "cSld")
    }

    /// Relationship ids of the slide's audio objects, in playback order.
    ///
    /// Each inner list holds the candidate ids of one object, embedded media
    /// first and the legacy audio link second.
    pub fn audio_relationship_ids(&self) -> Vec<Vec<String>> {
        let Some(csld) = self.common_slide_data() else {
            return Vec::new();
        };
        let mut shapes: Vec<(Option<&str>, Vec<String>)> = Vec::new();
        for pic in csld.descendants().filter(|n| is(n, NS_PRESENTATION, "pic")) {
            let Some(nv) = child(pic, NS_PRESENTATION, "nvPicPr") else {
                continue;
            };
            let shape_id = child(nv, NS_PRESENTATION, "cNvPr").and_then(|c| c.attribute("id"));
            let Some(nv_pr) = child(nv, NS_PRESENTATION, "nvPr") else {
                continue;
            };
            let mut ids = Vec::new();
            for media in nv_pr.descendants().filter(|n| is(n, NS_P14, "media")) {
                if let Some(id) = rel_attr(&media, "embed").or_else(|| rel_attr(&media, "link")) {
                    ids.push(id.to_string());
                }
            }
            if let Some(af) = child(nv_pr, NS_DRAWING, "audioFile") {
                if let Some(id) = rel_attr(&af, "link").or_else(|| rel_attr(&af, "embed")) {
                    ids.push(id.to_string());
                }
            }
            if !ids.is_empty() {
                ids.dedup();
                shapes.push((shape_id, ids));
            }
        }

        let timing_order: Vec<&str> = child(self.doc.root_element(), NS_PRESENTATION, "timing")
            .map(|t| {
                t.descendants()
                    .filter(|n| is(n, NS_PRESENTATION, "audio"))
                    .filter_map(|a| {
                        a.descendants()
                            .find(|n| is(n, NS_PRESENTATION, "spTgt"))
                            .and_then(|t| t.attribute("spid"))
                    })
                    .collect()
            })
            .unwrap_or_default();

        let mut ordered: Vec<Vec<String>> = Vec::with_capacity(shapes.len());
        for spid in timing_order {
            if let Some(pos) = shapes.iter().position(|(id, _)| *id == Some(spid)) {
                ordered.push(shapes.remove(pos).1);
            }
        }
        ordered.extend(shapes.into_iter().map(|(_, ids)| ids));
        ordered
    }
}

fn paragraph_text(para: Node) -> String {
    let mut out = String::new();
    for n in para.descendants() {
        if is(&n, NS_DRAWING, "t") {
            out.push_str(n.text().unwrap_or_default());
        } else if is(&n, NS_DRAWING, "br") {
            out.push(' ');
        }
    }
    out
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_title_shape(sp: Node) -> bool {
    sp.descendants()
        .filter(|n| is(n, NS_PRESENTATION, "ph"))
        .any(|ph| matches!(ph.attribute("type"), Some("title" | "ctrTitle")))
}

/// Title placeholder text and the remaining visible text of a slide.
///
/// Runs inside a paragraph are concatenated, paragraphs are joined with a
/// space, and all whitespace (line breaks included) collapses to single spaces.
pub fn extract_slide_text(part: &SlidePart) -> (String, String) {
    let Some(csld) = part.common_slide_data() else {
        return (String::new(), String::new());
    };
    let title_shape = csld
        .descendants()
        .find(|n| is(n, NS_PRESENTATION, "sp") && is_title_shape(*n));

    let mut title = String::new();
    let mut body = String::new();
    for para in csld.descendants().filter(|n| is(n, NS_DRAWING, "p")) {
        let in_title = title_shape.is_some_and(|t| para.ancestors().any(|a| a == t));
        let dest = if in_title { &mut title } else { &mut body };
        dest.push_str(&paragraph_text(para));
        dest.push(' ');
    }
    (normalize_ws(&title), normalize_ws(&body))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedDuration {
    pub duration_ms: Option<u64>,
    pub source: DurationSource,
    pub warning: Option<String>,
}

/// Advance time wins over measured narration length; neither gives `None`.
pub fn resolve_duration(
    part: &SlidePart,
    audio: Option<&AudioRef>,
    probe: &dyn DurationProbe,
) -> ResolvedDuration {
    if let Some(ms) = part.advance_time_ms() {
        return ResolvedDuration {
            duration_ms: Some(ms),
            source: DurationSource::AdvanceTime,
            warning: None,
        };
    }
    let warning = match audio {
        Some(a) => match probe.duration_ms(a) {
            Ok(ms) => {
                return ResolvedDuration {
                    duration_ms: Some(ms),
                    source: DurationSource::AudioLength,
                    warning: None,
                }
            }
            Err(e) => Some(format!(
                "{}: no advance time and narration length unknown: {e}",
                part.name()
            )),
        },
        None => None,
    };
    ResolvedDuration {
        duration_ms: None,
        source: DurationSource::None,
        warning,
    }
}

/// Open a presentation file, measuring narration with [`WavProbe`].
pub fn open_deck(path: &Path) -> Result<Deck, DeckError> {
    open_deck_with(path, &WavProbe)
}

pub fn open_deck_with(path: &Path, probe: &dyn DurationProbe) -> Result<Deck, DeckError> {
    let bytes = std::fs::read(path).map_err(|source| DeckError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_deck(&bytes, path, probe)
}

fn read_xml_part(pkg: &mut Package, name: &str) -> Result<Option<String>, DeckError> {
    let Some(bytes) = pkg.read(name)? else {
        return Ok(None);
    };
    let text = ooxml::part_text(&bytes).map_err(|e| DeckError::malformed(name, e))?;
    Ok(Some(text.to_string()))
}

fn read_rels(pkg: &mut Package, part: &str) -> Result<Relationships, DeckError> {
    let name = ooxml::rels_path_for(part);
    match read_xml_part(pkg, &name)? {
        Some(xml) => Relationships::parse(&xml).map_err(|e| DeckError::malformed(&name, e)),
        None => Ok(Relationships::default()),
    }
}

fn is_presentation_type(ct: &str) -> bool {
    ct.starts_with("application/vnd.openxmlformats-officedocument.presentationml.")
        && ct.ends_with(".main+xml")
}

/// Parse presentation bytes; `source_path` is recorded and names the deck.
pub fn parse_deck(
    bytes: &[u8],
    source_path: &Path,
    probe: &dyn DurationProbe,
) -> Result<Deck, DeckError> {
    let mut pkg = Package::open(bytes)?;
    let mut warnings = Vec::new();

    let content_types = match read_xml_part(&mut pkg, CONTENT_TYPES_PART)? {
        Some(xml) => {
            ContentTypes::parse(&xml).map_err(|e| DeckError::malformed(CONTENT_TYPES_PART, e))?
        }
        None => {
            return Err(DeckError::NotAPresentation(format!(
                "archive has no {CONTENT_TYPES_PART}"
            )))
        }
    };

    let root_rels = read_rels(&mut pkg, "")?;
    let main_part = root_rels
        .of_type(REL_OFFICE_DOCUMENT)
        .map(|r| ooxml::resolve_target("", &r.target))
        .next()
        .filter(|p| content_types.lookup(p).is_some_and(is_presentation_type))
        .or_else(|| content_types.find_part(is_presentation_type))
        .filter(|p| pkg.has_entry(p))
        .ok_or_else(|| {
            DeckError::NotAPresentation("archive has no presentation manifest part".into())
        })?;

    let title = read_core_title(&mut pkg, &root_rels, &mut warnings).unwrap_or_else(|| {
        source_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });

    let pres_xml = read_xml_part(&mut pkg, &main_part)?.unwrap_or_default();
    let pres = Document::parse(&pres_xml).map_err(|e| DeckError::malformed(&main_part, e))?;
    let slide_rids: Vec<String> = child(pres.root_element(), NS_PRESENTATION, "sldIdLst")
        .map(|list| {
            list.children()
                .filter(|n| is(n, NS_PRESENTATION, "sldId"))
                .filter_map(|n| rel_attr(&n, "id").map(str::to_string))
                .collect()
        })
        .unwrap_or_default();
    let pres_rels = read_rels(&mut pkg, &main_part)?;

    let mut slides = Vec::new();
    for (pos, rid) in slide_rids.iter().enumerate() {
        let source_number = pos as u32 + 1;
        let rels_name = ooxml::rels_path_for(&main_part);
        let rel = pres_rels.get(rid).ok_or_else(|| {
            DeckError::malformed(
                &rels_name,
                format!("no relationship `{rid}` for slide {source_number}"),
            )
        })?;
        let slide_name = ooxml::resolve_target(&main_part, &rel.target);
        let xml = read_xml_part(&mut pkg, &slide_name)?.ok_or_else(|| {
            DeckError::malformed(&slide_name, "slide part listed in the manifest is missing")
        })?;
        let part = SlidePart::parse(&slide_name, &xml)?;
        if part.is_hidden() {
            continue;
        }
        let slide_rels = read_rels(&mut pkg, &slide_name)?;
        let narration =
            resolve_narration(&mut pkg, &part, &slide_rels, &content_types, &mut warnings)?;
        let (title, body_text) = extract_slide_text(&part);
        let resolved = resolve_duration(&part, narration.as_ref(), probe);
        if let Some(w) = resolved.warning {
            warnings.push(w);
        }
        slides.push(Slide {
            export_index: slides.len() as u32 + 1,
            source_number,
            title,
            body_text,
            narration,
            duration_ms: resolved.duration_ms,
            duration_source: resolved.source,
        });
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    Ok(Deck {
        title,
        slides,
        source_path: source_path.to_path_buf(),
        warnings,
    })
}

fn read_core_title(
    pkg: &mut Package,
    root_rels: &Relationships,
    warnings: &mut Vec<String>,
) -> Option<String> {
    let name = root_rels
        .of_type(REL_CORE_PROPERTIES)
        .map(|r| ooxml::resolve_target("", &r.target))
        .next()
        .unwrap_or_else(|| "docProps/core.xml".to_string());
    let xml = match read_xml_part(pkg, &name) {
        Ok(Some(xml)) => xml,
        Ok(None) => return None,
        Err(e) => {
            warnings.push(e.to_string());
            return None;
        }
    };
    match Document::parse(&xml) {
        Ok(doc) => doc
            .descendants()
            .find(|n| is(n, NS_DC, "title"))
            .and_then(|n| n.text())
            .map(normalize_ws)
            .filter(|t| !t.is_empty()),
        Err(e) => {
            warnings.push(format!("{name}: {e}"));
            None
        }
    }
}

fn resolve_narration(
    pkg: &mut Package,
    part: &SlidePart,
    rels: &Relationships,
    content_types: &ContentTypes,
    warnings: &mut Vec<String>,
) -> Result<Option<AudioRef>, DeckError> {
    let mut objects = part.audio_relationship_ids();
    if objects.is_empty() {
        // Audio relationships without a recognizable audio object.
        let ids: Vec<String> = rels
            .iter()
            .filter(|r| r.rel_type == REL_AUDIO || r.rel_type == REL_MEDIA)
            .map(|r| r.id.clone())
            .collect();
        if !ids.is_empty() {
            objects.push(ids);
        }
    }
    if objects.len() > 1 {
        warnings.push(format!(
            "{}: {} audio objects, using the first in playback order",
            part.name(),
            objects.len()
        ));
    }
    for candidates in &objects {
        for id in candidates {
            let Some(rel) = rels.get(id) else {
                warnings.push(format!(
                    "{}: dangling audio relationship `{id}`",
                    part.name()
                ));
                continue;
            };
            if rel.external {
                warnings.push(format!(
                    "{}: narration `{}` is linked externally, not embedded",
                    part.name(),
                    rel.target
                ));
                continue;
            }
            let media_path = ooxml::resolve_target(part.name(), &rel.target);
            let Some(raw_bytes) = pkg.read(&media_path)? else {
                warnings.push(format!(
                    "{}: narration entry {media_path} is missing from the archive",
                    part.name()
                ));
                continue;
            };
            if raw_bytes.is_empty() {
                warnings.push(format!(
                    "{}: narration entry {media_path} is empty",
                    part.name()
                ));
                continue;
            }
            let content_type = content_types
                .lookup(&media_path)
                .unwrap_or("application/octet-stream")
                .to_string();
            return Ok(Some(AudioRef {
                media_path,
                content_type,
                raw_bytes,
            }));
        }
    }
    Ok(None)
}
