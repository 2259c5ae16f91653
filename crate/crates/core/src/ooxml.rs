//! Minimal Open Packaging Conventions reader: ZIP entries, content types and
//! relationship parts.

use std::collections::HashMap;
use std::io::{Cursor, Read};

use zip::result::ZipError;
use zip::ZipArchive;

pub const NS_PRESENTATION: &str = "http://schemas.openxmlformats.org/presentationml/2006/main";
pub const NS_DRAWING: &str = "http://schemas.openxmlformats.org/drawingml/2006/main";
pub const NS_RELATIONSHIPS: &str =
    "http://schemas.openxmlformats.org/officeDocument/2006/relationships";
pub const NS_P14: &str = "http://schemas.microsoft.com/office/powerpoint/2010/main";
pub const NS_PACKAGE_RELS: &str = "http://schemas.openxmlformats.org/package/2006/relationships";
pub const NS_CONTENT_TYPES: &str = "http://schemas.openxmlformats.org/package/2006/content-types";
pub const NS_DC: &str = "http://purl.org/dc/elements/1.1/";

pub const REL_OFFICE_DOCUMENT: &str =
    "http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument";
pub const REL_CORE_PROPERTIES: &str =
    "http://schemas.openxmlformats.org/package/2006/relationships/metadata/core-properties";
pub const REL_AUDIO: &str =
    "http://schemas.openxmlformats.org/officeDocument/2006/relationships/audio";
pub const REL_MEDIA: &str = "http://schemas.microsoft.com/office/2007/relationships/media";

pub const CONTENT_TYPES_PART: &str = "[Content_Types].xml";

#[derive(Debug)]
pub enum PackageError {
    NotAnArchive(String),
    Read { part: String, detail: String },
}

pub struct Package<'a> {
    archive: ZipArchive<Cursor<&'a [u8]>>,
}

impl<'a> Package<'a> {
    pub fn open(bytes: &'a [u8]) -> Result<Self, PackageError> {
        let archive = ZipArchive::new(Cursor::new(bytes))
            .map_err(|e| PackageError::NotAnArchive(e.to_string()))?;
        Ok(Package { archive })
    }

    pub fn has_entry(&self, name: &str) -> bool {
        self.archive.index_for_name(name).is_some()
    }

    /// Bytes of an entry, or `None` when the archive has no such entry.
    pub fn read(&mut self, name: &str) -> Result<Option<Vec<u8>>, PackageError> {
        let mut entry = match self.archive.by_name(name) {
            Ok(e) => e,
            Err(ZipError::FileNotFound) => return Ok(None),
            Err(e) => {
                return Err(PackageError::Read {
                    part: name.to_string(),
                    detail: e.to_string(),
                })
            }
        };
        let mut buf = Vec::with_capacity(entry.size() as usize);
        entry
            .read_to_end(&mut buf)
            .map_err(|e| PackageError::Read {
                part: name.to_string(),
                detail: e.to_string(),
            })?;
        Ok(Some(buf))
    }
}

/// Decode an XML part as UTF-8, dropping a leading byte-order mark.
pub fn part_text(bytes: &[u8]) -> Result<&str, std::str::Utf8Error> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    std::str::from_utf8(bytes)
}

#[derive(Debug, Default)]
pub struct ContentTypes {
    defaults: HashMap<String, String>,
    overrides: HashMap<String, String>,
}

impl ContentTypes {
    pub fn parse(xml: &str) -> Result<Self, roxmltree::Error> {
        let doc = roxmltree::Document::parse(xml)?;
        let mut ct = ContentTypes::default();
        for node in doc.descendants().filter(|n| n.is_element()) {
            if node.tag_name().namespace() != Some(NS_CONTENT_TYPES) {
                continue;
            }
            let Some(content_type) = node.attribute("ContentType") else {
                continue;
            };
            match node.tag_name().name() {
                "Default" => {
                    if let Some(ext) = node.attribute("Extension") {
                        ct.defaults
                            .insert(ext.to_ascii_lowercase(), content_type.to_string());
                    }
                }
                "Override" => {
                    if let Some(part) = node.attribute("PartName") {
                        ct.overrides.insert(
                            part.trim_start_matches('/').to_ascii_lowercase(),
                            content_type.to_string(),
                        );
                    }
                }
                _ => {}
            }
        }
        Ok(ct)
    }

    /// Content type of an archive entry (no leading slash).
    pub fn lookup(&self, entry: &str) -> Option<&str> {
        if let Some(ct) = self.overrides.get(&entry.to_ascii_lowercase()) {
            return Some(ct);
        }
        let ext = entry.rsplit_once('.')?.1.to_ascii_lowercase();
        self.defaults.get(&ext).map(String::as_str)
    }

    /// First overridden part with a content type satisfying `pred`.
    pub fn find_part(&self, pred: impl Fn(&str) -> bool) -> Option<String> {
        let mut parts: Vec<&String> = self
            .overrides
            .iter()
            .filter(|(_, ct)| pred(ct))
            .map(|(p, _)| p)
            .collect();
        parts.sort();
        parts.first().map(|p| p.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relationship {
    pub id: String,
    pub rel_type: String,
    pub target: String,
    pub external: bool,
}

#[derive(Debug, Default)]
pub struct Relationships {
    rels: Vec<Relationship>,
}

impl Relationships {
    pub fn parse(xml: &str) -> Result<Self, roxmltree::Error> {
        let doc = roxmltree::Document::parse(xml)?;
        let rels = doc
            .descendants()
            .filter(|n| {
                n.is_element()
                    && n.tag_name().name() == "Relationship"
                    && n.tag_name().namespace() == Some(NS_PACKAGE_RELS)
            })
            .filter_map(|n| {
                Some(Relationship {
                    id: n.attribute("Id")?.to_string(),
                    rel_type: n.attribute("Type").unwrap_or_default().to_string(),
                    target: n.attribute("Target")?.to_string(),
                    external: n
                        .attribute("TargetMode")
                        .is_some_and(|m| m.eq_ignore_ascii_case("External")),
                })
            })
            .collect();
        Ok(Relationships { rels })
    }

    pub fn get(&self, id: &str) -> Option<&Relationship> {
        self.rels.iter().find(|r| r.id == id)
    }

    pub fn of_type<'s>(&'s self, rel_type: &'s str) -> impl Iterator<Item = &'s Relationship> {
        self.rels.iter().filter(move |r| r.rel_type == rel_type)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Relationship> {
        self.rels.iter()
    }
}

/// `ppt/slides/slide1.xml` → `ppt/slides/_rels/slide1.xml.rels`.
pub fn rels_path_for(part: &str) -> String {
    match part.rsplit_once('/') {
        Some((dir, file)) => format!("{dir}/_rels/{file}.rels"),
        None => format!("_rels/{part}.rels"),
    }
}

/// Resolve a relationship target against the directory of its source part.
pub fn resolve_target(source_part: &str, target: &str) -> String {
    let mut segments: Vec<&str> = if let Some(abs) = target.strip_prefix('/') {
        return normalize(abs.split('/').collect());
    } else {
        match source_part.rsplit_once('/') {
            Some((dir, _)) => dir.split('/').collect(),
            None => Vec::new(),
        }
    };
    segments.extend(target.split('/'));
    normalize(segments)
}

fn normalize(segments: Vec<&str>) -> String {
    let mut out: Vec<&str> = Vec::new();
    for s in segments {
        match s {
            "" | "." => {}
            ".." => {
                out.pop();
            }
            s => out.push(s),
        }
    }
    out.join("/")
}
