#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::json;
use sha2::{Digest, Sha256};
use slidescribe_testkit::{pattern, DeckBuilder, Narration, SlideSpec};

pub const TEXTS: [&str; 3] = [
    "Hello and welcome to this lecture on dense retrieval.",
    "Dense retrievers encode queries and passages with BERT.",
    "Knowledge distillation transfers ranking quality to smaller models.",
];

/// Content hash of the samples in `Narration::wav_ms(ms, seed)`.
pub fn narration_hash(ms: u64, seed: u64) -> String {
    hex::encode(Sha256::digest(pattern((ms * 32) as usize, seed)))
}

pub fn narration_ms(i: usize) -> u64 {
    400 + 100 * i as u64
}

/// `n` narrated slides with advance times of 12 s, 24 s, ... and distinct audio.
pub fn narrated_deck(title: &str, n: usize) -> DeckBuilder {
    let mut b = DeckBuilder::new().title(title);
    for i in 0..n {
        b = b.slide(
            SlideSpec::titled(&format!("Part {}", i + 1))
                .body(&["dense retrieval", "BM25"])
                .advance(12_000 * (i as u64 + 1))
                .narration(Narration::wav_ms(narration_ms(i), i as u64)),
        );
    }
    b
}

pub fn slide_text(i: usize) -> String {
    TEXTS.get(i).map_or_else(
        || format!("Narration for part {}.", i + 1),
        |s| s.to_string(),
    )
}

/// Mock table answering every slide of [`narrated_deck`], with `failing`
/// slides (zero-based) scripted to be rejected.
pub fn mock_fixtures(n: usize, failing: &[usize]) -> String {
    let mut map = serde_json::Map::new();
    for i in 0..n {
        let key = narration_hash(narration_ms(i), i as u64);
        let value = if failing.contains(&i) {
            json!({ "fail": "rejected" })
        } else {
            json!(slide_text(i))
        };
        map.insert(key, value);
    }
    serde_json::to_string_pretty(&map).unwrap()
}

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> PathBuf {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).unwrap();
        }
        std::fs::write(&p, contents).unwrap();
        p
    }

    /// A narrated deck plus its mock table, ready for `pipeline`.
    pub fn lecture(&self, stem: &str, n: usize, failing: &[usize]) -> (PathBuf, PathBuf) {
        let deck = self.path(&format!("{stem}.pptx"));
        narrated_deck("Week 3 - Learning to Rank", n).write_to(&deck);
        let fixtures = self.write(&format!("{stem}.mock.json"), mock_fixtures(n, failing));
        (deck, fixtures)
    }
}

pub fn slidescribe(args: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slidescribe"))
        .args(args)
        .env_remove("SPEECH_API_KEY")
        .output()
        .expect("binary runs")
}

pub fn run_pipeline(deck: &Path, fixtures: &Path, out: &Path) -> Output {
    slidescribe(&[
        "--backend".as_ref(),
        "mock".as_ref(),
        "--mock-fixtures".as_ref(),
        fixtures.as_os_str(),
        "--output-dir".as_ref(),
        out.as_os_str(),
        "pipeline".as_ref(),
        deck.as_os_str(),
    ])
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// The `backend calls: N` figure from a pipeline summary.
pub fn backend_calls(o: &Output) -> Option<usize> {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix("backend calls: "))
        .and_then(|rest| rest.split(',').next())
        .and_then(|n| n.trim().parse().ok())
}
