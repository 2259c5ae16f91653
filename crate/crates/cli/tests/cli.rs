mod common;

use std::ffi::OsStr;
use std::process::Command;

use common::*;
use sha2::{Digest, Sha256};
use slidescribe_testkit::{empty_zip, DeckBuilder, Narration, SlideSpec};

fn code(o: &std::process::Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn os(s: &str) -> &OsStr {
    s.as_ref()
}

#[test]
fn inspect_lists_every_slide() {
    let ws = Workspace::new();
    let (deck, _) = ws.lecture("L01", 3, &[]);
    let o = slidescribe(&[os("inspect"), deck.as_os_str()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().filter(|l| l.contains("Part ")).collect();
    assert_eq!(rows.len(), 3, "{out}");
    assert!(
        rows[1].contains("24.000 s") && rows[1].contains("advance-time"),
        "{out}"
    );
    assert!(out.contains("total 1:12"), "{out}");
}

#[test]
fn inspect_flags_missing_durations() {
    let ws = Workspace::new();
    let deck = ws.path("d.pptx");
    DeckBuilder::new()
        .slide(SlideSpec::titled("Timed").advance(5_000))
        .slide(SlideSpec::titled("Silent"))
        .write_to(&deck);
    let o = slidescribe(&[os("inspect"), deck.as_os_str()]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o)
        .lines()
        .any(|l| l.contains("Silent") && l.contains('—')));
    assert!(stderr(&o).contains("slide 2"));
}

#[test]
fn inspect_rejects_non_presentations() {
    let ws = Workspace::new();
    let zip = ws.write("empty.pptx", empty_zip());
    let o = slidescribe(&[os("inspect"), zip.as_os_str()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("NotAPresentation"), "{}", stderr(&o));

    let mut broken = narrated_deck("x", 2);
    broken.corrupt_slide = Some(1);
    let p = ws.path("broken.pptx");
    broken.write_to(&p);
    let o = slidescribe(&[os("inspect"), p.as_os_str()]);
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("MalformedPart: ppt/slides/slide2.xml"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn pipeline_writes_the_four_files_and_leaves_the_deck_alone() {
    let ws = Workspace::new();
    let (deck, fixtures) = ws.lecture("L10", 3, &[]);
    let before = Sha256::digest(std::fs::read(&deck).unwrap());
    let out = ws.path("out");
    let o = run_pipeline(&deck, &fixtures, &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(before, Sha256::digest(std::fs::read(&deck).unwrap()));

    let dir = out.join("L10");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["captions.txt", "chapters.txt", "cues.vtt", "transcript.md"]
    );

    let chapters = std::fs::read_to_string(dir.join("chapters.txt")).unwrap();
    assert_eq!(
        chapters,
        "0:00 1 - Part 1\n0:12 2 - Part 2\n0:36 3 - Part 3\n"
    );
    let captions = std::fs::read_to_string(dir.join("captions.txt")).unwrap();
    assert_eq!(
        captions,
        format!("{}\n\n{}\n\n{}\n", TEXTS[0], TEXTS[1], TEXTS[2])
    );
    let md = std::fs::read_to_string(dir.join("transcript.md")).unwrap();
    assert!(md.starts_with("# Week 3 - Learning to Rank\n"));
    assert!(md.contains("\n## 2. Part 2\n"));
    assert!(stdout(&o).contains("total duration: 1:12"));
    assert_eq!(backend_calls(&o), Some(3));
}

#[test]
fn editing_one_slide_retranscribes_only_that_slide() {
    let ws = Workspace::new();
    let (deck, fixtures) = ws.lecture("L10", 3, &[]);
    let out = ws.path("out");
    assert_eq!(
        backend_calls(&run_pipeline(&deck, &fixtures, &out)),
        Some(3)
    );

    // re-record slide 2 with different audio
    let mut edited = narrated_deck("Week 3 - Learning to Rank", 3);
    edited.slides[1].narration = Some(Narration::wav_ms(900, 77));
    edited.write_to(&deck);
    let mut table: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&mock_fixtures(3, &[])).unwrap();
    table.insert(narration_hash(900, 77), "A fresh take on slide two.".into());
    std::fs::write(&fixtures, serde_json::to_string(&table).unwrap()).unwrap();

    let o = run_pipeline(&deck, &fixtures, &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(backend_calls(&o), Some(1));
    let captions = std::fs::read_to_string(out.join("L10/captions.txt")).unwrap();
    assert!(captions.contains("A fresh take on slide two."));
}

#[test]
fn failing_slide_gives_exit_two_and_placeholder() {
    let ws = Workspace::new();
    let (deck, fixtures) = ws.lecture("L02", 3, &[1]);
    let out = ws.path("out");
    let o = run_pipeline(&deck, &fixtures, &out);
    assert_eq!(code(&o), 2);
    let md = std::fs::read_to_string(out.join("L02/transcript.md")).unwrap();
    assert!(md.contains("[transcription failed]"));
    assert!(
        stderr(&o).contains("slide 2 not transcribed"),
        "{}",
        stderr(&o)
    );
    assert!(stdout(&o).contains("1 failed"));
}

#[test]
fn missing_duration_skips_chapters_unless_a_fallback_is_given() {
    let ws = Workspace::new();
    let deck = ws.path("L05.pptx");
    let m4a = Narration::m4a(vec![0, 0, 0, 24, b'f', b't', b'y', b'p']);
    DeckBuilder::new()
        .slide(SlideSpec::titled("Opening").advance(20_000))
        .slide(SlideSpec::titled("Compressed").narration(m4a))
        .write_to(&deck);
    let fixtures = ws.write("mock.json", "{}");
    let out = ws.path("out");

    let o = run_pipeline(&deck, &fixtures, &out);
    assert_eq!(code(&o), 2);
    assert!(out.join("L05/transcript.md").exists());
    assert!(!out.join("L05/chapters.txt").exists());
    assert!(!out.join("L05/cues.vtt").exists());
    assert!(stderr(&o).contains("fallback"), "{}", stderr(&o));

    let o = slidescribe(&[
        os("--backend"),
        os("mock"),
        os("--mock-fixtures"),
        fixtures.as_os_str(),
        os("--output-dir"),
        out.as_os_str(),
        os("--fallback-duration"),
        os("15"),
        os("--no-cues"),
        os("pipeline"),
        deck.as_os_str(),
    ]);
    // narration without a transcoder fails that slide, so still 2
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("TranscoderRequired"), "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(out.join("L05/chapters.txt")).unwrap(),
        "0:00 1 - Opening\n0:20 2 - Compressed\n"
    );
    assert!(!out.join("L05/cues.vtt").exists());
}

#[test]
fn rest_backend_needs_the_key_from_the_environment() {
    let ws = Workspace::new();
    let (deck, _) = ws.lecture("L01", 1, &[]);
    let o = slidescribe(&[
        os("--endpoint"),
        os("http://127.0.0.1:9/recognize"),
        os("--output-dir"),
        ws.path("out").as_os_str(),
        os("pipeline"),
        deck.as_os_str(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("SPEECH_API_KEY"), "{}", stderr(&o));

    let o = slidescribe(&[
        os("--key-env"),
        os("LECTURE_KEY"),
        os("--endpoint"),
        os("http://127.0.0.1:9/recognize"),
        os("pipeline"),
        deck.as_os_str(),
    ]);
    assert!(stderr(&o).contains("LECTURE_KEY"));

    // there is deliberately no flag for the key itself
    let o = slidescribe(&[
        os("--api-key"),
        os("hunter2"),
        os("inspect"),
        deck.as_os_str(),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let ws = Workspace::new();
    let (deck, fixtures) = ws.lecture("L07", 2, &[]);
    let from_file = ws.path("from-file");
    let from_flag = ws.path("from-flag");
    let config = ws.write(
        "slidescribe.conf",
        format!(
            "# shared settings\nbackend = mock\nmock-fixtures = {}\noutput-dir = {}\nno-cues = true\n",
            fixtures.display(),
            from_file.display()
        ),
    );
    let o = slidescribe(&[
        os("--config"),
        config.as_os_str(),
        os("pipeline"),
        deck.as_os_str(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(from_file.join("L07/transcript.md").exists());
    assert!(!from_file.join("L07/cues.vtt").exists());

    let o = slidescribe(&[
        os("--config"),
        config.as_os_str(),
        os("--output-dir"),
        from_flag.as_os_str(),
        os("pipeline"),
        deck.as_os_str(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(from_flag.join("L07/transcript.md").exists());

    let bad = ws.write("bad.conf", "api-key = hunter2\n");
    let o = slidescribe(&[
        os("--config"),
        bad.as_os_str(),
        os("inspect"),
        deck.as_os_str(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(!stderr(&o).contains("hunter2"));
}

fn corpus(ws: &Workspace) -> (std::path::PathBuf, std::path::PathBuf) {
    let lectures = [
        (
            "L00",
            "# L00\n\n## 1. Intro\n\nthe cat sat on the mat\n",
            "# L00\n\n## 1. Intro\n\nthe cat sat on a mat.\n",
        ),
        (
            "L01",
            "# L01\n\n## 1. Intro\n\nBM 25 is simple\n",
            "# L01\n\n## 1. Intro\n\nBM25 is simple\n",
        ),
        (
            "L02",
            "# L02\n\n## 1. Intro\n\nno changes here\n",
            "# L02\n\n## 1. Intro\n\nno changes here\n",
        ),
    ];
    for (id, a, c) in lectures {
        ws.write(&format!("auto/{id}.md"), a);
        ws.write(&format!("corrected/{id}.md"), c);
    }
    (ws.path("auto"), ws.path("corrected"))
}

#[test]
fn analyze_pairs_directories_by_name() {
    let ws = Workspace::new();
    let (a, c) = corpus(&ws);
    let o = slidescribe(&[
        os("analyze"),
        a.as_os_str(),
        c.as_os_str(),
        os("--body-only"),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2 + 3 + 1, "{out}");
    assert!(lines[2].starts_with("| L00 | 6 | 67% |"), "{out}");
    assert!(lines[5].starts_with("| Avg. |"));

    let o = slidescribe(&[
        os("analyze"),
        a.as_os_str(),
        c.as_os_str(),
        os("--format"),
        os("json"),
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);

    ws.write("corrected/L03.md", "# L03\n");
    let o = slidescribe(&[os("analyze"), a.as_os_str(), c.as_os_str()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("L03.md"));
}

#[test]
fn analyze_single_pair_average_is_that_row() {
    let ws = Workspace::new();
    let (a, c) = corpus(&ws);
    let report = ws.path("report.md");
    let o = slidescribe(&[
        os("analyze"),
        os("--pair"),
        a.join("L00.md").as_os_str(),
        c.join("L00.md").as_os_str(),
        os("--body-only"),
        os("--out"),
        report.as_os_str(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[3], "| Avg. | 6 | 67% |  |");
}

#[test]
fn captions_from_generated_and_foreign_files() {
    let ws = Workspace::new();
    let (deck, fixtures) = ws.lecture("L10", 3, &[]);
    let out = ws.path("out");
    run_pipeline(&deck, &fixtures, &out);
    let transcript = out.join("L10/transcript.md");
    let target = ws.path("recovered.txt");
    let o = slidescribe(&[
        os("captions"),
        transcript.as_os_str(),
        os("--out"),
        target.as_os_str(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        std::fs::read(&target).unwrap(),
        std::fs::read(out.join("L10/captions.txt")).unwrap()
    );

    let readme = ws.write(
        "README.md",
        "# Project\n\nSome text.\n\n## Install\n\nRun it.\n",
    );
    let o = slidescribe(&[os("captions"), readme.as_os_str()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("NotTranscriptLayout"), "{}", stderr(&o));
}

#[test]
fn help_exits_zero() {
    let o = Command::new(env!("CARGO_BIN_EXE_slidescribe"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let help = stdout(&o);
    for flag in [
        "--output-dir",
        "--backend",
        "--rate-limit",
        "--key-env",
        "--no-cues",
    ] {
        assert!(help.contains(flag), "{flag}");
    }
    assert!(!help.contains("--api-key"));
}
