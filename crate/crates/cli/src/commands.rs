use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use slidescribe::analyze::LecturePair;
use slidescribe::emit::format_chapter_timestamp;
use slidescribe::transcribe::{MockBackend, RateLimiter, RestBackend, SegmentCache, SystemClock};
use slidescribe::{
    chapter_marks, corpus_report, markdown_to_caption_text, open_deck, render_chapters,
    render_cues, render_markdown, BackendConfig, DurationSource, SpeechBackend, TranscoderSpec,
    Transcriber,
};

use crate::args::{AnalyzeArgs, BackendKind, Command, ReportFormat};
use crate::output::write_atomic;
use crate::settings::RunConfig;
use crate::{Console, Exit};

pub const TRANSCRIPT_FILE: &str = "transcript.md";
pub const CHAPTERS_FILE: &str = "chapters.txt";
pub const CUES_FILE: &str = "cues.vtt";
pub const CAPTIONS_FILE: &str = "captions.txt";

pub fn dispatch(command: &Command, config: &RunConfig, console: &mut Console) -> Result<Exit> {
    match command {
        Command::Inspect { deck } => inspect(deck, console),
        Command::Pipeline { deck } => pipeline(deck, config, console),
        Command::Analyze(a) => analyze(a, config, console),
        Command::Captions { transcript, out } => {
            captions(transcript, out.as_deref(), config, console)
        }
    }
}

fn seconds(ms: u64) -> String {
    format!("{}.{:03} s", ms / 1000, ms % 1000)
}

fn inspect(path: &Path, console: &mut Console) -> Result<Exit> {
    let deck = open_deck(path)?;
    let rows: Vec<[String; 5]> = deck
        .slides
        .iter()
        .map(|s| {
            [
                s.export_index.to_string(),
                if s.title.is_empty() {
                    "-".into()
                } else {
                    s.title.clone()
                },
                if s.narration.is_some() { "yes" } else { "no" }.into(),
                s.duration_ms.map_or_else(|| "—".into(), seconds),
                s.duration_source.to_string(),
            ]
        })
        .collect();
    let header = ["#", "title", "narration", "duration", "source"];
    let mut widths = header.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: [&str; 5]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            let pad = w - cell.chars().count();
            if i == 0 {
                s.push_str(&" ".repeat(pad));
                s.push_str(cell);
            } else {
                s.push_str("  ");
                s.push_str(cell);
                s.push_str(&" ".repeat(pad));
            }
        }
        s.trim_end().to_string()
    };

    writeln!(console.out, "{} ({} slides)", deck.title, deck.slides.len())?;
    writeln!(console.out, "{}", line(header))?;
    for row in &rows {
        writeln!(console.out, "{}", line(row.each_ref().map(String::as_str)))?;
    }
    match deck.total_duration_ms() {
        Some(ms) => writeln!(console.out, "total {}", format_chapter_timestamp(ms))?,
        None => writeln!(console.out, "total unknown")?,
    }

    for w in &deck.warnings {
        console.warn(w);
    }
    let missing: Vec<u32> = deck
        .slides
        .iter()
        .filter(|s| s.duration_source == DurationSource::None)
        .map(|s| s.export_index)
        .collect();
    for i in &missing {
        console.warn(format_args!(
            "slide {i} has no advance time and no measurable narration"
        ));
    }
    Ok(if missing.is_empty() {
        Exit::Success
    } else {
        Exit::Warnings
    })
}

fn input_stem(path: &Path) -> Result<String> {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| anyhow!("{} has no file name", path.display()))
}

fn make_backend(config: &RunConfig, backend: &BackendConfig) -> Result<Box<dyn SpeechBackend>> {
    Ok(match config.backend {
        BackendKind::Mock => {
            let path = config
                .mock_fixtures
                .as_ref()
                .ok_or_else(|| anyhow!("the mock backend needs --mock-fixtures"))?;
            Box::new(
                MockBackend::load(path).with_context(|| format!("loading {}", path.display()))?,
            )
        }
        BackendKind::Rest => {
            if backend.endpoint.is_empty() {
                bail!("the rest backend needs --endpoint");
            }
            if backend.api_key.is_empty() {
                bail!("set {} to the speech service key", config.key_env);
            }
            Box::new(RestBackend::new(backend)?)
        }
    })
}

fn caption_file(text: String) -> String {
    if text.is_empty() {
        text
    } else {
        text + "\n"
    }
}

fn pipeline(path: &Path, config: &RunConfig, console: &mut Console) -> Result<Exit> {
    let deck = open_deck(path)?;
    for w in &deck.warnings {
        console.warn(w);
    }
    let stem = input_stem(path)?;

    let api_key = match config.backend {
        BackendKind::Rest => std::env::var(&config.key_env).unwrap_or_default(),
        BackendKind::Mock => String::new(),
    };
    let backend_config = BackendConfig {
        endpoint: config.endpoint.clone().unwrap_or_default(),
        api_key,
        language: config.language.clone(),
        max_retries: config.max_retries,
        requests_per_minute: config.rate_limit,
        ..BackendConfig::default()
    };
    let backend = make_backend(config, &backend_config)?;
    let transcoder = config
        .transcoder
        .as_deref()
        .map(TranscoderSpec::new)
        .transpose()?;

    let out_dir = config.output_dir.join(&stem);
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let cache_dir = config
        .cache_dir
        .clone()
        .unwrap_or_else(|| config.output_dir.join(".cache").join(&stem));
    let cache = SegmentCache::open(&cache_dir)
        .with_context(|| format!("opening cache {}", cache_dir.display()))?;
    let workdir = tempfile::Builder::new().prefix("slidescribe-").tempdir()?;
    let limiter = RateLimiter::per_minute(config.rate_limit, Arc::new(SystemClock::new()));

    let mut transcriber =
        Transcriber::new(&backend_config, backend.as_ref(), &limiter, workdir.path());
    transcriber.transcoder = transcoder.as_ref();
    transcriber.cache = Some(&cache);
    transcriber.jobs = config.jobs;
    transcriber.hint_cap = config.hint_cap;
    transcriber.preamble = config.preamble.clone();
    let (doc, stats) = transcriber.transcribe_deck(&deck)?;

    let mut exit = Exit::Success;
    for seg in doc.segments.iter().filter(|s| s.is_failed()) {
        if let slidescribe::SegmentSource::Failed(reason) = &seg.source {
            console.warn(format_args!(
                "slide {} not transcribed: {reason}",
                seg.export_index
            ));
        }
        exit = Exit::Warnings;
    }

    let mut written = Vec::new();
    let mut write = |name: &str, text: &str| -> Result<()> {
        let p = out_dir.join(name);
        write_atomic(&p, text.as_bytes()).with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
        Ok(())
    };

    let markdown = render_markdown(&doc);
    write(TRANSCRIPT_FILE, &markdown)?;
    write(
        CAPTIONS_FILE,
        &caption_file(markdown_to_caption_text(&markdown)?),
    )?;

    let timed = match config.fallback_duration_ms {
        Some(ms) => doc.with_fallback_duration(ms),
        None => doc.clone(),
    };
    match chapter_marks(&timed, None) {
        Ok(marks) => {
            for w in &marks.warnings {
                console.warn(w);
            }
            write(CHAPTERS_FILE, &render_chapters(&marks))?;
            if !config.no_cues {
                write(CUES_FILE, &render_cues(&timed)?)?;
            }
        }
        Err(e) => {
            console.warn(format_args!(
                "{e}; chapters and cues skipped (see --fallback-duration)"
            ));
            exit = Exit::Warnings;
        }
    }

    writeln!(
        console.out,
        "{}: {} slides, {} recognized, {} empty, {} failed",
        deck.title,
        doc.segments.len(),
        stats.recognized,
        stats.empty,
        stats.failed
    )?;
    match timed.total_duration_ms() {
        Some(ms) => writeln!(
            console.out,
            "total duration: {}",
            format_chapter_timestamp(ms)
        )?,
        None => writeln!(console.out, "total duration: unknown")?,
    }
    writeln!(
        console.out,
        "backend calls: {}, cache hits: {}",
        stats.backend_calls, stats.cache_hits
    )?;
    for p in &written {
        writeln!(console.out, "wrote {}", p.display())?;
    }
    Ok(exit)
}

fn markdown_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "md") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            files.insert(name, path);
        }
    }
    Ok(files)
}

/// Pair files by name across two directories; unmatched names are errors.
pub fn pair_directories(auto: &Path, corrected: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let a = markdown_files(auto)?;
    let mut c = markdown_files(corrected)?;
    let mut pairs = Vec::new();
    let mut orphans = Vec::new();
    for (name, ap) in a {
        match c.remove(&name) {
            Some(cp) => pairs.push((ap, cp)),
            None => orphans.push(ap),
        }
    }
    orphans.extend(c.into_values());
    if !orphans.is_empty() {
        let list: Vec<String> = orphans.iter().map(|p| p.display().to_string()).collect();
        bail!("unmatched transcripts: {}", list.join(", "));
    }
    Ok(pairs)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn analyze(args: &AnalyzeArgs, _config: &RunConfig, console: &mut Console) -> Result<Exit> {
    let mut paths: Vec<(PathBuf, PathBuf)> = args
        .pair
        .chunks(2)
        .map(|c| (c[0].clone(), c[1].clone()))
        .collect();
    if let (Some(a), Some(c)) = (&args.auto, &args.corrected) {
        match (a.is_dir(), c.is_dir()) {
            (true, true) => paths.extend(pair_directories(a, c)?),
            (false, false) => paths.push((a.clone(), c.clone())),
            _ => bail!("compare two files or two directories, not one of each"),
        }
    }
    if paths.is_empty() {
        bail!("nothing to compare; give AUTO CORRECTED or --pair AUTO CORRECTED");
    }

    let mut pairs = Vec::with_capacity(paths.len());
    for (a, c) in &paths {
        let pair = LecturePair {
            lecture_id: input_stem(a)?,
            auto_markdown: read_text(a)?,
            corrected_markdown: read_text(c)?,
        };
        if args.body_only {
            for (p, text) in [(a, &pair.auto_markdown), (c, &pair.corrected_markdown)] {
                markdown_to_caption_text(text).with_context(|| p.display().to_string())?;
            }
        }
        pairs.push(pair);
    }

    let report = corpus_report(&pairs, !args.body_only, args.top_k)?;
    let text = match args.format {
        ReportFormat::Markdown => report.to_markdown(),
        ReportFormat::Json => report.to_json(),
    };
    match &args.out {
        Some(p) => {
            write_atomic(p, text.as_bytes()).with_context(|| format!("writing {}", p.display()))?
        }
        None => console.out.write_all(text.as_bytes())?,
    }
    Ok(Exit::Success)
}

fn captions(
    path: &Path,
    out: Option<&Path>,
    config: &RunConfig,
    console: &mut Console,
) -> Result<Exit> {
    let markdown = read_text(path)?;
    let text = markdown_to_caption_text(&markdown).with_context(|| path.display().to_string())?;
    let target = match out {
        Some(p) => p.to_path_buf(),
        None if config.output_dir != Path::new(".") => config.output_dir.join(CAPTIONS_FILE),
        None => path.with_file_name(CAPTIONS_FILE),
    };
    if let Some(dir) = target.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_atomic(&target, caption_file(text).as_bytes())
        .with_context(|| format!("writing {}", target.display()))?;
    writeln!(console.out, "wrote {}", target.display())?;
    Ok(Exit::Success)
}
