//! Word-level comparison of automatic and corrected transcripts.
//!
//! Tokens are whitespace-delimited words compared by exact text, so a
//! corrected comma counts as a changed word. The alignment is a longest
//! common subsequence found with Myers' linear-space O(ND) algorithm.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::emit::{self, EmitError};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordToken {
    pub text: String,
    /// `text` with every non-alphanumeric character removed; may be empty.
    pub normalized: String,
}

impl WordToken {
    pub fn new(text: &str) -> Self {
        WordToken {
            text: text.to_string(),
            normalized: text.chars().filter(|c| c.is_alphanumeric()).collect(),
        }
    }
}

pub fn tokenize(text: &str) -> Vec<WordToken> {
    text.split_whitespace().map(WordToken::new).collect()
}

/// A maximal run of unmatched tokens between two matched regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub deleted: Vec<WordToken>,
    pub inserted: Vec<WordToken>,
}

impl Hunk {
    /// Same words on both sides once punctuation is ignored, compared as multisets.
    pub fn is_punctuation_only(&self) -> bool {
        fn bag(tokens: &[WordToken]) -> Vec<&str> {
            let mut words: Vec<&str> = tokens
                .iter()
                .map(|t| t.normalized.as_str())
                .filter(|n| !n.is_empty())
                .collect();
            words.sort_unstable();
            words
        }
        bag(&self.deleted) == bag(&self.inserted)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordDiff {
    pub unchanged: usize,
    /// Matched `(auto, corrected)` index pairs, increasing in both.
    pub matches: Vec<(usize, usize)>,
    pub hunks: Vec<Hunk>,
    pub punctuation_only_changes: usize,
}

/// Exact word diff between the automatic and corrected token sequences.
pub fn word_diff(auto: &[WordToken], corrected: &[WordToken]) -> WordDiff {
    // Intern tokens so the inner loops compare integers.
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut a = Vec::with_capacity(auto.len());
    let mut b = Vec::with_capacity(corrected.len());
    for (tokens, out) in [(auto, &mut a), (corrected, &mut b)] {
        for t in tokens {
            let next = ids.len() as u32;
            out.push(*ids.entry(t.text.as_str()).or_insert(next));
        }
    }
    let matches = lcs_matches(&a, &b);

    let mut hunks = Vec::new();
    let (mut i, mut j) = (0, 0);
    for &(mi, mj) in matches.iter().chain(std::iter::once(&(a.len(), b.len()))) {
        if mi > i || mj > j {
            hunks.push(Hunk {
                deleted: auto[i..mi].to_vec(),
                inserted: corrected[j..mj].to_vec(),
            });
        }
        i = mi + 1;
        j = mj + 1;
    }
    let punctuation_only_changes = hunks.iter().filter(|h| h.is_punctuation_only()).count();
    WordDiff {
        unchanged: matches.len(),
        matches,
        hunks,
        punctuation_only_changes,
    }
}

/// Index pairs of one longest common subsequence.
pub fn lcs_matches<T: Eq>(a: &[T], b: &[T]) -> Vec<(usize, usize)> {
    let max_d = (a.len() + b.len()).div_ceil(2) + 1;
    let mut vf = Diagonals::new(max_d);
    let mut vb = Diagonals::new(max_d);
    let mut out = Vec::new();
    conquer(a, 0..a.len(), b, 0..b.len(), &mut vf, &mut vb, &mut out);
    out
}

/// Furthest-reaching x per diagonal, indexed by signed diagonal number.
struct Diagonals {
    v: Vec<usize>,
    offset: isize,
}

impl Diagonals {
    fn new(max_d: usize) -> Self {
        Diagonals {
            v: vec![0; 2 * max_d + 2],
            offset: max_d as isize,
        }
    }
}

impl std::ops::Index<isize> for Diagonals {
    type Output = usize;
    fn index(&self, k: isize) -> &usize {
        &self.v[(k + self.offset) as usize]
    }
}

impl std::ops::IndexMut<isize> for Diagonals {
    fn index_mut(&mut self, k: isize) -> &mut usize {
        &mut self.v[(k + self.offset) as usize]
    }
}

fn common_prefix<T: Eq>(a: &[T], b: &[T]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

fn common_suffix<T: Eq>(a: &[T], b: &[T]) -> usize {
    a.iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count()
}

/// A point on some shortest edit path splitting the problem roughly in half.
fn middle_snake<T: Eq>(a: &[T], b: &[T], vf: &mut Diagonals, vb: &mut Diagonals) -> (usize, usize) {
    let n = a.len();
    let m = b.len();
    let delta = n as isize - m as isize;
    let odd = delta & 1 == 1;
    vf[1] = 0;
    vb[1] = 0;
    let d_max = (n + m).div_ceil(2) as isize;
    for d in 0..=d_max {
        let mut k = -d;
        while k <= d {
            let mut x = if k == -d || (k != d && vf[k - 1] < vf[k + 1]) {
                vf[k + 1]
            } else {
                vf[k - 1] + 1
            };
            let y = (x as isize - k) as usize;
            let (x0, y0) = (x, y);
            if x < n && y < m {
                x += common_prefix(&a[x..], &b[y..]);
            }
            vf[k] = x;
            if odd && (k - delta).abs() < d && vf[k] + vb[delta - k] >= n {
                return (x0, y0);
            }
            k += 2;
        }
        let mut k = -d;
        while k <= d {
            let mut x = if k == -d || (k != d && vb[k - 1] < vb[k + 1]) {
                vb[k + 1]
            } else {
                vb[k - 1] + 1
            };
            let mut y = (x as isize - k) as usize;
            if x < n && y < m {
                let s = common_suffix(&a[..n - x], &b[..m - y]);
                x += s;
                y += s;
            }
            vb[k] = x;
            if !odd && (k - delta).abs() <= d && vb[k] + vf[delta - k] >= n {
                return (n - x, m - y);
            }
            k += 2;
        }
    }
    unreachable!("paths always meet within (n + m) / 2 rounds")
}

fn conquer<T: Eq>(
    a: &[T],
    mut ra: std::ops::Range<usize>,
    b: &[T],
    mut rb: std::ops::Range<usize>,
    vf: &mut Diagonals,
    vb: &mut Diagonals,
    out: &mut Vec<(usize, usize)>,
) {
    let pre = common_prefix(&a[ra.clone()], &b[rb.clone()]);
    out.extend((0..pre).map(|i| (ra.start + i, rb.start + i)));
    ra.start += pre;
    rb.start += pre;
    let suf = common_suffix(&a[ra.clone()], &b[rb.clone()]);
    ra.end -= suf;
    rb.end -= suf;
    if !ra.is_empty() && !rb.is_empty() {
        let (x, y) = middle_snake(&a[ra.clone()], &b[rb.clone()], vf, vb);
        let (sx, sy) = (ra.start + x, rb.start + y);
        conquer(a, ra.start..sx, b, rb.start..sy, vf, vb, out);
        conquer(a, sx..ra.end, b, sy..rb.end, vf, vb, out);
    }
    out.extend((0..suf).map(|i| (ra.end + i, rb.end + i)));
}

/// The `k` most frequent corrected-side tokens, ties broken lexicographically.
pub fn top_changes(hunks: &[Hunk], k: usize) -> Vec<(String, usize)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in hunks.iter().flat_map(|h| &h.inserted) {
        *counts.entry(t.text.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    ranked.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    ranked.truncate(k);
    ranked
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffReport {
    pub lecture_id: String,
    pub total_words: usize,
    pub unchanged_words: usize,
    pub unchanged_ratio: f64,
    pub changes: Vec<Hunk>,
    pub top_changes: Vec<(String, usize)>,
    pub punctuation_only_changes: usize,
}

impl DiffReport {
    /// `round(100 * unchanged / total)`, halves rounded up, computed exactly.
    pub fn unchanged_percent(&self) -> u64 {
        if self.total_words == 0 {
            return 100;
        }
        let (u, t) = (self.unchanged_words as u64, self.total_words as u64);
        (200 * u + t) / (2 * t)
    }
}

pub fn diff_report(lecture_id: &str, auto: &str, corrected: &str, k: usize) -> DiffReport {
    let a = tokenize(auto);
    let c = tokenize(corrected);
    let diff = word_diff(&a, &c);
    let total_words = a.len();
    DiffReport {
        lecture_id: lecture_id.to_string(),
        total_words,
        unchanged_words: diff.unchanged,
        unchanged_ratio: if total_words == 0 {
            1.0
        } else {
            diff.unchanged as f64 / total_words as f64
        },
        top_changes: top_changes(&diff.hunks, k),
        changes: diff.hunks,
        punctuation_only_changes: diff.punctuation_only_changes,
    }
}

/// One automatic/corrected transcript pair.
#[derive(Debug, Clone)]
pub struct LecturePair {
    pub lecture_id: String,
    pub auto_markdown: String,
    pub corrected_markdown: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusReport {
    pub rows: Vec<DiffReport>,
}

#[derive(Serialize)]
struct JsonChange<'a> {
    token: &'a str,
    count: usize,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    lecture: &'a str,
    words: usize,
    unchanged_words: usize,
    unchanged_ratio: f64,
    unchanged_percent: u64,
    punctuation_only_changes: usize,
    hunks: usize,
    top_changes: Vec<JsonChange<'a>>,
}

#[derive(Serialize)]
struct JsonAvg {
    words: u64,
    unchanged_percent: u64,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    rows: Vec<JsonRow<'a>>,
    avg: JsonAvg,
}

/// `5328` → `"5,328"`.
pub fn thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn escape_cell(s: &str) -> String {
    s.replace('|', "\\|")
}

impl CorpusReport {
    /// Mean word count, rounded half up.
    pub fn average_words(&self) -> u64 {
        let n = self.rows.len() as u64;
        if n == 0 {
            return 0;
        }
        let sum: u64 = self.rows.iter().map(|r| r.total_words as u64).sum();
        (2 * sum + n) / (2 * n)
    }

    /// Mean of the per-lecture unchanged ratios as a whole percentage.
    pub fn average_percent(&self) -> u64 {
        if self.rows.is_empty() {
            return 100;
        }
        let mean =
            self.rows.iter().map(|r| r.unchanged_ratio).sum::<f64>() / self.rows.len() as f64;
        (mean * 100.0).round() as u64
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "| Lecture | Words | Unchanged | Most Common Changes |\n|---|---:|---:|---|\n",
        );
        for r in &self.rows {
            let changes: Vec<String> = r.top_changes.iter().map(|(t, _)| escape_cell(t)).collect();
            let _ = writeln!(
                out,
                "| {} | {} | {}% | {} |",
                escape_cell(&r.lecture_id),
                thousands(r.total_words as u64),
                r.unchanged_percent(),
                changes.join("; ")
            );
        }
        let _ = writeln!(
            out,
            "| Avg. | {} | {}% |  |",
            thousands(self.average_words()),
            self.average_percent()
        );
        out
    }

    pub fn to_json(&self) -> String {
        let report = JsonReport {
            rows: self
                .rows
                .iter()
                .map(|r| JsonRow {
                    lecture: &r.lecture_id,
                    words: r.total_words,
                    unchanged_words: r.unchanged_words,
                    unchanged_ratio: r.unchanged_ratio,
                    unchanged_percent: r.unchanged_percent(),
                    punctuation_only_changes: r.punctuation_only_changes,
                    hunks: r.changes.len(),
                    top_changes: r
                        .top_changes
                        .iter()
                        .map(|(token, count)| JsonChange {
                            token,
                            count: *count,
                        })
                        .collect(),
                })
                .collect(),
            avg: JsonAvg {
                words: self.average_words(),
                unchanged_percent: self.average_percent(),
            },
        };
        let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Diff every pair; rows keep input order.
///
/// With `include_headings` the whole files are compared, otherwise only the
/// narration text recovered from the transcript layout.
pub fn corpus_report(
    pairs: &[LecturePair],
    include_headings: bool,
    k: usize,
) -> Result<CorpusReport, EmitError> {
    let rows = std::thread::scope(|s| {
        let handles: Vec<_> = pairs
            .iter()
            .map(|p| {
                s.spawn(move || -> Result<DiffReport, EmitError> {
                    if include_headings {
                        Ok(diff_report(
                            &p.lecture_id,
                            &p.auto_markdown,
                            &p.corrected_markdown,
                            k,
                        ))
                    } else {
                        let a = emit::markdown_to_caption_text(&p.auto_markdown)?;
                        let c = emit::markdown_to_caption_text(&p.corrected_markdown)?;
                        Ok(diff_report(&p.lecture_id, &a, &c, k))
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("diff worker panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(CorpusReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(tokens: &[WordToken]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn tokenize_keeps_punctuation() {
        let t = tokenize("the BERT model.");
        assert_eq!(texts(&t), ["the", "BERT", "model."]);
        let norm: Vec<&str> = t.iter().map(|t| t.normalized.as_str()).collect();
        assert_eq!(norm, ["the", "BERT", "model"]);
        assert!(tokenize("").is_empty());
        assert_eq!(
            texts(&tokenize("re-ranking  \n works")),
            ["re-ranking", "works"]
        );
        assert_eq!(WordToken::new("--").normalized, "");
    }

    #[test]
    fn identical_sequences() {
        let t = tokenize("a b c a b");
        let d = word_diff(&t, &t);
        assert_eq!(d.unchanged, 5);
        assert!(d.hunks.is_empty());
    }

    #[test]
    fn bird_becomes_bert() {
        let r = diff_report("x", "the bird model is big", "the BERT model is big", 3);
        assert_eq!(r.unchanged_words, 4);
        assert_eq!(r.unchanged_ratio, 0.8);
        assert_eq!(r.changes.len(), 1);
        assert_eq!(texts(&r.changes[0].deleted), ["bird"]);
        assert_eq!(texts(&r.changes[0].inserted), ["BERT"]);
        assert_eq!(r.top_changes, vec![("BERT".to_string(), 1)]);
        assert_eq!(r.punctuation_only_changes, 0);
    }

    #[test]
    fn punctuation_only_hunks() {
        let r = diff_report("x", "so we rank model", "So, we rank model.", 3);
        assert_eq!(r.unchanged_words, 2);
        assert_eq!(r.changes.len(), 2);
        // "so" -> "So," differs in case, "model" -> "model." only in punctuation
        assert_eq!(r.punctuation_only_changes, 1);
        let r = diff_report("x", "a b", "a - b", 3);
        assert_eq!(r.punctuation_only_changes, 1);
    }

    #[test]
    fn top_change_counting() {
        let h = vec![Hunk {
            deleted: vec![],
            inserted: tokenize("BERT BERT So"),
        }];
        assert_eq!(
            top_changes(&h, 2),
            vec![("BERT".to_string(), 2), ("So".to_string(), 1)]
        );
        assert!(top_changes(&[], 3).is_empty());
        let tie = vec![Hunk {
            deleted: vec![],
            inserted: tokenize("b a"),
        }];
        assert_eq!(top_changes(&tie, 1), vec![("a".to_string(), 1)]);
    }

    #[test]
    fn hunk_deletions_account_for_changed_words() {
        let r = diff_report("x", "a b c d e f", "a x c y y f g", 5);
        let deleted: usize = r.changes.iter().map(|h| h.deleted.len()).sum();
        assert_eq!(deleted, r.total_words - r.unchanged_words);
    }

    #[test]
    fn percent_rounding() {
        let mut r = diff_report("x", "", "", 1);
        assert_eq!(r.unchanged_ratio, 1.0);
        assert_eq!(r.unchanged_percent(), 100);
        r.total_words = 200;
        r.unchanged_words = 189; // 94.5
        assert_eq!(r.unchanged_percent(), 95);
        r.unchanged_words = 188; // 94.0
        assert_eq!(r.unchanged_percent(), 94);
    }

    #[test]
    fn thousands_separator() {
        assert_eq!(thousands(0), "0");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(5328), "5,328");
        assert_eq!(thousands(1234567), "1,234,567");
    }
}
