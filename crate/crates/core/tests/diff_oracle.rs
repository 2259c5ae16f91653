//! The diff engine against an exhaustive dynamic-programming LCS.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slidescribe::analyze::{lcs_matches, word_diff, WordToken};

/// Textbook O(n·m) LCS length table.
fn dp_lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

fn tokens(words: &[String]) -> Vec<WordToken> {
    words.iter().map(|w| WordToken::new(w)).collect()
}

fn random_seq(rng: &mut ChaCha8Rng, max_len: usize, vocab: usize) -> Vec<String> {
    let len = rng.random_range(0..=max_len);
    (0..len)
        .map(|_| format!("w{}", rng.random_range(0..vocab)))
        .collect()
}

fn check_alignment(a: &[String], b: &[String]) {
    let m = lcs_matches(a, b);
    for w in m.windows(2) {
        assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1, "matches not increasing");
    }
    for &(i, j) in &m {
        assert_eq!(a[i], b[j]);
    }
}

#[test]
fn random_small_pairs_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..2000 {
        let a = random_seq(&mut rng, 30, 10);
        let b = random_seq(&mut rng, 30, 10);
        let d = word_diff(&tokens(&a), &tokens(&b));
        assert_eq!(d.unchanged, dp_lcs(&a, &b), "{a:?} vs {b:?}");
        check_alignment(&a, &b);
    }
}

#[test]
fn tiny_vocabularies_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for vocab in 1..=3 {
        for _ in 0..500 {
            let a = random_seq(&mut rng, 12, vocab);
            let b = random_seq(&mut rng, 12, vocab);
            assert_eq!(
                word_diff(&tokens(&a), &tokens(&b)).unchanged,
                dp_lcs(&a, &b)
            );
        }
    }
}

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e."]), 0..25)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

proptest! {
    #[test]
    fn symmetric_in_count(a in words(), b in words()) {
        prop_assert_eq!(
            word_diff(&tokens(&a), &tokens(&b)).unchanged,
            word_diff(&tokens(&b), &tokens(&a)).unchanged
        );
    }

    #[test]
    fn appending_a_shared_token_adds_one(a in words(), b in words(), t in "[a-z]{1,3}") {
        let before = word_diff(&tokens(&a), &tokens(&b)).unchanged;
        let (mut a2, mut b2) = (a.clone(), b.clone());
        a2.push(t.clone());
        b2.push(t);
        prop_assert_eq!(word_diff(&tokens(&a2), &tokens(&b2)).unchanged, before + 1);
    }

    #[test]
    fn bounded_and_accounted(a in words(), b in words()) {
        let d = word_diff(&tokens(&a), &tokens(&b));
        prop_assert!(d.unchanged <= a.len().min(b.len()));
        let deleted: usize = d.hunks.iter().map(|h| h.deleted.len()).sum();
        let inserted: usize = d.hunks.iter().map(|h| h.inserted.len()).sum();
        prop_assert_eq!(deleted, a.len() - d.unchanged);
        prop_assert_eq!(inserted, b.len() - d.unchanged);
        prop_assert_eq!(d.unchanged, dp_lcs(&a, &b));
    }

    #[test]
    fn disjoint_vocabularies_share_nothing(a in words(), n in 0usize..20) {
        let b: Vec<String> = (0..n).map(|i| format!("z{i}")).collect();
        prop_assert_eq!(word_diff(&tokens(&a), &tokens(&b)).unchanged, 0);
    }
}

#[test]
fn large_disjoint_documents() {
    let a: Vec<String> = (0..3000).map(|i| format!("a{}", i % 50)).collect();
    let b: Vec<String> = (0..3000).map(|i| format!("b{}", i % 50)).collect();
    assert_eq!(word_diff(&tokens(&a), &tokens(&b)).unchanged, 0);
}
