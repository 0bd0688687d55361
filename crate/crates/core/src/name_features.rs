//! Pairwise column-name similarity features.

use std::cmp::min;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, Embedder, Embedding};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NameFeatureVector {
    pub cos_name: f64,
    pub bleu: f64,
    pub edit_sim: f64,
    pub lcs_ratio: f64,
    pub one_in_one: f64,
}

impl NameFeatureVector {
    pub const NAMES: [&'static str; 5] = ["cos_name", "bleu", "edit_sim", "lcs_ratio", "one_in_one"];

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.cos_name,
            self.bleu,
            self.edit_sim,
            self.lcs_ratio,
            self.one_in_one,
        ]
    }
}

/// Splits on non-alphanumeric runs and lower-to-upper camelCase boundaries, lowercasing.
pub fn tokenize_name(name: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut prev_lower = false;
    for c in name.chars() {
        if !c.is_alphanumeric() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            prev_lower = false;
            continue;
        }
        if prev_lower && c.is_uppercase() && !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        current.extend(c.to_lowercase());
        prev_lower = c.is_lowercase();
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Sentence BLEU of `candidate` against `reference` over name tokens.
///
/// Uses up to 4-grams (fewer for short candidates), uniform weights, add-one
/// smoothing for n >= 2 and the usual brevity penalty.
fn directed_bleu(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let max_n = min(4, candidate.len());
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let cand = ngram_counts(candidate, n);
        let refs = ngram_counts(reference, n);
        let total: usize = cand.values().sum();
        let matched: usize = cand
            .iter()
            .map(|(g, &c)| min(c, refs.get(g).copied().unwrap_or(0)))
            .sum();
        let precision = if n == 1 {
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        if precision == 0.0 {
            return 0.0;
        }
        log_sum += precision.ln() / max_n as f64;
    }
    let (c, r) = (candidate.len() as f64, reference.len() as f64);
    let brevity = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    brevity * log_sum.exp()
}

/// BLEU between two names, averaged over both directions.
pub fn bleu_score(a: &str, b: &str) -> f64 {
    let (ta, tb) = (tokenize_name(a), tokenize_name(b));
    let score = (directed_bleu(&ta, &tb) + directed_bleu(&tb, &ta)) / 2.0;
    score.clamp(0.0, 1.0)
}

/// Unrestricted Damerau-Levenshtein distance (Lowrance-Wagner).
pub fn damerau_levenshtein(a: &[char], b: &[char]) -> usize {
    let (n, m) = (a.len(), b.len());
    let inf = n + m;
    let mut d = vec![vec![0usize; m + 2]; n + 2];
    d[0][0] = inf;
    for i in 0..=n {
        d[i + 1][0] = inf;
        d[i + 1][1] = i;
    }
    for j in 0..=m {
        d[0][j + 1] = inf;
        d[1][j + 1] = j;
    }
    let mut last_row: HashMap<char, usize> = HashMap::new();
    for i in 1..=n {
        let mut last_match_col = 0;
        for j in 1..=m {
            let k = last_row.get(&b[j - 1]).copied().unwrap_or(0);
            let l = last_match_col;
            let cost = if a[i - 1] == b[j - 1] {
                last_match_col = j;
                0
            } else {
                1
            };
            d[i + 1][j + 1] = (d[i][j] + cost)
                .min(d[i + 1][j] + 1)
                .min(d[i][j + 1] + 1)
                .min(d[k][l] + (i - k - 1) + 1 + (j - l - 1));
        }
        last_row.insert(a[i - 1], i);
    }
    d[n + 1][m + 1]
}

fn lower_chars(s: &str) -> Vec<char> {
    s.to_lowercase().chars().collect()
}

/// `1 - DL(a, b) / max(|a|, |b|)` on lowercased names; 1 when both are empty.
pub fn edit_similarity(a: &str, b: &str) -> f64 {
    let (a, b) = (lower_chars(a), lower_chars(b));
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - damerau_levenshtein(&a, &b) as f64 / longest as f64
}

pub fn lcs_len(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Character LCS length over the longer name's length; 0 if either is empty.
pub fn lcs_ratio(a: &str, b: &str) -> f64 {
    let (a, b) = (lower_chars(a), lower_chars(b));
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    lcs_len(&a, &b) as f64 / a.len().max(b.len()) as f64
}

pub fn one_in_one(a: &str, b: &str) -> f64 {
    let (a, b) = (a.to_lowercase(), b.to_lowercase());
    let hit = if a.is_empty() || b.is_empty() {
        a.is_empty() && b.is_empty()
    } else {
        a.contains(&b) || b.contains(&a)
    };
    if hit {
        1.0
    } else {
        0.0
    }
}

/// Name features from precomputed name embeddings.
pub fn name_features_from(
    a: &str,
    b: &str,
    emb_a: &Embedding,
    emb_b: &Embedding,
) -> Result<NameFeatureVector> {
    Ok(NameFeatureVector {
        cos_name: cosine(emb_a, emb_b)?,
        bleu: bleu_score(a, b),
        edit_sim: edit_similarity(a, b),
        lcs_ratio: lcs_ratio(a, b),
        one_in_one: one_in_one(a, b),
    })
}

pub fn name_features(embedder: &Embedder, a: &str, b: &str) -> Result<NameFeatureVector> {
    let emb = embedder.embed_many(&[a, b])?;
    name_features_from(a, b, &emb[0], &emb[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dl(a: &str, b: &str) -> usize {
        damerau_levenshtein(&lower_chars(a), &lower_chars(b))
    }

    #[test]
    fn tokenizes() {
        assert_eq!(tokenize_name("rating_star"), vec!["rating", "star"]);
        assert_eq!(tokenize_name("originalTitle"), vec!["original", "title"]);
        assert_eq!(tokenize_name("ISO-3"), vec!["iso", "3"]);
        assert_eq!(tokenize_name("  __ "), Vec::<String>::new());
        assert!(tokenize_name("").is_empty());
    }

    #[test]
    fn bleu_cases() {
        assert_eq!(bleu_score("rating_star", "rating_star"), 1.0);
        assert_eq!(bleu_score("a b c d e", "a b c d e"), 1.0);
        // p1 = 1/2, p2 = (0 + 1) / (1 + 1); geometric mean 1/2 both ways.
        assert!((bleu_score("rating_star", "review_star") - 0.5).abs() < 1e-12);
        assert_eq!(bleu_score("abc", ""), 0.0);
        assert_eq!(bleu_score("rating", "review"), 0.0);
    }

    #[test]
    fn bleu_brevity_penalty() {
        // "star" vs "rating star": candidate side p1 = 1, BP = exp(1 - 2/1);
        // reference side p1 = 1/2, p2 = 1/2, BP = 1.
        let expected = ((1.0f64 - 2.0).exp() + 0.5) / 2.0;
        assert!((bleu_score("star", "rating_star") - expected).abs() < 1e-12);
    }

    #[test]
    fn dl_cases() {
        assert_eq!(dl("ab", "ba"), 1);
        assert_eq!(dl("kitten", "sitting"), 3);
        assert_eq!(dl("ca", "abc"), 2);
        assert_eq!(dl("", "abc"), 3);
        assert!((edit_similarity("ab", "ba") - 0.5).abs() < 1e-15);
        assert!((edit_similarity("kitten", "sitting") - (1.0 - 3.0 / 7.0)).abs() < 1e-15);
        assert_eq!(edit_similarity("", ""), 1.0);
        assert_eq!(edit_similarity("Same", "same"), 1.0);
    }

    #[test]
    fn lcs_cases() {
        assert_eq!(lcs_ratio("abc", "abc"), 1.0);
        assert!((lcs_ratio("abc", "axc") - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(lcs_ratio("abc", ""), 0.0);
        // "col3" vs "price": only "c" is shared.
        assert!((lcs_ratio("col3", "price") - 1.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn containment() {
        assert_eq!(one_in_one("title", "originalTitle"), 1.0);
        assert_eq!(one_in_one("rating", "review"), 0.0);
        assert_eq!(one_in_one("x", "x"), 1.0);
        assert_eq!(one_in_one("", "x"), 0.0);
        assert_eq!(one_in_one("", ""), 1.0);
    }

    #[test]
    fn identity_and_symmetry() {
        let emb = Embedder::hashed(256).unwrap();
        let f = name_features(&emb, "rating_star", "rating_star").unwrap();
        for v in f.to_array() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let ab = name_features(&emb, "col3", "price").unwrap();
        let ba = name_features(&emb, "price", "col3").unwrap();
        assert_eq!(ab, ba);
        assert_eq!(ab.one_in_one, 0.0);
    }

    proptest! {
        #[test]
        fn components_symmetric_and_bounded(a in "[a-zA-Z_ ]{0,12}", b in "[a-zA-Z_ ]{0,12}") {
            let emb = Embedder::hashed(64).unwrap();
            let ab = name_features(&emb, &a, &b).unwrap();
            let ba = name_features(&emb, &b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            for v in &ab.to_array()[1..] {
                prop_assert!((0.0..=1.0).contains(v));
            }
            prop_assert!((-1.0..=1.0).contains(&ab.cos_name));
        }
    }
}
