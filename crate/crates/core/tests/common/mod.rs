//! Independent reference implementations used by the integration tests.
//!
//! These are deliberately naive: linear scans and full sorts, no shared code
//! with the library beyond plain data types.

#![allow(dead_code)]

use std::collections::BTreeMap;

use vocabweave::text::{CandidateOccurrence, CandidateScores, Lemma};

/// Words that the bundled lemmatizer maps to themselves, so raw text and
/// lemma keys coincide.
pub const TOY_VOCAB: [&str; 8] = ["cat", "dog", "bird", "tree", "blue", "red", "jump", "sing"];

pub const ORACLE_BOS: &str = "<s>";
pub const ORACLE_UNK: &str = "<unk>";

/// Add-k n-gram probabilities by scanning the training corpus for every query.
pub struct BruteForceNGram {
    pub order: usize,
    pub k: f64,
    /// Training sentences, each left-padded with `order - 1` BOS markers.
    padded: Vec<Vec<String>>,
    vocab: Vec<String>,
}

impl BruteForceNGram {
    pub fn new(sentences: &[Vec<String>], order: usize, k: f64) -> Self {
        let mut vocab: Vec<String> = sentences.iter().flatten().cloned().collect();
        vocab.sort();
        vocab.dedup();
        let padded = sentences
            .iter()
            .map(|s| {
                let mut p = vec![ORACLE_BOS.to_string(); order - 1];
                p.extend(s.iter().cloned());
                p
            })
            .collect();
        BruteForceNGram { order, k, padded, vocab }
    }

    /// Training words plus UNK.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len() + 1
    }

    pub fn known(&self, w: &str) -> bool {
        self.vocab.iter().any(|v| v == w)
    }

    fn map(&self, w: &str) -> String {
        if w == ORACLE_BOS || self.known(w) {
            w.to_string()
        } else {
            ORACLE_UNK.to_string()
        }
    }

    /// `(occurrences of ctx followed by anything, occurrences of ctx w)`.
    pub fn counts(&self, ctx: &[String], w: &str) -> (u64, u64) {
        let (mut total, mut hit) = (0u64, 0u64);
        for s in &self.padded {
            for pos in (self.order - 1)..s.len() {
                if pos < ctx.len() {
                    continue;
                }
                if s[pos - ctx.len()..pos] == *ctx {
                    total += 1;
                    if s[pos] == w {
                        hit += 1;
                    }
                }
            }
        }
        (total, hit)
    }

    pub fn smoothed(&self, ctx: &[String], w: &str) -> f64 {
        let (total, hit) = self.counts(ctx, w);
        let num = hit as f64 + self.k;
        let den = total as f64 + self.k * self.vocab_size() as f64;
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// G for every word of one sentence: longest seen context, floored.
    pub fn score_sentence(&self, words: &[&str]) -> Vec<f64> {
        let mut history: Vec<String> = vec![ORACLE_BOS.to_string(); self.order - 1];
        let mut out = Vec::new();
        for w in words {
            let w = self.map(w);
            let mut p = None;
            for len in (0..self.order).rev() {
                let ctx = &history[history.len() - len..];
                if self.counts(ctx, "").0 > 0 {
                    p = Some(self.smoothed(ctx, &w));
                    break;
                }
            }
            let p = p.unwrap_or_else(|| self.smoothed(&[], &w));
            out.push(p.clamp(1e-12, 1.0));
            history.push(w);
        }
        out
    }

    /// Every context of length below `order` that occurs in training.
    pub fn seen_contexts(&self) -> Vec<Vec<String>> {
        let mut out: Vec<Vec<String>> = Vec::new();
        for s in &self.padded {
            for pos in (self.order - 1)..s.len() {
                for len in 0..self.order {
                    let c = s[pos - len..pos].to_vec();
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    pub fn mass(&self, ctx: &[String]) -> f64 {
        self.vocab.iter().map(String::as_str).chain([ORACLE_UNK]).map(|w| self.smoothed(ctx, w)).sum()
    }
}

pub fn lemma(s: &str) -> Lemma {
    Lemma::new(s).expect("valid lemma")
}

pub fn occurrence(token_index: usize, lemma_id: &str, priority: f64) -> CandidateOccurrence {
    CandidateOccurrence {
        token_index,
        lemma: lemma(lemma_id),
        sentence_index: 0,
        scores: Some(CandidateScores { recall: 0.0, guessability: 0.0, boost: 1.0, understanding: 0.0, priority }),
    }
}

/// Expected greedy selection: sort lemmas by (max priority desc, lemma asc)
/// and take the shortest prefix whose occurrences reach the density, capped
/// at `max_lemmas`.
pub fn sort_prefix_selection(
    candidates: &[CandidateOccurrence],
    density: f64,
    max_lemmas: Option<usize>,
    total_words: usize,
) -> (Vec<String>, f64) {
    if total_words == 0 {
        return (Vec::new(), 0.0);
    }
    let mut agg: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for c in candidates {
        let p = c.scores.expect("scored").priority;
        let e = agg.entry(c.lemma.as_str().to_string()).or_insert((f64::NEG_INFINITY, 0));
        if p > e.0 {
            e.0 = p;
        }
        e.1 += 1;
    }
    let mut rows: Vec<(String, f64, usize)> = agg.into_iter().map(|(l, (p, n))| (l, p, n)).collect();
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let cap = max_lemmas.unwrap_or(usize::MAX);
    let mut chosen = Vec::new();
    let mut covered = 0usize;
    for (l, _, n) in rows {
        if covered as f64 / total_words as f64 >= density || chosen.len() >= cap {
            break;
        }
        covered += n;
        chosen.push(l);
    }
    (chosen, covered as f64 / total_words as f64)
}
