//! Context guessability: the probability of a word given its left context.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::text::{sentences, token_key, tokenize, Lemma, Lemmatizer, Token};

/// Sentence-start padding symbol. Never part of the vocabulary.
pub const BOS: &str = "<s>";
/// Out-of-vocabulary sentinel.
pub const UNK: &str = "<unk>";

/// Floor applied when a zero smoothing constant would give `G = 0`.
pub const MIN_GUESSABILITY: f64 = 1e-12;

const FORMAT_TAG: &str = "ngram-v1";
const BOS_ID: u32 = 0;
const UNK_ID: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuessabilityScore {
    pub token_index: usize,
    #[serde(rename = "g")]
    pub value: f64,
}

/// Anything that can score word tokens by how predictable they are from
/// their left context. Implementations return one score per word token, in
/// document order, each in `(0, 1]`.
pub trait ContextScorer: Send + Sync {
    fn context_score(&self, tokens: &[Token]) -> Vec<GuessabilityScore>;
}

/// Scores every word with the same value. Useful as an ablation baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantScorer {
    value: f64,
}

impl ConstantScorer {
    pub fn new(value: f64) -> Result<Self, ModelError> {
        if value > 0.0 && value <= 1.0 {
            Ok(ConstantScorer { value })
        } else {
            Err(ModelError::BadConstant(value))
        }
    }
}

impl ContextScorer for ConstantScorer {
    fn context_score(&self, tokens: &[Token]) -> Vec<GuessabilityScore> {
        tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_word())
            .map(|(i, _)| GuessabilityScore { token_index: i, value: self.value })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextCounts {
    total: u64,
    next: HashMap<u32, u64>,
}

/// Add-k smoothed n-gram model over lemma keys with longest-seen-context
/// backoff.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    smoothing_k: f64,
    /// id -> key; ids 0 and 1 are BOS and UNK.
    words: Vec<String>,
    ids: HashMap<String, u32>,
    counts: HashMap<Vec<u32>, ContextCounts>,
    lemmatizer: Lemmatizer,
}

impl NGramModel {
    fn empty(order: usize, smoothing_k: f64) -> Result<Self, ModelError> {
        if order == 0 {
            return Err(ModelError::ZeroOrder);
        }
        if !(smoothing_k.is_finite() && smoothing_k >= 0.0) {
            return Err(ModelError::BadSmoothing(smoothing_k));
        }
        let words = vec![BOS.to_string(), UNK.to_string()];
        let ids = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Ok(NGramModel { order, smoothing_k, words, ids, counts: HashMap::new(), lemmatizer: Lemmatizer::default() })
    }

    /// Trains on pre-lemmatized sentences. Vocabulary ids are assigned in
    /// sorted order so that equal corpora give equal models.
    pub fn train<S>(sentences: &[S], order: usize, smoothing_k: f64) -> Result<Self, ModelError>
    where
        S: AsRef<[Lemma]>,
    {
        let mut model = Self::empty(order, smoothing_k)?;
        let vocab: BTreeSet<&str> = sentences.iter().flat_map(|s| s.as_ref().iter().map(Lemma::as_str)).collect();
        if vocab.is_empty() {
            return Err(ModelError::EmptyCorpus);
        }
        for w in vocab {
            model.intern(w);
        }
        for s in sentences {
            let ids: Vec<u32> = s.as_ref().iter().map(|l| model.ids[l.as_str()]).collect();
            model.count_sentence(&ids);
        }
        Ok(model)
    }

    /// Tokenizes and lemmatizes raw texts, then trains.
    pub fn train_texts<S>(texts: &[S], order: usize, smoothing_k: f64) -> Result<Self, ModelError>
    where
        S: AsRef<str>,
    {
        let lz = Lemmatizer::default();
        let mut corpus: Vec<Vec<Lemma>> = Vec::new();
        for text in texts {
            let tokens = tokenize(text.as_ref());
            for s in sentences(&tokens) {
                corpus.push(s.tokens.iter().map(|t| token_key(&lz, t)).collect());
            }
        }
        Self::train(&corpus, order, smoothing_k)
    }

    fn intern(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(w.to_string());
        self.ids.insert(w.to_string(), id);
        id
    }

    fn count_sentence(&mut self, ids: &[u32]) {
        let pad = self.order - 1;
        let mut history = vec![BOS_ID; pad];
        history.extend_from_slice(ids);
        for pos in pad..history.len() {
            let w = history[pos];
            for ctx_len in 0..self.order {
                let ctx = history[pos - ctx_len..pos].to_vec();
                let c = self.counts.entry(ctx).or_default();
                c.total += 1;
                *c.next.entry(w).or_default() += 1;
            }
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing_k(&self) -> f64 {
        self.smoothing_k
    }

    /// Training lemmas plus UNK.
    pub fn vocab_size(&self) -> usize {
        self.words.len() - 1
    }

    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.words[1..].iter().map(String::as_str)
    }

    fn id_or_unk(&self, w: &str) -> u32 {
        match self.ids.get(w) {
            Some(&id) if id != BOS_ID => id,
            _ if w == BOS => BOS_ID,
            _ => UNK_ID,
        }
    }

    pub fn count(&self, context: &[&str], word: &str) -> u64 {
        let ctx: Vec<u32> = context.iter().map(|w| self.id_or_unk(w)).collect();
        self.counts.get(&ctx).and_then(|c| c.next.get(&self.id_or_unk(word))).copied().unwrap_or(0)
    }

    pub fn context_count(&self, context: &[&str]) -> u64 {
        let ctx: Vec<u32> = context.iter().map(|w| self.id_or_unk(w)).collect();
        self.counts.get(&ctx).map_or(0, |c| c.total)
    }

    /// `(count(ctx, w) + k) / (count(ctx) + k * |V|)` at exactly this context,
    /// without backoff. Out-of-vocabulary words map to UNK.
    pub fn conditional_probability(&self, context: &[&str], word: &str) -> f64 {
        let ctx: Vec<u32> = context.iter().map(|w| self.id_or_unk(w)).collect();
        self.probability_ids(&ctx, self.id_or_unk(word))
    }

    fn probability_ids(&self, ctx: &[u32], w: u32) -> f64 {
        let (total, hit) = self.counts.get(ctx).map_or((0, 0), |c| (c.total, c.next.get(&w).copied().unwrap_or(0)));
        let k = self.smoothing_k;
        let num = hit as f64 + k;
        let den = total as f64 + k * self.vocab_size() as f64;
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// Probability under the longest context (at most `order - 1` keys) that
    /// was seen in training.
    fn backoff_probability(&self, history: &[u32], w: u32) -> f64 {
        let max = (self.order - 1).min(history.len());
        for len in (0..=max).rev() {
            let ctx = &history[history.len() - len..];
            if self.counts.get(ctx).is_some_and(|c| c.total > 0) {
                return self.probability_ids(ctx, w);
            }
        }
        self.probability_ids(&[], w)
    }

    /// G for every word token.
    pub fn score_tokens(&self, tokens: &[Token]) -> Vec<GuessabilityScore> {
        let mut out = Vec::new();
        for s in sentences(tokens) {
            let mut history = vec![BOS_ID; self.order - 1];
            for (offset, t) in s.tokens.iter().enumerate() {
                let key = token_key(&self.lemmatizer, t);
                let id = self.id_or_unk(key.as_str());
                if t.is_word() {
                    let g = self.backoff_probability(&history, id).clamp(MIN_GUESSABILITY, 1.0);
                    out.push(GuessabilityScore { token_index: s.first_token + offset, value: g });
                }
                history.push(id);
            }
        }
        out
    }

    /// Sum of the smoothed distribution over the vocabulary at `context`.
    pub fn distribution_mass(&self, context: &[&str]) -> f64 {
        let ctx: Vec<u32> = context.iter().map(|w| self.id_or_unk(w)).collect();
        (1..self.words.len() as u32).map(|w| self.probability_ids(&ctx, w)).sum()
    }

    /// All stored contexts, as keys.
    pub fn contexts(&self) -> Vec<Vec<&str>> {
        self.counts.keys().map(|ctx| ctx.iter().map(|&id| self.words[id as usize].as_str()).collect()).collect()
    }

    /// Line-based format: a header `ngram-v1<TAB>order<TAB>k<TAB>vocab_size`,
    /// then sorted `context<TAB>lemma<TAB>count` lines with context keys
    /// space-separated (empty for the unigram context).
    pub fn to_text(&self) -> String {
        let mut lines: Vec<(usize, String, String, u64)> = Vec::new();
        for (ctx, c) in &self.counts {
            let ctx_str = ctx.iter().map(|&id| self.words[id as usize].as_str()).collect::<Vec<_>>().join(" ");
            for (&w, &n) in &c.next {
                lines.push((ctx.len(), ctx_str.clone(), self.words[w as usize].clone(), n));
            }
        }
        lines.sort();
        let mut out = format!("{FORMAT_TAG}\t{}\t{}\t{}\n", self.order, self.smoothing_k, self.vocab_size());
        for (_, ctx, w, n) in lines {
            let _ = writeln!(out, "{ctx}\t{w}\t{n}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let f = std::fs::File::open(path)?;
        Self::read(BufReader::new(f))
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        Self::read(text.as_bytes())
    }

    fn read<R: BufRead>(reader: R) -> Result<Self, ModelError> {
        let bad = |line: usize, message: String| ModelError::Format { line, message };
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing header".into()))??;
        let h: Vec<&str> = header.split('\t').collect();
        if h.len() != 4 || h[0] != FORMAT_TAG {
            return Err(bad(1, format!("expected `{FORMAT_TAG}<TAB>order<TAB>k<TAB>vocab`")));
        }
        let order: usize = h[1].parse().map_err(|_| bad(1, format!("bad order {:?}", h[1])))?;
        let k: f64 = h[2].parse().map_err(|_| bad(1, format!("bad k {:?}", h[2])))?;
        let vocab_size: usize = h[3].parse().map_err(|_| bad(1, format!("bad vocab size {:?}", h[3])))?;

        let mut rows = Vec::new();
        let mut vocab = BTreeSet::new();
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(bad(n, "expected `context<TAB>lemma<TAB>count`".into()));
            }
            let ctx: Vec<String> =
                if f[0].is_empty() { Vec::new() } else { f[0].split(' ').map(str::to_string).collect() };
            if ctx.len() >= order.max(1) {
                return Err(bad(n, format!("context longer than order - 1 = {}", order.saturating_sub(1))));
            }
            let count: u64 = f[2].parse().map_err(|_| bad(n, format!("bad count {:?}", f[2])))?;
            if ctx.is_empty() {
                vocab.insert(f[1].to_string());
            }
            rows.push((ctx, f[1].to_string(), count));
        }
        let mut model = Self::empty(order, k)?;
        for w in &vocab {
            model.intern(w);
        }
        if model.vocab_size() != vocab_size {
            return Err(bad(1, format!("header vocab {vocab_size} but file has {}", model.vocab_size())));
        }
        for (ctx, w, count) in rows {
            let mut ids = Vec::with_capacity(ctx.len());
            for c in &ctx {
                match model.ids.get(c.as_str()) {
                    Some(&id) => ids.push(id),
                    None => return Err(bad(0, format!("context key {c:?} not in vocabulary"))),
                }
            }
            let wid = *model.ids.get(w.as_str()).ok_or_else(|| bad(0, format!("lemma {w:?} not in vocabulary")))?;
            let c = model.counts.entry(ids).or_default();
            c.total += count;
            c.next.insert(wid, count);
        }
        Ok(model)
    }
}

impl ContextScorer for NGramModel {
    fn context_score(&self, tokens: &[Token]) -> Vec<GuessabilityScore> {
        self.score_tokens(tokens)
    }
}

impl PartialEq for NGramModel {
    fn eq(&self, other: &Self) -> bool {
        self.to_text() == other.to_text()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> NGramModel {
        NGramModel::train_texts(&["the cat sat . the cat ran ."], 2, 1.0).unwrap()
    }

    #[test]
    fn bigram_example() {
        let m = toy();
        assert_eq!(m.vocab_size(), 6);
        assert_eq!(m.count(&["the"], "cat"), 2);
        assert_eq!(m.context_count(&["the"]), 2);
        assert_eq!(m.conditional_probability(&["the"], "cat"), 0.375);
    }

    #[test]
    fn direct_count() {
        let m = NGramModel::train_texts(&["a b a b"], 2, 1.0).unwrap();
        assert_eq!(m.count(&["a"], "b"), 2);
        assert_eq!(m.count(&["b"], "a"), 1);
        assert_eq!(m.count(&[BOS], "a"), 1);
    }

    #[test]
    fn unigram_and_errors() {
        let m = NGramModel::train_texts(&["a"], 1, 0.0).unwrap();
        let ts = tokenize("a");
        assert_eq!(m.score_tokens(&ts)[0].value, 1.0);
        assert!(matches!(NGramModel::train_texts(&["a"], 0, 1.0), Err(ModelError::ZeroOrder)));
        assert!(matches!(NGramModel::train_texts(&[""], 2, 1.0), Err(ModelError::EmptyCorpus)));
        assert!(matches!(NGramModel::train_texts(&["a"], 2, -1.0), Err(ModelError::BadSmoothing(_))));
    }

    #[test]
    fn unseen_context_is_uniform() {
        let m = toy();
        let p = m.conditional_probability(&["zebra"], "cat");
        assert_eq!(p, 1.0 / 6.0);
    }

    #[test]
    fn oov_maps_to_unk_and_backs_off() {
        let m = toy();
        let ts = tokenize("the dog sat");
        let g = m.score_tokens(&ts);
        assert_eq!(g.len(), 3);
        // "dog" unseen after "the": (0+1)/(2+6)
        assert_eq!(g[1].value, 0.125);
        // context "<unk>" never seen -> back off to unigram: (count(sat)=1 + 1)/(8 + 6)
        assert_eq!(g[2].value, 2.0 / 14.0);
    }

    #[test]
    fn zero_k_is_floored() {
        let m = NGramModel::train_texts(&["a b"], 2, 0.0).unwrap();
        let g = m.score_tokens(&tokenize("b zzz"));
        assert!(g.iter().all(|s| s.value > 0.0 && s.value <= 1.0));
        assert_eq!(g[1].value, MIN_GUESSABILITY);
    }

    #[test]
    fn constant_scorer() {
        let c = ConstantScorer::new(0.2).unwrap();
        let ts = tokenize("One, two three.");
        let g = c.context_score(&ts);
        assert_eq!(g.iter().map(|s| s.token_index).collect::<Vec<_>>(), vec![0, 2, 3]);
        assert!(g.iter().all(|s| s.value == 0.2));
        assert!(c.context_score(&[]).is_empty());
        assert!(ConstantScorer::new(0.0).is_err());
        assert!(ConstantScorer::new(1.5).is_err());
    }

    #[test]
    fn scores_on_training_text_are_positive() {
        let text = "The cat sat on the mat. A dog ran after the cat. The mat was red.";
        let m = NGramModel::train_texts(&[text], 3, 1.0).unwrap();
        let g = m.context_score(&tokenize(text));
        assert_eq!(g.len(), tokenize(text).iter().filter(|t| t.is_word()).count());
        assert!(g.iter().all(|s| s.value > 0.0 && s.value <= 1.0));
    }

    #[test]
    fn text_roundtrip_reproduces_scores() {
        let text = "The cat sat on the mat. A dog ran after the cat. The mat was red.";
        let m = NGramModel::train_texts(&[text], 3, 0.5).unwrap();
        let back = NGramModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        let ts = tokenize("The dog sat on a red cat.");
        assert_eq!(m.score_tokens(&ts), back.score_tokens(&ts));
    }

    #[test]
    fn malformed_model_files() {
        assert!(NGramModel::from_text("").is_err());
        assert!(NGramModel::from_text("ngram-v2\t2\t1\t1\n").is_err());
        let err = NGramModel::from_text("ngram-v1\t2\t1\t2\n\ta\tx\n").unwrap_err();
        assert!(matches!(err, ModelError::Format { line: 2, .. }));
        let err = NGramModel::from_text("ngram-v1\t2\t1\t9\n\ta\t1\n").unwrap_err();
        assert!(err.to_string().contains("vocab"));
    }

    #[test]
    fn distributions_normalize() {
        let m = toy();
        for ctx in m.contexts() {
            assert!((m.distribution_mass(&ctx) - 1.0).abs() < 1e-9);
        }
    }
}
