use std::collections::HashMap;

use serde::Serialize;

use crate::error::AnalyzeError;
use crate::text::{lemmatize, tokenize, Lemma};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageConfig {
    alpha: f64,
    /// Words per minute.
    reading_speed: f64,
    reading_hours_per_day: f64,
    percentile: f64,
}

impl CoverageConfig {
    pub fn new(
        alpha: f64,
        reading_speed: f64,
        reading_hours_per_day: f64,
        percentile: f64,
    ) -> Result<Self, AnalyzeError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(AnalyzeError::Config(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(reading_speed > 0.0 && reading_speed.is_finite()) {
            return Err(AnalyzeError::Config(format!("reading speed must be positive, got {reading_speed}")));
        }
        if !(reading_hours_per_day > 0.0 && reading_hours_per_day <= 24.0) {
            return Err(AnalyzeError::Config(format!(
                "reading hours per day must lie in (0, 24], got {reading_hours_per_day}"
            )));
        }
        if !(percentile > 0.0 && percentile <= 100.0) {
            return Err(AnalyzeError::Config(format!("percentile must lie in (0, 100], got {percentile}")));
        }
        Ok(CoverageConfig { alpha, reading_speed, reading_hours_per_day, percentile })
    }

    /// 200 words per minute, 3 hours a day, 90th percentile.
    pub fn with_alpha(alpha: f64) -> Result<Self, AnalyzeError> {
        Self::new(alpha, 200.0, 3.0, 90.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn reading_speed(&self) -> f64 {
        self.reading_speed
    }

    pub fn reading_hours_per_day(&self) -> f64 {
        self.reading_hours_per_day
    }

    pub fn percentile(&self) -> f64 {
        self.percentile
    }
}

/// Word tokens of `text`, lemmatized. Punctuation and numbers are dropped.
pub fn corpus_lemmas(text: &str) -> Vec<Lemma> {
    tokenize(text).iter().filter(|t| t.is_word()).map(|t| lemmatize(&t.surface)).collect()
}

fn frequencies(corpus: &[Lemma]) -> Vec<(&Lemma, usize)> {
    let mut freq: HashMap<&Lemma, usize> = HashMap::new();
    for l in corpus {
        *freq.entry(l).or_default() += 1;
    }
    let mut v: Vec<_> = freq.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v
}

/// Smallest frequency-ordered prefix of lemmas (ties by lemma) covering at
/// least `alpha` of all tokens.
pub fn coverage_lemma_set(corpus: &[Lemma], alpha: f64) -> Vec<Lemma> {
    let total = corpus.len();
    let mut covered = 0usize;
    let mut out = Vec::new();
    for (lemma, n) in frequencies(corpus) {
        if covered as f64 / total as f64 >= alpha {
            break;
        }
        covered += n;
        out.push(lemma.clone());
    }
    out
}

/// Nearest-rank percentile: the `ceil(p/100 * n)`-th smallest value.
pub fn nearest_rank<T: Copy + PartialOrd>(values: &[T], p: f64) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("values are ordered"));
    let n = v.len();
    let rank = ((p * n as f64) / 100.0).ceil() as usize;
    Some(v[rank.clamp(1, n) - 1])
}

/// Token distances between consecutive occurrences.
pub fn lemma_gaps(corpus: &[Lemma], lemma: &Lemma) -> Vec<usize> {
    let positions: Vec<usize> = corpus.iter().enumerate().filter(|(_, l)| *l == lemma).map(|(i, _)| i).collect();
    positions.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Reading time for a distance in tokens, in days.
pub fn gap_to_days(gap_tokens: f64, cfg: &CoverageConfig) -> f64 {
    let minutes = gap_tokens / cfg.reading_speed;
    minutes / (cfg.reading_hours_per_day * 60.0)
}

/// Percentile revisitation time of one lemma; `None` below two occurrences.
pub fn lemma_revisitation(corpus: &[Lemma], lemma: &Lemma, cfg: &CoverageConfig) -> Option<f64> {
    let gaps = lemma_gaps(corpus, lemma);
    nearest_rank(&gaps, cfg.percentile).map(|g| gap_to_days(g as f64, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusRevisitation {
    /// `None` when no lemma in the coverage set recurs.
    pub days: Option<f64>,
    /// Size of the coverage set.
    pub vocab_size: usize,
    /// Coverage-set lemmas seen fewer than twice.
    pub excluded: usize,
    pub tokens: usize,
}

/// Percentile over the coverage set of each lemma's percentile gap. Gaps stay
/// in tokens until the final conversion.
pub fn corpus_revisitation(corpus: &[Lemma], cfg: &CoverageConfig) -> CorpusRevisitation {
    if corpus.is_empty() {
        return CorpusRevisitation { days: None, vocab_size: 0, excluded: 0, tokens: 0 };
    }
    let set = coverage_lemma_set(corpus, cfg.alpha);
    let mut positions: HashMap<&Lemma, Vec<usize>> = set.iter().map(|l| (l, Vec::new())).collect();
    for (i, l) in corpus.iter().enumerate() {
        if let Some(p) = positions.get_mut(l) {
            p.push(i);
        }
    }
    let mut per_lemma = Vec::with_capacity(set.len());
    let mut excluded = 0;
    for l in &set {
        let gaps: Vec<usize> = positions[l].windows(2).map(|w| w[1] - w[0]).collect();
        match nearest_rank(&gaps, cfg.percentile) {
            Some(g) => per_lemma.push(g),
            None => excluded += 1,
        }
    }
    CorpusRevisitation {
        days: nearest_rank(&per_lemma, cfg.percentile).map(|g| gap_to_days(g as f64, cfg)),
        vocab_size: set.len(),
        excluded,
        tokens: corpus.len(),
    }
}
