//! Combining recall, guessability and boost into priorities, and choosing
//! which lemmas to translate under a density budget.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::SelectError;
use crate::text::{CandidateOccurrence, CandidateScores, Lemma};

fn check_unit(name: &'static str, value: f64) -> Result<(), SelectError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(SelectError::OutOfRange { name, value })
    }
}

/// Probability that the reader understands a word, treating recall from
/// memory and inference from context as independent: `R + G - RG`.
///
/// Evaluated as `1 - (1-R)(1-G)` so that `R = 1` or `G = 1` gives exactly 1.
pub fn understanding_probability(recall: f64, guessability: f64) -> Result<f64, SelectError> {
    check_unit("R", recall)?;
    check_unit("G", guessability)?;
    Ok((1.0 - (1.0 - recall) * (1.0 - guessability)).clamp(0.0, 1.0))
}

pub fn priority(understanding: f64, boost: f64) -> f64 {
    understanding * boost
}

/// Full score record for one occurrence.
pub fn score(recall: f64, guessability: f64, boost: f64) -> Result<CandidateScores, SelectError> {
    if !(boost.is_finite() && boost > 0.0) {
        return Err(SelectError::OutOfRange { name: "gamma", value: boost });
    }
    let understanding = understanding_probability(recall, guessability)?;
    Ok(CandidateScores { recall, guessability, boost, understanding, priority: priority(understanding, boost) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    density: f64,
    max_lemmas: Option<usize>,
}

impl SelectionConfig {
    pub fn new(density: f64, max_lemmas: Option<usize>) -> Result<Self, SelectError> {
        if !(0.0..=1.0).contains(&density) {
            return Err(SelectError::BadDensity(density));
        }
        Ok(SelectionConfig { density, max_lemmas })
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn max_lemmas(&self) -> Option<usize> {
        self.max_lemmas
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedLemma {
    pub lemma: Lemma,
    /// Highest occurrence priority.
    pub priority: f64,
    /// Indexes into the candidate slice, in document order.
    pub occurrences: Vec<usize>,
}

/// Lemmas ordered by priority descending, ties by lemma ascending.
pub fn rank_lemmas(candidates: &[CandidateOccurrence]) -> Result<Vec<RankedLemma>, SelectError> {
    let mut by_lemma: BTreeMap<&Lemma, RankedLemma> = BTreeMap::new();
    for (i, c) in candidates.iter().enumerate() {
        let s = c.scores.ok_or(SelectError::Unscored(c.token_index))?;
        let entry = by_lemma.entry(&c.lemma).or_insert_with(|| RankedLemma {
            lemma: c.lemma.clone(),
            priority: f64::NEG_INFINITY,
            occurrences: Vec::new(),
        });
        entry.priority = entry.priority.max(s.priority);
        entry.occurrences.push(i);
    }
    let mut ranked: Vec<RankedLemma> = by_lemma.into_values().collect();
    for r in &mut ranked {
        r.occurrences.sort_by_key(|&i| candidates[i].token_index);
    }
    ranked.sort_by(|a, b| b.priority.total_cmp(&a.priority).then_with(|| a.lemma.cmp(&b.lemma)));
    Ok(ranked)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenLemma {
    pub lemma: Lemma,
    pub priority: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// In the order they were chosen.
    pub chosen_lemmas: Vec<ChosenLemma>,
    /// Every occurrence of a chosen lemma, in document order.
    pub chosen_occurrences: Vec<CandidateOccurrence>,
    pub achieved_density: f64,
    /// Lemmas the acceptance callback rejected, in the order they were tried.
    pub rejected: Vec<Lemma>,
}

impl SelectionResult {
    fn empty() -> Self {
        SelectionResult {
            chosen_lemmas: Vec::new(),
            chosen_occurrences: Vec::new(),
            achieved_density: 0.0,
            rejected: Vec::new(),
        }
    }
}

/// Greedy density-bounded selection over scored candidates.
pub fn select(
    candidates: &[CandidateOccurrence],
    cfg: &SelectionConfig,
    total_word_tokens: usize,
) -> Result<SelectionResult, SelectError> {
    select_with(candidates, cfg, total_word_tokens, |_, _| Ok::<_, SelectError>(true))
}

/// Like [`select`], but each lemma is offered to `accept` before it is taken.
/// A lemma for which `accept` returns `Ok(false)` is skipped and the loop moves
/// on to the next one, so the budget is spent only on accepted lemmas.
pub fn select_with<E, F>(
    candidates: &[CandidateOccurrence],
    cfg: &SelectionConfig,
    total_word_tokens: usize,
    mut accept: F,
) -> Result<SelectionResult, E>
where
    E: From<SelectError>,
    F: FnMut(&Lemma, &[&CandidateOccurrence]) -> Result<bool, E>,
{
    if total_word_tokens == 0 {
        return Ok(SelectionResult::empty());
    }
    let ranked = rank_lemmas(candidates)?;
    let mut out = SelectionResult::empty();
    let mut chosen_tokens = 0usize;
    let mut chosen_idx: Vec<usize> = Vec::new();
    for r in ranked {
        if out.achieved_density >= cfg.density {
            break;
        }
        if cfg.max_lemmas.is_some_and(|m| out.chosen_lemmas.len() >= m) {
            break;
        }
        let occs: Vec<&CandidateOccurrence> = r.occurrences.iter().map(|&i| &candidates[i]).collect();
        if !accept(&r.lemma, &occs)? {
            out.rejected.push(r.lemma);
            continue;
        }
        chosen_tokens += occs.len();
        chosen_idx.extend(&r.occurrences);
        out.achieved_density = chosen_tokens as f64 / total_word_tokens as f64;
        out.chosen_lemmas.push(ChosenLemma { lemma: r.lemma, priority: r.priority });
    }
    chosen_idx.sort_by_key(|&i| candidates[i].token_index);
    out.chosen_occurrences = chosen_idx.into_iter().map(|i| candidates[i].clone()).collect();
    Ok(out)
}
