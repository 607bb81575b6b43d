//! Per-lemma memory model.
//!
//! Recall decays as `R = 2^(-t/H)` with `t` the time since the last exposure
//! and `H` the half-life. Each exposure counts as a successful revision:
//! `R` resets to 1 and `H` is multiplied by the boost factor
//! `gamma = a * H^(-b) * c^(-R) + d`, evaluated just before the exposure.
//! All durations are fractional days; timestamps are seconds since the Unix
//! epoch and are converted at this boundary.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::TutorError;
use crate::text::Lemma;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Seconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub f64);

impl Timestamp {
    pub fn from_days(days: f64) -> Self {
        Timestamp(days * SECONDS_PER_DAY)
    }

    /// `self - earlier`, in days.
    pub fn days_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) / SECONDS_PER_DAY
    }

    pub fn now() -> Self {
        let d = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).unwrap_or_default();
        Timestamp(d.as_secs_f64())
    }
}

/// Boost-factor constants and the half-life given to a lemma on first exposure.
///
/// The defaults are placeholders, not fitted values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TutorParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Days.
    pub initial_half_life: f64,
}

impl Default for TutorParams {
    fn default() -> Self {
        TutorParams { a: 1.0, b: 1.0, c: 2.0, d: 1.0, initial_half_life: 0.25 }
    }
}

impl TutorParams {
    /// `a, b > 0`, `c > 1` (boost falls as recall rises), `d >= 1` (half-lives
    /// never shrink), `initial_half_life > 0`.
    pub fn validate(&self) -> Result<(), TutorError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(TutorError::InvalidParams(format!("{name} must be positive, got {v}")))
            }
        };
        positive("a", self.a)?;
        positive("b", self.b)?;
        if !(self.c.is_finite() && self.c > 1.0) {
            return Err(TutorError::InvalidParams(format!("c must be > 1, got {}", self.c)));
        }
        positive("initial_half_life", self.initial_half_life)?;
        if !(self.d.is_finite() && self.d >= 1.0) {
            return Err(TutorError::InvalidParams(format!("d must be >= 1, got {}", self.d)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaMemory {
    pub lemma: Lemma,
    /// Days.
    pub half_life: f64,
    pub last_exposure: Timestamp,
    pub exposure_count: u64,
}

/// `2^(-elapsed/half_life)`, both in days.
pub fn recall_after(elapsed_days: f64, half_life: f64) -> f64 {
    (-elapsed_days / half_life).exp2()
}

pub fn recall_probability(mem: &LemmaMemory, now: Timestamp) -> Result<f64, TutorError> {
    let t = now.days_since(mem.last_exposure);
    if t < 0.0 {
        return Err(TutorError::TimeRegression { days: -t });
    }
    Ok(recall_after(t, mem.half_life))
}

pub fn boost_factor(half_life: f64, recall: f64, p: &TutorParams) -> Result<f64, TutorError> {
    if !(half_life.is_finite() && half_life > 0.0) {
        return Err(TutorError::NonPositiveHalfLife(half_life));
    }
    if !(0.0..=1.0).contains(&recall) {
        return Err(TutorError::RecallOutOfRange(recall));
    }
    Ok(p.a * half_life.powf(-p.b) * p.c.powf(-recall) + p.d)
}

/// Tutor output for one lemma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TutorScore {
    pub recall: f64,
    pub boost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub learner_id: String,
    pub memories: BTreeMap<Lemma, LemmaMemory>,
    pub params: TutorParams,
}

impl LearnerState {
    pub fn new(learner_id: impl Into<String>, params: TutorParams) -> Self {
        LearnerState { learner_id: learner_id.into(), memories: BTreeMap::new(), params }
    }

    /// Records a successful exposure of `lemma` at `now`.
    ///
    /// The state is left untouched on error.
    pub fn apply_exposure(&mut self, lemma: &Lemma, now: Timestamp) -> Result<(), TutorError> {
        let params = self.params;
        match self.memories.get_mut(lemma) {
            None => {
                self.memories.insert(
                    lemma.clone(),
                    LemmaMemory {
                        lemma: lemma.clone(),
                        half_life: params.initial_half_life,
                        last_exposure: now,
                        exposure_count: 1,
                    },
                );
            }
            Some(mem) => {
                let recall = recall_probability(mem, now)?;
                let gamma = boost_factor(mem.half_life, recall, &params)?;
                mem.half_life *= gamma;
                mem.last_exposure = now;
                mem.exposure_count += 1;
            }
        }
        Ok(())
    }

    pub fn recall(&self, lemma: &Lemma, now: Timestamp) -> Result<Option<f64>, TutorError> {
        self.memories.get(lemma).map(|m| recall_probability(m, now)).transpose()
    }

    /// `(R, gamma)` for each lemma at `now`. Unseen lemmas get `R = 0` and the
    /// boost of a fresh memory. A `now` earlier than the last exposure is
    /// treated as zero elapsed time.
    pub fn tutor_scores<'a, I>(&self, lemmas: I, now: Timestamp) -> BTreeMap<Lemma, TutorScore>
    where
        I: IntoIterator<Item = &'a Lemma>,
    {
        let p = &self.params;
        let unseen = TutorScore { recall: 0.0, boost: boost_factor(p.initial_half_life, 0.0, p).unwrap_or(p.d) };
        let wanted: BTreeSet<&Lemma> = lemmas.into_iter().collect();
        wanted
            .into_iter()
            .map(|l| {
                let score = match self.memories.get(l) {
                    None => unseen,
                    Some(m) => {
                        let t = now.days_since(m.last_exposure).max(0.0);
                        let recall = recall_after(t, m.half_life);
                        TutorScore { recall, boost: boost_factor(m.half_life, recall, p).unwrap_or(p.d) }
                    }
                };
                (l.clone(), score)
            })
            .collect()
    }
}
