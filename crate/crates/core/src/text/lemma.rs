use std::borrow::Borrow;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::TextError;

/// Normalized lowercase key shared by the tutor, the language model and the
/// dictionaries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Lemma(String);

impl Lemma {
    pub fn new(id: impl Into<String>) -> Result<Self, TextError> {
        let id = id.into();
        if id.is_empty() {
            return Err(TextError::InvalidLemma { lemma: id, reason: "empty" });
        }
        if id.trim() != id {
            return Err(TextError::InvalidLemma { lemma: id, reason: "surrounding whitespace" });
        }
        if id.to_lowercase() != id {
            return Err(TextError::InvalidLemma { lemma: id, reason: "not lowercase" });
        }
        Ok(Lemma(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn char_len(&self) -> usize {
        self.0.chars().count()
    }
}

impl TryFrom<String> for Lemma {
    type Error = TextError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Lemma::new(s)
    }
}

impl From<Lemma> for String {
    fn from(l: Lemma) -> String {
        l.0
    }
}

impl Borrow<str> for Lemma {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

const BUNDLED_EXCEPTIONS: &str = include_str!("../../data/lemma_exceptions.tsv");
const BUNDLED_E_RESTORE: &str = include_str!("../../data/e_restore.txt");

static DEFAULT: LazyLock<Lemmatizer> = LazyLock::new(|| {
    Lemmatizer::from_sources(BUNDLED_EXCEPTIONS, BUNDLED_E_RESTORE).expect("bundled lemmatizer tables are valid")
});

/// Lemmatizes with the bundled tables.
pub fn lemmatize(surface: &str) -> Lemma {
    DEFAULT.lemmatize(surface)
}

/// Rule-based English lemmatizer: an irregular-form table, then suffix rules
/// applied until none fires.
#[derive(Debug, Clone)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
    e_restore: HashSet<String>,
}

impl Default for Lemmatizer {
    fn default() -> Self {
        DEFAULT.clone()
    }
}

impl Lemmatizer {
    /// Parses an exception table (`surface<TAB>lemma`) and an e-restoration
    /// list (one lemma per line). Both accept `#` comments and blank lines.
    ///
    /// Every table value must already be its own lemma, otherwise
    /// lemmatization would not be idempotent.
    pub fn from_sources(exceptions_tsv: &str, e_restore: &str) -> Result<Self, TextError> {
        let mut exceptions = HashMap::new();
        for (n, line) in exceptions_tsv.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 || fields[0].trim().is_empty() || fields[1].trim().is_empty() {
                return Err(TextError::Table {
                    line: n + 1,
                    message: format!("expected `surface<TAB>lemma`, got {line:?}"),
                });
            }
            exceptions.insert(fields[0].trim().to_lowercase(), fields[1].trim().to_lowercase());
        }
        let e_restore = e_restore
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        let lz = Lemmatizer { exceptions, e_restore };
        for (surface, lemma) in &lz.exceptions {
            let again = lz.lemmatize_lower(lemma.clone());
            if &again != lemma {
                return Err(TextError::Table {
                    line: 0,
                    message: format!("{surface} -> {lemma}, but {lemma} lemmatizes to {again}"),
                });
            }
        }
        Ok(lz)
    }

    pub fn lemmatize(&self, surface: &str) -> Lemma {
        let lower = surface.trim().to_lowercase();
        if lower.is_empty() {
            // Only reachable for non-word input; keep the Lemma invariant.
            return Lemma("_".to_string());
        }
        Lemma(self.lemmatize_lower(lower))
    }

    fn lemmatize_lower(&self, mut word: String) -> String {
        loop {
            if let Some(l) = self.exceptions.get(&word) {
                return l.clone();
            }
            match self.strip_once(&word) {
                Some(next) => word = next,
                None => return word,
            }
        }
    }

    /// Applies the first matching suffix rule. Every rule strictly shortens
    /// the word, so iterating terminates.
    fn strip_once(&self, w: &str) -> Option<String> {
        let len = w.chars().count();
        for poss in ["'s", "\u{2019}s"] {
            if let Some(stem) = w.strip_suffix(poss) {
                if !stem.is_empty() {
                    return Some(stem.to_string());
                }
            }
        }
        if len >= 5 {
            if let Some(stem) = w.strip_suffix("ies") {
                return Some(format!("{stem}y"));
            }
        }
        if ["sses", "xes", "zes", "ches", "shes"].iter().any(|s| w.ends_with(s)) {
            return Some(w[..w.len() - 2].to_string());
        }
        if let Some(stem) = w.strip_suffix('s') {
            let protected = ["ss", "us", "is"].iter().any(|s| w.ends_with(s));
            if !protected && stem.chars().count() >= 3 {
                return Some(stem.to_string());
            }
        }
        if let Some(stem) = w.strip_suffix("ing") {
            if let Some(base) = self.verb_stem(stem) {
                return Some(base);
            }
        }
        if len >= 5 {
            if let Some(stem) = w.strip_suffix("ied") {
                return Some(format!("{stem}y"));
            }
        }
        if !w.ends_with("eed") {
            if let Some(stem) = w.strip_suffix("ed") {
                if let Some(base) = self.verb_stem(stem) {
                    return Some(base);
                }
            }
        }
        None
    }

    /// Repairs a stem left by -ing/-ed stripping: undouble a final doubled
    /// consonant (`runn` -> `run`), else restore a listed silent e
    /// (`mak` -> `make`). Rejects stems too short or without a vowel.
    fn verb_stem(&self, stem: &str) -> Option<String> {
        let with_e = format!("{stem}e");
        if self.e_restore.contains(&with_e) {
            return Some(with_e);
        }
        let chars: Vec<char> = stem.chars().collect();
        if chars.len() < 3 || !chars.iter().any(|c| "aeiouy".contains(*c)) {
            return None;
        }
        let n = chars.len();
        if chars[n - 1] == chars[n - 2] && !"aeiouylsz".contains(chars[n - 1]) && chars[n - 1].is_alphabetic() && n > 3
        {
            return Some(chars[..n - 1].iter().collect());
        }
        Some(stem.to_string())
    }
}
