//! Translation providers: produce the target-language text for one selected
//! occurrence.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use crate::error::{ParseError, TranslationError};
use crate::text::{join_surfaces, tokenize, CandidateOccurrence, Lemma, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Capabilities {
    pub lemma_lookup: bool,
    pub aligned_sentence: bool,
}

pub trait TranslationProvider: Send + Sync {
    fn capabilities(&self) -> Capabilities;

    /// Target text for `occurrence`, which must lie inside `sentence`.
    fn translate_occurrence(
        &self,
        sentence: &Sentence<'_>,
        occurrence: &CandidateOccurrence,
    ) -> Result<String, TranslationError>;
}

fn check_inside(sentence: &Sentence<'_>, occ: &CandidateOccurrence) -> Result<(), TranslationError> {
    if sentence.contains(occ.token_index) {
        Ok(())
    } else {
        Err(TranslationError::OutsideSentence { token_index: occ.token_index })
    }
}

fn read_file(path: &Path) -> Result<String, ParseError> {
    std::fs::read_to_string(path).map_err(|source| ParseError::Io { path: path.display().to_string(), source })
}

/// Lemma-to-surface lookup table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DictionaryProvider {
    entries: HashMap<Lemma, String>,
}

impl DictionaryProvider {
    pub fn from_entries<I, S, T>(entries: I) -> Result<Self, TranslationError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: Into<String>,
    {
        let mut map = HashMap::new();
        for (s, t) in entries {
            let lemma = Lemma::new(s.as_ref().trim().to_lowercase())
                .map_err(|_| TranslationError::MissingTranslation { lemma: s.as_ref().to_string() })?;
            let t: String = t.into();
            if t.trim().is_empty() {
                return Err(TranslationError::MissingTranslation { lemma: lemma.to_string() });
            }
            map.insert(lemma, t);
        }
        Ok(DictionaryProvider { entries: map })
    }

    /// Parses `source_lemma<TAB>target_surface` lines. `#` lines and blank
    /// lines are skipped. Later duplicates replace earlier ones.
    pub fn parse(src: &str, origin: &str) -> Result<Self, ParseError> {
        let mut entries = HashMap::new();
        for (n, raw) in src.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: String| ParseError::Line { path: origin.to_string(), line: n + 1, message };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 {
                return Err(err(format!("expected 2 tab-separated fields, found {}", fields.len())));
            }
            let target = fields[1].trim();
            if target.is_empty() {
                return Err(err("empty target".into()));
            }
            let lemma = Lemma::new(fields[0].trim().to_lowercase()).map_err(|e| err(e.to_string()))?;
            if let Some(old) = entries.insert(lemma.clone(), target.to_string()) {
                log::warn!("{origin}:{}: duplicate entry for {lemma:?} replaces {old:?}", n + 1);
            }
        }
        Ok(DictionaryProvider { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ParseError> {
        Self::parse(&read_file(path)?, &path.display().to_string())
    }

    pub fn get(&self, lemma: &Lemma) -> Option<&str> {
        self.entries.get(lemma).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl TranslationProvider for DictionaryProvider {
    fn capabilities(&self) -> Capabilities {
        Capabilities { lemma_lookup: true, aligned_sentence: false }
    }

    fn translate_occurrence(
        &self,
        sentence: &Sentence<'_>,
        occurrence: &CandidateOccurrence,
    ) -> Result<String, TranslationError> {
        check_inside(sentence, occurrence)?;
        self.get(&occurrence.lemma)
            .map(str::to_string)
            .ok_or_else(|| TranslationError::MissingTranslation { lemma: occurrence.lemma.to_string() })
    }
}

/// A translated sentence with token-level alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedTranslation {
    pub target_sentence: String,
    /// Target tokens as produced by the shared tokenizer.
    pub target_tokens: Vec<String>,
    /// `(source token, target token)` index pairs.
    pub alignment: Vec<(usize, usize)>,
}

impl AlignedTranslation {
    pub fn new(target_sentence: impl Into<String>, alignment: Vec<(usize, usize)>) -> Self {
        let target_sentence = target_sentence.into();
        let target_tokens = tokenize(&target_sentence).into_iter().map(|t| t.surface).collect();
        AlignedTranslation { target_sentence, target_tokens, alignment }
    }

    /// Target tokens aligned to source token `i`, in target order, joined by
    /// single spaces. `None` when nothing is aligned.
    pub fn target_for(&self, i: usize) -> Option<String> {
        let mut js: Vec<usize> = self
            .alignment
            .iter()
            .filter(|&&(s, _)| s == i)
            .map(|&(_, t)| t)
            .filter(|&t| t < self.target_tokens.len())
            .collect();
        js.sort_unstable();
        js.dedup();
        if js.is_empty() {
            return None;
        }
        Some(js.iter().map(|&j| self.target_tokens[j].as_str()).collect::<Vec<_>>().join(" "))
    }
}

/// Whole-sentence machine translation with alignments.
pub trait AlignedSentenceTranslator: Send + Sync {
    /// `source` is the sentence's token surfaces joined by single spaces.
    fn translate_sentence(&self, source: &str) -> Result<AlignedTranslation, TranslationError>;
}

/// Canned sentence translations, keyed by normalized source sentence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignedFixture {
    records: HashMap<String, AlignedTranslation>,
}

impl AlignedFixture {
    /// Parses `source<TAB>target<TAB>alignment` lines, where alignment is a
    /// space-separated list of `i-j` token index pairs (source-target).
    pub fn parse(src: &str, origin: &str) -> Result<Self, ParseError> {
        let mut records = HashMap::new();
        for (n, raw) in src.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: String| ParseError::Line { path: origin.to_string(), line: n + 1, message };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!("expected `source<TAB>target<TAB>alignment`, found {} fields", fields.len())));
            }
            let source_tokens = tokenize(fields[0]);
            let mut alignment = Vec::new();
            for pair in fields[2].split_whitespace() {
                let parsed =
                    pair.split_once('-').and_then(|(i, j)| Some((i.parse::<usize>().ok()?, j.parse::<usize>().ok()?)));
                match parsed {
                    Some(p) => alignment.push(p),
                    None => return Err(err(format!("bad alignment pair {pair:?}"))),
                }
            }
            let tr = AlignedTranslation::new(fields[1], alignment);
            for &(i, j) in &tr.alignment {
                if i >= source_tokens.len() || j >= tr.target_tokens.len() {
                    return Err(err(format!(
                        "pair {i}-{j} outside sentence lengths {}x{}",
                        source_tokens.len(),
                        tr.target_tokens.len()
                    )));
                }
            }
            records.insert(join_surfaces(&source_tokens), tr);
        }
        Ok(AlignedFixture { records })
    }

    pub fn load(path: &Path) -> Result<Self, ParseError> {
        Self::parse(&read_file(path)?, &path.display().to_string())
    }

    pub fn insert(&mut self, source: &str, translation: AlignedTranslation) {
        self.records.insert(join_surfaces(&tokenize(source)), translation);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl AlignedSentenceTranslator for AlignedFixture {
    fn translate_sentence(&self, source: &str) -> Result<AlignedTranslation, TranslationError> {
        self.records.get(source).cloned().ok_or_else(|| TranslationError::MissingTranslation { lemma: String::new() })
    }
}

/// Provider that translates the occurrence's whole sentence and reads the
/// occurrence's translation off the alignment.
#[derive(Debug, Clone)]
pub struct AlignedProvider<T> {
    translator: T,
}

impl<T: AlignedSentenceTranslator> AlignedProvider<T> {
    pub fn new(translator: T) -> Self {
        AlignedProvider { translator }
    }
}

impl<T: AlignedSentenceTranslator> TranslationProvider for AlignedProvider<T> {
    fn capabilities(&self) -> Capabilities {
        Capabilities { lemma_lookup: false, aligned_sentence: true }
    }

    fn translate_occurrence(
        &self,
        sentence: &Sentence<'_>,
        occurrence: &CandidateOccurrence,
    ) -> Result<String, TranslationError> {
        check_inside(sentence, occurrence)?;
        let missing = || TranslationError::MissingTranslation { lemma: occurrence.lemma.to_string() };
        let tr = match self.translator.translate_sentence(&sentence.normalized_text()) {
            Ok(tr) => tr,
            Err(TranslationError::MissingTranslation { .. }) => return Err(missing()),
            Err(e) => return Err(e),
        };
        tr.target_for(occurrence.token_index - sentence.first_token).ok_or_else(missing)
    }
}

/// Named providers, one per target profile.
#[derive(Clone, Default)]
pub struct ProviderRegistry {
    profiles: BTreeMap<String, Arc<dyn TranslationProvider>>,
}

impl ProviderRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, profile: impl Into<String>, provider: Arc<dyn TranslationProvider>) {
        self.profiles.insert(profile.into(), provider);
    }

    pub fn get(&self, profile: &str) -> Option<&Arc<dyn TranslationProvider>> {
        self.profiles.get(profile)
    }

    pub fn profiles(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(String::as_str)
    }
}

impl std::fmt::Debug for ProviderRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.profiles.keys()).finish()
    }
}
