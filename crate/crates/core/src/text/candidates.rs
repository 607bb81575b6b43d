use std::collections::{BTreeSet, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use super::lemma::{Lemma, Lemmatizer};
use super::tokenize::{Token, TokenKind};
use crate::error::ParseError;

const BUNDLED_STOPLIST: &str = include_str!("../../data/stoplist.txt");

static DEFAULT_STOPLIST: LazyLock<Stoplist> = LazyLock::new(|| Stoplist::parse(BUNDLED_STOPLIST));

/// Set of lemmas never offered for translation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stoplist {
    lemmas: HashSet<String>,
}

impl Stoplist {
    /// One lemma per line; `#` lines and blank lines are ignored.
    pub fn parse(src: &str) -> Self {
        let lemmas = src
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Stoplist { lemmas }
    }

    pub fn load(path: &Path) -> Result<Self, ParseError> {
        let src = std::fs::read_to_string(path)
            .map_err(|source| ParseError::Io { path: path.display().to_string(), source })?;
        Ok(Self::parse(&src))
    }

    pub fn bundled() -> &'static Stoplist {
        &DEFAULT_STOPLIST
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Stoplist { lemmas: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect() }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lemmas.contains(word)
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }
}

/// Per-occurrence scores filled in by the tutor, the context scorer and the
/// selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateScores {
    /// Recall probability R.
    pub recall: f64,
    /// Guessability G.
    pub guessability: f64,
    /// Boost factor gamma.
    pub boost: f64,
    /// Understanding probability P.
    pub understanding: f64,
    pub priority: f64,
}

/// A word occurrence eligible for translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateOccurrence {
    pub token_index: usize,
    pub lemma: Lemma,
    pub sentence_index: usize,
    pub scores: Option<CandidateScores>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// Punctuation or number token.
    NotWord,
    Stopword,
    TooShort,
    ProperNoun,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenDecision {
    Candidate(Lemma),
    Excluded(ExclusionReason),
}

/// Candidate filtering rules. Rules are checked in the order of
/// [`ExclusionReason`]; the first that fires is recorded.
#[derive(Debug, Clone)]
pub struct CandidateFilter<'a> {
    pub stoplist: &'a Stoplist,
    /// Minimum lemma length in characters.
    pub min_len: usize,
    /// Lowercase words known to be common nouns/verbs etc. A sentence-initial
    /// capitalized word is kept if its lemma is listed here.
    pub lexicon: Option<&'a HashSet<Lemma>>,
    pub lemmatizer: &'a Lemmatizer,
}

impl<'a> CandidateFilter<'a> {
    pub fn new(stoplist: &'a Stoplist, lemmatizer: &'a Lemmatizer) -> Self {
        CandidateFilter { stoplist, min_len: 3, lexicon: None, lemmatizer }
    }

    /// Decides every token of a document.
    pub fn classify(&self, tokens: &[Token]) -> Vec<TokenDecision> {
        let lemmas: Vec<Option<Lemma>> =
            tokens.iter().map(|t| t.is_word().then(|| self.lemmatizer.lemmatize(&t.surface))).collect();
        // lemmas seen in a lowercase-initial occurrence anywhere in the text
        let lowercase_seen: BTreeSet<&Lemma> = tokens
            .iter()
            .zip(&lemmas)
            .filter(|(t, _)| t.is_word() && !t.starts_uppercase())
            .filter_map(|(_, l)| l.as_ref())
            .collect();

        tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let Some(lemma) = &lemmas[i] else {
                    return TokenDecision::Excluded(ExclusionReason::NotWord);
                };
                let lower = t.surface.to_lowercase();
                if self.stoplist.contains(lemma.as_str()) || self.stoplist.contains(&lower) {
                    return TokenDecision::Excluded(ExclusionReason::Stopword);
                }
                if lemma.char_len() < self.min_len {
                    return TokenDecision::Excluded(ExclusionReason::TooShort);
                }
                if t.starts_uppercase() {
                    let sentence_initial = i == 0 || tokens[i - 1].sentence_index != t.sentence_index;
                    let known = lowercase_seen.contains(lemma) || self.lexicon.is_some_and(|lx| lx.contains(lemma));
                    if !sentence_initial || !known {
                        return TokenDecision::Excluded(ExclusionReason::ProperNoun);
                    }
                }
                TokenDecision::Candidate(lemma.clone())
            })
            .collect()
    }

    pub fn extract(&self, tokens: &[Token]) -> Vec<CandidateOccurrence> {
        self.classify(tokens)
            .into_iter()
            .enumerate()
            .filter_map(|(i, d)| match d {
                TokenDecision::Candidate(lemma) => Some(CandidateOccurrence {
                    token_index: i,
                    lemma,
                    sentence_index: tokens[i].sentence_index,
                    scores: None,
                }),
                TokenDecision::Excluded(_) => None,
            })
            .collect()
    }
}

/// Candidates under the default lemmatizer, no lexicon.
pub fn extract_candidates(tokens: &[Token], stoplist: &Stoplist, min_len: usize) -> Vec<CandidateOccurrence> {
    let lz = Lemmatizer::default();
    let mut filter = CandidateFilter::new(stoplist, &lz);
    filter.min_len = min_len;
    filter.extract(tokens)
}

/// Key used for a token in language-model contexts: the lemma for words, the
/// lowercased surface otherwise.
pub fn token_key(lemmatizer: &Lemmatizer, token: &Token) -> Lemma {
    match token.kind {
        TokenKind::Word => lemmatizer.lemmatize(&token.surface),
        _ => Lemma::new(token.surface.to_lowercase()).unwrap_or_else(|_| lemmatizer.lemmatize(&token.surface)),
    }
}
