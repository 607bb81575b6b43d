//! Tokenization, lemmatization and candidate filtering.

mod candidates;
mod lemma;
mod tokenize;

pub use candidates::{
    extract_candidates, token_key, CandidateFilter, CandidateOccurrence, CandidateScores, ExclusionReason, Stoplist,
    TokenDecision,
};
pub use lemma::{lemmatize, Lemma, Lemmatizer};
pub use tokenize::{detokenize, join_surfaces, sentences, tokenize, whitespace_runs, Sentence, Token, TokenKind};
