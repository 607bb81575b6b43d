//! Corpus compatibility analysis: how soon do frequent lemmas come back
//! during ordinary reading, measured on books and on simulated browsing.

mod clickstream;
mod coverage;
mod synth;

pub use clickstream::{
    load_graph, load_lengths, load_page_texts, session_stream, simulate_session_from, simulate_sessions,
    ClickstreamGraph, GraphBuilder, Walk, WalkConfig, EXTERNAL_PREFIXES,
};
pub use coverage::{
    corpus_lemmas, corpus_revisitation, coverage_lemma_set, gap_to_days, lemma_gaps, lemma_revisitation, nearest_rank,
    CorpusRevisitation, CoverageConfig,
};
pub use synth::{SyntheticCorpus, SyntheticSpec};
