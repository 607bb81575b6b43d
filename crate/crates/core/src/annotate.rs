//! End-to-end annotation: tokenize, find candidates, score them against the
//! learner's memory and the context model, select, translate.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AnnotateError, SelectError, TranslationError};
use crate::guess::ContextScorer;
use crate::select::{score, select_with, SelectionConfig, SelectionResult};
use crate::text::{sentences, tokenize, CandidateFilter, Lemma, Lemmatizer, Stoplist};
use crate::translate::ProviderRegistry;
use crate::tutor::{LearnerState, Timestamp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Segment {
    Text { text: String },
    Translation { span_id: String, original_text: String, target_text: String, lemma: Lemma, sentence_index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub density_requested: f64,
    pub density_achieved: f64,
    pub word_token_count: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub segments: Vec<Segment>,
    pub meta: DocumentMeta,
}

impl AnnotatedDocument {
    /// The source text, with every translation replaced by its original.
    pub fn original_text(&self) -> String {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Text { text } => text.as_str(),
                Segment::Translation { original_text, .. } => original_text.as_str(),
            })
            .collect()
    }

    /// Text as the reader sees it.
    pub fn rendered_text(&self) -> String {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Text { text } => text.as_str(),
                Segment::Translation { target_text, .. } => target_text.as_str(),
            })
            .collect()
    }

    pub fn translated_lemmas(&self) -> BTreeSet<&Lemma> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Translation { lemma, .. } => Some(lemma),
                Segment::Text { .. } => None,
            })
            .collect()
    }
}

/// Body of an annotation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotateRequest {
    pub learner_id: String,
    pub text: String,
    pub density: f64,
    pub target_profile: String,
    /// Scoring time in seconds since the epoch. Defaults to the current time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub now: Option<Timestamp>,
}

/// Short content hash of the source text.
pub fn doc_id(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything the pipeline needs besides the learner.
#[derive(Clone)]
pub struct Annotator {
    pub stoplist: Stoplist,
    pub lemmatizer: Lemmatizer,
    pub min_len: usize,
    pub max_lemmas: Option<usize>,
    pub scorer: Arc<dyn ContextScorer>,
    pub providers: ProviderRegistry,
}

enum Step {
    Select(SelectError),
    Translate(TranslationError),
}

impl From<SelectError> for Step {
    fn from(e: SelectError) -> Self {
        Step::Select(e)
    }
}

impl Annotator {
    pub fn new(scorer: Arc<dyn ContextScorer>, providers: ProviderRegistry) -> Self {
        Annotator {
            stoplist: Stoplist::bundled().clone(),
            lemmatizer: Lemmatizer::default(),
            min_len: 3,
            max_lemmas: None,
            scorer,
            providers,
        }
    }

    pub fn annotate(
        &self,
        learner: &LearnerState,
        text: &str,
        density: f64,
        target_profile: &str,
        now: Timestamp,
    ) -> Result<AnnotatedDocument, AnnotateError> {
        let cfg = SelectionConfig::new(density, self.max_lemmas).map_err(|_| AnnotateError::BadDensity(density))?;
        if text.trim().is_empty() {
            return Err(AnnotateError::EmptyText);
        }
        let provider = self
            .providers
            .get(target_profile)
            .ok_or_else(|| AnnotateError::UnknownProfile(target_profile.to_string()))?;

        let tokens = tokenize(text);
        let sents = sentences(&tokens);
        let word_token_count = tokens.iter().filter(|t| t.is_word()).count();

        let mut filter = CandidateFilter::new(&self.stoplist, &self.lemmatizer);
        filter.min_len = self.min_len;
        let mut candidates = filter.extract(&tokens);

        let tutor = learner.tutor_scores(candidates.iter().map(|c| &c.lemma), now);
        let guess: HashMap<usize, f64> =
            self.scorer.context_score(&tokens).into_iter().map(|g| (g.token_index, g.value)).collect();
        for c in &mut candidates {
            let t = tutor[&c.lemma];
            let g = *guess.get(&c.token_index).ok_or(SelectError::Unscored(c.token_index))?;
            c.scores = Some(score(t.recall, g, t.boost)?);
        }

        let mut translations: HashMap<usize, String> = HashMap::new();
        let selection: Result<SelectionResult, Step> =
            select_with(&candidates, &cfg, word_token_count, |lemma, occs| {
                let mut found = Vec::with_capacity(occs.len());
                for occ in occs {
                    match provider.translate_occurrence(&sents[occ.sentence_index], occ) {
                        Ok(t) => found.push((occ.token_index, t)),
                        Err(TranslationError::MissingTranslation { .. }) => {
                            log::debug!("no translation for {lemma}, skipping");
                            return Ok(false);
                        }
                        Err(e) => return Err(Step::Translate(e)),
                    }
                }
                translations.extend(found);
                Ok(true)
            });
        let selection = match selection {
            Ok(s) => s,
            Err(Step::Select(e)) => return Err(e.into()),
            Err(Step::Translate(e)) => return Err(e.into()),
        };

        let mut warnings = Vec::new();
        if !selection.rejected.is_empty() {
            let names: Vec<&str> = selection.rejected.iter().map(Lemma::as_str).collect();
            warnings.push(format!("no translation for: {}", names.join(", ")));
        }

        let mut segments = Vec::new();
        let mut cursor = 0;
        for (n, occ) in selection.chosen_occurrences.iter().enumerate() {
            let (start, end) = tokens[occ.token_index].span;
            if start > cursor {
                segments.push(Segment::Text { text: text[cursor..start].to_string() });
            }
            segments.push(Segment::Translation {
                span_id: format!("s{n}"),
                original_text: text[start..end].to_string(),
                target_text: translations[&occ.token_index].clone(),
                lemma: occ.lemma.clone(),
                sentence_index: occ.sentence_index,
            });
            cursor = end;
        }
        if cursor < text.len() {
            segments.push(Segment::Text { text: text[cursor..].to_string() });
        }

        Ok(AnnotatedDocument {
            doc_id: doc_id(text),
            segments,
            meta: DocumentMeta {
                density_requested: density,
                density_achieved: selection.achieved_density,
                word_token_count,
                warnings,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guess::ConstantScorer;
    use crate::translate::DictionaryProvider;
    use crate::tutor::TutorParams;

    fn annotator(dict: &str) -> Annotator {
        let mut reg = ProviderRegistry::new();
        reg.insert("fi", Arc::new(DictionaryProvider::parse(dict, "test").unwrap()));
        Annotator::new(Arc::new(ConstantScorer::new(0.5).unwrap()), reg)
    }

    const TEXT: &str = "The old city sleeps. A river runs through the city, and the river is wide.";
    const DICT: &str = "city\tkaupunki\nriver\tjoki\nold\tvanha\nsleep\tnukkua\nrun\tjuosta\nwide\tleveä\n";

    fn learner() -> LearnerState {
        LearnerState::new("u1", TutorParams::default())
    }

    #[test]
    fn zero_density_is_identity() {
        let d = annotator(DICT).annotate(&learner(), TEXT, 0.0, "fi", Timestamp(0.0)).unwrap();
        assert!(d.translated_lemmas().is_empty());
        assert_eq!(d.rendered_text(), TEXT);
        assert_eq!(d.segments.len(), 1);
    }

    #[test]
    fn translations_are_reversible_and_counted() {
        let d = annotator(DICT).annotate(&learner(), TEXT, 0.3, "fi", Timestamp(0.0)).unwrap();
        assert_eq!(d.original_text(), TEXT);
        assert_eq!(d.meta.word_token_count, 15);
        assert!(d.meta.density_achieved >= 0.3);
        let spans: Vec<_> = d
            .segments
            .iter()
            .filter_map(|s| match s {
                Segment::Translation { span_id, .. } => Some(span_id.clone()),
                _ => None,
            })
            .collect();
        let unique: BTreeSet<_> = spans.iter().collect();
        assert_eq!(unique.len(), spans.len());
        assert_eq!(d.doc_id, doc_id(TEXT));
        assert_eq!(d.doc_id.len(), 16);
    }

    #[test]
    fn missing_dictionary_gives_warning() {
        let d = annotator("").annotate(&learner(), TEXT, 0.5, "fi", Timestamp(0.0)).unwrap();
        assert!(d.translated_lemmas().is_empty());
        assert_eq!(d.meta.density_achieved, 0.0);
        assert_eq!(d.meta.warnings.len(), 1);
    }

    #[test]
    fn request_errors() {
        let a = annotator(DICT);
        let l = learner();
        assert!(matches!(a.annotate(&l, TEXT, 1.5, "fi", Timestamp(0.0)), Err(AnnotateError::BadDensity(_))));
        assert!(matches!(a.annotate(&l, "  \n", 0.5, "fi", Timestamp(0.0)), Err(AnnotateError::EmptyText)));
        assert!(matches!(a.annotate(&l, TEXT, 0.5, "xx", Timestamp(0.0)), Err(AnnotateError::UnknownProfile(_))));
    }

    #[test]
    fn known_words_lose_priority() {
        let a = annotator(DICT);
        let fresh = a.annotate(&learner(), TEXT, 0.05, "fi", Timestamp(0.0)).unwrap();
        // with equal priorities the smallest lemma wins
        assert_eq!(fresh.translated_lemmas().into_iter().next().unwrap().as_str(), "city");
        let mut l = learner();
        // two exposures push H to 0.75 days, so gamma drops below the fresh-word value
        l.apply_exposure(&Lemma::new("city").unwrap(), Timestamp(0.0)).unwrap();
        l.apply_exposure(&Lemma::new("city").unwrap(), Timestamp(0.0)).unwrap();
        let later = a.annotate(&l, TEXT, 0.05, "fi", Timestamp(0.0)).unwrap();
        assert_ne!(later.translated_lemmas().into_iter().next().unwrap().as_str(), "city");
    }

    #[test]
    fn json_shape() {
        let d = annotator(DICT).annotate(&learner(), "A wide river.", 1.0, "fi", Timestamp(0.0)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        assert_eq!(v["segments"][0]["type"], "text");
        assert_eq!(v["segments"][1]["type"], "translation");
        assert_eq!(v["segments"][1]["span_id"], "s0");
        assert_eq!(v["meta"]["word_token_count"], 3);
        let back: AnnotatedDocument = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
    }
}
