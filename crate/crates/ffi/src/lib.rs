//! C ABI over the vocabweave library.
//!
//! Every function returns a [`VwStatus`]. On failure a message is kept per
//! thread and can be read with [`vw_last_error`]. Strings returned through
//! out-parameters are owned by the caller and released with
//! [`vw_string_free`]. Handles are released with their `_free` function.
//! Panics never cross the boundary; they surface as `VW_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use vocabweave::annotate::Annotator;
use vocabweave::compat::{corpus_lemmas, corpus_revisitation, CoverageConfig};
use vocabweave::guess::{ConstantScorer, ContextScorer, NGramModel};
use vocabweave::text::{tokenize, Lemma};
use vocabweave::translate::{DictionaryProvider, ProviderRegistry};
use vocabweave::tutor::{boost_factor, recall_after, LearnerState, Timestamp, TutorParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VwStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or an out-of-range number.
    InvalidArgument = 1,
    /// Input text (JSON, TSV, model file) could not be parsed.
    Parse = 2,
    Io = 3,
    /// The request was valid but has no answer, e.g. an unseen lemma.
    NotFound = 4,
    /// Rejected by the model, e.g. time running backwards.
    Rejected = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(VwStatus, String);

impl Failure {
    fn arg(msg: impl Into<String>) -> Self {
        Failure(VwStatus::InvalidArgument, msg.into())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> VwStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VwStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            VwStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::arg(format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::arg(format!("{name} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::arg(format!("{name} is null")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|_| Failure::arg("string contains NUL"))
}

fn lemma_arg(s: &str) -> Result<Lemma, Failure> {
    Lemma::new(s).map_err(|e| Failure::arg(e.to_string()))
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn vw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `2^(-elapsed/half_life)`, both in days.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vw_recall(elapsed_days: f64, half_life: f64, out: *mut f64) -> VwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if !(half_life.is_finite() && half_life > 0.0) || elapsed_days.is_nan() || elapsed_days < 0.0 {
            return Err(Failure::arg("need half_life > 0 and elapsed_days >= 0"));
        }
        *out = recall_after(elapsed_days, half_life);
        Ok(())
    })
}

/// Boost factor `a * H^(-b) * c^(-R) + d`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vw_boost(
    half_life: f64,
    recall: f64,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    out: *mut f64,
) -> VwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let params = TutorParams { a, b, c, d, ..Default::default() };
        params.validate().map_err(|e| Failure::arg(e.to_string()))?;
        *out = boost_factor(half_life, recall, &params).map_err(|e| Failure::arg(e.to_string()))?;
        Ok(())
    })
}

/// Opaque learner memory state.
pub struct VwLearner(LearnerState);

/// A learner with default parameters and no memories.
///
/// # Safety
/// `learner_id` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vw_learner_new(learner_id: *const c_char, out: *mut *mut VwLearner) -> VwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let id = str_arg(learner_id, "learner_id")?;
        *out = Box::into_raw(Box::new(VwLearner(LearnerState::new(id, TutorParams::default()))));
        Ok(())
    })
}

/// Restores a learner serialized by [`vw_learner_to_json`].
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vw_learner_from_json(json: *const c_char, out: *mut *mut VwLearner) -> VwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let state: LearnerState =
            serde_json::from_str(str_arg(json, "json")?).map_err(|e| Failure(VwStatus::Parse, e.to_string()))?;
        state.params.validate().map_err(|e| Failure(VwStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(VwLearner(state)));
        Ok(())
    })
}

/// # Safety
/// `learner` must come from this library and not have been freed; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn vw_learner_free(learner: *mut VwLearner) {
    if !learner.is_null() {
        drop(Box::from_raw(learner));
    }
}

/// Records an exposure at `timestamp` (seconds since the epoch).
///
/// # Safety
/// `learner` must be a live handle; `lemma` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn vw_learner_apply_exposure(
    learner: *mut VwLearner,
    lemma: *const c_char,
    timestamp: f64,
) -> VwStatus {
    guard(|| {
        let l = out_arg(learner, "learner")?;
        let lemma = lemma_arg(str_arg(lemma, "lemma")?)?;
        if !timestamp.is_finite() {
            return Err(Failure::arg("timestamp must be finite"));
        }
        l.0.apply_exposure(&lemma, Timestamp(timestamp)).map_err(|e| Failure(VwStatus::Rejected, e.to_string()))
    })
}

/// Recall probability of `lemma` at `timestamp`; `VW_STATUS_NOT_FOUND` for a
/// lemma never seen.
///
/// # Safety
/// `learner` must be a live handle; `lemma` a NUL-terminated string; `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vw_learner_recall(
    learner: *const VwLearner,
    lemma: *const c_char,
    timestamp: f64,
    out: *mut f64,
) -> VwStatus {
    guard(|| {
        let l = learner.as_ref().ok_or_else(|| Failure::arg("learner is null"))?;
        let out = out_arg(out, "out")?;
        let lemma = lemma_arg(str_arg(lemma, "lemma")?)?;
        match l.0.recall(&lemma, Timestamp(timestamp)) {
            Ok(Some(r)) => {
                *out = r;
                Ok(())
            }
            Ok(None) => Err(Failure(VwStatus::NotFound, format!("no memory of {lemma}"))),
            Err(e) => Err(Failure(VwStatus::Rejected, e.to_string())),
        }
    })
}

/// # Safety
/// `learner` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vw_learner_to_json(learner: *const VwLearner, out: *mut *mut c_char) -> VwStatus {
    guard(|| {
        let l = learner.as_ref().ok_or_else(|| Failure::arg("learner is null"))?;
        let out = out_arg(out, "out")?;
        *out = into_c_string(serde_json::to_string(&l.0).expect("learner state serializes"))?;
        Ok(())
    })
}

/// Opaque guessability model.
pub struct VwNGram(Arc<NGramModel>);

/// Trains on raw text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vw_ngram_train(text: *const c_char, order: usize, k: f64, out: *mut *mut VwNGram) -> VwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        let m = NGramModel::train_texts(&[text], order, k).map_err(|e| Failure::arg(e.to_string()))?;
        *out = Box::into_raw(Box::new(VwNGram(Arc::new(m))));
        Ok(())
    })
}

/// Loads a model file written by `vocabweave train-lm`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vw_ngram_load(path: *const c_char, out: *mut *mut VwNGram) -> VwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let m = NGramModel::load(Path::new(path)).map_err(|e| match e {
            vocabweave::error::ModelError::Io(_) => Failure(VwStatus::Io, format!("{path}: {e}")),
            _ => Failure(VwStatus::Parse, format!("{path}: {e}")),
        })?;
        *out = Box::into_raw(Box::new(VwNGram(Arc::new(m))));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not have been freed; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn vw_ngram_free(model: *mut VwNGram) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Guessability of every word token in `text`, as a JSON array of
/// `{"token_index": i, "g": value}`.
///
/// # Safety
/// `model` must be a live handle; `text` a NUL-terminated string; `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vw_ngram_score(model: *const VwNGram, text: *const c_char, out: *mut *mut c_char) -> VwStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| Failure::arg("model is null"))?;
        let out = out_arg(out, "out")?;
        let scores = m.0.score_tokens(&tokenize(str_arg(text, "text")?));
        *out = into_c_string(serde_json::to_string(&scores).expect("scores serialize"))?;
        Ok(())
    })
}

/// Annotates `text` for `learner` and returns the document as JSON.
///
/// `model` may be null, in which case every word gets guessability 0.5.
/// `dictionary_tsv` holds `lemma<TAB>translation` lines.
///
/// # Safety
/// Handles must be live (or null where allowed); strings NUL-terminated;
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vw_annotate(
    learner: *const VwLearner,
    model: *const VwNGram,
    dictionary_tsv: *const c_char,
    text: *const c_char,
    density: f64,
    now: f64,
    out: *mut *mut c_char,
) -> VwStatus {
    guard(|| {
        let l = learner.as_ref().ok_or_else(|| Failure::arg("learner is null"))?;
        let out = out_arg(out, "out")?;
        let dict = DictionaryProvider::parse(str_arg(dictionary_tsv, "dictionary_tsv")?, "dictionary")
            .map_err(|e| Failure(VwStatus::Parse, e.to_string()))?;
        let text = str_arg(text, "text")?;
        let scorer: Arc<dyn ContextScorer> = match model.as_ref() {
            Some(m) => m.0.clone(),
            None => Arc::new(ConstantScorer::new(0.5).expect("0.5 is a valid guessability")),
        };
        let mut providers = ProviderRegistry::new();
        providers.insert("default", Arc::new(dict));
        let doc = Annotator::new(scorer, providers)
            .annotate(&l.0, text, density, "default", Timestamp(now))
            .map_err(|e| Failure::arg(e.to_string()))?;
        *out = into_c_string(serde_json::to_string(&doc).expect("documents serialize"))?;
        Ok(())
    })
}

/// Percentile revisitation time of `text`, in days, over the lemmas covering
/// a share `alpha` of its tokens. `VW_STATUS_NOT_FOUND` when no such lemma
/// recurs.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out_days` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vw_corpus_revisitation(
    text: *const c_char,
    alpha: f64,
    words_per_minute: f64,
    hours_per_day: f64,
    percentile: f64,
    out_days: *mut f64,
) -> VwStatus {
    guard(|| {
        let out = out_arg(out_days, "out_days")?;
        let cfg = CoverageConfig::new(alpha, words_per_minute, hours_per_day, percentile)
            .map_err(|e| Failure::arg(e.to_string()))?;
        let corpus = corpus_lemmas(str_arg(text, "text")?);
        match corpus_revisitation(&corpus, &cfg).days {
            Some(d) => {
                *out = d;
                Ok(())
            }
            None => Err(Failure(VwStatus::NotFound, "no lemma in the coverage set recurs".into())),
        }
    })
}
