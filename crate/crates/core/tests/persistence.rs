//! Event log and snapshot recovery through the public store API.

use std::io::Write;

use vocabweave::error::StoreError;
use vocabweave::store::{fold_events, scan_log, EventKind, ExposureEvent, LearnerStore, Store, StoreOptions};
use vocabweave::text::Lemma;
use vocabweave::tutor::{Timestamp, TutorParams};

fn ev(learner: &str, lemma: &str, t: f64) -> ExposureEvent {
    ExposureEvent {
        learner_id: learner.into(),
        doc_id: "d".into(),
        kind: EventKind::SegmentRead,
        lemma: Some(Lemma::new(lemma).unwrap()),
        lemmas: Vec::new(),
        span_id: None,
        timestamp: Timestamp(t),
    }
}

fn opts() -> StoreOptions {
    StoreOptions { snapshot_every: 3, reveal_as_exposure: false, durable: false }
}

#[test]
fn corruption_before_valid_records_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("x");
    let mut s = LearnerStore::create(&dir, "x", TutorParams::default(), opts()).unwrap();
    s.append(&[ev("x", "cat", 1.0), ev("x", "dog", 2.0)]).unwrap();
    drop(s);
    let log = dir.join("events.log");
    let text = std::fs::read_to_string(&log).unwrap();
    let broken = text.replacen("\"cat\"", "\"cab\"", 1);
    std::fs::write(&log, broken).unwrap();
    assert!(matches!(scan_log(&log), Err(StoreError::Corrupt { .. })));
    assert!(LearnerStore::open(&dir, opts()).is_err());
}

#[test]
fn torn_tail_is_cut_and_appends_resume() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("x");
    let events: Vec<_> = (0..7).map(|i| ev("x", ["cat", "dog"][i % 2], i as f64 * 1000.0)).collect();
    let mut s = LearnerStore::create(&dir, "x", TutorParams::default(), opts()).unwrap();
    s.append(&events[..5]).unwrap();
    drop(s);
    let mut f = std::fs::OpenOptions::new().append(true).open(dir.join("events.log")).unwrap();
    f.write_all(b"6\tabc").unwrap();
    drop(f);
    let scan = scan_log(&dir.join("events.log")).unwrap();
    assert!(scan.torn);
    assert_eq!(scan.events.len(), 5);
    let mut s = LearnerStore::open(&dir, opts()).unwrap();
    s.append(&events[5..]).unwrap();
    drop(s);
    let s = LearnerStore::open(&dir, opts()).unwrap();
    let want = fold_events("x", TutorParams::default(), &events, false).unwrap();
    assert_eq!(s.record(), &want);
    assert!(!scan_log(&dir.join("events.log")).unwrap().torn);
}

#[test]
fn batches_are_all_or_nothing_across_learners() {
    let tmp = tempfile::tempdir().unwrap();
    let store = Store::new(tmp.path(), TutorParams::default(), opts()).unwrap();
    store.get_or_create("a").unwrap();
    store.get_or_create("b").unwrap();
    store.append_batch(&[ev("a", "cat", 10.0), ev("b", "cat", 10.0)]).unwrap();
    // the regression for b must also keep a's event out
    let err = store.append_batch(&[ev("a", "dog", 20.0), ev("b", "dog", 5.0)]).unwrap_err();
    assert!(matches!(err, StoreError::TimestampRegression { .. }));
    assert_eq!(store.get("a").unwrap().lock().unwrap().record().applied_events, 1);
    assert!(matches!(store.append_batch(&[ev("nobody", "cat", 1.0)]), Err(StoreError::UnknownLearner(_))));
    store.flush().unwrap();

    let again = Store::new(tmp.path(), TutorParams::default(), opts()).unwrap();
    let a = again.get("a").unwrap();
    let a = a.lock().unwrap();
    assert_eq!(a.record().applied_events, 1);
    assert!(a.state().memories.contains_key(&Lemma::new("cat").unwrap()));
}

#[test]
fn reveal_clicks_count_only_when_configured() {
    let mut click = ev("x", "cat", 100.0);
    click.kind = EventKind::RevealClick;
    let off = fold_events("x", TutorParams::default(), [&click], false).unwrap();
    assert!(off.state.memories.is_empty());
    assert_eq!(off.applied_events, 1);
    let on = fold_events("x", TutorParams::default(), [&click], true).unwrap();
    assert_eq!(on.state.memories.len(), 1);
}
