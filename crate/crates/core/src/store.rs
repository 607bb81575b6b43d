//! Event-sourced learner persistence.
//!
//! Each learner lives in its own directory holding `events.log` and
//! `snapshot`. Log lines are `seq<TAB>crc32<TAB>json`; the snapshot records how
//! many events it already folds in, and recovery replays the rest.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::StoreError;
use crate::text::Lemma;
use crate::tutor::{LearnerState, Timestamp, TutorParams};

const LOG_FILE: &str = "events.log";
const SNAPSHOT_FILE: &str = "snapshot";
const SNAPSHOT_TMP: &str = "snapshot.tmp";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SegmentRead,
    RevealClick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposureEvent {
    pub learner_id: String,
    pub doc_id: String,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<Lemma>,
    /// Further lemmas covered by the same event, for segments holding
    /// several translations.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lemmas: Vec<Lemma>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_id: Option<String>,
    pub timestamp: Timestamp,
}

impl ExposureEvent {
    /// Distinct lemmas named by the event.
    pub fn all_lemmas(&self) -> BTreeSet<&Lemma> {
        self.lemma.iter().chain(&self.lemmas).collect()
    }
}

pub fn validate_learner_id(id: &str) -> Result<(), StoreError> {
    let ok = (1..=64).contains(&id.len()) && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
    if ok {
        Ok(())
    } else {
        Err(StoreError::BadLearnerId(id.to_string()))
    }
}

/// Learner state plus event-log bookkeeping. This is what a snapshot holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerRecord {
    pub state: LearnerState,
    /// Number of log events folded into `state`.
    pub applied_events: u64,
    /// Timestamp of the newest applied event.
    pub last_event: Option<Timestamp>,
}

impl LearnerRecord {
    pub fn new(state: LearnerState) -> Self {
        LearnerRecord { state, applied_events: 0, last_event: None }
    }

    /// Applies one event. On error the record is unchanged.
    pub fn apply(&mut self, ev: &ExposureEvent, reveal_as_exposure: bool) -> Result<(), StoreError> {
        if ev.learner_id != self.state.learner_id {
            return Err(StoreError::Malformed(format!(
                "event for {:?} applied to learner {:?}",
                ev.learner_id, self.state.learner_id
            )));
        }
        if let Some(last) = self.last_event {
            if ev.timestamp.0 < last.0 {
                return Err(StoreError::TimestampRegression {
                    learner: self.state.learner_id.clone(),
                    timestamp: ev.timestamp.0,
                    last: last.0,
                });
            }
        }
        let exposes = match ev.kind {
            EventKind::SegmentRead => true,
            EventKind::RevealClick => reveal_as_exposure,
        };
        if exposes {
            let mut next = self.state.clone();
            for lemma in ev.all_lemmas() {
                next.apply_exposure(lemma, ev.timestamp)?;
            }
            self.state = next;
        }
        self.applied_events += 1;
        self.last_event = Some(ev.timestamp);
        Ok(())
    }
}

/// Folds events into a fresh learner from scratch.
pub fn fold_events<'a, I>(
    learner_id: &str,
    params: TutorParams,
    events: I,
    reveal_as_exposure: bool,
) -> Result<LearnerRecord, StoreError>
where
    I: IntoIterator<Item = &'a ExposureEvent>,
{
    let mut rec = LearnerRecord::new(LearnerState::new(learner_id, params));
    for ev in events {
        rec.apply(ev, reveal_as_exposure)?;
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoreOptions {
    /// Write a snapshot after this many appended events; 0 disables.
    pub snapshot_every: u64,
    pub reveal_as_exposure: bool,
    /// fsync the log after every append.
    pub durable: bool,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions { snapshot_every: 500, reveal_as_exposure: false, durable: true }
    }
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    learner_id: String,
    record: LearnerRecord,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

fn encode_line(seq: u64, ev: &ExposureEvent) -> String {
    let json = serde_json::to_string(ev).expect("events always serialize");
    let crc = crc32fast::hash(json.as_bytes());
    format!("{seq}\t{crc:08x}\t{json}\n")
}

fn decode_line(line: &str) -> Option<(u64, ExposureEvent)> {
    let mut parts = line.splitn(3, '\t');
    let seq = parts.next()?.parse().ok()?;
    let crc = u32::from_str_radix(parts.next()?, 16).ok()?;
    let json = parts.next()?;
    if crc32fast::hash(json.as_bytes()) != crc {
        return None;
    }
    Some((seq, serde_json::from_str(json).ok()?))
}

/// Outcome of reading a log file.
#[derive(Debug)]
pub struct LogScan {
    pub events: Vec<ExposureEvent>,
    /// Byte length of the valid prefix.
    pub valid_len: u64,
    /// True when an invalid tail was found after the valid prefix.
    pub torn: bool,
}

/// Reads every valid record. An invalid record is tolerated only as the
/// final one; anything after a bad record is corruption.
pub fn scan_log(path: &Path) -> Result<LogScan, StoreError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut events = Vec::new();
    let mut offset = 0usize;
    let mut bad_at: Option<usize> = None;
    while offset < bytes.len() {
        let end = bytes[offset..].iter().position(|&b| b == b'\n').map(|p| offset + p);
        let line_end = end.unwrap_or(bytes.len());
        let decoded = end.and_then(|_| std::str::from_utf8(&bytes[offset..line_end]).ok()).and_then(decode_line);
        match decoded {
            Some((seq, ev)) if bad_at.is_none() => {
                let want = events.len() as u64 + 1;
                if seq != want {
                    return Err(StoreError::Corrupt {
                        path: path.to_path_buf(),
                        message: format!("sequence {seq} where {want} was expected"),
                    });
                }
                events.push(ev);
            }
            Some(_) => {
                return Err(StoreError::Corrupt {
                    path: path.to_path_buf(),
                    message: format!("invalid record at byte {} followed by valid records", bad_at.unwrap_or(0)),
                });
            }
            None => {
                bad_at.get_or_insert(offset);
            }
        }
        offset = line_end + 1;
    }
    let valid_len = bad_at.unwrap_or(bytes.len()) as u64;
    Ok(LogScan { events, valid_len, torn: bad_at.is_some() })
}

/// Snapshot plus replay, without touching the files.
fn recover(dir: &Path, options: StoreOptions) -> Result<(LearnerRecord, LogScan), StoreError> {
    let snap_path = dir.join(SNAPSHOT_FILE);
    let raw = match fs::read(&snap_path) {
        Ok(raw) => raw,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            let id = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            return Err(StoreError::UnknownLearner(id));
        }
        Err(e) => return Err(io_err(&snap_path)(e)),
    };
    let snap: Snapshot =
        serde_json::from_slice(&raw).map_err(|source| StoreError::Json { path: snap_path.clone(), source })?;
    if snap.version != SNAPSHOT_VERSION || snap.learner_id != snap.record.state.learner_id {
        return Err(StoreError::Corrupt {
            path: snap_path,
            message: format!("unsupported snapshot version {} or mismatched learner", snap.version),
        });
    }
    let mut record = snap.record;
    let log_path = dir.join(LOG_FILE);
    let scan = scan_log(&log_path)?;
    let logged = scan.events.len() as u64;
    if logged < record.applied_events {
        return Err(StoreError::Corrupt {
            path: log_path,
            message: format!("snapshot covers {} events but log holds {logged}", record.applied_events),
        });
    }
    for ev in &scan.events[record.applied_events as usize..] {
        record.apply(ev, options.reveal_as_exposure)?;
    }
    Ok((record, scan))
}

/// Recovered learner state for read-only use. A torn tail is ignored but
/// left in place.
pub fn read_record(dir: &Path, options: StoreOptions) -> Result<LearnerRecord, StoreError> {
    recover(dir, options).map(|(r, _)| r)
}

/// One learner's durable state. Not synchronized; wrap it in a lock to share.
#[derive(Debug)]
pub struct LearnerStore {
    dir: PathBuf,
    log: File,
    record: LearnerRecord,
    logged_events: u64,
    options: StoreOptions,
}

impl LearnerStore {
    /// Creates a learner directory with an empty log and an initial snapshot.
    pub fn create(
        dir: &Path,
        learner_id: &str,
        params: TutorParams,
        options: StoreOptions,
    ) -> Result<Self, StoreError> {
        validate_learner_id(learner_id)?;
        params.validate()?;
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let log_path = dir.join(LOG_FILE);
        let log = OpenOptions::new().create(true).append(true).open(&log_path).map_err(io_err(&log_path))?;
        let mut store = LearnerStore {
            dir: dir.to_path_buf(),
            log,
            record: LearnerRecord::new(LearnerState::new(learner_id, params)),
            logged_events: 0,
            options,
        };
        store.snapshot()?;
        Ok(store)
    }

    /// Recovers from the latest snapshot and the events logged after it.
    /// A torn final record is cut off with a warning.
    pub fn open(dir: &Path, options: StoreOptions) -> Result<Self, StoreError> {
        let (record, scan) = recover(dir, options)?;
        let log_path = dir.join(LOG_FILE);
        if scan.torn {
            log::warn!("{}: discarding torn record after {} valid events", log_path.display(), scan.events.len());
            let f = OpenOptions::new().write(true).open(&log_path).map_err(io_err(&log_path))?;
            f.set_len(scan.valid_len).map_err(io_err(&log_path))?;
            f.sync_all().map_err(io_err(&log_path))?;
        }
        let log = OpenOptions::new().create(true).append(true).open(&log_path).map_err(io_err(&log_path))?;
        Ok(LearnerStore { dir: dir.to_path_buf(), log, record, logged_events: scan.events.len() as u64, options })
    }

    pub fn state(&self) -> &LearnerState {
        &self.record.state
    }

    pub fn record(&self) -> &LearnerRecord {
        &self.record
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Folds a batch onto a copy of the current record, failing without side
    /// effects if any event is rejected.
    pub fn check_batch(&self, events: &[ExposureEvent]) -> Result<LearnerRecord, StoreError> {
        let mut next = self.record.clone();
        for ev in events {
            next.apply(ev, self.options.reveal_as_exposure)?;
        }
        Ok(next)
    }

    /// Validates, durably logs and applies a batch. Either every event is
    /// accepted or none is.
    pub fn append(&mut self, events: &[ExposureEvent]) -> Result<usize, StoreError> {
        let next = self.check_batch(events)?;
        self.commit(events, next)
    }

    /// Writes a batch already validated by [`check_batch`](Self::check_batch).
    pub fn commit(&mut self, events: &[ExposureEvent], next: LearnerRecord) -> Result<usize, StoreError> {
        if events.is_empty() {
            return Ok(0);
        }
        let mut buf = String::new();
        for (i, ev) in events.iter().enumerate() {
            buf.push_str(&encode_line(self.logged_events + i as u64 + 1, ev));
        }
        let log_path = self.dir.join(LOG_FILE);
        self.log.write_all(buf.as_bytes()).map_err(io_err(&log_path))?;
        if self.options.durable {
            self.log.sync_data().map_err(io_err(&log_path))?;
        }
        let before = self.logged_events;
        self.logged_events += events.len() as u64;
        self.record = next;
        let every = self.options.snapshot_every;
        if every > 0 && self.logged_events / every > before / every {
            self.snapshot()?;
        }
        Ok(events.len())
    }

    /// Writes the snapshot atomically: temp file, fsync, rename.
    pub fn snapshot(&mut self) -> Result<(), StoreError> {
        let tmp = self.dir.join(SNAPSHOT_TMP);
        let dst = self.dir.join(SNAPSHOT_FILE);
        let snap = Snapshot {
            version: SNAPSHOT_VERSION,
            learner_id: self.record.state.learner_id.clone(),
            record: self.record.clone(),
        };
        let body = serde_json::to_vec(&snap).map_err(|source| StoreError::Json { path: tmp.clone(), source })?;
        let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(&body).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        fs::rename(&tmp, &dst).map_err(io_err(&dst))?;
        if let Ok(d) = File::open(&self.dir) {
            let _ = d.sync_all();
        }
        Ok(())
    }
}

/// All learners under one root directory, loaded lazily.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    options: StoreOptions,
    params: TutorParams,
    learners: Mutex<HashMap<String, Arc<Mutex<LearnerStore>>>>,
}

pub type LearnerHandle = Arc<Mutex<LearnerStore>>;

impl Store {
    pub fn new(root: impl Into<PathBuf>, params: TutorParams, options: StoreOptions) -> Result<Self, StoreError> {
        params.validate()?;
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Store { root, options, params, learners: Mutex::new(HashMap::new()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn options(&self) -> StoreOptions {
        self.options
    }

    fn learner_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    /// An existing learner, recovered from disk on first use.
    pub fn get(&self, id: &str) -> Result<LearnerHandle, StoreError> {
        validate_learner_id(id)?;
        let mut map = self.learners.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(h) = map.get(id) {
            return Ok(h.clone());
        }
        let dir = self.learner_dir(id);
        if !dir.join(SNAPSHOT_FILE).exists() {
            return Err(StoreError::UnknownLearner(id.to_string()));
        }
        let h = Arc::new(Mutex::new(LearnerStore::open(&dir, self.options)?));
        map.insert(id.to_string(), h.clone());
        Ok(h)
    }

    pub fn get_or_create(&self, id: &str) -> Result<LearnerHandle, StoreError> {
        match self.get(id) {
            Err(StoreError::UnknownLearner(_)) => {}
            other => return other,
        }
        let mut map = self.learners.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(h) = map.get(id) {
            return Ok(h.clone());
        }
        let h = Arc::new(Mutex::new(LearnerStore::create(&self.learner_dir(id), id, self.params, self.options)?));
        map.insert(id.to_string(), h.clone());
        Ok(h)
    }

    /// Validates the whole batch against every learner it touches, then
    /// commits. A rejected event leaves all learners unchanged.
    pub fn append_batch(&self, events: &[ExposureEvent]) -> Result<usize, StoreError> {
        let mut groups: std::collections::BTreeMap<&str, Vec<ExposureEvent>> = Default::default();
        for ev in events {
            validate_learner_id(&ev.learner_id)?;
            groups.entry(ev.learner_id.as_str()).or_default().push(ev.clone());
        }
        let handles: Vec<(LearnerHandle, Vec<ExposureEvent>)> =
            groups.into_iter().map(|(id, evs)| Ok((self.get(id)?, evs))).collect::<Result<_, StoreError>>()?;
        // BTreeMap order gives a global lock order.
        let mut guards: Vec<_> =
            handles.iter().map(|(h, evs)| (h.lock().unwrap_or_else(|e| e.into_inner()), evs)).collect();
        let mut nexts = Vec::with_capacity(guards.len());
        for (g, evs) in &guards {
            nexts.push(g.check_batch(evs)?);
        }
        let mut n = 0;
        for ((g, evs), next) in guards.iter_mut().zip(nexts) {
            n += g.commit(evs, next)?;
        }
        Ok(n)
    }

    /// Snapshots every loaded learner.
    pub fn flush(&self) -> Result<(), StoreError> {
        let handles: Vec<LearnerHandle> = {
            let map = self.learners.lock().unwrap_or_else(|e| e.into_inner());
            map.values().cloned().collect()
        };
        for h in handles {
            h.lock().unwrap_or_else(|e| e.into_inner()).snapshot()?;
        }
        Ok(())
    }
}
