//! Append-only event log.
//!
//! Every state change is an [`Event`] with a strictly increasing sequence
//! number starting at 1. The on-disk form is JSON Lines: one event per
//! line, UTF-8, newline-terminated.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::label::FstLabel;
use crate::model::{Annotation, AnnotatorId, FailureReport, ImageId, ImageRecord};
use crate::profile::QualificationState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    #[serde(flatten)]
    pub payload: EventPayload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SettleRule {
    /// One category led every other by the lead margin.
    LeadMargin,
    /// Majority label at the annotation cap.
    MajorityAtCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum EventPayload {
    DatasetIngested {
        images: Vec<ImageRecord>,
    },
    AnnotationSubmitted {
        annotation: Annotation,
    },
    FlagFiled {
        report: FailureReport,
    },
    ConsensusSettled {
        image_id: ImageId,
        label: FstLabel,
        rule: SettleRule,
    },
    ImageHalted {
        image_id: ImageId,
    },
    ImageEscalated {
        image_id: ImageId,
    },
    Adjudicated {
        image_id: ImageId,
        expert_id: String,
        label: FstLabel,
    },
    QualificationChanged {
        annotator_id: AnnotatorId,
        from: QualificationState,
        to: QualificationState,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("event log i/o: {0}")]
    Io(#[from] io::Error),
    #[error("event log line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("event log corrupt: expected seq {expected}, found {found}")]
    Corruption { expected: u64, found: u64 },
}

/// Durable destination for events.
pub trait EventStore {
    fn persist(&mut self, event: &Event) -> io::Result<()>;
}

/// In-memory store, used by tests and the simulator.
#[derive(Debug, Default, Clone)]
pub struct MemoryStore {
    pub events: Vec<Event>,
}

impl EventStore for MemoryStore {
    fn persist(&mut self, event: &Event) -> io::Result<()> {
        self.events.push(event.clone());
        Ok(())
    }
}

/// JSON Lines file store. Each append writes one full line, flushes, and
/// (by default) fsyncs before the append is acknowledged.
#[derive(Debug)]
pub struct JsonlStore {
    path: PathBuf,
    writer: BufWriter<File>,
    fsync: bool,
}

impl JsonlStore {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(JsonlStore {
            path,
            writer: BufWriter::new(file),
            fsync: true,
        })
    }

    /// Skip `fsync` after each append (flush only). For throwaway logs.
    pub fn without_fsync(mut self) -> Self {
        self.fsync = false;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EventStore for JsonlStore {
    fn persist(&mut self, event: &Event) -> io::Result<()> {
        let mut line = serde_json::to_vec(event).map_err(io::Error::other)?;
        line.push(b'\n');
        self.writer.write_all(&line)?;
        self.writer.flush()?;
        if self.fsync {
            self.writer.get_ref().sync_data()?;
        }
        Ok(())
    }
}

/// Sequence-numbering front end over an [`EventStore`].
#[derive(Debug)]
pub struct EventLog<S> {
    store: S,
    last_seq: u64,
}

impl<S: EventStore> EventLog<S> {
    pub fn new(store: S) -> Self {
        EventLog { store, last_seq: 0 }
    }

    /// Continue numbering after `last_seq` (e.g. after replaying an existing file).
    pub fn resume(store: S, last_seq: u64) -> Self {
        EventLog { store, last_seq }
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn next_seq(&self) -> u64 {
        self.last_seq + 1
    }

    /// Append with `seq = last + 1`. On a storage error the sequence counter
    /// does not advance.
    pub fn append(&mut self, payload: EventPayload) -> Result<Event, LogError> {
        let event = Event {
            seq: self.last_seq + 1,
            payload,
        };
        self.store.persist(&event)?;
        self.last_seq = event.seq;
        Ok(event)
    }

    pub fn store(&self) -> &S {
        &self.store
    }

    pub fn into_store(self) -> S {
        self.store
    }
}

/// Parse a JSON Lines stream. A final line without a trailing newline that
/// fails to parse is treated as a torn write and dropped; any other bad line
/// is an error. Sequence order is checked by replay, not here.
pub fn parse_jsonl<R: Read>(reader: R) -> Result<Vec<Event>, LogError> {
    let mut reader = BufReader::new(reader);
    let mut events = Vec::new();
    let mut buf = String::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let complete = buf.ends_with('\n');
        let text = buf.trim();
        if text.is_empty() {
            continue;
        }
        match serde_json::from_str::<Event>(text) {
            Ok(ev) => events.push(ev),
            Err(_) if !complete => break,
            Err(source) => {
                return Err(LogError::Parse {
                    line: line_no,
                    source,
                })
            }
        }
    }
    Ok(events)
}

/// Read an event log file; a missing file is an empty log.
pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<Event>, LogError> {
    match File::open(path.as_ref()) {
        Ok(f) => parse_jsonl(f),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}

pub fn write_jsonl<W: Write>(mut w: W, events: &[Event]) -> io::Result<()> {
    for ev in events {
        serde_json::to_writer(&mut w, ev).map_err(io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halted(id: &str) -> EventPayload {
        EventPayload::ImageHalted {
            image_id: id.into(),
        }
    }

    #[test]
    fn first_append_is_seq_one() {
        let mut log = EventLog::new(MemoryStore::default());
        assert_eq!(log.append(halted("a")).unwrap().seq, 1);
        assert_eq!(log.append(halted("b")).unwrap().seq, 2);
        assert_eq!(log.last_seq(), 2);
    }

    struct FailingStore;
    impl EventStore for FailingStore {
        fn persist(&mut self, _: &Event) -> io::Result<()> {
            Err(io::Error::other("disk full"))
        }
    }

    #[test]
    fn storage_failure_leaves_counter_unchanged() {
        let mut log = EventLog::resume(FailingStore, 7);
        assert!(matches!(log.append(halted("a")), Err(LogError::Io(_))));
        assert_eq!(log.last_seq(), 7);
    }

    #[test]
    fn jsonl_round_trip_and_torn_tail() {
        let events = vec![
            Event { seq: 1, payload: halted("a") },
            Event { seq: 2, payload: halted("b") },
        ];
        let mut bytes = Vec::new();
        write_jsonl(&mut bytes, &events).unwrap();
        assert_eq!(parse_jsonl(&bytes[..]).unwrap(), events);

        let mut torn = bytes.clone();
        torn.extend_from_slice(br#"{"seq":3,"type":"Ima"#);
        assert_eq!(parse_jsonl(&torn[..]).unwrap(), events);

        let mut bad = bytes;
        bad.extend_from_slice(b"not json\n");
        assert!(matches!(
            parse_jsonl(&bad[..]),
            Err(LogError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn line_format_is_flat_tagged_json() {
        let ev = Event { seq: 4, payload: halted("img-1") };
        let s = serde_json::to_string(&ev).unwrap();
        assert_eq!(s, r#"{"seq":4,"type":"ImageHalted","image_id":"img-1"}"#);
    }

    #[test]
    fn file_store_appends_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let mut log = EventLog::new(JsonlStore::open(&path).unwrap());
        log.append(halted("a")).unwrap();
        log.append(halted("b")).unwrap();
        drop(log);
        let events = read_jsonl(&path).unwrap();
        assert_eq!(events.len(), 2);
        let mut log = EventLog::resume(JsonlStore::open(&path).unwrap(), 2);
        assert_eq!(log.append(halted("c")).unwrap().seq, 3);
        assert_eq!(read_jsonl(&path).unwrap().len(), 3);
        assert!(read_jsonl(dir.path().join("missing.jsonl")).unwrap().is_empty());
    }
}
