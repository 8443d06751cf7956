//! Append-only event log.
//!
//! One record per line: the CRC-32 of the JSON body as eight lowercase hex
//! digits, a space, then the compact JSON of the [`EventRecord`]. A final line
//! without its newline is a torn write and is truncated on open; any complete
//! line whose checksum fails is reported as corruption.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use avabond_core::EventRecord;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("storage failure: {0}")]
    Storage(#[from] io::Error),
    #[error("corrupt log at line {line}: {detail}")]
    CorruptLog { line: usize, detail: String },
    #[error("player `{player}` expects sequence {expected}, got {got}")]
    Sequence { player: String, expected: u64, got: u64 },
}

pub fn checksum(body: &str) -> u32 {
    crc32fast::hash(body.as_bytes())
}

/// Serialize one record as a log line, newline included.
pub fn encode_line(record: &EventRecord) -> String {
    let body = serde_json::to_string(record).expect("event records serialize");
    format!("{:08x} {body}\n", checksum(&body))
}

/// Parse one log line (without its newline).
pub fn decode_line(line: &str) -> Result<EventRecord, String> {
    let (crc, body) = line.split_once(' ').ok_or("missing checksum separator")?;
    if crc.len() != 8 {
        return Err(format!("malformed checksum `{crc}`"));
    }
    let expected = u32::from_str_radix(crc, 16).map_err(|e| format!("malformed checksum `{crc}`: {e}"))?;
    let actual = checksum(body);
    if expected != actual {
        return Err(format!("checksum mismatch: recorded {expected:08x}, computed {actual:08x}"));
    }
    serde_json::from_str(body).map_err(|e| format!("undecodable record: {e}"))
}

/// What opening the log found.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Recovery {
    pub records: usize,
    /// Bytes of a torn final write that were discarded.
    pub truncated_bytes: u64,
}

/// Parse a whole log image. Returns the records and the length of the valid
/// prefix (everything up to the last newline).
pub fn parse_log(bytes: &[u8]) -> Result<(Vec<EventRecord>, usize), LogError> {
    let valid = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let text = std::str::from_utf8(&bytes[..valid])
        .map_err(|e| LogError::CorruptLog { line: 0, detail: format!("not utf-8: {e}") })?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let record = decode_line(line).map_err(|detail| LogError::CorruptLog { line: i + 1, detail })?;
        records.push(record);
    }
    Ok((records, valid))
}

pub struct EventLog {
    path: PathBuf,
    file: File,
    fsync: bool,
    by_player: BTreeMap<String, Vec<EventRecord>>,
    len: usize,
}

impl EventLog {
    /// Open or create the log, repairing a torn tail and indexing every record.
    pub fn open(path: impl AsRef<Path>, fsync: bool) -> Result<(Self, Recovery), LogError> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let (records, valid) = parse_log(&bytes)?;
        let truncated_bytes = (bytes.len() - valid) as u64;
        if truncated_bytes > 0 {
            tracing::warn!(bytes = truncated_bytes, "discarding torn final log record");
            file.set_len(valid as u64)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;

        let mut log = EventLog { path, file, fsync, by_player: BTreeMap::new(), len: 0 };
        for (i, record) in records.into_iter().enumerate() {
            log.index(record).map_err(|e| LogError::CorruptLog { line: i + 1, detail: e.to_string() })?;
        }
        let recovery = Recovery { records: log.len, truncated_bytes };
        Ok((log, recovery))
    }

    fn index(&mut self, record: EventRecord) -> Result<(), LogError> {
        let expected = self.next_sequence(&record.player_id);
        if record.sequence != expected {
            return Err(LogError::Sequence { player: record.player_id, expected, got: record.sequence });
        }
        self.by_player.entry(record.player_id.clone()).or_default().push(record);
        self.len += 1;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Sequence number the next event for `player` must carry; 1 for a new player.
    pub fn next_sequence(&self, player: &str) -> u64 {
        self.by_player.get(player).map_or(1, |r| r.len() as u64 + 1)
    }

    /// Durably append a record whose sequence number is the player's next one.
    pub fn append(&mut self, record: EventRecord) -> Result<u64, LogError> {
        let expected = self.next_sequence(&record.player_id);
        if record.sequence != expected {
            return Err(LogError::Sequence { player: record.player_id, expected, got: record.sequence });
        }
        let line = encode_line(&record);
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        if self.fsync {
            self.file.sync_data()?;
        }
        let sequence = record.sequence;
        self.index(record)?;
        Ok(sequence)
    }

    pub fn records(&self, player: &str) -> &[EventRecord] {
        self.by_player.get(player).map_or(&[], Vec::as_slice)
    }

    pub fn players(&self) -> impl Iterator<Item = &str> {
        self.by_player.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}
