//! JSON-Lines transcripts of every exchange with the backend.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::Message;

pub const TRANSPORT_ERROR: &str = "transport_error";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub session_id: String,
    pub seq: u32,
    pub request_messages: Vec<Message>,
    /// Reply text, or the failure reason for uncounted records.
    pub response_text: String,
    pub model: String,
    pub counted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish_reason: Option<String>,
}

impl TranscriptRecord {
    pub fn is_transport_failure(&self) -> bool {
        !self.counted && self.finish_reason.as_deref() == Some(TRANSPORT_ERROR)
    }
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("cannot access transcript {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("transcript {path} line {line}: {source}")]
    Malformed {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptRecord>, TranscriptError> {
    let io = |source| TranscriptError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|source| TranscriptError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })?,
        );
    }
    Ok(records)
}

/// Hex SHA-256 of the transcript file.
pub fn transcript_digest(path: &Path) -> Result<String, TranscriptError> {
    let bytes = std::fs::read(path).map_err(|source| TranscriptError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(hex_digest(&bytes))
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn write_transcript(path: &Path, records: &[TranscriptRecord]) -> Result<(), TranscriptError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| TranscriptError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct RecorderState {
    file: Option<File>,
    records: Vec<TranscriptRecord>,
}

/// Collects exchanges from concurrent sessions. Appends go to disk as they
/// happen; [`finish`](Self::finish) rewrites the file in (session, seq) order
/// so the result does not depend on scheduling.
pub struct TranscriptRecorder {
    path: Option<PathBuf>,
    state: Mutex<RecorderState>,
}

impl TranscriptRecorder {
    pub fn to_file(path: &Path) -> Result<Self, TranscriptError> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(path)
            .map_err(|source| TranscriptError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        Ok(Self {
            path: Some(path.to_path_buf()),
            state: Mutex::new(RecorderState {
                file: Some(file),
                records: Vec::new(),
            }),
        })
    }

    pub fn in_memory() -> Self {
        Self {
            path: None,
            state: Mutex::new(RecorderState {
                file: None,
                records: Vec::new(),
            }),
        }
    }

    pub fn append(&self, record: TranscriptRecord) {
        let mut state = self.state.lock().expect("recorder lock");
        if let Some(file) = state.file.as_mut() {
            let line = serde_json::to_string(&record).expect("record serializes");
            if let Err(e) = writeln!(file, "{line}") {
                tracing::error!(error = %e, "transcript append failed");
            }
        }
        state.records.push(record);
    }

    /// Records sorted by session and sequence number.
    pub fn records(&self) -> Vec<TranscriptRecord> {
        let mut records = self.state.lock().expect("recorder lock").records.clone();
        records.sort_by(|a, b| (&a.session_id, a.seq).cmp(&(&b.session_id, b.seq)));
        records
    }

    pub fn finish(&self) -> Result<Vec<TranscriptRecord>, TranscriptError> {
        let records = self.records();
        if let Some(path) = &self.path {
            self.state.lock().expect("recorder lock").file = None;
            write_transcript(path, &records)?;
        }
        Ok(records)
    }
}
