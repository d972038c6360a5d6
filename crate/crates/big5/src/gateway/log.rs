//! Request tracing and replay.
//!
//! When tracing is enabled the gateway appends one JSON record per
//! request/response pair to a line-delimited log file. A [`ReplayBackend`]
//! serves responses back out of such a log, so a persisted run can be
//! reproduced byte-for-byte without touching the original backend.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatBackend, ChatMessage, GatewayError, GenerationParams};

/// One request/response pair, one line in the log file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub backend: String,
    pub messages: Vec<ChatMessage>,
    pub params: GenerationParams,
    pub response: String,
}

pub(super) struct RequestLogWriter {
    out: BufWriter<File>,
}

impl RequestLogWriter {
    pub(super) fn create(path: &Path) -> std::io::Result<RequestLogWriter> {
        Ok(RequestLogWriter { out: BufWriter::new(File::create(path)?) })
    }

    pub(super) fn append(&mut self, record: &RequestRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }
}

pub fn read_request_log(path: &Path) -> std::io::Result<Vec<RequestRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}

fn request_key(messages: &[ChatMessage], params: &GenerationParams) -> String {
    serde_json::to_string(&(messages, params)).expect("request serializes")
}

/// Serves recorded responses keyed by the exact request. Repeated identical
/// requests are answered in log order.
pub struct ReplayBackend {
    responses: Mutex<HashMap<String, VecDeque<String>>>,
}

impl ReplayBackend {
    pub fn from_records(records: Vec<RequestRecord>) -> ReplayBackend {
        let mut responses: HashMap<String, VecDeque<String>> = HashMap::new();
        for r in records {
            responses
                .entry(request_key(&r.messages, &r.params))
                .or_default()
                .push_back(r.response);
        }
        ReplayBackend { responses: Mutex::new(responses) }
    }

    pub fn from_log(path: &Path) -> std::io::Result<ReplayBackend> {
        Ok(ReplayBackend::from_records(read_request_log(path)?))
    }
}

impl ChatBackend for ReplayBackend {
    fn complete_once(
        &self,
        messages: &[ChatMessage],
        params: &GenerationParams,
    ) -> Result<String, GatewayError> {
        self.responses
            .lock()
            .expect("replay map poisoned")
            .get_mut(&request_key(messages, params))
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| GatewayError::Scripted("no logged response for this request".into()))
    }

    fn describe(&self) -> String {
        "replay".into()
    }
}
