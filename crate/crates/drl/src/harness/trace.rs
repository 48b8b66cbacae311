//! On-disk trace format: one JSON header line followed by one JSON line per
//! applied event, each carrying the configuration fingerprint observed after
//! the event. Traces replay deterministically and double as regression
//! fixtures.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon;
use crate::model::Event;

use super::run::RunConfig;

/// Bumped whenever the trace schema changes shape.
pub const TRACE_VERSION: u32 = 1;

/// First line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: u32,
    pub run: RunConfig,
}

/// One applied event and the configuration fingerprint right after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Clock value after the event applied.
    pub index: u64,
    pub event: Event,
    pub config: String,
}

/// A full recorded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub header: TraceHeader,
    pub steps: Vec<TraceStep>,
}

/// Failure to read a trace back from disk.
#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace i/o failed: {0}")]
    Io(#[from] io::Error),
    #[error("trace line {line} is not valid: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("trace is empty; expected a header line")]
    MissingHeader,
    #[error("trace version {found} is not supported (expected {TRACE_VERSION})")]
    Version { found: u32 },
}

impl Trace {
    pub fn new(run: RunConfig) -> Self {
        Trace {
            header: TraceHeader {
                version: TRACE_VERSION,
                run,
            },
            steps: Vec::new(),
        }
    }

    /// Content hash covering the event sequence and every per-step
    /// configuration fingerprint.
    pub fn fingerprint(&self) -> String {
        canon::fingerprint(&self.steps)
    }

    /// Serializes as JSON lines: header first, then one line per step.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header = serde_json::to_string(&self.header).expect("header serializes");
        writeln!(out, "{header}")?;
        for step in &self.steps {
            let line = serde_json::to_string(step).expect("step serializes");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// The JSONL serialization as a single string.
    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    /// Reads the JSONL form back.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, TraceError> {
        let mut lines = input.lines().enumerate();
        let header: TraceHeader = match lines.next() {
            None => return Err(TraceError::MissingHeader),
            Some((line, text)) => {
                serde_json::from_str(&text?).map_err(|source| TraceError::Parse {
                    line: line + 1,
                    source,
                })?
            }
        };
        if header.version != TRACE_VERSION {
            return Err(TraceError::Version {
                found: header.version,
            });
        }
        let mut steps = Vec::new();
        for (line, text) in lines {
            let text = text?;
            if text.trim().is_empty() {
                continue;
            }
            let step = serde_json::from_str(&text).map_err(|source| TraceError::Parse {
                line: line + 1,
                source,
            })?;
            steps.push(step);
        }
        Ok(Trace { header, steps })
    }

    /// Parses the JSONL form from a string.
    pub fn from_jsonl(text: &str) -> Result<Self, TraceError> {
        Self::read_jsonl(text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ActorAddress;

    #[test]
    fn jsonl_round_trips() {
        let mut trace = Trace::new(RunConfig::default());
        trace.steps.push(TraceStep {
            index: 1,
            event: Event::Idle {
                actor: ActorAddress(0),
            },
            config: "abc".to_string(),
        });
        let text = trace.to_jsonl();
        assert_eq!(text.lines().count(), 2);
        let back = Trace::from_jsonl(&text).unwrap();
        assert_eq!(back, trace);
        assert_eq!(back.fingerprint(), trace.fingerprint());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Trace::from_jsonl(""),
            Err(TraceError::MissingHeader)
        ));

        let mut versioned = Trace::new(RunConfig::default());
        versioned.header.version = 99;
        assert!(matches!(
            Trace::from_jsonl(&versioned.to_jsonl()),
            Err(TraceError::Version { found: 99 })
        ));

        let good = Trace::new(RunConfig::default());
        let header_line = good.to_jsonl().lines().next().unwrap().to_string();
        let text = format!("{header_line}\nnot json\n");
        assert!(matches!(
            Trace::from_jsonl(&text),
            Err(TraceError::Parse { line: 2, .. })
        ));
    }
}
