//! Append-only run traces and their JSON-lines wire format.
//!
//! One JSON object per line, in engine dispatch order:
//!
//! ```json
//! {"tick": 3, "node": "0.2.0", "event": "ticked", "status": "R", "progress": 0.15, "resources": ["wheels"]}
//! ```
//!
//! with `"event"` one of `"ticked"`, `"paused"`, `"halted"`; `"status"` is
//! the returned status letter for ticked events and `null` otherwise;
//! `"progress"` and `"resources"` are the node's start-of-tick snapshot
//! values. The final line reports the run outcome:
//!
//! ```json
//! {"result": "success", "ticks": 25}
//! ```

use crate::progress::Progress;
use crate::resource::{ResourceCatalog, ResourceSet};
use crate::status::Status;
use crate::tree::NodeId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Ticked,
    Paused,
    Halted,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Ticked => "ticked",
            EventKind::Paused => "paused",
            EventKind::Halted => "halted",
        }
    }
}

/// One per-tick node event.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub tick: u64,
    pub node: NodeId,
    pub event: EventKind,
    /// Returned status; present only for ticked events.
    pub status: Option<Status>,
    /// The node's progress at the start of the tick.
    pub progress: Progress,
    /// The node's resource demand at the start of the tick.
    pub resources: ResourceSet,
}

/// Final outcome of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunResult {
    Success,
    Failure,
    /// The tick budget ran out before the root settled.
    Timeout,
}

impl RunResult {
    pub fn as_str(self) -> &'static str {
        match self {
            RunResult::Success => "success",
            RunResult::Failure => "failure",
            RunResult::Timeout => "timeout",
        }
    }
}

/// A complete run: every event plus the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    pub result: RunResult,
    /// Number of engine steps executed.
    pub ticks: u64,
}

#[derive(Serialize, Deserialize)]
struct EventLine {
    tick: u64,
    node: String,
    event: String,
    status: Option<String>,
    progress: f64,
    resources: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ResultLine {
    result: String,
    ticks: u64,
}

impl Trace {
    /// Serializes to the JSON-lines format, resolving resource ids to token
    /// names through the catalog the run interned them in.
    pub fn to_jsonl(&self, catalog: &ResourceCatalog) -> String {
        let mut out = String::new();
        for ev in &self.events {
            let line = EventLine {
                tick: ev.tick,
                node: ev.node.as_str().to_owned(),
                event: ev.event.as_str().to_owned(),
                status: ev.status.map(|s| s.letter().to_owned()),
                progress: ev.progress.value(),
                resources: ev
                    .resources
                    .names(catalog)
                    .into_iter()
                    .map(str::to_owned)
                    .collect(),
            };
            out.push_str(&serde_json::to_string(&line).expect("trace lines serialize"));
            out.push('\n');
        }
        let last = ResultLine {
            result: self.result.as_str().to_owned(),
            ticks: self.ticks,
        };
        out.push_str(&serde_json::to_string(&last).expect("result line serializes"));
        out.push('\n');
        out
    }
}

/// A trace read back from its wire format. Node ids stay strings and
/// resources stay token names, so verification needs no catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub events: Vec<ParsedEvent>,
    pub result: RunResult,
    pub ticks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedEvent {
    pub tick: u64,
    pub node: String,
    pub event: EventKind,
    pub status: Option<Status>,
    pub progress: f64,
    pub resources: Vec<String>,
}

#[derive(Debug, Error)]
pub enum TraceReadError {
    #[error("line {0}: {1}")]
    Malformed(usize, String),
    #[error("trace has no result line")]
    MissingResult,
}

impl ParsedTrace {
    pub fn from_jsonl(text: &str) -> Result<ParsedTrace, TraceReadError> {
        let mut events = Vec::new();
        let mut result = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if result.is_some() {
                return Err(TraceReadError::Malformed(
                    lineno + 1,
                    "event after result line".to_owned(),
                ));
            }
            if let Ok(ev) = serde_json::from_str::<EventLine>(line) {
                let kind = match ev.event.as_str() {
                    "ticked" => EventKind::Ticked,
                    "paused" => EventKind::Paused,
                    "halted" => EventKind::Halted,
                    other => {
                        return Err(TraceReadError::Malformed(
                            lineno + 1,
                            format!("unknown event `{other}`"),
                        ))
                    }
                };
                let status = match ev.status {
                    None => None,
                    Some(s) => Some(Status::from_letter(&s).ok_or_else(|| {
                        TraceReadError::Malformed(lineno + 1, format!("unknown status `{s}`"))
                    })?),
                };
                events.push(ParsedEvent {
                    tick: ev.tick,
                    node: ev.node,
                    event: kind,
                    status,
                    progress: ev.progress,
                    resources: ev.resources,
                });
            } else if let Ok(last) = serde_json::from_str::<ResultLine>(line) {
                let r = match last.result.as_str() {
                    "success" => RunResult::Success,
                    "failure" => RunResult::Failure,
                    "timeout" => RunResult::Timeout,
                    other => {
                        return Err(TraceReadError::Malformed(
                            lineno + 1,
                            format!("unknown result `{other}`"),
                        ))
                    }
                };
                result = Some((r, last.ticks));
            } else {
                return Err(TraceReadError::Malformed(
                    lineno + 1,
                    "not an event or result object".to_owned(),
                ));
            }
        }
        let (result, ticks) = result.ok_or(TraceReadError::MissingResult)?;
        Ok(ParsedTrace {
            events,
            result,
            ticks,
        })
    }

    /// Events of one tick, in dispatch order.
    pub fn events_at(&self, tick: u64) -> impl Iterator<Item = &ParsedEvent> {
        self.events.iter().filter(move |e| e.tick == tick)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_jsonl() {
        let mut catalog = ResourceCatalog::new();
        let wheels = catalog.intern("wheels").unwrap();
        let trace = Trace {
            events: vec![
                TraceEvent {
                    tick: 0,
                    node: NodeId::new("0"),
                    event: EventKind::Ticked,
                    status: Some(Status::Running),
                    progress: Progress::new(0.5).unwrap(),
                    resources: ResourceSet::singleton(wheels),
                },
                TraceEvent {
                    tick: 1,
                    node: NodeId::new("0"),
                    event: EventKind::Paused,
                    status: None,
                    progress: Progress::new(0.5).unwrap(),
                    resources: ResourceSet::new(),
                },
            ],
            result: RunResult::Timeout,
            ticks: 2,
        };
        let text = trace.to_jsonl(&catalog);
        assert!(text.contains("\"status\":\"R\""));
        assert!(text.contains("\"status\":null"));
        assert!(text.ends_with("{\"result\":\"timeout\",\"ticks\":2}\n"));

        let parsed = ParsedTrace::from_jsonl(&text).unwrap();
        assert_eq!(parsed.events.len(), 2);
        assert_eq!(parsed.events[0].resources, vec!["wheels".to_owned()]);
        assert_eq!(parsed.events[0].progress, 0.5);
        assert_eq!(parsed.result, RunResult::Timeout);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(ParsedTrace::from_jsonl("{\"bogus\": 1}\n").is_err());
        assert!(ParsedTrace::from_jsonl("").is_err());
    }
}
