use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{IssueState, SiteError, TaskState};

/// First simulated timestamp (unix seconds).
pub const CLOCK_START: u64 = 1_700_000_000;
const TICK: u64 = 60;

/// Deterministic clock: every logged event advances it by one minute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    now: u64,
}

impl Default for SimClock {
    fn default() -> Self {
        SimClock { now: CLOCK_START }
    }
}

impl SimClock {
    pub fn now(&self) -> u64 {
        self.now
    }

    fn tick(&mut self) -> u64 {
        let t = self.now;
        self.now += TICK;
        t
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub timestamp: u64,
    pub site: String,
    pub actor: String,
    pub event_type: String,
    pub object_id: String,
    pub payload_digest: String,
}

pub fn payload_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Default)]
pub struct EventLog {
    events: Vec<Event>,
    clock: SimClock,
}

impl EventLog {
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }

    pub(crate) fn append(
        &mut self,
        site: &str,
        actor: &str,
        event_type: &str,
        object_id: &str,
        digest_of: &[u8],
    ) {
        let event = Event {
            seq: self.events.len() as u64,
            timestamp: self.clock.tick(),
            site: site.into(),
            actor: actor.into(),
            event_type: event_type.into(),
            object_id: object_id.into(),
            payload_digest: payload_digest(digest_of),
        };
        self.events.push(event);
    }

    pub fn to_jsonl(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("event serializes") + "\n")
            .collect()
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<Event>, SiteError> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| SiteError::Log(format!("line {}: {e}", i + 1)))
            })
            .collect()
    }
}

/// State reconstructed from a log, or read off a live simulation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Snapshot {
    pub tasks: BTreeMap<String, TaskState>,
    pub issues: BTreeMap<String, IssueState>,
    pub active_delegations: BTreeMap<String, usize>,
}

fn illegal(from: Option<impl ToString>, to: impl ToString) -> SiteError {
    SiteError::InvalidTransition {
        from: from.map_or_else(|| "none".into(), |f| f.to_string()),
        to: to.to_string(),
    }
}

/// Rebuilds task, issue and delegation state from a log, rejecting any
/// out-of-order sequence number or illegal transition.
pub fn replay(events: &[Event]) -> Result<Snapshot, SiteError> {
    let mut snap = Snapshot::default();
    let mut last_ts = 0;
    for (i, e) in events.iter().enumerate() {
        if e.seq != i as u64 || e.timestamp < last_ts {
            return Err(SiteError::Log(format!("event {i} is out of order")));
        }
        last_ts = e.timestamp;
        let (kind, what) = e.event_type.split_once('.').unwrap_or((&e.event_type, ""));
        match kind {
            "task" => {
                let Some(to) = TaskState::parse(what) else {
                    continue;
                };
                let from = snap.tasks.get(&e.object_id).copied();
                let ok = match from {
                    None => to == TaskState::Requested,
                    Some(f) => f.can_advance_to(to),
                };
                if !ok {
                    return Err(illegal(from, to));
                }
                if to == TaskState::Completed {
                    snap.active_delegations.remove(&e.object_id);
                }
                snap.tasks.insert(e.object_id.clone(), to);
            }
            "issue" => {
                let to = IssueState::parse(what)
                    .ok_or_else(|| SiteError::Log(format!("unknown event {}", e.event_type)))?;
                let from = snap.issues.get(&e.object_id).copied();
                let ok = match from {
                    None => to == IssueState::Created,
                    Some(f) => f.next() == Some(to),
                };
                if !ok {
                    return Err(illegal(from, to));
                }
                snap.issues.insert(e.object_id.clone(), to);
            }
            "delegation" if what == "created" => {
                *snap
                    .active_delegations
                    .entry(e.object_id.clone())
                    .or_default() += 1;
            }
            _ => {}
        }
    }
    Ok(snap)
}

/// Labels of every secret found in `log`, either as raw bytes or as hex.
pub fn scan_for_leaks(log: &[u8], secrets: &[(String, Vec<u8>)]) -> Vec<String> {
    let contains =
        |needle: &[u8]| !needle.is_empty() && log.windows(needle.len()).any(|w| w == needle);
    secrets
        .iter()
        .filter(|(_, s)| {
            contains(s)
                || contains(hex::encode(s).as_bytes())
                || contains(hex::encode_upper(s).as_bytes())
        })
        .map(|(label, _)| label.clone())
        .collect()
}
