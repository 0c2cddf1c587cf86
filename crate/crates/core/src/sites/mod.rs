//! In-process contractor/subcontractor workflow simulation.
//!
//! A [`Simulation`] owns every site, task, issue and delegation plus an
//! append-only [`EventLog`]. Payloads are sealed with the DEM under a key
//! encrypted by the owning site; outsourcing re-encrypts that key toward one
//! registered subcontractor user.

mod demo;
mod log;
mod sim;

use std::fmt;

use thiserror::Error;

use crate::policy::PolicyError;
use crate::scheme::SchemeError;

pub use demo::{run_demo, DemoOutcome, DEMO_PAYLOAD};
pub use log::{
    payload_digest, replay, scan_for_leaks, Event, EventLog, SimClock, Snapshot, CLOCK_START,
};
pub use sim::{
    track_task, DelegationRecord, IssueRecord, IssueTransition, Simulation, Site, SiteRole,
    SiteUser, TaskPayload, TaskRecord, TaskTransition,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SiteError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("deadline {deadline} is not after the current time {now}")]
    DeadlineInPast { deadline: u64, now: u64 },
    #[error("illegal transition {from} -> {to}")]
    InvalidTransition { from: String, to: String },
    #[error("{found} may not perform this step (expected {expected})")]
    WrongActor { expected: String, found: String },
    #[error("no user {0} at the target site")]
    TargetUserUnknown(String),
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("unknown site {0}")]
    UnknownSite(String),
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("unknown issue {0}")]
    UnknownIssue(String),
    #[error("id {0} is already taken")]
    DuplicateId(String),
    #[error("event log: {0}")]
    Log(String),
}

impl SiteError {
    pub fn name(&self) -> &'static str {
        match self {
            SiteError::Scheme(e) => e.name(),
            SiteError::Policy(e) => e.name(),
            SiteError::DeadlineInPast { .. } => "DeadlineInPast",
            SiteError::InvalidTransition { .. } => "InvalidTransition",
            SiteError::WrongActor { .. } => "WrongActor",
            SiteError::TargetUserUnknown(_) => "TargetUserUnknown",
            SiteError::UnknownUser(_) => "UnknownUser",
            SiteError::UnknownSite(_) => "UnknownSite",
            SiteError::UnknownTask(_) => "UnknownTask",
            SiteError::UnknownIssue(_) => "UnknownIssue",
            SiteError::DuplicateId(_) => "DuplicateId",
            SiteError::Log(_) => "LogError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskState {
    Requested,
    UnderReview,
    Approved,
    Outsourced,
    Completed,
}

impl TaskState {
    pub const ALL: [TaskState; 5] = [
        TaskState::Requested,
        TaskState::UnderReview,
        TaskState::Approved,
        TaskState::Outsourced,
        TaskState::Completed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskState::Requested => "requested",
            TaskState::UnderReview => "under_review",
            TaskState::Approved => "approved",
            TaskState::Outsourced => "outsourced",
            TaskState::Completed => "completed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    /// Requested -> UnderReview -> Approved -> (Outsourced ->) Completed.
    pub fn can_advance_to(self, next: TaskState) -> bool {
        use TaskState::*;
        matches!(
            (self, next),
            (Requested, UnderReview)
                | (UnderReview, Approved)
                | (Approved, Outsourced)
                | (Approved, Completed)
                | (Outsourced, Completed)
        )
    }
}

impl fmt::Display for TaskState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IssueState {
    Created,
    Assigned,
    Resolved,
    Verified,
    Closed,
}

impl IssueState {
    pub const ALL: [IssueState; 5] = [
        IssueState::Created,
        IssueState::Assigned,
        IssueState::Resolved,
        IssueState::Verified,
        IssueState::Closed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IssueState::Created => "created",
            IssueState::Assigned => "assigned",
            IssueState::Resolved => "resolved",
            IssueState::Verified => "verified",
            IssueState::Closed => "closed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn next(self) -> Option<IssueState> {
        use IssueState::*;
        match self {
            Created => Some(Assigned),
            Assigned => Some(Resolved),
            Resolved => Some(Verified),
            Verified => Some(Closed),
            Closed => None,
        }
    }
}

impl fmt::Display for IssueState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests;
