use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::groups::DebugBackend;
use crate::policy::{parse_attribute_set, parse_policy, Attribute};

fn attrs(s: &str) -> BTreeSet<Attribute> {
    parse_attribute_set(s).unwrap()
}

fn universe(s: &str) -> Vec<Attribute> {
    attrs(s).into_iter().collect()
}

const PAYLOAD: &[u8] = b"site drawings rev C";

/// Two sites, one approved task at the contractor.
fn approved() -> (Simulation<DebugBackend>, String) {
    let mut sim = Simulation::new(DebugBackend::default(), 1);
    sim.add_site(
        "gc",
        SiteRole::GeneralContractor,
        &universe("Manager,Engineer"),
    )
    .unwrap();
    sim.add_site(
        "sub",
        SiteRole::Subcontractor,
        &universe("Inspector,Welder"),
    )
    .unwrap();
    sim.register_user("gc", "ann", &attrs("Engineer")).unwrap();
    sim.register_user("gc", "ben", &attrs("Manager,Engineer"))
        .unwrap();
    sim.register_user("sub", "cal", &attrs("Inspector"))
        .unwrap();
    sim.register_user("sub", "dee", &attrs("Welder")).unwrap();
    let deadline = sim.now() + 3600;
    let id = sim
        .create_request(
            "gc",
            "ann",
            "drawings",
            deadline,
            PAYLOAD,
            &parse_policy("(Manager AND Engineer)").unwrap(),
        )
        .unwrap();
    assert_eq!(sim.task(&id).unwrap().history.len(), 1);
    sim.review_and_approve("gc", "ben", &id).unwrap();
    (sim, id)
}

#[test]
fn create_request_checks() {
    let (mut sim, id) = approved();
    let policy = parse_policy("Manager").unwrap();
    let now = sim.now();
    let err = sim
        .create_request("gc", "ann", "late", now, PAYLOAD, &policy)
        .unwrap_err();
    assert_eq!(err.name(), "DeadlineInPast");
    let err = sim
        .create_request(
            "gc",
            "ann",
            "x",
            now + 10,
            PAYLOAD,
            &parse_policy("Welder").unwrap(),
        )
        .unwrap_err();
    assert_eq!(err.name(), "UnknownAttribute");
    let task = sim.task(&id).unwrap();
    assert_eq!(task.state, TaskState::Approved);
    let states: Vec<_> = task.history.iter().map(|t| t.to).collect();
    assert_eq!(
        states,
        [
            TaskState::Requested,
            TaskState::UnderReview,
            TaskState::Approved
        ]
    );
    // the sealed payload does not contain the plaintext
    assert!(!task.sealed.windows(PAYLOAD.len()).any(|w| w == PAYLOAD));
}

#[test]
fn approval_rules() {
    let (mut sim, id) = approved();
    assert_eq!(
        sim.review_and_approve("gc", "ben", &id).unwrap_err().name(),
        "InvalidTransition"
    );
    let deadline = sim.now() + 100;
    let t2 = sim
        .create_request(
            "gc",
            "ann",
            "y",
            deadline,
            PAYLOAD,
            &parse_policy("(Manager AND Engineer)").unwrap(),
        )
        .unwrap();
    assert_eq!(
        sim.review_and_approve("gc", "ann", &t2).unwrap_err().name(),
        "PolicyNotSatisfied"
    );
    assert_eq!(sim.task(&t2).unwrap().state, TaskState::Requested);
    assert_eq!(sim.open_payload("gc", "ben", &t2).unwrap(), PAYLOAD);
}

#[test]
fn outsourcing_delivers_payload() {
    let (mut sim, id) = approved();
    let target = parse_policy("Inspector").unwrap();
    let d = sim
        .outsource_task("gc", "sub", &id, &target, "cal")
        .unwrap();
    assert_eq!(d.mode, crate::scheme::ReencMode::Corrected);
    assert_eq!(sim.task(&id).unwrap().state, TaskState::Outsourced);
    assert_eq!(sim.open_payload("sub", "cal", &id).unwrap(), PAYLOAD);
    // the domain user can no longer open the re-encrypted task at the wrong site
    assert_eq!(
        sim.open_payload("gc", "ben", &id).unwrap_err().name(),
        "UnknownTask"
    );
    // another subcontractor user has a different beta' and lacks the attribute
    assert_eq!(
        sim.open_payload("sub", "dee", &id).unwrap_err().name(),
        "PolicyNotSatisfied"
    );
    assert!(sim.track(&id).unwrap().is_empty());
    sim.complete_task("sub", "cal", &id).unwrap();
    assert!(sim.track(&id).unwrap().is_empty());
    assert!(sim.delegations().iter().all(|d| !d.active));
}

#[test]
fn outsourcing_errors() {
    let (mut sim, id) = approved();
    let target = parse_policy("Inspector").unwrap();
    assert_eq!(
        sim.outsource_task("gc", "sub", &id, &target, "zed")
            .unwrap_err()
            .name(),
        "TargetUserUnknown"
    );
    assert_eq!(
        sim.outsource_task("gc", "sub", &id, &parse_policy("Manager").unwrap(), "cal")
            .unwrap_err()
            .name(),
        "UnknownAttribute"
    );
    let deadline = sim.now() + 100;
    let fresh = sim
        .create_request(
            "gc",
            "ann",
            "z",
            deadline,
            PAYLOAD,
            &parse_policy("Engineer").unwrap(),
        )
        .unwrap();
    assert_eq!(
        sim.outsource_task("gc", "sub", &fresh, &target, "cal")
            .unwrap_err()
            .name(),
        "InvalidTransition"
    );
    // a user lacking the target attributes cannot open
    sim.outsource_task("gc", "sub", &id, &parse_policy("Welder").unwrap(), "cal")
        .unwrap();
    assert_eq!(
        sim.open_payload("sub", "cal", &id).unwrap_err().name(),
        "PolicyNotSatisfied"
    );
    assert_eq!(
        sim.outsource_task("gc", "sub", &id, &target, "cal")
            .unwrap_err()
            .name(),
        "InvalidTransition"
    );
}

#[test]
fn wrong_recipient_fails_integrity() {
    let (mut sim, id) = approved();
    // dee holds the attribute but the ciphertext was made for cal's beta'
    sim.outsource_task("gc", "sub", &id, &parse_policy("Welder").unwrap(), "cal")
        .unwrap();
    assert_eq!(
        sim.open_payload("sub", "dee", &id).unwrap_err().name(),
        "IntegrityError"
    );
}

#[test]
fn track_task_violations() {
    let (mut sim, id) = approved();
    sim.outsource_task("gc", "sub", &id, &parse_policy("Inspector").unwrap(), "cal")
        .unwrap();
    let task = sim.task(&id).unwrap().clone();
    let mut ledger = sim.delegations().to_vec();
    assert!(track_task(&task, &ledger).is_empty());

    ledger.push(ledger[0].clone());
    assert_eq!(track_task(&task, &ledger), ["multiple active delegations"]);

    let mut skipped = task.clone();
    skipped.history.remove(1);
    skipped.history[1].from = Some(TaskState::Requested);
    assert_eq!(
        track_task(&skipped, sim.delegations()),
        ["illegal transition: requested -> approved"]
    );

    let mut wrong_mode = sim.delegations().to_vec();
    wrong_mode[0].mode = crate::scheme::ReencMode::Paper;
    assert_eq!(
        track_task(&task, &wrong_mode),
        ["ciphertext mode does not match delegation"]
    );
    assert_eq!(
        track_task(&task, &[]),
        [
            "outsourced task has no active delegation",
            "re-encrypted payload without a delegation"
        ]
    );
}

#[test]
fn issue_lifecycle() {
    let (mut sim, id) = approved();
    assert_eq!(sim.open_issue(&id, "ben").unwrap_err().name(), "WrongActor");
    let issue = sim.open_issue(&id, "ann").unwrap();
    assert!(!sim.issue(&issue).unwrap().is_visible_to("ben"));
    assert!(sim.issue(&issue).unwrap().is_visible_to("ann"));
    assert_eq!(
        sim.resolve_issue(&issue, "ben").unwrap_err().name(),
        "InvalidTransition"
    );
    assert_eq!(
        sim.assign_issue(&issue, "ben", "cal").unwrap_err().name(),
        "WrongActor"
    );
    assert_eq!(
        sim.assign_issue(&issue, "ann", "nobody")
            .unwrap_err()
            .name(),
        "UnknownUser"
    );
    sim.assign_issue(&issue, "ann", "cal").unwrap();
    assert!(sim.issue(&issue).unwrap().is_visible_to("ben"));
    assert_eq!(
        sim.resolve_issue(&issue, "ben").unwrap_err().name(),
        "WrongActor"
    );
    sim.resolve_issue(&issue, "cal").unwrap();
    assert_eq!(
        sim.verify_and_close(&issue, "cal").unwrap_err().name(),
        "WrongActor"
    );
    sim.verify_and_close(&issue, "ann").unwrap();
    let rec = sim.issue(&issue).unwrap();
    assert_eq!(rec.state, IssueState::Closed);
    assert_eq!(rec.history.len(), 5);
    let actors: Vec<_> = rec.history.iter().map(|t| t.actor.as_str()).collect();
    assert_eq!(actors, ["ann", "ann", "cal", "ann", "ann"]);
}

#[test]
fn demo_runs_clean_and_replays() {
    let out = run_demo(DebugBackend::default(), 9).unwrap();
    assert_eq!(out.opened, DEMO_PAYLOAD);
    assert!(out.violations.is_empty(), "{:?}", out.violations);
    assert_eq!(
        out.sim.task(&out.task_id).unwrap().state,
        TaskState::Completed
    );
    assert_eq!(
        out.sim.issue(&out.issue_id).unwrap().state,
        IssueState::Closed
    );

    let text = out.sim.log().to_jsonl();
    let parsed = EventLog::parse_jsonl(&text).unwrap();
    assert_eq!(parsed, out.sim.log().events());
    assert_eq!(replay(&parsed).unwrap(), out.sim.snapshot());

    assert!(scan_for_leaks(text.as_bytes(), &out.sim.secret_material()).is_empty());
    let payload = ("payload".to_string(), DEMO_PAYLOAD.to_vec());
    assert!(scan_for_leaks(text.as_bytes(), &[payload]).is_empty());

    // deterministic given the seed
    assert_eq!(
        run_demo(DebugBackend::default(), 9)
            .unwrap()
            .sim
            .log()
            .to_jsonl(),
        text
    );
}

#[test]
fn event_layout() {
    let out = run_demo(DebugBackend::default(), 9).unwrap();
    let first = out.sim.log().to_jsonl().lines().next().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    assert_eq!(
        keys,
        [
            "actor",
            "event_type",
            "object_id",
            "payload_digest",
            "seq",
            "site",
            "timestamp"
        ]
    );
    assert_eq!(v["timestamp"], CLOCK_START);
    let ts: Vec<u64> = out.sim.log().events().iter().map(|e| e.timestamp).collect();
    assert!(ts.windows(2).all(|w| w[1] == w[0] + 60));
}

#[test]
fn scanner_finds_leaks() {
    let secret = vec![0xde, 0xad, 0xbe, 0xef];
    let hits = scan_for_leaks(b"{\"x\":\"00deadbeef\"}", &[("k".into(), secret.clone())]);
    assert_eq!(hits, ["k"]);
    assert!(scan_for_leaks(b"{\"x\":\"00\"}", &[("k".into(), secret)]).is_empty());
    assert_eq!(
        scan_for_leaks(b"say hello", &[("p".into(), b"hello".to_vec())]),
        ["p"]
    );
}

#[test]
fn replay_rejects_tampering() {
    let out = run_demo(DebugBackend::default(), 9).unwrap();
    let mut events = out.sim.log().events().to_vec();
    let approved = events
        .iter()
        .position(|e| e.event_type == "task.approved")
        .unwrap();
    events[approved].event_type = "task.completed".into();
    assert_eq!(replay(&events).unwrap_err().name(), "InvalidTransition");
    let mut reordered = out.sim.log().events().to_vec();
    reordered.swap(0, 1);
    assert_eq!(replay(&reordered).unwrap_err().name(), "LogError");
}

/// Legal task histories are exactly the prefixes of these two paths.
const TASK_PATHS: [&[TaskState]; 2] = {
    use TaskState::*;
    [
        &[Requested, UnderReview, Approved, Completed],
        &[Requested, UnderReview, Approved, Outsourced, Completed],
    ]
};

fn history_of(states: &[TaskState]) -> Vec<TaskTransition> {
    let mut prev = None;
    states
        .iter()
        .map(|&to| {
            let t = TaskTransition {
                from: prev,
                to,
                actor: "x".into(),
                timestamp: 0,
            };
            prev = Some(to);
            t
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
enum IssueOp {
    Assign(usize, usize),
    Resolve(usize),
    Verify(usize),
    Close(usize),
}

const ACTORS: [&str; 3] = ["init", "res", "other"];

fn issue_op() -> impl Strategy<Value = IssueOp> {
    prop_oneof![
        (0..3usize, 0..3usize).prop_map(|(a, r)| IssueOp::Assign(a, r)),
        (0..3usize).prop_map(IssueOp::Resolve),
        (0..3usize).prop_map(IssueOp::Verify),
        (0..3usize).prop_map(IssueOp::Close),
    ]
}

proptest! {
    #[test]
    fn task_histories_legal_iff_path_prefix(
        idx in proptest::collection::vec(0..5usize, 1..7)
    ) {
        let states: Vec<TaskState> = idx.iter().map(|&i| TaskState::ALL[i]).collect();
        let oracle = TASK_PATHS.iter().any(|p| p.starts_with(&states));
        let (sim, id) = approved();
        let mut task = sim.task(&id).unwrap().clone();
        task.history = history_of(&states);
        task.state = *states.last().unwrap();
        let accepted = track_task(&task, &[])
            .iter()
            .all(|v| !v.starts_with("illegal transition") && !v.contains("does not match history"));
        prop_assert_eq!(accepted, oracle);
    }

    #[test]
    fn issue_sequences_legal_iff_expected(ops in proptest::collection::vec(issue_op(), 0..7)) {
        let mut issue = IssueRecord::open("i", "t", "init", 0);
        // oracle: expected next op kind and the actor each kind requires
        let mut expect = 0usize;
        let mut resolver: Option<usize> = None;
        for op in ops {
            let (kind, actor, ok_actor) = match op {
                IssueOp::Assign(a, _) => (0, a, a == 0),
                IssueOp::Resolve(a) => (1, a, Some(a) == resolver),
                IssueOp::Verify(a) => (2, a, a == 0),
                IssueOp::Close(a) => (3, a, a == 0),
            };
            let legal = kind == expect && ok_actor;
            let result = match op {
                IssueOp::Assign(a, r) => issue.assign(ACTORS[a], ACTORS[r], 0),
                IssueOp::Resolve(_) => issue.resolve(ACTORS[actor], 0),
                IssueOp::Verify(_) => issue.verify(ACTORS[actor], 0),
                IssueOp::Close(_) => issue.close(ACTORS[actor], 0),
            };
            prop_assert_eq!(result.is_ok(), legal, "{:?}", op);
            if legal {
                if let IssueOp::Assign(_, r) = op {
                    resolver = Some(r);
                }
                expect += 1;
            }
            prop_assert_eq!(issue.visible, expect >= 1);
        }
        prop_assert_eq!(issue.history.len(), expect + 1);
    }
}
