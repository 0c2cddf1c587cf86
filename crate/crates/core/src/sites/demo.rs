use super::{Simulation, SiteError, SiteRole};
use crate::groups::Backend;
use crate::policy::{parse_attribute_set, parse_policy, Attribute};

pub const DEMO_PAYLOAD: &[u8] =
    b"Unit 7 boiler: hydrostatic test at 1.5x rated pressure before handover";

pub struct DemoOutcome<B: Backend> {
    pub sim: Simulation<B>,
    pub task_id: String,
    pub issue_id: String,
    /// What the subcontractor recovered.
    pub opened: Vec<u8>,
    pub violations: Vec<String>,
}

fn universe(s: &str) -> Result<Vec<Attribute>, SiteError> {
    Ok(parse_attribute_set(s)?.into_iter().collect())
}

/// Contractor creates and approves a request, outsources it to a
/// subcontractor user who opens it, one issue runs its full lifecycle and
/// the subcontractor completes the task.
pub fn run_demo<B: Backend>(backend: B, seed: u64) -> Result<DemoOutcome<B>, SiteError> {
    let mut sim = Simulation::new(backend, seed);
    sim.add_site(
        "contractor",
        SiteRole::GeneralContractor,
        &universe("Manager,Engineer,Auditor")?,
    )?;
    sim.add_site(
        "subcontractor",
        SiteRole::Subcontractor,
        &universe("Inspector,Supervisor,Welder")?,
    )?;
    sim.register_user("contractor", "alice", &parse_attribute_set("Engineer")?)?;
    sim.register_user(
        "contractor",
        "bob",
        &parse_attribute_set("Manager,Engineer")?,
    )?;
    sim.register_user(
        "subcontractor",
        "carol",
        &parse_attribute_set("Inspector,Supervisor")?,
    )?;
    sim.register_user("subcontractor", "dave", &parse_attribute_set("Welder")?)?;

    let deadline = sim.now() + 7 * 24 * 3600;
    let task_id = sim.create_request(
        "contractor",
        "alice",
        "Boiler inspection",
        deadline,
        DEMO_PAYLOAD,
        &parse_policy("(Manager AND Engineer)")?,
    )?;
    sim.review_and_approve("contractor", "bob", &task_id)?;
    sim.outsource_task(
        "contractor",
        "subcontractor",
        &task_id,
        &parse_policy("(Inspector AND Supervisor)")?,
        "carol",
    )?;
    let opened = sim.open_payload("subcontractor", "carol", &task_id)?;

    let issue_id = sim.open_issue(&task_id, "alice")?;
    sim.assign_issue(&issue_id, "alice", "carol")?;
    sim.resolve_issue(&issue_id, "carol")?;
    sim.verify_and_close(&issue_id, "alice")?;
    sim.complete_task("subcontractor", "carol", &task_id)?;

    let violations = sim.track(&task_id)?;
    Ok(DemoOutcome {
        sim,
        task_id,
        issue_id,
        opened,
        violations,
    })
}
