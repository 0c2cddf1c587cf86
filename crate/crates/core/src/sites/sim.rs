use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::log::{EventLog, Snapshot};
use super::{IssueState, SiteError, TaskState};
use crate::groups::Backend;
use crate::policy::{Attribute, PolicyNode};
use crate::scheme::{
    decrypt, decrypt_reencrypted, dem_open, dem_seal, encrypt, issue_crossdomain_key, kdf, keygen,
    reencrypt_corrected, setup, Ciphertext, CrossDomainUserKey, MasterSecretKey, PublicKey,
    ReEncryptedCiphertext, ReencMode, SchemeError, SymmetricKey, TargetKey, UserSecretKey,
};

/// Actor recorded for proxy-side steps.
const PROXY: &str = "proxy";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteRole {
    GeneralContractor,
    Subcontractor,
}

impl SiteRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SiteRole::GeneralContractor => "general-contractor",
            SiteRole::Subcontractor => "subcontractor",
        }
    }
}

/// A registered user: a same-domain key plus a cross-domain credential
/// under the user's own `beta'`.
#[derive(Debug, Clone)]
pub struct SiteUser<B: Backend> {
    pub id: String,
    pub attrs: BTreeSet<Attribute>,
    pub usk: UserSecretKey<B>,
    pub cdk: CrossDomainUserKey<B>,
    pub target: TargetKey<B>,
}

#[derive(Debug, Clone)]
pub struct Site<B: Backend> {
    pub id: String,
    pub role: SiteRole,
    pub pk: PublicKey<B>,
    msk: MasterSecretKey<B>,
    pub users: BTreeMap<String, SiteUser<B>>,
}

impl<B: Backend> Site<B> {
    fn user(&self, id: &str) -> Result<&SiteUser<B>, SiteError> {
        self.users
            .get(id)
            .ok_or_else(|| SiteError::UnknownUser(id.into()))
    }

    /// Encodings of every secret this site holds, labelled.
    pub fn secret_material(&self) -> Vec<(String, Vec<u8>)> {
        let b = &self.pk.backend;
        let mut out = vec![
            (format!("{}/msk.m", self.id), b.encode_scalar(&self.msk.m)),
            (format!("{}/msk.n", self.id), b.encode_scalar(&self.msk.n)),
        ];
        for u in self.users.values() {
            let label = |f: &str| format!("{}/{}/{f}", self.id, u.id);
            out.push((label("sk1"), b.encode_g2(&u.usk.sk1)));
            if let Some(p) = &u.usk.sk2 {
                out.push((label("sk2.first"), b.encode_g2(&p.first)));
                out.push((label("sk2.second"), b.encode_g2(&p.second)));
            }
            for (a, p) in &u.usk.sk3 {
                out.push((label(&format!("sk3.{a}.first")), b.encode_g2(&p.first)));
                out.push((label(&format!("sk3.{a}.second")), b.encode_g2(&p.second)));
            }
            out.push((label("cdk.k0"), b.encode_g2(&u.cdk.k0)));
            out.push((label("cdk.db"), b.encode_g1(&u.cdk.db)));
            for (a, d) in &u.cdk.d {
                out.push((label(&format!("cdk.d.{a}")), b.encode_g1(d)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskPayload<B: Backend> {
    Domain(Ciphertext<B>),
    Reencrypted(ReEncryptedCiphertext<B>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskTransition {
    pub from: Option<TaskState>,
    pub to: TaskState,
    pub actor: String,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskRecord<B: Backend> {
    pub id: String,
    pub site: String,
    pub initiator: String,
    pub title: String,
    pub deadline: u64,
    pub policy: PolicyNode,
    /// Encrypts the DEM key for `sealed`.
    pub payload_ct: TaskPayload<B>,
    pub sealed: Vec<u8>,
    pub state: TaskState,
    pub history: Vec<TaskTransition>,
}

impl<B: Backend> TaskRecord<B> {
    fn advance(&mut self, to: TaskState, actor: &str, timestamp: u64) -> Result<(), SiteError> {
        if !self.state.can_advance_to(to) {
            return Err(SiteError::InvalidTransition {
                from: self.state.to_string(),
                to: to.to_string(),
            });
        }
        self.history.push(TaskTransition {
            from: Some(self.state),
            to,
            actor: actor.into(),
            timestamp,
        });
        self.state = to;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelegationRecord {
    pub task_id: String,
    pub from_site: String,
    pub to_site: String,
    pub target_user: String,
    pub mode: ReencMode,
    pub target_policy: PolicyNode,
    pub timestamp: u64,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssueTransition {
    pub to: IssueState,
    pub actor: String,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssueRecord {
    pub id: String,
    pub task_id: String,
    pub initiator: String,
    pub resolver: Option<String>,
    pub state: IssueState,
    /// False until the issue is assigned.
    pub visible: bool,
    pub history: Vec<IssueTransition>,
}

impl IssueRecord {
    pub fn open(id: &str, task_id: &str, initiator: &str, timestamp: u64) -> Self {
        IssueRecord {
            id: id.into(),
            task_id: task_id.into(),
            initiator: initiator.into(),
            resolver: None,
            state: IssueState::Created,
            visible: false,
            history: vec![IssueTransition {
                to: IssueState::Created,
                actor: initiator.into(),
                timestamp,
            }],
        }
    }

    fn step(
        &mut self,
        to: IssueState,
        actor: &str,
        expected: &str,
        timestamp: u64,
    ) -> Result<(), SiteError> {
        if self.state.next() != Some(to) {
            return Err(SiteError::InvalidTransition {
                from: self.state.to_string(),
                to: to.to_string(),
            });
        }
        if actor != expected {
            return Err(SiteError::WrongActor {
                expected: expected.into(),
                found: actor.into(),
            });
        }
        self.history.push(IssueTransition {
            to,
            actor: actor.into(),
            timestamp,
        });
        self.state = to;
        Ok(())
    }

    /// The initiator names the resolver.
    pub fn assign(&mut self, actor: &str, resolver: &str, timestamp: u64) -> Result<(), SiteError> {
        let initiator = self.initiator.clone();
        self.step(IssueState::Assigned, actor, &initiator, timestamp)?;
        self.resolver = Some(resolver.into());
        self.visible = true;
        Ok(())
    }

    pub fn resolve(&mut self, actor: &str, timestamp: u64) -> Result<(), SiteError> {
        let resolver = self.resolver.clone().unwrap_or_default();
        self.step(IssueState::Resolved, actor, &resolver, timestamp)
    }

    pub fn verify(&mut self, actor: &str, timestamp: u64) -> Result<(), SiteError> {
        let initiator = self.initiator.clone();
        self.step(IssueState::Verified, actor, &initiator, timestamp)
    }

    pub fn close(&mut self, actor: &str, timestamp: u64) -> Result<(), SiteError> {
        let initiator = self.initiator.clone();
        self.step(IssueState::Closed, actor, &initiator, timestamp)
    }

    pub fn is_visible_to(&self, user: &str) -> bool {
        self.visible || user == self.initiator
    }
}

/// Checks a task against the delegation ledger. Each problem is one entry.
pub fn track_task<B: Backend>(
    task: &TaskRecord<B>,
    delegations: &[DelegationRecord],
) -> Vec<String> {
    let mut violations = Vec::new();
    let mut prev: Option<TaskState> = None;
    for t in &task.history {
        let legal = t.from == prev
            && match prev {
                None => t.to == TaskState::Requested,
                Some(p) => p.can_advance_to(t.to),
            };
        if !legal {
            let from = t.from.map_or("none", TaskState::as_str);
            violations.push(format!("illegal transition: {from} -> {}", t.to));
        }
        prev = Some(t.to);
    }
    if prev != Some(task.state) {
        violations.push(format!("state {} does not match history", task.state));
    }

    let mine: Vec<_> = delegations
        .iter()
        .filter(|d| d.task_id == task.id)
        .collect();
    let active = mine.iter().filter(|d| d.active).count();
    if active > 1 {
        violations.push("multiple active delegations".into());
    }
    if task.state == TaskState::Outsourced && active == 0 {
        violations.push("outsourced task has no active delegation".into());
    }
    match &task.payload_ct {
        TaskPayload::Reencrypted(rct) => {
            if mine.is_empty() {
                violations.push("re-encrypted payload without a delegation".into());
            } else if mine.iter().any(|d| d.mode != rct.mode) {
                violations.push("ciphertext mode does not match delegation".into());
            }
        }
        TaskPayload::Domain(_) if !mine.is_empty() => {
            violations.push("delegated task still carries a domain ciphertext".into());
        }
        TaskPayload::Domain(_) => {}
    }
    violations
}

pub struct Simulation<B: Backend> {
    backend: B,
    sites: BTreeMap<String, Site<B>>,
    tasks: BTreeMap<String, TaskRecord<B>>,
    issues: BTreeMap<String, IssueRecord>,
    delegations: Vec<DelegationRecord>,
    log: EventLog,
    rng: ChaCha20Rng,
}

fn lookup<'a, T>(
    map: &'a BTreeMap<String, T>,
    id: &str,
    err: fn(String) -> SiteError,
) -> Result<&'a T, SiteError> {
    map.get(id).ok_or_else(|| err(id.into()))
}

impl<B: Backend> Simulation<B> {
    pub fn new(backend: B, seed: u64) -> Self {
        Simulation {
            backend,
            sites: BTreeMap::new(),
            tasks: BTreeMap::new(),
            issues: BTreeMap::new(),
            delegations: Vec::new(),
            log: EventLog::default(),
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn now(&self) -> u64 {
        self.log.now()
    }

    pub fn site(&self, id: &str) -> Result<&Site<B>, SiteError> {
        lookup(&self.sites, id, SiteError::UnknownSite)
    }

    pub fn task(&self, id: &str) -> Result<&TaskRecord<B>, SiteError> {
        lookup(&self.tasks, id, SiteError::UnknownTask)
    }

    pub fn issue(&self, id: &str) -> Result<&IssueRecord, SiteError> {
        lookup(&self.issues, id, SiteError::UnknownIssue)
    }

    pub fn delegations(&self) -> &[DelegationRecord] {
        &self.delegations
    }

    pub fn secret_material(&self) -> Vec<(String, Vec<u8>)> {
        self.sites
            .values()
            .flat_map(Site::secret_material)
            .collect()
    }

    pub fn add_site(
        &mut self,
        id: &str,
        role: SiteRole,
        universe: &[Attribute],
    ) -> Result<(), SiteError> {
        if self.sites.contains_key(id) {
            return Err(SiteError::DuplicateId(id.into()));
        }
        let (msk, pk) = setup(self.backend.clone(), universe, &mut self.rng)?;
        let names: Vec<&str> = universe.iter().map(Attribute::as_str).collect();
        self.log.append(
            id,
            id,
            "site.created",
            role.as_str(),
            names.join(",").as_bytes(),
        );
        self.sites.insert(
            id.into(),
            Site {
                id: id.into(),
                role,
                pk,
                msk,
                users: BTreeMap::new(),
            },
        );
        Ok(())
    }

    pub fn register_user(
        &mut self,
        site: &str,
        user: &str,
        attrs: &BTreeSet<Attribute>,
    ) -> Result<(), SiteError> {
        let s = self
            .sites
            .get_mut(site)
            .ok_or_else(|| SiteError::UnknownSite(site.into()))?;
        if s.users.contains_key(user) {
            return Err(SiteError::DuplicateId(user.into()));
        }
        let usk = keygen(&s.msk, &s.pk, attrs, &mut self.rng)?;
        let beta = self.backend.random_scalar(&mut self.rng);
        let cdk = issue_crossdomain_key(&self.backend, &beta, attrs)?;
        let target = TargetKey::from_secret(&self.backend, &beta);
        s.users.insert(
            user.into(),
            SiteUser {
                id: user.into(),
                attrs: attrs.clone(),
                usk,
                cdk,
                target,
            },
        );
        let names: Vec<&str> = attrs.iter().map(Attribute::as_str).collect();
        self.log.append(
            site,
            site,
            "user.registered",
            user,
            names.join(",").as_bytes(),
        );
        Ok(())
    }

    pub fn create_request(
        &mut self,
        site: &str,
        initiator: &str,
        title: &str,
        deadline: u64,
        payload: &[u8],
        policy: &PolicyNode,
    ) -> Result<String, SiteError> {
        let s = lookup(&self.sites, site, SiteError::UnknownSite)?;
        s.user(initiator)?;
        let now = self.log.now();
        if deadline <= now {
            return Err(SiteError::DeadlineInPast { deadline, now });
        }
        let key = SymmetricKey::random(&self.backend, &mut self.rng);
        let ct = encrypt(&s.pk, policy, &key, &mut self.rng)?;
        let sealed = dem_seal(&kdf(&self.backend, &key), payload);
        let id = format!("task-{}", self.tasks.len() + 1);
        self.log
            .append(site, initiator, "task.requested", &id, &sealed);
        self.tasks.insert(
            id.clone(),
            TaskRecord {
                id: id.clone(),
                site: site.into(),
                initiator: initiator.into(),
                title: title.into(),
                deadline,
                policy: policy.clone(),
                payload_ct: TaskPayload::Domain(ct),
                sealed,
                state: TaskState::Requested,
                history: vec![TaskTransition {
                    from: None,
                    to: TaskState::Requested,
                    actor: initiator.into(),
                    timestamp: now,
                }],
            },
        );
        Ok(id)
    }

    fn advance(
        &mut self,
        task_id: &str,
        to: TaskState,
        site: &str,
        actor: &str,
    ) -> Result<(), SiteError> {
        let now = self.log.now();
        let task = self
            .tasks
            .get_mut(task_id)
            .ok_or_else(|| SiteError::UnknownTask(task_id.into()))?;
        task.advance(to, actor, now)?;
        self.log
            .append(site, actor, &format!("task.{to}"), task_id, &task.sealed);
        Ok(())
    }

    /// The approver must be able to open the payload. Moves a Requested task
    /// through UnderReview to Approved.
    pub fn review_and_approve(
        &mut self,
        site: &str,
        approver: &str,
        task_id: &str,
    ) -> Result<(), SiteError> {
        let task = self.task(task_id)?;
        if task.site != site {
            return Err(SiteError::UnknownTask(task_id.into()));
        }
        let state = task.state;
        if !matches!(state, TaskState::Requested | TaskState::UnderReview) {
            return Err(SiteError::InvalidTransition {
                from: state.to_string(),
                to: TaskState::Approved.to_string(),
            });
        }
        self.open_domain(site, approver, task)?;
        if state == TaskState::Requested {
            self.advance(task_id, TaskState::UnderReview, site, approver)?;
        }
        self.advance(task_id, TaskState::Approved, site, approver)
    }

    fn open_domain(
        &self,
        site: &str,
        user: &str,
        task: &TaskRecord<B>,
    ) -> Result<Vec<u8>, SiteError> {
        let s = self.site(site)?;
        let u = s.user(user)?;
        let TaskPayload::Domain(ct) = &task.payload_ct else {
            return Err(SiteError::UnknownTask(task.id.clone()));
        };
        let key = decrypt(&s.pk, &u.usk, ct)?;
        Ok(dem_open(&kdf(&self.backend, &key), &task.sealed)?)
    }

    /// Re-encrypts the task key from `from` toward `target_user` at `to`
    /// under `target_policy`.
    pub fn outsource_task(
        &mut self,
        from: &str,
        to: &str,
        task_id: &str,
        target_policy: &PolicyNode,
        target_user: &str,
    ) -> Result<DelegationRecord, SiteError> {
        let task = lookup(&self.tasks, task_id, SiteError::UnknownTask)?;
        if task.site != from {
            return Err(SiteError::UnknownTask(task_id.into()));
        }
        if task.state != TaskState::Approved {
            return Err(SiteError::InvalidTransition {
                from: task.state.to_string(),
                to: TaskState::Outsourced.to_string(),
            });
        }
        let TaskPayload::Domain(ct) = &task.payload_ct else {
            return Err(SiteError::InvalidTransition {
                from: task.state.to_string(),
                to: TaskState::Outsourced.to_string(),
            });
        };
        let src = lookup(&self.sites, from, SiteError::UnknownSite)?;
        let dst = lookup(&self.sites, to, SiteError::UnknownSite)?;
        let user = dst
            .users
            .get(target_user)
            .ok_or_else(|| SiteError::TargetUserUnknown(target_user.into()))?;
        for a in target_policy.attributes() {
            if !dst.pk.w.contains_key(&a) {
                return Err(SchemeError::UnknownAttribute(a.to_string()).into());
            }
        }
        let rct = reencrypt_corrected(
            &src.msk,
            &src.pk,
            &user.target,
            ct,
            target_policy,
            &mut self.rng,
        )?;
        let record = DelegationRecord {
            task_id: task_id.into(),
            from_site: from.into(),
            to_site: to.into(),
            target_user: target_user.into(),
            mode: rct.mode,
            target_policy: target_policy.clone(),
            timestamp: self.log.now(),
            active: true,
        };
        self.tasks.get_mut(task_id).expect("task exists").payload_ct =
            TaskPayload::Reencrypted(rct);
        self.advance(task_id, TaskState::Outsourced, from, PROXY)?;
        let digest = format!("{from}>{to}:{target_user}:{target_policy}");
        self.log
            .append(to, PROXY, "delegation.created", task_id, digest.as_bytes());
        self.delegations.push(record.clone());
        Ok(record)
    }

    fn active_delegation(&self, task_id: &str) -> Option<&DelegationRecord> {
        self.delegations
            .iter()
            .find(|d| d.task_id == task_id && d.active)
    }

    /// Opens the payload at `site`: the owning site uses the domain key, the
    /// delegate site the user's cross-domain credential.
    pub fn open_payload(
        &mut self,
        site: &str,
        user: &str,
        task_id: &str,
    ) -> Result<Vec<u8>, SiteError> {
        let task = self.task(task_id)?;
        let plain = match &task.payload_ct {
            TaskPayload::Domain(_) if task.site == site => self.open_domain(site, user, task)?,
            TaskPayload::Reencrypted(rct) => {
                let delegated = self.active_delegation(task_id).map(|d| d.to_site.as_str());
                if delegated != Some(site) {
                    return Err(SiteError::UnknownTask(task_id.into()));
                }
                let u = self.site(site)?.user(user)?;
                let key = decrypt_reencrypted(&u.cdk, rct)?;
                dem_open(&kdf(&self.backend, &key), &task.sealed)?
            }
            TaskPayload::Domain(_) => return Err(SiteError::UnknownTask(task_id.into())),
        };
        let sealed = task.sealed.clone();
        self.log.append(site, user, "task.opened", task_id, &sealed);
        Ok(plain)
    }

    /// Completed by a user of whichever site currently holds the task.
    pub fn complete_task(
        &mut self,
        site: &str,
        actor: &str,
        task_id: &str,
    ) -> Result<(), SiteError> {
        let task = self.task(task_id)?;
        let holder = match self.active_delegation(task_id) {
            Some(d) => d.to_site.clone(),
            None => task.site.clone(),
        };
        if holder != site {
            return Err(SiteError::WrongActor {
                expected: holder,
                found: site.into(),
            });
        }
        self.site(site)?.user(actor)?;
        self.advance(task_id, TaskState::Completed, site, actor)?;
        for d in self.delegations.iter_mut().filter(|d| d.task_id == task_id) {
            d.active = false;
        }
        Ok(())
    }

    pub fn open_issue(&mut self, task_id: &str, initiator: &str) -> Result<String, SiteError> {
        let task = self.task(task_id)?;
        if task.initiator != initiator {
            return Err(SiteError::WrongActor {
                expected: task.initiator.clone(),
                found: initiator.into(),
            });
        }
        let site = task.site.clone();
        let id = format!("issue-{}", self.issues.len() + 1);
        let issue = IssueRecord::open(&id, task_id, initiator, self.log.now());
        self.log_issue(&site, initiator, &issue);
        self.issues.insert(id.clone(), issue);
        Ok(id)
    }

    fn log_issue(&mut self, site: &str, actor: &str, issue: &IssueRecord) {
        let digest = format!("{}:{}:{}", issue.id, issue.task_id, issue.state);
        self.log.append(
            site,
            actor,
            &format!("issue.{}", issue.state),
            &issue.id,
            digest.as_bytes(),
        );
    }

    fn user_site(&self, user: &str) -> Result<String, SiteError> {
        self.sites
            .values()
            .find(|s| s.users.contains_key(user))
            .map(|s| s.id.clone())
            .ok_or_else(|| SiteError::UnknownUser(user.into()))
    }

    fn issue_step(
        &mut self,
        issue_id: &str,
        actor: &str,
        f: impl FnOnce(&mut IssueRecord, u64) -> Result<(), SiteError>,
    ) -> Result<(), SiteError> {
        let site = self.user_site(actor)?;
        let now = self.log.now();
        let issue = self
            .issues
            .get_mut(issue_id)
            .ok_or_else(|| SiteError::UnknownIssue(issue_id.into()))?;
        f(issue, now)?;
        let snapshot = issue.clone();
        self.log_issue(&site, actor, &snapshot);
        Ok(())
    }

    pub fn assign_issue(
        &mut self,
        issue_id: &str,
        actor: &str,
        resolver: &str,
    ) -> Result<(), SiteError> {
        self.user_site(resolver)?;
        self.issue_step(issue_id, actor, |i, t| i.assign(actor, resolver, t))
    }

    pub fn resolve_issue(&mut self, issue_id: &str, actor: &str) -> Result<(), SiteError> {
        self.issue_step(issue_id, actor, |i, t| i.resolve(actor, t))
    }

    /// Verified and Closed, as two history entries and two events.
    pub fn verify_and_close(&mut self, issue_id: &str, actor: &str) -> Result<(), SiteError> {
        self.issue_step(issue_id, actor, |i, t| i.verify(actor, t))?;
        self.issue_step(issue_id, actor, |i, t| i.close(actor, t))
    }

    pub fn track(&self, task_id: &str) -> Result<Vec<String>, SiteError> {
        Ok(track_task(self.task(task_id)?, &self.delegations))
    }

    pub fn snapshot(&self) -> Snapshot {
        let mut active = BTreeMap::new();
        for d in self.delegations.iter().filter(|d| d.active) {
            *active.entry(d.task_id.clone()).or_default() += 1;
        }
        Snapshot {
            tasks: self
                .tasks
                .iter()
                .map(|(k, t)| (k.clone(), t.state))
                .collect(),
            issues: self
                .issues
                .iter()
                .map(|(k, i)| (k.clone(), i.state))
                .collect(),
            active_delegations: active,
        }
    }
}
