//! Deterministic, event-driven, preemptive scheduling engine.
//!
//! Each processor keeps its own ready queue (partitioned scheduling). The
//! engine only wakes up at instants where something can change: releases,
//! completions, a processor failure, and the horizon. At every such instant
//! it settles completions, applies a failure, releases jobs, lets the
//! super scheduler prune and unwind, and finally re-dispatches every
//! processor.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{validate_taskset, Job, JobId, JobState, TaskId, TaskKind, TaskSet, TimePoint, MAX_HORIZON};
use crate::supersched::{self, CatastrophePriority, DiscardPolicy, SchedulerMode, SuperState};

mod analysis;
mod pick;
mod trace;

pub use analysis::{count_partition, demand_in_interval, PartitionCounts};
pub use pick::{edf_pick, rm_pick};
pub use trace::{DiscardReason, Event, EventKind, JobOutcome, JobRecord, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// Plain preemptive EDF; late jobs run to completion.
    Edf,
    /// Preemptive rate monotonic.
    Rm,
    /// EDF with catastrophe mode, preemption stack and infeasible-job discard.
    Super(CatastrophePriority),
}

impl Policy {
    pub const SUPER: Policy = Policy::Super(CatastrophePriority::Deadline);

    pub fn name(self) -> &'static str {
        match self {
            Policy::Edf => "edf",
            Policy::Rm => "rm",
            Policy::Super(CatastrophePriority::Deadline) => "super",
            Policy::Super(CatastrophePriority::ClassDominant) => "super-dominant",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edf" => Ok(Policy::Edf),
            "rm" => Ok(Policy::Rm),
            "super" => Ok(Policy::SUPER),
            "super-dominant" => Ok(Policy::Super(CatastrophePriority::ClassDominant)),
            other => Err(Error::UnknownPolicy(other.to_owned())),
        }
    }
}

/// Single-processor failure with backup routing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailurePlan {
    pub processor: usize,
    pub at: TimePoint,
    /// Backup processor of every task whose primary is `processor`.
    pub backups: BTreeMap<TaskId, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub policy: Policy,
    pub processors: usize,
    pub horizon: TimePoint,
    pub seed: u64,
    /// Processor of each task, in task-set order. Defaults to the task's
    /// `processor` field, else its index modulo the processor count.
    pub pinning: Option<Vec<usize>>,
    pub failure: Option<FailurePlan>,
}

impl SimConfig {
    pub fn new(policy: Policy, processors: usize, horizon: TimePoint, seed: u64) -> Self {
        SimConfig { policy, processors, horizon, seed, pinning: None, failure: None }
    }
}

/// Simulate `ts` under `policy` on `processors` partitioned processors.
pub fn simulate(ts: &TaskSet, policy: Policy, processors: usize, horizon: TimePoint, seed: u64) -> Result<Trace> {
    simulate_with(ts, &SimConfig::new(policy, processors, horizon, seed))
}

pub fn simulate_with(ts: &TaskSet, cfg: &SimConfig) -> Result<Trace> {
    let violations = validate_taskset(ts);
    if !violations.is_empty() {
        return Err(Error::InvalidTaskSet(violations));
    }
    if cfg.horizon == 0 || cfg.horizon > MAX_HORIZON {
        return Err(Error::InvalidArgument(format!("horizon must be in 1..={MAX_HORIZON}")));
    }
    if cfg.processors == 0 {
        return Err(Error::InvalidArgument("at least one processor is required".into()));
    }
    if cfg.policy == Policy::Rm {
        if let Some(t) = ts.tasks.iter().find(|t| t.rate_period().is_none()) {
            return Err(Error::MissingPeriod(t.id));
        }
    }
    let pins = match &cfg.pinning {
        Some(p) if p.len() != ts.len() => {
            return Err(Error::InvalidArgument(format!("pinning lists {} tasks, set has {}", p.len(), ts.len())))
        }
        Some(p) => p.clone(),
        None => ts.tasks.iter().enumerate().map(|(i, t)| t.processor.unwrap_or(i % cfg.processors)).collect(),
    };
    if let Some(&bad) = pins.iter().find(|&&p| p >= cfg.processors) {
        return Err(Error::InvalidArgument(format!("processor {bad} does not exist")));
    }
    if let Some(f) = &cfg.failure {
        if f.processor >= cfg.processors || f.backups.values().any(|&b| b >= cfg.processors || b == f.processor) {
            return Err(Error::InvalidArgument(format!("invalid failure plan for processor {}", f.processor)));
        }
    }
    Ok(Sim::new(ts, cfg, pins).run())
}

struct Release {
    time: TimePoint,
    task: usize,
    instance: u32,
}

/// Release instants of every task before `horizon`, in (time, task order).
fn release_plan(ts: &TaskSet, horizon: TimePoint, seed: u64) -> Vec<Release> {
    let mut out = Vec::new();
    for (idx, t) in ts.tasks.iter().enumerate() {
        let mut push = |time, instance| out.push(Release { time, task: idx, instance });
        match t.kind {
            TaskKind::Periodic => {
                let p = t.period.expect("validated");
                let mut k = 0u32;
                let mut time = t.release;
                while time < horizon {
                    push(time, k);
                    k += 1;
                    time = t.release + u64::from(k) * p;
                }
            }
            TaskKind::Sporadic => {
                let min = t.min_interarrival.expect("validated");
                let stream = seed ^ u64::from(t.id.0).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let mut rng = ChaCha8Rng::seed_from_u64(stream);
                let (mut time, mut k) = (t.release, 0u32);
                while time < horizon {
                    push(time, k);
                    k += 1;
                    time = time.saturating_add(rng.gen_range(min..=2 * min));
                }
            }
            TaskKind::OneShot | TaskKind::Catastrophe => {
                if t.release < horizon {
                    push(t.release, 0);
                }
            }
        }
    }
    out.sort_by_key(|r| (r.time, r.task, r.instance));
    out
}

#[derive(Default)]
struct Processor {
    failed: bool,
    running: Option<usize>,
    ready: Vec<usize>,
    sup: SuperState,
    last_ct: Option<JobId>,
}

struct Sim<'a> {
    ts: &'a TaskSet,
    cfg: &'a SimConfig,
    pins: Vec<usize>,
    releases: Vec<Release>,
    next_release: usize,
    jobs: Vec<Job>,
    records: Vec<crate::engine::JobRecord>,
    events: Vec<Event>,
    procs: Vec<Processor>,
    activated_backups: Vec<bool>,
}

impl<'a> Sim<'a> {
    fn new(ts: &'a TaskSet, cfg: &'a SimConfig, pins: Vec<usize>) -> Self {
        let priority = match cfg.policy {
            Policy::Super(p) => p,
            _ => CatastrophePriority::Deadline,
        };
        Sim {
            ts,
            cfg,
            pins,
            releases: release_plan(ts, cfg.horizon, cfg.seed),
            next_release: 0,
            jobs: Vec::new(),
            records: Vec::new(),
            events: Vec::new(),
            procs: (0..cfg.processors).map(|_| Processor { sup: SuperState::new(priority), ..Default::default() }).collect(),
            activated_backups: vec![false; ts.len()],
        }
    }

    fn is_super(&self) -> bool {
        matches!(self.cfg.policy, Policy::Super(_))
    }

    fn emit(&mut self, time: TimePoint, kind: EventKind, job: Option<usize>, processor: usize, detail: String) {
        let job = job.map(|j| self.jobs[j].id);
        self.events.push(Event { time, kind, job, processor, detail });
    }

    fn run(mut self) -> Trace {
        let horizon = self.cfg.horizon;
        let mut now: TimePoint = 0;
        loop {
            for p in 0..self.procs.len() {
                if let Some(j) = self.procs[p].running {
                    if self.jobs[j].remaining == 0 {
                        self.complete(p, j, now);
                    }
                }
            }
            if now >= horizon {
                break;
            }
            if let Some(f) = &self.cfg.failure {
                if f.at == now {
                    self.fail_processor(f.processor, now);
                }
            }
            while self.next_release < self.releases.len() && self.releases[self.next_release].time == now {
                let r = &self.releases[self.next_release];
                let (task, instance) = (r.task, r.instance);
                self.next_release += 1;
                self.release(task, instance, now);
            }
            for p in 0..self.procs.len() {
                if self.is_super() {
                    self.settle_super(p, now);
                }
                self.dispatch(p, now);
            }

            let mut next = horizon;
            if let Some(r) = self.releases.get(self.next_release) {
                next = next.min(r.time);
            }
            if let Some(f) = &self.cfg.failure {
                if f.at > now {
                    next = next.min(f.at);
                }
            }
            for p in &self.procs {
                if let Some(j) = p.running {
                    next = next.min(now + self.jobs[j].remaining);
                }
            }
            for p in 0..self.procs.len() {
                if let Some(j) = self.procs[p].running {
                    self.jobs[j].remaining -= next - now;
                    let segs = &mut self.records[j].segments;
                    match segs.last_mut() {
                        Some(last) if last.1 == now => last.1 = next,
                        _ => segs.push((now, next)),
                    }
                }
            }
            now = next;
        }
        self.finish()
    }

    fn finish(mut self) -> Trace {
        self.events.sort_by_key(Event::sort_key);
        Trace {
            policy: self.cfg.policy.name().to_owned(),
            seed: self.cfg.seed,
            horizon: self.cfg.horizon,
            processors: self.cfg.processors,
            tasks: self.ts.tasks.iter().map(|t| (t.id, t.label.clone())).collect(),
            events: self.events,
            jobs: self.records,
        }
    }

    fn complete(&mut self, p: usize, j: usize, now: TimePoint) {
        let job = &mut self.jobs[j];
        job.set_state(JobState::Completed);
        job.completion = Some(now);
        self.records[j].completion = Some(now);
        let detail = if now <= job.abs_deadline { "met" } else { "late" };
        if job.is_catastrophe() {
            self.procs[p].last_ct = Some(job.id);
        }
        self.procs[p].running = None;
        self.emit(now, EventKind::Complete, Some(j), p, detail.into());
    }

    fn discard(&mut self, p: usize, j: usize, now: TimePoint, reason: DiscardReason) {
        let proc = &mut self.procs[p];
        if proc.running == Some(j) {
            proc.running = None;
        }
        proc.ready.retain(|&r| r != j);
        proc.sup.stack.remove(self.jobs[j].id);
        let job = &mut self.jobs[j];
        job.set_state(JobState::Discarded);
        if job.is_catastrophe() {
            proc.last_ct = Some(job.id);
        }
        self.records[j].discarded = Some((now, reason));
        self.emit(now, EventKind::Discard, Some(j), p, reason.as_str().into());
    }

    fn fail_processor(&mut self, p: usize, now: TimePoint) {
        if self.pins.contains(&p) {
            self.emit(now, EventKind::ProcessorFail, None, p, "failed".into());
        }
        let stacked: Vec<usize> = self.procs[p]
            .sup
            .restore_contexts(now)
            .into_iter()
            .map(|ctx| self.index_of(ctx.job))
            .collect();
        let mut victims: Vec<usize> = self.procs[p].running.into_iter().chain(self.procs[p].ready.iter().copied()).collect();
        victims.extend(stacked);
        victims.sort_by_key(|&j| self.jobs[j].id);
        for j in victims {
            self.discard(p, j, now, DiscardReason::ProcessorFailure);
        }
        self.procs[p].failed = true;
    }

    fn index_of(&self, id: JobId) -> usize {
        self.jobs.iter().rposition(|j| j.id == id).expect("job exists")
    }

    fn release(&mut self, task_idx: usize, instance: u32, now: TimePoint) {
        let ts = self.ts;
        let spec = &ts.tasks[task_idx];
        let deadline = if spec.kind.has_absolute_deadline() { spec.deadline } else { now + spec.deadline };
        let mut p = self.pins[task_idx];
        let mut activated = false;
        if let Some(f) = &self.cfg.failure {
            if p == f.processor && now >= f.at {
                if let Some(&b) = f.backups.get(&spec.id) {
                    activated = !self.activated_backups[task_idx];
                    self.activated_backups[task_idx] = true;
                    p = b;
                }
            }
        }
        let mut job = Job::new(spec, instance, now, deadline);
        job.set_state(JobState::Ready);
        self.records.push(JobRecord {
            id: job.id,
            label: spec.label.clone(),
            kind: spec.kind,
            criticality: spec.criticality,
            processor: p,
            release: now,
            deadline,
            execution_time: spec.execution_time,
            completion: None,
            discarded: None,
            segments: Vec::new(),
        });
        self.jobs.push(job);
        let j = self.jobs.len() - 1;
        self.emit(now, EventKind::Release, Some(j), p, format!("d={deadline}"));
        if activated {
            let primary = self.pins[task_idx];
            self.emit(now, EventKind::BackupActivate, Some(j), p, format!("primary={primary}"));
        }
        if self.procs[p].failed {
            self.discard(p, j, now, DiscardReason::ProcessorFailure);
            return;
        }
        self.procs[p].ready.push(j);

        if self.is_super() && self.jobs[j].is_catastrophe() {
            let running = self.procs[p].running;
            let out = {
                let running_job = running.map(|r| &self.jobs[r]);
                let ct = &self.jobs[j];
                let sup = &mut self.procs[p].sup;
                sup.on_catastrophe_arrival(running_job, ct, now)
            };
            if out.switched {
                self.emit(now, EventKind::ModeSwitch, Some(j), p, SchedulerMode::SuperCatastrophe.as_str().into());
            }
            if let (Some(ctx), Some(r)) = (out.pushed, running) {
                self.jobs[r].set_state(JobState::Preempted);
                self.procs[p].running = None;
                self.emit(now, EventKind::Preempt, Some(r), p, format!("stacked rem={}", ctx.remaining));
            }
        }
    }

    fn has_active_ct(&self, p: usize) -> bool {
        let proc = &self.procs[p];
        proc.running.into_iter().chain(proc.ready.iter().copied()).any(|j| self.jobs[j].is_catastrophe())
    }

    /// Prune infeasible jobs and unwind the stack once no catastrophe job is left.
    fn settle_super(&mut self, p: usize, now: TimePoint) {
        self.prune(p, now);
        if self.procs[p].sup.mode == SchedulerMode::SuperCatastrophe && !self.has_active_ct(p) {
            let ct = self.procs[p].last_ct.map(|id| self.index_of(id));
            self.emit(now, EventKind::ModeSwitch, ct, p, SchedulerMode::HybridNormal.as_str().into());
            for ctx in self.procs[p].sup.restore_contexts(now) {
                let j = self.index_of(ctx.job);
                debug_assert_eq!(self.jobs[j].remaining, ctx.remaining);
                self.procs[p].ready.push(j);
            }
            self.prune(p, now);
        }
    }

    /// Discard every job of processor `p` that can no longer meet its
    /// deadline, including jobs parked on the preemption stack.
    fn prune(&mut self, p: usize, now: TimePoint) {
        let proc = &self.procs[p];
        let stacked: Vec<usize> = proc.sup.stack.iter().map(|c| self.index_of(c.job)).collect();
        let candidates: Vec<usize> = proc.running.into_iter().chain(proc.ready.iter().copied()).chain(stacked).collect();
        let victims: Vec<JobId> = {
            let refs: Vec<&Job> = candidates.iter().map(|&j| &self.jobs[j]).collect();
            let (_, discarded) = supersched::prune_infeasible(&refs, now, &DiscardPolicy);
            discarded.iter().map(|j| j.id).collect()
        };
        for id in victims {
            let j = candidates.iter().copied().find(|&j| self.jobs[j].id == id).expect("candidate");
            self.discard(p, j, now, DiscardReason::Infeasible);
        }
    }

    fn dispatch(&mut self, p: usize, now: TimePoint) {
        let proc = &self.procs[p];
        if proc.failed {
            return;
        }
        let candidates: Vec<usize> = proc.running.into_iter().chain(proc.ready.iter().copied()).collect();
        let best = {
            let refs: Vec<&Job> = candidates.iter().map(|&j| &self.jobs[j]).collect();
            let picked = match self.cfg.policy {
                Policy::Edf => edf_pick(&refs, now),
                Policy::Rm => rm_pick(&refs, now).expect("periods validated"),
                Policy::Super(priority) => supersched::alter_priorities(&refs, priority).first().copied(),
            };
            picked.map(|b| b.id)
        };
        let Some(best) = best else { return };
        let best = candidates.iter().copied().find(|&j| self.jobs[j].id == best).expect("candidate");
        let current = self.procs[p].running;
        if current == Some(best) {
            return;
        }
        if let Some(cur) = current {
            self.jobs[cur].set_state(JobState::Preempted);
            self.procs[p].ready.push(cur);
            let rem = self.jobs[cur].remaining;
            self.emit(now, EventKind::Preempt, Some(cur), p, format!("rem={rem}"));
        }
        self.procs[p].ready.retain(|&j| j != best);
        self.procs[p].running = Some(best);
        self.jobs[best].set_state(JobState::Running);
        let rem = self.jobs[best].remaining;
        self.emit(now, EventKind::Dispatch, Some(best), p, format!("rem={rem}"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TaskSpec;

    #[test]
    fn policy_names_round_trip() {
        for p in [Policy::Edf, Policy::Rm, Policy::SUPER, Policy::Super(CatastrophePriority::ClassDominant)] {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!(matches!("fifo".parse::<Policy>(), Err(Error::UnknownPolicy(_))));
    }

    #[test]
    fn empty_set_gives_empty_trace() {
        let tr = simulate(&TaskSet::default(), Policy::Edf, 1, 100, 0).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.released(), 0);
    }

    #[test]
    fn rejects_bad_config() {
        let ts = TaskSet::new("x", vec![TaskSpec::periodic(1, "A", 1, 0)]);
        assert!(matches!(simulate(&ts, Policy::Edf, 1, 10, 0), Err(Error::InvalidTaskSet(_))));
        let ok = TaskSet::new("x", vec![TaskSpec::periodic(1, "A", 1, 4)]);
        assert!(simulate(&ok, Policy::Edf, 0, 10, 0).is_err());
        assert!(simulate(&ok, Policy::Edf, 1, 0, 0).is_err());
        let shot = TaskSet::new("x", vec![TaskSpec::one_shot(1, "A", 1, 0, 4)]);
        assert!(matches!(simulate(&shot, Policy::Rm, 1, 10, 0), Err(Error::MissingPeriod(_))));
    }

    #[test]
    fn sporadic_releases_respect_min_interarrival() {
        let mut t = TaskSpec::periodic(1, "S", 1, 10);
        t.kind = TaskKind::Sporadic;
        t.period = None;
        t.min_interarrival = Some(10);
        let ts = TaskSet::new("s", vec![t]);
        let tr = simulate(&ts, Policy::Edf, 1, 1000, 7).unwrap();
        let rel: Vec<u64> = tr.jobs.iter().map(|j| j.release).collect();
        assert!(rel.len() > 30);
        assert!(rel.windows(2).all(|w| (10..=20).contains(&(w[1] - w[0]))));
        let again = simulate(&ts, Policy::Edf, 1, 1000, 7).unwrap();
        assert_eq!(tr, again);
        let other = simulate(&ts, Policy::Edf, 1, 1000, 8).unwrap();
        assert_ne!(other.jobs.iter().map(|j| j.release).collect::<Vec<_>>(), rel);
    }

    #[test]
    fn rm_schedules_by_period() {
        let ts = TaskSet::new("rm", vec![TaskSpec::periodic(1, "Slow", 4, 10), TaskSpec::periodic(2, "Fast", 1, 2)]);
        let tr = simulate(&ts, Policy::Rm, 1, 10, 0).unwrap();
        assert_eq!(tr.missed(), 0);
        let first = tr.events_of(EventKind::Dispatch).next().unwrap();
        assert_eq!(first.job.unwrap().task, TaskId(2));
    }

    #[test]
    fn completion_at_horizon_counts() {
        let ts = TaskSet::new("h", vec![TaskSpec::one_shot(1, "A", 10, 0, 10)]);
        let tr = simulate(&ts, Policy::Edf, 1, 10, 0).unwrap();
        assert_eq!(tr.jobs[0].completion, Some(10));
        let short = simulate(&ts, Policy::Edf, 1, 5, 0).unwrap();
        assert_eq!(short.jobs[0].outcome(), JobOutcome::Active);
        assert_eq!(short.missed(), 0);
    }
}
