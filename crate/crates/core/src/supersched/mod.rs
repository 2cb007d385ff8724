//! Catastrophe-mode scheduling.
//!
//! A processor runs in [`SchedulerMode::HybridNormal`] (plain EDF) until a
//! catastrophe job is released on it. The arrival flips the processor into
//! [`SchedulerMode::SuperCatastrophe`]: the job it displaces is saved on a
//! [`PreemptionStack`], and infeasible jobs are discarded instead of being
//! allowed to run late. When the last catastrophe job terminates the stack
//! is unwound back into the ready queue and the processor returns to hybrid
//! mode.

use std::cmp::{Ordering, Reverse};

use crate::model::{Criticality, Duration, Job, JobId, TimePoint};

mod dispersion;

pub use dispersion::{dispersion_experiment, dispersion_sweep, DispersionReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchedulerMode {
    #[default]
    HybridNormal,
    SuperCatastrophe,
}

impl SchedulerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerMode::HybridNormal => "hybrid_normal",
            SchedulerMode::SuperCatastrophe => "super_catastrophe",
        }
    }
}

/// How catastrophe jobs rank against normal jobs while in super mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CatastrophePriority {
    /// Catastrophe jobs compete by absolute deadline like every other job.
    #[default]
    Deadline,
    /// Every catastrophe job outranks every normal job; EDF inside each class.
    ClassDominant,
}

/// Dispatch key: smaller is more urgent.
pub(crate) fn dispatch_key(job: &Job, priority: CatastrophePriority) -> (bool, TimePoint, JobId) {
    let class = match priority {
        CatastrophePriority::ClassDominant => !job.is_catastrophe(),
        CatastrophePriority::Deadline => false,
    };
    (class, job.abs_deadline, job.id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SavedContext {
    pub job: JobId,
    pub remaining: Duration,
    pub saved_at: TimePoint,
}

/// LIFO store of contexts displaced by catastrophe handling.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PreemptionStack {
    entries: Vec<SavedContext>,
}

impl PreemptionStack {
    pub fn push(&mut self, ctx: SavedContext) {
        assert!(!self.contains(ctx.job), "job {:?} is already on the preemption stack", ctx.job);
        self.entries.push(ctx);
    }

    pub fn pop(&mut self) -> Option<SavedContext> {
        self.entries.pop()
    }

    /// Drop a context that will never be resumed (its job was discarded),
    /// leaving the order of the others intact.
    pub fn remove(&mut self, job: JobId) -> Option<SavedContext> {
        let i = self.entries.iter().position(|c| c.job == job)?;
        Some(self.entries.remove(i))
    }

    pub fn contains(&self, job: JobId) -> bool {
        self.entries.iter().any(|c| c.job == job)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Remove every entry, returning them top of stack first.
    pub fn drain(&mut self) -> Vec<SavedContext> {
        let mut out = std::mem::take(&mut self.entries);
        out.reverse();
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = &SavedContext> {
        self.entries.iter()
    }
}

/// Victim ordering for discards: optional before soft before hard, and
/// within a class the latest deadline goes first.
///
/// Only jobs that can no longer meet their deadline are ever discarded, so
/// the ordering decides the sequence, never the membership.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DiscardPolicy;

impl DiscardPolicy {
    pub fn victim_order(&self, a: &Job, b: &Job) -> Ordering {
        let rank = |j: &Job| match j.criticality {
            Criticality::Optional => 0,
            Criticality::Soft => 1,
            Criticality::Hard => 2,
        };
        (rank(a), Reverse(a.abs_deadline), a.id).cmp(&(rank(b), Reverse(b.abs_deadline), b.id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrivalOutcome {
    /// The processor switched from hybrid to super mode.
    pub switched: bool,
    /// The running job was displaced onto the stack.
    pub pushed: Option<SavedContext>,
}

/// Per-processor super-scheduler state.
#[derive(Debug, Clone, Default)]
pub struct SuperState {
    pub mode: SchedulerMode,
    pub stack: PreemptionStack,
    pub priority: CatastrophePriority,
}

impl SuperState {
    pub fn new(priority: CatastrophePriority) -> Self {
        SuperState { priority, ..Default::default() }
    }

    /// Enter super mode for `ct` and save the running job if `ct` outranks it.
    ///
    /// A catastrophe job that is already running is never stacked; a second
    /// arrival simply competes with it by deadline.
    pub fn on_catastrophe_arrival(&mut self, running: Option<&Job>, ct: &Job, now: TimePoint) -> ArrivalOutcome {
        debug_assert!(ct.is_catastrophe());
        let switched = self.mode == SchedulerMode::HybridNormal;
        self.mode = SchedulerMode::SuperCatastrophe;
        let pushed = running
            .filter(|r| !r.is_catastrophe())
            .filter(|r| dispatch_key(ct, self.priority) < dispatch_key(r, self.priority))
            .map(|r| SavedContext { job: r.id, remaining: r.remaining, saved_at: now });
        if let Some(ctx) = pushed {
            self.stack.push(ctx);
        }
        ArrivalOutcome { switched, pushed }
    }

    /// Leave super mode, returning saved contexts top of stack first.
    pub fn restore_contexts(&mut self, _now: TimePoint) -> Vec<SavedContext> {
        self.mode = SchedulerMode::HybridNormal;
        self.stack.drain()
    }
}

/// Ready jobs in the order the super scheduler would dispatch them.
pub fn alter_priorities<'a>(ready: &[&'a Job], priority: CatastrophePriority) -> Vec<&'a Job> {
    let mut order = ready.to_vec();
    order.sort_by_key(|j| dispatch_key(j, priority));
    order
}

/// Split `ready` into jobs that can still meet their deadline from `now`
/// and jobs that cannot. Victims come back in [`DiscardPolicy`] order.
pub fn prune_infeasible<'a>(ready: &[&'a Job], now: TimePoint, policy: &DiscardPolicy) -> (Vec<&'a Job>, Vec<&'a Job>) {
    let (kept, mut discarded): (Vec<&Job>, Vec<&Job>) = ready.iter().partition(|j| j.can_meet_deadline(now));
    discarded.sort_by(|a, b| policy.victim_order(a, b));
    (kept, discarded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{JobState, TaskSpec};

    fn job(task: &TaskSpec, deadline: TimePoint, remaining: Duration) -> Job {
        let mut j = Job::new(task, 0, task.release, deadline);
        j.remaining = remaining;
        j.state = JobState::Ready;
        j
    }

    #[test]
    fn ct_displaces_running_job() {
        let t1 = TaskSpec::one_shot(1, "T1", 20, 25, 150);
        let ct = TaskSpec::catastrophe(5, "CT", 60, 60, 120);
        let running = job(&t1, 150, 10);
        let ct_job = job(&ct, 120, 60);
        let mut st = SuperState::default();
        let out = st.on_catastrophe_arrival(Some(&running), &ct_job, 60);
        assert!(out.switched);
        assert_eq!(out.pushed, Some(SavedContext { job: running.id, remaining: 10, saved_at: 60 }));
        assert_eq!(st.mode, SchedulerMode::SuperCatastrophe);
        assert_eq!(st.stack.len(), 1);
    }

    #[test]
    fn ct_on_idle_processor_pushes_nothing() {
        let ct = TaskSpec::catastrophe(5, "CT", 60, 60, 120);
        let mut st = SuperState::default();
        let out = st.on_catastrophe_arrival(None, &job(&ct, 120, 60), 60);
        assert!(out.switched && out.pushed.is_none());
        assert!(st.stack.is_empty());
    }

    #[test]
    fn second_arrival_does_not_switch_again_or_stack_a_ct() {
        let a = TaskSpec::catastrophe(5, "CA", 10, 0, 100);
        let b = TaskSpec::catastrophe(6, "CB", 10, 0, 90);
        let mut st = SuperState::new(CatastrophePriority::ClassDominant);
        st.on_catastrophe_arrival(None, &job(&a, 100, 10), 0);
        let out = st.on_catastrophe_arrival(Some(&job(&a, 100, 5)), &job(&b, 90, 10), 5);
        assert!(!out.switched);
        assert!(out.pushed.is_none());
    }

    #[test]
    fn deadline_priority_keeps_more_urgent_running_job() {
        let n = TaskSpec::one_shot(1, "A", 10, 55, 70);
        let ct = TaskSpec::catastrophe(5, "CT", 20, 60, 100);
        let mut st = SuperState::new(CatastrophePriority::Deadline);
        let out = st.on_catastrophe_arrival(Some(&job(&n, 70, 5)), &job(&ct, 100, 20), 60);
        assert!(out.switched && out.pushed.is_none());

        let mut st = SuperState::new(CatastrophePriority::ClassDominant);
        let out = st.on_catastrophe_arrival(Some(&job(&n, 70, 5)), &job(&ct, 100, 20), 60);
        assert!(out.pushed.is_some());
    }

    #[test]
    fn alter_priorities_examples() {
        let t1 = TaskSpec::one_shot(1, "T1", 20, 25, 150);
        let ct = TaskSpec::catastrophe(5, "CT", 60, 60, 120);
        let (a, b) = (job(&t1, 150, 10), job(&ct, 120, 60));
        let order = alter_priorities(&[&a, &b], CatastrophePriority::ClassDominant);
        assert_eq!(order[0].id, b.id);

        // class dominance beats an earlier normal deadline
        let late_ct = job(&ct, 400, 60);
        let order = alter_priorities(&[&a, &late_ct], CatastrophePriority::ClassDominant);
        assert_eq!(order[0].id, late_ct.id);
        let order = alter_priorities(&[&a, &late_ct], CatastrophePriority::Deadline);
        assert_eq!(order[0].id, a.id);

        let c1 = TaskSpec::catastrophe(6, "C1", 5, 0, 100);
        let c2 = TaskSpec::catastrophe(7, "C2", 5, 0, 90);
        let (x, y) = (job(&c1, 100, 5), job(&c2, 90, 5));
        let order = alter_priorities(&[&x, &y], CatastrophePriority::ClassDominant);
        assert_eq!(order[0].id, y.id);
    }

    #[test]
    fn restore_unwinds_lifo() {
        let mut st = SuperState { mode: SchedulerMode::SuperCatastrophe, ..Default::default() };
        let t = TaskSpec::one_shot(1, "A", 5, 0, 50);
        let u = TaskSpec::one_shot(2, "B", 5, 0, 50);
        let (a, b) = (job(&t, 50, 4), job(&u, 50, 3));
        st.stack.push(SavedContext { job: a.id, remaining: 4, saved_at: 1 });
        st.stack.push(SavedContext { job: b.id, remaining: 3, saved_at: 2 });
        let restored = st.restore_contexts(10);
        assert_eq!(st.mode, SchedulerMode::HybridNormal);
        assert_eq!(restored.iter().map(|c| c.job).collect::<Vec<_>>(), vec![b.id, a.id]);
        assert!(st.stack.is_empty());

        let mut empty = SuperState { mode: SchedulerMode::SuperCatastrophe, ..Default::default() };
        assert!(empty.restore_contexts(0).is_empty());
        assert_eq!(empty.mode, SchedulerMode::HybridNormal);
    }

    #[test]
    #[should_panic(expected = "already on the preemption stack")]
    fn stack_rejects_duplicates() {
        let mut s = PreemptionStack::default();
        let id = JobId { task: crate::model::TaskId(1), instance: 0 };
        s.push(SavedContext { job: id, remaining: 1, saved_at: 0 });
        s.push(SavedContext { job: id, remaining: 1, saved_at: 0 });
    }

    #[test]
    fn prune_large_system_at_ct_completion() {
        // large-system ready queue at t=120
        let rows = [(1, 20, 190), (3, 60, 350), (4, 50, 280), (5, 30, 210), (6, 30, 125), (7, 25, 135), (8, 35, 200), (9, 10, 260), (10, 15, 380)];
        let specs: Vec<TaskSpec> = rows.iter().map(|&(id, rem, d)| TaskSpec::one_shot(id, "T", rem, 0, d)).collect();
        let jobs: Vec<Job> = specs.iter().zip(rows).map(|(s, (_, rem, d))| job(s, d, rem)).collect();
        let refs: Vec<&Job> = jobs.iter().collect();
        let (kept, discarded) = prune_infeasible(&refs, 120, &DiscardPolicy);
        // latest deadline first among hard victims
        assert_eq!(discarded.iter().map(|j| j.id.task.0).collect::<Vec<_>>(), vec![7, 6]);
        assert_eq!(kept.len(), 7);
        assert!(kept.iter().all(|j| j.can_meet_deadline(120)));
    }

    #[test]
    fn prune_medium_system_at_180() {
        let t3 = TaskSpec::one_shot(3, "T3", 60, 50, 200);
        let j = job(&t3, 200, 60);
        let (kept, discarded) = prune_infeasible(&[&j], 180, &DiscardPolicy);
        assert!(kept.is_empty());
        assert_eq!(discarded.len(), 1);
        let (kept, discarded) = prune_infeasible(&[&j], 120, &DiscardPolicy);
        assert_eq!((kept.len(), discarded.len()), (1, 0));
    }

    #[test]
    fn victim_order_prefers_optional_then_soft() {
        let h = TaskSpec::one_shot(1, "H", 5, 0, 10);
        let s = TaskSpec::one_shot(2, "S", 5, 0, 10).with_criticality(Criticality::Soft);
        let o = TaskSpec::one_shot(3, "O", 5, 0, 10).with_criticality(Criticality::Optional);
        let jobs = [job(&h, 10, 50), job(&s, 10, 50), job(&o, 10, 50)];
        let refs: Vec<&Job> = jobs.iter().collect();
        let (_, victims) = prune_infeasible(&refs, 0, &DiscardPolicy);
        assert_eq!(victims.iter().map(|j| j.id.task.0).collect::<Vec<_>>(), vec![3, 2, 1]);
    }
}
