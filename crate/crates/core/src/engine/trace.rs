use std::fmt;

use crate::model::{Criticality, Duration, JobId, TaskId, TaskKind, TimePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Release,
    ProcessorFail,
    BackupActivate,
    ModeSwitch,
    Discard,
    Preempt,
    Dispatch,
    Complete,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Release => "release",
            EventKind::ProcessorFail => "processor_fail",
            EventKind::BackupActivate => "backup_activate",
            EventKind::ModeSwitch => "mode_switch",
            EventKind::Discard => "discard",
            EventKind::Preempt => "preempt",
            EventKind::Dispatch => "dispatch",
            EventKind::Complete => "complete",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub time: TimePoint,
    pub kind: EventKind,
    pub job: Option<JobId>,
    pub processor: usize,
    pub detail: String,
}

impl Event {
    /// Canonical trace order.
    pub(crate) fn sort_key(&self) -> (TimePoint, EventKind, usize, Option<JobId>) {
        (self.time, self.kind, self.processor, self.job)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscardReason {
    Infeasible,
    ProcessorFailure,
}

impl DiscardReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DiscardReason::Infeasible => "infeasible",
            DiscardReason::ProcessorFailure => "processor_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobOutcome {
    OnTime,
    Late,
    Discarded,
    /// Still released but unfinished when the horizon was reached.
    Active,
}

/// Everything that happened to one job during a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobRecord {
    pub id: JobId,
    pub label: String,
    pub kind: TaskKind,
    pub criticality: Criticality,
    pub processor: usize,
    pub release: TimePoint,
    pub deadline: TimePoint,
    pub execution_time: Duration,
    pub completion: Option<TimePoint>,
    pub discarded: Option<(TimePoint, DiscardReason)>,
    /// Half-open execution intervals, in time order.
    pub segments: Vec<(TimePoint, TimePoint)>,
}

impl JobRecord {
    pub fn name(&self) -> String {
        format!("{}#{}", self.label, self.id.instance)
    }

    pub fn outcome(&self) -> JobOutcome {
        match (self.completion, self.discarded) {
            (Some(c), _) if c <= self.deadline => JobOutcome::OnTime,
            (Some(_), _) => JobOutcome::Late,
            (None, Some(_)) => JobOutcome::Discarded,
            (None, None) => JobOutcome::Active,
        }
    }

    pub fn service_before(&self, t: TimePoint) -> Duration {
        self.segments.iter().map(|&(s, e)| e.min(t).saturating_sub(s)).sum()
    }

    pub fn remaining_at(&self, t: TimePoint) -> Duration {
        self.execution_time - self.service_before(t)
    }

    pub fn first_dispatch(&self) -> Option<TimePoint> {
        self.segments.first().map(|s| s.0)
    }

    /// Counts toward n_M: a hard or soft job that finished late, was
    /// discarded, or is still unfinished past its deadline at `horizon`.
    pub fn is_miss(&self, horizon: TimePoint) -> bool {
        if self.criticality == Criticality::Optional {
            return false;
        }
        match self.outcome() {
            JobOutcome::OnTime => false,
            JobOutcome::Late | JobOutcome::Discarded => true,
            JobOutcome::Active => self.deadline <= horizon,
        }
    }

    /// Time at which the miss became observable, if it is an event.
    pub fn miss_instant(&self) -> Option<TimePoint> {
        if self.criticality == Criticality::Optional {
            return None;
        }
        match self.outcome() {
            JobOutcome::Late => self.completion,
            JobOutcome::Discarded => self.discarded.map(|d| d.0),
            _ => None,
        }
    }
}

/// Ordered event record of one simulation run plus the per-job outcome table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub policy: String,
    pub seed: u64,
    pub horizon: TimePoint,
    pub processors: usize,
    /// Task ids and labels in task-set order.
    pub tasks: Vec<(TaskId, String)>,
    pub events: Vec<Event>,
    pub jobs: Vec<JobRecord>,
}

impl Trace {
    pub fn job(&self, id: JobId) -> Option<&JobRecord> {
        self.jobs.iter().find(|j| j.id == id)
    }

    pub fn label_of(&self, task: TaskId) -> Option<&str> {
        self.tasks.iter().find(|t| t.0 == task).map(|t| t.1.as_str())
    }

    pub fn job_name(&self, id: JobId) -> String {
        match self.label_of(id.task) {
            Some(l) => format!("{l}#{}", id.instance),
            None => format!("{}#{}", id.task, id.instance),
        }
    }

    /// N: every job released before the horizon.
    pub fn released(&self) -> usize {
        self.jobs.len()
    }

    pub fn completed(&self) -> usize {
        self.jobs.iter().filter(|j| j.completion.is_some()).count()
    }

    /// r_ct: jobs removed without completing.
    pub fn discarded(&self) -> usize {
        self.jobs.iter().filter(|j| j.discarded.is_some()).count()
    }

    pub fn active(&self) -> usize {
        self.jobs.iter().filter(|j| j.outcome() == JobOutcome::Active).count()
    }

    /// n_M.
    pub fn missed(&self) -> usize {
        self.jobs.iter().filter(|j| j.is_miss(self.horizon)).count()
    }

    /// Jobs that ran to completion after their deadline.
    pub fn late(&self) -> usize {
        self.jobs.iter().filter(|j| j.outcome() == JobOutcome::Late).count()
    }

    pub fn missed_jobs(&self) -> impl Iterator<Item = &JobRecord> {
        self.jobs.iter().filter(move |j| j.is_miss(self.horizon))
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}
