//! Tasks, jobs and task sets, with the closed-form feasibility math.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use num_traits::CheckedAdd;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Rational;

/// Absolute instant, in integer ticks.
pub type TimePoint = u64;
/// Length of time, in integer ticks.
pub type Duration = u64;

/// Largest horizon (and hyperperiod) the simulator accepts.
pub const MAX_HORIZON: TimePoint = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Periodic,
    Sporadic,
    OneShot,
    Catastrophe,
}

impl TaskKind {
    /// One-shot and catastrophe tasks carry absolute deadlines.
    pub fn has_absolute_deadline(self) -> bool {
        matches!(self, TaskKind::OneShot | TaskKind::Catastrophe)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    #[default]
    Hard,
    Soft,
    Optional,
}

/// Static description of a task.
///
/// `deadline` is relative to each release for periodic and sporadic
/// tasks and absolute for one-shot and catastrophe tasks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: TaskId,
    pub label: String,
    pub kind: TaskKind,
    #[serde(default)]
    pub criticality: Criticality,
    pub execution_time: Duration,
    #[serde(default)]
    pub release: TimePoint,
    pub deadline: TimePoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<Duration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_interarrival: Option<Duration>,
    #[serde(default)]
    pub base_priority: i32,
    /// Processor this task is pinned to in partitioned runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processor: Option<usize>,
}

impl TaskSpec {
    pub fn periodic(id: u32, label: &str, execution_time: Duration, period: Duration) -> Self {
        TaskSpec {
            id: TaskId(id),
            label: label.to_owned(),
            kind: TaskKind::Periodic,
            criticality: Criticality::Hard,
            execution_time,
            release: 0,
            deadline: period,
            period: Some(period),
            min_interarrival: None,
            base_priority: 0,
            processor: None,
        }
    }

    pub fn one_shot(id: u32, label: &str, execution_time: Duration, release: TimePoint, deadline: TimePoint) -> Self {
        TaskSpec {
            id: TaskId(id),
            label: label.to_owned(),
            kind: TaskKind::OneShot,
            criticality: Criticality::Hard,
            execution_time,
            release,
            deadline,
            period: None,
            min_interarrival: None,
            base_priority: 0,
            processor: None,
        }
    }

    pub fn catastrophe(id: u32, label: &str, execution_time: Duration, release: TimePoint, deadline: TimePoint) -> Self {
        TaskSpec { kind: TaskKind::Catastrophe, ..Self::one_shot(id, label, execution_time, release, deadline) }
    }

    pub fn with_criticality(mut self, criticality: Criticality) -> Self {
        self.criticality = criticality;
        self
    }

    /// Period for periodic tasks, minimum interarrival for sporadic ones.
    pub fn rate_period(&self) -> Option<Duration> {
        match self.kind {
            TaskKind::Periodic => self.period,
            TaskKind::Sporadic => self.min_interarrival,
            _ => None,
        }
    }

    pub fn utilization(&self) -> Result<Rational> {
        match self.rate_period() {
            Some(p) if p > 0 => Ok(Rational::new(self.execution_time, p)),
            _ => Err(Error::MissingPeriod(self.id)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaskSet {
    pub name: String,
    pub tasks: Vec<TaskSpec>,
}

impl TaskSet {
    pub fn new(name: impl Into<String>, tasks: Vec<TaskSpec>) -> Self {
        TaskSet { name: name.into(), tasks }
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn get(&self, id: TaskId) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn has_catastrophe(&self) -> bool {
        self.tasks.iter().any(|t| t.kind == TaskKind::Catastrophe)
    }

    /// The same set with every catastrophe task removed.
    pub fn without_catastrophes(&self) -> TaskSet {
        TaskSet {
            name: self.name.clone(),
            tasks: self.tasks.iter().filter(|t| t.kind != TaskKind::Catastrophe).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JobId {
    pub task: TaskId,
    pub instance: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JobState {
    Pending,
    Ready,
    Running,
    Preempted,
    Completed,
    Discarded,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Completed | JobState::Discarded)
    }

    pub fn can_move_to(self, next: JobState) -> bool {
        use JobState::*;
        matches!(
            (self, next),
            (Pending, Ready)
                | (Ready, Running)
                | (Ready, Discarded)
                | (Running, Preempted)
                | (Running, Completed)
                | (Running, Discarded)
                | (Preempted, Running)
                | (Preempted, Discarded)
        )
    }
}

/// A runtime instance of a task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub id: JobId,
    pub kind: TaskKind,
    pub criticality: Criticality,
    pub execution_time: Duration,
    pub period: Option<Duration>,
    pub abs_release: TimePoint,
    pub abs_deadline: TimePoint,
    pub remaining: Duration,
    pub state: JobState,
    pub completion: Option<TimePoint>,
}

impl Job {
    pub fn new(task: &TaskSpec, instance: u32, abs_release: TimePoint, abs_deadline: TimePoint) -> Self {
        Job {
            id: JobId { task: task.id, instance },
            kind: task.kind,
            criticality: task.criticality,
            execution_time: task.execution_time,
            period: task.rate_period(),
            abs_release,
            abs_deadline,
            remaining: task.execution_time,
            state: JobState::Pending,
            completion: None,
        }
    }

    pub fn is_catastrophe(&self) -> bool {
        self.kind == TaskKind::Catastrophe
    }

    /// Whether the job can still finish by its deadline if it ran alone from `now`.
    pub fn can_meet_deadline(&self, now: TimePoint) -> bool {
        now + self.remaining <= self.abs_deadline
    }

    /// Move to `next`, panicking on a transition outside the job life cycle.
    pub fn set_state(&mut self, next: JobState) {
        assert!(
            self.state.can_move_to(next),
            "illegal job transition {:?} -> {:?} for {:?}",
            self.state,
            next,
            self.id
        );
        self.state = next;
    }
}

/// Individual feasibility: `r + e <= d` for absolute deadlines, `e <= d` for relative ones.
pub fn per_task_feasible(task: &TaskSpec) -> bool {
    if task.kind.has_absolute_deadline() {
        task.release.saturating_add(task.execution_time) <= task.deadline
    } else {
        task.execution_time <= task.deadline
    }
}

/// Exact processor utilization `Σ e_i / P_i`.
pub fn utilization(ts: &TaskSet) -> Result<Rational> {
    sum_rationals(ts.tasks.iter().map(TaskSpec::utilization))
}

pub(crate) fn sum_rationals(terms: impl IntoIterator<Item = Result<Rational>>) -> Result<Rational> {
    let mut acc = Rational::from_integer(0);
    for term in terms {
        acc = acc
            .checked_add(&term?)
            .ok_or_else(|| Error::InvalidArgument("rational sum overflows u64".into()))?;
    }
    Ok(acc)
}

/// `e / min(d, P)` for recurring tasks, `e / (d - r)` for one-shot tasks.
pub fn density(task: &TaskSpec) -> Result<Rational> {
    let window = if task.kind.has_absolute_deadline() {
        task.deadline.saturating_sub(task.release)
    } else {
        match task.rate_period() {
            Some(p) => task.deadline.min(p),
            None => task.deadline,
        }
    };
    if window == 0 {
        return Err(Error::InvalidTask { task: task.id, reason: "density window is zero".into() });
    }
    Ok(Rational::new(task.execution_time, window))
}

/// Least common multiple of all periods.
pub fn hyperperiod(ts: &TaskSet) -> Result<Duration> {
    let periods = ts
        .tasks
        .iter()
        .map(|t| match (t.kind, t.period) {
            (TaskKind::Periodic, Some(p)) if p > 0 => Ok(p),
            _ => Err(Error::MissingPeriod(t.id)),
        })
        .collect::<Result<Vec<_>>>()?;
    lcm_of(periods)
}

/// Least common multiple of `periods`, 1 for an empty list.
pub fn lcm_of(periods: impl IntoIterator<Item = Duration>) -> Result<Duration> {
    let mut acc: u64 = 1;
    for p in periods {
        let g = acc.gcd(&p);
        acc = (acc / g)
            .checked_mul(p)
            .filter(|&v| v <= MAX_HORIZON)
            .ok_or(Error::HyperperiodOverflow { limit: MAX_HORIZON })?;
    }
    Ok(acc)
}

/// A horizon long enough to observe every job of `ts` resolve.
///
/// One-shot work is covered by `max(latest deadline, latest release + total
/// one-shot work)`; with recurring tasks present this is rounded up to a
/// whole number of hyperperiods (at least one).
pub fn default_horizon(ts: &TaskSet) -> Result<TimePoint> {
    let shots = ts.tasks.iter().filter(|t| t.kind.has_absolute_deadline());
    let work: Duration = shots.clone().map(|t| t.execution_time).sum();
    let extent = shots.map(|t| t.deadline.max(t.release + work)).max().unwrap_or(0);
    let periods: Vec<Duration> = ts.tasks.iter().filter_map(TaskSpec::rate_period).collect();
    if periods.is_empty() {
        return Ok(extent.max(1));
    }
    let h = lcm_of(periods)?;
    let cycles = extent.div_ceil(h).max(1);
    h.checked_mul(cycles)
        .filter(|&v| v <= MAX_HORIZON)
        .ok_or(Error::HyperperiodOverflow { limit: MAX_HORIZON })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    DuplicateId,
    ZeroExecutionTime,
    MissingPeriod,
    ZeroPeriod,
    MissingInterarrival,
    UnexpectedPeriod,
    InfeasibleOneShot,
    BadLabel,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::DuplicateId => "duplicate task id",
            Rule::ZeroExecutionTime => "execution time must be positive",
            Rule::MissingPeriod => "periodic task needs a period",
            Rule::ZeroPeriod => "period must be positive",
            Rule::MissingInterarrival => "sporadic task needs a positive minimum interarrival time",
            Rule::UnexpectedPeriod => "one-shot and catastrophe tasks take no period",
            Rule::InfeasibleOneShot => "release + execution time exceeds the absolute deadline",
            Rule::BadLabel => "label must be non-empty without ',', '#' or line breaks",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub task: TaskId,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "task {}: {}", self.task, self.rule)
    }
}

/// Every broken task-level invariant, in task order.
pub fn validate_taskset(ts: &TaskSet) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for t in &ts.tasks {
        let mut flag = |rule| out.push(Violation { task: t.id, rule });
        if !seen.insert(t.id) {
            flag(Rule::DuplicateId);
        }
        if t.label.is_empty() || t.label.contains([',', '#', '\n', '\r']) {
            flag(Rule::BadLabel);
        }
        if t.execution_time == 0 {
            flag(Rule::ZeroExecutionTime);
        }
        match t.kind {
            TaskKind::Periodic => match t.period {
                None => flag(Rule::MissingPeriod),
                Some(0) => flag(Rule::ZeroPeriod),
                Some(_) => {}
            },
            TaskKind::Sporadic => {
                if t.min_interarrival.unwrap_or(0) == 0 {
                    flag(Rule::MissingInterarrival);
                }
            }
            TaskKind::OneShot | TaskKind::Catastrophe => {
                if t.period.is_some() || t.min_interarrival.is_some() {
                    flag(Rule::UnexpectedPeriod);
                }
                if !per_task_feasible(t) {
                    flag(Rule::InfeasibleOneShot);
                }
            }
        }
    }
    out
}
