//! Primary/backup placement on identical processors and single-failure runs.
//!
//! Each task gets a primary replica and a cold backup replica on a
//! different processor. Both replicas reserve the task's load on their
//! processor, so a processor stays EDF-feasible whichever of its backups
//! are activated.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{simulate_with, FailurePlan, Policy, SimConfig, Trace};
use crate::error::{Error, Result};
use crate::model::{density, TaskId, TaskSet, TimePoint};
use crate::scalar::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskPlacement {
    pub task: TaskId,
    pub primary: usize,
    pub backup: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub processors: usize,
    pub tasks: Vec<TaskPlacement>,
    /// Committed load per processor (primaries plus backups).
    pub load: Vec<Rational>,
}

impl Placement {
    /// Rebuild a placement from bare assignments, recomputing loads.
    pub fn from_assignments(ts: &TaskSet, processors: usize, tasks: Vec<TaskPlacement>) -> Result<Self> {
        let mut load = vec![Rational::from_integer(0); processors];
        for tp in &tasks {
            let spec = ts.get(tp.task).ok_or_else(|| Error::InvalidArgument(format!("placement names unknown task {}", tp.task)))?;
            let u = committed_load(spec)?;
            for p in [tp.primary, tp.backup] {
                let slot = load
                    .get_mut(p)
                    .ok_or_else(|| Error::InvalidArgument(format!("task {} placed on missing processor {p}", tp.task)))?;
                *slot += u;
            }
        }
        Ok(Placement { processors, tasks, load })
    }

    pub fn of(&self, task: TaskId) -> Option<&TaskPlacement> {
        self.tasks.iter().find(|t| t.task == task)
    }

    /// Primary processor of every task, in task-set order.
    pub fn primaries(&self, ts: &TaskSet) -> Option<Vec<usize>> {
        ts.tasks.iter().map(|t| self.of(t.id).map(|p| p.primary)).collect()
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "processors: {}", self.processors)?;
        for (p, load) in self.load.iter().enumerate() {
            let pri: Vec<String> = self.tasks.iter().filter(|t| t.primary == p).map(|t| format!("{}", t.task)).collect();
            let bak: Vec<String> = self.tasks.iter().filter(|t| t.backup == p).map(|t| format!("{}", t.task)).collect();
            writeln!(f, "P{p}: load {load} primaries [{}] backups [{}]", pri.join(" "), bak.join(" "))?;
        }
        Ok(())
    }
}

fn committed_load(spec: &crate::model::TaskSpec) -> Result<Rational> {
    if spec.rate_period().is_none() {
        return Err(Error::MissingPeriod(spec.id));
    }
    density(spec)
}

/// First-fit decreasing by load: each primary goes on the first processor
/// with room, its backup on the first different processor with room.
pub fn allocate_primary_backup(ts: &TaskSet) -> Result<Placement> {
    let one = Rational::from_integer(1);
    let mut items = Vec::with_capacity(ts.len());
    for t in &ts.tasks {
        let u = committed_load(t)?;
        if u > one {
            return Err(Error::InvalidTask { task: t.id, reason: format!("load {u} exceeds one processor") });
        }
        items.push((t.id, u));
    }
    // stable: equal loads keep task-list order
    items.sort_by_key(|item| std::cmp::Reverse(item.1));

    let mut load: Vec<Rational> = Vec::new();
    let mut placed = BTreeMap::new();
    let first_fit = |u: Rational, exclude: Option<usize>, load: &mut Vec<Rational>| {
        let p = (0..load.len()).find(|&p| Some(p) != exclude && load[p] + u <= one).unwrap_or_else(|| {
            load.push(Rational::from_integer(0));
            load.len() - 1
        });
        load[p] += u;
        p
    };
    for &(task, u) in &items {
        let primary = first_fit(u, None, &mut load);
        let backup = first_fit(u, Some(primary), &mut load);
        placed.insert(task, TaskPlacement { task, primary, backup });
    }
    let tasks = ts.tasks.iter().map(|t| placed[&t.id]).collect();
    Ok(Placement { processors: load.len(), tasks, load })
}

/// `max(⌈2·Σu⌉, 2)` for a non-empty set, 0 otherwise.
pub fn min_processor_lower_bound(ts: &TaskSet) -> Result<usize> {
    if ts.is_empty() {
        return Ok(0);
    }
    let mut total = Rational::from_integer(0);
    for t in &ts.tasks {
        total += committed_load(t)?;
    }
    let doubled = total * 2;
    Ok((doubled.ceil().to_integer() as usize).max(2))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlacementViolation {
    Unplaced(TaskId),
    SameProcessor(TaskId),
    MissingProcessor { task: TaskId, processor: usize },
    Overloaded { processor: usize, load: Rational },
    UnknownTask(TaskId),
}

impl fmt::Display for PlacementViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlacementViolation::Unplaced(t) => write!(f, "task {t} is not placed"),
            PlacementViolation::SameProcessor(t) => write!(f, "task {t} has primary and backup on one processor"),
            PlacementViolation::MissingProcessor { task, processor } => {
                write!(f, "task {task} placed on missing processor {processor}")
            }
            PlacementViolation::Overloaded { processor, load } => write!(f, "processor {processor} load {load} exceeds 1"),
            PlacementViolation::UnknownTask(t) => write!(f, "placement names unknown task {t}"),
        }
    }
}

pub fn validate_placement(pl: &Placement, ts: &TaskSet) -> Vec<PlacementViolation> {
    let mut out = Vec::new();
    for t in &ts.tasks {
        if pl.of(t.id).is_none() {
            out.push(PlacementViolation::Unplaced(t.id));
        }
    }
    let mut load = vec![Rational::from_integer(0); pl.processors];
    for tp in &pl.tasks {
        let Some(spec) = ts.get(tp.task) else {
            out.push(PlacementViolation::UnknownTask(tp.task));
            continue;
        };
        if tp.primary == tp.backup {
            out.push(PlacementViolation::SameProcessor(tp.task));
        }
        let u = committed_load(spec).unwrap_or(Rational::from_integer(0));
        for p in [tp.primary, tp.backup] {
            match load.get_mut(p) {
                Some(l) => *l += u,
                None => out.push(PlacementViolation::MissingProcessor { task: tp.task, processor: p }),
            }
        }
    }
    for (processor, l) in load.into_iter().enumerate() {
        if l > Rational::from_integer(1) {
            out.push(PlacementViolation::Overloaded { processor, load: l });
        }
    }
    out
}

/// Partitioned EDF run where `failed_proc` stops at `t_fail` and the
/// backups of its primaries take over from their next release.
pub fn inject_failure(pl: &Placement, ts: &TaskSet, failed_proc: usize, t_fail: TimePoint, horizon: TimePoint) -> Result<Trace> {
    if failed_proc >= pl.processors {
        return Err(Error::InvalidArgument(format!("processor {failed_proc} does not exist (m = {})", pl.processors)));
    }
    let pinning = pl.primaries(ts).ok_or_else(|| Error::InvalidArgument("placement does not cover the task set".into()))?;
    let backups = pl.tasks.iter().filter(|t| t.primary == failed_proc).map(|t| (t.task, t.backup)).collect();
    let cfg = SimConfig {
        pinning: Some(pinning),
        failure: (t_fail < horizon).then_some(FailurePlan { processor: failed_proc, at: t_fail, backups }),
        ..SimConfig::new(Policy::Edf, pl.processors, horizon, 0)
    };
    simulate_with(ts, &cfg)
}
