//! Interval accounting over finished traces.

use crate::error::{Error, Result};
use crate::model::{Duration, TimePoint};

use super::Trace;

/// Σ a_i over jobs that still need the processor in `(t, t1]` and must be
/// done by `t1`.
///
/// A job contributes when it was released before `t1`, has its deadline at
/// or before `t1`, had not completed by `t`, and was not discarded before
/// `t`. Its contribution is the work left at `max(t, release)`. If the
/// result exceeds `t1 - t` on a single processor, some contributing job
/// cannot have met its deadline.
pub fn demand_in_interval(tr: &Trace, t: TimePoint, t1: TimePoint) -> Duration {
    if t >= t1 {
        return 0;
    }
    tr.jobs
        .iter()
        .filter(|j| j.release < t1 && j.deadline <= t1)
        .filter(|j| j.completion.is_none_or(|c| c > t))
        .filter(|j| j.discarded.is_none_or(|(d, _)| d >= t))
        .map(|j| j.remaining_at(t.max(j.release)))
        .sum()
}

/// Per-segment job counts over `[t0, t)`, `[t, t1)` and `[t1, horizon]`.
///
/// `scheduled` (CS) counts jobs admitted to the scheduler, by release
/// instant; `dispatched` counts first dispatches; `executed` (CE) counts
/// completions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PartitionCounts {
    pub scheduled: [usize; 3],
    pub dispatched: [usize; 3],
    pub executed: [usize; 3],
}

impl PartitionCounts {
    pub fn total_scheduled(&self) -> usize {
        self.scheduled.iter().sum()
    }

    pub fn total_dispatched(&self) -> usize {
        self.dispatched.iter().sum()
    }

    pub fn total_executed(&self) -> usize {
        self.executed.iter().sum()
    }
}

pub fn count_partition(tr: &Trace, cuts: [TimePoint; 3]) -> Result<PartitionCounts> {
    let [t0, t, t1] = cuts;
    if !(t0 <= t && t <= t1 && t1 <= tr.horizon) {
        return Err(Error::InvalidArgument(format!(
            "cuts must satisfy t0 <= t <= t1 <= horizon ({t0}, {t}, {t1}, {})",
            tr.horizon
        )));
    }
    let segment = |x: TimePoint| {
        if x < t0 {
            None
        } else if x < t {
            Some(0)
        } else if x < t1 {
            Some(1)
        } else {
            Some(2)
        }
    };
    let mut out = PartitionCounts::default();
    for j in &tr.jobs {
        if let Some(s) = segment(j.release) {
            out.scheduled[s] += 1;
        }
        if let Some(s) = j.first_dispatch().and_then(segment) {
            out.dispatched[s] += 1;
        }
        if let Some(s) = j.completion.and_then(segment) {
            out.executed[s] += 1;
        }
    }
    Ok(out)
}
