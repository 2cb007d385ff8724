use crate::error::{Error, Result};
use crate::model::{Job, TimePoint};

/// Earliest absolute deadline wins; ties go to the lower task id, then the
/// lower instance index.
pub fn edf_pick<'a>(ready: &[&'a Job], _now: TimePoint) -> Option<&'a Job> {
    ready.iter().copied().min_by_key(|j| (j.abs_deadline, j.id))
}

/// Shortest period wins; ties go to the lower task id.
pub fn rm_pick<'a>(ready: &[&'a Job], _now: TimePoint) -> Result<Option<&'a Job>> {
    let mut best: Option<(&Job, u64)> = None;
    for &j in ready {
        let p = j.period.ok_or(Error::MissingPeriod(j.id.task))?;
        if best.is_none_or(|(b, bp)| (p, j.id) < (bp, b.id)) {
            best = Some((j, p));
        }
    }
    Ok(best.map(|(j, _)| j))
}
