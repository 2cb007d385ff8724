//! Success rate, late count, stability verdict and windowed miss averages.

use std::fmt;

use crate::engine::{JobOutcome, Trace};
use crate::model::{Criticality, Duration, TimePoint};
use crate::scalar::{to_f64, Rational};

mod poly;

pub use poly::{poly_eval, poly_fit, PolyFit, PolyModel, POLY_DEGREE};

/// Minimum success rate for a run to be called stable.
pub const STABILITY_THRESHOLD: Rational = Rational::new_raw(7, 10);

/// Width of the miss-averaging window, in ticks.
pub const MISS_WINDOW: Duration = 25;

/// `(N - n_M) / N`, defined as 1 when nothing was released.
pub fn n_success(tr: &Trace) -> Rational {
    let n = tr.released() as u64;
    if n == 0 {
        return Rational::from_integer(1);
    }
    Rational::new(n - tr.missed() as u64, n)
}

/// Hard and soft jobs that ran to completion after their deadline.
pub fn n_late(tr: &Trace) -> usize {
    tr.jobs
        .iter()
        .filter(|j| j.criticality != Criticality::Optional && j.outcome() == JobOutcome::Late)
        .count()
}

pub fn stability_check(rate: Rational) -> bool {
    rate >= STABILITY_THRESHOLD
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowStat {
    pub index: usize,
    pub start: TimePoint,
    pub end: TimePoint,
    pub misses: usize,
    /// Mean misses per window over windows `0..=index`.
    pub running_average: f64,
}

/// Miss events (late completions and counted discards) per half-open
/// window `[k·w, (k+1)·w)`. An event exactly at the horizon lands in the
/// last window.
pub fn avg_miss_per_window(tr: &Trace, window: Duration) -> Vec<WindowStat> {
    assert!(window > 0, "window must be positive");
    let count = tr.horizon.div_ceil(window).max(1) as usize;
    let mut misses = vec![0usize; count];
    for t in tr.jobs.iter().filter_map(|j| j.miss_instant()) {
        let k = ((t / window) as usize).min(count - 1);
        misses[k] += 1;
    }
    let mut total = 0;
    misses
        .into_iter()
        .enumerate()
        .map(|(index, m)| {
            total += m;
            let start = index as u64 * window;
            WindowStat {
                index,
                start,
                end: (start + window).min(tr.horizon.max(start + 1)),
                misses: m,
                running_average: total as f64 / (index + 1) as f64,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub policy: String,
    pub released: usize,
    pub missed: usize,
    pub late: usize,
    pub discarded: usize,
    pub n_success: Rational,
    pub stable: bool,
    pub windows: Vec<WindowStat>,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "policy,released,missed,late,discarded,n_success,n_success_value,stable";

    pub fn from_trace(tr: &Trace) -> Self {
        let rate = n_success(tr);
        MetricsReport {
            policy: tr.policy.clone(),
            released: tr.released(),
            missed: tr.missed(),
            late: n_late(tr),
            discarded: tr.discarded(),
            n_success: rate,
            stable: stability_check(rate),
            windows: avg_miss_per_window(tr, MISS_WINDOW),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{}",
            self.policy,
            self.released,
            self.missed,
            self.late,
            self.discarded,
            self.n_success,
            to_f64(&self.n_success),
            self.stable
        )
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "policy:          {}", self.policy)?;
        writeln!(f, "released (N):    {}", self.released)?;
        writeln!(f, "missed (n_M):    {}", self.missed)?;
        writeln!(f, "late (N_late):   {}", self.late)?;
        writeln!(f, "discarded:       {}", self.discarded)?;
        writeln!(f, "N_success:       {} ({:.4})", self.n_success, to_f64(&self.n_success))?;
        writeln!(f, "stable:          {} (threshold {})", if self.stable { "yes" } else { "no" }, STABILITY_THRESHOLD)?;
        write!(f, "misses per {MISS_WINDOW}-tick window:")?;
        for w in &self.windows {
            write!(f, " {}", w.misses)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_threshold_is_inclusive() {
        assert!(stability_check(Rational::new(4, 5)));
        assert!(stability_check(Rational::new(7, 10)));
        assert!(!stability_check(Rational::new(1, 2)));
        assert!(stability_check(Rational::new(9, 11)));
    }

    #[test]
    fn empty_trace_is_vacuously_successful() {
        let tr = Trace {
            policy: "edf".into(),
            seed: 0,
            horizon: 100,
            processors: 1,
            tasks: vec![],
            events: vec![],
            jobs: vec![],
        };
        assert_eq!(n_success(&tr), Rational::from_integer(1));
        assert_eq!(n_late(&tr), 0);
        let w = avg_miss_per_window(&tr, 25);
        assert_eq!(w.len(), 4);
        assert!(w.iter().all(|s| s.misses == 0 && s.running_average == 0.0));
        assert_eq!(avg_miss_per_window(&tr, 1000).len(), 1);
    }
}
