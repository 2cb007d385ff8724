//! Independent reference models used to check the engine.
//!
//! The simulator here steps one tick at a time and shares no code with the
//! library engine beyond the task-set types.

#![allow(dead_code)]

use catsched::model::{Criticality, TaskKind, TaskSet};
use catsched::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OraclePolicy {
    Edf,
    Rm,
    /// EDF order plus discard of infeasible jobs at every decision instant.
    Super,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleJob {
    pub task: u32,
    pub label: String,
    pub instance: u32,
    pub release: u64,
    pub deadline: u64,
    pub period: u64,
    pub hard: bool,
    pub remaining: u64,
    pub completion: Option<u64>,
    pub discarded: Option<u64>,
}

impl OracleJob {
    pub fn name(&self) -> String {
        format!("{}#{}", self.label, self.instance)
    }

    pub fn is_miss(&self, horizon: u64) -> bool {
        if !self.hard {
            return false;
        }
        match (self.completion, self.discarded) {
            (Some(c), _) => c > self.deadline,
            (None, Some(_)) => true,
            (None, None) => self.deadline <= horizon,
        }
    }
}

/// Periodic and one-shot/catastrophe tasks only.
pub fn oracle_run(ts: &TaskSet, policy: OraclePolicy, horizon: u64) -> Vec<OracleJob> {
    let mut jobs = Vec::new();
    for t in &ts.tasks {
        let hard = t.criticality != Criticality::Optional;
        let mk = |instance: u32, release: u64, deadline: u64, period: u64| OracleJob {
            task: t.id.0,
            label: t.label.clone(),
            instance,
            release,
            deadline,
            period,
            hard,
            remaining: t.execution_time,
            completion: None,
            discarded: None,
        };
        match t.kind {
            TaskKind::Periodic => {
                let p = t.period.unwrap();
                let mut k = 0;
                while t.release + k * p < horizon {
                    let r = t.release + k * p;
                    jobs.push(mk(k as u32, r, r + t.deadline, p));
                    k += 1;
                }
            }
            TaskKind::OneShot | TaskKind::Catastrophe => {
                if t.release < horizon {
                    jobs.push(mk(0, t.release, t.deadline, u64::MAX));
                }
            }
            TaskKind::Sporadic => panic!("oracle does not model sporadic arrivals"),
        }
    }
    let mut completed_last_tick = false;
    for now in 0..horizon {
        let released_now = jobs.iter().any(|j| j.release == now);
        let decision = released_now || completed_last_tick;
        completed_last_tick = false;
        let live = |j: &OracleJob| j.release <= now && j.completion.is_none() && j.discarded.is_none();
        if policy == OraclePolicy::Super && decision {
            for j in jobs.iter_mut().filter(|j| live(j)) {
                if now + j.remaining > j.deadline {
                    j.discarded = Some(now);
                }
            }
        }
        let pick = jobs
            .iter()
            .enumerate()
            .filter(|(_, j)| live(j))
            .min_by_key(|(_, j)| match policy {
                OraclePolicy::Rm => (j.period, j.task, j.instance),
                _ => (j.deadline, j.task, j.instance),
            })
            .map(|(i, _)| i);
        if let Some(i) = pick {
            jobs[i].remaining -= 1;
            if jobs[i].remaining == 0 {
                jobs[i].completion = Some(now + 1);
                completed_last_tick = true;
            }
        }
    }
    jobs
}

pub fn oracle_misses(jobs: &[OracleJob], horizon: u64) -> Vec<String> {
    let mut v: Vec<String> = jobs.iter().filter(|j| j.is_miss(horizon)).map(OracleJob::name).collect();
    v.sort();
    v
}

/// Exact minimum processor count for primary/backup placement with each
/// processor's committed load at most 1.
pub fn exhaustive_min_processors(loads: &[Rational]) -> usize {
    if loads.is_empty() {
        return 0;
    }
    let mut sorted = loads.to_vec();
    sorted.sort_by(|a, b| b.cmp(a));
    let mut m = 2;
    loop {
        let mut bins = vec![Rational::from_integer(0); m];
        if place(&sorted, 0, &mut bins, 0) {
            return m;
        }
        m += 1;
    }
}

fn place(items: &[Rational], i: usize, bins: &mut [Rational], used: usize) -> bool {
    if i == items.len() {
        return true;
    }
    let u = items[i];
    let one = Rational::from_integer(1);
    // only the first unused bin is tried, to skip symmetric assignments
    let limit = (used + 2).min(bins.len());
    for a in 0..limit {
        for b in 0..limit {
            if a == b || bins[a] + u > one || bins[b] + u > one {
                continue;
            }
            bins[a] += u;
            bins[b] += u;
            let now_used = used.max(a + 1).max(b + 1);
            let ok = now_used <= used + 2 && place(items, i + 1, bins, now_used);
            bins[a] -= u;
            bins[b] -= u;
            if ok {
                return true;
            }
        }
    }
    false
}
