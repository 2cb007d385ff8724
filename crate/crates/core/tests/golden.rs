mod common;

use catsched::engine::{count_partition, demand_in_interval};
use catsched::experiment::run_scenario;
use catsched::metrics::{avg_miss_per_window, n_late, MISS_WINDOW};
use catsched::report::{render_gantt, render_gantt_with, trace_csv};
use catsched::scenario::{self, Scenario};
use catsched::{Policy, Trace};
use common::{oracle_misses, oracle_run, OraclePolicy};

const MEDIUM_SUPER_CSV: &str = include_str!("golden/medium_super.csv");
const LARGE_SUPER_CSV: &str = include_str!("golden/large_super.csv");

fn run(s: &Scenario, p: Policy) -> Trace {
    run_scenario(s, p).unwrap()
}

fn no_ct(s: &Scenario) -> Scenario {
    Scenario { catastrophes: Vec::new(), ..s.clone() }
}

fn completions(tr: &Trace) -> Vec<(String, u64)> {
    let mut v: Vec<_> = tr.jobs.iter().filter_map(|j| j.completion.map(|c| (j.name(), c))).collect();
    v.sort();
    v
}

fn oracle_completions(s: &Scenario, p: OraclePolicy) -> Vec<(String, u64)> {
    let mut v: Vec<_> = oracle_run(&s.task_set(), p, s.horizon)
        .into_iter()
        .filter_map(|j| j.completion.map(|c| (j.name(), c)))
        .collect();
    v.sort();
    v
}

#[test]
fn super_traces_match_committed_csv() {
    assert_eq!(trace_csv(&run(&scenario::medium(), Policy::SUPER)), MEDIUM_SUPER_CSV);
    assert_eq!(trace_csv(&run(&scenario::large(), Policy::SUPER)), LARGE_SUPER_CSV);
}

#[test]
fn medium_trace_rows() {
    let lines: Vec<&str> = MEDIUM_SUPER_CSV.lines().collect();
    assert_eq!(lines[0], "time,kind,job,processor,detail");
    assert!(lines.contains(&"180,discard,T3#0,0,infeasible"));
    assert!(lines.contains(&"60,mode_switch,CT#0,0,super_catastrophe"));
}

#[test]
fn schedules_agree_with_oracle() {
    for s in [scenario::medium(), scenario::large()] {
        for (p, op) in [(Policy::Edf, OraclePolicy::Edf), (Policy::SUPER, OraclePolicy::Super)] {
            for sc in [s.clone(), no_ct(&s)] {
                let tr = run(&sc, p);
                assert_eq!(completions(&tr), oracle_completions(&sc, op), "{} {p}", sc.name);
                let mut missed: Vec<String> = tr.missed_jobs().map(|j| j.name()).collect();
                missed.sort();
                assert_eq!(missed, oracle_misses(&oracle_run(&sc.task_set(), op, sc.horizon), sc.horizon));
            }
        }
    }
}

#[test]
fn discard_instants_agree_with_oracle() {
    for s in [scenario::medium(), scenario::large()] {
        let tr = run(&s, Policy::SUPER);
        let mut ours: Vec<_> = tr.jobs.iter().filter_map(|j| j.discarded.map(|d| (j.name(), d.0))).collect();
        ours.sort();
        let mut theirs: Vec<_> = oracle_run(&s.task_set(), OraclePolicy::Super, s.horizon)
            .into_iter()
            .filter_map(|j| j.discarded.map(|d| (j.name(), d)))
            .collect();
        theirs.sort();
        assert_eq!(ours, theirs);
    }
}

#[test]
fn medium_gantt_shows_ct_block() {
    let tr = run(&scenario::medium(), Policy::SUPER);
    let chart = render_gantt_with(&tr, 1);
    let ct = chart.lines().find(|l| l.starts_with("CT")).unwrap();
    let cells = &ct[ct.find('|').unwrap() + 1..];
    let ran: Vec<usize> = cells.char_indices().filter(|&(_, c)| c == '#').map(|(i, _)| i).collect();
    assert_eq!(ran.first(), Some(&60));
    assert_eq!(ran.last(), Some(&119));
    assert_eq!(ran.len(), 60);
    assert_eq!(render_gantt(&tr), render_gantt(&tr));
}

#[test]
fn large_baseline_gantt_splits_t6_around_ct() {
    let tr = run(&scenario::large(), Policy::Edf);
    let chart = render_gantt_with(&tr, 1);
    let row = |label: &str| {
        let l = chart.lines().find(|l| l.split_whitespace().next() == Some(label)).unwrap();
        l[l.find('|').unwrap() + 1..].to_owned()
    };
    let t6 = row("T6");
    let ct = row("CT");
    assert_eq!(&ct[60..120], "#".repeat(60));
    assert!(t6[..60].contains('#'));
    assert!(t6[120..].contains('#'));
    assert!(!t6[60..120].contains('#'));
}

#[test]
fn empty_trace_gives_empty_chart_and_header_only_csv() {
    let ts = catsched::TaskSet::default();
    let tr = catsched::simulate(&ts, Policy::Edf, 1, 10, 0).unwrap();
    assert_eq!(render_gantt(&tr), "");
    assert_eq!(trace_csv(&tr), "time,kind,job,processor,detail\n");
}

#[test]
fn medium_partition_counts() {
    let with_ct = run(&scenario::medium(), Policy::SUPER);
    let c = count_partition(&with_ct, [0, 60, 250]).unwrap();
    assert_eq!(c.total_scheduled(), 5);
    assert_eq!(c.total_executed(), 4);
    assert_eq!(c.scheduled, [4, 1, 0]);
    assert_eq!(c.total_dispatched(), 4);
    let without = run(&no_ct(&scenario::medium()), Policy::Edf);
    assert_eq!(count_partition(&without, [0, 60, 250]).unwrap().total_executed(), 4);
    assert!(count_partition(&with_ct, [60, 0, 250]).is_err());
}

#[test]
fn medium_demand_example() {
    // Baseline EDF with the catastrophe: at t = 120, T3 (60) and T4 (50) and
    // T1 (10) are still owed, all due by 200.
    let tr = run(&scenario::medium(), Policy::Edf);
    let expected: u64 = tr
        .jobs
        .iter()
        .filter(|j| j.release < 200 && j.deadline <= 200)
        .map(|j| j.execution_time - j.service_before(120.max(j.release)))
        .filter(|&r| r > 0)
        .sum();
    assert_eq!(expected, 120);
    assert_eq!(demand_in_interval(&tr, 120, 200), 120);
}

#[test]
fn medium_miss_lands_in_expected_window() {
    let tr = run(&scenario::medium(), Policy::SUPER);
    let w = avg_miss_per_window(&tr, MISS_WINDOW);
    assert_eq!(w.len(), 10);
    let hits: Vec<usize> = w.iter().filter(|s| s.misses > 0).map(|s| s.index).collect();
    assert_eq!(hits, vec![7]);
    assert_eq!((w[7].start, w[7].end), (175, 200));
    assert!((w[9].running_average - 0.1).abs() < 1e-12);
}

#[test]
fn large_baseline_late_count() {
    let tr = run(&scenario::large(), Policy::Edf);
    assert_eq!(n_late(&tr), 9);
    let oracle = oracle_run(&scenario::large().task_set(), OraclePolicy::Edf, 400);
    let late = oracle.iter().filter(|j| j.completion.is_some_and(|c| c > j.deadline)).count();
    assert_eq!(late, 9);
}
