//! Canned experiments: golden-table comparisons, load sweeps, dispersion.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::engine::{simulate_with, Policy, SimConfig, Trace};
use crate::error::{Error, Result};
use crate::metrics::{poly_fit, MetricsReport, PolyModel};
use crate::model::default_horizon;
use crate::report::{render_gantt, trace_csv};
use crate::scalar::Rational;
use crate::scenario::{self, Scenario};
use crate::supersched::dispersion_sweep;
use crate::taskgen::{generate, inject_catastrophe, GenSpec};

pub fn run_scenario(s: &Scenario, policy: Policy) -> Result<Trace> {
    let cfg = SimConfig { pinning: s.pinning(), ..SimConfig::new(policy, s.processors, s.horizon, s.seed) };
    simulate_with(&s.task_set(), &cfg)
}

/// Side-by-side baseline EDF and super-scheduler outcome for one scenario.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub scenario: String,
    pub baseline: MetricsReport,
    pub superscheduler: MetricsReport,
    pub baseline_missed: Vec<String>,
    pub super_missed: Vec<String>,
    pub baseline_trace: Trace,
    pub super_trace: Trace,
}

impl Comparison {
    /// misses(super) <= misses(baseline).
    pub fn dominance_holds(&self) -> bool {
        self.superscheduler.missed <= self.baseline.missed
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario: {}", self.scenario)?;
        writeln!(f, "{:<8} {:>8} {:>6} {:>5} {:>9} {:>9} {:>6}  missed jobs", "policy", "released", "missed", "late", "discarded", "N_success", "stable")?;
        for (m, missed) in [(&self.baseline, &self.baseline_missed), (&self.superscheduler, &self.super_missed)] {
            writeln!(
                f,
                "{:<8} {:>8} {:>6} {:>5} {:>9} {:>9} {:>6}  {}",
                m.policy,
                m.released,
                m.missed,
                m.late,
                m.discarded,
                m.n_success.to_string(),
                if m.stable { "yes" } else { "no" },
                missed.join(" ")
            )?;
        }
        write!(
            f,
            "dominance misses({}) <= misses({}): {}",
            self.superscheduler.policy,
            self.baseline.policy,
            if self.dominance_holds() { "holds" } else { "VIOLATED" }
        )
    }
}

pub fn compare(s: &Scenario) -> Result<Comparison> {
    compare_policies(s, Policy::SUPER)
}

pub fn compare_policies(s: &Scenario, super_policy: Policy) -> Result<Comparison> {
    let baseline_trace = run_scenario(s, Policy::Edf)?;
    let super_trace = run_scenario(s, super_policy)?;
    let names = |tr: &Trace| tr.missed_jobs().map(|j| j.name()).collect::<Vec<_>>();
    Ok(Comparison {
        scenario: s.name.clone(),
        baseline: MetricsReport::from_trace(&baseline_trace),
        superscheduler: MetricsReport::from_trace(&super_trace),
        baseline_missed: names(&baseline_trace),
        super_missed: names(&super_trace),
        baseline_trace,
        super_trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Medium,
    Large,
    Sweep,
    Dispersion,
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "medium" => Ok(Experiment::Medium),
            "large" => Ok(Experiment::Large),
            "sweep" => Ok(Experiment::Sweep),
            "dispersion" => Ok(Experiment::Dispersion),
            other => Err(Error::InvalidArgument(format!("unknown experiment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
    /// Assertion-style findings (e.g. a dominance violation).
    pub findings: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| Error::Io { path: path.clone(), source })?;
        self.files.push(path);
        Ok(())
    }
}

pub fn run_experiment(which: Experiment, out_dir: impl AsRef<Path>) -> Result<ExperimentOutput> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_owned(), source })?;
    let mut w = Writer { dir, files: Vec::new() };
    let (summary, findings) = match which {
        Experiment::Medium => golden(&mut w, &scenario::medium())?,
        Experiment::Large => golden(&mut w, &scenario::large())?,
        Experiment::Sweep => sweep(&mut w)?,
        Experiment::Dispersion => dispersion(&mut w)?,
    };
    Ok(ExperimentOutput { files: w.files, summary, findings })
}

fn golden(w: &mut Writer<'_>, s: &Scenario) -> Result<(String, Vec<String>)> {
    let cmp = compare(s)?;
    w.put(&format!("{}_edf.csv", s.name), &trace_csv(&cmp.baseline_trace))?;
    w.put(&format!("{}_super.csv", s.name), &trace_csv(&cmp.super_trace))?;
    w.put(
        &format!("{}_metrics.csv", s.name),
        &format!("{}\n{}\n{}\n", MetricsReport::CSV_HEADER, cmp.baseline.csv_row(), cmp.superscheduler.csv_row()),
    )?;
    w.put(&format!("{}_gantt.txt", s.name), &render_gantt(&cmp.super_trace))?;
    let text = format!("{cmp}\n");
    w.put(&format!("{}_comparison.txt", s.name), &text)?;
    let mut findings = Vec::new();
    if !cmp.dominance_holds() {
        findings.push(format!("{}: super misses {} > baseline misses {}", s.name, cmp.superscheduler.missed, cmp.baseline.missed));
    }
    if !cmp.superscheduler.stable {
        findings.push(format!("{}: super scheduler N_success {} below threshold", s.name, cmp.superscheduler.n_success));
    }
    Ok((text, findings))
}

pub const SWEEP_TASK_COUNTS: std::ops::RangeInclusive<usize> = 5..=12;
pub const SWEEP_SEEDS: u64 = 40;

/// Baseline and super misses for one random catastrophe scenario.
pub fn random_catastrophe_case(n: usize, utilization: Rational, seed: u64) -> Result<(usize, usize)> {
    let base = generate(&GenSpec::new(n, utilization, seed))?;
    let ts = inject_catastrophe(&base, None, seed)?;
    let horizon = default_horizon(&ts)?;
    let run = |p| simulate_with(&ts, &SimConfig::new(p, 1, horizon, seed)).map(|t| t.missed());
    Ok((run(Policy::Edf)?, run(Policy::SUPER)?))
}

fn sweep(w: &mut Writer<'_>) -> Result<(String, Vec<String>)> {
    let util = Rational::new(4, 5);
    let cases: Vec<(usize, u64)> = SWEEP_TASK_COUNTS.flat_map(|n| (0..SWEEP_SEEDS).map(move |s| (n, s))).collect();
    let results: BTreeMap<(usize, u64), (usize, usize)> = cases
        .par_iter()
        .map(|&(n, s)| random_catastrophe_case(n, util, 1000 * n as u64 + s).map(|r| ((n, s), r)))
        .collect::<Result<_>>()?;

    let mut raw = String::from("n,seed,edf_missed,super_missed\n");
    let mut findings = Vec::new();
    for (&(n, s), &(edf, sup)) in &results {
        let _ = writeln!(raw, "{n},{s},{edf},{sup}");
        if sup > edf {
            findings.push(format!("sweep n={n} seed={s}: super misses {sup} > baseline {edf}"));
        }
    }
    w.put("sweep.csv", &raw)?;

    let mut summary = String::from("n,mean_edf_missed,mean_super_missed\n");
    let mut points = Vec::new();
    for n in SWEEP_TASK_COUNTS {
        let rows: Vec<_> = results.range((n, 0)..(n + 1, 0)).map(|(_, v)| *v).collect();
        let k = rows.len() as f64;
        let edf = rows.iter().map(|r| r.0 as f64).sum::<f64>() / k;
        let sup = rows.iter().map(|r| r.1 as f64).sum::<f64>() / k;
        let _ = writeln!(summary, "{n},{edf:.4},{sup:.4}");
        points.push((n as f64, sup));
    }
    w.put("sweep_summary.csv", &summary)?;

    let fit = poly_fit(&points)?;
    let reference = PolyModel::<f64>::reference_miss_curve();
    let mut poly = String::from("# least-squares degree-4 fit of mean super-scheduler misses vs task count\n");
    let _ = writeln!(poly, "coefficients (x^4..x^0): {:?}", fit.model.coeffs);
    let _ = writeln!(poly, "sse: {:.6e}  max |residual|: {:.6e}", fit.sse, fit.max_abs_residual);
    let _ = writeln!(poly, "x,observed,fitted,reference_curve");
    for &(x, y) in &points {
        let _ = writeln!(poly, "{x},{y:.4},{:.4},{:.4}", fit.model.eval(x), reference.eval(x));
    }
    w.put("sweep_poly.txt", &poly)?;
    Ok((format!("{summary}\n{poly}"), findings))
}

pub const DISPERSION_SPREADS: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];

fn dispersion(w: &mut Writer<'_>) -> Result<(String, Vec<String>)> {
    let base = scenario::medium().task_set().without_catastrophes();
    let reports = dispersion_sweep(&base, &DISPERSION_SPREADS, 200, 7)?;
    let mut csv = String::from("spread,trials,trials_with_miss,miss_fraction,mean_n_success\n");
    for r in &reports {
        let _ = writeln!(
            csv,
            "{},{},{},{:.4},{:.4}",
            r.spread,
            r.trials,
            r.trials_with_miss,
            r.miss_fraction().unwrap_or(0.0),
            r.mean_n_success.unwrap_or(1.0)
        );
    }
    let monotone = reports.windows(2).all(|p| p[0].miss_fraction() <= p[1].miss_fraction());
    w.put("dispersion.csv", &csv)?;
    let summary = format!("{csv}miss fraction non-decreasing in spread on this grid: {monotone}\n");
    Ok((summary, Vec::new()))
}
