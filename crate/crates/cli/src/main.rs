use std::path::{Path, PathBuf};
use std::process::ExitCode;

use catsched::allocation::{allocate_primary_backup, inject_failure, min_processor_lower_bound, validate_placement};
use catsched::experiment::{compare, compare_policies, run_experiment, run_scenario, Experiment};
use catsched::metrics::MetricsReport;
use catsched::model::{default_horizon, utilization, TaskSet};
use catsched::report::{render_gantt, trace_csv, write_trace};
use catsched::scalar::parse_rational;
use catsched::scenario::{parse_scenario, write_scenario, Scenario};
use catsched::taskgen::{generate, GenSpec};
use catsched::{Error, Policy, TimePoint};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "catsched", version, about = "Real-time scheduling simulator with catastrophe handling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy on a scenario and print its metrics.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// edf, rm, super or super-dominant; defaults to the scenario's policy.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        horizon: Option<TimePoint>,
        /// Write the event trace as CSV ("-" for stdout).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print a text Gantt chart.
        #[arg(long)]
        gantt: bool,
    },
    /// Run baseline EDF and the super scheduler side by side.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Write a random periodic scenario.
    Generate {
        #[arg(long)]
        tasks: usize,
        /// Total utilization, e.g. 0.8 or 4/5.
        #[arg(long)]
        util: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Place primary/backup replicas and optionally fail a processor.
    Allocate {
        #[arg(long)]
        scenario: PathBuf,
        /// PROC@T: fail processor PROC at tick T.
        #[arg(long)]
        fail: Option<String>,
    },
    /// Run a canned experiment and write its reports.
    Experiment {
        #[arg(long)]
        which: String,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Outcome {
    Ok,
    Findings(Vec<String>),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Findings(findings)) => {
            for f in findings {
                eprintln!("finding: {f}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<Outcome, Error> {
    match command {
        Command::Simulate { scenario, policy, horizon, trace, gantt } => {
            let mut s = parse_scenario(&scenario)?;
            if let Some(p) = policy {
                s.policy = p.parse()?;
            }
            if let Some(h) = horizon {
                s.horizon = h;
            }
            let tr = run_scenario(&s, s.policy)?;
            match trace.as_deref() {
                Some(p) if p == Path::new("-") => print!("{}", trace_csv(&tr)),
                Some(p) => write_trace(&tr, p)?,
                None => {}
            }
            if gantt {
                print!("{}", render_gantt(&tr));
            }
            if trace.as_deref() != Some(Path::new("-")) {
                println!("{}", MetricsReport::from_trace(&tr));
            }
            Ok(Outcome::Ok)
        }
        Command::Compare { scenario } => {
            let s = parse_scenario(&scenario)?;
            // a scenario that names a super-scheduler variant is compared with that variant
            let cmp = match s.policy {
                Policy::Super(_) => compare_policies(&s, s.policy)?,
                _ => compare(&s)?,
            };
            println!("{cmp}");
            if cmp.dominance_holds() {
                Ok(Outcome::Ok)
            } else {
                Ok(Outcome::Findings(vec![format!(
                    "super scheduler misses {} > baseline misses {}",
                    cmp.superscheduler.missed, cmp.baseline.missed
                )]))
            }
        }
        Command::Generate { tasks, util, seed, out } => {
            let u = parse_rational(&util).ok_or_else(|| Error::InvalidArgument(format!("bad utilization `{util}`")))?;
            let ts = generate(&GenSpec::new(tasks, u, seed))?;
            let s = Scenario {
                name: ts.name.clone(),
                processors: 1,
                policy: Policy::Edf,
                horizon: default_horizon(&ts)?,
                seed,
                tasks: ts.tasks.clone(),
                catastrophes: Vec::new(),
                placement: None,
            };
            write_scenario(&s, &out)?;
            println!("wrote {} ({} tasks, U = {}, horizon {})", out.display(), ts.len(), utilization(&ts)?, s.horizon);
            Ok(Outcome::Ok)
        }
        Command::Allocate { scenario, fail } => {
            let s = parse_scenario(&scenario)?;
            let all = s.task_set();
            let recurring = TaskSet::new(
                all.name.clone(),
                all.tasks.iter().filter(|t| t.rate_period().is_some()).cloned().collect(),
            );
            for t in all.tasks.iter().filter(|t| t.rate_period().is_none()) {
                println!("skipping {} ({}): no period", t.id, t.label);
            }
            let pl = match &s.placement {
                Some(pl) => pl.clone(),
                None => allocate_primary_backup(&recurring)?,
            };
            print!("{pl}");
            println!("lower bound: {}", min_processor_lower_bound(&recurring)?);
            let problems: Vec<String> = validate_placement(&pl, &recurring).iter().map(ToString::to_string).collect();
            if let Some(spec) = fail {
                let (proc, at) = parse_fail(&spec)?;
                let horizon = default_horizon(&recurring)?;
                let tr = inject_failure(&pl, &recurring, proc, at, horizon)?;
                println!("failure of P{proc} at {at}, horizon {horizon}:");
                println!("{}", MetricsReport::from_trace(&tr));
            }
            Ok(if problems.is_empty() { Outcome::Ok } else { Outcome::Findings(problems) })
        }
        Command::Experiment { which, out } => {
            let which: Experiment = which.parse()?;
            let report = run_experiment(which, &out)?;
            print!("{}", report.summary);
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            Ok(if report.findings.is_empty() { Outcome::Ok } else { Outcome::Findings(report.findings) })
        }
    }
}

fn parse_fail(spec: &str) -> Result<(usize, TimePoint), Error> {
    let bad = || Error::InvalidArgument(format!("--fail expects PROC@T, got `{spec}`"));
    let (p, t) = spec.split_once('@').ok_or_else(bad)?;
    let p = p.trim_start_matches(['P', 'p']);
    Ok((p.parse().map_err(|_| bad())?, t.parse().map_err(|_| bad())?))
}
