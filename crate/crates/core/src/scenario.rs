//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "medium",
//!   "processors": 1,
//!   "policy": "super",
//!   "horizon": 250,
//!   "seed": 0,
//!   "tasks": [
//!     { "id": 1, "label": "T1", "kind": "one_shot", "execution_time": 20, "release": 25, "deadline": 150 }
//!   ],
//!   "catastrophes": [
//!     { "id": 5, "label": "CT", "execution_time": 60, "release": 60, "deadline": 120 }
//!   ]
//! }
//! ```
//!
//! An optional `placement` object (`processors` plus a `tasks` list of
//! `{task, primary, backup}`) pins tasks for partitioned runs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::allocation::{Placement, TaskPlacement};
use crate::engine::Policy;
use crate::error::{Error, Result};
use crate::model::{validate_taskset, Criticality, Duration, TaskId, TaskKind, TaskSet, TaskSpec, TimePoint};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub processors: usize,
    pub policy: Policy,
    pub horizon: TimePoint,
    pub seed: u64,
    pub tasks: Vec<TaskSpec>,
    pub catastrophes: Vec<TaskSpec>,
    pub placement: Option<Placement>,
}

impl Scenario {
    /// Normal tasks followed by catastrophe tasks.
    pub fn task_set(&self) -> TaskSet {
        TaskSet::new(self.name.clone(), self.tasks.iter().chain(&self.catastrophes).cloned().collect())
    }

    pub fn pinning(&self) -> Option<Vec<usize>> {
        self.placement.as_ref().and_then(|pl| pl.primaries(&self.task_set()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default = "one")]
    processors: usize,
    #[serde(default = "default_policy")]
    policy: String,
    horizon: TimePoint,
    #[serde(default)]
    seed: u64,
    tasks: Vec<TaskSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    catastrophes: Vec<CatastropheEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    placement: Option<PlacementFile>,
}

fn one() -> usize {
    1
}

fn default_policy() -> String {
    "super".into()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatastropheEntry {
    id: TaskId,
    label: String,
    execution_time: Duration,
    release: TimePoint,
    deadline: TimePoint,
    #[serde(default)]
    criticality: Criticality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    processor: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlacementFile {
    processors: usize,
    tasks: Vec<TaskPlacement>,
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    parse_scenario_str(&text, path)
}

/// Parse scenario text; `origin` is only used in diagnostics.
pub fn parse_scenario_str(text: &str, origin: &Path) -> Result<Scenario> {
    let err = |message: String| Error::Parse { path: origin.to_owned(), message };
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| err(format!("{e}{}", locate_entry(text))))?;
    let policy: Policy = file.policy.parse().map_err(|e: Error| err(e.to_string()))?;
    if file.processors == 0 {
        return Err(err("processors must be at least 1".into()));
    }
    if let Some(t) = file.tasks.iter().find(|t| t.kind == TaskKind::Catastrophe) {
        return Err(err(format!("task {} ({}): catastrophe tasks belong in `catastrophes`", t.id, t.label)));
    }
    let catastrophes: Vec<TaskSpec> = file
        .catastrophes
        .into_iter()
        .map(|c| TaskSpec {
            criticality: c.criticality,
            processor: c.processor,
            ..TaskSpec::catastrophe(c.id.0, &c.label, c.execution_time, c.release, c.deadline)
        })
        .collect();
    let mut scenario = Scenario {
        name: file.name,
        processors: file.processors,
        policy,
        horizon: file.horizon,
        seed: file.seed,
        tasks: file.tasks,
        catastrophes,
        placement: None,
    };
    let ts = scenario.task_set();
    let violations = validate_taskset(&ts);
    if !violations.is_empty() {
        let labels = violations
            .iter()
            .map(|v| format!("{v} ({})", ts.get(v.task).map_or("?", |t| t.label.as_str())))
            .collect::<Vec<_>>();
        return Err(err(labels.join("; ")));
    }
    if let Some(t) = ts.tasks.iter().find(|t| t.release >= scenario.horizon) {
        return Err(err(format!("task {} ({}): release {} is not before horizon {}", t.id, t.label, t.release, scenario.horizon)));
    }
    if let Some(t) = ts.tasks.iter().find(|t| t.processor.is_some_and(|p| p >= scenario.processors)) {
        return Err(err(format!("task {} ({}): processor out of range", t.id, t.label)));
    }
    if let Some(pl) = file.placement {
        let placement = Placement::from_assignments(&ts, pl.processors, pl.tasks).map_err(|e| err(e.to_string()))?;
        let problems = crate::allocation::validate_placement(&placement, &ts);
        if !problems.is_empty() {
            return Err(err(problems.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")));
        }
        if placement.processors > scenario.processors {
            return Err(err(format!("placement uses {} processors, scenario has {}", placement.processors, scenario.processors)));
        }
        scenario.placement = Some(placement);
    }
    Ok(scenario)
}

/// Name the first task entry that fails to deserialize on its own.
fn locate_entry(text: &str) -> String {
    let Ok(Value::Object(root)) = serde_json::from_str::<Value>(text) else {
        return String::new();
    };
    for key in ["tasks", "catastrophes"] {
        let Some(Value::Array(items)) = root.get(key) else { continue };
        for (i, item) in items.iter().enumerate() {
            let ok = if key == "tasks" {
                serde_json::from_value::<TaskSpec>(item.clone()).is_ok()
            } else {
                serde_json::from_value::<CatastropheEntry>(item.clone()).is_ok()
            };
            if !ok {
                let label = item.get("label").and_then(Value::as_str).unwrap_or("?");
                return format!(" (in {key}[{i}], label `{label}`)");
            }
        }
    }
    String::new()
}

pub fn scenario_to_json(s: &Scenario) -> String {
    let file = ScenarioFile {
        name: s.name.clone(),
        processors: s.processors,
        policy: s.policy.name().to_owned(),
        horizon: s.horizon,
        seed: s.seed,
        tasks: s.tasks.clone(),
        catastrophes: s
            .catastrophes
            .iter()
            .map(|c| CatastropheEntry {
                id: c.id,
                label: c.label.clone(),
                execution_time: c.execution_time,
                release: c.release,
                deadline: c.deadline,
                criticality: c.criticality,
                processor: c.processor,
            })
            .collect(),
        placement: s.placement.as_ref().map(|p| PlacementFile { processors: p.processors, tasks: p.tasks.clone() }),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("scenario serializes");
    out.push('\n');
    out
}

pub fn write_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario_to_json(s)).map_err(|source| Error::Io { path: path.to_owned(), source })
}

/// Shipped golden scenario: the four-task medium system.
pub const MEDIUM_SCENARIO: &str = include_str!("../scenarios/medium.scenario");
/// Shipped golden scenario: the ten-task large system.
pub const LARGE_SCENARIO: &str = include_str!("../scenarios/large.scenario");

pub fn medium() -> Scenario {
    parse_scenario_str(MEDIUM_SCENARIO, Path::new("medium.scenario")).expect("shipped scenario is valid")
}

pub fn large() -> Scenario {
    parse_scenario_str(LARGE_SCENARIO, Path::new("large.scenario")).expect("shipped scenario is valid")
}
