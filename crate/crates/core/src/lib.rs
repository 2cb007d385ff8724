//! Discrete-event simulation and analysis of hard real-time scheduling
//! under catastrophic overload.
//!
//! The [`engine`] runs preemptive EDF, RM, or the catastrophe-aware super
//! scheduler ([`supersched`]) on partitioned processors and records a
//! complete, deterministic [`Trace`]. [`metrics`] turns traces into success
//! rates and stability verdicts, [`allocation`] places primary/backup
//! replicas, and [`taskgen`] produces seeded random task sets.

pub mod allocation;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod report;
pub mod scalar;
pub mod scenario;
pub mod supersched;
pub mod taskgen;

pub use engine::{simulate, simulate_with, Policy, SimConfig, Trace};
pub use error::{Error, Result};
pub use model::{Duration, Job, JobId, TaskId, TaskKind, TaskSet, TaskSpec, TimePoint};
pub use scalar::{Rational, Real};

/// Polynomial model in double precision.
pub type Poly = metrics::PolyModel<f64>;
/// Polynomial model in single precision.
pub type Poly32 = metrics::PolyModel<f32>;
/// Least-squares fit result in double precision.
pub type PolyFit = metrics::PolyFit<f64>;
