use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{simulate, Policy};
use crate::error::{Error, Result};
use crate::metrics::n_success;
use crate::model::{default_horizon, TaskSet};
use crate::scalar::to_f64;

/// Outcome of perturbing a tightly packed set by one spread value.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionReport {
    pub spread: f64,
    pub trials: usize,
    pub trials_with_miss: usize,
    pub mean_n_success: Option<f64>,
}

impl DispersionReport {
    pub fn miss_fraction(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.trials_with_miss as f64 / self.trials as f64)
    }
}

fn perturb(v: u64, spread: f64, rng: &mut ChaCha8Rng) -> u64 {
    if spread == 0.0 {
        return v;
    }
    let f = 1.0 + rng.gen_range(-spread..=spread);
    (v as f64 * f).round().max(0.0) as u64
}

/// Re-run `base` under EDF with every execution and release time scaled
/// by an independent factor in `[1 - spread, 1 + spread]`.
///
/// Deadlines stay fixed; perturbed values are clamped so that each task
/// stays individually feasible, so every miss comes from interference.
pub fn dispersion_experiment(base: &TaskSet, spread: f64, trials: usize, seed: u64) -> Result<DispersionReport> {
    if !(0.0..=1.0).contains(&spread) {
        return Err(Error::InvalidArgument(format!("spread {spread} is outside [0, 1]")));
    }
    let base_horizon = default_horizon(base)?;
    let reference = simulate(base, Policy::Edf, 1, base_horizon, seed)?;
    if reference.missed() != 0 {
        return Err(Error::InvalidArgument("base task set is not EDF-feasible".into()));
    }

    let mut with_miss = 0;
    let mut rate_sum = 0.0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let mut ts = base.clone();
        for t in &mut ts.tasks {
            let e = perturb(t.execution_time, spread, &mut rng).max(1);
            let r = perturb(t.release, spread, &mut rng);
            if t.kind.has_absolute_deadline() {
                t.release = r.min(t.deadline - 1);
                t.execution_time = e.min(t.deadline - t.release);
            } else {
                t.release = r;
                t.execution_time = e.min(t.deadline);
            }
        }
        let tr = simulate(&ts, Policy::Edf, 1, default_horizon(&ts)?, seed)?;
        if tr.missed() > 0 {
            with_miss += 1;
        }
        rate_sum += to_f64(&n_success(&tr));
    }
    Ok(DispersionReport {
        spread,
        trials,
        trials_with_miss: with_miss,
        mean_n_success: (trials > 0).then(|| rate_sum / trials as f64),
    })
}

pub fn dispersion_sweep(base: &TaskSet, spreads: &[f64], trials: usize, seed: u64) -> Result<Vec<DispersionReport>> {
    spreads.iter().map(|&s| dispersion_experiment(base, s, trials, seed)).collect()
}
