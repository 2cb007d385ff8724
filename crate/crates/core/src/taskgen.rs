//! Seeded generation of implicit-deadline periodic task sets.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{simulate, Policy};
use crate::error::{Error, Result};
use crate::model::{hyperperiod, lcm_of, per_task_feasible, utilization, Duration, TaskId, TaskKind, TaskSet, TaskSpec, TimePoint};
use crate::scalar::{to_f64, Rational};

/// Smallest task count a generated set may have.
pub const MIN_TASKS: usize = 5;

/// Period pool with a small hyperperiod (160).
pub const DEFAULT_PERIOD_POOL: [Duration; 5] = [10, 20, 40, 80, 160];

/// Upper bound on the hyperperiod for which feasibility is cross-checked by simulation.
pub const MAX_VERIFY_HYPERPERIOD: Duration = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSpec {
    pub n: usize,
    pub utilization: Rational,
    pub period_pool: Vec<Duration>,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(n: usize, utilization: Rational, seed: u64) -> Self {
        GenSpec { n, utilization, period_pool: DEFAULT_PERIOD_POOL.to_vec(), seed }
    }
}

/// UUniFast split of `total` into `n` shares.
fn uunifast(rng: &mut impl Rng, n: usize, total: f64) -> Vec<f64> {
    let mut shares = Vec::with_capacity(n);
    let mut rest = total;
    for i in 1..n {
        let next = rest * rng.gen::<f64>().powf(1.0 / (n - i) as f64);
        shares.push(rest - next);
        rest = next;
    }
    shares.push(rest);
    shares
}

/// Generate `n` periodic tasks with `d = P` whose exact utilization is at most 1.
pub fn generate(spec: &GenSpec) -> Result<TaskSet> {
    if spec.n < MIN_TASKS {
        return Err(Error::InvalidArgument(format!("task count must be at least {MIN_TASKS}, got {}", spec.n)));
    }
    let zero = Rational::from_integer(0);
    if spec.utilization <= zero || spec.utilization > Rational::from_integer(1) {
        return Err(Error::InvalidArgument(format!("target utilization {} is outside (0, 1]", spec.utilization)));
    }
    if spec.period_pool.is_empty() || spec.period_pool.contains(&0) {
        return Err(Error::InvalidArgument("period pool must be non-empty with positive periods".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let periods: Vec<Duration> =
        (0..spec.n).map(|_| *spec.period_pool.choose(&mut rng).expect("non-empty pool")).collect();
    let shares = uunifast(&mut rng, spec.n, to_f64(&spec.utilization));
    let mut exec: Vec<Duration> =
        shares.iter().zip(&periods).map(|(&u, &p)| ((u * p as f64).round() as Duration).max(1)).collect();

    let total = |exec: &[Duration]| {
        exec.iter().zip(&periods).fold(zero, |acc, (&e, &p)| acc + Rational::new(e, p))
    };
    while total(&exec) > Rational::from_integer(1) {
        let (idx, &e) = exec.iter().enumerate().max_by_key(|&(i, &e)| (e, std::cmp::Reverse(i))).expect("n >= 5");
        if e <= 1 {
            return Err(Error::InvalidArgument(
                "period pool too short: unit execution times already exceed utilization 1".into(),
            ));
        }
        exec[idx] -= 1;
    }

    let tasks = exec
        .iter()
        .zip(&periods)
        .enumerate()
        .map(|(i, (&e, &p))| TaskSpec::periodic(i as u32 + 1, &format!("T{}", i + 1), e, p))
        .collect();
    Ok(TaskSet::new(format!("gen-n{}-s{}", spec.n, spec.seed), tasks))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdfVerdict {
    pub feasible: bool,
    pub utilization: Rational,
    /// Whether a one-hyperperiod simulation confirmed the verdict.
    pub simulated: bool,
}

/// `U <= 1`, cross-checked by one miss-free EDF hyperperiod when the
/// hyperperiod is small enough to simulate.
pub fn verify_edf_feasible(ts: &TaskSet) -> Result<EdfVerdict> {
    let u = utilization(ts)?;
    if u > Rational::from_integer(1) {
        return Ok(EdfVerdict { feasible: false, utilization: u, simulated: false });
    }
    let h = match hyperperiod(ts) {
        Ok(h) if h <= MAX_VERIFY_HYPERPERIOD => h,
        Ok(_) | Err(Error::HyperperiodOverflow { .. }) => {
            return Ok(EdfVerdict { feasible: true, utilization: u, simulated: false })
        }
        Err(e) => return Err(e),
    };
    let tr = simulate(ts, Policy::Edf, 1, h, 0)?;
    Ok(EdfVerdict { feasible: tr.missed() == 0, utilization: u, simulated: true })
}

/// Explicit catastrophe parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatastropheParams {
    pub execution_time: Duration,
    pub release: TimePoint,
    pub deadline: TimePoint,
}

/// Append one catastrophe task. Without explicit parameters, draws
/// `r ∈ [0, H/2]`, `e ∈ [max e, 2·max e]`, `d = r + 2e`.
pub fn inject_catastrophe(ts: &TaskSet, params: Option<CatastropheParams>, seed: u64) -> Result<TaskSet> {
    let id = TaskId(ts.tasks.iter().map(|t| t.id.0).max().map_or(1, |m| m + 1));
    let p = match params {
        Some(p) => p,
        None => {
            let h = lcm_of(ts.tasks.iter().filter(|t| t.kind == TaskKind::Periodic).filter_map(|t| t.period))?;
            let max_e = ts.tasks.iter().map(|t| t.execution_time).max().unwrap_or(1).max(1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let release = rng.gen_range(0..=h / 2);
            let execution_time = rng.gen_range(max_e..=2 * max_e);
            CatastropheParams { execution_time, release, deadline: release + 2 * execution_time }
        }
    };
    let ct = TaskSpec::catastrophe(id.0, "CT", p.execution_time, p.release, p.deadline);
    if p.execution_time == 0 || !per_task_feasible(&ct) {
        return Err(Error::InvalidTask { task: id, reason: "catastrophe task is individually infeasible".into() });
    }
    let mut out = ts.clone();
    out.tasks.push(ct);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_taskset;

    #[test]
    fn generates_valid_feasible_sets() {
        let spec = GenSpec::new(5, Rational::new(3, 4), 1);
        let ts = generate(&spec).unwrap();
        assert_eq!(ts.len(), 5);
        assert!(validate_taskset(&ts).is_empty());
        assert!(ts.tasks.iter().all(|t| Some(t.deadline) == t.period && spec.period_pool.contains(&t.deadline)));
        let u = utilization(&ts).unwrap();
        assert!(u <= Rational::from_integer(1));
        assert!(verify_edf_feasible(&ts).unwrap().feasible);
        assert_eq!(generate(&spec).unwrap(), ts);
    }

    #[test]
    fn rejects_small_n_and_bad_utilization() {
        assert!(generate(&GenSpec::new(4, Rational::new(1, 2), 0)).is_err());
        assert!(generate(&GenSpec::new(5, Rational::from_integer(0), 0)).is_err());
        assert!(generate(&GenSpec::new(5, Rational::new(11, 10), 0)).is_err());
    }

    #[test]
    fn full_utilization_single_period() {
        let spec = GenSpec { n: 6, utilization: Rational::from_integer(1), period_pool: vec![100], seed: 3 };
        let ts = generate(&spec).unwrap();
        let sum: u64 = ts.tasks.iter().map(|t| t.execution_time).sum();
        assert!(sum <= 100);
        assert!(verify_edf_feasible(&ts).unwrap().feasible);
    }

    #[test]
    fn too_short_pool_is_rejected() {
        let spec = GenSpec { n: 6, utilization: Rational::new(1, 2), period_pool: vec![5], seed: 0 };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn verify_examples() {
        let over = TaskSet::new("o", vec![TaskSpec::periodic(1, "A", 5, 4)]);
        assert!(!verify_edf_feasible(&over).unwrap().feasible);
        let full = TaskSet::new("f", vec![TaskSpec::periodic(1, "A", 3, 4), TaskSpec::periodic(2, "B", 2, 8)]);
        let v = verify_edf_feasible(&full).unwrap();
        assert!(v.feasible && v.simulated);
        assert_eq!(v.utilization, Rational::from_integer(1));
    }

    #[test]
    fn inject_explicit_and_drawn() {
        let base = TaskSet::new(
            "m",
            vec![
                TaskSpec::one_shot(1, "T1", 20, 25, 150),
                TaskSpec::one_shot(2, "T2", 40, 10, 50),
                TaskSpec::one_shot(3, "T3", 60, 50, 200),
                TaskSpec::one_shot(4, "T4", 50, 30, 180),
            ],
        );
        let with = inject_catastrophe(&base, Some(CatastropheParams { execution_time: 60, release: 60, deadline: 120 }), 0)
            .unwrap();
        let ct = with.tasks.last().unwrap();
        assert_eq!((ct.kind, ct.execution_time, ct.release, ct.deadline, ct.id), (TaskKind::Catastrophe, 60, 60, 120, TaskId(5)));

        let zero = CatastropheParams { execution_time: 0, release: 0, deadline: 10 };
        assert!(inject_catastrophe(&base, Some(zero), 0).is_err());
        let tight = CatastropheParams { execution_time: 10, release: 5, deadline: 14 };
        assert!(inject_catastrophe(&base, Some(tight), 0).is_err());

        let gen = generate(&GenSpec::new(6, Rational::new(7, 10), 9)).unwrap();
        for seed in 0..50 {
            let ts = inject_catastrophe(&gen, None, seed).unwrap();
            let ct = ts.tasks.last().unwrap();
            assert!(per_task_feasible(ct));
            assert_eq!(ct.deadline, ct.release + 2 * ct.execution_time);
            assert!(validate_taskset(&ts).is_empty());
        }
    }
}
