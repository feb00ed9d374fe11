use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{advance, cfl_dt, SchemeConfig, SimState, StepReport};
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct RunConfig<T> {
    pub scheme: SchemeConfig<T>,
    /// Times in `(t₀, T)` that are landed on exactly and observed.
    pub sample_times: Vec<T>,
    /// Use this step instead of the CFL bound (still clipped to sample times).
    pub fixed_dt: Option<T>,
    /// Additionally observe after every `k`-th accepted step.
    pub observe_every: Option<usize>,
}

impl<T: Real> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            scheme: SchemeConfig::default(),
            sample_times: Vec::new(),
            fixed_dt: None,
            observe_every: None,
        }
    }
}

impl<T: Real> RunConfig<T> {
    /// `count` equispaced sample times `T·k/count`, `k = 1..count`.
    pub fn uniform_samples(mut self, t_final: T, count: usize) -> Self {
        self.sample_times = (1..=count)
            .map(|k| t_final * T::from_usize_lossy(k) / T::from_usize_lossy(count))
            .collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome<T> {
    pub final_state: SimState<T>,
    pub reports: Vec<StepReport<T>>,
    pub steps: usize,
    /// Total number of rejected attempts over the run.
    pub rejected: usize,
}

/// Advances `initial` to exactly `t_final`.
///
/// The observer sees the initial state, every sample time, the final time and, if
/// requested, every `observe_every`-th step, always at strictly increasing times.
pub fn run<T, F>(initial: SimState<T>, t_final: T, cfg: &RunConfig<T>, mut observer: F) -> Result<RunOutcome<T>>
where
    T: Real,
    F: FnMut(&SimState<T>) -> Result<()>,
{
    let t0 = initial.t;
    if !(t_final >= t0) || !t_final.is_finite() {
        return Err(Error::Precondition(format!("final time {t_final} precedes start {t0}")));
    }
    if let Some(dt) = cfg.fixed_dt {
        if !(dt > T::zero()) {
            return Err(Error::Precondition(format!("fixed dt must be positive, got {dt}")));
        }
    }
    let mut targets: Vec<T> = cfg
        .sample_times
        .iter()
        .copied()
        .filter(|&s| s > t0 && s < t_final)
        .collect();
    targets.sort_by(|a, b| a.partial_cmp(b).expect("finite sample times"));
    targets.dedup();
    targets.push(t_final);

    observer(&initial)?;
    let mut state = initial;
    let mut last_observed = t0;
    let mut reports = Vec::new();
    let mut rejected = 0;
    // Relative slack so that round-off never produces a sliver step before a target.
    let sliver = T::lit(1e-9);

    for target in targets {
        if target <= state.t {
            continue;
        }
        while state.t < target {
            let dt = cfg.fixed_dt.unwrap_or_else(|| cfl_dt(&state, &cfg.scheme));
            let remaining = target - state.t;
            let clipped = dt >= remaining * (T::one() - sliver);
            let trial = if clipped { remaining } else { dt };
            let (mut next, report) = advance(&state, trial, &cfg.scheme)?;
            rejected += report.retries;
            let landed = clipped && report.retries == 0;
            if landed {
                next.t = target;
            }
            reports.push(report);
            state = next;
            let periodic = cfg
                .observe_every
                .is_some_and(|k| k > 0 && reports.len() % k == 0);
            if (landed || periodic) && state.t > last_observed {
                observer(&state)?;
                last_observed = state.t;
            }
        }
    }
    let steps = reports.len();
    Ok(RunOutcome {
        final_state: state,
        reports,
        steps,
        rejected,
    })
}

/// Stored snapshots of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub snapshots: Vec<SimState<T>>,
    pub reports: Vec<StepReport<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn times(&self) -> Vec<T> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &SimState<T> {
        self.snapshots.last().expect("trajectory holds at least the initial state")
    }
}

/// Like [`run`] but keeps every observed snapshot.
pub fn run_trajectory<T: Real>(initial: SimState<T>, t_final: T, cfg: &RunConfig<T>) -> Result<Trajectory<T>> {
    let mut snapshots = Vec::new();
    let outcome = run(initial, t_final, cfg, |s| {
        snapshots.push(s.clone());
        Ok(())
    })?;
    Ok(Trajectory {
        snapshots,
        reports: outcome.reports,
    })
}

/// One CSV row per step report.
pub fn write_reports_csv<T: Real + Serialize, W: Write>(reports: &[StepReport<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Field, Grid};
    use crate::params::ModelParams;

    fn steady(c: f64) -> SimState<f64> {
        let g = Grid::<f64>::uniform(2, 8, 1.0).unwrap();
        SimState::new(Field::constant(g, c), Field::constant(g, c), ModelParams::new(1.0, 2, 0.0)).unwrap()
    }

    fn bump() -> SimState<f64> {
        let g = Grid::<f64>::uniform(1, 32, 1.0).unwrap();
        let u = Field::from_fn(g, |x| 1.0 + (-(x[0] - 0.3f64).powi(2) / 0.01).exp());
        let v = Field::from_fn(g, |x| 1.0 + 0.5 * x[0]);
        SimState::new(u, v, ModelParams::new(1.0, 1, 0.0)).unwrap()
    }

    #[test]
    fn zero_horizon_takes_no_steps() {
        let mut seen = 0;
        let out = run(steady(1.0), 0.0, &RunConfig::default(), |_| {
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(seen, 1);
        assert_eq!(out.final_state, steady(1.0));
    }

    #[test]
    fn steady_state_persists() {
        let s = steady(2.0);
        let out = run(s.clone(), 1.0, &RunConfig::default(), |_| Ok(())).unwrap();
        assert_eq!(out.final_state.t, 1.0);
        for (a, b) in out.final_state.u.values().iter().zip(s.u.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in out.final_state.v.values().iter().zip(s.v.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_times_are_hit_exactly_and_increase() {
        let cfg = RunConfig::default().uniform_samples(0.05, 10);
        let mut times = Vec::new();
        run(bump(), 0.05, &cfg, |s| {
            times.push(s.t);
            Ok(())
        })
        .unwrap();
        assert_eq!(times.len(), 11);
        for (k, &t) in times.iter().enumerate() {
            assert_eq!(t, cfg.sample_times.get(k.wrapping_sub(1)).copied().unwrap_or(0.0));
        }
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn reports_respect_cfl_and_observe_every() {
        let cfg = RunConfig { observe_every: Some(3), ..RunConfig::default() };
        let mut times = Vec::new();
        let out = run(bump(), 0.01, &cfg, |s| {
            times.push(s.t);
            Ok(())
        })
        .unwrap();
        assert!(out.reports.iter().all(|r| r.dt_used <= r.cfl_bound * (1.0 + 1e-12)));
        assert!(times.len() >= out.steps / 3);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*times.last().unwrap(), 0.01);
    }

    #[test]
    fn fixed_dt_is_used() {
        let cfg = RunConfig { fixed_dt: Some(1e-4), ..RunConfig::default() };
        let out = run(bump(), 1e-3, &cfg, |_| Ok(())).unwrap();
        assert_eq!(out.steps, 10);
        assert_eq!(out.final_state.t, 1e-3);
    }

    #[test]
    fn trajectory_and_report_csv() {
        let cfg = RunConfig::default().uniform_samples(0.002, 4);
        let traj = run_trajectory(bump(), 0.002, &cfg).unwrap();
        assert_eq!(traj.times().len(), 5);
        let mut buf = Vec::new();
        write_reports_csv(&traj.reports, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,dt_used,max_u,min_v,cfl_bound,positivity_ok,retries"));
        assert_eq!(text.lines().count(), traj.reports.len() + 1);
    }

    #[test]
    fn backwards_horizon_is_rejected() {
        let s = steady(1.0).at_time(1.0);
        assert!(run(s, 0.5, &RunConfig::default(), |_| Ok(())).is_err());
    }
}
