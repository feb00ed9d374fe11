//! Single runs, ε-ladders and refinement studies.

use std::io::Write;

use anyhow::{anyhow, bail, Context, Result};
use logsense_core::diagnostics::{
    entropy_identity_residual, Collector, DiagnosticsSummary, SpatialPart, TestFunction,
};
use logsense_core::grid::{face_gradient, integrate, Field};
use logsense_core::oracles::check_power_identities;
use logsense_core::simulator::{run, RunOutcome};
use logsense_core::{DiagnosticsRecord64, SimState64};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::config::{EpsStudyConfig, RefineStudyConfig, SimulationConfig};

/// Errors at or below this level count as round-off.
pub const ROUND_OFF: f64 = 1e-13;

/// Diagnostics record of one run plus the snapshots that were kept.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub record: DiagnosticsRecord64,
    pub outcome: RunOutcome<f64>,
    pub snapshots: Vec<SimState64>,
}

/// Which observed states to keep in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    None,
    /// The initial state and every `k`-th configured sample time (the last one always).
    EverySample(usize),
}

/// Runs `sim` once, collecting diagnostics for `spatial` and `dual`.
pub fn simulate(
    sim: &SimulationConfig,
    spatial: &[SpatialPart],
    dual: &[SpatialPart],
    keep: Keep,
) -> Result<SimulationOutput> {
    let initial = sim.initial_state()?;
    let cfg = sim.run_config()?;
    let targets = cfg.sample_times.clone();
    let mut collector = Collector::new(*initial.u.grid(), initial.params, spatial, dual)?;
    let mut snapshots = Vec::new();
    let t0 = initial.t;
    let outcome = run(initial, sim.t_final, &cfg, |s| {
        collector.observe_state(s)?;
        if let Keep::EverySample(k) = keep {
            let wanted = s.t == t0
                || targets
                    .binary_search_by(|x| x.total_cmp(&s.t))
                    .map(|i| (i + 1) % k == 0 || i + 1 == targets.len())
                    .unwrap_or(false);
            if wanted {
                snapshots.push(s.clone());
            }
        }
        Ok(())
    })?;
    let record = collector.finish()?;
    Ok(SimulationOutput { record, outcome, snapshots })
}

/// One member of an ε-ladder.
#[derive(Debug, Clone)]
pub struct LadderRun {
    pub eps: f64,
    pub output: SimulationOutput,
}

/// Runs every ε of the ladder (in parallel), keeping `study_samples` matched snapshots.
pub fn run_ladder(
    sim: &SimulationConfig,
    ladder: &[f64],
    study_samples: usize,
    spatial: &[SpatialPart],
    dual: &[SpatialPart],
) -> Result<Vec<LadderRun>> {
    let count = sim.resolved_sample_times().len().max(1);
    let stride = (count / study_samples.max(1)).max(1);
    ladder
        .par_iter()
        .map(|&eps| {
            let output = simulate(&sim.with_eps(eps), spatial, dual, Keep::EverySample(stride))
                .with_context(|| format!("run at eps = {eps} failed"))?;
            Ok(LadderRun { eps, output })
        })
        .collect()
}

/// `L¹(Ω × (0, T))` differences between two consecutive ladder members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LadderDifference {
    pub eps_a: f64,
    pub eps_b: f64,
    pub u: f64,
    pub v: f64,
    /// Face arrays of `∇v^{q/2}`.
    pub grad_vq: f64,
    pub upvq: f64,
}

/// Whether a difference sequence is nonincreasing within the slack factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneFlags {
    pub u: bool,
    pub v: bool,
    pub grad_vq: bool,
    pub upvq: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsSummary {
    pub eps: f64,
    pub steps: usize,
    pub rejected: usize,
    pub min_log_u: f64,
    pub summary: DiagnosticsSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsStudyResult {
    pub ladder: Vec<f64>,
    pub matched_times: usize,
    pub slack: f64,
    pub differences: Vec<LadderDifference>,
    pub monotone: MonotoneFlags,
    pub runs: Vec<EpsSummary>,
}

/// `d[k+1] ≤ slack · d[k]` for all consecutive pairs.
pub fn nonincreasing_within(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= slack * w[0])
}

fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum()
}

fn difference(a: &LadderRun, b: &LadderRun) -> Result<LadderDifference> {
    let (sa, sb) = (&a.output.snapshots, &b.output.snapshots);
    if sa.len() != sb.len() || sa.iter().zip(sb).any(|(x, y)| x.t != y.t) {
        bail!("runs at eps = {} and eps = {} were not sampled at matched times", a.eps, b.eps);
    }
    let times: Vec<f64> = sa.iter().map(|s| s.t).collect();
    let mut series = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for (x, y) in sa.iter().zip(sb) {
        if !x.u.grid().same_shape(y.u.grid()) {
            bail!("ladder runs live on different grids");
        }
        let (p, q) = (x.params.p, x.params.q);
        let gx = face_gradient(&x.v.map(|w| w.powf(0.5 * q)));
        let gy = face_gradient(&y.v.map(|w| w.powf(0.5 * q)));
        let ex = x.u.zip_map(&x.v, |u, v| u.powf(p) * v.powf(q));
        let ey = y.u.zip_map(&y.v, |u, v| u.powf(p) * v.powf(q));
        series[0].push(x.u.l1_distance(&y.u));
        series[1].push(x.v.l1_distance(&y.v));
        series[2].push(gx.l1_distance(&gy));
        series[3].push(ex.l1_distance(&ey));
    }
    Ok(LadderDifference {
        eps_a: a.eps,
        eps_b: b.eps,
        u: trapezoid(&times, &series[0]),
        v: trapezoid(&times, &series[1]),
        grad_vq: trapezoid(&times, &series[2]),
        upvq: trapezoid(&times, &series[3]),
    })
}

/// Pairwise differences of consecutive ladder members, in ladder order.
pub fn compare_ladder(runs: &[LadderRun], slack: f64) -> Result<EpsStudyResult> {
    let differences = runs
        .windows(2)
        .map(|w| difference(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&LadderDifference) -> f64| -> Vec<f64> { differences.iter().map(f).collect() };
    let monotone = MonotoneFlags {
        u: nonincreasing_within(&col(|d| d.u), slack),
        v: nonincreasing_within(&col(|d| d.v), slack),
        grad_vq: nonincreasing_within(&col(|d| d.grad_vq), slack),
        upvq: nonincreasing_within(&col(|d| d.upvq), slack),
    };
    let summaries = runs
        .iter()
        .map(|r| {
            let rec = &r.output.record;
            EpsSummary {
                eps: r.eps,
                steps: r.output.outcome.steps,
                rejected: r.output.outcome.rejected,
                min_log_u: rec.samples.iter().map(|s| s.log_u).fold(f64::INFINITY, f64::min),
                summary: DiagnosticsSummary::from_record(rec),
            }
        })
        .collect();
    Ok(EpsStudyResult {
        ladder: runs.iter().map(|r| r.eps).collect(),
        matched_times: runs.first().map_or(0, |r| r.output.snapshots.len()),
        slack,
        differences,
        monotone,
        runs: summaries,
    })
}

/// Runs the ladder of `study` on `sim` and compares consecutive members.
pub fn eps_convergence_study(
    sim: &SimulationConfig,
    study: &EpsStudyConfig,
    spatial: &[SpatialPart],
    dual: &[SpatialPart],
) -> Result<EpsStudyResult> {
    study.validate().map_err(|e| anyhow!(e))?;
    let runs = run_ladder(sim, &study.ladder, study.study_samples, spatial, dual)?;
    compare_ladder(&runs, study.slack)
}

pub fn write_eps_csv<W: Write>(result: &EpsStudyResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for d in &result.differences {
        w.serialize(d)?;
    }
    w.flush()?;
    Ok(())
}

/// Observed convergence order, or a marker that both errors are round-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Value(f64),
    Exact,
}

impl Order {
    pub fn from_errors(coarse: f64, fine: f64) -> Self {
        if coarse.abs() <= ROUND_OFF && fine.abs() <= ROUND_OFF {
            Order::Exact
        } else {
            Order::Value((coarse.abs() / fine.abs()).log2())
        }
    }

    /// `Exact` always meets the threshold.
    pub fn at_least(self, threshold: f64) -> bool {
        match self {
            Order::Exact => true,
            Order::Value(v) => v >= threshold,
        }
    }
}

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Order::Value(v) => s.serialize_f64(*v),
            Order::Exact => s.serialize_str("exact"),
        }
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Order::Value(v) => write!(f, "{v:.3}"),
            Order::Exact => f.write_str("exact"),
        }
    }
}

fn orders(errors: &[f64]) -> Vec<Order> {
    errors.windows(2).map(|w| Order::from_errors(w[0], w[1])).collect()
}

/// Errors of one quantity on every level and the orders between consecutive levels.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorSeries {
    pub name: String,
    pub errors: Vec<f64>,
    pub orders: Vec<Order>,
}

impl ErrorSeries {
    pub fn from_errors(name: impl Into<String>, errors: Vec<f64>) -> Self {
        let orders = orders(&errors);
        Self { name: name.into(), errors, orders }
    }

    pub fn min_order_at_least(&self, threshold: f64) -> bool {
        self.orders.iter().all(|o| o.at_least(threshold))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineReport {
    pub cells: Vec<Vec<usize>>,
    pub spacing: Vec<f64>,
    pub dt: Vec<f64>,
    /// Final-state `L¹` distance of `u` to the restricted finest solution (all but the finest level).
    pub solution_l1: ErrorSeries,
    /// One series per test function, `φ ≡ 1` first.
    pub entropy_residuals: Vec<ErrorSeries>,
    /// Residuals of the two power identities on the initial density.
    pub power_identity_29: ErrorSeries,
    pub power_identity_210: ErrorSeries,
    /// Largest relative mass drift over all levels.
    pub max_mass_drift: f64,
}

/// Refinement levels of `sim`, each with its fixed step `c·h²`.
pub fn refinement_levels(sim: &SimulationConfig, study: &RefineStudyConfig) -> Vec<SimulationConfig> {
    (0..study.levels)
        .map(|k| {
            let mut level = sim.refined(1 << k);
            level.dt_per_h2 = Some(study.dt_per_h2);
            level.fixed_dt = None;
            level.observe_every = Some(study.observe_every);
            level.sample_times = Vec::new();
            level.sample_count = 1;
            level
        })
        .collect()
}

/// `L¹` distance of `coarse` to `fine` restricted onto the coarse grid.
pub fn l1_error_vs_reference(coarse: &Field<f64>, fine: &Field<f64>) -> Result<f64> {
    let restricted = fine
        .restrict(coarse.grid())
        .map_err(|e| anyhow!("reference grid is not a refinement of the coarse grid: {e}"))?;
    Ok(coarse.l1_distance(&restricted))
}

/// Runs `(h, h/2, …)` with `dt ∝ h²` and reports observed orders.
pub fn refine_study(sim: &SimulationConfig, study: &RefineStudyConfig) -> Result<RefineReport> {
    study.validate(sim).map_err(|e| anyhow!(e))?;
    let mut family = vec![TestFunction::one()];
    family.extend(study.test_functions.iter().filter(|f| **f != TestFunction::one()).cloned());
    let spatial: Vec<SpatialPart> = family.iter().map(|f| f.spatial.clone()).collect();
    let levels = refinement_levels(sim, study);
    let outputs = levels
        .par_iter()
        .map(|level| {
            let out = simulate(level, &spatial, &[], Keep::None)
                .with_context(|| format!("refinement run on {:?} cells failed", level.cells))?;
            let u0 = level.initial_state()?.u;
            Ok((out, u0))
        })
        .collect::<Result<Vec<_>>>()?;

    let finals: Vec<&Field<f64>> = outputs.iter().map(|(o, _)| &o.outcome.final_state.u).collect();
    let finest = *finals.last().expect("at least two levels");
    let solution = finals[..finals.len() - 1]
        .iter()
        .map(|u| l1_error_vs_reference(u, finest))
        .collect::<Result<Vec<_>>>()?;

    let mut entropy = Vec::new();
    for (i, f) in family.iter().enumerate() {
        let errs = outputs
            .iter()
            .map(|(o, _)| Ok(entropy_identity_residual(&o.record, f)?.residual))
            .collect::<Result<Vec<_>>>()?;
        entropy.push(ErrorSeries::from_errors(format!("entropy_residual_{i}"), errs));
    }

    let r = sim.params()?.r;
    let mut res29 = Vec::new();
    let mut res210 = Vec::new();
    for (_, u0) in &outputs {
        let rep = check_power_identities(u0, r)?;
        res29.push(rep.res29);
        res210.push(rep.res210);
    }

    let max_mass_drift = outputs
        .iter()
        .map(|(o, _)| {
            let m0 = o.record.first().mass;
            let m1 = integrate(&o.outcome.final_state.u);
            ((m1 - m0) / m0).abs()
        })
        .fold(0.0, f64::max);

    Ok(RefineReport {
        cells: levels.iter().map(|l| l.cells.clone()).collect(),
        spacing: outputs.iter().map(|(o, _)| o.record.grid.max_spacing()).collect(),
        dt: levels.iter().map(|l| l.step_size().ok().flatten().unwrap_or(f64::NAN)).collect(),
        solution_l1: ErrorSeries::from_errors("solution_l1", solution),
        entropy_residuals: entropy,
        power_identity_29: ErrorSeries::from_errors("power_identity_29", res29),
        power_identity_210: ErrorSeries::from_errors("power_identity_210", res210),
        max_mass_drift,
    })
}

/// Long-format CSV: one row per (quantity, level).
pub fn write_refine_csv<W: Write>(report: &RefineReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "level", "h", "error", "order_from_previous"])?;
    let mut series: Vec<&ErrorSeries> = vec![&report.solution_l1];
    series.extend(&report.entropy_residuals);
    series.push(&report.power_identity_29);
    series.push(&report.power_identity_210);
    for s in series {
        for (k, e) in s.errors.iter().enumerate() {
            let order = if k == 0 { String::new() } else { s.orders[k - 1].to_string() };
            w.write_record([
                s.name.clone(),
                k.to_string(),
                format!("{:e}", report.spacing[k]),
                format!("{e:e}"),
                order,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
