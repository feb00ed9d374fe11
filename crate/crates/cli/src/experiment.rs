//! Mode dispatch and artifact emission.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use logsense_core::diagnostics::{
    self, apriori_bounds_check, dual_family, dual_norm_surrogate, entropy_identity_residual, grad_vq_bound,
    log_mass_check, supersolution_residual, trace_positivity_check, u_lr_bound, v_floor_check, v_weak_residual,
    DiagnosticsSummary, SpatialPart, TestFunction,
};
use logsense_core::grid::write_binary;
use logsense_core::oracles::{log_poincare_ratio, mean_poincare_ratio, EnsembleSpec};
use logsense_core::params::{
    chi_admissible, chi_threshold, exponent_infimum, exponent_infimum_bruteforce, region_rows, select_exponents,
    write_region_csv,
};
use logsense_core::simulator::write_reports_csv;
use logsense_core::{DiagnosticsRecord64, Grid64};
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Mode, SimulationConfig};
use crate::manifest::{Assertions, Flag, Manifest};
use crate::oracle_suite::{ode_suite, power_identity_suite, square_completion_suite};
use crate::study::{eps_convergence_study, refine_study, simulate, write_eps_csv, write_refine_csv, Keep};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "LOGSENSE_KS_OUT";

/// Bound on the relative mass drift of any run.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Bound on the per-cell excess in the Young splitting.
pub const YOUNG_TOLERANCE: f64 = 1e-12;

/// Smallest observed order accepted for the power identities.
pub const POWER_IDENTITY_ORDER: f64 = 1.9;

/// Relative bound for the square completion.
pub const SQUARE_COMPLETION_TOLERANCE: f64 = 1e-10;

/// Absolute bound for the closed-form `coth` spot value.
pub const SPOT_TOLERANCE: f64 = 1e-12;

/// Output directory: explicit flag, then the config, then `$LOGSENSE_KS_OUT/<mode>`, then `logsense-out/<mode>`.
pub fn resolve_out_dir(flag: Option<&Path>, config: &ExperimentConfig, mode: Mode) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = &config.out {
        return p.clone();
    }
    match std::env::var_os(OUT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(mode.name()),
        _ => PathBuf::from("logsense-out").join(mode.name()),
    }
}

struct Outputs {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Outputs {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        let w = self.create(name)?;
        serde_json::to_writer_pretty(w, value)?;
        Ok(())
    }
}

struct ModeOutcome {
    results: serde_json::Value,
    assertions: Assertions,
    flags: Vec<Flag>,
}

/// Validates, runs `mode`, writes artifacts plus `manifest.json` and `timing.json` into `out`.
///
/// Nothing is written when validation fails.
pub fn run_experiment(mode: Mode, config: &ExperimentConfig, out: &Path, seed: Option<u64>) -> Result<Manifest> {
    config.validate(mode)?;
    let seed = seed.or(config.seed);
    let start = Instant::now();
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))?;
    let mut outputs = Outputs { dir: out.to_path_buf(), artifacts: Vec::new() };
    let outcome = match mode {
        Mode::Simulate => simulate_mode(config, &mut outputs)?,
        Mode::EntropyCheck => entropy_mode(config, &mut outputs)?,
        Mode::Params => params_mode(config, &mut outputs)?,
        Mode::EpsStudy => eps_mode(config, &mut outputs)?,
        Mode::RefineStudy => refine_mode(config, &mut outputs)?,
        Mode::Oracle => oracle_mode(config, seed, &mut outputs)?,
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: logsense_core::VERSION.into(),
        mode,
        seed,
        config: config.clone(),
        results: outcome.results,
        passed: outcome.assertions.all_passed(),
        assertions: outcome.assertions,
        flags: outcome.flags,
        artifacts: outputs.artifacts.clone(),
    };
    fs::write(out.join("manifest.json"), manifest.to_json_pretty())?;
    let timing = json!({ "mode": mode, "wall_seconds": start.elapsed().as_secs_f64() });
    fs::write(out.join("timing.json"), serde_json::to_string_pretty(&timing)?)?;
    Ok(manifest)
}

fn simulation(config: &ExperimentConfig) -> &SimulationConfig {
    config.simulation.as_ref().expect("validated")
}

fn dual_parts(grid: Grid64, count: usize) -> Vec<SpatialPart> {
    if count == 0 {
        return Vec::new();
    }
    dual_family(grid, count).unwrap_or_default()
}

/// Checks every run must pass: mass, `v` floor, boundary positivity, Young splitting.
fn run_assertions(record: &DiagnosticsRecord64, prefix: &str, a: &mut Assertions) -> DiagnosticsSummary {
    let summary = DiagnosticsSummary::from_record(record);
    a.at_most(format!("{prefix}mass_drift"), summary.max_mass_drift, MASS_TOLERANCE);
    a.at_least(format!("{prefix}v_floor_margin"), v_floor_check(record).worst_margin, 0.0);
    a.holds(format!("{prefix}trace_positive"), trace_positivity_check(record).passed);
    match u_lr_bound(record) {
        Ok(y) => a.at_most(format!("{prefix}young_excess"), y.max_excess, YOUNG_TOLERANCE),
        Err(_) => a.holds(format!("{prefix}young_applicable"), false),
    }
    summary
}

fn simulate_mode(config: &ExperimentConfig, out: &mut Outputs) -> Result<ModeOutcome> {
    let sim = simulation(config);
    let family = config.diagnostics.family(sim);
    let spatial: Vec<SpatialPart> = family.iter().map(|f| f.spatial.clone()).collect();
    let dual = dual_parts(sim.grid()?, config.diagnostics.dual_count);
    let keep = sim.dump_every.map_or(Keep::None, Keep::EverySample);
    let output = simulate(sim, &spatial, &dual, keep)?;
    diagnostics::write_csv(&output.record, out.create("diagnostics.csv")?)?;
    write_reports_csv(&output.outcome.reports, out.create("steps.csv")?)?;
    for (i, s) in output.snapshots.iter().enumerate() {
        write_binary(&s.u, out.create(&format!("fields/u_{i:05}.bin"))?)?;
        write_binary(&s.v, out.create(&format!("fields/v_{i:05}.bin"))?)?;
    }
    if !output.snapshots.is_empty() {
        let times: Vec<f64> = output.snapshots.iter().map(|s| s.t).collect();
        out.json("fields/times.json", &times)?;
    }
    let mut a = Assertions::default();
    let summary = run_assertions(&output.record, "", &mut a);
    out.json("summary.json", &summary)?;
    let results = json!({
        "params": output.record.params,
        "steps": output.outcome.steps,
        "rejected": output.outcome.rejected,
        "final_time": output.record.final_time(),
        "summary": summary,
    });
    Ok(ModeOutcome { results, assertions: a, flags: Vec::new() })
}

#[derive(Debug, Clone, Serialize)]
struct TestFunctionResult {
    test_function: TestFunction,
    identity_residual: f64,
    identity_scale: f64,
    supersolution: f64,
    supersolution_tolerance: f64,
    eps_term: f64,
    v_weak_residual: f64,
}

fn entropy_mode(config: &ExperimentConfig, out: &mut Outputs) -> Result<ModeOutcome> {
    let sim = simulation(config);
    let family = config.diagnostics.family(sim);
    let spatial: Vec<SpatialPart> = family.iter().map(|f| f.spatial.clone()).collect();
    let dual = dual_parts(sim.grid()?, config.diagnostics.dual_count);
    let output = simulate(sim, &spatial, &dual, Keep::None)?;
    let record = &output.record;
    diagnostics::write_csv(record, out.create("diagnostics.csv")?)?;

    let mut a = Assertions::default();
    let summary = run_assertions(record, "", &mut a);
    let tol = config.diagnostics.tolerance;
    let mut per_function = Vec::new();
    for (i, f) in family.iter().enumerate() {
        let id = entropy_identity_residual(record, f)?;
        let weak = v_weak_residual(record, f)?;
        let ss = supersolution_residual(record, f)?;
        let bound = -(tol + id.residual.abs());
        if f.is_nonnegative(record.grid)? {
            a.at_least(format!("supersolution_{i}"), ss.value, bound);
        }
        per_function.push(TestFunctionResult {
            test_function: f.clone(),
            identity_residual: id.residual,
            identity_scale: id.scale,
            supersolution: ss.value,
            supersolution_tolerance: -bound,
            eps_term: ss.eps_term,
            v_weak_residual: weak.residual,
        });
    }
    let apriori = apriori_bounds_check(record)?;
    a.at_least("apriori_slack", apriori.slack, -apriori.tolerance);
    a.holds("apriori_integrals_finite", apriori.finite);
    let discretization = entropy_identity_residual(record, &TestFunction::one())?.residual.abs();
    let grad = grad_vq_bound(record, tol + discretization)?;
    a.holds("grad_vq_bound", grad.passed);
    let log_mass = log_mass_check(record, tol + discretization)?;
    if log_mass.defined {
        a.at_least("log_mass_slack", log_mass.worst_slack, -log_mass.tolerance);
    }
    let dual_report = if dual.is_empty() { None } else { dual_norm_surrogate(record).ok() };
    let results = json!({
        "params": record.params,
        "coefficients": record.coefficients,
        "summary": summary,
        "test_functions": per_function,
        "apriori": apriori,
        "grad_vq": grad,
        "log_mass": log_mass,
        "dual_surrogate": dual_report.map(|d| json!({
            "u_integral": d.u_integral,
            "v_integral": d.v_integral,
        })),
    });
    out.json("entropy.json", &results)?;
    let flags = vec![Flag {
        name: "log_mass_undefined".into(),
        raised: !log_mass.defined,
        note: "u has a nonpositive cell, so the logarithmic mass is undefined from that time on".into(),
    }];
    Ok(ModeOutcome { results, assertions: a, flags })
}

#[derive(Debug, Clone, Serialize)]
struct ParamsResult {
    chi: f64,
    n: usize,
    admissible: bool,
    threshold: f64,
    infimum: f64,
    bruteforce: f64,
    bruteforce_grid: usize,
    selection: Option<logsense_core::params::ExponentChoice<f64>>,
    selection_error: Option<String>,
}

fn params_mode(config: &ExperimentConfig, out: &mut Outputs) -> Result<ModeOutcome> {
    let pc = config.params.as_ref().expect("validated");
    let infimum = exponent_infimum(pc.chi)?;
    let bruteforce = exponent_infimum_bruteforce(pc.chi, pc.bruteforce_grid)?;
    let admissible = chi_admissible(pc.chi, pc.n)?;
    let (selection, selection_error) = match select_exponents(pc.chi, pc.n, pc.margin, pc.n2_cap) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let rows = region_rows(pc.chi, pc.n, pc.points, pc.n2_cap)?;
    write_region_csv(&rows, out.create("region.csv")?)?;
    let mut a = Assertions::default();
    a.at_least("bruteforce_minus_infimum", bruteforce - infimum, -1e-6);
    a.at_most("bruteforce_excess", bruteforce - infimum, 1e-3);
    if admissible {
        a.holds("selection_feasible", selection.is_some_and(|c| c.satisfies(pc.chi, pc.margin)));
    }
    let result = ParamsResult {
        chi: pc.chi,
        n: pc.n,
        admissible,
        threshold: chi_threshold(pc.n)?,
        infimum,
        bruteforce,
        bruteforce_grid: pc.bruteforce_grid,
        selection,
        selection_error,
    };
    out.json("params.json", &result)?;
    Ok(ModeOutcome { results: serde_json::to_value(&result)?, assertions: a, flags: Vec::new() })
}

fn eps_mode(config: &ExperimentConfig, out: &mut Outputs) -> Result<ModeOutcome> {
    let sim = simulation(config);
    let study = config.eps_study.as_ref().expect("validated");
    let family = config.diagnostics.family(sim);
    let spatial: Vec<SpatialPart> = family.iter().map(|f| f.spatial.clone()).collect();
    let result = eps_convergence_study(sim, study, &spatial, &[])?;
    write_eps_csv(&result, out.create("eps_study.csv")?)?;
    out.json("eps_study.json", &result)?;

    let mut a = Assertions::default();
    for r in &result.runs {
        let s = &r.summary;
        let tag = format!("eps_{}_", r.eps);
        a.at_most(format!("{tag}mass_drift"), s.max_mass_drift, MASS_TOLERANCE);
        a.at_least(format!("{tag}v_floor_margin"), s.v_floor.worst_margin, 0.0);
    }
    a.holds("u_differences_nonincreasing", result.monotone.u);
    let note = |q: &str| format!("{q} differences grow by more than the slack factor somewhere along the ladder");
    let flags = vec![
        Flag { name: "v_non_monotone".into(), raised: !result.monotone.v, note: note("v") },
        Flag { name: "grad_vq_non_monotone".into(), raised: !result.monotone.grad_vq, note: note("grad v^{q/2}") },
        Flag { name: "upvq_non_monotone".into(), raised: !result.monotone.upvq, note: note("u^p v^q") },
    ];
    Ok(ModeOutcome { results: serde_json::to_value(&result)?, assertions: a, flags })
}

fn refine_mode(config: &ExperimentConfig, out: &mut Outputs) -> Result<ModeOutcome> {
    let sim = simulation(config);
    let study = config.refine_study.as_ref().expect("validated");
    let report = refine_study(sim, study)?;
    write_refine_csv(&report, out.create("refine_study.csv")?)?;
    out.json("refine_study.json", &report)?;
    let mut a = Assertions::default();
    a.at_most("mass_drift", report.max_mass_drift, MASS_TOLERANCE);
    let mut series = vec![&report.solution_l1];
    series.extend(&report.entropy_residuals);
    series.push(&report.power_identity_29);
    series.push(&report.power_identity_210);
    for s in series {
        a.holds(format!("{}_order", s.name), s.min_order_at_least(study.min_order));
    }
    Ok(ModeOutcome { results: serde_json::to_value(&report)?, assertions: a, flags: Vec::new() })
}

fn seeded(spec: &EnsembleSpec, seed: Option<u64>) -> EnsembleSpec {
    EnsembleSpec { seed: seed.unwrap_or(spec.seed), ..spec.clone() }
}

fn oracle_mode(config: &ExperimentConfig, seed: Option<u64>, out: &mut Outputs) -> Result<ModeOutcome> {
    let oc = config.oracle.as_ref().expect("validated");
    let mut a = Assertions::default();
    let mut results = serde_json::Map::new();
    if let Some(c) = &oc.ode {
        let rep = ode_suite(c.cases, seed.unwrap_or(c.seed))?;
        a.at_most("ode_failures", rep.failures as f64, 0.0);
        a.at_most("coth_spot_difference", rep.spot_difference, SPOT_TOLERANCE);
        results.insert("ode".into(), serde_json::to_value(&rep)?);
    }
    if let Some(c) = &oc.square_completion {
        let rep = square_completion_suite(c.trials, seed.unwrap_or(c.seed))?;
        a.at_most("square_completion_relative", rep.max_relative, SQUARE_COMPLETION_TOLERANCE);
        results.insert("square_completion".into(), serde_json::to_value(&rep)?);
    }
    if let Some(c) = &oc.power_identities {
        let rep = power_identity_suite(&c.levels, c.r)?;
        a.at_least("power_identity_order", rep.min_order(), POWER_IDENTITY_ORDER);
        results.insert("power_identities".into(), serde_json::to_value(&rep)?);
    }
    if let Some(c) = &oc.log_poincare {
        let grid = Grid64::new(&c.cells, &c.extents)?;
        let rep = log_poincare_ratio(&seeded(&c.ensemble, seed), grid)?;
        a.holds(
            "log_poincare_partition",
            rep.ratio_count + rep.alternative_count + rep.excluded == rep.samples,
        );
        a.holds("log_poincare_finite", rep.max_ratio.map_or(true, f64::is_finite));
        results.insert("log_poincare".into(), serde_json::to_value(&rep)?);
    }
    if let Some(c) = &oc.mean_poincare {
        let grid = Grid64::new(&c.cells, &c.extents)?;
        let rep = mean_poincare_ratio(&seeded(&c.ensemble, seed), grid, c.p, c.riesz)?;
        a.holds("mean_poincare_finite", rep.max_ratio.is_finite());
        results.insert("mean_poincare".into(), serde_json::to_value(&rep)?);
    }
    let results = serde_json::Value::Object(results);
    out.json("oracle.json", &results)?;
    Ok(ModeOutcome { results, assertions: a, flags: Vec::new() })
}
