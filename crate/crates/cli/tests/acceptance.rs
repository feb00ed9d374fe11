//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs with its own harness so the report is printed without `--nocapture`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

#[path = "support/double_double.rs"]
mod double_double;

use double_double::Dd;

use logsense_core::diagnostics::{
    apriori_bounds_check, builtin_nonnegative_family, entropy_identity_residual, log_mass_check,
    supersolution_residual, u_lr_bound, v_floor_check, SpatialPart, TemporalPart, TestFunction, ABSOLUTE_TOLERANCE,
};
use logsense_core::grid::{Field, Grid};
use logsense_core::oracles::check_power_identities;
use logsense_core::params::{chi_admissible, entropy_coefficients, exponent_infimum, exponent_infimum_bruteforce, q_bounds};
use logsense_core::simulator::{FluxKind, InitialData, Profile, SchemeConfig};
use logsense_ks::config::{ExperimentConfig, Exponents, Mode, RefineStudyConfig, SimulationConfig};
use logsense_ks::oracle_suite::{ode_suite, power_identity_suite, square_completion_suite};
use logsense_ks::study::{compare_ladder, refine_study, simulate, ErrorSeries, Keep, LadderRun, Order};
use logsense_core::Real;
use logsense_ks::run_experiment;

const SEED: u64 = 20_240_611;

struct Report {
    failures: Vec<usize>,
}

impl Report {
    fn record(&mut self, n: usize, passed: bool, detail: String) {
        println!("criterion {n:2}: {} {detail}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            self.failures.push(n);
        }
    }
}

/// 64×64 on the unit square, Gaussian density over a positive background, constant signal, χ = 2, T = 1.
fn standard_run(eps: f64) -> SimulationConfig {
    SimulationConfig {
        cells: vec![64, 64],
        extents: vec![1.0, 1.0],
        chi: 2.0,
        n: None,
        eps,
        exponents: None,
        exponent_margin: 0.1,
        n2_cap: 1e6,
        initial_data: InitialData {
            u: Profile::Gaussian { background: 0.5, amplitude: 2.0, width: 0.1, center: None },
            v: Profile::Constant { value: 1.0 },
            v_floor: 1e-3,
        },
        t_final: 1.0,
        sample_times: Vec::new(),
        sample_count: 2000,
        observe_every: None,
        scheme: SchemeConfig::default(),
        fixed_dt: None,
        dt_per_h2: None,
        dump_every: None,
    }
}

struct TimedRun {
    run: LadderRun,
    wall: Duration,
}

fn standard_runs(eps: &[f64]) -> BTreeMap<u64, TimedRun> {
    let sim = standard_run(0.0);
    let family = builtin_nonnegative_family(&sim.extents, sim.t_final);
    let spatial: Vec<SpatialPart> = family.iter().map(|f| f.spatial.clone()).collect();
    let mut out = BTreeMap::new();
    for &e in eps {
        let start = Instant::now();
        let output = simulate(&sim.with_eps(e), &spatial, &[], Keep::EverySample(10)).expect("standard run");
        out.insert(e.to_bits(), TimedRun { run: LadderRun { eps: e, output }, wall: start.elapsed() });
    }
    out
}

fn get(runs: &BTreeMap<u64, TimedRun>, eps: f64) -> &TimedRun {
    &runs[&eps.to_bits()]
}

fn band(values: &[f64]) -> f64 {
    let max = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    max / min
}

fn criterion_1(r: &mut Report) {
    let start = Instant::now();
    let mut worst_low = f64::INFINITY;
    let mut worst_high = f64::NEG_INFINITY;
    for k in 1..=50 {
        let chi = 0.05 + (4.0 - 0.05) * k as f64 / 50.0;
        let gap = exponent_infimum_bruteforce(chi, 1_000_000).unwrap() - exponent_infimum(chi).unwrap();
        worst_low = worst_low.min(gap);
        worst_high = worst_high.max(gap);
    }
    let wall = start.elapsed().as_secs_f64();
    r.record(
        1,
        worst_low >= -1e-6 && worst_high <= 1e-3 && wall < 10.0,
        format!("brute force minus closed form in [{worst_low:.2e}, {worst_high:.2e}], {wall:.1} s"),
    );
}

/// Largest `|c1|` at `q₋(p)`, `q₊(p)` over the sampled `p`, in scalar type `T`.
fn endpoint_c1<T: Real>(chi: f64) -> f64 {
    let p_max = 1.0f64.min(1.0 / (chi * chi));
    let chi_t = T::lit(chi);
    (1..=100)
        .flat_map(|i| {
            let p = T::lit(p_max * i as f64 / 101.0);
            let (qm, qp) = q_bounds(p, chi_t).unwrap();
            [qm, qp].map(|q| entropy_coefficients(p, q, chi_t).unwrap().c1.to_f64_lossy().abs())
        })
        .fold(0.0, f64::max)
}

fn criterion_2(r: &mut Report) {
    let mut min_c1 = f64::INFINITY;
    let mut min_c2 = f64::INFINITY;
    let (mut endpoint_f64, mut endpoint_dd) = (0.0f64, 0.0f64);
    for chi in [0.5, 1.0, 2.0, 2.8] {
        let p_max = 1.0f64.min(1.0 / (chi * chi));
        for i in 1..=100 {
            let p = p_max * i as f64 / 101.0;
            let (qm, qp) = q_bounds(p, chi).unwrap();
            for j in 1..=100 {
                let q = qm + (qp - qm) * j as f64 / 101.0;
                let c = entropy_coefficients(p, q, chi).unwrap();
                min_c1 = min_c1.min(c.c1);
                min_c2 = min_c2.min(c.c2);
            }
        }
        endpoint_f64 = endpoint_f64.max(endpoint_c1::<f64>(chi));
        endpoint_dd = endpoint_dd.max(endpoint_c1::<Dd>(chi));
    }
    // In f64 the endpoint value is limited by rounding q±: |∂c1/∂q| · ulp(q) reaches ~1e-11
    // for p ≈ 1e-3 with q₊ near 1, so the same code is evaluated in double-double.
    r.record(
        2,
        min_c1 > 0.0 && min_c2 > 0.0 && endpoint_dd <= 1e-12,
        format!(
            "min c1 = {min_c1:.3e}, min c2 = {min_c2:.3e}, max |c1| at endpoints {endpoint_dd:.1e} \
             (double-double; f64 gives {endpoint_f64:.1e} from rounding q±)"
        ),
    );
}

fn criterion_3(r: &mut Report) {
    let table = [
        (2, 100.0, true),
        (3, 2.82, true),
        (3, 2.83, false),
        (4, 2.0, false),
    ];
    let rows_ok = table.iter().all(|&(n, chi, want)| chi_admissible(chi, n).unwrap() == want);
    let at_root8 = (exponent_infimum(8f64.sqrt()).unwrap() - 3.0 / (3.0 - 2.0)).abs();
    r.record(
        3,
        rows_ok && at_root8 <= 1e-12,
        format!("admissibility table matches: {rows_ok}, |I(sqrt 8) - 3| = {at_root8:.1e}"),
    );
}

fn mass_drift(run: &LadderRun) -> f64 {
    let rec = &run.output.record;
    let m0 = rec.first().mass;
    rec.samples.iter().map(|s| ((s.mass - m0) / m0).abs()).fold(0.0, f64::max)
}

fn criterion_4(r: &mut Report, run: &TimedRun) {
    let drift = mass_drift(&run.run);
    let wall = run.wall.as_secs_f64();
    r.record(
        4,
        drift <= 1e-12 && wall < 60.0,
        format!("max relative mass drift {drift:.2e}, {wall:.1} s"),
    );
}

fn criterion_5(r: &mut Report, run: &TimedRun) {
    let rep = v_floor_check(&run.run.output.record);
    r.record(
        5,
        rep.passed,
        format!("min over samples of min v - (min v0 e^-t - 10h^2) = {:.3e}", rep.worst_margin),
    );
}

fn constant_state_residual() -> f64 {
    let mut sim = standard_run(0.0);
    sim.cells = vec![16, 16];
    sim.exponents = Some(Exponents { p: 0.2, q: 0.5, r: Some(1.1), s: 1.0 });
    sim.initial_data.u = Profile::Constant { value: 1.0 };
    sim.sample_count = 50;
    let family = builtin_nonnegative_family(&sim.extents, sim.t_final);
    let spatial: Vec<SpatialPart> = family.iter().map(|f| f.spatial.clone()).collect();
    let out = simulate(&sim, &spatial, &[], Keep::None).unwrap();
    family
        .iter()
        .map(|f| entropy_identity_residual(&out.record, f).unwrap().residual.abs())
        .fold(0.0, f64::max)
}

fn refine_config() -> (SimulationConfig, RefineStudyConfig) {
    let mut sim = standard_run(0.01);
    sim.cells = vec![32, 32];
    sim.extents = vec![2.0, 2.0];
    sim.chi = 1.0;
    sim.exponents = Some(Exponents { p: 0.5, q: 0.25, r: Some(1.2), s: 1.0 });
    sim.initial_data.u = Profile::Cosine {
        mean: 1.0,
        terms: vec![
            logsense_core::simulator::CosineTerm { wavenumbers: vec![1, 1], amplitude: 0.3 },
            logsense_core::simulator::CosineTerm { wavenumbers: vec![0, 2], amplitude: 0.2 },
        ],
    };
    sim.initial_data.v = Profile::Cosine {
        mean: 1.0,
        terms: vec![logsense_core::simulator::CosineTerm { wavenumbers: vec![1, 0], amplitude: 0.3 }],
    };
    sim.t_final = 0.05;
    sim.scheme.flux = FluxKind::Central;
    let decay = TemporalPart::Decay { end: sim.t_final };
    let study = RefineStudyConfig {
        levels: 3,
        dt_per_h2: 0.2,
        observe_every: 2,
        test_functions: vec![
            TestFunction::new(
                SpatialPart::Cosine { wavenumbers: vec![1, 0], amplitude: 0.5, offset: 1.0 },
                decay.clone(),
            ),
            TestFunction::new(SpatialPart::Bump { center: vec![1.0, 1.0], radius: 0.7, height: 1.0 }, decay),
        ],
        min_order: 1.5,
    };
    (sim, study)
}

fn fmt_orders(s: &ErrorSeries) -> String {
    s.orders.iter().map(Order::to_string).collect::<Vec<_>>().join("/")
}

fn criterion_6(r: &mut Report) {
    let (sim, study) = refine_config();
    let report = refine_study(&sim, &study).unwrap();
    let orders_ok = report.entropy_residuals.iter().all(|s| s.min_order_at_least(1.5));
    let constant = constant_state_residual();
    let orders: Vec<String> = report.entropy_residuals.iter().map(fmt_orders).collect();
    r.record(
        6,
        orders_ok && report.entropy_residuals.len() == 3 && constant <= 1e-10,
        format!("orders over 32/64/128 [{}], constant-state residual {constant:.1e}", orders.join(", ")),
    );
}

fn criterion_7(r: &mut Report, runs: &BTreeMap<u64, TimedRun>) {
    let family = builtin_nonnegative_family(&[1.0, 1.0], 1.0);
    let mut worst = f64::INFINITY;
    let mut passed = true;
    for eps in [0.0, 0.01, 0.1] {
        let rec = &get(runs, eps).run.output.record;
        for f in &family {
            let identity = entropy_identity_residual(rec, f).unwrap().residual.abs();
            let value = supersolution_residual(rec, f).unwrap().value;
            let tolerance = ABSOLUTE_TOLERANCE + identity;
            passed &= value >= -tolerance;
            worst = worst.min(value + tolerance);
        }
    }
    r.record(
        7,
        passed,
        format!("15 cases, smallest residual + tolerance = {worst:.3e}"),
    );
}

fn criterion_8(r: &mut Report, runs: &BTreeMap<u64, TimedRun>) {
    let mut worst = f64::INFINITY;
    let mut all_ok = true;
    for t in runs.values() {
        let rep = apriori_bounds_check(&t.run.output.record).unwrap();
        let relative = rep.slack / rep.scale;
        worst = worst.min(relative);
        all_ok &= rep.slack >= -1e-6 * rep.scale && rep.finite;
    }
    let reps: Vec<_> = [0.1, 0.01, 0.001]
        .iter()
        .map(|&e| apriori_bounds_check(&get(runs, e).run.output.record).unwrap())
        .collect();
    let bands = [
        band(&reps.iter().map(|x| x.int_d1).collect::<Vec<_>>()),
        band(&reps.iter().map(|x| x.int_grad_up).collect::<Vec<_>>()),
        band(&reps.iter().map(|x| x.int_square).collect::<Vec<_>>()),
        band(&reps.iter().map(|x| x.int_reaction).collect::<Vec<_>>()),
    ];
    let band_ok = bands.iter().all(|b| b.is_finite() && *b <= 3.0);
    r.record(
        8,
        all_ok && band_ok,
        format!(
            "{} runs, worst slack/scale = {worst:.3e}; integral bands across eps {:.3}/{:.3}/{:.3}/{:.3}",
            runs.len(),
            bands[0],
            bands[1],
            bands[2],
            bands[3]
        ),
    );
}

fn criterion_9(r: &mut Report, runs: &BTreeMap<u64, TimedRun>) {
    let mut worst = f64::NEG_INFINITY;
    let mut snapshots = 0;
    for t in runs.values() {
        let rec = &t.run.output.record;
        worst = worst.max(u_lr_bound(rec).unwrap().max_excess);
        snapshots += rec.samples.len();
    }
    r.record(
        9,
        worst <= 1e-12,
        format!("{snapshots} snapshots, max cell excess of u^r over the Young majorant {worst:.3e}"),
    );
}

fn criterion_10(r: &mut Report) {
    let rep = ode_suite(100, SEED).unwrap();
    r.record(
        10,
        rep.failures == 0 && rep.spot_difference <= 1e-12,
        format!(
            "{} cases ({} above, {} below equilibrium), {} failures, max excess {:.2e}; 2coth(2) = {:.6}, diff {:.1e}",
            rep.cases, rep.above, rep.below, rep.failures, rep.max_excess, rep.spot_value, rep.spot_difference
        ),
    );
}

fn criterion_11(r: &mut Report) {
    let square = square_completion_suite(1000, SEED).unwrap();
    let power = power_identity_suite(&[64, 128, 256], 1.5).unwrap();
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            let g = Grid::<f64>::uniform(1, n, 1.0).unwrap();
            check_power_identities(&Field::from_fn(g, |x| x[0].exp()), 2.0).unwrap().res210
        })
        .collect();
    let exp_order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    let order = power.min_order().min(exp_order);
    r.record(
        11,
        square.max_relative <= 1e-10 && order >= 1.9,
        format!(
            "square completion max relative {:.1e} over {} trials, min power-identity order {order:.3}",
            square.max_relative, square.trials
        ),
    );
}

fn criterion_12(r: &mut Report, runs: &BTreeMap<u64, TimedRun>) {
    let ladder = [0.1, 0.05, 0.025, 0.0125];
    let start = Instant::now();
    let members: Vec<LadderRun> = ladder.iter().map(|&e| get(runs, e).run.clone()).collect();
    let result = compare_ladder(&members, 1.2).unwrap();
    let wall: f64 = ladder.iter().map(|&e| get(runs, e).wall.as_secs_f64()).sum::<f64>()
        + start.elapsed().as_secs_f64();
    let diffs: Vec<String> = result.differences.iter().map(|d| format!("{:.3e}", d.u)).collect();
    r.record(
        12,
        result.monotone.u && wall < 300.0,
        format!("u differences [{}], {wall:.0} s", diffs.join(", ")),
    );
}

fn criterion_13(r: &mut Report, runs: &BTreeMap<u64, TimedRun>) {
    let mut mins = Vec::new();
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for eps in [0.1, 0.01, 0.001] {
        let rec = &get(runs, eps).run.output.record;
        let tolerance = ABSOLUTE_TOLERANCE + entropy_identity_residual(rec, &TestFunction::one()).unwrap().residual.abs();
        let rep = log_mass_check(rec, tolerance).unwrap();
        ok &= rep.defined && rep.passed && rep.min_log_u.is_finite();
        worst = worst.min(rep.worst_slack);
        mins.push(rep.min_log_u);
    }
    let same_sign = mins.iter().all(|m| m.signum() == mins[0].signum());
    let factor = band(&mins);
    r.record(
        13,
        ok && same_sign && factor <= 2.0,
        format!("min_t int ln u = {mins:.4?} (band {factor:.3}), worst inequality slack {worst:.3e}"),
    );
}

fn outputs_equal(a: &Path, b: &Path) -> bool {
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let mut names: Vec<String> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap().to_string())
        .collect();
    names.push("manifest.json".into());
    names.iter().all(|n| fs::read(a.join(n)).unwrap() == fs::read(b.join(n)).unwrap())
}

fn criterion_14(r: &mut Report) {
    let simulate_cfg = ExperimentConfig {
        simulation: Some(SimulationConfig {
            cells: vec![24, 24],
            t_final: 0.2,
            sample_count: 40,
            dump_every: Some(10),
            initial_data: InitialData {
                u: Profile::RandomCosine { mean: 1.0, amplitude: 0.5, cutoff: 3, seed: 11 },
                v: Profile::Constant { value: 1.0 },
                v_floor: 1e-3,
            },
            ..standard_run(0.01)
        }),
        ..Default::default()
    };
    let oracle_cfg: ExperimentConfig = serde_json::from_value(serde_json::json!({
        "oracle": {
            "ode": { "cases": 10 },
            "square_completion": { "trials": 20 },
            "log_poincare": { "cells": [16, 16], "extents": [1.0, 1.0], "ensemble": { "samples": 50 } },
            "mean_poincare": { "cells": [16, 16], "extents": [1.0, 1.0], "ensemble": { "samples": 20, "selector": "random_mask" } }
        }
    }))
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut same = true;
    let mut files = 0;
    for (mode, cfg) in [(Mode::Simulate, &simulate_cfg), (Mode::Oracle, &oracle_cfg)] {
        let a = dir.path().join(format!("{mode}-a"));
        let b = dir.path().join(format!("{mode}-b"));
        let ma = run_experiment(mode, cfg, &a, Some(SEED)).unwrap();
        run_experiment(mode, cfg, &b, Some(SEED)).unwrap();
        files += ma.artifacts.len() + 1;
        same &= outputs_equal(&a, &b);
    }
    r.record(14, same, format!("{files} output files compared byte for byte across two runs"));
}

fn main() {
    let start = Instant::now();
    let mut report = Report { failures: Vec::new() };
    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_3(&mut report);

    let runs = standard_runs(&[0.01, 0.0, 0.1, 0.001, 0.05, 0.025, 0.0125]);
    criterion_4(&mut report, get(&runs, 0.01));
    criterion_5(&mut report, get(&runs, 0.01));
    criterion_6(&mut report);
    criterion_7(&mut report, &runs);
    criterion_8(&mut report, &runs);
    criterion_9(&mut report, &runs);
    criterion_10(&mut report);
    criterion_11(&mut report);
    criterion_12(&mut report, &runs);
    criterion_13(&mut report, &runs);
    criterion_14(&mut report);

    println!(
        "acceptance: {} of 14 criteria passed in {:.0} s",
        14 - report.failures.len(),
        start.elapsed().as_secs_f64()
    );
    if !report.failures.is_empty() {
        eprintln!("failed criteria: {:?}", report.failures);
        std::process::exit(1);
    }
}
