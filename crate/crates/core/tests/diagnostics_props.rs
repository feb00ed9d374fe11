use logsense_core::diagnostics::{
    apriori_bounds_check, builtin_nonnegative_family, collect, entropy_identity_residual, log_mass_check,
    supersolution_residual, trace_positivity_check, u_lr_bound, v_weak_residual, DiagnosticsRecord, SpatialPart,
    TemporalPart, TestFunction,
};
use logsense_core::grid::{Field, Grid};
use logsense_core::params::ModelParams;
use logsense_core::simulator::{run_trajectory, InitialData, Profile, RunConfig, SimState};
use proptest::prelude::*;

fn family_parts(family: &[TestFunction]) -> Vec<SpatialPart> {
    family.iter().map(|f| f.spatial.clone()).collect()
}

fn record_for(initial: SimState<f64>, t_final: f64, samples: usize, family: &[TestFunction]) -> DiagnosticsRecord<f64> {
    let cfg = RunConfig::default().uniform_samples(t_final, samples);
    let traj = run_trajectory(initial, t_final, &cfg).unwrap();
    collect(&traj, &family_parts(family), &[]).unwrap()
}

fn smooth_state(chi: f64, eps: f64, seed: u64) -> SimState<f64> {
    let grid = Grid::uniform(2, 12, 1.0).unwrap();
    let data = InitialData {
        u: Profile::RandomCosine { mean: 1.0, amplitude: 0.6, cutoff: 2, seed },
        v: Profile::RandomCosine { mean: 1.0, amplitude: 0.4, cutoff: 2, seed: seed.wrapping_add(1) },
        v_floor: 1e-3,
    };
    data.build(grid, ModelParams::new(chi, 2, eps).with_exponents(0.2, 0.5, 1.1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dissipation_densities_are_nonnegative(seed in any::<u64>(), eps in 0.0f64..0.2) {
        let rec = record_for(smooth_state(2.0, eps, seed), 0.05, 20, &[]);
        for s in &rec.samples {
            prop_assert!(s.d1 >= 0.0 && s.d2 >= 0.0);
            prop_assert!(s.young_excess <= 1e-12);
        }
        prop_assert!(u_lr_bound(&rec).unwrap().passed);
    }

    #[test]
    fn supersolution_direction_holds(seed in any::<u64>(), eps in prop_oneof![Just(0.0), 0.01f64..0.3]) {
        let family = builtin_nonnegative_family(&[1.0, 1.0], 0.05);
        let rec = record_for(smooth_state(2.0, eps, seed), 0.05, 200, &family);
        for f in &family {
            let rep = supersolution_residual(&rec, f).unwrap();
            prop_assert!(rep.passed, "{f:?}: {rep:?}");
            prop_assert!(rep.eps_term >= 0.0);
        }
    }
}

#[test]
fn constant_state_functionals_and_residuals() {
    let grid = Grid::uniform(2, 8, 1.0).unwrap();
    let c: f64 = 1.3;
    let params = ModelParams::new(2.0, 2, 0.0).with_exponents(0.2, 0.5, 1.1);
    let initial = SimState::new(Field::constant(grid, c), Field::constant(grid, c), params).unwrap();
    let mut family = builtin_nonnegative_family(&[1.0, 1.0], 1.0);
    family.push(TestFunction::new(
        SpatialPart::Cosine { wavenumbers: vec![2, 1], amplitude: 1.0, offset: 0.0 },
        TemporalPart::Window { start: 0.2, end: 0.7 },
    ));
    let rec = record_for(initial, 1.0, 50, &family);
    let upq = c.powf(0.7);
    for s in &rec.samples {
        assert!((s.mass - c).abs() <= 1e-14);
        assert_eq!((s.d1, s.d2), (0.0, 0.0));
        assert!((s.reaction_plus - upq).abs() <= 1e-14 && (s.reaction_minus - upq).abs() <= 1e-14);
        assert!((s.log_u - c.ln()).abs() <= 1e-14);
    }
    for f in &family {
        assert!(entropy_identity_residual(&rec, f).unwrap().residual.abs() <= 1e-10, "{f:?}");
        assert!(v_weak_residual(&rec, f).unwrap().residual.abs() <= 1e-10, "{f:?}");
    }
    assert!((trace_positivity_check(&rec).min - upq).abs() <= 1e-14);
    let log_mass = log_mass_check(&rec, 1e-10).unwrap();
    assert!(log_mass.passed && log_mass.int_grad_log_u == 0.0);
}

#[test]
fn zero_test_function_gives_zero_residual() {
    let rec = record_for(smooth_state(1.0, 0.1, 5), 0.05, 20, &[]);
    let zero = TestFunction::new(SpatialPart::Constant { value: 0.0 }, TemporalPart::Constant);
    let rec_zero = {
        let cfg = RunConfig::default().uniform_samples(0.05, 20);
        let traj = run_trajectory(smooth_state(1.0, 0.1, 5), 0.05, &cfg).unwrap();
        collect(&traj, &[zero.spatial.clone()], &[]).unwrap()
    };
    assert_eq!(supersolution_residual(&rec_zero, &zero).unwrap().value, 0.0);
    assert!(supersolution_residual(&rec, &zero).is_err(), "factor not collected");
}

#[test]
fn identity_residual_shrinks_under_refinement() {
    let residual = |n: usize| {
        let grid = Grid::uniform(2, n, 1.0).unwrap();
        let data = InitialData {
            u: Profile::Gaussian { background: 1.0, amplitude: 0.5, width: 0.2, center: None },
            v: Profile::Constant { value: 1.0 },
            v_floor: 1e-3,
        };
        let initial = data.build(grid, ModelParams::new(1.0, 2, 0.01).with_exponents(0.5, 0.25, 1.2)).unwrap();
        let h = 1.0 / n as f64;
        let cfg = RunConfig { fixed_dt: Some(0.2 * h * h), observe_every: Some(2), ..RunConfig::default() };
        let traj = run_trajectory(initial, 0.02, &cfg).unwrap();
        let rec = collect(&traj, &[], &[]).unwrap();
        entropy_identity_residual(&rec, &TestFunction::one()).unwrap().residual.abs()
    };
    let (e1, e2) = (residual(16), residual(32));
    assert!((e1 / e2).log2() >= 1.5, "{e1:.3e} -> {e2:.3e}");
}

#[test]
fn apriori_bound_holds_on_a_smooth_run() {
    let rec = record_for(smooth_state(2.0, 0.01, 11), 0.1, 400, &[]);
    let rep = apriori_bounds_check(&rec).unwrap();
    assert!(rep.finite && rep.passed, "{rep:?}");
}

#[test]
fn log_mass_undefined_on_a_zero_cell() {
    let grid = Grid::uniform(1, 8, 1.0).unwrap();
    let mut u = vec![1.0; 8];
    u[0] = 0.0;
    let initial = SimState::new(
        Field::new(grid, u).unwrap(),
        Field::constant(grid, 1.0),
        ModelParams::new(1.0, 2, 0.0),
    )
    .unwrap();
    let cfg = RunConfig::default().uniform_samples(0.01, 4);
    let traj = run_trajectory(initial, 0.01, &cfg).unwrap();
    let rec = collect(&traj, &[], &[]).unwrap();
    let rep = log_mass_check(&rec, 1e-10).unwrap();
    assert!(!rep.defined && rep.undefined_from == Some(0.0));
    assert!(!trace_positivity_check(&rec).passed);
}
