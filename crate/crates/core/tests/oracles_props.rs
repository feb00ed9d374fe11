use logsense_core::grid::{Field, Grid};
use logsense_core::oracles::{
    check_power_identities, check_square_completion, coth_bound, log_poincare_ratio, mean_poincare_ratio,
    verify_ode_comparison, BSelector, EnsembleSpec, OdeComparison,
};
use logsense_core::params::q_bounds;
use proptest::prelude::*;

fn positive_field(grid: Grid<f64>) -> impl Strategy<Value = Field<f64>> {
    prop::collection::vec(0.01f64..10.0, grid.len()).prop_map(move |v| Field::new(grid, v).unwrap())
}

fn square_case() -> impl Strategy<Value = (Field<f64>, Field<f64>, f64, f64, f64)> {
    (4usize..10, 4usize..10, 0.1f64..3.0, 0.01f64..0.99, 0.01f64..0.99).prop_flat_map(|(a, b, chi, sp, sq)| {
        let grid = Grid::new(&[a, b], &[1.0, 1.5]).unwrap();
        let p = sp * 1.0f64.min(1.0 / (chi * chi));
        let (qm, qp) = q_bounds(p, chi).unwrap();
        let q = qm + sq * (qp - qm);
        (positive_field(grid), positive_field(grid), Just(p), Just(q), Just(chi))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn square_completion_is_exact_algebra((u, v, p, q, chi) in square_case()) {
        let rep = check_square_completion(&u, &v, p, q, chi).unwrap();
        prop_assert!(rep.relative() <= 1e-10, "{rep:?}");
    }

    #[test]
    fn ode_solution_stays_below_the_coth_bound(a in 0.1f64..=10.0, b in 0.1f64..=10.0, y0 in 0.1f64..=10.0) {
        let rep = verify_ode_comparison(&OdeComparison { a, b, y0, t_final: 1.0 }).unwrap();
        prop_assert!(rep.passed, "{rep:?}");
    }
}

#[test]
fn coth_spot_value() {
    let bound = coth_bound(1.0f64, 4.0, 1.0);
    assert!((bound - 2.0 * 2f64.cosh() / 2f64.sinh()).abs() <= 1e-12);
}

#[test]
fn power_identities_converge_at_second_order() {
    let errs = |dim: usize, r: f64, levels: &[usize]| -> Vec<(f64, f64)> {
        levels
            .iter()
            .map(|&n| {
                let g = Grid::<f64>::uniform(dim, n, 1.0).unwrap();
                let w = Field::from_fn(g, |x| x[0].exp() * if dim > 1 { 2.0 + (std::f64::consts::PI * x[1]).cos() } else { 1.0 });
                let rep = check_power_identities(&w, r).unwrap();
                (rep.res29, rep.res210)
            })
            .collect()
    };
    for (dim, r, levels) in [(1, 2.0, vec![32, 64, 128]), (2, 1.5, vec![64, 128, 256])] {
        let e = errs(dim, r, &levels);
        for w in e.windows(2) {
            for (a, b) in [(w[0].0, w[1].0), (w[0].1, w[1].1)] {
                // At r = 2 the first identity holds exactly in the discrete operators.
                if a <= 1e-12 && b <= 1e-12 {
                    continue;
                }
                let order = (a / b).log2();
                assert!(order >= 1.9, "dim {dim}, r {r}: order {order}");
            }
        }
    }
}

#[test]
fn log_poincare_branches_partition_the_ensemble() {
    let spec = EnsembleSpec { samples: 60, seed: 9, ..EnsembleSpec::default() };
    let grid = Grid::<f64>::uniform(2, 12, 1.0).unwrap();
    let rep = log_poincare_ratio(&spec, grid).unwrap();
    assert_eq!(rep.ratio_count + rep.alternative_count + rep.excluded, rep.samples);
    if let Some(m) = rep.max_ratio {
        assert!(m.is_finite() && m >= 0.0);
    }
}

#[test]
fn mean_poincare_is_reproducible_under_a_seed() {
    let spec = EnsembleSpec { samples: 20, seed: 4, selector: BSelector::RandomMask, ..EnsembleSpec::default() };
    let grid = Grid::<f64>::uniform(2, 10, 1.0).unwrap();
    let a = mean_poincare_ratio(&spec, grid, 1.0, None).unwrap();
    let b = mean_poincare_ratio(&spec, grid, 1.0, None).unwrap();
    assert_eq!(a.max_ratio.to_bits(), b.max_ratio.to_bits());
    assert_eq!(a.ratios, b.ratios);
    let other = mean_poincare_ratio(&EnsembleSpec { seed: 5, ..spec }, grid, 1.0, None).unwrap();
    assert_ne!(a.ratios, other.ratios);
}
