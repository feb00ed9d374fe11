use logsense_core::grid::{
    face_divergence, face_gradient, integrate, laplacian_neumann, read_binary, write_binary, write_csv, FaceField,
    Field, Grid,
};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = Grid<f64>> {
    prop_oneof![
        (4usize..40, 0.5f64..3.0).prop_map(|(n, l)| Grid::new(&[n], &[l]).unwrap()),
        (4usize..16, 4usize..16, 0.5f64..3.0, 0.5f64..3.0).prop_map(|(a, b, la, lb)| Grid::new(&[a, b], &[la, lb]).unwrap()),
        (4usize..7, 4usize..7, 4usize..7).prop_map(|(a, b, c)| Grid::new(&[a, b, c], &[1.0, 0.7, 1.3]).unwrap()),
    ]
}

fn field_on(grid: Grid<f64>) -> impl Strategy<Value = Field<f64>> {
    prop::collection::vec(-5.0f64..5.0, grid.len()).prop_map(move |v| Field::new(grid, v).unwrap())
}

fn grid_and_fields() -> impl Strategy<Value = (Field<f64>, Field<f64>)> {
    grid_strategy().prop_flat_map(|g| (field_on(g), field_on(g)))
}

fn grid_and_flux() -> impl Strategy<Value = FaceField<f64>> {
    grid_strategy().prop_flat_map(|g| {
        let lens: Vec<usize> = (0..g.dim()).map(|a| g.face_len(a)).collect();
        lens.iter()
            .map(|&n| prop::collection::vec(-5.0f64..5.0, n))
            .collect::<Vec<_>>()
            .prop_map(move |axes| {
                let mut f = FaceField::zeros(g);
                for (a, vals) in axes.into_iter().enumerate() {
                    f.axis_mut(a).copy_from_slice(&vals);
                }
                f.clear_boundary();
                f
            })
    })
}

proptest! {
    #[test]
    fn divergence_of_no_flux_field_integrates_to_zero(flux in grid_and_flux()) {
        let div = face_divergence(&flux);
        let scale: f64 = div.values().iter().map(|x| x.abs()).sum::<f64>() * flux.grid().cell_volume();
        prop_assert!(integrate(&div).abs() <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn laplacian_is_self_adjoint((f, g) in grid_and_fields()) {
        let a = integrate(&f.zip_map(&laplacian_neumann(&g), |x, y| x * y));
        let b = integrate(&g.zip_map(&laplacian_neumann(&f), |x, y| x * y));
        let scale = integrate(&f.zip_map(&laplacian_neumann(&g), |x, y| (x * y).abs()));
        prop_assert!((a - b).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn laplacian_is_divergence_of_gradient(f in grid_strategy().prop_flat_map(field_on)) {
        let lap = laplacian_neumann(&f);
        let div = face_divergence(&face_gradient(&f));
        prop_assert!(lap.l1_distance(&div) <= 1e-9 * integrate(&lap.map(f64::abs)).max(1.0));
    }

    #[test]
    fn binary_dump_round_trips(f in grid_strategy().prop_flat_map(field_on)) {
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        let back = read_binary(buf.as_slice()).unwrap();
        prop_assert_eq!(back.values(), f.values());
        prop_assert_eq!(back.grid().cells(), f.grid().cells());
        prop_assert_eq!(back.grid().spacing(), f.grid().spacing());
    }
}

#[test]
fn laplacian_converges_at_second_order() {
    let exact = |x: &[f64]| -2.0 * std::f64::consts::PI.powi(2) * (std::f64::consts::PI * x[0]).cos() * (std::f64::consts::PI * x[1]).cos();
    let errors: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let g = Grid::<f64>::uniform(2, n, 1.0).unwrap();
            let f = Field::from_fn(g, |x| (std::f64::consts::PI * x[0]).cos() * (std::f64::consts::PI * x[1]).cos());
            laplacian_neumann(&f).l1_distance(&Field::from_fn(g, exact))
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "order {order}, errors {errors:?}");
    }
}

#[test]
fn csv_has_one_row_per_cell() {
    let g = Grid::<f64>::new(&[4, 5], &[1.0, 1.0]).unwrap();
    let f = Field::from_fn(g, |x| x[0] + x[1]);
    let mut buf = Vec::new();
    write_csv(&f, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + 20);
}

#[test]
fn restriction_needs_nested_grids() {
    let fine = Grid::<f64>::uniform(2, 16, 1.0).unwrap();
    let f = Field::from_fn(fine, |x| x[0]);
    assert!(f.restrict(&Grid::uniform(2, 4, 1.0).unwrap()).is_ok());
    assert!(f.restrict(&Grid::uniform(2, 5, 1.0).unwrap()).is_err());
    let mean = |g: &Field<f64>| integrate(g) / g.grid().volume();
    let coarse = f.restrict(&Grid::uniform(2, 4, 1.0).unwrap()).unwrap();
    assert!((mean(&coarse) - mean(&f)).abs() < 1e-15);
}
