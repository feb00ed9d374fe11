//! Randomized drivers around the analytic oracles.

use anyhow::Result;
use logsense_core::grid::{Field, Grid};
use logsense_core::oracles::{
    check_power_identities, check_square_completion, coth_bound, verify_ode_comparison, OdeComparison,
};
use logsense_core::params::q_bounds;
use logsense_core::simulator::Profile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::study::{ErrorSeries, Order};

#[derive(Debug, Clone, Serialize)]
pub struct OdeSuiteReport {
    pub cases: usize,
    pub failures: usize,
    /// Cases that start above and below the equilibrium `√(b/a)`.
    pub above: usize,
    pub below: usize,
    pub max_excess: f64,
    /// `2·coth(2)` from the bound versus `2·cosh(2)/sinh(2)`.
    pub spot_value: f64,
    pub spot_independent: f64,
    pub spot_difference: f64,
}

/// `cases` random `(a, b, y₀) ∈ [0.1, 10]³` with horizon 1.
pub fn ode_suite(cases: usize, seed: u64) -> Result<OdeSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut failures, mut above, mut below, mut max_excess) = (0, 0, 0, f64::NEG_INFINITY);
    for _ in 0..cases {
        let spec: OdeComparison<f64> = OdeComparison {
            a: rng.gen_range(0.1..=10.0),
            b: rng.gen_range(0.1..=10.0),
            y0: rng.gen_range(0.1..=10.0),
            t_final: 1.0,
        };
        if spec.y0 > (spec.b / spec.a).sqrt() {
            above += 1;
        } else {
            below += 1;
        }
        let rep = verify_ode_comparison(&spec)?;
        if !rep.passed {
            failures += 1;
        }
        max_excess = max_excess.max(rep.max_excess);
    }
    let spot_value = coth_bound(1.0, 4.0, 1.0);
    let spot_independent = 2.0 * 2f64.cosh() / 2f64.sinh();
    Ok(OdeSuiteReport {
        cases,
        failures,
        above,
        below,
        max_excess,
        spot_value,
        spot_independent,
        spot_difference: (spot_value - spot_independent).abs(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SquareCompletionSuiteReport {
    pub trials: usize,
    pub max_relative: f64,
}

fn random_positive_field(grid: Grid<f64>, rng: &mut ChaCha8Rng) -> Result<Field<f64>> {
    let profile = Profile::RandomCosine {
        mean: 0.0,
        amplitude: rng.gen_range(0.2..2.0),
        cutoff: 3,
        seed: rng.gen(),
    };
    let floor = rng.gen_range(1e-3..1.0);
    Ok(profile.sample(grid)?.map(|x| x.exp() + floor))
}

/// Random positive fields and random admissible `(p, q, χ)` on random small 2D grids.
pub fn square_completion_suite(trials: usize, seed: u64) -> Result<SquareCompletionSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_relative = 0.0f64;
    for _ in 0..trials {
        let n = rng.gen_range(4..=12);
        let grid = Grid::<f64>::new(&[n, n + 2], &[rng.gen_range(0.5..2.0), 1.0])?;
        let u = random_positive_field(grid, &mut rng)?;
        let v = random_positive_field(grid, &mut rng)?;
        let chi: f64 = rng.gen_range(0.1..3.0);
        let p = rng.gen_range(0.01..0.99) * (1.0f64).min(1.0 / (chi * chi));
        let (qm, qp) = q_bounds(p, chi)?;
        let q = qm + rng.gen_range(0.01..0.99) * (qp - qm);
        let rep = check_square_completion(&u, &v, p, q, chi)?;
        max_relative = max_relative.max(rep.relative());
    }
    Ok(SquareCompletionSuiteReport { trials, max_relative })
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerIdentitySuiteReport {
    pub r: f64,
    pub levels: Vec<usize>,
    pub res29: ErrorSeries,
    pub res210: ErrorSeries,
}

impl PowerIdentitySuiteReport {
    pub fn min_order(&self) -> f64 {
        self.res29
            .orders
            .iter()
            .chain(&self.res210.orders)
            .map(|o| match o {
                Order::Value(v) => *v,
                Order::Exact => f64::INFINITY,
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// `w = eˣ (2 + cos πy)` on the unit square at each level.
pub fn power_identity_suite(levels: &[usize], r: f64) -> Result<PowerIdentitySuiteReport> {
    let mut res29 = Vec::new();
    let mut res210 = Vec::new();
    for &n in levels {
        let grid = Grid::<f64>::uniform(2, n, 1.0)?;
        let w = Field::from_fn(grid, |x| x[0].exp() * (2.0 + (std::f64::consts::PI * x[1]).cos()));
        let rep = check_power_identities(&w, r)?;
        res29.push(rep.res29);
        res210.push(rep.res210);
    }
    Ok(PowerIdentitySuiteReport {
        r,
        levels: levels.to_vec(),
        res29: ErrorSeries::from_errors("power_identity_29", res29),
        res210: ErrorSeries::from_errors("power_identity_210", res210),
    })
}
