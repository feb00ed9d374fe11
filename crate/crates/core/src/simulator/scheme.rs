use serde::{Deserialize, Serialize};

use super::{SimState, StepReport};
use crate::error::{Error, Result};
use crate::grid::{face_divergence, face_gradient, laplacian_neumann, FaceField, Field};
use crate::real::Real;

/// Face value of `u` in the chemotactic flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxKind {
    /// Cell on the side the drift comes from; keeps `u ≥ 0` under the CFL bound.
    #[default]
    Upwind,
    /// Arithmetic mean of the two cells; second order, used for refinement studies.
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct SchemeConfig<T> {
    pub flux: FluxKind,
    /// Safety factor `σ` in the CFL bound.
    pub safety: T,
    /// Smallest admissible `v` before `u/v` is declared singular.
    pub v_floor: T,
    /// Maximum number of `dt` halvings for one step.
    pub max_retries: usize,
}

impl<T: Real> Default for SchemeConfig<T> {
    fn default() -> Self {
        Self {
            flux: FluxKind::Upwind,
            safety: T::lit(0.4),
            v_floor: T::lit(1e-12),
            max_retries: 40,
        }
    }
}

/// `χ u_face ∂v / v_face` on every interior face; zero on boundary faces.
pub fn chemotactic_flux<T: Real>(state: &SimState<T>, cfg: &SchemeConfig<T>) -> Result<FaceField<T>> {
    let min_v = state.v.min();
    if !(min_v >= cfg.v_floor) {
        return Err(Error::Singular {
            min_v: min_v.to_f64_lossy(),
            floor: cfg.v_floor.to_f64_lossy(),
        });
    }
    let grid = *state.u.grid();
    let chi = state.params.chi;
    let half = T::half();
    let u = state.u.values();
    let v = state.v.values();
    let mut flux = face_gradient(&state.v);
    for a in 0..grid.dim() {
        let (outer, n, inner) = grid.split(a);
        let faces = flux.axis_mut(a);
        for o in 0..outer {
            for i in 1..n {
                for k in 0..inner {
                    let lo = o * n * inner + (i - 1) * inner + k;
                    let hi = lo + inner;
                    let f = o * (n + 1) * inner + i * inner + k;
                    let dv = faces[f];
                    let v_face = half * (v[lo] + v[hi]);
                    let u_face = match cfg.flux {
                        FluxKind::Upwind => {
                            if dv >= T::zero() {
                                u[lo]
                            } else {
                                u[hi]
                            }
                        }
                        FluxKind::Central => half * (u[lo] + u[hi]),
                    };
                    faces[f] = chi * u_face * dv / v_face;
                }
            }
        }
    }
    Ok(flux)
}

/// Largest face drift speed `χ |∂v| / v_face`.
fn max_drift<T: Real>(state: &SimState<T>) -> T {
    let grid = *state.v.grid();
    let grad = face_gradient(&state.v);
    let v = state.v.values();
    let half = T::half();
    let mut m = T::zero();
    for a in 0..grid.dim() {
        let (outer, n, inner) = grid.split(a);
        let faces = grad.axis(a);
        for o in 0..outer {
            for i in 1..n {
                for k in 0..inner {
                    let lo = o * n * inner + (i - 1) * inner + k;
                    let v_face = half * (v[lo] + v[lo + inner]);
                    let s = faces[o * (n + 1) * inner + i * inner + k].abs() / v_face;
                    m = m.max(s);
                }
            }
        }
    }
    state.params.chi * m
}

/// `σ · min(h²/(2·dim), h/(2·max drift), 1)`.
pub fn cfl_dt<T: Real>(state: &SimState<T>, cfg: &SchemeConfig<T>) -> T {
    let grid = state.u.grid();
    let h = grid.min_spacing();
    let diffusive = h * h / (T::two() * T::from_usize_lossy(grid.dim()));
    let drift = max_drift(state);
    let advective = if drift > T::zero() {
        h / (T::two() * drift)
    } else {
        T::infinity()
    };
    cfg.safety * diffusive.min(advective).min(T::one())
}

/// Result of a single explicit Euler attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome<T> {
    Accepted(SimState<T>, StepReport<T>),
    /// Positivity failed; the input state is left untouched.
    Rejected(StepReport<T>),
}

/// One explicit Euler step of size `dt`.
pub fn step<T: Real>(state: &SimState<T>, dt: T, cfg: &SchemeConfig<T>) -> Result<StepOutcome<T>> {
    let cfl = cfl_dt(state, cfg);
    let chemo = chemotactic_flux(state, cfg)?;
    let mut total = face_gradient(&state.u);
    total = total.zip_map(&chemo, |d, c| d - c);
    let du = face_divergence(&total);

    let eps = state.params.eps;
    let one = T::one();
    let lap_v = laplacian_neumann(&state.v);
    let u_old = state.u.values();
    let v_old = state.v.values();

    let u_new: Vec<T> = u_old
        .iter()
        .zip(du.values())
        .map(|(&u, &d)| u + dt * d)
        .collect();
    let v_new: Vec<T> = v_old
        .iter()
        .zip(lap_v.values())
        .zip(u_old)
        .map(|((&v, &l), &u)| v + dt * (l - v + u / (one + eps * u)))
        .collect();

    let grid = *state.u.grid();
    let max_u = u_new.iter().copied().fold(T::neg_infinity(), T::max);
    let min_u = u_new.iter().copied().fold(T::infinity(), T::min);
    let min_v = v_new.iter().copied().fold(T::infinity(), T::min);
    let finite = max_u.is_finite() && min_v.is_finite();
    let positivity_ok = finite && min_u >= T::zero() && min_v > T::zero();
    let report = StepReport {
        t: state.t + dt,
        dt_used: dt,
        max_u,
        min_v,
        cfl_bound: cfl,
        positivity_ok,
        retries: 0,
    };
    if !positivity_ok {
        return Ok(StepOutcome::Rejected(report));
    }
    let next = SimState {
        t: state.t + dt,
        u: Field::new(grid, u_new)?,
        v: Field::new(grid, v_new)?,
        params: state.params,
    };
    Ok(StepOutcome::Accepted(next, report))
}

/// Steps with `dt`, halving on positivity failure up to `cfg.max_retries` times.
pub fn advance<T: Real>(
    state: &SimState<T>,
    dt: T,
    cfg: &SchemeConfig<T>,
) -> Result<(SimState<T>, StepReport<T>)> {
    let mut trial = dt;
    for retries in 0..=cfg.max_retries {
        match step(state, trial, cfg)? {
            StepOutcome::Accepted(next, mut report) => {
                report.retries = retries;
                return Ok((next, report));
            }
            StepOutcome::Rejected(_) => trial = trial * T::half(),
        }
    }
    Err(Error::StepFailed {
        t: state.t.to_f64_lossy(),
        reason: format!(
            "positivity still violated after {} halvings of dt = {}",
            cfg.max_retries, dt
        ),
    })
}
