//! Explicit conservative time integration of the regularized system
//!
//! ```text
//! u_t = Δu − χ ∇·((u/v) ∇v),    v_t = Δv − v + u/(1 + εu).
//! ```

mod initial;
mod run;
mod scheme;

pub use initial::{CosineTerm, InitialData, Profile};
pub use run::{run, run_trajectory, write_reports_csv, RunConfig, RunOutcome, Trajectory};
pub use scheme::{advance, cfl_dt, chemotactic_flux, step, FluxKind, SchemeConfig, StepOutcome};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::params::ModelParams;
use crate::real::Real;

/// Snapshot `(t, u, v)` of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState<T> {
    pub t: T,
    pub u: Field<T>,
    pub v: Field<T>,
    pub params: ModelParams<T>,
}

impl<T: Real> SimState<T> {
    /// Checks `u ≥ 0`, `v > 0`, matching grids and parameter ranges.
    pub fn new(u: Field<T>, v: Field<T>, params: ModelParams<T>) -> Result<Self> {
        if !u.grid().same_shape(v.grid()) {
            return Err(Error::Precondition("u and v live on different grids".into()));
        }
        params.validate()?;
        if let Some(i) = u.values().iter().position(|&x| x < T::zero()) {
            return Err(Error::Precondition(format!("u negative at cell {i}")));
        }
        v.ensure_positive()?;
        Ok(Self {
            t: T::zero(),
            u,
            v,
            params,
        })
    }

    pub fn at_time(mut self, t: T) -> Self {
        self.t = t;
        self
    }
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport<T> {
    /// Time at the end of the step.
    pub t: T,
    pub dt_used: T,
    pub max_u: T,
    pub min_v: T,
    pub cfl_bound: T,
    pub positivity_ok: bool,
    /// Number of halvings before the step was accepted.
    pub retries: usize,
}
