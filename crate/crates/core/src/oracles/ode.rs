use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Absolute slack in the comparison `y(t) ≤ √(b/a) coth(√(ab) t)`.
pub const ODE_TOLERANCE: f64 = 1e-6;

/// Number of RK4 steps over `[0, T]`.
pub const ODE_STEPS: usize = 100_000;

/// Riccati comparison problem `y' = −a y² + b`, `y(0) = y0` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeComparison<T> {
    pub a: T,
    pub b: T,
    pub y0: T,
    pub t_final: T,
}

/// `√(b/a) coth(√(ab) t)` for `t > 0`.
pub fn coth_bound<T: Real>(a: T, b: T, t: T) -> T {
    (b / a).sqrt() / ((a * b).sqrt() * t).tanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeReport<T> {
    pub steps: usize,
    /// Largest `y(t) − bound(t)` over mesh points `t > 0`.
    pub max_excess: T,
    pub final_value: T,
    pub passed: bool,
}

/// Integrates the saturated equation with classical RK4 and `dt = T/10⁵` and compares
/// with the coth bound at every mesh point.
pub fn verify_ode_comparison<T: Real>(spec: &OdeComparison<T>) -> Result<OdeReport<T>> {
    if !(spec.a > T::zero() && spec.b > T::zero() && spec.t_final > T::zero()) {
        return Err(Error::Precondition(format!("need a, b, T > 0, got {spec:?}")));
    }
    let f = |y: T| -spec.a * y * y + spec.b;
    let dt = spec.t_final / T::from_usize_lossy(ODE_STEPS);
    let sixth = T::one() / T::lit(6.0);
    let mut y = spec.y0;
    let mut max_excess = T::neg_infinity();
    for k in 1..=ODE_STEPS {
        let k1 = f(y);
        let k2 = f(y + T::half() * dt * k1);
        let k3 = f(y + T::half() * dt * k2);
        let k4 = f(y + dt * k3);
        y = y + dt * sixth * (k1 + T::two() * k2 + T::two() * k3 + k4);
        let t = dt * T::from_usize_lossy(k);
        max_excess = max_excess.max(y - coth_bound(spec.a, spec.b, t));
    }
    Ok(OdeReport {
        steps: ODE_STEPS,
        max_excess,
        final_value: y,
        passed: max_excess <= T::lit(ODE_TOLERANCE),
    })
}
