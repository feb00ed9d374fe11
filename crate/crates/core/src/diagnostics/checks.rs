use serde::Serialize;

use super::{DiagnosticsRecord, Moments, TestFunction};
use crate::error::{Error, Result};
use crate::real::Real;

/// Absolute part of every tolerance `τ = 10⁻⁶ + discretization estimate`.
pub const ABSOLUTE_TOLERANCE: f64 = 1e-6;

/// The log-mass inequality is checked from the first sample after this fraction of `T`.
pub const LOG_MASS_WINDOW: f64 = 0.05;

/// `∫ y dt` by the trapezoid rule.
pub fn time_integral<T: Real>(t: &[T], y: &[T]) -> T {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(tw, yw)| T::half() * (tw[1] - tw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Both sides of a weak identity and their mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport<T> {
    pub lhs: T,
    pub rhs: T,
    /// `|lhs − rhs|`
    pub residual: T,
    /// Sum of the magnitudes of all individual terms.
    pub scale: T,
}

impl<T: Real> IdentityReport<T> {
    fn new(lhs: T, rhs: T, terms: &[T]) -> Self {
        let scale = terms.iter().map(|x| x.abs()).sum::<T>() + lhs.abs();
        Self {
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
            scale,
        }
    }

    pub fn relative(&self) -> T {
        if self.scale > T::zero() {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

struct Weak<'a, T> {
    t: Vec<T>,
    zeta: Vec<T>,
    m: Vec<&'a Moments<T>>,
}

impl<'a, T: Real> Weak<'a, T> {
    fn new(record: &'a DiagnosticsRecord<T>, tf: &TestFunction) -> Result<Self> {
        record.ensure_dense()?;
        tf.temporal.validate()?;
        let j = record.spatial_index(&tf.spatial)?;
        let t = record.times();
        Ok(Self {
            zeta: t.iter().map(|&s| tf.temporal.value(s)).collect(),
            m: record.moments.iter().map(|row| &row[j]).collect(),
            t,
        })
    }

    /// `∫ f(moments) ζ dt`
    fn against_zeta(&self, f: impl Fn(&Moments<T>) -> T) -> T {
        let y: Vec<T> = self.m.iter().zip(&self.zeta).map(|(m, &z)| f(m) * z).collect();
        time_integral(&self.t, &y)
    }

    /// `−∫ f ζ' dt + f(T)ζ(T) − f(0)ζ(0)`, with `∫ f ζ'` summed by parts as
    /// `Σ ½(f_k + f_{k+1})(ζ_{k+1} − ζ_k)` so that a constant `f` telescopes exactly.
    fn time_side(&self, f: impl Fn(&Moments<T>) -> T) -> T {
        let n = self.t.len() - 1;
        let by_parts: T = (0..n)
            .map(|k| T::half() * (f(self.m[k]) + f(self.m[k + 1])) * (self.zeta[k + 1] - self.zeta[k]))
            .sum();
        -by_parts + f(self.m[n]) * self.zeta[n] - f(self.m[0]) * self.zeta[0]
    }
}

/// Terms of the entropy identity; the last entry is the regularized source.
fn entropy_terms<T: Real>(record: &DiagnosticsRecord<T>, w: &Weak<'_, T>) -> (T, [T; 6], T) {
    let prm = record.params;
    let c = record.coefficients;
    let pchi_q = prm.p * prm.chi / prm.q;
    let lhs = w.time_side(|m| m.entropy);
    let terms = [
        c.c1 * w.against_zeta(|m| m.d1),
        c.c2 * w.against_zeta(|m| m.d2),
        -T::two() * pchi_q * w.against_zeta(|m| m.cross),
        (T::one() - pchi_q) * w.against_zeta(|m| m.lap),
        -prm.q * w.against_zeta(|m| m.entropy),
        prm.q * w.against_zeta(|m| m.reaction_plus),
    ];
    let unreg = prm.q * w.against_zeta(|m| m.reaction_plus_unreg);
    (lhs, terms, unreg)
}

/// Discrete entropy identity for `φ = ψ ζ`:
/// `−∫∫ uᵖv^q φ_t + [∫ uᵖv^q φ]₀ᵀ` against the six dissipation, transport and reaction terms.
pub fn entropy_identity_residual<T: Real>(record: &DiagnosticsRecord<T>, tf: &TestFunction) -> Result<IdentityReport<T>> {
    let w = Weak::new(record, tf)?;
    let (lhs, terms, _) = entropy_terms(record, &w);
    Ok(IdentityReport::new(lhs, terms.iter().copied().sum(), &terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupersolutionReport<T> {
    pub lhs: T,
    /// Right side with the unregularized reaction `q ∫∫ u^{p+1} v^{q−1} φ`.
    pub rhs: T,
    /// `rhs − lhs`
    pub value: T,
    /// `q ∫∫ u^{p+1} v^{q−1} (1 − 1/(1+εu)) φ ≥ 0`
    pub eps_term: T,
    /// Entropy identity residual for the same `φ`.
    pub discretization: T,
    pub tolerance: T,
    /// `value ≥ −tolerance`
    pub passed: bool,
}

/// `RHS − LHS` of the supersolution inequality for a nonnegative `φ`. For regularized
/// trajectories this is the `ε`-discrepancy plus discretization error.
pub fn supersolution_residual<T: Real>(
    record: &DiagnosticsRecord<T>,
    tf: &TestFunction,
) -> Result<SupersolutionReport<T>> {
    if !tf.is_nonnegative(record.grid)? {
        return Err(Error::Precondition(format!("test function {tf:?} is not nonnegative")));
    }
    let w = Weak::new(record, tf)?;
    let (lhs, terms, unreg) = entropy_terms(record, &w);
    let rhs_eps: T = terms.iter().copied().sum();
    let rhs = rhs_eps - terms[5] + unreg;
    let discretization = (lhs - rhs_eps).abs();
    let tolerance = T::lit(ABSOLUTE_TOLERANCE) + discretization;
    let value = rhs - lhs;
    Ok(SupersolutionReport {
        lhs,
        rhs,
        value,
        eps_term: unreg - terms[5],
        discretization,
        tolerance,
        passed: value >= -tolerance,
    })
}

/// Weak form of the signal equation,
/// `−∫∫ vφ_t + [∫ vφ]₀ᵀ = ∫∫ (−∇v·∇φ − vφ + u/(1+εu) φ)`.
pub fn v_weak_residual<T: Real>(record: &DiagnosticsRecord<T>, tf: &TestFunction) -> Result<IdentityReport<T>> {
    let w = Weak::new(record, tf)?;
    let lhs = w.time_side(|m| m.v);
    let terms = [
        -w.against_zeta(|m| m.grad_v),
        -w.against_zeta(|m| m.v),
        w.against_zeta(|m| m.source),
    ];
    Ok(IdentityReport::new(lhs, terms.iter().copied().sum(), &terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriReport<T> {
    /// `c1 (min v)^q ∫∫|∇u^{p/2}|² + c2 ∫∫ D2 + q ∫∫ u^{p+1}v^{q−1}/(1+εu)`
    pub lhs: T,
    /// `∫uᵖv^q(T) − ∫uᵖv^q(0) + q ∫∫ uᵖv^q`
    pub rhs: T,
    pub slack: T,
    pub scale: T,
    pub tolerance: T,
    pub passed: bool,
    /// `∫∫ v^q |∇u^{p/2}|²`
    pub int_d1: T,
    /// `∫∫ |∇u^{p/2}|²`
    pub int_grad_up: T,
    /// `c2 ∫∫ D2`
    pub int_square: T,
    /// `∫∫ u^{p+1} v^{q−1}`
    pub int_reaction: T,
    pub finite: bool,
}

/// Assembled a priori inequality over the whole record, with `τ = 10⁻⁶ + |identity residual for φ ≡ 1|`.
pub fn apriori_bounds_check<T: Real>(record: &DiagnosticsRecord<T>) -> Result<AprioriReport<T>> {
    record.params.validate_for_entropy()?;
    let id = entropy_identity_residual(record, &TestFunction::one())?;
    let prm = record.params;
    let c = record.coefficients;
    let acc = &record.accumulated;
    let n = record.samples.len() - 1;
    let v_min = record.samples.iter().map(|s| s.v_min).fold(T::infinity(), T::min);
    let lhs = c.c1 * v_min.powf(prm.q) * acc.grad_up[n] + c.c2 * acc.d2[n] + prm.q * acc.reaction_plus[n];
    let (e0, et) = (record.first().entropy, record.last().entropy);
    let rhs = et - e0 + prm.q * acc.reaction_minus[n];
    let scale = lhs.abs() + et.abs() + e0.abs() + (prm.q * acc.reaction_minus[n]).abs();
    let tolerance = T::lit(ABSOLUTE_TOLERANCE) + id.residual;
    let slack = rhs - lhs;
    let ints = [acc.d1[n], acc.grad_up[n], c.c2 * acc.d2[n], acc.reaction_plus_unreg[n]];
    Ok(AprioriReport {
        lhs,
        rhs,
        slack,
        scale,
        tolerance,
        passed: slack >= -tolerance,
        int_d1: ints[0],
        int_grad_up: ints[1],
        int_square: ints[2],
        int_reaction: ints[3],
        finite: ints.iter().all(|x| x.is_finite()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YoungReport<T> {
    /// Largest cellwise relative excess over all snapshots.
    pub max_excess: T,
    /// `∫∫ u^r`
    pub int_u_lr: T,
    /// `∫∫ u^{p+1}v^{q−1} + ∫∫ v^{(1−q)r/(p+1−r)}`
    pub int_majorant: T,
    pub passed: bool,
}

/// Cellwise Young splitting `u^r ≤ u^{p+1}v^{q−1} + v^{(1−q)r/(p+1−r)}` on every snapshot.
pub fn u_lr_bound<T: Real>(record: &DiagnosticsRecord<T>) -> Result<YoungReport<T>> {
    let prm = record.params;
    if !(prm.r > T::one() && prm.r < prm.p + T::one()) {
        return Err(Error::Precondition(format!(
            "Young splitting needs 1 < r < p + 1, got r = {}, p = {}",
            prm.r, prm.p
        )));
    }
    let max_excess = record.samples.iter().map(|s| s.young_excess).fold(T::neg_infinity(), T::max);
    let acc = &record.accumulated;
    let n = record.samples.len() - 1;
    Ok(YoungReport {
        max_excess,
        int_u_lr: acc.u_lr[n],
        int_majorant: acc.reaction_plus_unreg[n] + acc.v_young[n],
        passed: max_excess <= T::lit(1e-12),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradVqReport<T> {
    /// Worst `rhs − lhs` over sample times.
    pub worst_slack: T,
    /// `(4(1−q)/q²) ∫∫ |∇v^{q/2}|²` at the final time.
    pub lhs: T,
    /// `(1/q) ∫ v^q(T) + ∫∫ v^q` at the final time.
    pub rhs: T,
    pub degenerate: bool,
    pub passed: bool,
}

/// `(4(1−q)/q²) ∫₀ᵗ∫ |∇v^{q/2}|² ≤ (1/q) ∫ v^q(t) + ∫₀ᵗ∫ v^q + τ` at every sample.
/// As `q → 1` the left coefficient vanishes; this is flagged rather than failed.
pub fn grad_vq_bound<T: Real>(record: &DiagnosticsRecord<T>, tolerance: T) -> Result<GradVqReport<T>> {
    let q = record.params.q;
    let coef = T::lit(4.0) * (T::one() - q) / (q * q);
    let acc = &record.accumulated;
    let mut worst = T::infinity();
    let (mut lhs, mut rhs) = (T::zero(), T::zero());
    for (k, s) in record.samples.iter().enumerate() {
        lhs = coef * acc.grad_vq[k];
        rhs = s.vq / q + acc.vq[k];
        worst = worst.min(rhs - lhs);
    }
    let degenerate = T::one() - q < T::lit(1e-6);
    Ok(GradVqReport {
        worst_slack: worst,
        lhs,
        rhs,
        degenerate,
        passed: degenerate || worst >= -tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualReport<T> {
    /// Right endpoints of the difference quotients.
    pub times: Vec<T>,
    /// `max_ψ |∫ ∂_t (u+1)^{p/2} ψ|`
    pub u_series: Vec<T>,
    /// `max_ψ |∫ v_t ψ|`
    pub v_series: Vec<T>,
    /// `∫|∇u^{p/2}|² + ∫|∇v^{1/2}|² + 1`, averaged over each interval.
    pub comparator: Vec<T>,
    pub u_integral: T,
    pub v_integral: T,
}

impl<T: Real> DualReport<T> {
    /// True if `u_series ≤ c · comparator` on every interval.
    pub fn within(&self, c: T) -> bool {
        self.u_series.iter().zip(&self.comparator).all(|(&s, &m)| s <= c * m)
    }
}

/// Finite-family lower bound for the dual norms of the time derivatives.
pub fn dual_norm_surrogate<T: Real>(record: &DiagnosticsRecord<T>) -> Result<DualReport<T>> {
    if record.dual.is_empty() {
        return Err(Error::Precondition("no dual test functions were collected".into()));
    }
    record.ensure_dense()?;
    let s = &record.samples;
    let mut out = DualReport {
        times: Vec::new(),
        u_series: Vec::new(),
        v_series: Vec::new(),
        comparator: Vec::new(),
        u_integral: T::zero(),
        v_integral: T::zero(),
    };
    for k in 1..s.len() {
        let dt = s[k].t - s[k - 1].t;
        let (a, b) = (&record.dual_moments[k - 1], &record.dual_moments[k]);
        let mut su = T::zero();
        let mut sv = T::zero();
        for (x, y) in a.iter().zip(b) {
            su = su.max(((y.0 - x.0) / dt).abs());
            sv = sv.max(((y.1 - x.1) / dt).abs());
        }
        let comp = |x: &super::Sample<T>| x.grad_up + x.grad_v_half + T::one();
        out.times.push(s[k].t);
        out.u_series.push(su);
        out.v_series.push(sv);
        out.comparator.push(T::half() * (comp(&s[k]) + comp(&s[k - 1])));
        out.u_integral = out.u_integral + su * dt;
        out.v_integral = out.v_integral + sv * dt;
    }
    Ok(out)
}

/// Smallest `c` with `u_series ≤ c · comparator` on the given reference report.
pub fn fit_dual_constant<T: Real>(reference: &DualReport<T>) -> T {
    reference
        .u_series
        .iter()
        .zip(&reference.comparator)
        .map(|(&s, &m)| s / m)
        .fold(T::zero(), T::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogMassReport<T> {
    pub defined: bool,
    /// First sample time with a nonpositive cell, if any.
    pub undefined_from: Option<T>,
    pub min_log_u: T,
    /// `∫₀ᵀ∫ |∇ ln u|²`
    pub int_grad_log_u: T,
    pub tau0: T,
    /// Smallest `rhs − lhs` of the log-mass inequality over samples `t > τ₀`.
    pub worst_slack: T,
    pub tolerance: T,
    pub passed: bool,
}

/// Checks, for samples `t > τ₀`,
///
/// ```text
/// −∫ln u(t) + ½∫_{τ₀}^t∫|∇ln u|² ≤ −∫ln u(τ₀) + χ²∫ln(v(t)/v(τ₀)) + χ²|Ω|(t−τ₀)
///                                  + (χ²/min v₀) e^T ∫u₀ (t−τ₀) + τ
/// ```
///
/// where `τ₀` is the first sample after `0.05 T`.
pub fn log_mass_check<T: Real>(record: &DiagnosticsRecord<T>, tolerance: T) -> Result<LogMassReport<T>> {
    let s = &record.samples;
    let nan = T::nan();
    if let Some(bad) = s.iter().find(|x| !x.log_u.is_finite()) {
        return Ok(LogMassReport {
            defined: false,
            undefined_from: Some(bad.t),
            min_log_u: nan,
            int_grad_log_u: nan,
            tau0: nan,
            worst_slack: nan,
            tolerance,
            passed: false,
        });
    }
    let t_final = record.final_time();
    let window = s[0].t + T::lit(LOG_MASS_WINDOW) * (t_final - s[0].t);
    let i0 = s
        .iter()
        .position(|x| x.t > window)
        .ok_or_else(|| Error::Precondition("no sample after the log-mass window".into()))?;
    let chi2 = record.params.chi * record.params.chi;
    let volume = record.grid.volume();
    let drift = chi2 / s[0].v_min * t_final.exp() * s[0].mass;
    let acc = &record.accumulated.grad_log_u;
    let tau0 = s[i0].t;
    let mut worst = T::infinity();
    for k in i0 + 1..s.len() {
        let elapsed = s[k].t - tau0;
        let lhs = -s[k].log_u + T::half() * (acc[k] - acc[i0]);
        let rhs = -s[i0].log_u + chi2 * (s[k].log_v - s[i0].log_v) + chi2 * volume * elapsed + drift * elapsed;
        worst = worst.min(rhs - lhs);
    }
    Ok(LogMassReport {
        defined: true,
        undefined_from: None,
        min_log_u: s.iter().map(|x| x.log_u).fold(T::infinity(), T::min),
        int_grad_log_u: *acc.last().expect("nonempty"),
        tau0,
        worst_slack: worst,
        tolerance,
        passed: worst >= -tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceReport<T> {
    pub min: T,
    pub time_of_min: T,
    pub passed: bool,
}

/// Minimum over samples of the boundary minimum of `uᵖ v^q`.
pub fn trace_positivity_check<T: Real>(record: &DiagnosticsRecord<T>) -> TraceReport<T> {
    let (mut min, mut at) = (T::infinity(), record.first().t);
    for s in &record.samples {
        if s.boundary_min_upq < min {
            min = s.boundary_min_upq;
            at = s.t;
        }
    }
    TraceReport {
        min,
        time_of_min: at,
        passed: min > T::zero(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VFloorReport<T> {
    /// Smallest `min v(t) − (min v₀ e^{−t} − 10h²)` over samples.
    pub worst_margin: T,
    pub passed: bool,
}

/// Comparison floor `min v(t) ≥ (min v₀) e^{−(t−t₀)} − 10 h²`.
pub fn v_floor_check<T: Real>(record: &DiagnosticsRecord<T>) -> VFloorReport<T> {
    let h = record.grid.max_spacing();
    let first = record.first();
    let worst = record
        .samples
        .iter()
        .map(|s| s.v_min - (first.v_min * (first.t - s.t).exp() - T::lit(10.0) * h * h))
        .fold(T::infinity(), T::min);
    VFloorReport {
        worst_margin: worst,
        passed: worst >= T::zero(),
    }
}
