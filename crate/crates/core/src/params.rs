//! Exponent algebra of the `(p, q)` entropy functional `∫ uᵖ v^q`.
//!
//! Everything here is a closed-form evaluation: the admissible `q`-interval
//! for given `p`, the coefficients of the dissipation identity, the
//! sensitivity thresholds per dimension, and the infimum of `(1 − q)/p` over
//! the admissible region, plus a deterministic selector for `(p, q, r)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Absolute slack for domain checks such as `p ≤ 1/χ²`.
pub const DOMAIN_SLACK: f64 = 1e-14;

/// Finite stand-in for `n/(n − 2)` when `n = 2`.
pub const DEFAULT_N2_CAP: f64 = 1e6;

/// Physical and analytical parameters of one regularized problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub chi: T,
    /// Spatial dimension; `1` is accepted for scheme validation only.
    pub n: usize,
    pub eps: T,
    pub p: T,
    pub q: T,
    /// Integrability exponent for `u`.
    pub r: T,
    /// Gradient exponent for `v`.
    pub s: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(chi: T, n: usize, eps: T) -> Self {
        Self {
            chi,
            n,
            eps,
            p: T::lit(0.5),
            q: T::lit(0.25),
            r: T::lit(1.1),
            s: T::one(),
        }
    }

    pub fn with_exponents(mut self, p: T, q: T, r: T) -> Self {
        self.p = p;
        self.q = q;
        self.r = r;
        self
    }

    pub fn with_s(mut self, s: T) -> Self {
        self.s = s;
        self
    }

    /// Basic ranges independent of which diagnostics are requested.
    pub fn validate(&self) -> Result<()> {
        let (zero, one) = (T::zero(), T::one());
        if !(self.chi > zero && self.chi.is_finite()) {
            return Err(Error::domain("ModelParams", format!("chi = {} must be positive", self.chi)));
        }
        if self.n < 1 {
            return Err(Error::domain("ModelParams", "n must be at least 1"));
        }
        if !(self.eps >= zero && self.eps < one) {
            return Err(Error::domain("ModelParams", format!("eps = {} not in [0, 1)", self.eps)));
        }
        if !(self.p > zero && self.p < one) {
            return Err(Error::domain("ModelParams", format!("p = {} not in (0, 1)", self.p)));
        }
        if !(self.q > zero && self.q < one) {
            return Err(Error::domain("ModelParams", format!("q = {} not in (0, 1)", self.q)));
        }
        if !(self.r > one && self.r.is_finite()) {
            return Err(Error::domain("ModelParams", format!("r = {} must exceed 1", self.r)));
        }
        if !(self.s >= one && self.s.is_finite()) {
            return Err(Error::domain("ModelParams", format!("s = {} must be at least 1", self.s)));
        }
        Ok(())
    }

    /// Requirements of the entropy identity: `p < 1/χ²` and `q ∈ (q₋(p), q₊(p))`.
    pub fn validate_for_entropy(&self) -> Result<()> {
        self.validate()?;
        if self.p * self.chi * self.chi >= T::one() {
            return Err(Error::domain(
                "ModelParams",
                format!("p = {} violates p < 1/chi^2 for chi = {}", self.p, self.chi),
            ));
        }
        let (qm, qp) = q_bounds(self.p, self.chi)?;
        if !(self.q > qm && self.q < qp) {
            return Err(Error::domain(
                "ModelParams",
                format!("q = {} outside ({qm}, {qp})", self.q),
            ));
        }
        Ok(())
    }

    /// Requirements for the `v` norm bounds: `r < n/(n−2)`, `s < n/(n−1)` when `n ≥ 3`.
    pub fn validate_for_norms(&self) -> Result<()> {
        self.validate()?;
        if self.n >= 3 {
            let n = T::from_usize_lossy(self.n);
            let two = T::two();
            if self.r >= n / (n - two) {
                return Err(Error::domain("ModelParams", format!("r = {} >= n/(n-2)", self.r)));
            }
            if self.s >= n / (n - T::one()) {
                return Err(Error::domain("ModelParams", format!("s = {} >= n/(n-1)", self.s)));
            }
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Result<EntropyCoefficients<T>> {
        entropy_coefficients(self.p, self.q, self.chi)
    }

    /// Exponent `(1 − q) r / (p + 1 − r)` of the `v`-term in the Young splitting of `u^r`.
    pub fn young_v_exponent(&self) -> T {
        (T::one() - self.q) * self.r / (self.p + T::one() - self.r)
    }
}

/// Coefficients of the dissipation identity for `∫ uᵖ v^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyCoefficients<T> {
    /// Weight of `∫ v^q |∇u^{p/2}|²`.
    pub c1: T,
    /// Weight of the completed square.
    pub c2: T,
    /// Inner coefficient of the completed square.
    pub kappa: T,
}

/// Endpoints `q₋(p) ≤ q₊(p)` of the interval on which `c1 > 0`.
///
/// `p = 1/χ²` exactly is accepted and yields the collapsed interval.
pub fn q_bounds<T: Real>(p: T, chi: T) -> Result<(T, T)> {
    let one = T::one();
    if !(p > T::zero() && p < one) {
        return Err(Error::domain("q_bounds", format!("p = {p} not in (0, 1)")));
    }
    if !(chi > T::zero()) {
        return Err(Error::domain("q_bounds", format!("chi = {chi} must be positive")));
    }
    let x = p * chi * chi;
    if x > one + T::lit(DOMAIN_SLACK) {
        return Err(Error::domain(
            "q_bounds",
            format!("p = {p} exceeds 1/chi^2 = {}", one / (chi * chi)),
        ));
    }
    let root = (one - x).max(T::zero()).sqrt();
    let half_width = (one - p) / T::two();
    // 1 − √(1 − x) written as x / (1 + √(1 − x)) to avoid cancellation for small x.
    let q_minus = half_width * x.min(one) / (one + root);
    let q_plus = half_width * (one + root);
    Ok((q_minus, q_plus))
}

/// Coefficients `c1`, `c2`, `κ` for given `(p, q, χ)`.
pub fn entropy_coefficients<T: Real>(p: T, q: T, chi: T) -> Result<EntropyCoefficients<T>> {
    let (zero, one) = (T::zero(), T::one());
    if !(p > zero && p < one && q > zero && q < one && chi > zero) {
        return Err(Error::domain(
            "entropy_coefficients",
            format!("need p, q in (0, 1) and chi > 0; got p = {p}, q = {q}, chi = {chi}"),
        ));
    }
    let four = T::lit(4.0);
    let shifted = p * chi + one - q;
    let denom = p * q * shifted;
    if !(denom > zero) {
        return Err(Error::domain(
            "entropy_coefficients",
            format!("denominator p q (p chi + 1 - q) = {denom} is not positive"),
        ));
    }
    let numer = four * (one - p) * q - four * q * q - p * (one - p) * (one - p) * chi * chi;
    Ok(EntropyCoefficients {
        c1: numer / denom,
        c2: four * shifted / q,
        kappa: ((one - p) * chi + T::two() * q) / (T::two() * shifted),
    })
}

/// Upper bound on `χ` in dimension `n` (`+∞` for `n = 2`).
pub fn chi_threshold(n: usize) -> Result<f64> {
    match n {
        0 | 1 => Err(Error::domain("chi_threshold", format!("n = {n} must be at least 2"))),
        2 => Ok(f64::INFINITY),
        3 => Ok(8f64.sqrt()),
        _ => Ok(n as f64 / (n as f64 - 2.0)),
    }
}

/// Whether `χ` lies strictly below the dimension-dependent threshold.
pub fn chi_admissible<T: Real>(chi: T, n: usize) -> Result<bool> {
    if !(chi > T::zero()) {
        return Err(Error::domain("chi_admissible", format!("chi = {chi} must be positive")));
    }
    let limit = chi_threshold(n)?;
    Ok(chi.to_f64_lossy() < limit)
}

/// Infimum of `(1 − q)/p` over `p ∈ (0, min(1, 1/χ²))`, `q ∈ (q₋(p), q₊(p))`.
pub fn exponent_infimum<T: Real>(chi: T) -> Result<T> {
    let one = T::one();
    if !(chi > T::zero()) {
        return Err(Error::domain("exponent_infimum", format!("chi = {chi} must be positive")));
    }
    Ok(if chi <= one {
        one
    } else if chi < T::two() {
        chi
    } else {
        one + chi * chi / T::lit(4.0)
    })
}

/// `(1 − q₊(p))/p = (1 + p − (1 − p)√(1 − pχ²))/(2p)`; the objective minimized by the
/// brute-force oracle. Evaluated in the conjugate form
/// `(4 + (1 − p)²χ²)/(2(1 + p + (1 − p)√(1 − pχ²)))`, which does not cancel as `p → 0`.
pub fn ratio_at_q_plus<T: Real>(p: T, chi: T) -> T {
    let one = T::one();
    let root = (one - p * chi * chi).max(T::zero()).sqrt();
    (T::lit(4.0) + (one - p) * (one - p) * chi * chi) / (T::two() * (one + p + (one - p) * root))
}

/// Same objective after the substitution `ξ = √(1 − pχ²)`.
pub fn rho<T: Real>(xi: T, chi: T) -> T {
    let one = T::one();
    T::half() * (chi * chi / (one + xi) + one + xi)
}

/// Minimizes [`ratio_at_q_plus`] over a log-uniform grid of `p`.
///
/// The grid spans nine decades below `min(1, 1/χ²)` and stops short of the
/// upper endpoint, so the infimum is approached from above.
pub fn exponent_infimum_bruteforce<T: Real>(chi: T, grid_size: usize) -> Result<T> {
    if !(chi > T::zero()) {
        return Err(Error::domain("exponent_infimum_bruteforce", format!("chi = {chi}")));
    }
    if grid_size < 1000 {
        return Err(Error::domain(
            "exponent_infimum_bruteforce",
            format!("grid_size = {grid_size} below 1000"),
        ));
    }
    let p_max = T::one().min(T::one() / (chi * chi));
    let log_lo = T::lit(1e-9).ln();
    let size = T::from_usize_lossy(grid_size);
    let best = (0..grid_size)
        .map(|k| {
            let frac = T::from_usize_lossy(grid_size - k) / size;
            let p = p_max * (log_lo * frac).exp();
            ratio_at_q_plus(p, chi)
        })
        .fold(T::infinity(), T::min);
    Ok(best)
}

/// Output of [`select_exponents`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentChoice<T> {
    pub p: T,
    pub q: T,
    pub r: T,
    /// `n/(n − 2)`, or the configured cap for `n = 2`.
    pub bound: T,
}

impl<T: Real> ExponentChoice<T> {
    /// Re-checks every postcondition of the selection.
    pub fn satisfies(&self, chi: T, margin: T) -> bool {
        let one = T::one();
        let p_max = one.min(one / (chi * chi));
        let Ok((qm, qp)) = q_bounds(self.p, chi) else {
            return false;
        };
        let target = (one - margin) * self.bound;
        self.p > T::zero()
            && self.p < p_max
            && self.q > qm
            && self.q < qp
            && self.r > one
            && self.p + one - self.r > T::zero()
            && (one - self.q) / self.p <= target
            && (one - self.q) * self.r / (self.p + one - self.r) <= target
    }
}

/// Picks `(p, q, r)` with `(1 − q)/p` and `(1 − q) r/(p + 1 − r)` at most
/// `(1 − margin)·n/(n − 2)`.
///
/// Starting at `p = (1 − margin)·min(1, 1/χ²)`, `p` is lowered along a
/// log-uniform ladder until the ratio at `q = q₋ + (1 − margin)(q₊ − q₋)`
/// meets the target; near the threshold the fraction `1 − margin` is moved
/// toward 1 in decades. `r` is then placed a `(1 − margin)` fraction of the way
/// from 1 to the root of `(1 − q) r/(p + 1 − r) = target`.
pub fn select_exponents<T: Real>(chi: T, n: usize, margin: T, n2_cap: T) -> Result<ExponentChoice<T>> {
    let one = T::one();
    if !(margin > T::zero() && margin < one) {
        return Err(Error::domain("select_exponents", format!("margin = {margin} not in (0, 1)")));
    }
    if !chi_admissible(chi, n)? {
        return Err(Error::Infeasible(format!(
            "chi = {chi} is not below the threshold for n = {n}"
        )));
    }
    let bound = if n == 2 {
        n2_cap
    } else {
        let nn = T::from_usize_lossy(n);
        nn / (nn - T::two())
    };
    let target = (one - margin) * bound;
    let p_max = one.min(one / (chi * chi));
    let p_start = (one - margin) * p_max;

    const LADDER: usize = 4000;
    let decades = T::lit(8.0) * T::LN_10();
    for k in 0..LADDER {
        let p = p_start * (-decades * T::from_usize_lossy(k) / T::from_usize_lossy(LADDER)).exp();
        let (qm, qp) = q_bounds(p, chi)?;
        if !(qp > qm) {
            continue;
        }
        // Interior fraction of the q-interval, pushed toward q₊ when the
        // default (1 − margin) is not enough.
        let mut gap = margin;
        while gap >= T::lit(1e-7) {
            let q = qm + (one - gap) * (qp - qm);
            if (one - q) / p <= target {
                let r_root = target * (p + one) / (one - q + target);
                let r = one + (one - margin) * (r_root - one);
                let choice = ExponentChoice { p, q, r, bound };
                if r > one && choice.satisfies(chi, margin) {
                    return Ok(choice);
                }
            }
            gap = gap / T::lit(10.0);
        }
    }
    Err(Error::Infeasible(format!(
        "no exponent triple meets margin {margin} for chi = {chi}, n = {n} (infimum {})",
        exponent_infimum(chi)?
    )))
}

/// One row of the admissible-region export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionRow {
    pub p: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    pub c1_at_mid: f64,
    /// Whether some `q` in the interval meets `(1 − q)/p < n/(n − 2)`.
    pub feasible: bool,
}

/// Samples the `(p, q)` region on `points` equispaced `p` values in `(0, min(1, 1/χ²))`.
pub fn region_rows(chi: f64, n: usize, points: usize, n2_cap: f64) -> Result<Vec<RegionRow>> {
    if n < 2 {
        return Err(Error::domain("region_rows", format!("n = {n} must be at least 2")));
    }
    let bound = if n == 2 { n2_cap } else { n as f64 / (n as f64 - 2.0) };
    let p_max = 1f64.min(1.0 / (chi * chi));
    (1..=points)
        .map(|i| {
            let p = p_max * i as f64 / (points + 1) as f64;
            let (q_minus, q_plus) = q_bounds(p, chi)?;
            let mid = 0.5 * (q_minus + q_plus);
            let c1_at_mid = entropy_coefficients(p, mid, chi)?.c1;
            Ok(RegionRow {
                p,
                q_minus,
                q_plus,
                c1_at_mid,
                feasible: (1.0 - q_plus) / p < bound,
            })
        })
        .collect()
}

/// Writes [`region_rows`] output as CSV.
pub fn write_region_csv<W: std::io::Write>(rows: &[RegionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
