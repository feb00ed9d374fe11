//! Functionals and weak-form residuals evaluated along trajectories.
//!
//! A [`Collector`] is fed snapshots (typically from the run observer) and
//! produces a [`DiagnosticsRecord`]. Gradients of power fields such as
//! `u^{p/2}` are formed by raising cell values first and differencing across
//! faces afterwards. For every spatial test factor `ψ` the record keeps the
//! spatial moments needed by the weak forms, so any temporal factor `ζ` can be
//! applied afterwards with trapezoid quadrature in time.

mod checks;
mod export;
mod test_function;

pub use checks::{
    apriori_bounds_check, dual_norm_surrogate, entropy_identity_residual, fit_dual_constant, grad_vq_bound,
    log_mass_check, supersolution_residual, time_integral, trace_positivity_check, u_lr_bound, v_floor_check,
    v_weak_residual, AprioriReport, DualReport, GradVqReport, IdentityReport, LogMassReport, SupersolutionReport,
    TraceReport, VFloorReport, YoungReport, ABSOLUTE_TOLERANCE, LOG_MASS_WINDOW,
};
pub use export::{write_csv, DiagnosticsSummary};
pub use test_function::{builtin_nonnegative_family, dual_family, SpatialPart, TemporalPart, TestFunction};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{boundary_min, cell_gradient_norm, laplacian_neumann, Field, Grid};
use crate::params::{EntropyCoefficients, ModelParams};
use crate::real::Real;
use crate::simulator::{SimState, Trajectory};

/// Spatial functionals at one sample time. `NaN` marks undefined values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample<T> {
    pub t: T,
    pub mass: T,
    pub u_min: T,
    pub v_min: T,
    /// `∫ v^r`
    pub v_lr: T,
    /// `∫ |∇v|^s`
    pub grad_v_ls: T,
    /// `∫ uᵖ v^q`
    pub entropy: T,
    /// `∫ v^q |∇u^{p/2}|²`
    pub d1: T,
    /// `∫ |u^{p/2} ∇v^{q/2} − κ v^{q/2} ∇u^{p/2}|²`
    pub d2: T,
    /// `∫ uᵖ v^q`, the absorption term.
    pub reaction_minus: T,
    /// `∫ u^{p+1} v^{q−1} / (1 + εu)`
    pub reaction_plus: T,
    /// `∫ u^{p+1} v^{q−1}`
    pub reaction_plus_unreg: T,
    /// `∫ u^r`
    pub u_lr: T,
    /// `∫ |∇v^{q/2}|²`
    pub grad_vq: T,
    /// `∫ |∇v^{1/2}|²`
    pub grad_v_half: T,
    /// `∫ |∇u^{p/2}|²`
    pub grad_up: T,
    /// `∫ v^q`
    pub vq: T,
    /// `∫ v^{(1−q)r/(p+1−r)}`
    pub v_young: T,
    /// Largest cellwise relative excess of `u^r` over its Young majorant; `≤ 0` when it holds.
    pub young_excess: T,
    /// `∫ ln u`
    pub log_u: T,
    /// `∫ |∇ ln u|²`
    pub grad_log_u: T,
    /// `∫ ln v`
    pub log_v: T,
    /// Minimum of `uᵖ v^q` over boundary-adjacent cells.
    pub boundary_min_upq: T,
}

/// Spatial moments against one test factor `ψ` at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments<T> {
    /// `∫ uᵖ v^q ψ`
    pub entropy: T,
    /// `∫ v^q |∇u^{p/2}|² ψ`
    pub d1: T,
    /// `∫ |u^{p/2} ∇v^{q/2} − κ v^{q/2} ∇u^{p/2}|² ψ`
    pub d2: T,
    /// `∫ u^{p/2} v^q ∇u^{p/2}·∇ψ`
    pub cross: T,
    /// `∫ uᵖ v^q Δψ`
    pub lap: T,
    pub reaction_plus: T,
    pub reaction_plus_unreg: T,
    /// `∫ v ψ`
    pub v: T,
    /// `∫ ∇v·∇ψ`
    pub grad_v: T,
    /// `∫ u/(1 + εu) ψ`
    pub source: T,
}

/// Time integrals from the first sample up to each sample (trapezoid).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Accumulated<T> {
    pub d1: Vec<T>,
    pub d2: Vec<T>,
    pub reaction_plus: Vec<T>,
    pub reaction_plus_unreg: Vec<T>,
    pub reaction_minus: Vec<T>,
    pub u_lr: Vec<T>,
    pub grad_vq: Vec<T>,
    pub grad_log_u: Vec<T>,
    pub grad_up: Vec<T>,
    pub vq: Vec<T>,
    pub v_young: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord<T> {
    pub params: ModelParams<T>,
    pub coefficients: EntropyCoefficients<T>,
    pub grid: Grid<T>,
    pub samples: Vec<Sample<T>>,
    /// Spatial test factors; index 0 is always `ψ ≡ 1`.
    pub spatial: Vec<SpatialPart>,
    /// `moments[k][j]`: sample `k`, factor `spatial[j]`.
    pub moments: Vec<Vec<Moments<T>>>,
    pub dual: Vec<SpatialPart>,
    /// `dual_moments[k][j] = (∫ (u+1)^{p/2} ψ_j, ∫ v ψ_j)` at sample `k`.
    pub dual_moments: Vec<Vec<(T, T)>>,
    pub accumulated: Accumulated<T>,
    /// Largest admissible gap between samples for the weak-form residuals.
    pub max_sample_gap: Option<T>,
}

impl<T: Real> DiagnosticsRecord<T> {
    pub fn times(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn series(&self, f: impl Fn(&Sample<T>) -> T) -> Vec<T> {
        self.samples.iter().map(f).collect()
    }

    pub fn first(&self) -> &Sample<T> {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample<T> {
        self.samples.last().expect("record is never empty")
    }

    pub fn final_time(&self) -> T {
        self.last().t
    }

    pub fn spatial_index(&self, part: &SpatialPart) -> Result<usize> {
        self.spatial
            .iter()
            .position(|s| s == part)
            .ok_or_else(|| Error::Precondition(format!("test factor {part:?} was not collected")))
    }

    pub fn max_gap(&self) -> T {
        self.samples
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .fold(T::zero(), T::max)
    }

    /// Weak forms need at least two samples, spaced no wider than configured.
    pub(crate) fn ensure_dense(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(Error::Precondition("at least two samples are required".into()));
        }
        if let Some(limit) = self.max_sample_gap {
            let gap = self.max_gap();
            if gap > limit {
                return Err(Error::Precondition(format!(
                    "sampling too sparse: gap {gap} exceeds {limit}"
                )));
            }
        }
        Ok(())
    }
}

struct SpatialCache<T> {
    psi: Vec<T>,
    lap: Vec<T>,
}

/// Streaming evaluator; feed snapshots with [`Collector::observe`].
pub struct Collector<T> {
    grid: Grid<T>,
    params: ModelParams<T>,
    coefficients: EntropyCoefficients<T>,
    spatial: Vec<SpatialPart>,
    caches: Vec<SpatialCache<T>>,
    dual: Vec<SpatialPart>,
    dual_cells: Vec<Vec<T>>,
    samples: Vec<Sample<T>>,
    moments: Vec<Vec<Moments<T>>>,
    dual_moments: Vec<Vec<(T, T)>>,
    max_sample_gap: Option<T>,
}

impl<T: Real> Collector<T> {
    /// `ψ ≡ 1` is always collected first; duplicates in `spatial` are dropped.
    pub fn new(grid: Grid<T>, params: ModelParams<T>, spatial: &[SpatialPart], dual: &[SpatialPart]) -> Result<Self> {
        params.validate()?;
        let coefficients = params.coefficients()?;
        let mut parts = vec![SpatialPart::one()];
        for s in spatial {
            if !parts.contains(s) {
                parts.push(s.clone());
            }
        }
        let caches = parts
            .iter()
            .map(|s| {
                let psi = s.sample(grid)?;
                let lap = laplacian_neumann(&psi).into_values();
                Ok(SpatialCache {
                    psi: psi.into_values(),
                    lap,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dual_cells = dual
            .iter()
            .map(|s| Ok(s.sample(grid)?.into_values()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            params,
            coefficients,
            spatial: parts,
            caches,
            dual: dual.to_vec(),
            dual_cells,
            samples: Vec::new(),
            moments: Vec::new(),
            dual_moments: Vec::new(),
            max_sample_gap: None,
        })
    }

    pub fn with_max_sample_gap(mut self, gap: T) -> Self {
        self.max_sample_gap = Some(gap);
        self
    }

    pub fn observe_state(&mut self, state: &SimState<T>) -> Result<()> {
        self.observe(state.t, &state.u, &state.v)
    }

    pub fn observe(&mut self, t: T, u: &Field<T>, v: &Field<T>) -> Result<()> {
        if !u.grid().same_shape(&self.grid) || !v.grid().same_shape(&self.grid) {
            return Err(Error::Precondition("snapshot grid differs from collector grid".into()));
        }
        if let Some(last) = self.samples.last() {
            if !(t > last.t) {
                return Err(Error::Precondition(format!("sample time {t} not after {}", last.t)));
            }
        }
        v.ensure_positive()?;
        let (sample, moments, dual) = self.evaluate(t, u, v);
        self.samples.push(sample);
        self.moments.push(moments);
        self.dual_moments.push(dual);
        Ok(())
    }

    fn evaluate(&self, t: T, u: &Field<T>, v: &Field<T>) -> (Sample<T>, Vec<Moments<T>>, Vec<(T, T)>) {
        let g = &self.grid;
        let ModelParams { eps, p, q, r, s, .. } = self.params;
        let kappa = self.coefficients.kappa;
        let one = T::one();
        let vol = g.cell_volume();
        let uv = u.values();
        let vv = v.values();
        let young = self.params.young_v_exponent();

        let up2: Vec<T> = uv.iter().map(|&x| x.powf(p * T::half())).collect();
        let vq2: Vec<T> = vv.iter().map(|&x| x.powf(q * T::half())).collect();
        let vhalf: Vec<T> = vv.iter().map(|&x| x.sqrt()).collect();
        let upq: Vec<T> = up2.iter().zip(&vq2).map(|(&a, &b)| a * a * b * b).collect();
        let r0: Vec<T> = uv
            .iter()
            .zip(vv)
            .map(|(&a, &b)| a.powf(p + one) * b.powf(q - one))
            .collect();
        let reps: Vec<T> = r0.iter().zip(uv).map(|(&x, &a)| x / (one + eps * a)).collect();
        let src: Vec<T> = uv.iter().map(|&a| a / (one + eps * a)).collect();
        let u_min = u.min();
        let u_positive = u_min > T::zero();
        let lnu: Vec<T> = if u_positive {
            uv.iter().map(|&a| a.ln()).collect()
        } else {
            Vec::new()
        };

        let sum = |xs: &[T]| xs.iter().copied().sum::<T>() * vol;
        let dot = |xs: &[T], w: &[T]| xs.iter().zip(w).map(|(&a, &b)| a * b).sum::<T>() * vol;

        let mut young_excess = T::neg_infinity();
        let mut u_lr = T::zero();
        let mut v_young = T::zero();
        for i in 0..uv.len() {
            let ur = uv[i].powf(r);
            let vy = vv[i].powf(young);
            u_lr = u_lr + ur;
            v_young = v_young + vy;
            let bound = r0[i] + vy;
            young_excess = young_excess.max((ur - bound) / bound.max(T::min_positive_value()));
        }

        let grad_v_ls = sum(cell_gradient_norm(v).map(|x| x.powf(s)).values());

        // Face quadrature: every integrand below carries a face difference, which vanishes
        // on boundary faces, so interior faces weighted by the cell volume suffice.
        let nspatial = self.caches.len();
        let mut d1 = T::zero();
        let mut d2 = T::zero();
        let mut grad_vq = T::zero();
        let mut grad_v_half = T::zero();
        let mut grad_up = T::zero();
        let mut grad_log_u = T::zero();
        let mut m_d1 = vec![T::zero(); nspatial];
        let mut m_d2 = vec![T::zero(); nspatial];
        let mut m_cross = vec![T::zero(); nspatial];
        let mut m_gradv = vec![T::zero(); nspatial];
        let half = T::half();
        for a in 0..g.dim() {
            let (outer, n, inner) = g.split(a);
            let inv_h = one / g.spacing()[a];
            for o in 0..outer {
                for i in 1..n {
                    for k in 0..inner {
                        let lo = o * n * inner + (i - 1) * inner + k;
                        let hi = lo + inner;
                        let du = (up2[hi] - up2[lo]) * inv_h;
                        let dw = (vq2[hi] - vq2[lo]) * inv_h;
                        let dv = (vv[hi] - vv[lo]) * inv_h;
                        let dvh = (vhalf[hi] - vhalf[lo]) * inv_h;
                        let uf = half * (up2[hi] + up2[lo]);
                        let wf = half * (vq2[hi] + vq2[lo]);
                        let e1 = wf * wf * du * du;
                        let sq = uf * dw - kappa * wf * du;
                        let e2 = sq * sq;
                        d1 = d1 + e1;
                        d2 = d2 + e2;
                        grad_vq = grad_vq + dw * dw;
                        grad_v_half = grad_v_half + dvh * dvh;
                        grad_up = grad_up + du * du;
                        if u_positive {
                            let dl = (lnu[hi] - lnu[lo]) * inv_h;
                            grad_log_u = grad_log_u + dl * dl;
                        }
                        let cross = uf * wf * wf * du;
                        for (j, c) in self.caches.iter().enumerate() {
                            let pf = half * (c.psi[hi] + c.psi[lo]);
                            let dp = (c.psi[hi] - c.psi[lo]) * inv_h;
                            m_d1[j] = m_d1[j] + e1 * pf;
                            m_d2[j] = m_d2[j] + e2 * pf;
                            m_cross[j] = m_cross[j] + cross * dp;
                            m_gradv[j] = m_gradv[j] + dv * dp;
                        }
                    }
                }
            }
        }

        let entropy = sum(&upq);
        let boundary_upq = boundary_min(&Field::new(*g, upq.clone()).unwrap_or_else(|_| Field::constant(*g, T::nan())));
        let nan = T::nan();
        let sample = Sample {
            t,
            mass: sum(uv),
            u_min,
            v_min: v.min(),
            v_lr: vv.iter().map(|&x| x.powf(r)).sum::<T>() * vol,
            grad_v_ls,
            entropy,
            d1: d1 * vol,
            d2: d2 * vol,
            reaction_minus: entropy,
            reaction_plus: sum(&reps),
            reaction_plus_unreg: sum(&r0),
            u_lr: u_lr * vol,
            grad_vq: grad_vq * vol,
            grad_v_half: grad_v_half * vol,
            grad_up: grad_up * vol,
            vq: vq2.iter().map(|&w| w * w).sum::<T>() * vol,
            v_young: v_young * vol,
            young_excess,
            log_u: if u_positive { sum(&lnu) } else { nan },
            grad_log_u: if u_positive { grad_log_u * vol } else { nan },
            log_v: vv.iter().map(|&x| x.ln()).sum::<T>() * vol,
            boundary_min_upq: boundary_upq,
        };

        let moments = self
            .caches
            .iter()
            .enumerate()
            .map(|(j, c)| Moments {
                entropy: dot(&upq, &c.psi),
                d1: m_d1[j] * vol,
                d2: m_d2[j] * vol,
                cross: m_cross[j] * vol,
                lap: dot(&upq, &c.lap),
                reaction_plus: dot(&reps, &c.psi),
                reaction_plus_unreg: dot(&r0, &c.psi),
                v: dot(vv, &c.psi),
                grad_v: m_gradv[j] * vol,
                source: dot(&src, &c.psi),
            })
            .collect();

        let shifted: Vec<T> = uv.iter().map(|&a| (a + one).powf(p * half)).collect();
        let dual = self
            .dual_cells
            .iter()
            .map(|psi| (dot(&shifted, psi), dot(vv, psi)))
            .collect();
        (sample, moments, dual)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn finish(self) -> Result<DiagnosticsRecord<T>> {
        if self.samples.is_empty() {
            return Err(Error::Precondition("no samples were observed".into()));
        }
        let times: Vec<T> = self.samples.iter().map(|s| s.t).collect();
        let acc = |f: fn(&Sample<T>) -> T| cumulative_trapezoid(&times, &self.samples.iter().map(f).collect::<Vec<_>>());
        let accumulated = Accumulated {
            d1: acc(|s| s.d1),
            d2: acc(|s| s.d2),
            reaction_plus: acc(|s| s.reaction_plus),
            reaction_plus_unreg: acc(|s| s.reaction_plus_unreg),
            reaction_minus: acc(|s| s.reaction_minus),
            u_lr: acc(|s| s.u_lr),
            grad_vq: acc(|s| s.grad_vq),
            grad_log_u: acc(|s| s.grad_log_u),
            grad_up: acc(|s| s.grad_up),
            vq: acc(|s| s.vq),
            v_young: acc(|s| s.v_young),
        };
        Ok(DiagnosticsRecord {
            params: self.params,
            coefficients: self.coefficients,
            grid: self.grid,
            samples: self.samples,
            spatial: self.spatial,
            moments: self.moments,
            dual: self.dual,
            dual_moments: self.dual_moments,
            accumulated,
            max_sample_gap: self.max_sample_gap,
        })
    }
}

/// `out[k] = ∫_{t_0}^{t_k} y` by the trapezoid rule.
pub fn cumulative_trapezoid<T: Real>(t: &[T], y: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(t.len());
    let mut total = T::zero();
    for k in 0..t.len() {
        if k > 0 {
            total = total + T::half() * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
        }
        out.push(total);
    }
    out
}

/// Diagnostics of a stored trajectory.
pub fn collect<T: Real>(
    trajectory: &Trajectory<T>,
    spatial: &[SpatialPart],
    dual: &[SpatialPart],
) -> Result<DiagnosticsRecord<T>> {
    let first = trajectory
        .snapshots
        .first()
        .ok_or_else(|| Error::Precondition("empty trajectory".into()))?;
    let mut c = Collector::new(*first.u.grid(), first.params, spatial, dual)?;
    for s in &trajectory.snapshots {
        c.observe_state(s)?;
    }
    c.finish()
}
