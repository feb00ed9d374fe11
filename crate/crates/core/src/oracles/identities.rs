use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{face_gradient, laplacian_neumann, Field, Grid};
use crate::params::entropy_coefficients;
use crate::real::Real;

/// Cell-centered gradient vectors: per axis, the mean of the two adjacent face differences.
pub(crate) fn cell_gradients<T: Real>(f: &Field<T>) -> Vec<Vec<T>> {
    let grid = *f.grid();
    let grad = face_gradient(f);
    (0..grid.dim())
        .map(|a| {
            let (outer, n, inner) = grid.split(a);
            let faces = grad.axis(a);
            let mut out = vec![T::zero(); grid.len()];
            for o in 0..outer {
                for i in 0..n {
                    for k in 0..inner {
                        let west = o * (n + 1) * inner + i * inner + k;
                        out[o * n * inner + i * inner + k] = T::half() * (faces[west] + faces[west + inner]);
                    }
                }
            }
            out
        })
        .collect()
}

fn interior_cells<T: Real>(grid: &Grid<T>) -> impl Iterator<Item = usize> + '_ {
    (0..grid.len()).filter(move |&i| !grid.is_boundary_cell(i))
}

/// Max-cell residuals of the two power identities, with the largest term magnitude as scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerIdentityReport<T> {
    /// `w^{r/2} Δw^{r/2} = ((r−2)/r)|∇w^{r/2}|² + (r/2) w^{r−1} Δw`
    pub res29: T,
    /// `Δw^r = (4(r−1)/r)|∇w^{r/2}|² + r w^{r−1} Δw`
    pub res210: T,
    pub scale: T,
}

/// Evaluates both identities on interior cells with the grid's discrete operators, so
/// the residuals are truncation errors of order `h²`.
pub fn check_power_identities<T: Real>(w: &Field<T>, r: T) -> Result<PowerIdentityReport<T>> {
    if !(r > T::zero()) {
        return Err(Error::Precondition(format!("exponent r must be positive, got {r}")));
    }
    w.ensure_positive()?;
    let grid = *w.grid();
    let half_r = r * T::half();
    let wr2 = w.map(|x| x.powf(half_r));
    let wr = w.map(|x| x.powf(r));
    let lap_w = laplacian_neumann(w);
    let lap_wr2 = laplacian_neumann(&wr2);
    let lap_wr = laplacian_neumann(&wr);
    let grads = cell_gradients(&wr2);
    let (mut res29, mut res210, mut scale) = (T::zero(), T::zero(), T::zero());
    for i in interior_cells(&grid) {
        let g2: T = grads.iter().map(|g| g[i] * g[i]).sum();
        let wi = w.values()[i];
        let base = wi.powf(r - T::one()) * lap_w.values()[i];
        let a = wr2.values()[i] * lap_wr2.values()[i];
        let b = (r - T::two()) / r * g2;
        let c = half_r * base;
        res29 = res29.max((a - b - c).abs());
        let d = lap_wr.values()[i];
        let e = T::lit(4.0) * (r - T::one()) / r * g2;
        let f = r * base;
        res210 = res210.max((d - e - f).abs());
        scale = scale.max(a.abs()).max(b.abs()).max(d.abs()).max(e.abs()).max(f.abs());
    }
    Ok(PowerIdentityReport { res29, res210, scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SquareCompletionReport<T> {
    /// Max-cell `|lhs − rhs|`.
    pub residual: T,
    /// Max-cell sum of magnitudes of the individual terms.
    pub scale: T,
}

impl<T: Real> SquareCompletionReport<T> {
    pub fn relative(&self) -> T {
        if self.scale > T::zero() {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

/// Cellwise check of the completed square
///
/// ```text
/// (4(1−p)/p) W²|∇U|² − (4((1−p)χ + 2q)/q) U W ∇U·∇W + (4(pχ+1−q)/q) U²|∇W|²
///     = c2 |U∇W − κ W∇U|² + c1 W²|∇U|²
/// ```
///
/// with `U = u^{p/2}`, `W = v^{q/2}` and discrete gradients. Exact algebra, so the
/// residual is round-off at any resolution.
pub fn check_square_completion<T: Real>(
    u: &Field<T>,
    v: &Field<T>,
    p: T,
    q: T,
    chi: T,
) -> Result<SquareCompletionReport<T>> {
    u.ensure_positive()?;
    v.ensure_positive()?;
    if !u.grid().same_shape(v.grid()) {
        return Err(Error::Precondition("u and v live on different grids".into()));
    }
    let c = entropy_coefficients(p, q, chi)?;
    let one = T::one();
    let four = T::lit(4.0);
    let big_u = u.map(|x| x.powf(p * T::half()));
    let big_w = v.map(|x| x.powf(q * T::half()));
    let gu = cell_gradients(&big_u);
    let gw = cell_gradients(&big_w);
    let a_coef = four * (one - p) / p;
    let b_coef = four * ((one - p) * chi + T::two() * q) / q;
    let (mut residual, mut scale) = (T::zero(), T::zero());
    for i in 0..u.grid().len() {
        let (ui, wi) = (big_u.values()[i], big_w.values()[i]);
        let (mut uu, mut uw, mut ww, mut sq) = (T::zero(), T::zero(), T::zero(), T::zero());
        for (du, dw) in gu.iter().zip(&gw) {
            uu = uu + du[i] * du[i];
            uw = uw + du[i] * dw[i];
            ww = ww + dw[i] * dw[i];
            let s = ui * dw[i] - c.kappa * wi * du[i];
            sq = sq + s * s;
        }
        let terms = [
            a_coef * wi * wi * uu,
            -b_coef * ui * wi * uw,
            c.c2 * ui * ui * ww,
            c.c2 * sq,
            c.c1 * wi * wi * uu,
        ];
        let lhs = terms[0] + terms[1] + terms[2];
        let rhs = terms[3] + terms[4];
        residual = residual.max((lhs - rhs).abs());
        scale = scale.max(terms.iter().map(|x| x.abs()).sum());
    }
    Ok(SquareCompletionReport { residual, scale })
}
