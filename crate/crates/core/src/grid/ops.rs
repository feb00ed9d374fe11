use super::{FaceField, Field, Grid};
use crate::real::Real;

/// Second-order Laplacian with mirrored ghost cells (`∂f/∂ν = 0`).
pub fn laplacian_neumann<T: Real>(f: &Field<T>) -> Field<T> {
    let grid = *f.grid();
    let vals = f.values();
    let mut out = vec![T::zero(); grid.len()];
    for a in 0..grid.dim() {
        let h = grid.spacing()[a];
        let inv_h2 = T::one() / (h * h);
        let (outer, n, inner) = grid.split(a);
        for o in 0..outer {
            for i in 0..n {
                let left = if i == 0 { i } else { i - 1 };
                let right = if i + 1 == n { i } else { i + 1 };
                let row = o * n * inner;
                for k in 0..inner {
                    let c = row + i * inner + k;
                    let l = row + left * inner + k;
                    let r = row + right * inner + k;
                    out[c] = out[c] + (vals[l] - vals[c] - vals[c] + vals[r]) * inv_h2;
                }
            }
        }
    }
    Field::from_raw(grid, out)
}

/// `(f[i] − f[i−1])/h` on interior faces, zero on boundary faces.
pub fn face_gradient<T: Real>(f: &Field<T>) -> FaceField<T> {
    let grid = *f.grid();
    let vals = f.values();
    let mut out = FaceField::zeros(grid);
    for a in 0..grid.dim() {
        let inv_h = T::one() / grid.spacing()[a];
        let (outer, n, inner) = grid.split(a);
        let faces = out.axis_mut(a);
        for o in 0..outer {
            for i in 1..n {
                for k in 0..inner {
                    let lo = o * n * inner + (i - 1) * inner + k;
                    let hi = lo + inner;
                    faces[o * (n + 1) * inner + i * inner + k] = (vals[hi] - vals[lo]) * inv_h;
                }
            }
        }
    }
    out
}

/// Conservative divergence: sum over axes of (outgoing − incoming face value)/h.
pub fn face_divergence<T: Real>(flux: &FaceField<T>) -> Field<T> {
    let grid = *flux.grid();
    let mut out = vec![T::zero(); grid.len()];
    for a in 0..grid.dim() {
        let inv_h = T::one() / grid.spacing()[a];
        let (outer, n, inner) = grid.split(a);
        let faces = flux.axis(a);
        for o in 0..outer {
            for i in 0..n {
                for k in 0..inner {
                    let west = o * (n + 1) * inner + i * inner + k;
                    let c = o * n * inner + i * inner + k;
                    out[c] = out[c] + (faces[west + inner] - faces[west]) * inv_h;
                }
            }
        }
    }
    Field::from_raw(grid, out)
}

/// Midpoint quadrature `Σ f · |cell|`.
pub fn integrate<T: Real>(f: &Field<T>) -> T {
    let s: T = f.values().iter().copied().sum();
    s * f.grid().cell_volume()
}

/// Quadrature of a face quantity summed over axes, with half weight on boundary faces.
pub fn face_integrate<T: Real>(f: &FaceField<T>) -> T {
    let grid = *f.grid();
    let half = T::half();
    let mut total = T::zero();
    for a in 0..grid.dim() {
        let (outer, n, inner) = grid.split(a);
        let faces = f.axis(a);
        for o in 0..outer {
            let row = o * (n + 1) * inner;
            let mut s = T::zero();
            for k in 0..inner {
                s = s + half * (faces[row + k] + faces[row + n * inner + k]);
            }
            for v in &faces[row + inner..row + n * inner] {
                s = s + *v;
            }
            total = total + s;
        }
    }
    total * grid.cell_volume()
}

/// Arithmetic mean of the two adjacent cells; boundary faces copy the adjacent cell.
pub fn face_mean<T: Real>(f: &Field<T>) -> FaceField<T> {
    let grid = *f.grid();
    let vals = f.values();
    let half = T::half();
    let mut out = FaceField::zeros(grid);
    for a in 0..grid.dim() {
        let (outer, n, inner) = grid.split(a);
        let faces = out.axis_mut(a);
        for o in 0..outer {
            let crow = o * n * inner;
            let frow = o * (n + 1) * inner;
            for k in 0..inner {
                faces[frow + k] = vals[crow + k];
                faces[frow + n * inner + k] = vals[crow + (n - 1) * inner + k];
            }
            for i in 1..n {
                for k in 0..inner {
                    let lo = crow + (i - 1) * inner + k;
                    faces[frow + i * inner + k] = half * (vals[lo] + vals[lo + inner]);
                }
            }
        }
    }
    out
}

/// `|∇f|` at cell centers from the mean of the two face gradients per axis.
pub fn cell_gradient_norm<T: Real>(f: &Field<T>) -> Field<T> {
    let grid = *f.grid();
    let grad = face_gradient(f);
    let half = T::half();
    let mut sq = vec![T::zero(); grid.len()];
    for a in 0..grid.dim() {
        let (outer, n, inner) = grid.split(a);
        let faces = grad.axis(a);
        for o in 0..outer {
            for i in 0..n {
                for k in 0..inner {
                    let west = o * (n + 1) * inner + i * inner + k;
                    let g = half * (faces[west] + faces[west + inner]);
                    let c = o * n * inner + i * inner + k;
                    sq[c] = sq[c] + g * g;
                }
            }
        }
    }
    Field::from_raw(grid, sq.into_iter().map(T::sqrt).collect())
}

/// Minimum over cells touching the boundary.
pub fn boundary_min<T: Real>(f: &Field<T>) -> T {
    let grid: &Grid<T> = f.grid();
    f.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.is_boundary_cell(*i))
        .fold(T::infinity(), |m, (_, &v)| m.min(v))
}
