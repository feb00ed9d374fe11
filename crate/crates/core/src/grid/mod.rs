//! Uniform cell-centered tensor meshes on boxes with reflecting boundaries.
//!
//! Cell values are stored row-major (last axis fastest). Face arrays for
//! axis `a` have `cells[a] + 1` entries along that axis; face `i` separates
//! cells `i − 1` and `i`, and the two outermost faces are boundary faces
//! that always carry zero flux.

mod io;
mod ops;

pub use io::{read_binary, write_binary, write_csv};
pub use ops::{
    boundary_min, cell_gradient_norm, face_divergence, face_gradient, face_integrate, face_mean,
    integrate, laplacian_neumann,
};

use crate::error::{Error, Result};
use crate::real::Real;

/// Default upper bound on the total number of cells.
pub const DEFAULT_MAX_CELLS: usize = 1 << 24;

/// Smallest admissible cell count per axis.
pub const MIN_CELLS_PER_AXIS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    dim: usize,
    cells: [usize; 3],
    extents: [T; 3],
    spacing: [T; 3],
}

impl<T: Real> Grid<T> {
    pub fn new(cells: &[usize], extents: &[T]) -> Result<Self> {
        Self::with_max_cells(cells, extents, DEFAULT_MAX_CELLS)
    }

    pub fn with_max_cells(cells: &[usize], extents: &[T], max_cells: usize) -> Result<Self> {
        let dim = cells.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::Grid(format!("dimension {dim} not in 1..=3")));
        }
        if extents.len() != dim {
            return Err(Error::Grid(format!(
                "{} extents given for {dim} axes",
                extents.len()
            )));
        }
        let mut g = Grid {
            dim,
            cells: [1; 3],
            extents: [T::one(); 3],
            spacing: [T::one(); 3],
        };
        let mut total: usize = 1;
        for a in 0..dim {
            if cells[a] < MIN_CELLS_PER_AXIS {
                return Err(Error::Grid(format!(
                    "axis {a} has {} cells, need at least {MIN_CELLS_PER_AXIS}",
                    cells[a]
                )));
            }
            let h = extents[a] / T::from_usize_lossy(cells[a]);
            if !(extents[a] > T::zero() && h.is_finite() && h > T::zero()) {
                return Err(Error::Grid(format!("axis {a} has extent {}", extents[a])));
            }
            total = total
                .checked_mul(cells[a])
                .ok_or_else(|| Error::Grid("cell count overflow".into()))?;
            g.cells[a] = cells[a];
            g.extents[a] = extents[a];
            g.spacing[a] = h;
        }
        if total > max_cells {
            return Err(Error::Grid(format!(
                "{total} cells exceeds the limit of {max_cells}"
            )));
        }
        Ok(g)
    }

    /// Square/cube domain `[0, side]^dim` with `n` cells per axis.
    pub fn uniform(dim: usize, n: usize, side: T) -> Result<Self> {
        Self::new(&vec![n; dim], &vec![side; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn extents(&self) -> &[T] {
        &self.extents[..self.dim]
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing[..self.dim]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1] * self.cells[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_spacing(&self) -> T {
        self.spacing().iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_spacing(&self) -> T {
        self.spacing().iter().copied().fold(T::zero(), T::max)
    }

    pub fn cell_volume(&self) -> T {
        self.spacing().iter().copied().fold(T::one(), |a, b| a * b)
    }

    pub fn volume(&self) -> T {
        self.extents().iter().copied().fold(T::one(), |a, b| a * b)
    }

    /// Distance between consecutive cells along `axis` in the flat layout.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.cells[axis + 1..self.dim].iter().product()
    }

    /// Splits the flat index space as `[outer][cells[axis]][inner]`.
    #[inline]
    pub(crate) fn split(&self, axis: usize) -> (usize, usize, usize) {
        let outer = self.cells[..axis].iter().product();
        (outer, self.cells[axis], self.stride(axis))
    }

    /// Number of faces normal to `axis`, boundary faces included.
    pub fn face_len(&self, axis: usize) -> usize {
        let (outer, n, inner) = self.split(axis);
        outer * (n + 1) * inner
    }

    /// Multi-index of a flat cell index.
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.cells[a];
            idx /= self.cells[a];
        }
        out
    }

    pub fn ravel(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(self.cells())
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Physical coordinates of a cell center.
    pub fn center(&self, idx: usize) -> [T; 3] {
        let m = self.unravel(idx);
        let mut x = [T::zero(); 3];
        for a in 0..self.dim {
            x[a] = (T::from_usize_lossy(m[a]) + T::half()) * self.spacing[a];
        }
        x
    }

    pub fn is_boundary_cell(&self, idx: usize) -> bool {
        let m = self.unravel(idx);
        (0..self.dim).any(|a| m[a] == 0 || m[a] + 1 == self.cells[a])
    }

    pub fn same_shape(&self, other: &Grid<T>) -> bool {
        self.dim == other.dim && self.cells == other.cells && self.extents == other.extents
    }

    /// Grid with every axis refined by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let cells: Vec<usize> = self.cells().iter().map(|&n| n * factor).collect();
        Self::new(&cells, self.extents())
    }
}

/// Cell-centered grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    /// Wraps values, rejecting wrong lengths and non-finite entries.
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("non-finite value at cell {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Like [`Field::new`] but also requires every value to be positive.
    pub fn strictly_positive(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        let f = Self::new(grid, values)?;
        f.ensure_positive()?;
        Ok(f)
    }

    pub(crate) fn from_raw(grid: Grid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: Grid<T>, c: T) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: Grid<T>, f: impl Fn(&[T]) -> T) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.center(i);
                f(&x[..grid.dim()])
            })
            .collect();
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_positive(&self) -> Result<()> {
        match self.values.iter().position(|&v| !(v > T::zero())) {
            None => Ok(()),
            Some(i) => Err(Error::Precondition(format!(
                "field not strictly positive at cell {i} (value {})",
                self.values[i]
            ))),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert!(self.grid.same_shape(&other.grid));
        Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// `∫ |self − other|` by midpoint quadrature.
    pub fn l1_distance(&self, other: &Self) -> T {
        let s: T = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .sum();
        s * self.grid.cell_volume()
    }

    /// Averages `factor^dim` blocks onto the coarse grid.
    pub fn restrict(&self, coarse: &Grid<T>) -> Result<Self> {
        if coarse.dim() != self.grid.dim() {
            return Err(Error::Grid("restriction across dimensions".into()));
        }
        let factor = self.grid.cells()[0] / coarse.cells()[0];
        let ok = factor >= 1
            && self
                .grid
                .cells()
                .iter()
                .zip(coarse.cells())
                .all(|(&f, &c)| f == c * factor)
            && self.grid.extents() == coarse.extents();
        if !ok {
            return Err(Error::Grid("grids are not nested".into()));
        }
        let weight = T::one() / T::from_usize_lossy(factor.pow(self.grid.dim() as u32));
        let mut out = vec![T::zero(); coarse.len()];
        for (i, &v) in self.values.iter().enumerate() {
            let m = self.grid.unravel(i);
            let mut c = [0; 3];
            for a in 0..self.grid.dim() {
                c[a] = m[a] / factor;
            }
            out[coarse.ravel(&c[..coarse.dim()])] = out[coarse.ravel(&c[..coarse.dim()])] + v * weight;
        }
        Ok(Self::from_raw(*coarse, out))
    }
}

/// Per-axis arrays of face-normal quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField<T> {
    grid: Grid<T>,
    axes: Vec<Vec<T>>,
}

impl<T: Real> FaceField<T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        let axes = (0..grid.dim())
            .map(|a| vec![T::zero(); grid.face_len(a)])
            .collect();
        Self { grid, axes }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn axis(&self, a: usize) -> &[T] {
        &self.axes[a]
    }

    pub fn axis_mut(&mut self, a: usize) -> &mut [T] {
        &mut self.axes[a]
    }

    pub fn axes(&self) -> &[Vec<T>] {
        &self.axes
    }

    /// Whether every boundary face carries exactly zero.
    pub fn boundary_is_zero(&self) -> bool {
        (0..self.grid.dim()).all(|a| {
            let (outer, n, inner) = self.grid.split(a);
            (0..outer).all(|o| {
                (0..inner).all(|k| {
                    let base = o * (n + 1) * inner + k;
                    self.axes[a][base] == T::zero() && self.axes[a][base + n * inner] == T::zero()
                })
            })
        })
    }

    /// Zeroes the boundary faces in place.
    pub fn clear_boundary(&mut self) {
        for a in 0..self.grid.dim() {
            let (outer, n, inner) = self.grid.split(a);
            for o in 0..outer {
                for k in 0..inner {
                    let base = o * (n + 1) * inner + k;
                    self.axes[a][base] = T::zero();
                    self.axes[a][base + n * inner] = T::zero();
                }
            }
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid,
            axes: self
                .axes
                .iter()
                .map(|ax| ax.iter().map(|&v| f(v)).collect())
                .collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            grid: self.grid,
            axes: self
                .axes
                .iter()
                .zip(&other.axes)
                .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
                .collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.axes
            .iter()
            .flatten()
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// `∫ |self − other|` over faces, weighted by the cell volume.
    pub fn l1_distance(&self, other: &Self) -> T {
        let s: T = self
            .axes
            .iter()
            .flatten()
            .zip(other.axes.iter().flatten())
            .map(|(&a, &b)| (a - b).abs())
            .sum();
        s * self.grid.cell_volume()
    }
}
