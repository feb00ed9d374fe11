use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cell_gradient_norm, Field, Grid};
use crate::real::Real;

/// Spatial factor `ψ` of a test function. All variants have zero normal
/// derivative on the boundary of a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpatialPart {
    Constant {
        value: f64,
    },
    /// `offset + amplitude · Π_a cos(k_a π x_a / L_a)`.
    Cosine {
        wavenumbers: Vec<usize>,
        amplitude: f64,
        offset: f64,
    },
    /// `height · ((1 + cos(π|x − center|/radius))/2)²` inside the ball, zero outside.
    /// The ball must lie strictly inside the domain.
    Bump {
        center: Vec<f64>,
        radius: f64,
        height: f64,
    },
}

impl SpatialPart {
    pub fn one() -> Self {
        SpatialPart::Constant { value: 1.0 }
    }

    pub fn sample<T: Real>(&self, grid: Grid<T>) -> Result<Field<T>> {
        let dim = grid.dim();
        let ext: Vec<f64> = grid.extents().iter().map(|e| e.to_f64_lossy()).collect();
        match self {
            SpatialPart::Constant { value } => Ok(Field::constant(grid, T::lit(*value))),
            SpatialPart::Cosine {
                wavenumbers,
                amplitude,
                offset,
            } => {
                if wavenumbers.len() != dim {
                    return Err(Error::Precondition(format!(
                        "cosine test function has {} wavenumbers for dimension {dim}",
                        wavenumbers.len()
                    )));
                }
                let (a, c) = (T::lit(*amplitude), T::lit(*offset));
                let k: Vec<T> = wavenumbers
                    .iter()
                    .zip(&ext)
                    .map(|(&k, &l)| T::from_usize_lossy(k) * T::PI() / T::lit(l))
                    .collect();
                Ok(Field::from_fn(grid, |x| {
                    c + a * x.iter().zip(&k).fold(T::one(), |acc, (&xi, &ki)| acc * (ki * xi).cos())
                }))
            }
            SpatialPart::Bump { center, radius, height } => {
                if center.len() != dim || !(*radius > 0.0) {
                    return Err(Error::Precondition(format!(
                        "bump needs {dim} center coordinates and a positive radius"
                    )));
                }
                let inside = center
                    .iter()
                    .zip(&ext)
                    .all(|(&c, &l)| c - radius > 0.0 && c + radius < l);
                if !inside {
                    return Err(Error::Precondition(format!(
                        "bump at {center:?} with radius {radius} leaves the domain"
                    )));
                }
                let c: Vec<T> = center.iter().map(|&x| T::lit(x)).collect();
                let (w, h) = (T::lit(*radius), T::lit(*height));
                Ok(Field::from_fn(grid, |x| {
                    let r = x
                        .iter()
                        .zip(&c)
                        .map(|(&xi, &ci)| (xi - ci) * (xi - ci))
                        .sum::<T>()
                        .sqrt();
                    if r >= w {
                        T::zero()
                    } else {
                        let s = T::half() * (T::one() + (T::PI() * r / w).cos());
                        h * s * s
                    }
                }))
            }
        }
    }

    /// Discrete `sup|ψ| + sup|∇ψ|` on `grid`.
    pub fn w1inf_norm<T: Real>(&self, grid: Grid<T>) -> Result<T> {
        let f = self.sample(grid)?;
        let sup = f.values().iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        let grad = cell_gradient_norm(&f).max();
        Ok(sup + grad)
    }

    /// True if `ψ` vanishes on every boundary-adjacent cell.
    pub fn vanishes_near_boundary<T: Real>(&self, grid: Grid<T>) -> Result<bool> {
        let f = self.sample(grid)?;
        Ok((0..grid.len())
            .filter(|&i| grid.is_boundary_cell(i))
            .all(|i| f.values()[i] == T::zero()))
    }
}

/// Temporal factor `ζ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TemporalPart {
    Constant,
    /// `16 s² (1 − s)²` with `s = (t − start)/(end − start)`, zero outside `[start, end]`.
    Window { start: f64, end: f64 },
    /// `(1 − t/end)³` on `[0, end]`, zero afterwards.
    Decay { end: f64 },
}

impl TemporalPart {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TemporalPart::Window { start, end } if !(end > start) => Err(Error::Precondition(format!(
                "window end {end} must exceed start {start}"
            ))),
            TemporalPart::Decay { end } if !(end > 0.0) => {
                Err(Error::Precondition(format!("decay end must be positive, got {end}")))
            }
            _ => Ok(()),
        }
    }

    pub fn value<T: Real>(&self, t: T) -> T {
        match *self {
            TemporalPart::Constant => T::one(),
            TemporalPart::Window { start, end } => {
                let s = (t - T::lit(start)) / T::lit(end - start);
                if s <= T::zero() || s >= T::one() {
                    T::zero()
                } else {
                    let b = s * (T::one() - s);
                    T::lit(16.0) * b * b
                }
            }
            TemporalPart::Decay { end } => {
                let s = T::one() - t / T::lit(end);
                if s <= T::zero() {
                    T::zero()
                } else {
                    s * s * s
                }
            }
        }
    }

    pub fn derivative<T: Real>(&self, t: T) -> T {
        match *self {
            TemporalPart::Constant => T::zero(),
            TemporalPart::Window { start, end } => {
                let len = T::lit(end - start);
                let s = (t - T::lit(start)) / len;
                if s <= T::zero() || s >= T::one() {
                    T::zero()
                } else {
                    T::lit(32.0) * s * (T::one() - s) * (T::one() - T::two() * s) / len
                }
            }
            TemporalPart::Decay { end } => {
                let s = T::one() - t / T::lit(end);
                if s <= T::zero() {
                    T::zero()
                } else {
                    -T::lit(3.0) * s * s / T::lit(end)
                }
            }
        }
    }
}

/// Separable test function `φ(x, t) = ψ(x) ζ(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunction {
    pub spatial: SpatialPart,
    pub temporal: TemporalPart,
}

impl TestFunction {
    pub fn new(spatial: SpatialPart, temporal: TemporalPart) -> Self {
        Self { spatial, temporal }
    }

    /// `φ ≡ 1`.
    pub fn one() -> Self {
        Self::new(SpatialPart::one(), TemporalPart::Constant)
    }

    pub fn is_nonnegative<T: Real>(&self, grid: Grid<T>) -> Result<bool> {
        self.temporal.validate()?;
        Ok(self.spatial.sample(grid)?.min() >= T::zero())
    }
}

/// Five nonnegative test functions on a box with the given extents and horizon.
pub fn builtin_nonnegative_family(extents: &[f64], t_final: f64) -> Vec<TestFunction> {
    let dim = extents.len();
    let center: Vec<f64> = extents.iter().map(|l| 0.5 * l).collect();
    let radius = 0.35 * extents.iter().copied().fold(f64::INFINITY, f64::min);
    let mut k1 = vec![0; dim];
    k1[0] = 1;
    let k11 = vec![1; dim];
    vec![
        TestFunction::one(),
        TestFunction::new(
            SpatialPart::Cosine { wavenumbers: k1, amplitude: 0.5, offset: 1.0 },
            TemporalPart::Window { start: 0.1 * t_final, end: 0.9 * t_final },
        ),
        TestFunction::new(
            SpatialPart::Cosine { wavenumbers: k11, amplitude: 0.9, offset: 1.0 },
            TemporalPart::Decay { end: t_final },
        ),
        TestFunction::new(
            SpatialPart::Bump { center: center.clone(), radius, height: 1.0 },
            TemporalPart::Constant,
        ),
        TestFunction::new(
            SpatialPart::Bump { center, radius, height: 1.0 },
            TemporalPart::Window { start: 0.0, end: t_final },
        ),
    ]
}

/// Bumps normalized to `sup|ψ| + sup|∇ψ| ≤ 1` that vanish near the boundary.
pub fn dual_family<T: Real>(grid: Grid<T>, count: usize) -> Result<Vec<SpatialPart>> {
    let ext: Vec<f64> = grid.extents().iter().map(|e| e.to_f64_lossy()).collect();
    let h = grid.max_spacing().to_f64_lossy();
    let short = ext.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        // Centers walk along the diagonal, radii shrink so that supports stay interior.
        let frac = (k as f64 + 1.0) / (count as f64 + 1.0);
        let radius = (0.4 - 0.25 * frac) * short;
        let center: Vec<f64> = ext
            .iter()
            .map(|&l| {
                let lo = radius + 2.0 * h;
                lo + frac * (l - 2.0 * lo)
            })
            .collect();
        // |∇ψ| ≤ height · π / radius analytically, and the discrete gradient is smaller.
        let height = 1.0 / (1.0 + std::f64::consts::PI / radius);
        out.push(SpatialPart::Bump { center, radius, height });
    }
    for part in &out {
        if part.w1inf_norm(grid)?.to_f64_lossy() > 1.0 + 1e-12 || !part.vanishes_near_boundary(grid)? {
            return Err(Error::Precondition(format!("dual test function {part:?} violates its constraints")));
        }
    }
    Ok(out)
}
