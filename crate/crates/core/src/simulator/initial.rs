use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimState;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::params::ModelParams;
use crate::real::Real;

/// One Neumann cosine mode `amplitude · Π_a cos(k_a π x_a / L_a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosineTerm {
    pub wavenumbers: Vec<usize>,
    pub amplitude: f64,
}

/// Scalar profile on a box domain. Coordinates are physical, measured from the lower corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `background + amplitude · exp(−|x − center|² / (2 width²))`.
    Gaussian {
        background: f64,
        amplitude: f64,
        width: f64,
        /// Defaults to the domain center.
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    Cosine {
        mean: f64,
        terms: Vec<CosineTerm>,
    },
    /// `mean + amplitude · Σ a_k cos-mode_k` with `a_k` uniform in `[−1, 1]`,
    /// normalized so the series is bounded by `amplitude`.
    RandomCosine {
        mean: f64,
        amplitude: f64,
        cutoff: usize,
        seed: u64,
    },
}

fn mode<T: Real>(x: &[T], extents: &[T], k: &[usize]) -> T {
    x.iter()
        .zip(extents)
        .zip(k)
        .map(|((&xi, &l), &ki)| (T::from_usize_lossy(ki) * T::PI() * xi / l).cos())
        .fold(T::one(), |acc, c| acc * c)
}

/// All wavenumber tuples with every entry in `0..=cutoff`, excluding the zero mode.
fn wavenumber_tuples(dim: usize, cutoff: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=cutoff).map(move |k| {
                    let mut next = prefix.clone();
                    next.push(k);
                    next
                })
            })
            .collect();
    }
    out.retain(|k| k.iter().any(|&ki| ki > 0));
    out
}

impl Profile {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Precondition(m));
        match self {
            Profile::Constant { value } if !value.is_finite() => bad("constant value not finite".into()),
            Profile::Gaussian { width, center, .. } => {
                if !(*width > 0.0) {
                    return bad(format!("gaussian width must be positive, got {width}"));
                }
                match center {
                    Some(c) if c.len() != dim => bad(format!("center has {} entries for dimension {dim}", c.len())),
                    _ => Ok(()),
                }
            }
            Profile::Cosine { terms, .. } => {
                match terms.iter().find(|t| t.wavenumbers.len() != dim) {
                    Some(t) => bad(format!("cosine term {:?} does not match dimension {dim}", t.wavenumbers)),
                    None => Ok(()),
                }
            }
            Profile::RandomCosine { cutoff, .. } if *cutoff == 0 => bad("random cosine cutoff must be ≥ 1".into()),
            _ => Ok(()),
        }
    }

    /// Samples the profile at cell centers.
    pub fn sample<T: Real>(&self, grid: Grid<T>) -> Result<Field<T>> {
        self.validate(grid.dim())?;
        let ext: Vec<T> = grid.extents().to_vec();
        let field = match self {
            Profile::Constant { value } => Field::constant(grid, T::lit(*value)),
            Profile::Gaussian {
                background,
                amplitude,
                width,
                center,
            } => {
                let c: Vec<T> = match center {
                    Some(c) => c.iter().map(|&x| T::lit(x)).collect(),
                    None => ext.iter().map(|&l| l * T::half()).collect(),
                };
                let (b, a) = (T::lit(*background), T::lit(*amplitude));
                let two_w2 = T::two() * T::lit(*width) * T::lit(*width);
                Field::from_fn(grid, |x| {
                    let r2: T = x.iter().zip(&c).map(|(&xi, &ci)| (xi - ci) * (xi - ci)).sum();
                    b + a * (-r2 / two_w2).exp()
                })
            }
            Profile::Cosine { mean, terms } => {
                let terms: Vec<(T, &[usize])> = terms
                    .iter()
                    .map(|t| (T::lit(t.amplitude), t.wavenumbers.as_slice()))
                    .collect();
                Field::from_fn(grid, |x| {
                    terms
                        .iter()
                        .fold(T::lit(*mean), |acc, (a, k)| acc + *a * mode(x, &ext, k))
                })
            }
            Profile::RandomCosine {
                mean,
                amplitude,
                cutoff,
                seed,
            } => {
                let modes = wavenumber_tuples(grid.dim(), *cutoff);
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let raw: Vec<f64> = modes.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let norm: f64 = raw.iter().map(|a| a.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
                let coeffs: Vec<T> = raw.iter().map(|a| T::lit(a * amplitude / norm)).collect();
                Field::from_fn(grid, |x| {
                    modes
                        .iter()
                        .zip(&coeffs)
                        .fold(T::lit(*mean), |acc, (k, &a)| acc + a * mode(x, &ext, k))
                })
            }
        };
        if !field.is_finite() {
            return Err(Error::Precondition("initial profile produced non-finite values".into()));
        }
        Ok(field)
    }
}

/// Initial pair `(u₀, v₀)`; `v₀` is clamped from below by `v_floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub u: Profile,
    pub v: Profile,
    #[serde(default = "default_v_floor")]
    pub v_floor: f64,
}

fn default_v_floor() -> f64 {
    1e-3
}

impl InitialData {
    pub fn build<T: Real>(&self, grid: Grid<T>, params: ModelParams<T>) -> Result<SimState<T>> {
        if !(self.v_floor > 0.0) {
            return Err(Error::Precondition(format!("v_floor must be positive, got {}", self.v_floor)));
        }
        let u = self.u.sample(grid)?;
        let floor = T::lit(self.v_floor);
        let v = self.v.sample(grid)?.map(|x| x.max(floor));
        SimState::new(u, v, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;

    #[test]
    fn gaussian_peaks_at_center() {
        let g = Grid::<f64>::uniform(2, 33, 1.0).unwrap();
        let p = Profile::Gaussian {
            background: 0.5,
            amplitude: 2.0,
            width: 0.1,
            center: None,
        };
        let f = p.sample(g).unwrap();
        let center = g.ravel(&[16, 16]);
        assert!((f.values()[center] - 2.5).abs() < 1e-12);
        assert!(f.min() > 0.5);
    }

    #[test]
    fn cosine_modes_have_prescribed_mean() {
        let g = Grid::<f64>::new(&[16, 12], &[2.0, 1.0]).unwrap();
        let p = Profile::Cosine {
            mean: 1.0,
            terms: vec![
                CosineTerm { wavenumbers: vec![1, 0], amplitude: 0.3 },
                CosineTerm { wavenumbers: vec![2, 3], amplitude: 0.2 },
            ],
        };
        let f = p.sample(g).unwrap();
        assert!((integrate(&f) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn random_cosine_is_seeded_and_bounded() {
        let g = Grid::<f64>::uniform(2, 16, 1.0).unwrap();
        let p = |seed| Profile::RandomCosine { mean: 1.0, amplitude: 0.5, cutoff: 3, seed };
        let a = p(7).sample(g).unwrap();
        let b = p(7).sample(g).unwrap();
        let c = p(8).sample(g).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
        assert!(a.min() >= 0.5 - 1e-12 && a.max() <= 1.5 + 1e-12);
    }

    #[test]
    fn tuples_exclude_zero_mode() {
        let t = wavenumber_tuples(2, 2);
        assert_eq!(t.len(), 8);
        assert!(!t.contains(&vec![0, 0]));
    }

    #[test]
    fn floor_clamps_signal_and_negative_density_is_rejected() {
        let g = Grid::<f64>::uniform(1, 8, 1.0).unwrap();
        let params = ModelParams::new(1.0, 1, 0.0);
        let data = InitialData {
            u: Profile::Constant { value: 1.0 },
            v: Profile::Cosine {
                mean: 0.0,
                terms: vec![CosineTerm { wavenumbers: vec![1], amplitude: 1.0 }],
            },
            v_floor: 0.1,
        };
        let s = data.build(g, params).unwrap();
        assert!((s.v.min() - 0.1).abs() < 1e-15);

        let bad = InitialData { u: Profile::Constant { value: -1.0 }, ..data };
        assert!(bad.build(g, params).is_err());
    }

    #[test]
    fn mismatched_dimension_is_rejected() {
        let g = Grid::<f64>::uniform(2, 8, 1.0).unwrap();
        let p = Profile::Gaussian { background: 1.0, amplitude: 1.0, width: 0.1, center: Some(vec![0.5]) };
        assert!(p.sample(g).is_err());
    }

    #[test]
    fn profile_json_roundtrip() {
        let p = Profile::Gaussian { background: 0.5, amplitude: 1.0, width: 0.1, center: None };
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"kind\":\"gaussian\""));
        assert_eq!(serde_json::from_str::<Profile>(&s).unwrap(), p);
    }
}
