use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::identities::cell_gradients;
use crate::error::{Error, Result};
use crate::grid::{cell_gradient_norm, face_gradient, face_integrate, integrate, Field, Grid};
use crate::real::Real;

/// How the set `B` of prescribed measure is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BSelector {
    /// Cells with the smallest values (a sublevel set).
    Threshold,
    /// Uniformly random cells.
    RandomMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub samples: usize,
    pub seed: u64,
    /// Largest cosine wavenumber per axis.
    pub cutoff: usize,
    /// Range of the log-amplitude of generated fields.
    pub amplitude: (f64, f64),
    /// Range of the mean of `ln φ` before the floor is added.
    pub log_mean: (f64, f64),
    /// Additive positive floor.
    pub floor: f64,
    /// Level `δ` of the log-Poincaré inequality.
    pub delta: f64,
    /// Required measure of `{φ > δ}`.
    pub eta: f64,
    pub selector: BSelector,
    /// `|B| / |Ω|` for the mean-Poincaré ratio.
    pub b_fraction: f64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
            cutoff: 3,
            amplitude: (0.2, 2.0),
            log_mean: (-0.5, 0.5),
            floor: 1e-3,
            delta: 1.0,
            eta: 0.05,
            selector: BSelector::Threshold,
            b_fraction: 0.2,
        }
    }
}

/// Regeneration attempts per member before giving up.
const MAX_ATTEMPTS: usize = 1000;

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Precondition(m.to_string()));
        if self.samples == 0 {
            return bad("ensemble needs at least one sample");
        }
        if self.cutoff == 0 {
            return bad("spectral cutoff must be ≥ 1");
        }
        if !(self.amplitude.0 >= 0.0 && self.amplitude.1 >= self.amplitude.0) {
            return bad("amplitude range must satisfy 0 ≤ min ≤ max");
        }
        if !(self.log_mean.1 >= self.log_mean.0) {
            return bad("log_mean range must satisfy min ≤ max");
        }
        if !(self.floor > 0.0 && self.delta > 0.0 && self.eta >= 0.0) {
            return bad("floor and delta must be positive, eta nonnegative");
        }
        if !(self.b_fraction > 0.0 && self.b_fraction <= 1.0) {
            return bad("b_fraction must lie in (0, 1]");
        }
        Ok(())
    }

    /// Generator for member `k`; independent of how many members are evaluated.
    fn member_rng(&self, k: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        rng
    }

    /// `floor + exp(m + A · s(x))` with `s` a random Neumann cosine series bounded by 1.
    fn draw<T: Real>(&self, grid: Grid<T>, rng: &mut ChaCha8Rng) -> Field<T> {
        let dim = grid.dim();
        let mut modes: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..dim {
            modes = modes
                .into_iter()
                .flat_map(|m| {
                    (0..=self.cutoff).map(move |k| {
                        let mut n = m.clone();
                        n.push(k);
                        n
                    })
                })
                .collect();
        }
        modes.retain(|m| m.iter().any(|&k| k > 0));
        let raw: Vec<f64> = modes.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let norm = raw.iter().map(|a| a.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        let amp = if self.amplitude.1 > self.amplitude.0 {
            rng.gen_range(self.amplitude.0..=self.amplitude.1)
        } else {
            self.amplitude.0
        };
        let shift = if self.log_mean.1 > self.log_mean.0 {
            T::lit(rng.gen_range(self.log_mean.0..=self.log_mean.1))
        } else {
            T::lit(self.log_mean.0)
        };
        let coeffs: Vec<T> = raw.iter().map(|a| T::lit(a * amp / norm)).collect();
        let ext: Vec<T> = grid.extents().to_vec();
        let floor = T::lit(self.floor);
        Field::from_fn(grid, |x| {
            let s = modes.iter().zip(&coeffs).fold(shift, |acc, (m, &c)| {
                let mode = x
                    .iter()
                    .zip(&ext)
                    .zip(m)
                    .fold(T::one(), |p, ((&xi, &l), &k)| p * (T::from_usize_lossy(k) * T::PI() * xi / l).cos());
                acc + c * mode
            });
            floor + s.exp()
        })
    }

    /// Draws member `k`, regenerating until `|{φ > δ}| > η`. Returns the field and the number of redraws.
    pub fn member<T: Real>(&self, grid: Grid<T>, k: usize) -> Result<(Field<T>, usize)> {
        let mut rng = self.member_rng(k);
        let delta = T::lit(self.delta);
        let vol = grid.cell_volume();
        for attempt in 0..MAX_ATTEMPTS {
            let f = self.draw(grid, &mut rng);
            let above = T::from_usize_lossy(f.values().iter().filter(|&&x| x > delta).count()) * vol;
            if above > T::lit(self.eta) {
                return Ok((f, attempt));
            }
        }
        Err(Error::Precondition(format!(
            "member {k}: no field with |{{φ > δ}}| > η after {MAX_ATTEMPTS} draws"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridDescriptor {
    pub cells: Vec<usize>,
    pub extents: Vec<f64>,
}

impl GridDescriptor {
    pub fn of<T: Real>(grid: &Grid<T>) -> Self {
        Self {
            cells: grid.cells().to_vec(),
            extents: grid.extents().iter().map(|e| e.to_f64_lossy()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogPoincareReport {
    pub seed: u64,
    pub grid: GridDescriptor,
    pub samples: usize,
    /// Members with `∫ ln(δ/φ) ≥ 0` and a nonzero denominator.
    pub ratio_count: usize,
    /// Members with `∫ ln(δ/φ) < 0`.
    pub alternative_count: usize,
    /// Members with `0/0`.
    pub excluded: usize,
    pub regenerated: usize,
    /// Empirical `1/C`: max of `(∫ ln(δ/φ))² / ∫|∇φ|²/φ²`; `None` when every member took the alternative.
    pub max_ratio: Option<f64>,
    pub alternative_fraction: f64,
}

enum LogOutcome {
    Ratio(f64),
    Alternative,
    Excluded,
}

fn log_outcome<T: Real>(phi: &Field<T>, delta: T) -> LogOutcome {
    let ln = phi.map(|x| (delta / x).ln());
    let mean = integrate(&ln);
    let grad = face_gradient(&phi.map(|x| x.ln()));
    let dissipation = face_integrate(&grad.map(|g| g * g));
    let scale = integrate(&ln.map(|x| x.abs())).max(T::min_positive_value());
    if mean.abs() <= T::lit(1e-12) * scale && dissipation == T::zero() {
        LogOutcome::Excluded
    } else if mean < T::zero() {
        LogOutcome::Alternative
    } else if dissipation == T::zero() {
        LogOutcome::Excluded
    } else {
        LogOutcome::Ratio((mean * mean / dissipation).to_f64_lossy())
    }
}

/// Monte-Carlo estimate of the log-Poincaré constant.
pub fn log_poincare_ratio<T: Real>(spec: &EnsembleSpec, grid: Grid<T>) -> Result<LogPoincareReport> {
    spec.validate()?;
    let delta = T::lit(spec.delta);
    let members: Vec<(LogOutcome, usize)> = (0..spec.samples)
        .into_par_iter()
        .map(|k| spec.member(grid, k).map(|(phi, redraws)| (log_outcome(&phi, delta), redraws)))
        .collect::<Result<_>>()?;
    let mut report = LogPoincareReport {
        seed: spec.seed,
        grid: GridDescriptor::of(&grid),
        samples: spec.samples,
        ratio_count: 0,
        alternative_count: 0,
        excluded: 0,
        regenerated: 0,
        max_ratio: None,
        alternative_fraction: 0.0,
    };
    for (outcome, redraws) in members {
        report.regenerated += redraws;
        match outcome {
            LogOutcome::Ratio(r) => {
                report.ratio_count += 1;
                report.max_ratio = Some(report.max_ratio.map_or(r, |m: f64| m.max(r)));
            }
            LogOutcome::Alternative => report.alternative_count += 1,
            LogOutcome::Excluded => report.excluded += 1,
        }
    }
    report.alternative_fraction = report.alternative_count as f64 / spec.samples as f64;
    Ok(report)
}

/// Cells of `B` with `|B| ≈ fraction · |Ω|` (at least one cell).
fn select_b<T: Real>(u: &Field<T>, spec: &EnsembleSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = u.values().len();
    let count = ((spec.b_fraction * n as f64).round() as usize).clamp(1, n);
    match spec.selector {
        BSelector::Threshold => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| {
                u.values()[a]
                    .partial_cmp(&u.values()[b])
                    .expect("finite field")
                    .then(a.cmp(&b))
            });
            idx.truncate(count);
            idx
        }
        BSelector::RandomMask => {
            let mut idx = sample_indices(rng, n, count).into_vec();
            idx.sort_unstable();
            idx
        }
    }
}

/// `(∫|u − u_B|^p)^{1/p} / (∫|∇u|^p)^{1/p}`; `None` for constant `u`.
pub fn mean_ratio<T: Real>(u: &Field<T>, b: &[usize], p: T) -> Option<T> {
    let u_b = b.iter().map(|&i| u.values()[i]).sum::<T>() / T::from_usize_lossy(b.len());
    let num = integrate(&u.map(|x| (x - u_b).abs().powf(p))).powf(p.recip());
    let den = integrate(&cell_gradient_norm(u).map(|g| g.powf(p))).powf(p.recip());
    if den > T::zero() {
        Some(num / den)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RieszCheck {
    /// Random probe cells per member.
    pub probes: usize,
    /// Members used to fit the constant; the remaining members are checked against it.
    pub calibration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RieszReport {
    pub constant: f64,
    pub checked: usize,
    /// Probes where `|u(x) − u_B|` exceeded the frozen constant times the kernel sum.
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanPoincareReport {
    pub seed: u64,
    pub grid: GridDescriptor,
    pub p: f64,
    pub b_fraction: f64,
    pub samples: usize,
    /// Empirical `C(Ω, δ, p)`.
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
    pub riesz: Option<RieszReport>,
}

/// `|u(x) − u_B|` and `∫ |∇u(y)| / |x − y|^{n−1} dy` at cell `x`, skipping `y = x`.
fn riesz_pair<T: Real>(u: &Field<T>, grad_norm: &[T], u_b: T, x: usize) -> (f64, f64) {
    let grid = u.grid();
    let cx = grid.center(x);
    let power = T::from_usize_lossy(grid.dim() - 1);
    let vol = grid.cell_volume();
    let mut kernel = T::zero();
    for y in 0..grid.len() {
        if y == x {
            continue;
        }
        let cy = grid.center(y);
        let d2: T = (0..grid.dim()).map(|a| (cx[a] - cy[a]) * (cx[a] - cy[a])).sum();
        kernel = kernel + grad_norm[y] / d2.sqrt().powf(power) * vol;
    }
    ((u.values()[x] - u_b).abs().to_f64_lossy(), kernel.to_f64_lossy())
}

/// Monte-Carlo estimate of the mean-Poincaré constant for sets of measure `b_fraction·|Ω|`.
pub fn mean_poincare_ratio<T: Real>(
    spec: &EnsembleSpec,
    grid: Grid<T>,
    p: T,
    riesz: Option<RieszCheck>,
) -> Result<MeanPoincareReport> {
    spec.validate()?;
    if !(p >= T::one()) {
        return Err(Error::Precondition(format!("p must be ≥ 1, got {p}")));
    }
    struct Member {
        ratio: Option<f64>,
        probes: Vec<(f64, f64)>,
    }
    let probes = riesz.map_or(0, |r| r.probes);
    let members: Vec<Member> = (0..spec.samples)
        .into_par_iter()
        .map(|k| {
            let (u, _) = spec.member(grid, k)?;
            let mut rng = spec.member_rng(k);
            // Separate stream position for the B and probe draws.
            rng.set_word_pos(1 << 40);
            let b = select_b(&u, spec, &mut rng);
            let ratio = mean_ratio(&u, &b, p).map(|r| r.to_f64_lossy());
            let mut pairs = Vec::with_capacity(probes);
            if probes > 0 {
                let u_b = b.iter().map(|&i| u.values()[i]).sum::<T>() / T::from_usize_lossy(b.len());
                let grads = cell_gradients(&u);
                let norm: Vec<T> = (0..grid.len())
                    .map(|i| grads.iter().map(|g| g[i] * g[i]).sum::<T>().sqrt())
                    .collect();
                for _ in 0..probes {
                    let x = rng.gen_range(0..grid.len());
                    pairs.push(riesz_pair(&u, &norm, u_b, x));
                }
            }
            Ok(Member { ratio, probes: pairs })
        })
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = members.iter().filter_map(|m| m.ratio).collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let riesz = riesz.map(|cfg| {
        let split = cfg.calibration.min(members.len());
        let constant = members[..split]
            .iter()
            .flat_map(|m| &m.probes)
            .filter(|(_, k)| *k > 0.0)
            .map(|(d, k)| d / k)
            .fold(0.0, f64::max);
        let checked: Vec<&(f64, f64)> = members[split..].iter().flat_map(|m| &m.probes).collect();
        let violations = checked.iter().filter(|(d, k)| *d > constant * k * (1.0 + 1e-12)).count();
        RieszReport {
            constant,
            checked: checked.len(),
            violations,
        }
    });
    Ok(MeanPoincareReport {
        seed: spec.seed,
        grid: GridDescriptor::of(&grid),
        p: p.to_f64_lossy(),
        b_fraction: spec.b_fraction,
        samples: spec.samples,
        max_ratio,
        ratios,
        riesz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid<f64> {
        Grid::uniform(2, 16, 1.0).unwrap()
    }

    #[test]
    fn constant_at_level_is_excluded() {
        assert!(matches!(log_outcome(&Field::constant(grid(), 1.0), 1.0), LogOutcome::Excluded));
    }

    #[test]
    fn doubled_level_takes_alternative() {
        let g = grid();
        let phi = Field::constant(g, 2.0);
        let ln = integrate(&phi.map(|x| (1.0 / x).ln()));
        assert!((ln + 2f64.ln()).abs() < 1e-12);
        assert!(matches!(log_outcome(&phi, 1.0), LogOutcome::Alternative));
    }

    #[test]
    fn members_respect_floor_and_are_reproducible() {
        let spec = EnsembleSpec { samples: 4, seed: 11, ..EnsembleSpec::default() };
        let (a, _) = spec.member(grid(), 2).unwrap();
        let (b, _) = spec.member(grid(), 2).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.min() >= spec.floor);
    }

    #[test]
    fn branches_partition_the_ensemble() {
        let spec = EnsembleSpec { samples: 64, seed: 3, ..EnsembleSpec::default() };
        let rep = log_poincare_ratio(&spec, grid()).unwrap();
        assert_eq!(rep.ratio_count + rep.alternative_count + rep.excluded, 64);
        assert!(rep.max_ratio.unwrap().is_finite());
    }

    #[test]
    fn linear_profile_ratio_closed_form() {
        // u = x on [0, 1], B = left half, p = 1: u_B = 1/4, ∫|x − 1/4| = 5/16, ∫|u'| = 1
        let g = Grid::<f64>::uniform(1, 1000, 1.0).unwrap();
        let u = Field::from_fn(g, |x| x[0]);
        let b: Vec<usize> = (0..500).collect();
        let r = mean_ratio(&u, &b, 1.0).unwrap();
        assert!((r - 5.0 / 16.0).abs() < 1e-3, "{r}");
        // p = 2: ∫(x − 1/4)² = 7/48
        let r2 = mean_ratio(&u, &b, 2.0).unwrap();
        assert!((r2 - (7.0f64 / 48.0).sqrt()).abs() < 1e-3, "{r2}");
    }

    #[test]
    fn constant_has_zero_numerator() {
        let u = Field::constant(grid(), 3.0);
        assert!(mean_ratio(&u, &[0, 1, 2], 2.0).is_none());
        let u_b = 3.0;
        assert_eq!(integrate(&u.map(|x| (x - u_b).abs())), 0.0);
    }

    #[test]
    fn mean_ratio_is_bit_reproducible() {
        let spec = EnsembleSpec { samples: 16, seed: 5, selector: BSelector::RandomMask, ..EnsembleSpec::default() };
        let a = mean_poincare_ratio(&spec, grid(), 2.0, None).unwrap();
        let b = mean_poincare_ratio(&spec, grid(), 2.0, None).unwrap();
        assert_eq!(a.max_ratio.to_bits(), b.max_ratio.to_bits());
        assert_eq!(a.ratios, b.ratios);
    }

    #[test]
    fn riesz_check_runs() {
        let spec = EnsembleSpec { samples: 8, seed: 1, ..EnsembleSpec::default() };
        let rep = mean_poincare_ratio(&spec, Grid::uniform(2, 12, 1.0).unwrap(), 1.0, Some(RieszCheck { probes: 10, calibration: 4 }))
            .unwrap();
        let r = rep.riesz.unwrap();
        assert_eq!(r.checked, 40);
        assert!(r.constant > 0.0);
    }
}
