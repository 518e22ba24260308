//! Random periodic Hamiltonians with power-law spectra and box-counting
//! dimension of the resulting Monge–Ampère support.
//!
//! Mode coefficients come from a counter-based generator: a splitmix64
//! hash of `(seed, k, cos|sin)` feeds Box–Muller, so every coefficient is a
//! pure function of its key and samples are reproducible regardless of
//! evaluation order or thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::project_convex;
use crate::error::{Error, Result};
use crate::torus::{monge_ampere, MongeAmpereMeasure, PeriodicGrid, QuasiPeriodicConvex, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldSpec {
    /// Scaling exponent `h`; mode `k` has variance `c·k^{−3−2h}`.
    pub h_exponent: f64,
    pub k_max: usize,
    pub amplitude: f64,
    pub seed: u64,
}

impl RandomFieldSpec {
    pub fn validate(&self, grid: &PeriodicGrid) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.h_exponent) {
            return Err(Error::InvalidArgument(format!("h={} outside [-1, 1]", self.h_exponent)));
        }
        if self.k_max == 0 || self.k_max > grid.n() / 2 {
            return Err(Error::InvalidArgument(format!("k_max={} must lie in [1, N/2]", self.k_max)));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::InvalidArgument("amplitude must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn mode_variance(&self, k: usize) -> f64 {
        self.amplitude * (k as f64).powf(-3.0 - 2.0 * self.h_exponent)
    }

    /// Pointwise variance `Σ_k σ_k²` of the sampled field.
    pub fn field_variance(&self) -> f64 {
        (1..=self.k_max).map(|k| self.mode_variance(k)).sum()
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in `(0, 1]` from the top 53 bits.
#[inline]
fn unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 1.0) / (1u64 << 53) as f64
}

/// Standard normal keyed by `(seed, k, sine)`.
pub fn gaussian(seed: u64, k: usize, sine: bool) -> f64 {
    let key = splitmix64(seed ^ splitmix64(((k as u64) << 1) | sine as u64));
    let u1 = unit(splitmix64(key));
    let u2 = unit(splitmix64(key ^ 0xD1B5_4A32_D192_ED03));
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// `(A_k, B_k)` for `k = 1..=k_max`.
pub fn coefficients(spec: &RandomFieldSpec) -> Vec<(f64, f64)> {
    (1..=spec.k_max)
        .map(|k| {
            let s = spec.mode_variance(k).sqrt();
            (s * gaussian(spec.seed, k, false), s * gaussian(spec.seed, k, true))
        })
        .collect()
}

/// `f(x) = Σ A_k cos(2πkx) + B_k sin(2πkx)` on a 1D grid.
pub fn sample_hamiltonian(spec: &RandomFieldSpec, grid: &PeriodicGrid) -> Result<ScalarField> {
    if grid.dim() != 1 {
        return Err(Error::UnsupportedDim(grid.dim()));
    }
    spec.validate(grid)?;
    let coef = coefficients(spec);
    let two_pi = 2.0 * std::f64::consts::PI;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            // reduce k·i mod N first so the phase stays exact for large k
            coef.iter()
                .enumerate()
                .map(|(j, (a, b))| {
                    let arg = two_pi * ((j + 1) * i % grid.n()) as f64 / grid.n() as f64;
                    a * arg.cos() + b * arg.sin()
                })
                .sum()
        })
        .collect();
    ScalarField::new(*grid, values)
}

/// Mean-square slope increment `E|f'(x+δ) − f'(x)|²` of the sampled field.
pub fn slope_structure(spec: &RandomFieldSpec, delta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    (1..=spec.k_max)
        .map(|k| {
            let w = two_pi * k as f64;
            w * w * spec.mode_variance(k) * 2.0 * (1.0 - (w * delta).cos())
        })
        .sum()
}

/// Amplitude at which the parabola and `t·f` balance on half the torus:
/// `L²/2 = t·L·√D(L)` with `L = 1/2`. Below `L` the hull sees only the
/// self-similar random part, so dyadic box counts up to `N/8` cells probe
/// the scaling regime rather than the crossover.
pub fn crossover_amplitude(h_exponent: f64, k_max: usize, t: f64) -> f64 {
    let len = 0.5;
    let unit = RandomFieldSpec { h_exponent, k_max, amplitude: 1.0, seed: 0 };
    (len / (2.0 * t)).powi(2) / slope_structure(&unit, len)
}

/// Relative mass threshold separating support cells from roundoff.
pub const SUPPORT_THRESHOLD: f64 = 1e-3;

/// Cells carrying more than `(total/N)·10⁻³` of the measure.
pub fn support_mask(ma: &MongeAmpereMeasure) -> Vec<bool> {
    let m0 = ma.total() / ma.masses().len() as f64 * SUPPORT_THRESHOLD;
    ma.masses().iter().map(|&m| m > m0).collect()
}

/// Box sizes `2, 4, …, N/8` in nodes.
pub fn dyadic_scales(n: usize) -> Vec<usize> {
    std::iter::successors(Some(2usize), |s| Some(s * 2)).take_while(|&s| s <= n / 8).collect()
}

/// Least-squares slope of `log N(s)` against `log(1/s)` for a periodic 1D
/// mask, `N(s)` the number of occupied boxes of `s` nodes.
pub fn box_dimension(mask: &[bool], scales: &[usize]) -> Result<f64> {
    if scales.len() < 2 {
        return Err(Error::InvalidArgument("need at least two scales".into()));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptySupport);
    }
    let n = mask.len();
    let mut pts = Vec::with_capacity(scales.len());
    for &s in scales {
        if s == 0 || !n.is_multiple_of(s) {
            return Err(Error::InvalidArgument(format!("box size {s} does not divide {n}")));
        }
        let occupied = mask.chunks(s).filter(|c| c.iter().any(|&m| m)).count();
        pts.push(((n as f64 / s as f64).ln(), (occupied as f64).ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// One member of a dimension ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionSample {
    pub seed: u64,
    pub h: f64,
    pub t: f64,
    pub dimension: f64,
    pub support_cells: usize,
}

/// Dimension of the support of `MA(P(|x|²/2 + t·f))` for one sample `f`.
pub fn support_dimension(spec: &RandomFieldSpec, grid: &PeriodicGrid, t: f64) -> Result<DimensionSample> {
    let f = sample_hamiltonian(spec, grid)?;
    let env = project_convex(&QuasiPeriodicConvex::quadratic(*grid), &f, t);
    let ma = monge_ampere(&QuasiPeriodicConvex::new_unchecked(env.projected))?;
    let mask = support_mask(&ma);
    let dimension = box_dimension(&mask, &dyadic_scales(grid.n()))?;
    Ok(DimensionSample {
        seed: spec.seed,
        h: spec.h_exponent,
        t,
        dimension,
        support_cells: mask.iter().filter(|&&m| m).count(),
    })
}

/// Soft acceptance band for the median dimension at `h = 0.5`.
pub const SOFT_BAND: (f64, f64) = (0.35, 0.65);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub samples: Vec<DimensionSample>,
    pub median: f64,
}

impl Ensemble {
    pub fn in_band(&self, band: (f64, f64)) -> bool {
        (band.0..=band.1).contains(&self.median)
    }
}

/// Run `seeds` in parallel; output order follows `seeds`.
pub fn dimension_ensemble(base: &RandomFieldSpec, seeds: &[u64], grid: &PeriodicGrid, t: f64) -> Result<Ensemble> {
    let samples: Vec<DimensionSample> = seeds
        .par_iter()
        .map(|&seed| support_dimension(&RandomFieldSpec { seed, ..*base }, grid, t))
        .collect::<Result<_>>()?;
    let mut dims: Vec<f64> = samples.iter().map(|s| s.dimension).collect();
    dims.sort_by(f64::total_cmp);
    let m = dims.len();
    let median = if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        dims[m / 2]
    } else {
        0.5 * (dims[m / 2 - 1] + dims[m / 2])
    };
    Ok(Ensemble { samples, median })
}

/// `q`-quantile over seeds of `max |D²f|` (a regularity diagnostic).
pub fn second_difference_quantile(base: &RandomFieldSpec, seeds: &[u64], grid: &PeriodicGrid, q: f64) -> Result<f64> {
    let mut maxima: Vec<f64> = seeds
        .par_iter()
        .map(|&seed| {
            let f = sample_hamiltonian(&RandomFieldSpec { seed, ..*base }, grid)?;
            let n = grid.n() as isize;
            let h2 = grid.spacing().powi(2);
            Ok((0..n).map(|i| ((f.at(i + 1, 0) - 2.0 * f.at(i, 0) + f.at(i - 1, 0)) / h2).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    maxima.sort_by(f64::total_cmp);
    let idx = ((maxima.len() as f64 - 1.0) * q).round() as usize;
    Ok(maxima[idx.min(maxima.len() - 1)])
}
