//! Spectral measures over the coupling eigenvalue and the dephasing
//! transform built on them.
//!
//! The dephasing factor for a sector pair with eigenvalue gap `delta` is
//! the Fourier transform of the environment's coupling distribution,
//! chi(t) = integral of exp(-i * delta * lambda * t) d mu(lambda), carried
//! here as a quadrature grid (continuous case) or a finite set of atoms.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DecoError, Result};
use crate::tol;

/// Whether the grid discretizes a density (so aliasing is a concern) or
/// enumerates genuine point masses (so it is exact at every time).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Continuous,
    Atomic,
}

/// Probability measure over coupling eigenvalues: grid points, density
/// values, and quadrature weights, with mass(k) = density[k] * weight[k].
#[derive(Debug, Clone)]
pub struct SpectralDensity {
    lambda_grid: Vec<f64>,
    density: Vec<f64>,
    quadrature_weights: Vec<f64>,
    smoothness_class: Option<u32>,
    kind: MeasureKind,
}

impl SpectralDensity {
    /// Builds a measure from raw parts, checking shape (strictly increasing
    /// grid, nonnegative density and weights) but not total mass; consumers
    /// that require normalization check it themselves.
    pub fn from_raw(
        lambda_grid: Vec<f64>,
        density: Vec<f64>,
        quadrature_weights: Vec<f64>,
        smoothness_class: Option<u32>,
        kind: MeasureKind,
    ) -> Result<Self> {
        if lambda_grid.is_empty() {
            return Err(DecoError::InvalidMeasure("empty grid".into()));
        }
        if lambda_grid.len() != density.len() || lambda_grid.len() != quadrature_weights.len() {
            return Err(DecoError::InvalidMeasure(format!(
                "grid/density/weight lengths differ: {} / {} / {}",
                lambda_grid.len(),
                density.len(),
                quadrature_weights.len()
            )));
        }
        for w in lambda_grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(DecoError::InvalidMeasure(format!(
                    "grid must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for (&d, &w) in density.iter().zip(&quadrature_weights) {
            if !d.is_finite() || !w.is_finite() || d < 0.0 || w < 0.0 {
                return Err(DecoError::InvalidMeasure(
                    "density and quadrature weights must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(Self {
            lambda_grid,
            density,
            quadrature_weights,
            smoothness_class,
            kind,
        })
    }

    /// As `from_raw`, but additionally requires unit total mass.
    pub fn new(
        lambda_grid: Vec<f64>,
        density: Vec<f64>,
        quadrature_weights: Vec<f64>,
        smoothness_class: Option<u32>,
        kind: MeasureKind,
    ) -> Result<Self> {
        let mu = Self::from_raw(
            lambda_grid,
            density,
            quadrature_weights,
            smoothness_class,
            kind,
        )?;
        let mass = mu.total_mass();
        if (mass - 1.0).abs() > tol::MEASURE_NORM_TOL {
            return Err(DecoError::InvalidMeasure(format!(
                "total mass {mass:.15} differs from 1 beyond {:.1e}",
                tol::MEASURE_NORM_TOL
            )));
        }
        Ok(mu)
    }

    /// Standard centered Gaussian density with standard deviation `sigma`,
    /// discretized by the trapezoid rule on `n` points and renormalized to
    /// unit mass.
    pub fn gaussian(sigma: f64, n: usize) -> Result<Self> {
        Self::gaussian_centered(0.0, sigma, n)
    }

    /// Gaussian density centered at `mean`.
    pub fn gaussian_centered(mean: f64, sigma: f64, n: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(DecoError::InvalidMeasure(format!(
                "gaussian width must be positive, got {sigma}"
            )));
        }
        if n < 8 {
            return Err(DecoError::InvalidMeasure(format!(
                "gaussian grid needs at least 8 points, got {n}"
            )));
        }
        let half_width = tol::GAUSSIAN_PAD_SIGMAS * sigma;
        let (grid, weights) = trapezoid_grid(mean - half_width, mean + half_width, n);
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let mut density: Vec<f64> = grid
            .iter()
            .map(|&x| norm * (-((x - mean) / sigma).powi(2) / 2.0).exp())
            .collect();
        renormalize(&mut density, &weights);
        Self::new(grid, density, weights, None, MeasureKind::Continuous)
    }

    /// Compactly supported density proportional to (1 - lambda^2)^s on
    /// [-1, 1]; `s` controls how smoothly the density meets the endpoints
    /// and is recorded as the advisory smoothness class.
    pub fn bump(s: u32, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(DecoError::InvalidMeasure(format!(
                "bump grid needs at least 8 points, got {n}"
            )));
        }
        let (grid, weights) = trapezoid_grid(-1.0, 1.0, n);
        let mut density: Vec<f64> = grid
            .iter()
            .map(|&x| (1.0 - x * x).max(0.0).powi(s as i32))
            .collect();
        renormalize(&mut density, &weights);
        Self::new(grid, density, weights, Some(s), MeasureKind::Continuous)
    }

    /// Finite point spectrum from (position, mass) pairs; positions must be
    /// strictly increasing and masses must sum to 1.
    pub fn point_spectrum(atoms: &[(f64, f64)]) -> Result<Self> {
        let grid: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let density: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        let weights = vec![1.0; atoms.len()];
        Self::new(grid, density, weights, None, MeasureKind::Atomic)
    }

    /// `n` equal-weight atoms at the Gaussian quantile midpoints
    /// Phi^{-1}((j + 1/2) / n), scaled by `sigma`: the deterministic
    /// equal-mass surrogate for a Gaussian coupling distribution.
    pub fn gaussian_quantile_atoms(n: usize, sigma: f64) -> Result<Self> {
        if n < 2 {
            return Err(DecoError::InvalidMeasure(
                "quantile surrogate needs at least 2 atoms".into(),
            ));
        }
        if !(sigma > 0.0) {
            return Err(DecoError::InvalidMeasure(format!(
                "gaussian width must be positive, got {sigma}"
            )));
        }
        let w = 1.0 / n as f64;
        let atoms: Vec<(f64, f64)> = (0..n)
            .map(|j| (sigma * normal_quantile((j as f64 + 0.5) * w), w))
            .collect();
        Self::point_spectrum(&atoms)
    }

    pub fn len(&self) -> usize {
        self.lambda_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_grid.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.lambda_grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.quadrature_weights
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    /// Advisory boundary-smoothness index (the exponent `s` for bump
    /// densities); `None` when unknown or not applicable.
    pub fn smoothness_class(&self) -> Option<u32> {
        self.smoothness_class
    }

    pub fn total_mass(&self) -> f64 {
        self.density
            .iter()
            .zip(&self.quadrature_weights)
            .map(|(d, w)| d * w)
            .sum()
    }

    /// (position, mass) pairs of the discretized measure.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.lambda_grid
            .iter()
            .zip(self.density.iter().zip(&self.quadrature_weights))
            .map(|(&x, (&d, &w))| (x, d * w))
            .collect()
    }

    /// Largest spacing between adjacent grid points (0 for a single atom).
    pub fn max_gap(&self) -> f64 {
        self.lambda_grid
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// For a point spectrum whose position gaps share a common divisor g,
    /// the dephasing factor at gap `delta_lambda` is periodic with period
    /// 2 pi / (|delta_lambda| * g); returns that period, or `None` when the
    /// measure is continuous, has fewer than two atoms, or no common
    /// divisor emerges above the resolution floor.
    pub fn recurrence_time(&self, delta_lambda: f64) -> Option<f64> {
        if self.kind != MeasureKind::Atomic || self.len() < 2 || delta_lambda == 0.0 {
            return None;
        }
        let base = self.lambda_grid[0];
        let mut g = 0.0f64;
        for &x in &self.lambda_grid[1..] {
            g = float_gcd(g, x - base, 1e-9);
        }
        if g > 1e-9 {
            Some(2.0 * std::f64::consts::PI / (delta_lambda.abs() * g))
        } else {
            None
        }
    }
}

/// Grid points and trapezoid quadrature weights on [lo, hi] with `n` nodes.
fn trapezoid_grid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (hi - lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
    let mut weights = vec![h; n];
    weights[0] = h / 2.0;
    weights[n - 1] = h / 2.0;
    (grid, weights)
}

fn renormalize(density: &mut [f64], weights: &[f64]) {
    let mass: f64 = density.iter().zip(weights).map(|(d, w)| d * w).sum();
    for d in density.iter_mut() {
        *d /= mass;
    }
}

/// Greatest common divisor of two nonnegative reals up to tolerance `tol`,
/// via the Euclidean algorithm with round-to-nearest remainders.
fn float_gcd(a: f64, b: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    if a < b {
        std::mem::swap(&mut a, &mut b);
    }
    while b > tol {
        let r = (a / b - (a / b).round()).abs() * b;
        a = b;
        b = r;
    }
    a
}

/// Standard normal quantile by bisection on the CDF; exact to f64
/// resolution for p in (0, 1).
fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile argument must lie in (0,1)");
    let cdf = |x: f64| 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (-13.0f64, 13.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Dephasing factor chi(t) = sum_k mass_k exp(-i delta_lambda lambda_k t)
/// at each requested time.
///
/// Preconditions: the measure must be normalized to within 1e-8, and for a
/// continuous (discretized-density) measure the sampling must resolve the
/// fastest phase: |delta_lambda| * max_gap * max|t| <= pi. Atomic measures
/// are exact at every time and skip the aliasing check.
pub fn chi_spectral(
    mu: &SpectralDensity,
    delta_lambda: f64,
    times: &[f64],
) -> Result<Vec<Complex64>> {
    let mass = mu.total_mass();
    if (mass - 1.0).abs() > tol::MEASURE_NORM_HARD {
        return Err(DecoError::UnnormalizedMeasure(mass));
    }
    let t_span = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if mu.kind() == MeasureKind::Continuous {
        let max_gap = mu.max_gap();
        if delta_lambda.abs() * max_gap * t_span > std::f64::consts::PI * (1.0 + 1e-9) {
            return Err(DecoError::NyquistViolated {
                t_max: t_span,
                max_gap: delta_lambda.abs() * max_gap,
            });
        }
    }
    let atoms = mu.atoms();
    Ok(times
        .par_iter()
        .map(|&t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(lam, m) in &atoms {
                acc += Complex64::new(0.0, -delta_lambda * lam * t).exp() * m;
            }
            acc
        })
        .collect())
}
