//! Closed-form dephasing for a single environment mode, plus the dressing
//! identity check that validates the displacement picture against a
//! truncated-mode oracle.
//!
//! Two branches share the coherent-state overlap structure
//!
//!   chi(t) = e^{i theta(t)} sum_n w_n
//!            exp(i (f_n G - F g_n)) exp(-(F^2 + G^2) / 4),
//!
//! and differ in the displacement trajectory (writing D = a - b):
//!
//! ```text
//! oscillator (eps > 0):   F = D (1 - cos(eps t)) f0 / eps,
//!                         G = D sin(eps t) f0 / eps,
//!                         theta = ((a^2 - b^2) / 2) (f0^2 / eps)
//!                                 (t - sin(eps t) / eps)
//! free quadrature (eps = 0, kinetic generator Pi^2 / 2):
//!                         F = D f0 t^2 / 2,   G = D f0 t,
//!                         theta = (a^2 - b^2) f0^2 t^3 / 12
//! ```
//!
//! The eps = 0 displacement grows without bound, so the
//! modulus falls like exp(-D^2 f0^2 (t^4 / 4 + t^2) / 4): complete loss of
//! coherence without any infrared structure.

use num_complex::Complex64;

use crate::error::{DecoError, Result};
use crate::oracle::FockOracle;
use crate::tol;

fn validate_terms(terms: &[(f64, f64, f64)]) -> Result<()> {
    if terms.is_empty() {
        return Err(DecoError::WeightSumInvalid(0.0));
    }
    for &(_, _, w) in terms {
        if w < 0.0 {
            return Err(DecoError::InvalidMeasure(format!(
                "coherent mixture weights must be nonnegative, got {w}"
            )));
        }
    }
    let sum: f64 = terms.iter().map(|t| t.2).sum();
    if (sum - 1.0).abs() > tol::WEIGHT_SUM_TOL {
        return Err(DecoError::WeightSumInvalid(sum));
    }
    Ok(())
}

/// Dephasing factor for one mode of frequency `eps >= 0` with coupling
/// amplitude `f0`, sector labels `alpha` / `beta`, and an initial
/// environment mixture of displaced vacua given as `(f_amp, g_amp, weight)`
/// triples. `eps = 0` selects the free-quadrature branch.
pub fn single_mode_chi(
    eps: f64,
    f0: f64,
    alpha: f64,
    beta: f64,
    terms: &[(f64, f64, f64)],
    times: &[f64],
) -> Result<Vec<Complex64>> {
    if eps < 0.0 {
        return Err(DecoError::NegativeFrequency(eps));
    }
    validate_terms(terms)?;
    if alpha == beta {
        return Ok(vec![Complex64::new(1.0, 0.0); times.len()]);
    }
    let delta = alpha - beta;
    let square_gap = alpha * alpha - beta * beta;
    Ok(times
        .iter()
        .map(|&t| {
            let (f_shift, g_shift, theta) = if eps > 0.0 {
                let h = f0 / eps;
                (
                    delta * (1.0 - (eps * t).cos()) * h,
                    delta * (eps * t).sin() * h,
                    0.5 * square_gap * (f0 * f0 / eps) * (t - (eps * t).sin() / eps),
                )
            } else {
                (
                    delta * f0 * t * t / 2.0,
                    delta * f0 * t,
                    square_gap * f0 * f0 * t * t * t / 12.0,
                )
            };
            let gauss = -0.25 * (f_shift * f_shift + g_shift * g_shift);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(f_amp, g_amp, w) in terms {
                let phase = f_amp * g_shift - f_shift * g_amp;
                acc += Complex64::new(gauss, phase).exp() * Complex64::new(w, 0.0);
            }
            Complex64::new(0.0, theta).exp() * acc
        })
        .collect())
}

/// Defect norm of the dressing identity
///
///   T(x h, 0) H T(-x h, 0) = H + x f0 Phi + (x^2 / 2) c0,
///
/// with h = f0 / eps and c0 = f0^2 / eps, evaluated on a truncated mode of
/// `n_max` levels and restricted to the lower half of the basis where the
/// truncation is faithful. Requires `eps > 0` (the dressing shift is an
/// inverse-frequency weight) and enough levels to separate physics from
/// edge effects.
pub fn dressing_identity_check(eps: f64, f0: f64, lambda: f64, n_max: usize) -> Result<f64> {
    if eps <= 0.0 {
        return Err(DecoError::NegativeFrequency(eps));
    }
    if n_max < tol::MIN_DRESSING_NMAX {
        return Err(DecoError::TruncationTooSmall(format!(
            "dressing check needs at least {} levels, got {n_max}",
            tol::MIN_DRESSING_NMAX
        )));
    }
    let oracle = FockOracle::new(n_max, eps, f0)?;
    let h_shift = f0 / eps;
    let c0 = f0 * f0 / eps;
    let t_w = oracle.weyl(lambda * h_shift, 0.0);
    let dressed = &t_w * oracle.h_env() * t_w.adjoint();
    let mut target = oracle.h_env() + oracle.phi0().map(|z| z * (lambda * f0));
    let offset = Complex64::new(lambda * lambda / 2.0 * c0, 0.0);
    for i in 0..n_max {
        target[(i, i)] += offset;
    }
    Ok(oracle.low_defect_norm(&(dressed - target)))
}
