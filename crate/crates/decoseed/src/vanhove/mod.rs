//! Boson-field decoherence models with linear coupling.
//!
//! The environment is a free field with dispersion eps(k) = c * k over a
//! discretized positive-momentum grid, coupled through a form factor f(k).
//! Conditional evolutions for two system sectors differ by a field
//! displacement: e^{+i Gamma_b t} e^{-i Gamma_a t} equals a global phase
//! times the displacement T(-F(t), -G(t)) with
//!
//!   F(k, t) = D (1 - cos(eps t)) f / eps,   G(k, t) = D sin(eps t) f / eps,
//!
//! D = a - b, so every dephasing factor reduces to Gaussian overlap
//! integrals. Infrared behavior is governed by ||f / eps||^2: when the
//! integral diverges as the momentum cutoff is lowered, coherence is lost
//! completely in the cutoff-removal limit.

pub mod single_mode;

pub use single_mode::{dressing_identity_check, single_mode_chi};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DecoError, Result};
use crate::tol;

/// Discretized mode structure: momentum grid, quadrature weights, coupling
/// form factor values, and the (linear) dispersion speed.
#[derive(Debug, Clone)]
pub struct ModeFunction {
    k_grid: Vec<f64>,
    weights: Vec<f64>,
    coupling: Vec<f64>,
    dispersion_speed: f64,
}

impl ModeFunction {
    pub fn new(
        k_grid: Vec<f64>,
        weights: Vec<f64>,
        coupling: Vec<f64>,
        dispersion_speed: f64,
    ) -> Result<Self> {
        if k_grid.is_empty() {
            return Err(DecoError::GridMismatch("empty momentum grid".into()));
        }
        if k_grid.len() != weights.len() || k_grid.len() != coupling.len() {
            return Err(DecoError::GridMismatch(format!(
                "grid/weights/coupling lengths differ: {} / {} / {}",
                k_grid.len(),
                weights.len(),
                coupling.len()
            )));
        }
        if !(dispersion_speed > 0.0) {
            return Err(DecoError::GridMismatch(format!(
                "dispersion speed must be positive, got {dispersion_speed}"
            )));
        }
        if k_grid[0] <= 0.0 {
            return Err(DecoError::GridMismatch(format!(
                "momenta must be strictly positive, got {}",
                k_grid[0]
            )));
        }
        for w in k_grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(DecoError::GridMismatch(format!(
                    "momentum grid must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for (&w, &f) in weights.iter().zip(&coupling) {
            if !w.is_finite() || !f.is_finite() || w < 0.0 {
                return Err(DecoError::GridMismatch(
                    "weights must be finite and nonnegative, coupling finite".into(),
                ));
            }
        }
        Ok(Self {
            k_grid,
            weights,
            coupling,
            dispersion_speed,
        })
    }

    /// Geometric momentum grid k_min * r^j covering [k_min, k_max] with `n`
    /// points, trapezoid quadrature, and coupling values f(k_j).
    pub fn geometric(
        k_min: f64,
        k_max: f64,
        n: usize,
        dispersion_speed: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if !(k_min > 0.0 && k_max > k_min) {
            return Err(DecoError::GridMismatch(format!(
                "need 0 < k_min < k_max, got [{k_min}, {k_max}]"
            )));
        }
        if n < 8 {
            return Err(DecoError::GridMismatch(format!(
                "geometric grid needs at least 8 points, got {n}"
            )));
        }
        let ratio = (k_max / k_min).powf(1.0 / (n - 1) as f64);
        let k_grid: Vec<f64> = (0..n).map(|j| k_min * ratio.powi(j as i32)).collect();
        let mut weights = vec![0.0f64; n];
        for j in 0..n {
            let left = if j == 0 { k_grid[0] } else { k_grid[j - 1] };
            let right = if j == n - 1 {
                k_grid[n - 1]
            } else {
                k_grid[j + 1]
            };
            weights[j] = (right - left) / 2.0;
        }
        let coupling: Vec<f64> = k_grid.iter().map(|&k| f(k)).collect();
        Self::new(k_grid, weights, coupling, dispersion_speed)
    }

    /// A single mode of frequency `eps` (> 0) with coupling amplitude `f0`
    /// and unit quadrature weight.
    pub fn single(eps: f64, f0: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(DecoError::NegativeFrequency(eps));
        }
        Self::new(vec![eps], vec![1.0], vec![f0], 1.0)
    }

    pub fn len(&self) -> usize {
        self.k_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_grid.is_empty()
    }

    pub fn k_grid(&self) -> &[f64] {
        &self.k_grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    pub fn dispersion_speed(&self) -> f64 {
        self.dispersion_speed
    }

    /// Mode frequency eps(k_j) = c * k_j.
    pub fn eps_at(&self, j: usize) -> f64 {
        self.dispersion_speed * self.k_grid[j]
    }

    /// Quadrature inner product sum_j w_j a_j b_j.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| w * x * y)
            .sum()
    }

    pub fn norm_sq(&self, a: &[f64]) -> f64 {
        self.inner(a, a)
    }

    /// ||eps^{-1} f||^2, the infrared weight of the coupling; chi is
    /// bounded away from zero uniformly in time iff this stays finite as
    /// the cutoff is removed.
    pub fn ir_coupling_norm_sq(&self) -> f64 {
        (0..self.len())
            .map(|j| {
                let r = self.coupling[j] / self.eps_at(j);
                self.weights[j] * r * r
            })
            .sum()
    }

    /// ||eps^{-1/2} f||^2, the dressing energy constant c0.
    pub fn dressing_constant(&self) -> f64 {
        (0..self.len())
            .map(|j| self.weights[j] * self.coupling[j] * self.coupling[j] / self.eps_at(j))
            .sum()
    }

    /// Whether this grid's infrared weight already exceeds the cap that
    /// `displacement_pair` treats as effectively divergent.
    pub fn is_ir_flagged(&self) -> bool {
        self.ir_coupling_norm_sq() > tol::IR_CAP_DEFAULT
    }

    /// Coupling-strength condition ||eps^{-1/2} f|| < 2^{-1/2} under which
    /// the dressed ground state construction stays stable at unit coupling.
    pub fn stability_ok(&self) -> bool {
        self.dressing_constant() < 0.5
    }
}

/// Weighted mixture of coherent environment preparations; term n is the
/// displaced vacuum with per-mode amplitudes (f_amp, g_amp).
#[derive(Debug, Clone)]
pub struct CoherentTerm {
    pub weight: f64,
    pub f_amp: Vec<f64>,
    pub g_amp: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CoherentMixture {
    terms: Vec<CoherentTerm>,
}

impl CoherentMixture {
    pub fn new(terms: Vec<CoherentTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(DecoError::WeightSumInvalid(0.0));
        }
        for t in &terms {
            if t.weight < 0.0 {
                return Err(DecoError::InvalidMeasure(format!(
                    "coherent mixture weights must be nonnegative, got {}",
                    t.weight
                )));
            }
            if t.f_amp.len() != t.g_amp.len() {
                return Err(DecoError::GridMismatch(format!(
                    "coherent term has {} f amplitudes but {} g amplitudes",
                    t.f_amp.len(),
                    t.g_amp.len()
                )));
            }
        }
        let sum: f64 = terms.iter().map(|t| t.weight).sum();
        if (sum - 1.0).abs() > tol::WEIGHT_SUM_TOL {
            return Err(DecoError::WeightSumInvalid(sum));
        }
        Ok(Self { terms })
    }

    /// The pure vacuum preparation over `n_modes` modes.
    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            terms: vec![CoherentTerm {
                weight: 1.0,
                f_amp: vec![0.0; n_modes],
                g_amp: vec![0.0; n_modes],
            }],
        }
    }

    pub fn terms(&self) -> &[CoherentTerm] {
        &self.terms
    }
}

/// The displacement (F, G) separating two conditional evolutions at one
/// time, as functions on the mode grid.
#[derive(Debug, Clone)]
pub struct DisplacementPair {
    pub f_shift: Vec<f64>,
    pub g_shift: Vec<f64>,
}

impl DisplacementPair {
    /// ||F||^2 + ||G||^2 in the quadrature inner product; the vacuum
    /// dephasing exponent is a quarter of this.
    pub fn norm_sq(&self, mode: &ModeFunction) -> f64 {
        mode.norm_sq(&self.f_shift) + mode.norm_sq(&self.g_shift)
    }
}

/// Displacement pair at sector gap `delta` and time `t`.
///
/// When the grid's infrared weight ||eps^{-1} f||^2 exceeds the divergence
/// cap, the model is flagged as effectively IR-divergent and the call is
/// refused unless `allow_ir_divergent` is set: results then depend on the
/// cutoff and must be read as cutoff-family data, not converged values.
pub fn displacement_pair(
    mode: &ModeFunction,
    delta: f64,
    t: f64,
    allow_ir_divergent: bool,
) -> Result<DisplacementPair> {
    let ir = mode.ir_coupling_norm_sq();
    if ir > tol::IR_CAP_DEFAULT && !allow_ir_divergent {
        return Err(DecoError::IrDivergentWithoutOverride(ir));
    }
    let n = mode.len();
    let mut f_shift = vec![0.0f64; n];
    let mut g_shift = vec![0.0f64; n];
    for j in 0..n {
        let eps = mode.eps_at(j);
        let h = mode.coupling()[j] / eps;
        f_shift[j] = delta * (1.0 - (eps * t).cos()) * h;
        g_shift[j] = delta * (eps * t).sin() * h;
    }
    Ok(DisplacementPair { f_shift, g_shift })
}

/// Matrix element of the displacement T(F, G) = exp(i(Pi(F) + Phi(G)))
/// between coherent states: bra and ket are (f_amp, g_amp) pairs over the
/// mode grid. Phases follow from the composition law alone; the modulus is
/// the vacuum Gaussian at the offset displacement.
pub fn coherent_matrix_element(
    mode: &ModeFunction,
    f_dis: &[f64],
    g_dis: &[f64],
    bra: (&[f64], &[f64]),
    ket: (&[f64], &[f64]),
) -> Result<Complex64> {
    let n = mode.len();
    for (what, v) in [
        ("displacement F", f_dis),
        ("displacement G", g_dis),
        ("bra f", bra.0),
        ("bra g", bra.1),
        ("ket f", ket.0),
        ("ket g", ket.1),
    ] {
        if v.len() != n {
            return Err(DecoError::GridMismatch(format!(
                "{what} has {} entries for a {n}-mode grid",
                v.len()
            )));
        }
    }
    let (fb, gb) = bra;
    let (fk, gk) = ket;
    let phi1 = 0.5 * (mode.inner(f_dis, gb) - mode.inner(fb, g_dis));
    let fmb: Vec<f64> = f_dis.iter().zip(fb).map(|(x, y)| x - y).collect();
    let gmb: Vec<f64> = g_dis.iter().zip(gb).map(|(x, y)| x - y).collect();
    let phi2 = 0.5 * (mode.inner(&fmb, gk) - mode.inner(fk, &gmb));
    let fc: Vec<f64> = fmb.iter().zip(fk).map(|(x, y)| x + y).collect();
    let gc: Vec<f64> = gmb.iter().zip(gk).map(|(x, y)| x + y).collect();
    let exponent = -0.25 * (mode.norm_sq(&fc) + mode.norm_sq(&gc));
    Ok(Complex64::new(exponent, phi1 + phi2).exp())
}

/// Dephasing factor for the sector pair (alpha, beta) of the field model:
///
///   chi(t) = e^{i theta(t)} sum_n w_n <c_n| T(-F(t), -G(t)) |c_n>,
///   theta(t) = ((alpha^2 - beta^2) / 2) (c0 t - (h | sin(eps t) h)),
///
/// with h = f / eps and c0 = ||eps^{-1/2} f||^2.
pub fn chi_vanhove(
    mode: &ModeFunction,
    alpha: f64,
    beta: f64,
    mixture: &CoherentMixture,
    times: &[f64],
    allow_ir_divergent: bool,
) -> Result<Vec<Complex64>> {
    let n = mode.len();
    for term in mixture.terms() {
        if term.f_amp.len() != n {
            return Err(DecoError::GridMismatch(format!(
                "mixture term has {} amplitudes for a {n}-mode grid",
                term.f_amp.len()
            )));
        }
    }
    if alpha == beta {
        return Ok(vec![Complex64::new(1.0, 0.0); times.len()]);
    }
    let delta = alpha - beta;
    let square_gap = alpha * alpha - beta * beta;
    let c0 = mode.dressing_constant();
    times
        .par_iter()
        .map(|&t| {
            let pair = displacement_pair(mode, delta, t, allow_ir_divergent)?;
            let h_sin_h: f64 = (0..n)
                .map(|j| {
                    let eps = mode.eps_at(j);
                    let h = mode.coupling()[j] / eps;
                    mode.weights()[j] * h * h * (eps * t).sin()
                })
                .sum();
            let theta = 0.5 * square_gap * (c0 * t - h_sin_h);
            let neg_f: Vec<f64> = pair.f_shift.iter().map(|x| -x).collect();
            let neg_g: Vec<f64> = pair.g_shift.iter().map(|x| -x).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for term in mixture.terms() {
                let elem = coherent_matrix_element(
                    mode,
                    &neg_f,
                    &neg_g,
                    (&term.f_amp, &term.g_amp),
                    (&term.f_amp, &term.g_amp),
                )?;
                acc += elem * Complex64::new(term.weight, 0.0);
            }
            Ok(Complex64::new(0.0, theta).exp() * acc)
        })
        .collect()
}

/// One cutoff's worth of infrared diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct IrCutoffReport {
    pub k_min: f64,
    /// Vacuum dephasing exponent -ln|chi(t_probe)| at unit sector gap.
    pub exponent_at_probe: f64,
    /// ||eps^{-1} f||^2 on this grid.
    pub ir_norm_sq: f64,
}

/// Verdict of the cutoff-family scan.
#[derive(Debug, Clone)]
pub struct IrClassification {
    /// True when the infrared weight stabilizes as the cutoff is lowered.
    pub regular: bool,
    pub per_cutoff: Vec<IrCutoffReport>,
    /// Uniform-in-time exponent bound ||eps^{-1} f||^2 at the finest
    /// cutoff when regular; `None` flags divergence (the bound grows
    /// without limit as the cutoff is removed).
    pub sup_exponent: Option<f64>,
}

/// Classifies the infrared behavior of a coupling form factor by scanning
/// a decreasing family of momentum cutoffs: for each k_min the vacuum
/// dephasing exponent at `t_probe` and the infrared weight are computed on
/// a geometric grid of `points` nodes up to `k_max`. The form factor is
/// regular when the infrared weight stops growing (successive ratio < 2)
/// and divergent when it keeps climbing.
pub fn ir_classify(
    f: impl Fn(f64) -> f64,
    dispersion_speed: f64,
    k_max: f64,
    points: usize,
    k_min_cutoffs: &[f64],
    t_probe: f64,
) -> Result<IrClassification> {
    if k_min_cutoffs.len() < 2 {
        return Err(DecoError::NonMonotoneCutoffs(k_min_cutoffs.to_vec()));
    }
    for w in k_min_cutoffs.windows(2) {
        if !(w[1] < w[0]) {
            return Err(DecoError::NonMonotoneCutoffs(k_min_cutoffs.to_vec()));
        }
    }
    if k_min_cutoffs[0] >= k_max || k_min_cutoffs[k_min_cutoffs.len() - 1] <= 0.0 {
        return Err(DecoError::NonMonotoneCutoffs(k_min_cutoffs.to_vec()));
    }
    let mut per_cutoff = Vec::with_capacity(k_min_cutoffs.len());
    for &k_min in k_min_cutoffs {
        let mode = ModeFunction::geometric(k_min, k_max, points, dispersion_speed, &f)?;
        let pair = displacement_pair(&mode, 1.0, t_probe, true)?;
        per_cutoff.push(IrCutoffReport {
            k_min,
            exponent_at_probe: pair.norm_sq(&mode) / 4.0,
            ir_norm_sq: mode.ir_coupling_norm_sq(),
        });
    }
    let regular = per_cutoff
        .windows(2)
        .all(|w| w[1].ir_norm_sq < 2.0 * w[0].ir_norm_sq);
    let sup_exponent = if regular {
        Some(per_cutoff[per_cutoff.len() - 1].ir_norm_sq)
    } else {
        None
    };
    Ok(IrClassification {
        regular,
        per_cutoff,
        sup_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FockOracle;

    fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn three_mode() -> ModeFunction {
        ModeFunction::new(
            vec![0.7, 1.1, 1.9],
            vec![0.4, 0.7, 0.5],
            vec![0.5, 0.3, 0.2],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn mode_function_shape_is_validated() {
        assert!(matches!(
            ModeFunction::new(vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0], 1.0),
            Err(DecoError::GridMismatch(_))
        ));
        assert!(matches!(
            ModeFunction::new(vec![1.0, 0.5], vec![1.0, 1.0], vec![1.0, 1.0], 1.0),
            Err(DecoError::GridMismatch(_))
        ));
        assert!(matches!(
            ModeFunction::new(vec![1.0], vec![1.0, 1.0], vec![1.0], 1.0),
            Err(DecoError::GridMismatch(_))
        ));
        assert!(matches!(
            ModeFunction::new(vec![1.0], vec![1.0], vec![1.0], 0.0),
            Err(DecoError::GridMismatch(_))
        ));
        assert!(matches!(
            ModeFunction::single(0.0, 1.0),
            Err(DecoError::NegativeFrequency(_))
        ));
    }

    #[test]
    fn displacement_vanishes_at_time_zero() {
        let mode = three_mode();
        let pair = displacement_pair(&mode, 1.3, 0.0, false).unwrap();
        assert!(pair.f_shift.iter().all(|&x| x == 0.0));
        assert!(pair.g_shift.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn half_period_displacement_of_single_mode() {
        let mode = ModeFunction::single(1.0, 1.0).unwrap();
        let pair = displacement_pair(&mode, 1.0, std::f64::consts::PI, false).unwrap();
        assert!((pair.f_shift[0] - 2.0).abs() < 1e-12);
        assert!(pair.g_shift[0].abs() < 1e-12);
    }

    #[test]
    fn displacement_norm_identity_and_bound() {
        let mode = three_mode();
        let delta = 0.8;
        let cap = 4.0 * delta * delta * mode.ir_coupling_norm_sq();
        for &t in &[0.3, 1.1, 2.9, 7.7] {
            let pair = displacement_pair(&mode, delta, t, false).unwrap();
            let lhs = pair.norm_sq(&mode);
            let rhs: f64 = (0..mode.len())
                .map(|j| {
                    let eps = mode.eps_at(j);
                    let h = mode.coupling()[j] / eps;
                    2.0 * delta * delta * (1.0 - (eps * t).cos()) * h * h * mode.weights()[j]
                })
                .sum();
            assert!((lhs - rhs).abs() < 1e-10, "t={t}: {lhs} vs {rhs}");
            assert!(lhs <= cap * (1.0 + 1e-12));
        }
    }

    #[test]
    fn infrared_divergent_grid_requires_override() {
        let mode = ModeFunction::geometric(1e-6, 1.0, 512, 1.0, |k| k.powf(-0.25)).unwrap();
        assert!(mode.is_ir_flagged());
        match displacement_pair(&mode, 1.0, 1.0, false) {
            Err(DecoError::IrDivergentWithoutOverride(v)) => {
                assert!(v > tol::IR_CAP_DEFAULT)
            }
            other => panic!("expected IrDivergentWithoutOverride, got {other:?}"),
        }
        assert!(displacement_pair(&mode, 1.0, 1.0, true).is_ok());
    }

    #[test]
    fn vacuum_element_matches_gaussian_and_fock_oracle() {
        let mode = ModeFunction::single(1.0, 1.0).unwrap();
        let zeros = [0.0];
        let elem =
            coherent_matrix_element(&mode, &[2.0], &[0.0], (&zeros, &zeros), (&zeros, &zeros))
                .unwrap();
        assert!((elem.norm() - (-1.0f64).exp()).abs() < 1e-12);

        // General bra/ket element against the truncated-mode oracle.
        let oracle = FockOracle::new(40, 1.0, 1.0).unwrap();
        let (fd, gd) = (0.7, -0.4);
        let (fb, gb) = (0.3, 0.2);
        let (fk, gk) = (-0.5, 0.1);
        let closed =
            coherent_matrix_element(&mode, &[fd], &[gd], (&[fb], &[gb]), (&[fk], &[gk])).unwrap();
        let bra_vec = oracle.weyl(fb, gb) * oracle.vacuum();
        let ket_vec = oracle.weyl(fk, gk) * oracle.vacuum();
        let brute = bra_vec.dotc(&(oracle.weyl(fd, gd) * ket_vec));
        assert!(
            (closed - brute).norm() < 1e-6,
            "closed {closed} vs brute {brute}"
        );
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let mode = three_mode();
        let bad = coherent_matrix_element(
            &mode,
            &[1.0, 2.0],
            &[0.0, 0.0],
            (&[0.0; 3], &[0.0; 3]),
            (&[0.0; 3], &[0.0; 3]),
        );
        assert!(matches!(bad, Err(DecoError::GridMismatch(_))));
    }

    #[test]
    fn equal_sector_labels_give_unity() {
        let mode = three_mode();
        let mix = CoherentMixture::vacuum(3);
        let chi = chi_vanhove(&mode, 0.7, 0.7, &mix, &[0.0, 1.0, 5.0], false).unwrap();
        for z in chi {
            assert_eq!(z, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn mixture_weights_are_validated() {
        let term = |w: f64| CoherentTerm {
            weight: w,
            f_amp: vec![0.0; 3],
            g_amp: vec![0.0; 3],
        };
        assert!(matches!(
            CoherentMixture::new(vec![term(0.6), term(0.6)]),
            Err(DecoError::WeightSumInvalid(_))
        ));
        assert!(matches!(
            CoherentMixture::new(vec![term(1.5), term(-0.5)]),
            Err(DecoError::InvalidMeasure(_))
        ));
        assert!(CoherentMixture::new(vec![term(0.5), term(0.5)]).is_ok());
    }

    #[test]
    fn single_mode_chi_matches_fock_oracle_with_mixture() {
        let (eps, f0) = (1.3, 0.8);
        let mode = ModeFunction::single(eps, f0).unwrap();
        let terms = vec![
            CoherentTerm {
                weight: 0.35,
                f_amp: vec![0.0],
                g_amp: vec![0.0],
            },
            CoherentTerm {
                weight: 0.4,
                f_amp: vec![0.6],
                g_amp: vec![-0.3],
            },
            CoherentTerm {
                weight: 0.25,
                f_amp: vec![-0.2],
                g_amp: vec![0.5],
            },
        ];
        let mix = CoherentMixture::new(terms.clone()).unwrap();
        let times = [0.0, 0.7, 2.0, 5.0];
        let (alpha, beta) = (1.0, 0.3);
        let closed = chi_vanhove(&mode, alpha, beta, &mix, &times, false).unwrap();
        let oracle = FockOracle::new(60, eps, f0).unwrap();
        let brute_terms: Vec<(f64, f64, f64)> = terms
            .iter()
            .map(|t| (t.f_amp[0], t.g_amp[0], t.weight))
            .collect();
        let brute = oracle.brute_chi(alpha, beta, &brute_terms, &times).unwrap();
        for (c, b) in closed.iter().zip(&brute) {
            assert!((c - b).norm() < 1e-10, "closed {c} vs brute {b}");
        }
    }

    #[test]
    fn multimode_chi_matches_per_mode_brute_product() {
        let mode = three_mode();
        let terms = vec![
            CoherentTerm {
                weight: 0.6,
                f_amp: vec![0.0; 3],
                g_amp: vec![0.0; 3],
            },
            CoherentTerm {
                weight: 0.4,
                f_amp: vec![0.4, 0.0, -0.3],
                g_amp: vec![0.0, 0.2, 0.1],
            },
        ];
        let mix = CoherentMixture::new(terms.clone()).unwrap();
        let times = [0.0, 0.8, 2.5];
        let (alpha, beta) = (0.9, 0.2);
        let closed = chi_vanhove(&mode, alpha, beta, &mix, &times, false).unwrap();

        // The discrete model behind the quadrature: mode j couples with
        // strength sqrt(w_j) f_j and the coherent amplitudes pick up the
        // same sqrt(w_j) scaling, which reproduces every quadrature inner
        // product exactly. Per coherent term the factor is the product of
        // single-mode brute-force elements.
        let mut brute = vec![Complex64::new(0.0, 0.0); times.len()];
        for term in &terms {
            let mut per_term = vec![Complex64::new(1.0, 0.0); times.len()];
            for j in 0..mode.len() {
                let root_w = mode.weights()[j].sqrt();
                let oracle =
                    FockOracle::new(50, mode.eps_at(j), root_w * mode.coupling()[j]).unwrap();
                let contrib = oracle
                    .brute_chi(
                        alpha,
                        beta,
                        &[(root_w * term.f_amp[j], root_w * term.g_amp[j], 1.0)],
                        &times,
                    )
                    .unwrap();
                for (p, c) in per_term.iter_mut().zip(contrib) {
                    *p *= c;
                }
            }
            for (b, p) in brute.iter_mut().zip(per_term) {
                *b += p * Complex64::new(term.weight, 0.0);
            }
        }
        for (c, b) in closed.iter().zip(&brute) {
            assert!((c - b).norm() < 1e-6, "closed {c} vs brute {b}");
        }
    }

    #[test]
    fn regular_coupling_keeps_chi_above_its_floor() {
        let mode = ModeFunction::geometric(1e-4, 20.0, 1024, 1.0, |k| k * (-k).exp()).unwrap();
        let mix = CoherentMixture::vacuum(mode.len());
        let times = linspace(0.0, 20.0, 64);
        let chi = chi_vanhove(&mode, 1.0, 0.0, &mix, &times, false).unwrap();
        let floor = (-mode.ir_coupling_norm_sq()).exp() - 1e-10;
        for (z, &t) in chi.iter().zip(&times) {
            assert!(z.norm() >= floor, "t={t}: |chi| = {} < {floor}", z.norm());
        }
    }

    #[test]
    fn classifier_separates_damped_from_power_law() {
        let damped = ir_classify(
            |k| k * (-k).exp(),
            1.0,
            20.0,
            2048,
            &[1e-2, 1e-3, 1e-4],
            10.0,
        )
        .unwrap();
        assert!(damped.regular);
        assert!(damped.sup_exponent.is_some());

        // Fast dispersion keeps the probe outside the quadratic small-phase
        // regime for every cutoff, so the probed exponent tracks the growing
        // infrared weight instead of saturating.
        let power = ir_classify(
            |k| k.powf(-0.25),
            1000.0,
            1.0,
            16384,
            &[1e-2, 1e-3, 1e-4],
            10.0,
        )
        .unwrap();
        assert!(!power.regular);
        assert!(power.sup_exponent.is_none());
        for w in power.per_cutoff.windows(2) {
            assert!(
                w[1].exponent_at_probe > 2.0 * w[0].exponent_at_probe,
                "exponents {:?} should at least double per decade",
                power
                    .per_cutoff
                    .iter()
                    .map(|r| r.exponent_at_probe)
                    .collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn cutoff_family_must_decrease() {
        let bad = ir_classify(|k| k, 1.0, 1.0, 64, &[1e-3, 1e-2], 1.0);
        assert!(matches!(bad, Err(DecoError::NonMonotoneCutoffs(_))));
        let single = ir_classify(|k| k, 1.0, 1.0, 64, &[1e-3], 1.0);
        assert!(matches!(single, Err(DecoError::NonMonotoneCutoffs(_))));
    }
}
