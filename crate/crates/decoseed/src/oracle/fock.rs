//! Truncated single-mode Fock-space calculus.
//!
//! Realizes one boson mode on the lowest `n_max` number states and exposes
//! exact matrix versions of the ladder, quadrature, displacement, and
//! evolution operators. Displacement identities that hold exactly in the
//! infinite-dimensional space hold here only on low-lying levels, so every
//! defect is measured after restricting to the lowest `n_max / 2` rows and
//! columns, and amplitudes are screened so that no appreciable state mass
//! lives above that midpoint.

use num_complex::Complex64;

use crate::error::{DecoError, Result};
use crate::linalg::{self, eigh, CMat, CVec};
use crate::tol;

/// One truncated boson mode with frequency `eps` and coupling amplitude
/// `f0`, i.e. environment Hamiltonian `eps * n_hat` and interaction
/// quadrature `f0 * phi0`.
#[derive(Debug, Clone)]
pub struct FockOracle {
    n_max: usize,
    eps: f64,
    f0: f64,
    a: CMat,
    ad: CMat,
    phi0: CMat,
    pi0: CMat,
    h_e: CMat,
}

impl FockOracle {
    pub fn new(n_max: usize, eps: f64, f0: f64) -> Result<Self> {
        if eps < 0.0 {
            return Err(DecoError::NegativeFrequency(eps));
        }
        assert!(n_max >= 4, "truncation must keep at least four levels");
        let mut a = CMat::zeros(n_max, n_max);
        for n in 1..n_max {
            a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        let ad = a.adjoint();
        let sqrt2_inv = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let phi0 = (&a + &ad).map(|z| z * sqrt2_inv);
        let pi0 = (&ad - &a).map(|z| z * sqrt2_inv * Complex64::i());
        let mut h_e = CMat::zeros(n_max, n_max);
        for n in 0..n_max {
            h_e[(n, n)] = Complex64::new(eps * n as f64, 0.0);
        }
        Ok(Self {
            n_max,
            eps,
            f0,
            a,
            ad,
            phi0,
            pi0,
            h_e,
        })
    }

    pub fn dim(&self) -> usize {
        self.n_max
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn lowering(&self) -> &CMat {
        &self.a
    }

    pub fn raising(&self) -> &CMat {
        &self.ad
    }

    pub fn phi0(&self) -> &CMat {
        &self.phi0
    }

    pub fn pi0(&self) -> &CMat {
        &self.pi0
    }

    pub fn h_env(&self) -> &CMat {
        &self.h_e
    }

    /// Kinetic-only environment Hamiltonian `pi0^2 / 2`, the zero-frequency
    /// (freely dispersing) counterpart of `h_env`.
    pub fn h_free_particle(&self) -> CMat {
        (&self.pi0 * &self.pi0).map(|z| z * 0.5)
    }

    pub fn vacuum(&self) -> CVec {
        let mut v = CVec::zeros(self.n_max);
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    /// Displacement operator `exp(i (f * pi0 + g * phi0))`.
    pub fn weyl(&self, f: f64, g: f64) -> CMat {
        let m = self.pi0.map(|z| z * f) + self.phi0.map(|z| z * g);
        let (vals, vecs) = eigh(&m);
        // exp(+iM) = exp(-iM * (-1)).
        linalg::unitary_exp(&vals, &vecs, -1.0)
    }

    /// Free environment evolution `exp(-i h_env t)` (diagonal).
    pub fn evolution(&self, t: f64) -> CMat {
        let mut u = CMat::zeros(self.n_max, self.n_max);
        for n in 0..self.n_max {
            let phase = -self.eps * n as f64 * t;
            u[(n, n)] = Complex64::new(0.0, phase).exp();
        }
        u
    }

    /// State mass above the truncation midpoint, the share of norm^2 the
    /// low-level restriction cannot see.
    pub fn tail_mass(&self, v: &CVec) -> f64 {
        let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let tail: f64 = v
            .iter()
            .enumerate()
            .filter(|(n, _)| *n >= self.n_max / 2)
            .map(|(_, z)| z.norm_sqr())
            .sum();
        tail / total
    }

    fn check_tail(&self, v: &CVec, what: &str) -> Result<()> {
        let mass = self.tail_mass(v);
        if mass > tol::FOCK_TAIL_TOL {
            return Err(DecoError::TruncationTooSmall(format!(
                "{what} holds mass {mass:.3e} above level {} (limit {:.1e}); increase n_max",
                self.n_max / 2,
                tol::FOCK_TAIL_TOL
            )));
        }
        Ok(())
    }

    /// Spectral norm of `m` restricted to the lowest `n_max / 2` rows and
    /// columns. Identities checked through this norm are insulated from the
    /// truncation boundary.
    pub fn low_defect_norm(&self, m: &CMat) -> f64 {
        let k = self.n_max / 2;
        let sub = m.view((0, 0), (k, k)).into_owned();
        linalg::spectral_norm(&sub)
    }

    /// Vacuum expectation `<vac| exp(i(f pi0 + g phi0)) |vac>` with a tail
    /// screen on the displaced state.
    pub fn vacuum_expectation(&self, f: f64, g: f64) -> Result<Complex64> {
        let v = self.weyl(f, g) * self.vacuum();
        self.check_tail(&v, "displaced vacuum")?;
        Ok(v[0])
    }

    /// Brute-force dephasing trace for one mode with a custom environment
    /// Hamiltonian: tr(e^{+i G_b t} e^{-i G_a t} omega) with
    /// G_x = h_env + x * f0 * phi0 and omega a weighted mixture of
    /// displaced vacua `exp(i(f pi0 + g phi0))|vac>` given as `(f, g, w)`
    /// triples.
    pub fn brute_chi_with_env(
        &self,
        h_env: &CMat,
        alpha: f64,
        beta: f64,
        terms: &[(f64, f64, f64)],
        times: &[f64],
    ) -> Result<Vec<Complex64>> {
        let gamma = |lam: f64| h_env + self.phi0.map(|z| z * (lam * self.f0));
        let (vals_a, vecs_a) = eigh(&gamma(alpha));
        let (vals_b, vecs_b) = eigh(&gamma(beta));
        let states: Vec<(CVec, f64)> = terms
            .iter()
            .map(|&(f, g, w)| {
                let c = self.weyl(f, g) * self.vacuum();
                self.check_tail(&c, "mixture component")?;
                Ok((c, w))
            })
            .collect::<Result<_>>()?;
        times
            .iter()
            .map(|&t| {
                let ua = linalg::unitary_exp(&vals_a, &vecs_a, t);
                let ub = linalg::unitary_exp(&vals_b, &vecs_b, t);
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, w) in &states {
                    let va = &ua * c;
                    let vb = &ub * c;
                    self.check_tail(&va, "evolved mixture component")?;
                    self.check_tail(&vb, "evolved mixture component")?;
                    acc += vb.dotc(&va) * Complex64::new(*w, 0.0);
                }
                Ok(acc)
            })
            .collect()
    }

    /// `brute_chi_with_env` under this oracle's own oscillator Hamiltonian.
    pub fn brute_chi(
        &self,
        alpha: f64,
        beta: f64,
        terms: &[(f64, f64, f64)],
        times: &[f64],
    ) -> Result<Vec<Complex64>> {
        let h = self.h_e.clone();
        self.brute_chi_with_env(&h, alpha, beta, terms, times)
    }
}

/// Vacuum expectation of the displacement `exp(i(f pi0 + g phi0))` on a
/// fresh `n_max`-level mode. Errors with `TruncationTooSmall` when the
/// displaced state leaks past the truncation midpoint.
pub fn fock_expectation(n_max: usize, f: f64, g: f64) -> Result<Complex64> {
    FockOracle::new(n_max, 1.0, 1.0)?.vacuum_expectation(f, g)
}
