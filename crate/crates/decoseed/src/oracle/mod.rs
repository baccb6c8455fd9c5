//! Brute-force validation backends: full tensor-product evolution for the
//! commuting models and a truncated-Fock calculus for the boson field.

pub mod fock;

pub use fock::{fock_expectation, FockOracle};

use num_complex::Complex64;

use crate::error::{DecoError, Result};
use crate::linalg::{self, eigh, kron, CMat};
use crate::qcore::{
    partial_trace_env_mat, spectral_projectors, DensityOperator, HermitianOperator,
};
use crate::tol;

/// Finite-dimensional system+environment model with the assembled total
/// Hamiltonian H_S (x) I + I (x) H_E + V_S (x) V_E, S-major indexing.
#[derive(Debug, Clone)]
pub struct FiniteModel {
    h_s: HermitianOperator,
    v_s: HermitianOperator,
    h_e: HermitianOperator,
    v_e: HermitianOperator,
    dim_s: usize,
    dim_e: usize,
}

impl FiniteModel {
    /// `commuting_surrogate` demands [H_S,V_S] = 0 and [H_E,V_E] = 0 (both
    /// to the shared commutator tolerance); pass `false` to study models
    /// where the environment pair genuinely fails to commute.
    pub fn new(
        h_s: HermitianOperator,
        v_s: HermitianOperator,
        h_e: HermitianOperator,
        v_e: HermitianOperator,
        commuting_surrogate: bool,
    ) -> Result<Self> {
        if h_s.dim() != v_s.dim() {
            return Err(DecoError::DimensionMismatch(format!(
                "H_S is {}-dim, V_S is {}-dim",
                h_s.dim(),
                v_s.dim()
            )));
        }
        if h_e.dim() != v_e.dim() {
            return Err(DecoError::DimensionMismatch(format!(
                "H_E is {}-dim, V_E is {}-dim",
                h_e.dim(),
                v_e.dim()
            )));
        }
        let sys = linalg::spectral_norm(&linalg::commutator(h_s.mat(), v_s.mat()));
        if sys > tol::COMMUTATOR_TOL {
            return Err(DecoError::AssumptionViolated(format!(
                "[H_S, V_S] has norm {sys:.3e}"
            )));
        }
        if commuting_surrogate {
            let env = linalg::spectral_norm(&linalg::commutator(h_e.mat(), v_e.mat()));
            if env > tol::COMMUTATOR_TOL {
                return Err(DecoError::AssumptionViolated(format!(
                    "[H_E, V_E] has norm {env:.3e}"
                )));
            }
        }
        let dim_s = h_s.dim();
        let dim_e = h_e.dim();
        Ok(Self {
            h_s,
            v_s,
            h_e,
            v_e,
            dim_s,
            dim_e,
        })
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn h_s(&self) -> &HermitianOperator {
        &self.h_s
    }

    pub fn v_s(&self) -> &HermitianOperator {
        &self.v_s
    }

    pub fn h_e(&self) -> &HermitianOperator {
        &self.h_e
    }

    pub fn v_e(&self) -> &HermitianOperator {
        &self.v_e
    }

    pub fn h_total(&self) -> CMat {
        let is = CMat::identity(self.dim_s, self.dim_s);
        let ie = CMat::identity(self.dim_e, self.dim_e);
        kron(self.h_s.mat(), &ie) + kron(&is, self.h_e.mat()) + kron(self.v_s.mat(), self.v_e.mat())
    }

    /// Total Hamiltonian without the coupling term; the no-interaction
    /// control dynamics.
    pub fn h_free(&self) -> CMat {
        let is = CMat::identity(self.dim_s, self.dim_s);
        let ie = CMat::identity(self.dim_e, self.dim_e);
        kron(self.h_s.mat(), &ie) + kron(&is, self.h_e.mat())
    }
}

/// rho(t) = tr_E e^{-iHt} W0 e^{iHt} at each requested time, through one
/// eigendecomposition of the total Hamiltonian. Every output must pass
/// density validation; a failure here indicts the eigensolver, not the
/// model.
pub fn full_evolution(
    model: &FiniteModel,
    w0: &DensityOperator,
    times: &[f64],
) -> Result<Vec<DensityOperator>> {
    let total = model.dim_s * model.dim_e;
    if total > tol::DIM_CAP {
        return Err(DecoError::DimensionCap(total, tol::DIM_CAP));
    }
    if w0.dim() != total {
        return Err(DecoError::DimensionMismatch(format!(
            "W0 is {}-dim, model total dimension is {total}",
            w0.dim()
        )));
    }
    let (vals, vecs) = eigh(&model.h_total());
    times
        .iter()
        .map(|&t| {
            let wt = linalg::evolve_conjugate(&vals, &vecs, t, w0.mat());
            let rho = partial_trace_env_mat(&wt, model.dim_s, model.dim_e)?;
            DensityOperator::new(rho)
        })
        .collect()
}

/// As `full_evolution` but under the no-interaction Hamiltonian; the
/// control against which induced sectors are contrasted.
pub fn free_evolution(
    model: &FiniteModel,
    w0: &DensityOperator,
    times: &[f64],
) -> Result<Vec<DensityOperator>> {
    let total = model.dim_s * model.dim_e;
    if total > tol::DIM_CAP {
        return Err(DecoError::DimensionCap(total, tol::DIM_CAP));
    }
    let (vals, vecs) = eigh(&model.h_free());
    times
        .iter()
        .map(|&t| {
            let wt = linalg::evolve_conjugate(&vals, &vecs, t, w0.mat());
            let rho = partial_trace_env_mat(&wt, model.dim_s, model.dim_e)?;
            DensityOperator::new(rho)
        })
        .collect()
}

/// Directly evaluates tr_E(e^{+i Gamma_n t} e^{-i Gamma_m t} omega) with
/// Gamma_m = H_E + lambda_m V_E, the sector-conditioned environment
/// Hamiltonians. Sector indices refer to the ascending spectral family
/// of V_S.
pub fn gamma_evolution_check(
    model: &FiniteModel,
    omega: &DensityOperator,
    m: usize,
    n: usize,
    times: &[f64],
    cluster_tol: f64,
) -> Result<Vec<Complex64>> {
    if omega.dim() != model.dim_e {
        return Err(DecoError::DimensionMismatch(format!(
            "omega is {}-dim, environment is {}-dim",
            omega.dim(),
            model.dim_e
        )));
    }
    let fam = spectral_projectors(&model.v_s, cluster_tol)?;
    if m >= fam.len() || n >= fam.len() {
        return Err(DecoError::DimensionMismatch(format!(
            "sector indices ({m},{n}) out of range for {} sectors",
            fam.len()
        )));
    }
    let gamma = |lambda: f64| model.h_e.mat() + model.v_e.mat().map(|z| z * lambda);
    let (vals_m, vecs_m) = eigh(&gamma(fam.lambda(m)));
    let (vals_n, vecs_n) = eigh(&gamma(fam.lambda(n)));
    Ok(times
        .iter()
        .map(|&t| {
            let um = linalg::unitary_exp(&vals_m, &vecs_m, t);
            let un = linalg::unitary_exp(&vals_n, &vecs_n, t);
            // e^{+i Gamma_n t} = (e^{-i Gamma_n t})^dag for Hermitian Gamma_n.
            linalg::trace(&(un.adjoint() * um * omega.mat()))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::araki_zurek::{chi_spectral, SpectralDensity};
    use crate::linalg::c_re;
    use crate::qcore::partial_trace_env;

    fn times(n: usize, t_max: f64) -> Vec<f64> {
        (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn non_interacting_is_product_dynamics() {
        let h_s = HermitianOperator::from_real_diagonal(&[0.0, 1.3]);
        let v_s = HermitianOperator::from_real_diagonal(&[0.5, -0.5]);
        let h_e = HermitianOperator::from_real_diagonal(&[0.0, 0.7, 1.9]);
        let v_e = HermitianOperator::zero(3);
        let model = FiniteModel::new(h_s.clone(), v_s, h_e, v_e, true).unwrap();
        let rho0 = DensityOperator::uniform_plus(2);
        let omega = DensityOperator::maximally_mixed(3);
        let w0 = DensityOperator::new(kron(rho0.mat(), omega.mat())).unwrap();
        let ts = times(9, 3.0);
        let evolved = full_evolution(&model, &w0, &ts).unwrap();
        for (&t, rho_t) in ts.iter().zip(&evolved) {
            let direct = crate::qcore::evolve(&h_s, t, &rho0).unwrap();
            assert!(linalg::max_abs(&(rho_t.mat() - direct.mat())) < 1e-12);
        }
    }

    #[test]
    fn time_zero_returns_partial_trace() {
        let h_s = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let v_s = HermitianOperator::from_real_diagonal(&[1.0, -1.0]);
        let h_e = HermitianOperator::from_real_diagonal(&[0.1, 0.4]);
        let v_e = HermitianOperator::from_real_diagonal(&[0.3, -0.9]);
        let model = FiniteModel::new(h_s, v_s, h_e, v_e, true).unwrap();
        let rho0 = DensityOperator::uniform_plus(2);
        let omega = DensityOperator::maximally_mixed(2);
        let w0 = DensityOperator::new(kron(rho0.mat(), omega.mat())).unwrap();
        let evolved = full_evolution(&model, &w0, &[0.0]).unwrap();
        let pt = partial_trace_env(&w0, 2, 2).unwrap();
        assert!(linalg::max_abs(&(evolved[0].mat() - pt.mat())) < 1e-13);
    }

    #[test]
    fn dimension_cap_enforced() {
        let h_s = HermitianOperator::zero(2);
        let v_s = HermitianOperator::zero(2);
        let h_e = HermitianOperator::zero(3000);
        let v_e = HermitianOperator::zero(3000);
        let model = FiniteModel::new(h_s, v_s, h_e, v_e, true).unwrap();
        let w0 = DensityOperator::maximally_mixed(6000);
        match full_evolution(&model, &w0, &[0.0]) {
            Err(DecoError::DimensionCap(6000, _)) => {}
            other => panic!("expected DimensionCap, got {other:?}"),
        }
    }

    #[test]
    fn gamma_check_equal_sectors_is_unity() {
        let h_s = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let v_s = HermitianOperator::from_real_diagonal(&[0.5, -0.5]);
        let h_e = HermitianOperator::from_real_diagonal(&[0.0, 0.3, 1.1]);
        let v_e = HermitianOperator::from_real_diagonal(&[0.2, -0.4, 0.9]);
        let model = FiniteModel::new(h_s, v_s, h_e, v_e, true).unwrap();
        let omega = DensityOperator::maximally_mixed(3);
        let chi = gamma_evolution_check(&model, &omega, 1, 1, &times(7, 5.0), 1e-8).unwrap();
        for z in chi {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn gamma_check_matches_spectral_chi_for_diagonal_pair() {
        let h_s = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let v_s = HermitianOperator::from_real_diagonal(&[0.5, -0.5]);
        let atoms = [(-1.5, 0.2), (-0.25, 0.3), (0.5, 0.4), (2.0, 0.1)];
        let lambdas: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let h_e = HermitianOperator::from_real_diagonal(&[0.0, 0.6, 1.2, 1.8]);
        let v_e = HermitianOperator::from_real_diagonal(&lambdas);
        let model = FiniteModel::new(h_s, v_s, h_e, v_e, true).unwrap();
        // omega diagonal with exactly the atom weights.
        let mut om = CMat::zeros(4, 4);
        for (i, &(_, w)) in atoms.iter().enumerate() {
            om[(i, i)] = c_re(w);
        }
        let omega = DensityOperator::new(om).unwrap();
        let mu = SpectralDensity::point_spectrum(&atoms).unwrap();
        let ts = times(11, 4.0);
        // Sector 0 has lambda=-0.5, sector 1 has lambda=+0.5.
        let brute = gamma_evolution_check(&model, &omega, 0, 1, &ts, 1e-8).unwrap();
        let closed = chi_spectral(&mu, -1.0, &ts).unwrap();
        for (b, c) in brute.iter().zip(&closed) {
            assert!((b - c).norm() < 1e-12);
        }
    }

    #[test]
    fn gamma_check_differs_without_commuting_environment() {
        let h_s = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let v_s = HermitianOperator::from_real_diagonal(&[0.5, -0.5]);
        let h_e = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        // sigma_x environment coupling: fails assumption 3.
        let v_e = HermitianOperator::new(CMat::from_row_slice(
            2,
            2,
            &[c_re(0.0), c_re(1.0), c_re(1.0), c_re(0.0)],
        ))
        .unwrap();
        let model = FiniteModel::new(h_s, v_s, h_e.clone(), v_e.clone(), false).unwrap();
        let omega = DensityOperator::new(CMat::from_row_slice(
            2,
            2,
            &[c_re(0.8), c_re(0.0), c_re(0.0), c_re(0.2)],
        ))
        .unwrap();
        // Spectral measure built from V_E eigenvalues and omega diagonal
        // weights, the closed form one would naively write down.
        let mu = SpectralDensity::point_spectrum(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let ts = times(9, 3.0);
        let brute = gamma_evolution_check(&model, &omega, 0, 1, &ts, 1e-8).unwrap();
        let closed = chi_spectral(&mu, -1.0, &ts).unwrap();
        let max_dev = brute
            .iter()
            .zip(&closed)
            .map(|(b, c)| (b - c).norm())
            .fold(0.0f64, f64::max);
        assert!(
            max_dev > 1e-2,
            "non-commuting environment should break the spectral closed form, dev {max_dev:.3e}"
        );
        // Commuting surrogate construction must refuse this pair outright.
        assert!(matches!(
            FiniteModel::new(
                HermitianOperator::from_real_diagonal(&[0.0, 1.0]),
                HermitianOperator::from_real_diagonal(&[0.5, -0.5]),
                h_e,
                v_e,
                true
            ),
            Err(DecoError::AssumptionViolated(_))
        ));
    }
}
