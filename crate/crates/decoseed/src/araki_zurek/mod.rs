//! Commuting-coupling decoherence models.
//!
//! The model class: system Hamiltonian H_S, system coupling V_S with
//! [H_S, V_S] = 0, and an environment whose conditional Hamiltonians
//! Gamma_m = H_E + lambda_m V_E commute pairwise. In this regime the
//! reduced dynamics factorizes block by block over the spectral family of
//! V_S: the (m, n) block of rho(t) is the freely evolved block times a
//! scalar dephasing factor chi_mn(t) that depends only on the eigenvalue
//! gap lambda_m - lambda_n and the environment's coupling distribution.

pub mod decay;
pub mod measure;

pub use decay::{certificate_holds, fit_decay_bound, fit_decay_series, DecayBound, DecayFit};
pub use measure::{chi_spectral, MeasureKind, SpectralDensity};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DecoError, Result};
use crate::linalg::{self, eigh, CMat};
use crate::qcore::{spectral_frame, DensityOperator, HermitianOperator, SectorFamily};
use crate::tol;

/// A validated commuting pair (H_S, V_S) together with the spectral family
/// of V_S and the frame that diagonalizes it.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    h_s: HermitianOperator,
    v_s: HermitianOperator,
    sectors: SectorFamily,
    frame: CMat,
    sector_of: Vec<usize>,
}

impl SystemSpec {
    pub fn new(h_s: HermitianOperator, v_s: HermitianOperator, cluster_tol: f64) -> Result<Self> {
        if h_s.dim() != v_s.dim() {
            return Err(DecoError::DimensionMismatch(format!(
                "H_S is {}-dim, V_S is {}-dim",
                h_s.dim(),
                v_s.dim()
            )));
        }
        let comm = linalg::spectral_norm(&linalg::commutator(h_s.mat(), v_s.mat()));
        if comm > tol::COMMUTATOR_TOL {
            return Err(DecoError::AssumptionViolated(format!(
                "[H_S, V_S] has norm {comm:.3e}"
            )));
        }
        let (sectors, frame, sector_of) = spectral_frame(&v_s, cluster_tol)?;
        for (m, sec) in sectors.sectors().iter().enumerate() {
            let pc = linalg::spectral_norm(&linalg::commutator(h_s.mat(), &sec.projector));
            if pc > tol::COMMUTATOR_TOL {
                return Err(DecoError::AssumptionViolated(format!(
                    "[H_S, P_{m}] has norm {pc:.3e}; H_S does not preserve the sectors"
                )));
            }
        }
        Ok(Self {
            h_s,
            v_s,
            sectors,
            frame,
            sector_of,
        })
    }

    pub fn h_s(&self) -> &HermitianOperator {
        &self.h_s
    }

    pub fn v_s(&self) -> &HermitianOperator {
        &self.v_s
    }

    pub fn sectors(&self) -> &SectorFamily {
        &self.sectors
    }

    pub fn dim(&self) -> usize {
        self.v_s.dim()
    }
}

/// Checks the commuting-model assumptions for a candidate system pair and
/// (optionally) an environment pair, returning the sector family of V_S.
pub fn validate_model(
    h_s: &HermitianOperator,
    v_s: &HermitianOperator,
    cluster_tol: f64,
    env: Option<(&HermitianOperator, &HermitianOperator)>,
) -> Result<SectorFamily> {
    let spec = SystemSpec::new(h_s.clone(), v_s.clone(), cluster_tol)?;
    if let Some((h_e, v_e)) = env {
        if h_e.dim() != v_e.dim() {
            return Err(DecoError::DimensionMismatch(format!(
                "H_E is {}-dim, V_E is {}-dim",
                h_e.dim(),
                v_e.dim()
            )));
        }
        let comm = linalg::spectral_norm(&linalg::commutator(h_e.mat(), v_e.mat()));
        if comm > tol::COMMUTATOR_TOL {
            return Err(DecoError::AssumptionViolated(format!(
                "[H_E, V_E] has norm {comm:.3e}"
            )));
        }
    }
    Ok(spec.sectors)
}

/// Signed mixture of coupling distributions: the environment is prepared
/// in a combination sum_j c_j omega_j whose dephasing factor is the same
/// combination of the per-term factors. Weights must sum to 1 but may be
/// negative (difference-of-states preparations), so the combined factor
/// may transiently exceed modulus 1.
#[derive(Debug, Clone)]
pub struct MixtureInitialState {
    terms: Vec<(f64, SpectralDensity)>,
}

impl MixtureInitialState {
    pub fn new(terms: Vec<(f64, SpectralDensity)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(DecoError::WeightSumInvalid(0.0));
        }
        let sum: f64 = terms.iter().map(|t| t.0).sum();
        if (sum - 1.0).abs() > tol::WEIGHT_SUM_TOL {
            return Err(DecoError::WeightSumInvalid(sum));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[(f64, SpectralDensity)] {
        &self.terms
    }

    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.0).sum()
    }
}

/// Dephasing factor of a signed mixture at one sector gap:
/// sum_j c_j chi_j(t).
pub fn mixture_dynamics(
    mixture: &MixtureInitialState,
    delta_lambda: f64,
    times: &[f64],
) -> Result<Vec<Complex64>> {
    let sum = mixture.weight_sum();
    if (sum - 1.0).abs() > tol::WEIGHT_SUM_TOL {
        return Err(DecoError::WeightSumInvalid(sum));
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); times.len()];
    for (c, mu) in mixture.terms() {
        let chi = chi_spectral(mu, delta_lambda, times)?;
        for (a, z) in acc.iter_mut().zip(chi) {
            *a += z * Complex64::new(*c, 0.0);
        }
    }
    Ok(acc)
}

/// One sector pair's dephasing history plus the time-invariant norms of
/// the corresponding block of the initial state.
#[derive(Debug, Clone)]
pub struct CurvePair {
    pub m: usize,
    pub n: usize,
    /// lambda_m - lambda_n.
    pub delta_lambda: f64,
    pub chi: Vec<Complex64>,
    /// Trace norm of P_m rho0 P_n; free evolution leaves it unchanged, so
    /// the block trace norm at time t is |chi(t)| times this.
    pub block_tn0: f64,
    /// Hilbert-Schmidt norm of P_m rho0 P_n.
    pub block_hs0: f64,
}

/// Dephasing factors for the sector pairs (m <= n) of one model over a
/// shared time grid. `exact_family` marks curves from an exactly soluble
/// model, where each factor is a state overlap: modulus at most 1 and
/// identically 1 on the diagonal. Approximate extensions (scattering
/// correlators, signed mixtures) set it false and skip those checks.
#[derive(Debug, Clone)]
pub struct DecoherenceCurve {
    times: Vec<f64>,
    pairs: Vec<CurvePair>,
    exact_family: bool,
}

impl DecoherenceCurve {
    pub fn new(times: Vec<f64>, pairs: Vec<CurvePair>, exact_family: bool) -> Result<Self> {
        for p in &pairs {
            if p.m > p.n {
                return Err(DecoError::CurveInvariant(format!(
                    "pair ({}, {}) must be stored with m <= n",
                    p.m, p.n
                )));
            }
            if p.chi.len() != times.len() {
                return Err(DecoError::CurveInvariant(format!(
                    "pair ({}, {}) has {} samples for {} times",
                    p.m,
                    p.n,
                    p.chi.len(),
                    times.len()
                )));
            }
            if exact_family {
                for (z, &t) in p.chi.iter().zip(&times) {
                    if z.norm() > 1.0 + tol::CHI_UNITY_TOL {
                        return Err(DecoError::CurveInvariant(format!(
                            "|chi_{{{},{}}}({t})| = {} exceeds 1",
                            p.m,
                            p.n,
                            z.norm()
                        )));
                    }
                    if p.m == p.n && (z - Complex64::new(1.0, 0.0)).norm() > tol::CHI_UNITY_TOL {
                        return Err(DecoError::CurveInvariant(format!(
                            "diagonal pair ({}, {}) deviates from 1 at t = {t}",
                            p.m, p.n
                        )));
                    }
                }
            }
        }
        Ok(Self {
            times,
            pairs,
            exact_family,
        })
    }

    /// Curve for a single off-diagonal pair with unit block norms, as
    /// produced by field models that track one amplitude pair directly.
    pub fn single_pair(
        times: Vec<f64>,
        delta_lambda: f64,
        chi: Vec<Complex64>,
        exact_family: bool,
    ) -> Result<Self> {
        let pair = CurvePair {
            m: 0,
            n: 1,
            delta_lambda,
            chi,
            block_tn0: 1.0,
            block_hs0: 1.0,
        };
        Self::new(times, vec![pair], exact_family)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn pairs(&self) -> &[CurvePair] {
        &self.pairs
    }

    pub fn exact_family(&self) -> bool {
        self.exact_family
    }

    pub fn pair_index(&self, m: usize, n: usize) -> Option<usize> {
        self.pairs.iter().position(|p| p.m == m && p.n == n)
    }

    /// chi for an arbitrarily ordered pair; factors with m > n are the
    /// conjugates of their stored mirror.
    pub fn chi_at(&self, m: usize, n: usize, time_index: usize) -> Option<Complex64> {
        if m <= n {
            self.pair_index(m, n).map(|i| self.pairs[i].chi[time_index])
        } else {
            self.pair_index(n, m)
                .map(|i| self.pairs[i].chi[time_index].conj())
        }
    }

    pub fn abs_chi(&self, pair_index: usize) -> Vec<f64> {
        self.pairs[pair_index]
            .chi
            .iter()
            .map(|z| z.norm())
            .collect()
    }

    pub fn block_tn(&self, pair_index: usize, time_index: usize) -> f64 {
        let p = &self.pairs[pair_index];
        p.chi[time_index].norm() * p.block_tn0
    }

    pub fn block_hs(&self, pair_index: usize, time_index: usize) -> f64 {
        let p = &self.pairs[pair_index];
        p.chi[time_index].norm() * p.block_hs0
    }
}

/// chi histories for a set of eigenvalue gaps, computed once per distinct
/// gap. Exact float equality is the right dedup key here: equal gaps
/// arise from identical subtractions of the same sector eigenvalues.
fn chi_per_gap(mu: &SpectralDensity, gaps: &[f64], times: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    let mut cache: Vec<(f64, Vec<Complex64>)> = Vec::new();
    let mut out = Vec::with_capacity(gaps.len());
    for &g in gaps {
        let hit = cache.iter().position(|(k, _)| *k == g);
        let chi = match hit {
            Some(i) => cache[i].1.clone(),
            None => {
                let fresh = if g == 0.0 {
                    vec![Complex64::new(1.0, 0.0); times.len()]
                } else {
                    chi_spectral(mu, g, times)?
                };
                cache.push((g, fresh.clone()));
                fresh
            }
        };
        out.push(chi);
    }
    Ok(out)
}

/// Reduced dynamics of the commuting model in factorized form.
///
/// Returns the dephasing curve over all sector pairs m <= n and the
/// reduced state at every requested time, assembled as
/// rho(t) = sum_{m,n} chi_mn(t) P_m U(t) rho0 U(t)^dag P_n with
/// U(t) = exp(-i H_S t). The sector-indexed factor is applied entrywise
/// in the V_S eigenbasis.
pub fn reduced_blocks_factorized(
    spec: &SystemSpec,
    rho0: &DensityOperator,
    mu: &SpectralDensity,
    times: &[f64],
) -> Result<(DecoherenceCurve, Vec<DensityOperator>)> {
    if rho0.dim() != spec.dim() {
        return Err(DecoError::DimensionMismatch(format!(
            "rho0 is {}-dim, system is {}-dim",
            rho0.dim(),
            spec.dim()
        )));
    }
    let fam = spec.sectors();
    let s = fam.len();

    let mut index_pairs = Vec::new();
    let mut gaps = Vec::new();
    for m in 0..s {
        for n in m..s {
            index_pairs.push((m, n));
            gaps.push(fam.lambda(m) - fam.lambda(n));
        }
    }
    let chis = chi_per_gap(mu, &gaps, times)?;

    let mut pairs = Vec::with_capacity(index_pairs.len());
    for (((m, n), gap), chi) in index_pairs.iter().zip(&gaps).zip(chis) {
        let b0 = fam.projector(*m) * rho0.mat() * fam.projector(*n);
        pairs.push(CurvePair {
            m: *m,
            n: *n,
            delta_lambda: *gap,
            chi,
            block_tn0: linalg::trace_norm(&b0),
            block_hs0: linalg::hs_norm(&b0),
        });
    }
    let curve = DecoherenceCurve::new(times.to_vec(), pairs, true)?;

    // Dephasing factor table indexed by (sector, sector), diagonal = 1,
    // lower triangle by conjugation.
    let (hs_vals, hs_vecs) = eigh(spec.h_s.mat());
    let q = &spec.frame;
    let states: Result<Vec<DensityOperator>> = times
        .par_iter()
        .enumerate()
        .map(|(ti, &t)| {
            let free = linalg::evolve_conjugate(&hs_vals, &hs_vecs, t, rho0.mat());
            let mut x = q.adjoint() * free * q;
            for i in 0..spec.dim() {
                for j in 0..spec.dim() {
                    let (sm, sn) = (spec.sector_of[i], spec.sector_of[j]);
                    x[(i, j)] *= curve.chi_at(sm, sn, ti).unwrap();
                }
            }
            DensityOperator::new(q * x * q.adjoint())
        })
        .collect();
    Ok((curve, states?))
}

/// Hilbert-Schmidt norm of the off-diagonal window block
/// P_{win1} rho(t) P_{win2} for two disjoint closed eigenvalue windows,
/// per time.
///
/// Because the sector blocks are mutually orthogonal and free evolution
/// preserves each block's norm, the window norm collapses to
/// sqrt(sum_{m in win1, n in win2} |chi_mn(t)|^2 ||P_m rho0 P_n||_HS^2).
pub fn window_block_norm(
    spec: &SystemSpec,
    win1: (f64, f64),
    win2: (f64, f64),
    rho0: &DensityOperator,
    mu: &SpectralDensity,
    times: &[f64],
) -> Result<Vec<f64>> {
    if rho0.dim() != spec.dim() {
        return Err(DecoError::DimensionMismatch(format!(
            "rho0 is {}-dim, system is {}-dim",
            rho0.dim(),
            spec.dim()
        )));
    }
    for &(lo, hi) in &[win1, win2] {
        if !(lo <= hi) {
            return Err(DecoError::CurveInvariant(format!(
                "window [{lo}, {hi}] is empty or reversed"
            )));
        }
    }
    let distance = (win2.0 - win1.1).max(win1.0 - win2.1);
    if distance <= 0.0 {
        return Err(DecoError::OverlappingWindows(distance));
    }
    let fam = spec.sectors();
    let in1 = fam.members_in(win1.0, win1.1);
    let in2 = fam.members_in(win2.0, win2.1);

    let mut gaps = Vec::new();
    let mut hs0 = Vec::new();
    for &m in &in1 {
        for &n in &in2 {
            gaps.push(fam.lambda(m) - fam.lambda(n));
            let b0 = fam.projector(m) * rho0.mat() * fam.projector(n);
            hs0.push(linalg::hs_norm(&b0));
        }
    }
    let chis = chi_per_gap(mu, &gaps, times)?;
    Ok((0..times.len())
        .map(|ti| {
            let sq: f64 = chis
                .iter()
                .zip(&hs0)
                .map(|(chi, h)| (chi[ti].norm() * h).powi(2))
                .sum();
            sq.sqrt()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c_re;
    use crate::oracle::{full_evolution, gamma_evolution_check, FiniteModel};
    use crate::qcore::partial_trace_env;

    fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn pauli_x() -> HermitianOperator {
        HermitianOperator::new(CMat::from_row_slice(
            2,
            2,
            &[c_re(0.0), c_re(1.0), c_re(1.0), c_re(0.0)],
        ))
        .unwrap()
    }

    #[test]
    fn commuting_diagonal_pair_is_accepted() {
        let h_s = HermitianOperator::from_real_diagonal(&[1.0, 2.0]);
        let v_s = HermitianOperator::from_real_diagonal(&[3.0, 5.0]);
        let fam = validate_model(&h_s, &v_s, tol::DEFAULT_CLUSTER_TOL, None).unwrap();
        assert_eq!(fam.len(), 2);
        assert!((fam.lambda(0) - 3.0).abs() < 1e-12);
        assert!((fam.lambda(1) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn non_commuting_pair_is_rejected() {
        let h_s = pauli_x();
        let v_s = HermitianOperator::from_real_diagonal(&[1.0, -1.0]);
        match validate_model(&h_s, &v_s, tol::DEFAULT_CLUSTER_TOL, None) {
            Err(DecoError::AssumptionViolated(msg)) => {
                assert!(msg.contains("[H_S, V_S]"), "{msg}")
            }
            other => panic!("expected AssumptionViolated, got {other:?}"),
        }
    }

    #[test]
    fn non_commuting_environment_pair_is_rejected() {
        let h_s = HermitianOperator::from_real_diagonal(&[1.0, 2.0]);
        let v_s = HermitianOperator::from_real_diagonal(&[0.5, -0.5]);
        let h_e = pauli_x();
        let v_e = HermitianOperator::from_real_diagonal(&[1.0, -1.0]);
        match validate_model(&h_s, &v_s, tol::DEFAULT_CLUSTER_TOL, Some((&h_e, &v_e))) {
            Err(DecoError::AssumptionViolated(msg)) => {
                assert!(msg.contains("[H_E, V_E]"), "{msg}")
            }
            other => panic!("expected AssumptionViolated, got {other:?}"),
        }
    }

    #[test]
    fn clustered_coupling_merges_sectors() {
        let h_s = HermitianOperator::zero(3);
        let v_s = HermitianOperator::from_real_diagonal(&[1.0, 1.0 + 1e-12, 4.0]);
        let fam = validate_model(&h_s, &v_s, 1e-8, None).unwrap();
        assert_eq!(fam.len(), 2);
    }

    #[test]
    fn mixture_weights_must_sum_to_one() {
        let g = SpectralDensity::gaussian(1.0, 64).unwrap();
        let err = MixtureInitialState::new(vec![(0.9, g.clone()), (0.2, g)]);
        match err {
            Err(DecoError::WeightSumInvalid(s)) => assert!((s - 1.1).abs() < 1e-12),
            other => panic!("expected WeightSumInvalid, got {other:?}"),
        }
    }

    #[test]
    fn single_term_mixture_equals_plain_transform() {
        let g = SpectralDensity::gaussian(1.0, 512).unwrap();
        let mix = MixtureInitialState::new(vec![(1.0, g.clone())]).unwrap();
        let times = linspace(0.0, 3.0, 31);
        let a = mixture_dynamics(&mix, 1.0, &times).unwrap();
        let b = chi_spectral(&g, 1.0, &times).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn signed_gaussian_mixture_matches_envelope() {
        let g1 = SpectralDensity::gaussian(1.0, 2048).unwrap();
        let g3 = SpectralDensity::gaussian(3.0, 2048).unwrap();
        let mix = MixtureInitialState::new(vec![(2.0, g1), (-1.0, g3)]).unwrap();
        let times = linspace(0.0, 2.0, 41);
        let chi = mixture_dynamics(&mix, 1.0, &times).unwrap();
        for (&t, z) in times.iter().zip(&chi) {
            let want = 2.0 * (-t * t / 2.0).exp() - (-9.0 * t * t / 2.0).exp();
            assert!(
                (z.re - want).abs() < 1e-6 && z.im.abs() < 1e-6,
                "t={t}: {z} vs {want}"
            );
        }
        // The signed combination transiently exceeds modulus 1: it is not
        // itself a state overlap.
        let peak = chi.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(peak > 1.0);
    }

    #[test]
    fn signed_mixture_matches_brute_force_combination() {
        // Like-for-like: the same atom sets drive both the quadrature sum
        // and two finite models evolved by matrix exponentials.
        let times = linspace(0.0, 3.0, 13);
        let h_s = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let v_s = HermitianOperator::from_real_diagonal(&[0.5, -0.5]);
        let mut combo = vec![Complex64::new(0.0, 0.0); times.len()];
        let mut mix_terms = Vec::new();
        for (c, sigma) in [(2.0, 1.0), (-1.0, 3.0)] {
            let mu = SpectralDensity::gaussian_quantile_atoms(16, sigma).unwrap();
            let lambdas: Vec<f64> = mu.grid().to_vec();
            let h_e = HermitianOperator::from_real_diagonal(&linspace(0.0, 2.0, 16));
            let v_e = HermitianOperator::from_real_diagonal(&lambdas);
            let model = FiniteModel::new(h_s.clone(), v_s.clone(), h_e, v_e, true).unwrap();
            let omega = DensityOperator::maximally_mixed(16);
            let brute = gamma_evolution_check(&model, &omega, 0, 1, &times, 1e-8).unwrap();
            for (a, z) in combo.iter_mut().zip(brute) {
                *a += z * c_re(c);
            }
            mix_terms.push((c, mu));
        }
        let mix = MixtureInitialState::new(mix_terms).unwrap();
        let chi = mixture_dynamics(&mix, -1.0, &times).unwrap();
        for (x, y) in chi.iter().zip(&combo) {
            assert!((x - y).norm() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn off_diagonal_block_decays_at_gaussian_rate() {
        let spec = SystemSpec::new(
            HermitianOperator::zero(2),
            HermitianOperator::from_real_diagonal(&[1.0, -1.0]),
            tol::DEFAULT_CLUSTER_TOL,
        )
        .unwrap();
        let rho0 = DensityOperator::uniform_plus(2);
        let mu = SpectralDensity::gaussian(1.0, 2048).unwrap();
        let times = [0.0, 1.0];
        let (curve, states) = reduced_blocks_factorized(&spec, &rho0, &mu, &times).unwrap();
        // t = 0 reproduces rho0 exactly.
        assert!(linalg::max_abs(&(states[0].mat() - rho0.mat())) < 1e-12);
        // Sector gap is 2, so the coherence carries exp(-(2t)^2/2).
        let got = states[1].mat()[(0, 1)].norm();
        let want = 0.5 * (-2.0f64).exp();
        assert!((got - want).abs() < 1e-6, "got {got}, want {want}");
        // The curve agrees with the state entry.
        let idx = curve.pair_index(0, 1).unwrap();
        assert!((curve.abs_chi(idx)[1] * 0.5 - got).abs() < 1e-12);
        assert!((curve.pairs()[idx].block_tn0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sector_diagonal_initial_state_is_frozen() {
        let spec = SystemSpec::new(
            HermitianOperator::zero(2),
            HermitianOperator::from_real_diagonal(&[1.0, -1.0]),
            tol::DEFAULT_CLUSTER_TOL,
        )
        .unwrap();
        let rho0 = DensityOperator::new(CMat::from_row_slice(
            2,
            2,
            &[c_re(0.3), c_re(0.0), c_re(0.0), c_re(0.7)],
        ))
        .unwrap();
        let mu = SpectralDensity::gaussian(1.0, 512).unwrap();
        let times = linspace(0.0, 2.0, 9);
        let (_, states) = reduced_blocks_factorized(&spec, &rho0, &mu, &times).unwrap();
        for s in &states {
            assert!(linalg::max_abs(&(s.mat() - rho0.mat())) < 1e-12);
        }
    }

    #[test]
    fn factorized_dynamics_matches_full_model() {
        let h_s = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let v_s = HermitianOperator::from_real_diagonal(&[0.5, -0.5]);
        let spec = SystemSpec::new(h_s.clone(), v_s.clone(), tol::DEFAULT_CLUSTER_TOL).unwrap();
        let mu = SpectralDensity::gaussian_quantile_atoms(8, 1.0).unwrap();
        let h_e = HermitianOperator::from_real_diagonal(&linspace(0.0, 2.0, 8));
        let v_e = HermitianOperator::from_real_diagonal(mu.grid());
        let model = FiniteModel::new(h_s, v_s, h_e, v_e, true).unwrap();
        let rho0 = DensityOperator::uniform_plus(2);
        let omega = DensityOperator::maximally_mixed(8);
        let w0 = DensityOperator::new(linalg::kron(rho0.mat(), omega.mat())).unwrap();
        let times = linspace(0.0, 4.0, 9);
        let (_, fast) = reduced_blocks_factorized(&spec, &rho0, &mu, &times).unwrap();
        let slow = full_evolution(&model, &w0, &times).unwrap();
        for (f, s) in fast.iter().zip(&slow) {
            let dev = linalg::trace_norm(&(f.mat() - s.mat()));
            assert!(dev < 1e-12, "trace-norm deviation {dev:.3e}");
        }
        // Sanity on the setup itself: the partial trace of w0 is rho0.
        let pt = partial_trace_env(&w0, 2, 8).unwrap();
        assert!(linalg::max_abs(&(pt.mat() - rho0.mat())) < 1e-13);
    }

    #[test]
    fn curve_invariants_reject_bad_data() {
        let times = vec![0.0, 1.0];
        let too_big = CurvePair {
            m: 0,
            n: 1,
            delta_lambda: 1.0,
            chi: vec![c_re(1.0), c_re(1.5)],
            block_tn0: 1.0,
            block_hs0: 1.0,
        };
        assert!(matches!(
            DecoherenceCurve::new(times.clone(), vec![too_big.clone()], true),
            Err(DecoError::CurveInvariant(_))
        ));
        // The same data is representable as an inexact curve.
        assert!(DecoherenceCurve::new(times.clone(), vec![too_big], false).is_ok());
        let bad_diag = CurvePair {
            m: 1,
            n: 1,
            delta_lambda: 0.0,
            chi: vec![c_re(1.0), c_re(0.9)],
            block_tn0: 1.0,
            block_hs0: 1.0,
        };
        assert!(matches!(
            DecoherenceCurve::new(times, vec![bad_diag], true),
            Err(DecoError::CurveInvariant(_))
        ));
    }

    #[test]
    fn window_norm_starts_at_block_norm_and_dies_off() {
        let lambdas = linspace(-1.0, 1.0, 64);
        let spec = SystemSpec::new(
            HermitianOperator::zero(64),
            HermitianOperator::from_real_diagonal(&lambdas),
            tol::DEFAULT_CLUSTER_TOL,
        )
        .unwrap();
        // A state with coherence everywhere.
        let rho0 = DensityOperator::uniform_plus(64);
        let mu = SpectralDensity::gaussian(1.0, 4096).unwrap();
        let times = linspace(0.0, 40.0, 129);
        let norms = window_block_norm(&spec, (-1.0, -0.2), (0.2, 1.0), &rho0, &mu, &times).unwrap();
        // t = 0: direct projector sandwich.
        let fam = spec.sectors();
        let p1 = fam.aggregate_projector(-1.0, -0.2);
        let p2 = fam.aggregate_projector(0.2, 1.0);
        let direct = linalg::hs_norm(&(&p1 * rho0.mat() * &p2));
        assert!((norms[0] - direct).abs() < 1e-12);
        // Once delta * t >> 1 the window coherence is gone.
        assert!(norms[128] < 1e-3, "late norm {:.3e}", norms[128]);
        assert!(norms[0] > 0.1);
    }

    #[test]
    fn overlapping_or_touching_windows_are_rejected() {
        let spec = SystemSpec::new(
            HermitianOperator::zero(4),
            HermitianOperator::from_real_diagonal(&[-1.0, -0.5, 0.5, 1.0]),
            tol::DEFAULT_CLUSTER_TOL,
        )
        .unwrap();
        let rho0 = DensityOperator::maximally_mixed(4);
        let mu = SpectralDensity::gaussian(1.0, 256).unwrap();
        for (w1, w2) in [((-1.0, 0.1), (-0.1, 1.0)), ((-1.0, 0.0), (0.0, 1.0))] {
            match window_block_norm(&spec, w1, w2, &rho0, &mu, &[0.0]) {
                Err(DecoError::OverlappingWindows(d)) => assert!(d <= 0.0),
                other => panic!("expected OverlappingWindows, got {other:?}"),
            }
        }
    }

    #[test]
    fn window_projectors_add_exactly() {
        let lambdas = linspace(-1.0, 1.0, 64);
        let fam = validate_model(
            &HermitianOperator::zero(64),
            &HermitianOperator::from_real_diagonal(&lambdas),
            tol::DEFAULT_CLUSTER_TOL,
            None,
        )
        .unwrap();
        let p1 = fam.aggregate_projector(-1.0, -0.01);
        let p2 = fam.aggregate_projector(0.01, 1.0);
        let all = fam.aggregate_projector(-1.0, 1.0);
        // Disjoint windows covering every sector: exact additivity entry
        // by entry.
        assert_eq!(all, &p1 + &p2);
    }
}
