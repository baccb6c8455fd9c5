//! Scenario execution: builds the configured model, computes its sector
//! dephasing curve, runs per-model consistency validations, optionally
//! cross-checks the result against an independent brute-force route, and
//! writes curve files plus a manifest in one all-or-nothing batch.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use num_complex::Complex64;

use crate::araki_zurek::{
    reduced_blocks_factorized, DecoherenceCurve, SpectralDensity, SystemSpec,
};
use crate::error::{DecoError, Result};
use crate::harness::config::{
    ArakiZurekBlock, FreeParticleBlock, MeasureFamily, ModelBlock, OracleBlock, OutputFormat,
    RhoSpec, ScatteringBlock, ScenarioConfig, SingleModeBlock, VanHoveBlock,
};
use crate::harness::emit;
use crate::linalg::{self, CMat};
use crate::oracle::{self, FiniteModel, FockOracle};
use crate::qcore::{validate_density, DensityOperator, HermitianOperator};
use crate::scattering::{self, ScatteringModel};
use crate::tol;
use crate::vanhove::{self, single_mode_chi, CoherentMixture, ModeFunction};

/// Cap on oracle cross-check sample counts; the oracle route is
/// quadratically more expensive than the production route, so it runs on
/// a subgrid.
const ORACLE_SAMPLE_CAP: usize = 33;
/// The free-particle brute force needs hundreds of levels per unit time;
/// past this horizon no practical truncation is faithful, so the oracle
/// window stops here.
const FREE_PARTICLE_ORACLE_T_CAP: f64 = 3.0;
const FREE_PARTICLE_ORACLE_SAMPLES: usize = 17;

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// Largest observed disagreement between the production route and the
    /// oracle route, when the oracle was enabled.
    pub oracle_deviation: Option<f64>,
    /// Named validation outcomes, in emission order.
    pub validation: Vec<(String, bool)>,
    pub notes: Vec<String>,
}

impl RunArtifacts {
    pub fn all_valid(&self) -> bool {
        self.validation.iter().all(|(_, ok)| *ok)
    }
}

struct Outcome {
    curve: DecoherenceCurve,
    validation: Vec<(String, bool)>,
    notes: Vec<String>,
    oracle_deviation: Option<f64>,
}

fn linspace(t_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
}

fn subsample(times: &[f64], cap: usize) -> Vec<f64> {
    let n = times.len();
    if n <= cap {
        return times.to_vec();
    }
    let stride = (n - 1).div_ceil(cap - 1);
    let mut out: Vec<f64> = times.iter().copied().step_by(stride).collect();
    if out.last() != times.last() {
        out.push(times[n - 1]);
    }
    out
}

fn subsample_indices(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let stride = (n - 1).div_ceil(cap - 1);
    let mut out: Vec<usize> = (0..n).step_by(stride).collect();
    if out.last() != Some(&(n - 1)) {
        out.push(n - 1);
    }
    out
}

fn hermitian(rows: &[Vec<Complex64>], what: &str) -> Result<HermitianOperator> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(DecoError::DimensionMismatch(format!(
            "{what} must be square"
        )));
    }
    HermitianOperator::new(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

fn build_rho(spec: &RhoSpec, dim: usize) -> Result<DensityOperator> {
    match spec {
        RhoSpec::UniformPlus => Ok(DensityOperator::uniform_plus(dim)),
        RhoSpec::MaximallyMixed => Ok(DensityOperator::maximally_mixed(dim)),
        RhoSpec::Matrix(rows) => {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(DecoError::DimensionMismatch(format!(
                    "initial state must be {dim}x{dim}"
                )));
            }
            DensityOperator::new(CMat::from_fn(dim, dim, |i, j| rows[i][j]))
        }
    }
}

/// Signed components (weight, measure) of the configured coupling
/// distribution; single-component families come back as one unit-weight
/// entry.
fn measure_components(
    family: &MeasureFamily,
    grid_points: usize,
) -> Result<Vec<(f64, SpectralDensity)>> {
    match family {
        MeasureFamily::Gaussian { sigma, center } => Ok(vec![(
            1.0,
            SpectralDensity::gaussian_centered(*center, *sigma, grid_points)?,
        )]),
        MeasureFamily::GaussianMixture { terms } => terms
            .iter()
            .map(|&(w, sigma, center)| {
                Ok((
                    w,
                    SpectralDensity::gaussian_centered(center, sigma, grid_points)?,
                ))
            })
            .collect(),
        MeasureFamily::Bump { smoothness } => Ok(vec![(
            1.0,
            SpectralDensity::bump(*smoothness, grid_points)?,
        )]),
        MeasureFamily::PointSpectrum { atoms } => {
            Ok(vec![(1.0, SpectralDensity::point_spectrum(atoms)?)])
        }
    }
}

// ---------------------------------------------------------------------------
// Atomic surrogates for the oracle route
// ---------------------------------------------------------------------------

/// One mixture component: its signed weight and the equal-mass atoms
/// standing in for its distribution.
type WeightedAtoms = (f64, Vec<(f64, f64)>);

/// Equal-mass atom surrogates that mirror each component of the coupling
/// distribution, used to compare the factorized route against brute-force
/// composite evolution on an identical finite model.
fn surrogate_atoms(family: &MeasureFamily, dim: usize) -> Result<Vec<WeightedAtoms>> {
    match family {
        MeasureFamily::Gaussian { sigma, center } => {
            Ok(vec![(1.0, shifted_quantile_atoms(dim, *sigma, *center)?)])
        }
        MeasureFamily::GaussianMixture { terms } => terms
            .iter()
            .map(|&(w, sigma, center)| Ok((w, shifted_quantile_atoms(dim, sigma, center)?)))
            .collect(),
        MeasureFamily::Bump { smoothness } => {
            Ok(vec![(1.0, bump_quantile_atoms(*smoothness, dim))])
        }
        MeasureFamily::PointSpectrum { atoms } => Ok(vec![(1.0, atoms.clone())]),
    }
}

fn shifted_quantile_atoms(dim: usize, sigma: f64, center: f64) -> Result<Vec<(f64, f64)>> {
    let base = SpectralDensity::gaussian_quantile_atoms(dim, sigma)?;
    Ok(base
        .atoms()
        .into_iter()
        .map(|(x, w)| (x + center, w))
        .collect())
}

/// Unnormalized CDF of (1 - x^2)^s on [-1, 1], expanded binomially; exact
/// polynomial, no quadrature.
fn bump_cdf_unnorm(s: u32, x: f64) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0f64; // C(s, i)
    for i in 0..=s {
        let p = 2 * i + 1;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * (x.powi(p as i32) + 1.0) / p as f64;
        binom *= (s - i) as f64 / (i + 1) as f64;
    }
    total
}

/// Equal-mass quantile midpoint atoms of the bump density, by bisecting
/// its exact polynomial CDF.
fn bump_quantile_atoms(s: u32, dim: usize) -> Vec<(f64, f64)> {
    let total = bump_cdf_unnorm(s, 1.0);
    let w = 1.0 / dim as f64;
    (0..dim)
        .map(|j| {
            let target = (j as f64 + 0.5) * w * total;
            let (mut lo, mut hi) = (-1.0f64, 1.0f64);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if bump_cdf_unnorm(s, mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (0.5 * (lo + hi), w)
        })
        .collect()
}

/// Independent route for the factorized model: brute-force evolution of
/// the full system x environment composite under H = H_S (x) 1 + V_S (x)
/// V_E with the surrogate atoms on the environment diagonal. Returns the
/// largest trace-norm disagreement of the reduced states.
fn az_oracle_deviation(
    spec: &SystemSpec,
    rho0: &DensityOperator,
    family: &MeasureFamily,
    oracle_dim: usize,
    times: &[f64],
) -> Result<f64> {
    let sub = subsample(times, ORACLE_SAMPLE_CAP);
    let components = surrogate_atoms(family, oracle_dim)?;
    let dim_s = spec.dim();

    let mut route_a: Vec<CMat> = vec![CMat::zeros(dim_s, dim_s); sub.len()];
    let mut route_b = route_a.clone();
    for (weight, atoms) in &components {
        let mu = SpectralDensity::point_spectrum(atoms)?;
        let (_, states) = reduced_blocks_factorized(spec, rho0, &mu, &sub)?;
        for (acc, state) in route_a.iter_mut().zip(&states) {
            *acc += state.mat().map(|z| z * *weight);
        }

        let positions: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let masses: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        let dim_e = positions.len();
        let model = FiniteModel::new(
            spec.h_s().clone(),
            spec.v_s().clone(),
            HermitianOperator::zero(dim_e),
            HermitianOperator::from_real_diagonal(&positions),
            true,
        )?;
        let omega = CMat::from_fn(dim_e, dim_e, |i, j| {
            if i == j {
                Complex64::new(masses[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let w0 = DensityOperator::new(linalg::kron(rho0.mat(), &omega))?;
        let states = oracle::full_evolution(&model, &w0, &sub)?;
        for (acc, state) in route_b.iter_mut().zip(&states) {
            *acc += state.mat().map(|z| z * *weight);
        }
    }

    let mut worst = 0.0f64;
    for (a, b) in route_a.iter().zip(&route_b) {
        worst = worst.max(linalg::trace_norm(&(a - b)));
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Per-model runners
// ---------------------------------------------------------------------------

fn run_araki_zurek(
    block: &ArakiZurekBlock,
    oracle_cfg: &OracleBlock,
    times: &[f64],
) -> Result<Outcome> {
    let spec = SystemSpec::new(
        hermitian(&block.h_s, "[system] h_s")?,
        hermitian(&block.v_s, "[system] v_s")?,
        tol::DEFAULT_CLUSTER_TOL,
    )?;
    let rho0 = build_rho(&block.rho, spec.dim())?;
    let components = measure_components(&block.family, block.grid_points)?;
    let signed = components.iter().any(|(w, _)| *w < 0.0);

    let mut runs = Vec::with_capacity(components.len());
    for (w, mu) in &components {
        runs.push((*w, reduced_blocks_factorized(&spec, &rho0, mu, times)?));
    }

    // Weighted recombination: the dephasing factors and the reduced
    // states are both linear in the coupling distribution.
    let (w0, (first_curve, _)) = &runs[0];
    let mut pairs = first_curve.pairs().to_vec();
    for p in &mut pairs {
        for z in &mut p.chi {
            *z *= Complex64::new(*w0, 0.0);
        }
    }
    for (w, (curve, _)) in runs.iter().skip(1) {
        for (p, q) in pairs.iter_mut().zip(curve.pairs()) {
            for (z, add) in p.chi.iter_mut().zip(&q.chi) {
                *z += add * Complex64::new(*w, 0.0);
            }
        }
    }
    // A convex combination keeps every family bound; a signed one only
    // keeps linearity, so the curve drops the exact-family guarantees.
    let curve = DecoherenceCurve::new(times.to_vec(), pairs, !signed)?;

    let mut validation = Vec::new();
    let mut notes = Vec::new();

    let check_idx = subsample_indices(times.len(), ORACLE_SAMPLE_CAP);
    let dim_s = spec.dim();
    let densities_ok = check_idx.iter().all(|&ti| {
        let mut acc = CMat::zeros(dim_s, dim_s);
        for (w, (_, states)) in &runs {
            acc += states[ti].mat().map(|z| z * *w);
        }
        validate_density(&acc).is_valid()
    });
    validation.push(("densities_valid".to_string(), densities_ok));
    validation.push(("curve_invariants".to_string(), true));
    validation.push(("spectral_grid_sampling".to_string(), true));

    if matches!(block.family, MeasureFamily::PointSpectrum { .. }) {
        let mu = &components[0].1;
        let step = if times.len() > 1 {
            times[1] - times[0]
        } else {
            0.0
        };
        for (pi, pair) in curve.pairs().iter().enumerate() {
            if pair.m == pair.n || pair.delta_lambda == 0.0 {
                continue;
            }
            let Some(t_rec) = mu.recurrence_time(pair.delta_lambda.abs()) else {
                continue;
            };
            notes.push(format!(
                "recurrence_time_pair_{}_{} = {t_rec}",
                pair.m, pair.n
            ));
            let horizon = times.last().copied().unwrap_or(0.0);
            if step > 0.0 && t_rec <= horizon + 0.5 * step {
                let idx = ((t_rec / step).round() as usize).min(times.len() - 1);
                let lo = idx.saturating_sub(1);
                let hi = (idx + 1).min(times.len() - 1);
                let abs = curve.abs_chi(pi);
                let revived = abs[lo..=hi].iter().any(|&v| v >= 0.99);
                validation.push((format!("recurrence_revival_{}_{}", pair.m, pair.n), revived));
            } else {
                notes.push(format!(
                    "recurrence of pair ({}, {}) lies beyond the horizon",
                    pair.m, pair.n
                ));
            }
        }
    }

    let mut deviation = None;
    if oracle_cfg.enabled {
        let dev = az_oracle_deviation(&spec, &rho0, &block.family, oracle_cfg.dim, times)?;
        notes.push(format!(
            "oracle: factorized route vs composite brute force deviates by {dev:.3e} \
             on {} surrogate atoms",
            oracle_cfg.dim
        ));
        if dev > oracle_cfg.tolerance {
            return Err(DecoError::OracleMismatch {
                deviation: dev,
                tolerance: oracle_cfg.tolerance,
            });
        }
        deviation = Some(dev);
    }

    Ok(Outcome {
        curve,
        validation,
        notes,
        oracle_deviation: deviation,
    })
}

fn run_vanhove(block: &VanHoveBlock, times: &[f64]) -> Result<Outcome> {
    let f = |k: f64| block.coupling.eval(k);
    let mode = ModeFunction::geometric(
        block.k_min,
        block.k_max,
        block.grid_points,
        block.dispersion_speed,
        f,
    )?;
    let mixture = CoherentMixture::vacuum(mode.len());
    let chi = vanhove::chi_vanhove(
        &mode,
        block.alpha,
        block.beta,
        &mixture,
        times,
        block.allow_ir_divergent,
    )?;
    let curve = DecoherenceCurve::single_pair(times.to_vec(), block.alpha - block.beta, chi, true)?;

    let mut validation = vec![("curve_invariants".to_string(), true)];
    let mut notes = vec![
        format!("ir_coupling_norm_sq = {:.6e}", mode.ir_coupling_norm_sq()),
        format!("dressing_constant = {:.6e}", mode.dressing_constant()),
        format!("coupling_stability_ok = {}", mode.stability_ok()),
    ];

    if !block.allow_ir_divergent {
        // For vacuum data the modulus never drops below the all-time
        // displacement bound.
        let delta = block.alpha - block.beta;
        let floor = (-delta * delta * mode.ir_coupling_norm_sq()).exp() - 1e-8;
        let ok = curve.abs_chi(0).iter().all(|&v| v >= floor);
        validation.push(("ir_floor".to_string(), ok));
        notes.push(format!("ir_floor = {floor:.6e}"));
    }

    if block.cutoffs.len() >= 2 {
        let report = vanhove::ir_classify(
            f,
            block.dispersion_speed,
            block.k_max,
            block.grid_points,
            &block.cutoffs,
            block.t_probe,
        )?;
        for r in &report.per_cutoff {
            notes.push(format!(
                "cutoff k_min = {:e}: exponent_at_probe = {:.6e}, ir_norm_sq = {:.6e}",
                r.k_min, r.exponent_at_probe, r.ir_norm_sq
            ));
        }
        if report.regular {
            validation.push(("ir_scan_regular".to_string(), true));
            if let Some(sup) = report.sup_exponent {
                notes.push(format!(
                    "ir_scan = regular, limiting ir_norm_sq = {sup:.6e}"
                ));
            }
        } else {
            let doubling = report
                .per_cutoff
                .windows(2)
                .all(|w| w[1].exponent_at_probe >= 2.0 * w[0].exponent_at_probe);
            validation.push(("ir_exponent_doubles_per_cutoff".to_string(), doubling));
            notes.push("ir_scan = divergent".to_string());
        }
    }

    Ok(Outcome {
        curve,
        validation,
        notes,
        oracle_deviation: None,
    })
}

fn run_single_mode(
    block: &SingleModeBlock,
    oracle_cfg: &OracleBlock,
    times: &[f64],
) -> Result<Outcome> {
    let chi = single_mode_chi(
        block.eps,
        block.f0,
        block.alpha,
        block.beta,
        &block.terms,
        times,
    )?;
    let curve =
        DecoherenceCurve::single_pair(times.to_vec(), block.alpha - block.beta, chi.clone(), true)?;

    let mut validation = vec![("curve_invariants".to_string(), true)];
    let mut notes = Vec::new();

    let period = 2.0 * std::f64::consts::PI / block.eps;
    notes.push(format!("recurrence_time = {period}"));
    let shifted: Vec<f64> = times.iter().map(|&t| t + period).collect();
    let chi_shifted = single_mode_chi(
        block.eps,
        block.f0,
        block.alpha,
        block.beta,
        &block.terms,
        &shifted,
    )?;
    if (block.alpha * block.alpha - block.beta * block.beta).abs() < 1e-15 {
        // Symmetric sector labels cancel the secular phase, so the full
        // complex history repeats.
        let defect = chi
            .iter()
            .zip(&chi_shifted)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        validation.push(("periodicity".to_string(), defect <= tol::CHI_UNITY_TOL));
        notes.push(format!("periodicity_defect = {defect:.3e}"));
    } else {
        let defect = chi
            .iter()
            .zip(&chi_shifted)
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0f64, f64::max);
        validation.push((
            "modulus_periodicity".to_string(),
            defect <= tol::CHI_UNITY_TOL,
        ));
        notes.push(format!("modulus_periodicity_defect = {defect:.3e}"));
    }

    let mut deviation = None;
    if oracle_cfg.enabled {
        let sub = subsample(times, ORACLE_SAMPLE_CAP);
        let fock = FockOracle::new(oracle_cfg.dim, block.eps, block.f0)?;
        let brute = fock.brute_chi(block.alpha, block.beta, &block.terms, &sub)?;
        let closed = single_mode_chi(
            block.eps,
            block.f0,
            block.alpha,
            block.beta,
            &block.terms,
            &sub,
        )?;
        let dev = brute
            .iter()
            .zip(&closed)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        notes.push(format!(
            "oracle: closed form vs {}-level brute force deviates by {dev:.3e}",
            oracle_cfg.dim
        ));
        if dev > oracle_cfg.tolerance {
            return Err(DecoError::OracleMismatch {
                deviation: dev,
                tolerance: oracle_cfg.tolerance,
            });
        }
        deviation = Some(dev);
    }

    Ok(Outcome {
        curve,
        validation,
        notes,
        oracle_deviation: deviation,
    })
}

fn run_free_particle(
    block: &FreeParticleBlock,
    oracle_cfg: &OracleBlock,
    times: &[f64],
) -> Result<Outcome> {
    let chi = single_mode_chi(0.0, block.f0, block.alpha, block.beta, &block.terms, times)?;
    let curve = DecoherenceCurve::single_pair(times.to_vec(), block.alpha - block.beta, chi, true)?;

    let mut validation = vec![("curve_invariants".to_string(), true)];
    let mut notes = Vec::new();

    let vacuum_only = block.terms == vec![(0.0, 0.0, 1.0)];
    if vacuum_only {
        let abs = curve.abs_chi(0);
        let cap = times.last().copied().unwrap_or(0.0).min(5.0);
        let mut ok = true;
        for (i, w) in abs.windows(2).enumerate() {
            if times[i + 1] <= cap && w[1] > w[0] + 1e-15 {
                ok = false;
                break;
            }
        }
        validation.push(("monotone_modulus".to_string(), ok));
        if let Some(last) = curve.abs_chi(0).last() {
            notes.push(format!("final_modulus = {last:.6e}"));
        }
    }

    let mut deviation = None;
    if oracle_cfg.enabled {
        let sub: Vec<f64> = subsample(times, FREE_PARTICLE_ORACLE_SAMPLES)
            .into_iter()
            .filter(|&t| t <= FREE_PARTICLE_ORACLE_T_CAP + 1e-12)
            .collect();
        let sub = if sub.len() >= 2 {
            sub
        } else {
            vec![
                0.0,
                times
                    .last()
                    .copied()
                    .unwrap_or(1.0)
                    .min(FREE_PARTICLE_ORACLE_T_CAP),
            ]
        };
        let fock = FockOracle::new(oracle_cfg.dim, 1.0, block.f0)?;
        let h_free = fock.h_free_particle();
        let brute =
            fock.brute_chi_with_env(&h_free, block.alpha, block.beta, &block.terms, &sub)?;
        let closed = single_mode_chi(0.0, block.f0, block.alpha, block.beta, &block.terms, &sub)?;
        let dev = brute
            .iter()
            .zip(&closed)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        notes.push(format!(
            "oracle: closed form vs {}-level brute force deviates by {dev:.3e} \
             on the window t <= {FREE_PARTICLE_ORACLE_T_CAP} where the truncation is faithful",
            oracle_cfg.dim
        ));
        if dev > oracle_cfg.tolerance {
            return Err(DecoError::OracleMismatch {
                deviation: dev,
                tolerance: oracle_cfg.tolerance,
            });
        }
        deviation = Some(dev);
    }

    Ok(Outcome {
        curve,
        validation,
        notes,
        oracle_deviation: deviation,
    })
}

fn run_scattering(
    block: &ScatteringBlock,
    oracle_cfg: &OracleBlock,
    times: &[f64],
) -> Result<Outcome> {
    let h_s = hermitian(&block.h_s, "[system] h_s")?;
    let v_s = hermitian(&block.v_s, "[system] v_s")?;
    let dim_s = h_s.dim();
    let dim = dim_s * block.env_dim;

    let levels: Vec<f64> = (0..block.env_dim)
        .map(|j| block.level_spacing * j as f64)
        .collect();
    let h_e = HermitianOperator::from_real_diagonal(&levels);
    let couplings: Vec<f64> =
        SpectralDensity::gaussian_quantile_atoms(block.env_dim, block.coupling_sigma)?
            .grid()
            .to_vec();
    let v_e = HermitianOperator::from_real_diagonal(&couplings);

    // The unperturbed model doubles as the oracle control and as the
    // scaffold whose free Hamiltonian seeds the random potential.
    let control = ScatteringModel::new(
        SystemSpec::new(h_s.clone(), v_s.clone(), tol::DEFAULT_CLUSTER_TOL)?,
        h_e.clone(),
        v_e.clone(),
        HermitianOperator::zero(dim),
    )?;
    let perturbation =
        scattering::random_offdiagonal_potential(control.h0(), block.seed, block.potential_norm)?;
    let model = ScatteringModel::new(
        SystemSpec::new(h_s.clone(), v_s.clone(), tol::DEFAULT_CLUSTER_TOL)?,
        h_e.clone(),
        v_e.clone(),
        perturbation,
    )?;

    let rho_s = build_rho(&block.rho, dim_s)?;
    let omega = DensityOperator::maximally_mixed(block.env_dim);
    let w0 = DensityOperator::new(linalg::kron(rho_s.mat(), omega.mat()))?;

    let curve = scattering::scattering_block_decay(&model, &w0, times)?;
    let (omega_hat, report) =
        scattering::moller_approx(&model, block.horizon, block.moller_samples)?;

    let mut validation = Vec::new();
    let mut notes = Vec::new();

    validation.push((
        "moller_unitary".to_string(),
        linalg::unitarity_defect(&omega_hat) <= tol::UNITARY_TOL,
    ));
    notes.push(format!(
        "moller: cauchy_defect = {:.3e}, raw_defect = {:.3e}, unitarity_defect = {:.3e}",
        report.cauchy_defect, report.raw_defect, report.unitarity_defect
    ));

    let check_times = subsample(times, 9);
    let densities_ok = check_times.iter().all(|&t| {
        let u = model.evolve_full(t);
        let wt = &u * w0.mat() * u.adjoint();
        match crate::qcore::partial_trace_env_mat(&wt, dim_s, block.env_dim) {
            Ok(rho) => validate_density(&rho).is_valid(),
            Err(_) => false,
        }
    });
    validation.push(("densities_valid".to_string(), densities_ok));

    for (pi, pair) in curve.pairs().iter().enumerate() {
        if pair.m == pair.n || pair.block_tn0 <= 0.0 {
            continue;
        }
        let start = curve.block_tn(pi, 0);
        let end = curve.block_tn(pi, times.len() - 1);
        if end > 0.0 {
            notes.push(format!(
                "offdiag_suppression_pair_{}_{} = {:.3}",
                pair.m,
                pair.n,
                start / end
            ));
        }
    }

    let mut deviation = None;
    if oracle_cfg.enabled {
        // With the potential removed, the composite dynamics factorizes and
        // the blocks follow the sector-conditioned environment evolution
        // exactly; compare the production pipeline against that closed form.
        let sub = subsample(times, ORACLE_SAMPLE_CAP);
        let control_curve = scattering::scattering_block_decay(&control, &w0, &sub)?;
        let finite = FiniteModel::new(h_s.clone(), v_s.clone(), h_e.clone(), v_e.clone(), true)?;
        let mut dev = 0.0f64;
        for pair in control_curve.pairs() {
            if pair.block_hs0 <= 1e-10 {
                continue;
            }
            let closed = oracle::gamma_evolution_check(
                &finite,
                &omega,
                pair.m,
                pair.n,
                &sub,
                tol::DEFAULT_CLUSTER_TOL,
            )?;
            for (a, b) in pair.chi.iter().zip(&closed) {
                dev = dev.max((a - b).norm());
            }
        }
        notes.push(format!(
            "oracle: unperturbed pipeline vs sector-conditioned closed form deviates by {dev:.3e}"
        ));
        if dev > oracle_cfg.tolerance {
            return Err(DecoError::OracleMismatch {
                deviation: dev,
                tolerance: oracle_cfg.tolerance,
            });
        }
        deviation = Some(dev);
    }

    Ok(Outcome {
        curve,
        validation,
        notes,
        oracle_deviation: deviation,
    })
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunArtifacts> {
    let created_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let clock = Instant::now();
    let times = linspace(config.time.t_max, config.time.n_steps);

    let outcome = match &config.model {
        ModelBlock::ArakiZurek(b) => run_araki_zurek(b, &config.oracle, &times)?,
        ModelBlock::VanHove(b) => run_vanhove(b, &times)?,
        ModelBlock::SingleMode(b) => run_single_mode(b, &config.oracle, &times)?,
        ModelBlock::FreeParticle(b) => run_free_particle(b, &config.oracle, &times)?,
        ModelBlock::Scattering(b) => run_scattering(b, &config.oracle, &times)?,
    };
    let compute_ms = clock.elapsed().as_millis();

    let canonical = super::config::serialize_scenario(config);
    let input_sha256 = emit::sha256_hex(canonical.as_bytes());

    let mut files: Vec<(String, String)> = vec![("scenario.cfg".to_string(), canonical)];
    if config.output.formats.contains(&OutputFormat::Csv) {
        files.push(("curve.csv".to_string(), emit::render_csv(&outcome.curve)));
    }
    if config.output.formats.contains(&OutputFormat::Svg) {
        for (pi, pair) in outcome.curve.pairs().iter().enumerate() {
            files.push((
                format!("pair_{}_{}.svg", pair.m, pair.n),
                emit::render_pair_svg(&outcome.curve, pi, &config.name),
            ));
        }
    }

    let mut manifest = String::new();
    manifest.push_str(&format!("scenario = {}\n", config.name));
    manifest.push_str(&format!("model = {}\n", config.model.kind_name()));
    manifest.push_str(&format!("tool_version = {}\n", env!("CARGO_PKG_VERSION")));
    manifest.push_str(&format!("input_sha256 = {input_sha256}\n"));
    manifest.push_str(&format!("created_unix_ms = {created_unix_ms}\n"));
    manifest.push_str(&format!("compute_ms = {compute_ms}\n"));
    manifest.push_str(&format!(
        "oracle_enabled = {}\n",
        if config.oracle.enabled { "on" } else { "off" }
    ));
    if let Some(dev) = outcome.oracle_deviation {
        manifest.push_str(&format!("oracle_deviation = {dev:e}\n"));
        manifest.push_str(&format!(
            "oracle_tolerance = {:e}\n",
            config.oracle.tolerance
        ));
    }
    for (name, ok) in &outcome.validation {
        manifest.push_str(&format!(
            "validation.{name} = {}\n",
            if *ok { "pass" } else { "fail" }
        ));
    }
    for note in &outcome.notes {
        manifest.push_str(&format!("note = {note}\n"));
    }
    for (name, content) in &files {
        manifest.push_str(&format!(
            "file = {name} sha256={} bytes={}\n",
            emit::sha256_hex(content.as_bytes()),
            content.len()
        ));
    }
    files.push(("manifest.txt".to_string(), manifest));

    let output_dir = PathBuf::from(&config.output.directory);
    let written = emit::write_staged(&output_dir, &files)?;

    Ok(RunArtifacts {
        output_dir,
        files: written,
        oracle_deviation: outcome.oracle_deviation,
        validation: outcome.validation,
        notes: outcome.notes,
    })
}
