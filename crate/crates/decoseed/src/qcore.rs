//! Density operators, Hermitian operators, sector families, and the
//! partial-trace / block-norm utilities every model module shares.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{DecoError, Result};
use crate::linalg::{
    self, c_re, eigh, eigh_checked, herm_defect, hs_norm, trace, trace_norm, CMat, CVec,
};
use crate::tol;

/// Complex Hermitian positive unit-trace matrix; states of S, E, or S+E.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    mat: CMat,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace, and positivity up to the shared
    /// tolerances before accepting the matrix.
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(DecoError::DimensionMismatch(format!(
                "density operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let d = validate_density(&mat);
        if d.hermiticity_defect > tol::HERM_TOL {
            return Err(DecoError::InvalidDensity(format!(
                "hermiticity defect {:.3e}",
                d.hermiticity_defect
            )));
        }
        if d.trace_defect > tol::TRACE_TOL {
            return Err(DecoError::InvalidDensity(format!(
                "trace defect {:.3e}",
                d.trace_defect
            )));
        }
        if d.min_eigenvalue < tol::POSITIVITY_FLOOR {
            return Err(DecoError::InvalidDensity(format!(
                "minimum eigenvalue {:.3e}",
                d.min_eigenvalue
            )));
        }
        Ok(Self { mat })
    }

    /// Rank-one state |psi><psi| from a normalized vector.
    pub fn pure(psi: &CVec) -> Result<Self> {
        let n2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (n2 - 1.0).abs() > 1e-10 {
            return Err(DecoError::InvalidDensity(format!(
                "pure-state vector has norm^2 {n2:.12}"
            )));
        }
        let scale = 1.0 / n2;
        Ok(Self {
            mat: (psi * psi.adjoint()).map(|z| z * scale),
        })
    }

    /// Maximally mixed state I/dim.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: CMat::identity(dim, dim).map(|z| z / dim as f64),
        }
    }

    /// Uniform superposition of all basis states, as a projector.
    pub fn uniform_plus(dim: usize) -> Self {
        let psi = CVec::from_element(dim, c_re(1.0 / (dim as f64).sqrt()));
        Self::pure(&psi).expect("uniform superposition is normalized")
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }
}

/// Bounded self-adjoint operator (Hamiltonians, couplings, observables).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: CMat,
}

impl HermitianOperator {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(DecoError::DimensionMismatch(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let defect = herm_defect(&mat);
        if defect > tol::HERM_TOL {
            return Err(DecoError::NonHermitianInput(defect));
        }
        Ok(Self { mat })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = DVector::from_column_slice(diag);
        Self {
            mat: CMat::from_diagonal(&v.map(c_re)),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            mat: CMat::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }
}

/// One spectral sector: eigenvalue and the projector onto its eigenspace.
#[derive(Debug, Clone)]
pub struct Sector {
    pub lambda: f64,
    pub projector: CMat,
}

/// Ordered spectral family {(lambda_m, P_m)} with lambda strictly increasing.
#[derive(Debug, Clone)]
pub struct SectorFamily {
    sectors: Vec<Sector>,
    dim: usize,
}

impl SectorFamily {
    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self, m: usize) -> f64 {
        self.sectors[m].lambda
    }

    pub fn projector(&self, m: usize) -> &CMat {
        &self.sectors[m].projector
    }

    /// Sum of projectors whose eigenvalue lies in the closed interval.
    /// Additive over disjoint windows by construction.
    pub fn aggregate_projector(&self, lo: f64, hi: f64) -> CMat {
        let mut p = CMat::zeros(self.dim, self.dim);
        for s in &self.sectors {
            if s.lambda >= lo && s.lambda <= hi {
                p += &s.projector;
            }
        }
        p
    }

    /// Indices of sectors whose eigenvalue lies in the closed interval.
    pub fn members_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&m| self.sectors[m].lambda >= lo && self.sectors[m].lambda <= hi)
            .collect()
    }

    /// Checks orthogonality, idempotence, completeness, ordering, and gap
    /// separation; returns the first violated property.
    pub fn validate(&self, cluster_tol: f64) -> Result<()> {
        let n = self.len();
        let id = CMat::identity(self.dim, self.dim);
        let mut sum = CMat::zeros(self.dim, self.dim);
        for m in 0..n {
            let p = &self.sectors[m].projector;
            sum += p;
            let idem = linalg::spectral_norm(&(p * p - p));
            if idem > tol::PROJECTOR_TOL {
                return Err(DecoError::InvalidDensity(format!(
                    "projector {m} idempotence defect {idem:.3e}"
                )));
            }
            for k in 0..m {
                let q = &self.sectors[k].projector;
                let ortho = linalg::spectral_norm(&(p * q));
                if ortho > tol::PROJECTOR_TOL {
                    return Err(DecoError::InvalidDensity(format!(
                        "projectors {k},{m} orthogonality defect {ortho:.3e}"
                    )));
                }
            }
            if m > 0 {
                let gap = self.sectors[m].lambda - self.sectors[m - 1].lambda;
                if gap <= cluster_tol {
                    return Err(DecoError::DegenerateClustering {
                        diameter: gap,
                        tol: cluster_tol,
                    });
                }
            }
        }
        let comp = linalg::spectral_norm(&(sum - id));
        if comp > tol::PROJECTOR_TOL {
            return Err(DecoError::InvalidDensity(format!(
                "completeness defect {comp:.3e}"
            )));
        }
        Ok(())
    }
}

/// Groups ascending eigenvalues by single-linkage: a new cluster starts
/// where the adjacent gap exceeds `tol`. Returns half-open index ranges.
pub(crate) fn cluster_ranges(vals: &[f64], tol_gap: f64) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    let n = vals.len();
    let mut start = 0;
    for i in 1..=n {
        if i == n || vals[i] - vals[i - 1] > tol_gap {
            ranges.push((start, i));
            start = i;
        }
    }
    ranges
}

/// Extracts the spectral family of a Hermitian operator, merging
/// eigenvalues within `cluster_tol` (single linkage on the sorted
/// spectrum). Chained merging that produces a cluster wider than
/// `cluster_tol` makes membership ambiguous and is refused.
pub fn spectral_projectors(v: &HermitianOperator, cluster_tol: f64) -> Result<SectorFamily> {
    spectral_frame(v, cluster_tol).map(|f| f.0)
}

/// As `spectral_projectors`, but also returns the diagonalizing frame: the
/// eigenvector columns and, per column, the index of the sector it belongs
/// to. Lets callers apply sector-indexed maps entrywise in the eigenbasis
/// instead of multiplying projector sandwiches.
pub(crate) fn spectral_frame(
    v: &HermitianOperator,
    cluster_tol: f64,
) -> Result<(SectorFamily, CMat, Vec<usize>)> {
    assert!(cluster_tol > 0.0, "cluster_tol must be positive");
    let (vals, vecs) = eigh_checked(v.mat(), tol::HERM_TOL)?;
    let dim = v.dim();
    let ranges = cluster_ranges(vals.as_slice(), cluster_tol);
    let mut sectors = Vec::with_capacity(ranges.len());
    let mut sector_of = vec![0usize; dim];
    for (idx, &(a, b)) in ranges.iter().enumerate() {
        let diameter = vals[b - 1] - vals[a];
        if diameter > cluster_tol {
            return Err(DecoError::DegenerateClustering {
                diameter,
                tol: cluster_tol,
            });
        }
        let lambda = vals.as_slice()[a..b].iter().sum::<f64>() / (b - a) as f64;
        let mut p = CMat::zeros(dim, dim);
        for j in a..b {
            let col = vecs.column(j);
            p += col * col.adjoint();
        }
        sector_of[a..b].fill(idx);
        sectors.push(Sector {
            lambda,
            projector: p,
        });
    }
    Ok((SectorFamily { sectors, dim }, vecs, sector_of))
}

/// e^{-iHt} W e^{iHt} via one eigendecomposition of H.
pub fn evolve(h: &HermitianOperator, t: f64, w: &DensityOperator) -> Result<DensityOperator> {
    if h.dim() != w.dim() {
        return Err(DecoError::DimensionMismatch(format!(
            "evolve: H is {}-dim, W is {}-dim",
            h.dim(),
            w.dim()
        )));
    }
    let (vals, vecs) = eigh(h.mat());
    let out = linalg::evolve_conjugate(&vals, &vecs, t, w.mat());
    DensityOperator::new(out)
}

/// Partial trace over the environment factor, S-major index convention
/// (total index = s * dim_e + e).
pub fn partial_trace_env_mat(w: &CMat, dim_s: usize, dim_e: usize) -> Result<CMat> {
    if w.nrows() != dim_s * dim_e || w.ncols() != dim_s * dim_e {
        return Err(DecoError::DimensionMismatch(format!(
            "partial trace: matrix is {}x{}, expected {}",
            w.nrows(),
            w.ncols(),
            dim_s * dim_e
        )));
    }
    let mut rho = CMat::zeros(dim_s, dim_s);
    for s in 0..dim_s {
        for s2 in 0..dim_s {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..dim_e {
                acc += w[(s * dim_e + e, s2 * dim_e + e)];
            }
            rho[(s, s2)] = acc;
        }
    }
    Ok(rho)
}

pub fn partial_trace_env(
    w: &DensityOperator,
    dim_s: usize,
    dim_e: usize,
) -> Result<DensityOperator> {
    let rho = partial_trace_env_mat(w.mat(), dim_s, dim_e)?;
    DensityOperator::new(rho)
}

/// Norms of every sector block P_m A P_n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockNorm {
    pub m: usize,
    pub n: usize,
    pub trace_norm: f64,
    pub hs_norm: f64,
}

pub fn block_norms(a: &CMat, family: &SectorFamily) -> Result<Vec<BlockNorm>> {
    if a.nrows() != family.dim() || a.ncols() != family.dim() {
        return Err(DecoError::DimensionMismatch(format!(
            "block_norms: matrix is {}x{}, sector family dim {}",
            a.nrows(),
            a.ncols(),
            family.dim()
        )));
    }
    let k = family.len();
    let mut out = Vec::with_capacity(k * k);
    for m in 0..k {
        let left = family.projector(m) * a;
        for n in 0..k {
            let block = &left * family.projector(n);
            out.push(BlockNorm {
                m,
                n,
                trace_norm: trace_norm(&block),
                hs_norm: hs_norm(&block),
            });
        }
    }
    Ok(out)
}

/// The three defect measures of a candidate density matrix; diagnostic
/// only, the caller decides acceptance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDiagnostics {
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
}

impl DensityDiagnostics {
    /// Passes the same three gates `DensityOperator::new` enforces.
    pub fn is_valid(&self) -> bool {
        self.hermiticity_defect <= tol::HERM_TOL
            && self.trace_defect <= tol::TRACE_TOL
            && self.min_eigenvalue >= tol::POSITIVITY_FLOOR
    }
}

pub fn validate_density(w: &CMat) -> DensityDiagnostics {
    DensityDiagnostics {
        hermiticity_defect: herm_defect(w),
        trace_defect: (trace(w) - Complex64::new(1.0, 0.0)).norm(),
        min_eigenvalue: linalg::min_eigenvalue(w),
    }
}
