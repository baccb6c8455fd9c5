//! Dense complex linear algebra helpers on top of nalgebra.
//!
//! Everything here works on `DMatrix<Complex64>`; Hermitian spectral
//! decompositions are sorted ascending so sector indexing is stable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{DecoError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c_re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn herm_defect(m: &CMat) -> f64 {
    let adj = m.adjoint();
    (m - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMat) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// tr(a^dag b), the Hilbert-Schmidt inner product.
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn singular_values(m: &CMat) -> DVector<f64> {
    m.clone().svd(false, false).singular_values
}

/// Sum of singular values (nuclear norm).
pub fn trace_norm(m: &CMat) -> f64 {
    singular_values(m).iter().sum()
}

/// Largest singular value (operator norm).
pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).iter().fold(0.0f64, |a, &s| a.max(s))
}

/// ||m^dag m - I||, spectral.
pub fn unitarity_defect(m: &CMat) -> f64 {
    let n = m.ncols();
    spectral_norm(&(m.adjoint() * m - CMat::identity(n, n)))
}

/// Hermitian eigendecomposition with eigenvalues ascending and
/// eigenvector columns permuted to match. The input is assumed Hermitian;
/// use [`eigh_checked`] to enforce it.
pub fn eigh(m: &CMat) -> (DVector<f64>, CMat) {
    let se = m.clone().symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &se.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn eigh_checked(m: &CMat, herm_tol: f64) -> Result<(DVector<f64>, CMat)> {
    let defect = herm_defect(m);
    if defect > herm_tol {
        return Err(DecoError::NonHermitianInput(defect));
    }
    Ok(eigh(m))
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    let sym = (m + m.adjoint()).map(|z| z * 0.5);
    let (vals, _) = eigh(&sym);
    vals[0]
}

/// e^{-iHt} from a precomputed eigendecomposition of H.
pub fn unitary_exp(vals: &DVector<f64>, vecs: &CMat, t: f64) -> CMat {
    let n = vals.len();
    let mut phased = vecs.clone();
    for j in 0..n {
        let ph = Complex64::from_polar(1.0, -vals[j] * t);
        for i in 0..n {
            phased[(i, j)] *= ph;
        }
    }
    phased * vecs.adjoint()
}

/// e^{-iHt} m e^{iHt} from a precomputed eigendecomposition of H.
/// One frame rotation plus an entrywise phase; exact up to roundoff at
/// any t, unlike series expansions.
pub fn evolve_conjugate(vals: &DVector<f64>, vecs: &CMat, t: f64, m: &CMat) -> CMat {
    let n = vals.len();
    let mut a = vecs.adjoint() * m * vecs;
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] *= Complex64::from_polar(1.0, -(vals[i] - vals[j]) * t);
        }
    }
    vecs * a * vecs.adjoint()
}

/// Kronecker product with the left factor major (index = i_a * ncols_b + i_b).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Unitary polar factor via SVD: m = U S V^dag maps to U V^dag.
pub fn polar_unitary(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd with u requested");
    let v_t = svd.v_t.expect("svd with v_t requested");
    u * v_t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CMat {
        CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.3, -0.4),
                Complex64::new(0.3, 0.4),
                Complex64::new(-0.5, 0.0),
            ],
        )
    }

    #[test]
    fn eigh_sorted_and_recomposes() {
        let m = sample();
        let (vals, vecs) = eigh(&m);
        assert!(vals[0] <= vals[1]);
        let d = CMat::from_diagonal(&vals.map(c_re));
        let rec = &vecs * d * vecs.adjoint();
        assert!(max_abs(&(rec - m)) < 1e-12);
    }

    #[test]
    fn unitary_exp_is_unitary() {
        let m = sample();
        let (vals, vecs) = eigh(&m);
        let u = unitary_exp(&vals, &vecs, 0.73);
        assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn evolve_conjugate_matches_explicit_product() {
        let h = sample();
        let (vals, vecs) = eigh(&h);
        let w = CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(0.5, 0.0),
            ],
        );
        let t = 1.37;
        let u = unitary_exp(&vals, &vecs, t);
        let direct = &u * &w * u.adjoint();
        let fast = evolve_conjugate(&vals, &vecs, t, &w);
        assert!(max_abs(&(direct - fast)) < 1e-13);
    }

    #[test]
    fn trace_norm_dominates_hs() {
        let m = sample();
        assert!(trace_norm(&m) + 1e-12 >= hs_norm(&m));
    }

    #[test]
    fn polar_factor_is_unitary() {
        let m = sample() + CMat::identity(2, 2).map(|z| z * Complex64::new(0.0, 0.3));
        let u = polar_unitary(&m);
        assert!(unitarity_defect(&u) < 1e-12);
    }
}
