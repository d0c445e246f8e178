//! Dense factorization kernels: Householder QR, one-sided Jacobi SVD,
//! symmetric eigensolver, pseudoinverse, polar factor and spectral norm.

mod eigen;
mod lanczos;
pub(crate) mod qr;
mod svd;

pub use eigen::{symmetric_eigen, tridiagonal_eigen};
pub use lanczos::spectral_norm;
pub use qr::{householder_qr, orth, Qr};
pub use svd::{singular_values, svd, Svd, SvdPartition};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Default relative truncation for [`pseudoinverse`].
pub const PINV_RTOL: f64 = 1e-12;

/// Moore-Penrose pseudoinverse with singular values `≤ rel_tol·σ₁` dropped.
pub fn pseudoinverse(a: &Matrix, rel_tol: f64) -> Result<Matrix> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidParameter(format!("rel_tol must lie in (0,1), got {rel_tol}")));
    }
    let Svd { u, s, v } = svd(a)?;
    let cutoff = s.first().copied().unwrap_or(0.0) * rel_tol;
    let inv: Vec<f64> = s.iter().map(|&x| if x > cutoff && x > 0.0 { 1.0 / x } else { 0.0 }).collect();
    Ok(v.scale_columns(&inv).matmul_t(&u))
}

/// `A⁺B` with the same truncation as [`pseudoinverse`], applied factor by
/// factor as `V(Σ⁻¹(UᵀB))`. Forming `A⁺` first loses about `κ(A)·ε` in the
/// residual `B − AA⁺B`; this order keeps it near `ε‖B‖`.
pub fn pseudoinverse_apply(a: &Matrix, b: &Matrix, rel_tol: f64) -> Result<Matrix> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidParameter(format!("rel_tol must lie in (0,1), got {rel_tol}")));
    }
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch { expected: format!("{} rows", a.rows()), got: format!("{} rows", b.rows()) });
    }
    let Svd { u, s, v } = svd(a)?;
    let cutoff = s.first().copied().unwrap_or(0.0) * rel_tol;
    let inv: Vec<f64> = s.iter().map(|&x| if x > cutoff && x > 0.0 { 1.0 / x } else { 0.0 }).collect();
    let mut utb = u.t_matmul(b);
    for (i, w) in inv.iter().enumerate() {
        for j in 0..utb.cols() {
            utb[(i, j)] *= w;
        }
    }
    Ok(v.matmul(&utb))
}

/// Orthogonal polar factor `UVᵀ` of a square, numerically nonsingular matrix.
pub fn polar_orthogonal_factor(a: &Matrix) -> Result<Matrix> {
    let (m, n) = a.shape();
    if m != n {
        return Err(Error::DimensionMismatch { expected: "square".into(), got: format!("{m}x{n}") });
    }
    let Svd { u, s, v } = svd(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    if n > 0 && smin <= 1e-12 * smax {
        return Err(Error::RankDeficient(format!("polar factor: sigma_min/sigma_max = {:.3e}", smin / smax)));
    }
    Ok(u.matmul_t(&v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::gaussian;
    use crate::testgen::hadamard;

    fn nalgebra_sym_eigs(g: &Matrix) -> Vec<f64> {
        let n = g.rows();
        let m = nalgebra::DMatrix::from_row_slice(n, n, g.as_slice());
        let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| b.total_cmp(a));
        e
    }

    #[test]
    fn singular_values_match_gram_eigen_oracle() {
        let a = gaussian(8, 6, 21);
        let s = singular_values(&a).unwrap();
        let eig = nalgebra_sym_eigs(&a.t_matmul(&a));
        for (si, li) in s.iter().zip(&eig) {
            assert!((si - li.max(0.0).sqrt()).abs() < 1e-8);
        }
        let r = svd(&a).unwrap();
        assert!(r.reconstruct().sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn pinv_trivial_cases() {
        let p = pseudoinverse(&Matrix::diag(&[2.0, 0.0]), PINV_RTOL).unwrap();
        assert!(p.sub(&Matrix::diag(&[0.5, 0.0])).max_abs() < 1e-15);
        let q = orth(&gaussian(7, 3, 1)).unwrap();
        let p = pseudoinverse(&q, PINV_RTOL).unwrap();
        assert!(p.sub(&q.transpose()).max_abs() < 1e-12);
        let z = pseudoinverse(&Matrix::zeros(3, 2), PINV_RTOL).unwrap();
        assert_eq!(z.shape(), (2, 3));
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn pinv_apply_matches_explicit_and_keeps_residual_small() {
        let a = gaussian(9, 4, 3);
        let b = gaussian(9, 5, 4);
        let x = pseudoinverse_apply(&a, &b, PINV_RTOL).unwrap();
        assert!(x.sub(&pseudoinverse(&a, PINV_RTOL).unwrap().matmul(&b)).max_abs() < 1e-12);
        // Columns spanning a badly conditioned subspace, and a right-hand side
        // inside it: the residual must stay at roundoff.
        let q = orth(&gaussian(40, 3, 5)).unwrap();
        let a = q.scale_columns(&[1.0, 1e-5, 1e-10]);
        let b = a.matmul(&gaussian(3, 6, 6));
        let r = b.sub(&a.matmul(&pseudoinverse_apply(&a, &b, PINV_RTOL).unwrap()));
        assert!(r.max_abs() < 1e-14 * b.max_abs().max(1.0), "{}", r.max_abs());
    }

    #[test]
    fn pinv_penrose_identities() {
        let a = gaussian(8, 3, 17);
        let p = pseudoinverse(&a, PINV_RTOL).unwrap();
        assert!(p.matmul(&a).sub(&Matrix::identity(3)).max_abs() < 1e-8);
        assert!(a.matmul(&p).matmul(&a).sub(&a).max_abs() < 1e-8);
        assert!(p.matmul(&a).matmul(&p).sub(&p).max_abs() < 1e-8);
        let ap = a.matmul(&p);
        assert!(ap.sub(&ap.transpose()).max_abs() < 1e-8);
    }

    #[test]
    fn polar_fixed_point_and_diagonal() {
        let q = orth(&gaussian(5, 5, 2)).unwrap();
        assert!(polar_orthogonal_factor(&q).unwrap().sub(&q).max_abs() < 1e-12);
        let w = polar_orthogonal_factor(&Matrix::diag(&[2.0, 3.0])).unwrap();
        assert!(w.sub(&Matrix::identity(2)).max_abs() < 1e-15);
        assert!(polar_orthogonal_factor(&Matrix::diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn polar_is_nearest_orthogonal_matrix() {
        let h = hadamard(4).unwrap();
        let mut perm = Matrix::zeros(4, 4);
        for (i, j) in [(0, 2), (1, 0), (2, 3), (3, 1)] {
            perm[(i, j)] = 1.0;
        }
        let a = h.scale(0.7).add(&perm.scale(0.3));
        let w = polar_orthogonal_factor(&a).unwrap();
        assert!(w.t_matmul(&w).sub(&Matrix::identity(4)).frobenius_norm() < 1e-10);
        let best = a.sub(&w).frobenius_norm();
        for seed in 0..10_000u64 {
            let mut z = householder_qr(&gaussian(4, 4, 1_000_000 + seed)).unwrap().q;
            // Cover both components of O(4).
            if seed % 2 == 1 {
                for i in 0..4 {
                    z[(i, 0)] = -z[(i, 0)];
                }
            }
            assert!(a.sub(&z).frobenius_norm() >= best - 1e-12);
        }
    }

    #[test]
    fn weyl_monotonicity() {
        for seed in 0..20 {
            let a = gaussian(9, 7, 100 + seed);
            let e = gaussian(9, 7, 200 + seed).scale(0.1);
            let sa = singular_values(&a).unwrap();
            let sae = singular_values(&a.add(&e)).unwrap();
            let en = e.spectral_norm();
            for (x, y) in sae.iter().zip(&sa) {
                assert!(*x <= y + en + 1e-12);
            }
        }
    }

    #[test]
    fn reassembly_round_trip() {
        let a = gaussian(11, 9, 5);
        let r = svd(&a).unwrap();
        for k in 1..9 {
            let back = r.partition_at(k).unwrap().reassemble();
            assert!(back.sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        }
    }
}
