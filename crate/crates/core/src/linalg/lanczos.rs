use crate::linalg::eigen::symmetric_eigen;
use crate::linalg::svd::svd;
use crate::matrix::{axpy, dot, norm2, Matrix};

/// Below this smaller dimension the spectral norm comes from a full SVD.
const DIRECT_LIMIT: usize = 24;
const RESIDUAL_TOL: f64 = 1e-14;

/// Fixed, well-spread start vector so results are reproducible.
pub(crate) fn start_vector(n: usize) -> Vec<f64> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let v: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let nrm = norm2(&v);
    v.into_iter().map(|x| x / nrm).collect()
}

/// Largest eigenvalue of a symmetric positive semidefinite operator by
/// Lanczos with full reorthogonalization.
pub(crate) fn largest_eigenvalue(dim: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    let mut basis: Vec<Vec<f64>> = vec![start_vector(dim)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut theta = 0.0;
    for j in 0..dim {
        let mut w = apply(&basis[j]);
        let alpha = dot(&w, &basis[j]);
        alphas.push(alpha);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                axpy(-c, q, &mut w);
            }
        }
        let beta = norm2(&w);
        let t = Matrix::from_fn(j + 1, j + 1, |r, c| {
            if r == c {
                alphas[r]
            } else if r + 1 == c {
                betas[r]
            } else if c + 1 == r {
                betas[c]
            } else {
                0.0
            }
        });
        let (vals, vecs) = symmetric_eigen(&t).expect("tridiagonal eigenproblem");
        theta = vals[0];
        let resid = beta * vecs[(j, 0)].abs();
        if resid <= RESIDUAL_TOL * theta.abs() || beta <= f64::EPSILON * theta.abs() || j + 1 == dim {
            break;
        }
        betas.push(beta);
        basis.push(w.into_iter().map(|x| x / beta).collect());
    }
    theta.max(0.0)
}

/// Spectral norm `‖A‖₂`.
pub fn spectral_norm(a: &Matrix) -> f64 {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return 0.0;
    }
    let scale = a.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    if m.min(n) <= DIRECT_LIMIT {
        return svd(a).map(|r| r.s[0]).unwrap_or(f64::NAN);
    }
    // Scale to unit max entry to keep the Gram operator in range.
    let b = a.scale(1.0 / scale);
    let lambda = if n <= m {
        largest_eigenvalue(n, |x| b.t_matvec(&b.matvec(x)))
    } else {
        largest_eigenvalue(m, |x| b.matvec(&b.t_matvec(x)))
    };
    lambda.sqrt() * scale
}
