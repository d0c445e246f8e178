//! One-sided (Hestenes) Jacobi SVD.
//!
//! Columns are orthogonalized pairwise by plane rotations until every pair
//! satisfies `|cᵢ·cⱼ| ≤ 1e-14 ‖cᵢ‖‖cⱼ‖`. The relative criterion gives small
//! singular values to high relative accuracy, which the truncated condition
//! numbers and singular gaps downstream depend on.

use crate::error::{Error, Result};
use crate::linalg::qr::{householder_qr, to_columns};
use crate::matrix::{dot, norm2, Matrix};

const OFF_DIAGONAL_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 60;
/// Squared column norms below this lose digits to subnormal arithmetic, so
/// their cosines cannot reach the relative tolerance.
const TINY_SQ: f64 = f64::MIN_POSITIVE / f64::EPSILON;

/// Thin SVD `A = U diag(s) Vᵀ` with `r = min(m, n)` components, `s`
/// descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

/// An SVD split at rank `k` into leading and trailing blocks.
#[derive(Clone, Debug)]
pub struct SvdPartition {
    pub u_k: Matrix,
    pub s_k: Vec<f64>,
    pub v_k: Matrix,
    pub u_perp: Matrix,
    pub s_perp: Vec<f64>,
    pub v_perp: Matrix,
}

impl Svd {
    pub fn rank_len(&self) -> usize {
        self.s.len()
    }

    /// Splits at rank `k`, `1 ≤ k < min(m, n)`.
    pub fn partition_at(&self, k: usize) -> Result<SvdPartition> {
        let r = self.s.len();
        if k == 0 || k >= r {
            return Err(Error::RankOutOfRange { k, lo: 1, hi: r.saturating_sub(1) });
        }
        Ok(SvdPartition {
            u_k: self.u.columns(0..k),
            s_k: self.s[..k].to_vec(),
            v_k: self.v.columns(0..k),
            u_perp: self.u.columns(k..r),
            s_perp: self.s[k..].to_vec(),
            v_perp: self.v.columns(k..r),
        })
    }

    /// Leading `k` right singular vectors.
    pub fn v_k(&self, k: usize) -> Matrix {
        self.v.columns(0..k)
    }

    pub fn reconstruct(&self) -> Matrix {
        self.u.scale_columns(&self.s).matmul_t(&self.v)
    }
}

impl SvdPartition {
    pub fn reassemble(&self) -> Matrix {
        let lead = self.u_k.scale_columns(&self.s_k).matmul_t(&self.v_k);
        let tail = self.u_perp.scale_columns(&self.s_perp).matmul_t(&self.v_perp);
        lead.add(&tail)
    }
}

/// Full thin SVD of `a`.
pub fn svd(a: &Matrix) -> Result<Svd> {
    a.ensure_finite()?;
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.transpose())?;
        return Ok(Svd { u: t.v, s: t.s, v: t.u });
    }
    if n == 0 {
        return Ok(Svd { u: Matrix::zeros(m, 0), s: vec![], v: Matrix::zeros(0, 0) });
    }
    // Tall inputs: orthogonalize the small triangular factor instead.
    if m >= n + n / 2 && n > 1 {
        let qr = householder_qr(a)?;
        let inner = jacobi(&qr.r)?;
        return Ok(Svd { u: qr.q.matmul(&inner.u), s: inner.s, v: inner.v });
    }
    jacobi(a)
}

/// Singular values only.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    Ok(svd(a)?.s)
}

fn jacobi(a: &Matrix) -> Result<Svd> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut cols = to_columns(a);
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();

    // Presorting by norm speeds up convergence.
    let mut order: Vec<usize> = (0..n).collect();
    let norms0: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    order.sort_by(|&i, &j| norms0[j].total_cmp(&norms0[i]).then(i.cmp(&j)));
    cols = order.iter().map(|&i| cols[i].clone()).collect();
    vcols = order.iter().map(|&i| vcols[i].clone()).collect();

    let mut sq: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (alpha, beta) = (sq[i], sq[j]);
                if alpha < TINY_SQ || beta < TINY_SQ {
                    continue;
                }
                let gamma = dot(&cols[i], &cols[j]);
                if gamma.abs() <= OFF_DIAGONAL_TOL * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut vcols, i, j, c, s);
                sq[i] = alpha - t * gamma;
                sq[j] = beta + t * gamma;
            }
        }
        sq = cols.iter().map(|c| dot(c, c)).collect();
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged { what: "Jacobi SVD", iterations: MAX_SWEEPS });
    }

    let mut sv: Vec<(f64, usize)> = cols.iter().enumerate().map(|(i, c)| (norm2(c), i)).collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let s: Vec<f64> = sv.iter().map(|p| p.0).collect();
    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (slot, &(sigma, idx)) in sv.iter().enumerate() {
        if sigma > 0.0 && sigma.is_normal() {
            ucols.push(cols[idx].iter().map(|x| x / sigma).collect());
        } else {
            ucols.push(vec![0.0; m]);
            missing.push(slot);
        }
    }
    complete_basis(&mut ucols, &missing, m);
    let vsorted: Vec<Vec<f64>> = sv.iter().map(|&(_, idx)| vcols[idx].clone()).collect();
    Ok(Svd { u: Matrix::from_columns(m, &ucols), s, v: Matrix::from_columns(n, &vsorted) })
}

#[inline]
fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    let (x, y) = (&mut lo[i], &mut hi[0]);
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Fills the columns listed in `missing` with unit vectors orthogonal to
/// every other column (two passes of Gram-Schmidt against the basis).
fn complete_basis(cols: &mut [Vec<f64>], missing: &[usize], m: usize) {
    let mut candidate = 0usize;
    for &slot in missing {
        loop {
            assert!(candidate < m, "cannot complete orthonormal basis");
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for (k, c) in cols.iter().enumerate() {
                    if k == slot || c.iter().all(|&x| x == 0.0) {
                        continue;
                    }
                    let proj = dot(c, &e);
                    for (ei, ci) in e.iter_mut().zip(c) {
                        *ei -= proj * ci;
                    }
                }
            }
            let nrm = norm2(&e);
            if nrm > 1e-8 {
                cols[slot] = e.iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}
