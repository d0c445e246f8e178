//! Column-pivoted QR (Golub-Businger) and strong rank-revealing QR
//! (Gu-Eisenstat).

use crate::error::{Error, Result};
use crate::linalg::householder_qr;
use crate::linalg::qr::{accumulate_q, extract_r, to_columns, Reflector};
use crate::matrix::{dot, Matrix};

/// Recompute a downdated column norm once its square falls below this
/// fraction of the original squared norm.
const DOWNDATE_GUARD: f64 = 1e-7;
/// Relative slack on the swap test so roundoff cannot cause cycling.
const SWAP_SLACK: f64 = 1e-10;

/// `A·Π = Q·R` with `Π` given by `perm`: column `i` of `AΠ` is column
/// `perm[i]` of `A`.
#[derive(Clone, Debug)]
pub struct PivotedQr {
    pub perm: Vec<usize>,
    pub q: Matrix,
    pub r: Matrix,
    pub k: usize,
}

impl PivotedQr {
    /// Skeleton set: the first `k` pivots.
    pub fn skeleton(&self) -> Vec<usize> {
        self.perm[..self.k].to_vec()
    }

    pub fn r11(&self) -> Matrix {
        self.r.submatrix(0..self.k, 0..self.k)
    }

    pub fn r12(&self) -> Matrix {
        self.r.submatrix(0..self.k, self.k..self.r.cols())
    }

    pub fn r22(&self) -> Matrix {
        self.r.submatrix(self.k..self.r.rows(), self.k..self.r.cols())
    }

    /// `R11⁻¹R12`, the interpolation coefficients of the skeleton.
    pub fn interpolation_coefficients(&self) -> Result<Matrix> {
        solve_upper(&self.r11(), &self.r12())
    }

    /// Largest `|(R11⁻¹R12)_ij|`, zero when there are no trailing columns.
    pub fn max_interpolation_entry(&self) -> Result<f64> {
        Ok(self.interpolation_coefficients()?.max_abs())
    }

    /// The permuted input `AΠ` reconstructed from the factors.
    pub fn reconstruct(&self) -> Matrix {
        self.q.matmul(&self.r)
    }
}

/// Solves `R X = B` for upper-triangular `R` by back substitution.
pub fn solve_upper(r: &Matrix, b: &Matrix) -> Result<Matrix> {
    let k = r.rows();
    if r.cols() != k || b.rows() != k {
        return Err(Error::DimensionMismatch { expected: format!("{k}x{k} and {k} rows"), got: format!("{:?} {:?}", r.shape(), b.shape()) });
    }
    if (0..k).any(|i| r[(i, i)] == 0.0) {
        return Err(Error::RankDeficient("triangular factor has a zero diagonal".into()));
    }
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in (0..k).rev() {
            let mut s = x[(i, col)];
            for j in (i + 1)..k {
                s -= r[(i, j)] * x[(j, col)];
            }
            x[(i, col)] = s / r[(i, i)];
        }
    }
    Ok(x)
}

fn check_rank(a: &Matrix, k: usize) -> Result<()> {
    let hi = a.rows().min(a.cols());
    if k == 0 || k > hi {
        return Err(Error::RankOutOfRange { k, lo: 1, hi });
    }
    Ok(())
}

/// Greedy column-pivoted Householder QR run to completion; `k` only sets the
/// partition of the result.
pub fn golub_businger_cpqr(a: &Matrix, k: usize) -> Result<PivotedQr> {
    a.ensure_finite()?;
    check_rank(a, k)?;
    let (m, n) = a.shape();
    let p = m.min(n);
    let mut cols = to_columns(a);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut orig: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    let mut partial = orig.clone();
    let mut reflectors = Vec::with_capacity(p);
    for step in 0..p {
        let mut best = step;
        for j in (step + 1)..n {
            let better = partial[j] > partial[best] || (partial[j] == partial[best] && perm[j] < perm[best]);
            if better {
                best = j;
            }
        }
        if best != step {
            cols.swap(step, best);
            perm.swap(step, best);
            orig.swap(step, best);
            partial.swap(step, best);
        }
        let (h, alpha) = Reflector::new(step, &cols[step][step..]);
        for c in cols.iter_mut().skip(step + 1) {
            h.apply(c);
        }
        cols[step][step] = alpha;
        for x in cols[step][step + 1..].iter_mut() {
            *x = 0.0;
        }
        reflectors.push(h);
        for j in (step + 1)..n {
            let rij = cols[j][step];
            partial[j] -= rij * rij;
            if partial[j] < DOWNDATE_GUARD * orig[j] || partial[j] < 0.0 {
                let tail = &cols[j][step + 1..];
                partial[j] = dot(tail, tail);
                orig[j] = partial[j];
            }
        }
    }
    Ok(PivotedQr { perm, q: accumulate_q(m, p, &reflectors), r: extract_r(&cols, p), k })
}

/// Strong rank-revealing QR: starts from [`golub_businger_cpqr`] and swaps a
/// skeleton column with a trailing one while some
/// `ρ_ij = √((R11⁻¹R12)_ij² + (γ_j(R22)/ω_i(R11))²)` exceeds `f`, where
/// `γ_j` is the `j`-th column norm of `R22` and `1/ω_i` the `i`-th row norm
/// of `R11⁻¹`. Each swap grows `|det R11|` by more than `f`.
pub fn gu_eisenstat_srrqr(a: &Matrix, k: usize, f: f64) -> Result<PivotedQr> {
    if !(f > 1.0) {
        return Err(Error::InvalidParameter(format!("f must exceed 1, got {f}")));
    }
    let mut fact = golub_businger_cpqr(a, k)?;
    let n = a.cols();
    if k == n {
        return Ok(fact);
    }
    let limit = 10 * n * k;
    let mut swaps = 0usize;
    loop {
        let r11 = fact.r11();
        let rmax = (0..k).map(|i| r11[(i, i)].abs()).fold(0.0, f64::max);
        if (0..k).any(|i| r11[(i, i)].abs() <= 1e-14 * rmax) {
            // Numerically rank deficient below k: no meaningful swap test.
            log::debug!("strong RRQR: R11 singular, keeping CPQR pivots");
            return Ok(fact);
        }
        let r11_inv = solve_upper(&r11, &Matrix::identity(k))?;
        let coeffs = r11_inv.matmul(&fact.r12());
        let inv_row_norms = r11_inv.row_norms();
        let gamma = fact.r22().column_norms();
        let mut best = (0.0, 0usize, 0usize);
        for i in 0..k {
            for j in 0..(n - k) {
                let g = gamma.get(j).copied().unwrap_or(0.0) * inv_row_norms[i];
                let rho = coeffs[(i, j)].hypot(g);
                if rho > best.0 {
                    best = (rho, i, j);
                }
            }
        }
        if best.0 <= f * (1.0 + SWAP_SLACK) {
            log::debug!("strong RRQR finished after {swaps} swaps");
            return Ok(fact);
        }
        swaps += 1;
        if swaps > limit {
            return Err(Error::NotConverged { what: "strong RRQR", iterations: limit });
        }
        let mut perm = fact.perm.clone();
        perm.swap(best.1, k + best.2);
        let qr = householder_qr(&a.select_columns(&perm))?;
        fact = PivotedQr { perm, q: qr.q, r: qr.r, k };
    }
}

/// Kahan's upper-triangular matrix: row `i` scaled by `sⁱ`, unit diagonal
/// and `−c` above it, with `c² + s² = 1`. Column `j` is additionally scaled
/// by `1 − 1e-10·j` so greedy pivoting keeps the natural order.
pub fn kahan_matrix(n: usize, c: f64) -> Matrix {
    let s = (1.0 - c * c).sqrt();
    Matrix::from_fn(n, n, |i, j| {
        let scale = s.powi(i as i32) * (1.0 - 1e-10 * j as f64);
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => scale,
            std::cmp::Ordering::Less => -c * scale,
            std::cmp::Ordering::Greater => 0.0,
        }
    })
}
