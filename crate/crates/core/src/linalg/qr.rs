use crate::error::Result;
use crate::matrix::{dot, norm2, Matrix};

/// Thin QR factors: `Q` is `m × min(m,n)` with orthonormal columns and `R`
/// is `min(m,n) × n` upper-triangular.
#[derive(Clone, Debug)]
pub struct Qr {
    pub q: Matrix,
    pub r: Matrix,
}

/// A Householder reflector `I − β v vᵀ` acting on entries `offset..`.
#[derive(Clone, Debug)]
pub(crate) struct Reflector {
    pub offset: usize,
    pub v: Vec<f64>,
    pub beta: f64,
}

impl Reflector {
    /// Reflector mapping `x` onto `alpha e₁`; returns it with `alpha`.
    pub fn new(offset: usize, x: &[f64]) -> (Reflector, f64) {
        let norm = norm2(x);
        if norm == 0.0 {
            return (Reflector { offset, v: vec![0.0; x.len()], beta: 0.0 }, 0.0);
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        let beta = if vnorm2 == 0.0 { 0.0 } else { 2.0 / vnorm2 };
        (Reflector { offset, v, beta }, alpha)
    }

    #[inline]
    pub fn apply(&self, col: &mut [f64]) {
        if self.beta == 0.0 {
            return;
        }
        let tail = &mut col[self.offset..];
        let s = self.beta * dot(&self.v, tail);
        for (t, &vi) in tail.iter_mut().zip(&self.v) {
            *t -= s * vi;
        }
    }
}

/// Columns of `a` as contiguous vectors.
pub(crate) fn to_columns(a: &Matrix) -> Vec<Vec<f64>> {
    let t = a.transpose();
    (0..t.rows()).map(|j| t.row(j).to_vec()).collect()
}

/// Forms the explicit `m × p` orthonormal factor from stored reflectors.
pub(crate) fn accumulate_q(m: usize, p: usize, reflectors: &[Reflector]) -> Matrix {
    let mut cols: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            e
        })
        .collect();
    for h in reflectors.iter().rev() {
        for c in cols.iter_mut() {
            h.apply(c);
        }
    }
    Matrix::from_columns(m, &cols)
}

/// Reads the upper-triangular factor out of reduced columns.
pub(crate) fn extract_r(cols: &[Vec<f64>], p: usize) -> Matrix {
    Matrix::from_fn(p, cols.len(), |i, j| if i <= j { cols[j][i] } else { 0.0 })
}

/// Householder QR without pivoting.
pub fn householder_qr(a: &Matrix) -> Result<Qr> {
    a.ensure_finite()?;
    let (m, n) = a.shape();
    let p = m.min(n);
    let mut cols = to_columns(a);
    let mut reflectors = Vec::with_capacity(p);
    for j in 0..p {
        let (h, alpha) = Reflector::new(j, &cols[j][j..]);
        for c in cols.iter_mut().skip(j + 1) {
            h.apply(c);
        }
        cols[j][j] = alpha;
        for x in cols[j][j + 1..].iter_mut() {
            *x = 0.0;
        }
        reflectors.push(h);
    }
    Ok(Qr { q: accumulate_q(m, p, &reflectors), r: extract_r(&cols, p) })
}

/// Orthonormal basis for the range of `a` (the thin `Q` factor).
pub fn orth(a: &Matrix) -> Result<Matrix> {
    Ok(householder_qr(a)?.q)
}
