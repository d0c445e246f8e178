//! Seeded Gaussian sketches, the basic range-finder and randomized SVD.
//!
//! Every random draw comes from a ChaCha8 stream keyed by
//! `(seed, trial, role)`, so trials can run in any order on any number of
//! threads and still reproduce bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::id::LowRankApprox;
use crate::linalg::{householder_qr, orth, svd};
use crate::matrix::Matrix;

/// Purpose of a random stream; part of the RNG key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Role {
    Plain = 0,
    LeftFactor = 1,
    Permutation = 2,
    Noise = 3,
    Sketch = 4,
    Sampling = 5,
    Instance = 6,
}

/// Keyed generator for `(seed, trial, role)`.
pub fn keyed_rng(seed: u64, trial: u64, role: Role) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&(role as u64).to_le_bytes());
    key[24..].copy_from_slice(b"skelet\x00\x01");
    ChaCha8Rng::from_seed(key)
}

/// Matrix of i.i.d. standard normals drawn row by row from `rng`.
pub fn gaussian_from(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_row_major(rows, cols, data).expect("finite normals")
}

/// Deterministic standard Gaussian matrix for `seed`.
pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    gaussian_from(rows, cols, &mut keyed_rng(seed, 0, Role::Plain))
}

/// Range-finder: `Q = orth(AΩ)`, returning `B1 = Q`, `B2 = AᵀQ`.
///
/// Directions of `AΩ` that vanish numerically are dropped, so `Q` may have
/// fewer columns than `Ω`.
pub fn proto_sketch(a: &Matrix, omega: &Matrix) -> Result<LowRankApprox> {
    if omega.rows() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} sketch rows", a.cols()),
            got: omega.rows().to_string(),
        });
    }
    let y = a.matmul(omega);
    let qr = householder_qr(&y)?;
    let p = qr.r.rows();
    let rmax = (0..p).map(|i| qr.r[(i, i)].abs()).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..p).filter(|&i| qr.r[(i, i)].abs() > 1e-12 * rmax && rmax > 0.0).collect();
    let q = qr.q.select_columns(&keep);
    let b2 = a.t_matmul(&q);
    LowRankApprox::new(q, b2, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RsvdConfig {
    pub k: usize,
    pub p: usize,
    pub q: usize,
    pub seed: u64,
}

impl RsvdConfig {
    pub fn new(k: usize, p: usize, q: usize, seed: u64) -> Self {
        RsvdConfig { k, p, q, seed }
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let hi = m.min(n);
        if self.k == 0 || self.k + self.p > hi {
            return Err(Error::RankOutOfRange { k: self.k + self.p, lo: 1, hi });
        }
        Ok(())
    }

    /// The `n × (k+p)` test matrix this configuration draws.
    pub fn sketch(&self, n: usize) -> Matrix {
        gaussian_from(n, self.k + self.p, &mut keyed_rng(self.seed, 0, Role::Sketch))
    }
}

/// Rank-`k` randomized SVD factors.
#[derive(Clone, Debug)]
pub struct RsvdResult {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl RsvdResult {
    pub fn to_matrix(&self) -> Matrix {
        self.u.scale_columns(&self.s).matmul_t(&self.v)
    }
}

/// Randomized SVD with oversampling and power iteration, truncated to rank `k`.
pub fn rsvd(a: &Matrix, cfg: &RsvdConfig) -> Result<RsvdResult> {
    cfg.validate(a.rows(), a.cols())?;
    a.ensure_finite()?;
    rsvd_with_sketch(a, &cfg.sketch(a.cols()), cfg.k, cfg.q)
}

/// Randomized SVD using a caller-supplied test matrix `Ω` (`n × ℓ`, `ℓ ≥ k`).
pub fn rsvd_with_sketch(a: &Matrix, omega: &Matrix, k: usize, q: usize) -> Result<RsvdResult> {
    let (m, n) = a.shape();
    let l = omega.cols();
    if omega.rows() != n || k == 0 || k > l || l > m.min(n) {
        return Err(Error::DimensionMismatch {
            expected: format!("{n} x l sketch with {k} <= l <= {}", m.min(n)),
            got: format!("{} x {l}", omega.rows()),
        });
    }
    let mut basis = orth(&a.matmul(omega))?;
    for _ in 0..q {
        let z = orth(&a.t_matmul(&basis))?;
        basis = orth(&a.matmul(&z))?;
    }
    let b = basis.t_matmul(a);
    let small = svd(&b)?;
    Ok(RsvdResult {
        u: basis.matmul(&small.u.columns(0..k)),
        s: small.s[..k].to_vec(),
        v: small.v.columns(0..k),
    })
}
