//! Principal angles, leverage scores, coherence, spectral statistics and
//! projector distances.

use crate::error::{Error, Result};
use crate::linalg::{singular_values, svd};
use crate::matrix::Matrix;

const ORTHONORMAL_TOL: f64 = 1e-8;

/// Principal angles between two subspaces.
///
/// `cosines` are descending and `angles` ascending, so `angles[i]` pairs with
/// `cosines[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalAngles {
    pub cosines: Vec<f64>,
    pub angles: Vec<f64>,
}

impl PrincipalAngles {
    /// Combines cosines (descending) and sines (descending) of the same angle
    /// set, taking each angle from whichever value is better conditioned.
    fn from_cos_sin(mut cosines: Vec<f64>, sines_desc: &[f64]) -> Self {
        let k = cosines.len();
        for c in cosines.iter_mut() {
            *c = c.clamp(0.0, 1.0);
        }
        let angles = (0..k)
            .map(|i| {
                let c = cosines[i];
                let s = sines_desc.get(k - 1 - i).copied().unwrap_or(0.0).clamp(0.0, 1.0);
                if c * c < 0.5 {
                    c.acos()
                } else {
                    s.asin()
                }
            })
            .collect();
        PrincipalAngles { cosines, angles }
    }

    pub fn max_angle(&self) -> f64 {
        self.angles.last().copied().unwrap_or(0.0)
    }

    pub fn min_cosine(&self) -> f64 {
        self.cosines.last().copied().unwrap_or(1.0)
    }

    /// `sec φ_max`, infinite when the largest angle is a right angle.
    pub fn sec_max(&self) -> f64 {
        let c = self.min_cosine();
        if c == 0.0 {
            f64::INFINITY
        } else {
            1.0 / c
        }
    }

    /// `Σ tan² φᵢ`, infinite if any angle is a right angle.
    pub fn sum_tan_sq(&self) -> f64 {
        self.cosines
            .iter()
            .map(|&c| if c == 0.0 { f64::INFINITY } else { (1.0 - c * c).max(0.0) / (c * c) })
            .sum()
    }
}

pub(crate) fn check_orthonormal(x: &Matrix) -> Result<()> {
    let defect = x.orthonormality_defect();
    if defect.is_nan() || defect >= ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { defect });
    }
    Ok(())
}

/// Principal angles between `span(X)` and `span(Y)` for orthonormal bases.
pub fn principal_angles(x: &Matrix, y: &Matrix) -> Result<PrincipalAngles> {
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch { expected: format!("{} rows", x.rows()), got: y.rows().to_string() });
    }
    check_orthonormal(x)?;
    check_orthonormal(y)?;
    let (small, big) = if x.cols() <= y.cols() { (x, y) } else { (y, x) };
    let cross = big.t_matmul(small);
    let cosines = singular_values(&cross)?;
    let resid = small.sub(&big.matmul(&cross));
    let sines = singular_values(&resid)?;
    Ok(PrincipalAngles::from_cos_sin(cosines, &sines))
}

/// Validates a skeleton index set: nonempty, in range, no repeats.
pub fn validate_index_set(j: &[usize], n: usize) -> Result<()> {
    if j.is_empty() {
        return Err(Error::InvalidIndexSet("empty".into()));
    }
    let mut seen = vec![false; n];
    for &idx in j {
        if idx >= n {
            return Err(Error::InvalidIndexSet(format!("index {idx} out of range 0..{n}")));
        }
        if seen[idx] {
            return Err(Error::InvalidIndexSet(format!("duplicate index {idx}")));
        }
        seen[idx] = true;
    }
    Ok(())
}

/// Indices of `0..n` not in `j`, ascending.
pub fn complement(j: &[usize], n: usize) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in j {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}

/// Angles between `span(V_k)` and the coordinate subspace `span(I_{:,J})`.
///
/// Cosines are the singular values of the row block `V_{J,:}`; sines come
/// from the complementary rows.
pub fn angles_to_index_subspace(v_k: &Matrix, j: &[usize]) -> Result<PrincipalAngles> {
    let (n, k) = v_k.shape();
    validate_index_set(j, n)?;
    if j.len() != k {
        return Err(Error::InvalidIndexSet(format!("expected {k} indices, got {}", j.len())));
    }
    let cosines = singular_values(&v_k.select_rows(j))?;
    let rest = complement(j, n);
    let sines = if rest.is_empty() { vec![0.0; k] } else { singular_values(&v_k.select_rows(&rest))? };
    Ok(PrincipalAngles::from_cos_sin(cosines, &sines))
}

/// Tangents of the angles to the index subspace, largest first, as the
/// singular values of `V_{Jᶜ,:} V_{J,:}⁻¹`.
pub fn tangents_of_index_angles(v_k: &Matrix, j: &[usize]) -> Result<Vec<f64>> {
    let (n, k) = v_k.shape();
    validate_index_set(j, n)?;
    if j.len() != k {
        return Err(Error::InvalidIndexSet(format!("expected {k} indices, got {}", j.len())));
    }
    let block = svd(&v_k.select_rows(j))?;
    if block.s[k - 1] <= 1e-12 {
        return Err(Error::RightAngle);
    }
    let rest = complement(j, n);
    if rest.is_empty() {
        return Ok(vec![0.0; k]);
    }
    let inv_s: Vec<f64> = block.s.iter().map(|x| 1.0 / x).collect();
    let inv = block.v.scale_columns(&inv_s).matmul_t(&block.u);
    let mut t = singular_values(&v_k.select_rows(&rest).matmul(&inv))?;
    t.resize(k, 0.0);
    Ok(t)
}

/// Gap and stable-rank statistics of a descending singular spectrum at rank `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumStats {
    pub k: usize,
    /// `γ_k = σ_{k+1}/σ_k`.
    pub gap: f64,
    /// `r_k = ‖Σ_⊥‖_F² / ‖Σ_⊥‖₂²`.
    pub stable_rank: f64,
    /// `‖Σ_⊥‖₂ = σ_{k+1}`.
    pub tail_spectral: f64,
    /// `‖Σ_⊥‖_F`.
    pub tail_frobenius: f64,
}

pub fn spectrum_stats(s: &[f64], k: usize) -> Result<SpectrumStats> {
    if k == 0 || k >= s.len() {
        return Err(Error::RankOutOfRange { k, lo: 1, hi: s.len().saturating_sub(1) });
    }
    let tail_spectral = s[k];
    if tail_spectral <= 0.0 {
        return Err(Error::UndefinedStableRank);
    }
    let tail_sq: f64 = s[k..].iter().map(|x| x * x).sum();
    Ok(SpectrumStats {
        k,
        gap: if s[k - 1] > 0.0 { s[k] / s[k - 1] } else { 1.0 },
        stable_rank: tail_sq / (tail_spectral * tail_spectral),
        tail_spectral,
        tail_frobenius: tail_sq.sqrt(),
    })
}

/// Generalized gap `γ_{i,j} = σ_j / σ_i` with 1-based indices.
pub fn generalized_gap(s: &[f64], i: usize, j: usize) -> f64 {
    s[j - 1] / s[i - 1]
}

/// `‖Σ_⊥‖_F` for the tail after rank `k`.
pub fn tail_frobenius(s: &[f64], k: usize) -> f64 {
    s[k.min(s.len())..].iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Row norms `ℓ_j = ‖V_{j,1:k}‖₂`.
pub fn leverage_scores(v_k: &Matrix) -> Vec<f64> {
    v_k.row_norms()
}

/// Coherence `c_k = max_j ℓ_j`.
pub fn coherence(v_k: &Matrix) -> f64 {
    leverage_scores(v_k).into_iter().fold(0.0, f64::max)
}

/// `P − P̂` for the orthogonal projectors onto `span(V)` and `span(V̂)`.
pub fn projector_difference(v: &Matrix, v_hat: &Matrix) -> Matrix {
    v.matmul_t(v).sub(&v_hat.matmul_t(v_hat))
}

/// Subspace and element-wise distance between two projectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorDistance {
    pub theta_max: f64,
    pub sin_theta_max: f64,
    pub elementwise_max: f64,
    pub elementwise_median: f64,
    pub elementwise_mean: f64,
}

pub fn projector_distance(v: &Matrix, v_hat: &Matrix) -> Result<ProjectorDistance> {
    if v.shape() != v_hat.shape() {
        return Err(Error::DimensionMismatch { expected: format!("{:?}", v.shape()), got: format!("{:?}", v_hat.shape()) });
    }
    let angles = principal_angles(v, v_hat)?;
    let theta_max = angles.max_angle();
    let mut abs: Vec<f64> = projector_difference(v, v_hat).as_slice().iter().map(|x| x.abs()).collect();
    let (max, median, mean) = summarize(&mut abs);
    Ok(ProjectorDistance {
        theta_max,
        sin_theta_max: theta_max.sin(),
        elementwise_max: max,
        elementwise_median: median,
        elementwise_mean: mean,
    })
}

/// (max, median, mean); reorders `values`.
pub(crate) fn summarize(values: &mut [f64]) -> (f64, f64, f64) {
    let len = values.len();
    if len == 0 {
        return (0.0, 0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / len as f64;
    let max = values.iter().copied().fold(0.0, f64::max);
    let mid = len / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    let median = if len % 2 == 1 {
        upper
    } else {
        let lower = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };
    (max, median, mean)
}

/// Row-wise distance after Procrustes alignment: `max_j ‖v_j − (V̂Q*)_j‖₂`
/// with `Q* = argmin_Q ‖V − V̂Q‖_F`.
///
/// The Frobenius-optimal rotation need not minimize the largest row
/// discrepancy, so this is an upper bound on the row-wise distance.
pub fn d_row_upper(v: &Matrix, v_hat: &Matrix) -> Result<f64> {
    if v.shape() != v_hat.shape() {
        return Err(Error::DimensionMismatch { expected: format!("{:?}", v.shape()), got: format!("{:?}", v_hat.shape()) });
    }
    let m = v_hat.t_matmul(v);
    let f = svd(&m)?;
    let rotation = f.u.matmul_t(&f.v);
    let aligned = v_hat.matmul(&rotation);
    Ok(v.sub(&aligned).row_norms().into_iter().fold(0.0, f64::max))
}
