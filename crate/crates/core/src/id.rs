//! Interpolative decompositions and the column-selection algorithms that
//! produce them.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{leverage_scores, validate_index_set};
use crate::linalg::{pseudoinverse_apply, svd, PINV_RTOL};
use crate::matrix::Matrix;
use crate::pivoting::{golub_businger_cpqr, gu_eisenstat_srrqr, PivotedQr};
use crate::sketch::{gaussian_from, keyed_rng, rsvd, Role, RsvdConfig, RsvdResult};

/// `A ≈ B1·B2ᵀ`, optionally remembering the columns it was built from.
#[derive(Clone, Debug)]
pub struct LowRankApprox {
    pub b1: Matrix,
    pub b2: Matrix,
    pub skeleton: Option<Vec<usize>>,
}

impl LowRankApprox {
    pub fn new(b1: Matrix, b2: Matrix, skeleton: Option<Vec<usize>>) -> Result<Self> {
        if b1.cols() != b2.cols() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} factor columns", b1.cols()),
                got: b2.cols().to_string(),
            });
        }
        b1.ensure_finite()?;
        b2.ensure_finite()?;
        Ok(LowRankApprox { b1, b2, skeleton })
    }

    pub fn rank(&self) -> usize {
        self.b1.cols()
    }

    pub fn to_matrix(&self) -> Matrix {
        self.b1.matmul_t(&self.b2)
    }

    pub fn residual(&self, a: &Matrix) -> Matrix {
        a.sub(&self.to_matrix())
    }

    pub fn error_spectral(&self, a: &Matrix) -> f64 {
        self.residual(a).spectral_norm()
    }

    pub fn error_frobenius(&self, a: &Matrix) -> f64 {
        self.residual(a).frobenius_norm()
    }
}

/// Interpolative decomposition `A ≈ A_{:,J} (A_{:,J})† A`.
#[derive(Clone, Debug)]
pub struct InterpolativeDecomp {
    pub skeleton: Vec<usize>,
    /// Exact copies of the skeleton columns.
    pub b1: Matrix,
    /// `B2ᵀ = (A_{:,J})† A`.
    pub b2: Matrix,
}

impl InterpolativeDecomp {
    pub fn k(&self) -> usize {
        self.skeleton.len()
    }

    pub fn to_matrix(&self) -> Matrix {
        self.b1.matmul_t(&self.b2)
    }

    pub fn residual(&self, a: &Matrix) -> Matrix {
        a.sub(&self.to_matrix())
    }

    pub fn error_spectral(&self, a: &Matrix) -> f64 {
        self.residual(a).spectral_norm()
    }

    pub fn error_frobenius(&self, a: &Matrix) -> f64 {
        self.residual(a).frobenius_norm()
    }

    pub fn into_low_rank(self) -> LowRankApprox {
        LowRankApprox { b1: self.b1, b2: self.b2, skeleton: Some(self.skeleton) }
    }
}

/// Least-squares interpolative decomposition on the given columns.
pub fn id_from_columns(a: &Matrix, j: &[usize]) -> Result<InterpolativeDecomp> {
    a.ensure_finite()?;
    validate_index_set(j, a.cols())?;
    let b1 = a.select_columns(j);
    let coeffs = pseudoinverse_apply(&b1, a, PINV_RTOL)?;
    Ok(InterpolativeDecomp { skeleton: j.to_vec(), b1, b2: coeffs.transpose() })
}

/// Rank-revealing QR used to pick skeleton columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pivoter {
    GolubBusinger,
    GuEisenstat { f: f64 },
}

impl Pivoter {
    pub fn factor(&self, a: &Matrix, k: usize) -> Result<PivotedQr> {
        match *self {
            Pivoter::GolubBusinger => golub_businger_cpqr(a, k),
            Pivoter::GuEisenstat { f } => gu_eisenstat_srrqr(a, k, f),
        }
    }
}

impl Default for Pivoter {
    fn default() -> Self {
        Pivoter::GolubBusinger
    }
}

fn check_k(a: &Matrix, k: usize) -> Result<()> {
    let hi = a.rows().min(a.cols());
    if k == 0 || k > hi {
        return Err(Error::RankOutOfRange { k, lo: 1, hi });
    }
    Ok(())
}

/// Golub-Klema-Stewart selection: pivoted QR on `V_kᵀ` from an exact SVD.
pub fn gks(a: &Matrix, k: usize, pivoter: Pivoter) -> Result<InterpolativeDecomp> {
    check_k(a, k)?;
    let f = svd(a)?;
    if k < f.s.len() && f.s[k - 1] <= f.s[k] {
        log::warn!("gks: sigma_k = sigma_(k+1) = {:.3e}; leading subspace is not unique", f.s[k]);
    }
    select_from_basis(a, &f.v_k(k), k, pivoter)
}

/// Pivots on the rows of an `n × k` basis and builds the ID from the first
/// `k` pivots.
pub fn select_from_basis(a: &Matrix, v_k: &Matrix, k: usize, pivoter: Pivoter) -> Result<InterpolativeDecomp> {
    let fact = pivoter.factor(&v_k.transpose(), k)?;
    id_from_columns(a, &fact.skeleton())
}

/// Randomized GKS with Golub-Businger pivoting.
pub fn rgks(a: &Matrix, cfg: &RsvdConfig) -> Result<InterpolativeDecomp> {
    Ok(rgks_traced(a, cfg, Pivoter::GolubBusinger)?.0)
}

/// Randomized GKS returning the randomized SVD it pivoted on.
pub fn rgks_traced(a: &Matrix, cfg: &RsvdConfig, pivoter: Pivoter) -> Result<(InterpolativeDecomp, RsvdResult)> {
    let approx = rsvd(a, cfg)?;
    let id = select_from_basis(a, &approx.v, cfg.k, pivoter)?;
    Ok((id, approx))
}

/// Row count of the RID sketch: `k + p`, or `min(n, 2(k+p))` in the
/// doubled-oversampling mode.
pub fn rid_sketch_rows(n: usize, k: usize, p: usize, doubled: bool) -> usize {
    if doubled {
        n.min(2 * (k + p))
    } else {
        k + p
    }
}

/// Randomized ID with a `(k+p) × m` Gaussian row sketch.
pub fn rid(a: &Matrix, k: usize, p: usize, seed: u64) -> Result<InterpolativeDecomp> {
    rid_with_rows(a, k, k + p, seed)
}

/// Randomized ID: column-pivoted QR of `S·A` with `S` a `rows × m` Gaussian.
pub fn rid_with_rows(a: &Matrix, k: usize, rows: usize, seed: u64) -> Result<InterpolativeDecomp> {
    check_k(a, k)?;
    if rows < k {
        return Err(Error::InvalidParameter(format!("sketch rows {rows} < k = {k}")));
    }
    let s = gaussian_from(rows, a.rows(), &mut keyed_rng(seed, 0, Role::Sketch));
    let fact = golub_businger_cpqr(&s.matmul(a), k)?;
    id_from_columns(a, &fact.skeleton())
}

/// Draws `count` distinct indices, each draw proportional to the remaining
/// weights. Once the positive weights run out, the rest are filled in index
/// order.
pub fn weighted_sample_without_replacement(weights: &[f64], count: usize, rng: &mut impl Rng) -> Vec<usize> {
    let count = count.min(weights.len());
    let mut taken = vec![false; weights.len()];
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let total: f64 = weights.iter().zip(&taken).filter(|(_, &t)| !t).map(|(w, _)| w.max(0.0)).sum();
        if total <= 0.0 {
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, (&w, &t)) in weights.iter().zip(&taken).enumerate() {
            if t || w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let i = pick.expect("positive remaining weight");
        taken[i] = true;
        out.push(i);
    }
    for i in 0..weights.len() {
        if out.len() >= count {
            break;
        }
        if !taken[i] {
            taken[i] = true;
            out.push(i);
        }
    }
    out
}

/// Leverage score sampling: sample `k+p` columns by approximate squared
/// leverage scores, then project onto the leading `k` left singular vectors
/// of the sampled columns. The result is not an ID.
pub fn lss(a: &Matrix, k: usize, p: usize, seed: u64) -> Result<LowRankApprox> {
    let (m, n) = a.shape();
    if k + p > n {
        return Err(Error::RankOutOfRange { k: k + p, lo: 1, hi: n });
    }
    let cfg = RsvdConfig::new(k, p.min(m.min(n) - k), 0, seed);
    let approx = rsvd(a, &cfg)?;
    let weights: Vec<f64> = leverage_scores(&approx.v).iter().map(|l| l * l).collect();
    let j = weighted_sample_without_replacement(&weights, k + p, &mut keyed_rng(seed, 0, Role::Sampling));
    let cols = svd(&a.select_columns(&j))?;
    let b1 = cols.u.columns(0..k.min(cols.u.cols()));
    let b2 = a.t_matmul(&b1);
    LowRankApprox::new(b1, b2, Some(j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orth;
    use crate::sketch::gaussian;

    #[test]
    fn repeated_columns_are_captured_exactly() {
        let base = gaussian(6, 2, 1);
        let a = base.hstack(&base).hstack(&base.scale(2.0));
        let id = id_from_columns(&a, &[3, 4]).unwrap();
        assert!(id.error_frobenius(&a) < 1e-12);
        assert!(id_from_columns(&a, &[]).is_err());
    }

    #[test]
    fn all_columns_leave_no_residual() {
        let a = gaussian(5, 5, 2);
        let id = id_from_columns(&a, &[0, 1, 2, 3, 4]).unwrap();
        assert!(id.error_frobenius(&a) < 1e-12);
    }

    #[test]
    fn residual_is_orthogonal_to_skeleton() {
        let a = gaussian(9, 7, 3);
        let id = id_from_columns(&a, &[1, 5, 6]).unwrap();
        let e = id.residual(&a);
        assert!(e.t_matmul(&id.b1).max_abs() < 1e-8);
        for &j in &id.skeleton {
            assert!(e.col(j).iter().all(|x| x.abs() < 1e-8 * a.spectral_norm()));
        }
        assert_eq!(id.b1, a.select_columns(&[1, 5, 6]));
    }

    #[test]
    fn gks_on_axis_aligned_subspace() {
        let mut a = Matrix::zeros(5, 5);
        a[(0, 0)] = 3.0;
        a[(1, 1)] = 2.0;
        a[(2, 2)] = 1.0;
        let mut j = gks(&a, 2, Pivoter::GolubBusinger).unwrap().skeleton;
        j.sort();
        assert_eq!(j, vec![0, 1]);
    }

    #[test]
    fn exact_rank_recovery_for_every_selector() {
        let a = gaussian(20, 3, 5).matmul(&gaussian(3, 16, 6));
        let scale = a.spectral_norm();
        assert!(gks(&a, 3, Pivoter::GuEisenstat { f: 2.0 }).unwrap().error_spectral(&a) <= 1e-8 * scale);
        assert!(rgks(&a, &RsvdConfig::new(3, 0, 0, 1)).unwrap().error_spectral(&a) <= 1e-8 * scale);
        assert!(rid(&a, 3, 0, 9).unwrap().error_spectral(&a) <= 1e-8 * scale);
        assert!(lss(&a, 3, 2, 4).unwrap().error_spectral(&a) <= 1e-8 * scale);
    }

    #[test]
    fn rid_avoids_duplicate_columns() {
        let base = orth(&gaussian(12, 4, 7)).unwrap();
        let a = base.hstack(&base.scale(1.0 + 1e-9));
        let j = rid(&a, 4, 2, 3).unwrap().skeleton;
        for x in &j {
            for y in &j {
                assert!(x == y || x % 4 != y % 4, "{j:?}");
            }
        }
    }

    #[test]
    fn sampler_pads_in_index_order() {
        let mut rng = keyed_rng(1, 0, Role::Sampling);
        let j = weighted_sample_without_replacement(&[0.0, 1.0, 0.0, 0.0, 1.0], 4, &mut rng);
        let mut head = j[..2].to_vec();
        head.sort();
        assert_eq!(head, vec![1, 4]);
        assert_eq!(&j[2..], &[0, 2]);
    }

    #[test]
    fn concentrated_leverage_is_always_sampled() {
        let mut rng = keyed_rng(2, 0, Role::Sampling);
        for _ in 0..100 {
            let mut j = weighted_sample_without_replacement(&[0.0, 1.0, 1e-12, 1.0, 0.0], 2, &mut rng);
            j.sort();
            assert_eq!(j, vec![1, 3]);
        }
    }
}
