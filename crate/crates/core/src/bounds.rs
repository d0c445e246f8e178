//! Evaluators for the interpolative-decomposition error bounds.
//!
//! Every evaluator returns a [`BoundReport`]: the bound value, the error it
//! bounds, and whether the bound's hypotheses hold. A failed hypothesis is
//! recorded in the report rather than raised, because the interesting regime
//! (a flat spectrum, `γ_k ≈ 1`) is exactly where the hypotheses break.
//!
//! Bound values are rounded outward by a relative `8·n·ε`, the size of the
//! floating-point error in the singular values and angles they are built
//! from. Without it an exactly tight bound compares unfavorably with the
//! measured error half of the time.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{
    angles_to_index_subspace, check_orthonormal, coherence, d_row_upper, leverage_scores, principal_angles,
    tail_frobenius, tangents_of_index_angles, validate_index_set, PrincipalAngles,
};
use crate::id::{id_from_columns, InterpolativeDecomp};
use crate::linalg::{orth, pseudoinverse, singular_values, svd, Svd, PINV_RTOL};
use crate::matrix::Matrix;
use crate::pivoting::golub_businger_cpqr;
use crate::sketch::{proto_sketch, RsvdResult};

/// Relative tolerance for treating two singular values as distinct.
const GAP_RTOL: f64 = 1e-10;
/// Slack allowed when checking a report's validity.
pub const VALIDITY_RTOL: f64 = 1e-8;

/// One evaluated error bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub name: &'static str,
    pub value: f64,
    pub applicable: bool,
    pub hypothesis_violations: Vec<String>,
    pub actual_error: f64,
    pub ratio: f64,
}

impl BoundReport {
    fn new(name: &'static str, value: f64, actual_error: f64, violations: Vec<String>) -> Self {
        let ratio = if actual_error > 0.0 {
            value / actual_error
        } else if value > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        BoundReport {
            name,
            value,
            applicable: violations.is_empty() && value.is_finite(),
            hypothesis_violations: violations,
            actual_error,
            ratio,
        }
    }

    /// False only for an applicable bound that the error exceeds.
    pub fn holds(&self) -> bool {
        !self.applicable || self.value >= self.actual_error * (1.0 - VALIDITY_RTOL)
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: value {:.6e}, actual {:.6e}, ratio {:.4}", self.name, self.value, self.actual_error, self.ratio)?;
        if !self.applicable {
            write!(f, " [inapplicable: {}]", self.hypothesis_violations.join("; "))?;
        }
        Ok(())
    }
}

/// Singular values of a residual and its truncated condition number.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualStats {
    pub singular_values: Vec<f64>,
    /// `κ(E, k+1) = σ₁(E)/σ_{k+1}(E)`, infinite when `σ_{k+1}(E) = 0`.
    pub kappa: f64,
    /// 1-based `i` with `σᵢ(E) < σ_{k+i}(A)` beyond roundoff.
    pub interlacing_violations: Vec<usize>,
}

/// A matrix with its singular value decomposition, shared by all
/// evaluators.
#[derive(Clone, Debug)]
pub struct BoundContext {
    pub a: Matrix,
    pub svd: Svd,
}

impl BoundContext {
    pub fn new(a: Matrix) -> Result<Self> {
        let f = svd(&a)?;
        Ok(BoundContext { a, svd: f })
    }

    /// Uses known factors instead of recomputing the SVD.
    pub fn with_svd(a: Matrix, svd: Svd) -> Self {
        BoundContext { a, svd }
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn s(&self) -> &[f64] {
        &self.svd.s
    }

    pub fn v_k(&self, k: usize) -> Matrix {
        self.svd.v.columns(0..k)
    }

    fn guard(&self, v: f64) -> f64 {
        let dim = self.a.rows().max(self.a.cols()) as f64;
        v * (1.0 + 8.0 * dim * f64::EPSILON)
    }

    fn has_gap(&self, i: usize) -> bool {
        let s = self.s();
        i >= 1 && i < s.len() && s[i - 1] - s[i] > GAP_RTOL * s[i - 1]
    }

    /// Hypotheses shared by the subspace-geometry bounds at rank `k`.
    fn rank_hypotheses(&self, k: usize) -> Vec<String> {
        let mut v = Vec::new();
        if 2 * k > self.n() {
            v.push(format!("k = {k} exceeds n/2 = {}", self.n() / 2));
        }
        if k >= self.s().len() {
            v.push(format!("k = {k} leaves no residual spectrum"));
        } else if !self.has_gap(k) {
            v.push(format!("no singular value gap at k = {k}"));
        }
        v
    }

    /// Builds the ID on `j` and wraps it for bound evaluation.
    pub fn instance(&self, j: &[usize]) -> Result<IdInstance<'_>> {
        let id = id_from_columns(&self.a, j)?;
        Ok(self.instance_for(id))
    }

    pub fn instance_for(&self, id: InterpolativeDecomp) -> IdInstance<'_> {
        let residual = id.residual(&self.a);
        let err_spec = residual.spectral_norm();
        let err_frob = residual.frobenius_norm();
        IdInstance { ctx: self, j: id.skeleton, residual, err_spec, err_frob }
    }

    /// Residual statistics for `E`, comparing against the spectrum of `A`
    /// past rank `k`.
    pub fn residual_stats(&self, e: &Matrix, k: usize) -> Result<ResidualStats> {
        let se = singular_values(e)?;
        let s = self.s();
        let kappa = match se.get(k) {
            Some(&x) if x > 0.0 => se[0] / x,
            _ => f64::INFINITY,
        };
        let tol = 1e-10 * s[0];
        let interlacing_violations = (1..=s.len().saturating_sub(k))
            .filter(|&i| se.get(i - 1).copied().unwrap_or(0.0) < s[k + i - 1] - tol)
            .collect();
        Ok(ResidualStats { singular_values: se, kappa, interlacing_violations })
    }

    /// `‖E‖₂ ≤ σ_{k+1}·κ(E, k+1)` for `E = A − P_W·A`, `W` spanned by `w_basis`.
    pub fn condition_number_bound_for_basis(&self, w_basis: &Matrix, k: usize) -> Result<(BoundReport, ResidualStats)> {
        let q = orth(w_basis)?;
        let e = self.a.sub(&q.matmul(&q.t_matmul(&self.a)));
        self.condition_number_bound_for_residual(&e, k)
    }

    pub fn condition_number_bound_for_residual(&self, e: &Matrix, k: usize) -> Result<(BoundReport, ResidualStats)> {
        if k == 0 || k >= self.s().len() {
            return Err(Error::RankOutOfRange { k, lo: 1, hi: self.s().len().saturating_sub(1) });
        }
        let stats = self.residual_stats(e, k)?;
        let actual = stats.singular_values.first().copied().unwrap_or(0.0);
        let mut violations = Vec::new();
        let sk1e = stats.singular_values.get(k).copied().unwrap_or(0.0);
        if !(sk1e > 1e-14 * actual.max(f64::MIN_POSITIVE)) {
            violations.push("sigma_(k+1)(E) = 0".into());
        }
        let value = self.guard(self.s()[k] * stats.kappa);
        Ok((BoundReport::new("condition_number", value, actual, violations), stats))
    }

    /// Structural bound of the basic range-finder with test matrix `Ω`:
    /// `‖E‖² ≤ ‖Σ_⊥‖² + ‖Σ_⊥Ω₂Ω₁†‖²` in spectral and Frobenius norms, where
    /// `Ω₁ = V_kᵀΩ` and `Ω₂ = V_⊥ᵀΩ`.
    pub fn sketch_structural_bounds(&self, omega: &Matrix, k: usize) -> Result<[BoundReport; 2]> {
        let part = self.svd.partition_at(k)?;
        let approx = proto_sketch(&self.a, omega)?;
        let resid = approx.residual(&self.a);
        let o1 = part.v_k.t_matmul(omega);
        let o2 = part.v_perp.t_matmul(omega);
        let so1 = singular_values(&o1)?;
        let mut violations = Vec::new();
        if so1.len() < k || so1[k - 1] <= 1e-12 * so1[0] {
            violations.push("V_k^T Omega is not full rank".into());
        }
        let core = Matrix::diag(&part.s_perp).matmul(&o2).matmul(&pseudoinverse(&o1, PINV_RTOL)?);
        let sp = part.s_perp[0];
        let fr = tail_frobenius(self.s(), k);
        let spec = self.guard((sp * sp + core.spectral_norm().powi(2)).sqrt());
        let frob = self.guard((fr * fr + core.frobenius_norm().powi(2)).sqrt());
        Ok([
            BoundReport::new("sketch_structural_spectral", spec, resid.spectral_norm(), violations.clone()),
            BoundReport::new("sketch_structural_frobenius", frob, resid.frobenius_norm(), violations),
        ])
    }
}

/// An interpolative decomposition on skeleton `j` together with its errors.
#[derive(Clone, Debug)]
pub struct IdInstance<'a> {
    pub ctx: &'a BoundContext,
    pub j: Vec<usize>,
    pub residual: Matrix,
    pub err_spec: f64,
    pub err_frob: f64,
}

impl IdInstance<'_> {
    pub fn k(&self) -> usize {
        self.j.len()
    }

    /// Angles between the exact leading subspace and the skeleton's
    /// coordinate subspace.
    pub fn angles(&self) -> Result<PrincipalAngles> {
        angles_to_index_subspace(&self.ctx.v_k(self.k()), &self.j)
    }

    fn geometry_hypotheses(&self, angles: &PrincipalAngles) -> Vec<String> {
        let mut v = self.ctx.rank_hypotheses(self.k());
        if angles.min_cosine() <= 1e-12 {
            v.push("largest principal angle is pi/2".into());
        }
        v
    }

    /// `‖E‖₂ ≤ σ_{k+1}·sec φ_max`.
    pub fn spectral_secant(&self) -> Result<BoundReport> {
        let angles = self.angles()?;
        let k = self.k();
        let sk1 = self.ctx.s().get(k).copied().unwrap_or(0.0);
        let value = self.ctx.guard(sk1 * angles.sec_max());
        Ok(BoundReport::new("spectral_secant", value, self.err_spec, self.geometry_hypotheses(&angles)))
    }

    /// `‖E‖_F ≤ ‖Σ_⊥‖_F·√(1 + r_k⁻¹·Σ tan²φᵢ)`, evaluated as
    /// `√(‖Σ_⊥‖_F² + σ_{k+1}²·Σ tan²φᵢ)` so it stays defined when `σ_{k+1} = 0`.
    pub fn frobenius_stable_rank(&self) -> Result<BoundReport> {
        let angles = self.angles()?;
        let violations = self.geometry_hypotheses(&angles);
        let k = self.k();
        let sk1 = self.ctx.s().get(k).copied().unwrap_or(0.0);
        let tail = tail_frobenius(self.ctx.s(), k);
        let tan_sq = match tangents_of_index_angles(&self.ctx.v_k(k), &self.j) {
            Ok(t) => t.iter().map(|x| x * x).sum(),
            Err(_) => f64::INFINITY,
        };
        let value = self.ctx.guard((tail * tail + sk1 * sk1 * tan_sq).sqrt());
        Ok(BoundReport::new("frobenius_stable_rank", value, self.err_frob, violations))
    }

    /// `‖E‖₂ ≤ σ_{k+1}·κ(E, k+1)`.
    pub fn condition_number(&self) -> Result<(BoundReport, ResidualStats)> {
        self.ctx.condition_number_bound_for_residual(&self.residual, self.k())
    }

    /// Picks `I ⊆ J`, `|I| = k − t`, greedily maximizing
    /// `σ_min(V_{I,1:k−t})` by pivoted QR on the skeleton rows of `basis`.
    pub fn greedy_subset(basis: &Matrix, j: &[usize], keep: usize) -> Result<Vec<usize>> {
        let rows = basis.columns(0..keep).select_rows(j);
        let fact = golub_businger_cpqr(&rows.transpose(), keep)?;
        Ok(fact.skeleton().iter().map(|&i| j[i]).collect())
    }

    /// `‖E‖₂ ≤ σ_{k−t+1}·sec φ_max^(I)` for a greedily chosen `I ⊆ J` of
    /// size `k − t`.
    pub fn subset_angle(&self, t: usize) -> Result<BoundReport> {
        let k = self.k();
        if t >= k {
            return Err(Error::InvalidParameter(format!("t = {t} must be below k = {k}")));
        }
        let keep = k - t;
        let v_small = self.ctx.v_k(keep);
        let subset = Self::greedy_subset(&self.ctx.svd.v, &self.j, keep)?;
        let angles = angles_to_index_subspace(&v_small, &subset)?;
        let mut violations = self.ctx.rank_hypotheses(keep);
        if angles.min_cosine() <= 1e-12 {
            violations.push("largest subset angle is pi/2".into());
        }
        let value = self.ctx.guard(self.ctx.s()[keep] * angles.sec_max());
        Ok(BoundReport::new("subset_angle", value, self.err_spec, violations))
    }

    /// Bounds for GKS with Gu-Eisenstat pivoting:
    /// `σ_{k+1}·√(1 + f²k(n−k))` and `‖Σ_⊥‖_F·√(1 + r_k⁻¹f²k(n−k))`.
    pub fn gks_rrqr(&self, f: f64) -> [BoundReport; 2] {
        let k = self.k();
        let n = self.ctx.n() as f64;
        let growth = f * f * k as f64 * (n - k as f64);
        let sk1 = self.ctx.s().get(k).copied().unwrap_or(0.0);
        let tail = tail_frobenius(self.ctx.s(), k);
        let violations = self.ctx.rank_hypotheses(k);
        [
            BoundReport::new("gks_rrqr_spectral", self.ctx.guard(sk1 * (1.0 + growth).sqrt()), self.err_spec, violations.clone()),
            BoundReport::new(
                "gks_rrqr_frobenius",
                self.ctx.guard((tail * tail + sk1 * sk1 * growth).sqrt()),
                self.err_frob,
                violations,
            ),
        ]
    }

    /// Perturbation analysis of an RGKS skeleton against the randomized
    /// estimate `v_hat` it was selected from.
    pub fn rgks_perturbation(&self, v_hat: &Matrix) -> Result<RgksReport> {
        let k = self.k();
        let ctx = self.ctx;
        let v_k = ctx.v_k(k);
        check_orthonormal(v_hat)?;
        let phi = self.angles()?;
        let phi_hat = angles_to_index_subspace(v_hat, &self.j)?;
        let theta = principal_angles(&v_k, v_hat)?;
        let (phi_max, phi_hat_max, theta_max) = (phi.max_angle(), phi_hat.max_angle(), theta.max_angle());
        let mut base = ctx.rank_hypotheses(k);
        let sk1 = ctx.s().get(k).copied().unwrap_or(0.0);
        let tail = tail_frobenius(ctx.s(), k);
        let combined = phi_hat_max + theta_max;
        let mut vacuous = base.clone();
        if combined >= std::f64::consts::FRAC_PI_2 {
            vacuous.push("phi_hat_max + theta_max >= pi/2".into());
        }
        let sec_combined = 1.0 / combined.cos();
        let tan_combined = combined.tan();

        let triangle = BoundReport::new(
            "angle_triangle",
            ctx.guard(sec_combined),
            phi.sec_max(),
            vacuous.clone(),
        );
        let spectral = BoundReport::new("rgks_spectral", ctx.guard(sk1 * sec_combined), self.err_spec, vacuous.clone());
        let frobenius = BoundReport::new(
            "rgks_frobenius",
            ctx.guard((tail * tail + k as f64 * sk1 * sk1 * tan_combined * tan_combined).sqrt()),
            self.err_frob,
            vacuous,
        );

        let mut smaller_skeleton = Vec::new();
        for t in 1..k {
            let keep = k - t;
            let theta_sub = principal_angles(&ctx.v_k(keep), &v_hat.columns(0..keep))?.max_angle();
            let mut v = ctx.rank_hypotheses(keep);
            let stated = phi_hat_max + theta_sub;
            if stated >= std::f64::consts::FRAC_PI_2 {
                v.push("phi_hat_max + theta_max^(k-t) >= pi/2".into());
            }
            let value = ctx.guard(ctx.s()[keep] / stated.cos());
            let as_stated = BoundReport::new("rgks_smaller_skeleton", value, self.err_spec, v);

            let subset = Self::greedy_subset(v_hat, &self.j, keep)?;
            let phi_hat_i = angles_to_index_subspace(&v_hat.columns(0..keep), &subset)?.max_angle();
            let mut w = ctx.rank_hypotheses(keep);
            if phi_hat_i + theta_sub >= std::f64::consts::FRAC_PI_2 {
                w.push("phi_hat^(I) + theta_max^(k-t) >= pi/2".into());
            }
            let value = ctx.guard(ctx.s()[keep] / (phi_hat_i + theta_sub).cos());
            let via_subset = BoundReport::new("rgks_smaller_skeleton_subset", value, self.err_spec, w);
            smaller_skeleton.push(SmallerSkeleton { t, theta_max: theta_sub, as_stated, via_subset });
        }

        let mu = d_row_upper(&v_k, v_hat)?;
        let c_k = coherence(&v_k);
        let cos_hat = phi_hat.min_cosine();
        let kf = k as f64;
        if phi_hat.min_cosine() <= 0.0 {
            base.push("phi_hat_max = pi/2".into());
        }
        let rowwise = RowwiseEstimate {
            mu_upper: mu,
            coherence: c_k,
            cos_phi_max: phi.min_cosine(),
            first_order: cos_hat - kf * c_k * mu / cos_hat,
            squared_lower: cos_hat * cos_hat - 2.0 * kf * c_k * mu - kf * mu * mu,
        };
        Ok(RgksReport { phi_max, phi_hat_max, theta_max, triangle, spectral, frobenius, smaller_skeleton, rowwise })
    }
}

/// The smaller-skeleton bound at one `t`.
#[derive(Clone, Debug)]
pub struct SmallerSkeleton {
    pub t: usize,
    /// Largest angle between the exact and estimated leading `k − t` subspaces.
    pub theta_max: f64,
    /// `σ_{k−t+1}·sec(φ̂_max + θ_max^(k−t))`.
    pub as_stated: BoundReport,
    /// The same with `φ̂_max` replaced by the angle for a greedy `I ⊆ J`,
    /// which follows from the subset-angle bound without further steps.
    pub via_subset: BoundReport,
}

/// Row-wise perturbation estimate for `cos φ_max`.
#[derive(Clone, Debug)]
pub struct RowwiseEstimate {
    /// Procrustes upper bound on the row-wise distance `μ`.
    pub mu_upper: f64,
    /// Coherence of the exact leading subspace.
    pub coherence: f64,
    pub cos_phi_max: f64,
    /// `cos φ̂_max − k·c_k·μ / cos φ̂_max`, accurate to `O(μ²)`.
    pub first_order: f64,
    /// `cos²φ̂_max − 2k·c_k·μ − k·μ²`, a rigorous lower bound on `cos²φ_max`.
    pub squared_lower: f64,
}

#[derive(Clone, Debug)]
pub struct RgksReport {
    pub phi_max: f64,
    pub phi_hat_max: f64,
    pub theta_max: f64,
    /// `sec φ_max ≤ sec(φ̂_max + θ_max)`, i.e. `cos φ_max ≥ cos(φ̂_max + θ_max)`.
    pub triangle: BoundReport,
    pub spectral: BoundReport,
    pub frobenius: BoundReport,
    pub smaller_skeleton: Vec<SmallerSkeleton>,
    pub rowwise: RowwiseEstimate,
}

impl RgksReport {
    /// Reports covered by the validity guarantee.
    pub fn reports(&self) -> Vec<&BoundReport> {
        let mut v = vec![&self.triangle, &self.spectral, &self.frobenius];
        for s in &self.smaller_skeleton {
            v.push(&s.as_stated);
            v.push(&s.via_subset);
        }
        v
    }
}

/// `1/c_k ≤ sec φ_max`, and `sec φ_max ≤ 1/√(1 − Σ_{j∈J}(1 − ℓ_j²))` when
/// `Σ_{j∈J} ℓ_j² ≥ k − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecantEnvelope {
    pub lower: f64,
    pub upper: Option<f64>,
}

pub fn coherence_secant_envelope(v_k: &Matrix, j: &[usize]) -> Result<SecantEnvelope> {
    let (n, k) = v_k.shape();
    validate_index_set(j, n)?;
    if j.len() != k {
        return Err(Error::InvalidIndexSet(format!("expected {k} indices, got {}", j.len())));
    }
    let l = leverage_scores(v_k);
    let c_k = l.iter().copied().fold(0.0, f64::max);
    let mass: f64 = j.iter().map(|&i| l[i] * l[i]).sum();
    let upper = if mass >= k as f64 - 1.0 {
        let deficit: f64 = j.iter().map(|&i| 1.0 - l[i] * l[i]).sum();
        let d = 1.0 - deficit;
        Some(if d > 0.0 { 1.0 / d.sqrt() } else { f64::INFINITY })
    } else {
        None
    };
    Ok(SecantEnvelope { lower: 1.0 / c_k, upper })
}

/// `‖E‖₂ ≤ σ_{k+1}·sec φ_max` for the ID of `a` on `j`.
pub fn spectral_secant_bound(a: &Matrix, j: &[usize]) -> Result<BoundReport> {
    BoundContext::new(a.clone())?.instance(j)?.spectral_secant()
}

/// `‖E‖_F ≤ ‖Σ_⊥‖_F·√(1 + r_k⁻¹·Σ tan²φᵢ)` for the ID of `a` on `j`.
pub fn frobenius_stablerank_bound(a: &Matrix, j: &[usize]) -> Result<BoundReport> {
    BoundContext::new(a.clone())?.instance(j)?.frobenius_stable_rank()
}

/// `‖E‖₂ ≤ σ_{k+1}·κ(E, k+1)` for `E = A − P_W·A`.
pub fn condition_number_bound(a: &Matrix, w_basis: &Matrix, k: usize) -> Result<(BoundReport, ResidualStats)> {
    BoundContext::new(a.clone())?.condition_number_bound_for_basis(w_basis, k)
}

/// Subset-angle bound for the ID of `a` on `j`, dropping `t` skeleton
/// columns from the comparison.
pub fn subset_angle_bound(a: &Matrix, j: &[usize], t: usize) -> Result<BoundReport> {
    BoundContext::new(a.clone())?.instance(j)?.subset_angle(t)
}

/// Gu-Eisenstat GKS bounds (spectral, Frobenius) for the ID of `a` on `j`.
pub fn gks_rrqr_bounds(a: &Matrix, j: &[usize], f: f64) -> Result<[BoundReport; 2]> {
    Ok(BoundContext::new(a.clone())?.instance(j)?.gks_rrqr(f))
}

/// Perturbation bounds for an RGKS run described by its skeleton and the
/// randomized SVD it pivoted on.
pub fn rgks_perturbation_bounds(a: &Matrix, j: &[usize], trace: &RsvdResult) -> Result<RgksReport> {
    BoundContext::new(a.clone())?.instance(j)?.rgks_perturbation(&trace.v)
}
