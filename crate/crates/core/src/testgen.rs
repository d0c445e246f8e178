//! Structured test matrices `A = U·diag(σ)·Vᵀ` with a prescribed spectrum
//! and a right singular basis of controlled coherence.
//!
//! The mixed subspace is the orthogonal polar factor of `(1−α)H + αP` for a
//! normalized Sylvester Hadamard matrix `H` and a seeded permutation `P`.
//! It is computed without forming the matrix: `V = M·(MᵀM)^{-1/2}`, with the
//! inverse square root applied column by column through Lanczos on
//! `MᵀM = ((1−α)² + α²)I + α(1−α)(HP + PᵀH)` and fast Walsh-Hadamard
//! transforms. This keeps calibration at `n = 4096` cheap.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::coherence;
use crate::kv::{self, Section};
use crate::linalg::{householder_qr, polar_orthogonal_factor, tridiagonal_eigen};
use crate::matrix::{axpy, dot, norm2, Matrix};
use crate::sketch::{gaussian_from, keyed_rng, Role};

/// Singular combinations are retried with a fresh permutation this many times.
pub const MAX_ATTEMPTS: usize = 5;
/// Coherence tolerance of [`calibrate_alpha`].
pub const CALIBRATION_TOL: f64 = 0.005;
/// Largest order for the dense polar-factor fallback.
const DENSE_POLAR_LIMIT: usize = 1024;
const MAX_KRYLOV: usize = 400;
const KRYLOV_RTOL: f64 = 1e-13;
/// `λ_min(MᵀM) ≤ SINGULAR_RTOL·λ_max` means `σ_min(M) ≤ 1e-12·σ_max(M)`.
const SINGULAR_RTOL: f64 = 1e-24;
const ORTHO_TOL: f64 = 1e-10;

/// Normalized Sylvester Hadamard matrix of order `n = 2^m`.
pub fn hadamard(n: usize) -> Result<Matrix> {
    if !n.is_power_of_two() {
        return Err(Error::NonDyadic(n));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(Matrix::from_fn(n, n, |i, j| if (i & j).count_ones() % 2 == 0 { scale } else { -scale }))
}

/// In-place product with the normalized Sylvester Hadamard matrix.
pub fn fwht(x: &mut [f64]) {
    let n = x.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in x.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
}

/// Uniform random permutation (Fisher-Yates).
pub fn random_permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Matrix of the permutation mapping `e_j` to `e_{perm[j]}`.
pub fn permutation_matrix(perm: &[usize]) -> Matrix {
    let n = perm.len();
    let mut p = Matrix::zeros(n, n);
    for (j, &i) in perm.iter().enumerate() {
        p[(i, j)] = 1.0;
    }
    p
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumProfile {
    /// `σ_i = ρ^{i−1}`.
    Geometric { rho: f64 },
    /// Flat shelves; shelf `s` sits a factor `drop_factors[s−1]` below shelf
    /// `s−1`. Both lists are cycled.
    Staircase { shelf_lengths: Vec<usize>, drop_factors: Vec<f64> },
    /// `k0` ones, then `ρ, ρ², …`.
    FlatThenGeometric { k0: usize, rho: f64 },
    /// Explicit values, normalized so `σ₁ = 1`.
    Custom(Vec<f64>),
}

impl Default for SpectrumProfile {
    fn default() -> Self {
        SpectrumProfile::default_staircase()
    }
}

impl SpectrumProfile {
    pub fn default_staircase() -> Self {
        SpectrumProfile::Staircase { shelf_lengths: vec![16], drop_factors: vec![10.0] }
    }

    pub fn default_geometric() -> Self {
        SpectrumProfile::Geometric { rho: 0.85 }
    }

    /// The `n` singular values, descending with `σ₁ = 1`.
    pub fn values(&self, n: usize) -> Result<Vec<f64>> {
        let s: Vec<f64> = match self {
            SpectrumProfile::Geometric { rho } => {
                check_rho(*rho)?;
                (0..n).map(|i| rho.powi(i as i32)).collect()
            }
            SpectrumProfile::Staircase { shelf_lengths, drop_factors } => {
                if shelf_lengths.is_empty() || shelf_lengths.contains(&0) {
                    return Err(Error::InvalidParameter("shelf lengths must be positive".into()));
                }
                if drop_factors.is_empty() || drop_factors.iter().any(|&d| !(d >= 1.0 && d.is_finite())) {
                    return Err(Error::InvalidParameter("drop factors must be finite and ≥ 1".into()));
                }
                let mut out = Vec::with_capacity(n);
                let mut level = 1.0;
                let mut shelf = 0;
                while out.len() < n {
                    if shelf > 0 {
                        level /= drop_factors[(shelf - 1) % drop_factors.len()];
                    }
                    let len = shelf_lengths[shelf % shelf_lengths.len()];
                    out.extend(std::iter::repeat_n(level, len.min(n - out.len())));
                    shelf += 1;
                }
                out
            }
            SpectrumProfile::FlatThenGeometric { k0, rho } => {
                check_rho(*rho)?;
                (0..n).map(|i| if i < *k0 { 1.0 } else { rho.powi((i + 1 - k0) as i32) }).collect()
            }
            SpectrumProfile::Custom(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: format!("{n} values"), got: v.len().to_string() });
                }
                if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) || v.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::InvalidParameter("custom spectrum must be positive and non-increasing".into()));
                }
                v.iter().map(|x| x / v[0]).collect()
            }
        };
        if s.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidParameter("spectrum underflows to zero".into()));
        }
        Ok(s)
    }

    /// Ranks `k` where a staircase shelf ends (`σ_{k+1} < σ_k`), below `n`.
    pub fn shelf_ends(&self, n: usize) -> Result<Vec<usize>> {
        let s = self.values(n)?;
        Ok((1..n).filter(|&k| s[k] < s[k - 1]).collect())
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("rho must lie in (0,1], got {rho}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SubspaceKind {
    MixedHadamardPermutation,
    RandomOrthogonal,
    /// Polar factor of a random permutation plus `δ·G`; `None` means `0.1/√n`.
    NoisyPermutation { delta: Option<f64> },
    /// Polar factor of `H + δ·G`; `None` means `0.1/√n`.
    NoisyHadamard { delta: Option<f64> },
}

impl SubspaceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SubspaceKind::MixedHadamardPermutation => "mixed-hadamard-permutation",
            SubspaceKind::RandomOrthogonal => "random-orthogonal",
            SubspaceKind::NoisyPermutation { .. } => "noisy-permutation",
            SubspaceKind::NoisyHadamard { .. } => "noisy-hadamard",
        }
    }

    fn delta(&self) -> Option<f64> {
        match self {
            SubspaceKind::NoisyPermutation { delta } | SubspaceKind::NoisyHadamard { delta } => *delta,
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestMatrixSpec {
    pub n: usize,
    pub spectrum: SpectrumProfile,
    pub alpha: f64,
    pub subspace: SubspaceKind,
    pub seed: u64,
}

/// `A` together with its exact factors.
#[derive(Clone, Debug)]
pub struct TestMatrix {
    pub a: Matrix,
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
    /// Permutation draws used (1 unless a singular combination was retried).
    pub attempts: usize,
}

impl TestMatrix {
    pub fn into_parts(self) -> (Matrix, Matrix, Vec<f64>, Matrix) {
        (self.a, self.u, self.s, self.v)
    }
}

impl TestMatrixSpec {
    /// Keys understood by [`TestMatrixSpec::from_section`].
    pub const KEYS: &'static [&'static str] =
        &["n", "seed", "alpha", "subspace", "delta", "spectrum", "rho", "shelf_lengths", "drop_factors", "k0", "values"];

    pub fn new(n: usize, spectrum: SpectrumProfile, alpha: f64, subspace: SubspaceKind, seed: u64) -> Self {
        TestMatrixSpec { n, spectrum, alpha, subspace, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0,1], got {}", self.alpha)));
        }
        let dyadic = matches!(self.subspace, SubspaceKind::MixedHadamardPermutation | SubspaceKind::NoisyHadamard { .. });
        if dyadic && !self.n.is_power_of_two() {
            return Err(Error::NonDyadic(self.n));
        }
        if let Some(d) = self.subspace.delta() {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::InvalidParameter(format!("delta must be finite and ≥ 0, got {d}")));
            }
        }
        self.spectrum.values(self.n).map(|_| ())
    }

    /// Flat `key = value` serialization.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let join = |xs: &[String]| xs.join(", ");
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "subspace = {}", self.subspace.name());
        if let Some(d) = self.subspace.delta() {
            let _ = writeln!(out, "delta = {d}");
        }
        match &self.spectrum {
            SpectrumProfile::Geometric { rho } => {
                let _ = writeln!(out, "spectrum = geometric\nrho = {rho}");
            }
            SpectrumProfile::Staircase { shelf_lengths, drop_factors } => {
                let l: Vec<String> = shelf_lengths.iter().map(|x| x.to_string()).collect();
                let d: Vec<String> = drop_factors.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "spectrum = staircase\nshelf_lengths = {}\ndrop_factors = {}", join(&l), join(&d));
            }
            SpectrumProfile::FlatThenGeometric { k0, rho } => {
                let _ = writeln!(out, "spectrum = flat-then-geometric\nk0 = {k0}\nrho = {rho}");
            }
            SpectrumProfile::Custom(v) => {
                let v: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "spectrum = custom\nvalues = {}", join(&v));
            }
        }
        out
    }

    /// Parses the spec keys of a section; other keys are left to the caller.
    pub fn from_section(sec: &Section) -> Result<Self> {
        let n: usize = sec.require("n")?;
        let seed: u64 = sec.value("seed")?.unwrap_or(0);
        let alpha: f64 = sec.value("alpha")?.unwrap_or(0.0);
        let delta: Option<f64> = sec.value("delta")?;
        let subspace = match sec.get("subspace").map(|e| e.value.as_str()).unwrap_or("mixed-hadamard-permutation") {
            "mixed-hadamard-permutation" => SubspaceKind::MixedHadamardPermutation,
            "random-orthogonal" => SubspaceKind::RandomOrthogonal,
            "noisy-permutation" => SubspaceKind::NoisyPermutation { delta },
            "noisy-hadamard" => SubspaceKind::NoisyHadamard { delta },
            other => return Err(sec.error("subspace", format!("unknown subspace kind `{other}`"))),
        };
        let spectrum = match sec.get("spectrum").map(|e| e.value.as_str()).unwrap_or("staircase") {
            "geometric" => SpectrumProfile::Geometric { rho: sec.value("rho")?.unwrap_or(0.85) },
            "staircase" => SpectrumProfile::Staircase {
                shelf_lengths: sec.list("shelf_lengths")?.unwrap_or_else(|| vec![16]),
                drop_factors: sec.list("drop_factors")?.unwrap_or_else(|| vec![10.0]),
            },
            "flat-then-geometric" => SpectrumProfile::FlatThenGeometric { k0: sec.require("k0")?, rho: sec.value("rho")?.unwrap_or(0.85) },
            "custom" => SpectrumProfile::Custom(sec.list("values")?.ok_or_else(|| sec.error("values", "custom spectrum needs `values`"))?),
            other => return Err(sec.error("spectrum", format!("unknown spectrum `{other}`"))),
        };
        let spec = TestMatrixSpec { n, spectrum, alpha, subspace, seed };
        spec.validate().map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::Config { line: sec.line, msg: other.to_string() },
        })?;
        Ok(spec)
    }

    /// Parses a standalone block, rejecting unknown keys.
    pub fn from_kv(text: &str) -> Result<Self> {
        let sections = kv::parse(text)?;
        let sec = sections
            .iter()
            .find(|s| !s.entries.is_empty())
            .ok_or_else(|| Error::Config { line: 0, msg: "empty matrix spec".into() })?;
        sec.check_keys(Self::KEYS)?;
        Self::from_section(sec)
    }
}

/// `M = (1−α)H + αP` as an operator.
struct MixedOperator {
    alpha: f64,
    perm: Vec<usize>,
}

impl MixedOperator {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        fwht(&mut y);
        y.iter_mut().for_each(|v| *v *= 1.0 - self.alpha);
        for (j, &i) in self.perm.iter().enumerate() {
            y[i] += self.alpha * x[j];
        }
        y
    }

    fn apply_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        fwht(&mut y);
        y.iter_mut().for_each(|v| *v *= 1.0 - self.alpha);
        for (j, &i) in self.perm.iter().enumerate() {
            y[j] += self.alpha * x[i];
        }
        y
    }

    /// `M·(MᵀM)^{-1/2}·e_j`, column `j` of the polar factor.
    fn polar_column(&self, j: usize) -> Result<Vec<f64>> {
        let n = self.perm.len();
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let y = inv_sqrt_lanczos(n, |x| self.apply_t(&self.apply(x)), &e)?;
        Ok(self.apply(&y))
    }

    fn polar_columns(&self, k: usize) -> Result<Matrix> {
        let n = self.perm.len();
        let v = match (0..k).map(|j| self.polar_column(j)).collect::<Result<Vec<_>>>() {
            Ok(cols) => Matrix::from_columns(n, &cols),
            // Close to a singular combination some columns need more Krylov
            // steps than allowed; the dense factor of the same matrix is exact.
            Err(Error::NotConverged { .. }) if n <= DENSE_POLAR_LIMIT => {
                log::info!("mixed subspace: Lanczos stalled at alpha {}, using the dense polar factor", self.alpha);
                let m = hadamard(n)?.scale(1.0 - self.alpha).add(&permutation_matrix(&self.perm).scale(self.alpha));
                polar_orthogonal_factor(&m)?.columns(0..k)
            }
            Err(e) => return Err(e),
        };
        let defect = v.orthonormality_defect();
        if !(defect <= ORTHO_TOL) {
            return Err(Error::RankDeficient(format!("mixed polar factor lost orthogonality ({defect:.2e})")));
        }
        Ok(v)
    }
}

/// `G^{-1/2}·b` for symmetric positive definite `G` by Lanczos with full
/// reorthogonalization.
fn inv_sqrt_lanczos(dim: usize, apply: impl Fn(&[f64]) -> Vec<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; dim]);
    }
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|x| x / bnorm).collect()];
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut previous: Option<Vec<f64>> = None;
    let limit = dim.min(MAX_KRYLOV);
    for j in 0..limit {
        let mut w = apply(&basis[j]);
        alphas.push(dot(&w, &basis[j]));
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                axpy(-c, q, &mut w);
            }
        }
        let beta = norm2(&w);
        let scale = alphas.iter().chain(&betas).fold(0.0f64, |m, x| m.max(x.abs()));
        let invariant = beta <= 1e-14 * scale || j + 1 == dim;
        if invariant || (j + 1) % 4 == 0 || j + 1 == limit {
            let (vals, vecs) = tridiagonal_eigen(&alphas, &betas)?;
            let (lmax, lmin) = (vals[0], vals[vals.len() - 1]);
            if !(lmin > SINGULAR_RTOL * lmax) {
                return Err(Error::RankDeficient(format!("singular combination (Ritz ratio {:.2e})", lmin / lmax)));
            }
            let m = alphas.len();
            let coef: Vec<f64> = (0..m).map(|r| (0..m).map(|i| vecs[(r, i)] * vecs[(0, i)] / vals[i].sqrt()).sum()).collect();
            let settled = previous.as_ref().is_some_and(|p| {
                let diff: f64 = coef.iter().enumerate().map(|(i, c)| (c - p.get(i).copied().unwrap_or(0.0)).powi(2)).sum();
                diff.sqrt() <= KRYLOV_RTOL * norm2(&coef)
            });
            if invariant || settled {
                let mut out = vec![0.0; dim];
                for (c, q) in coef.iter().zip(&basis) {
                    axpy(bnorm * c, q, &mut out);
                }
                return Ok(out);
            }
            previous = Some(coef);
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    Err(Error::NotConverged { what: "Lanczos inverse square root", iterations: limit })
}

fn mixed_operator(n: usize, alpha: f64, seed: u64, attempt: usize) -> MixedOperator {
    let mut perm = random_permutation(n, &mut keyed_rng(seed, attempt as u64, Role::Permutation));
    // When det(PᵀH) = −1, PᵀH has eigenvalue −1 and the mixture is singular at
    // α = ½. Retries only happen near that point, so they draw the other parity.
    if attempt > 0 && n >= 2 && permutation_is_even(&perm) != (n >= 4) {
        perm.swap(0, 1);
    }
    MixedOperator { alpha, perm }
}

fn permutation_is_even(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    let mut cycles = 0;
    for start in 0..perm.len() {
        if !seen[start] {
            cycles += 1;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = perm[i];
            }
        }
    }
    (perm.len() - cycles) % 2 == 0
}

/// Dense `(1−α)H + αP` for the permutation drawn by `seed`.
pub fn mixed_combination(n: usize, alpha: f64, seed: u64) -> Result<Matrix> {
    let h = hadamard(n)?;
    let op = mixed_operator(n, alpha, seed, 0);
    Ok(h.scale(1.0 - alpha).add(&permutation_matrix(&op.perm).scale(alpha)))
}

/// Leading `k` columns of the mixed polar factor for `seed` (first draw).
pub fn mixed_subspace_columns(n: usize, alpha: f64, k: usize, seed: u64) -> Result<Matrix> {
    if !n.is_power_of_two() {
        return Err(Error::NonDyadic(n));
    }
    if k == 0 || k > n {
        return Err(Error::RankOutOfRange { k, lo: 1, hi: n });
    }
    mixed_operator(n, alpha, seed, 0).polar_columns(k)
}

fn mixed_subspace(n: usize, alpha: f64, seed: u64) -> Result<(Matrix, usize)> {
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        match mixed_operator(n, alpha, seed, attempt).polar_columns(n) {
            Ok(v) => return Ok((v, attempt + 1)),
            Err(e @ (Error::RankDeficient(_) | Error::NotConverged { .. })) => {
                log::warn!("mixed subspace attempt {attempt} failed: {e}");
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Builds `A = U·diag(σ)·Vᵀ` per `spec`.
pub fn build_test_matrix(spec: &TestMatrixSpec) -> Result<TestMatrix> {
    spec.validate()?;
    let n = spec.n;
    let s = spec.spectrum.values(n)?;
    let u = householder_qr(&gaussian_from(n, n, &mut keyed_rng(spec.seed, 0, Role::LeftFactor)))?.q;
    let default_delta = 0.1 / (n as f64).sqrt();
    let (v, attempts) = match spec.subspace {
        SubspaceKind::MixedHadamardPermutation => mixed_subspace(n, spec.alpha, spec.seed)?,
        SubspaceKind::RandomOrthogonal => {
            (householder_qr(&gaussian_from(n, n, &mut keyed_rng(spec.seed, 0, Role::Instance)))?.q, 1)
        }
        SubspaceKind::NoisyPermutation { delta } | SubspaceKind::NoisyHadamard { delta } => {
            let delta = delta.unwrap_or(default_delta);
            let mut out = None;
            for attempt in 0..MAX_ATTEMPTS {
                let x = match spec.subspace {
                    SubspaceKind::NoisyHadamard { .. } => hadamard(n)?,
                    _ => permutation_matrix(&random_permutation(n, &mut keyed_rng(spec.seed, attempt as u64, Role::Permutation))),
                };
                let g = gaussian_from(n, n, &mut keyed_rng(spec.seed, attempt as u64, Role::Noise));
                match polar_orthogonal_factor(&x.add(&g.scale(delta))) {
                    Ok(v) => {
                        out = Some((v, attempt + 1));
                        break;
                    }
                    Err(Error::RankDeficient(msg)) => log::warn!("noisy subspace attempt {attempt}: {msg}"),
                    Err(e) => return Err(e),
                }
            }
            out.ok_or_else(|| Error::RankDeficient("noisy subspace singular after retries".into()))?
        }
    };
    let a = u.scale_columns(&s).matmul_t(&v);
    Ok(TestMatrix { a, u, s, v, attempts })
}

/// Result of [`calibrate_alpha`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub alpha: f64,
    pub coherence: f64,
}

/// Measures at the midpoint of `(lo, hi)`, stepping aside when the
/// combination there is numerically singular (`α = ½` typically is).
fn measure_near(measure: &impl Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let mid = 0.5 * (lo + hi);
    let mut last = None;
    for step in [0.0, 0.02, -0.02, 0.05, -0.05, 0.1, -0.1] {
        let alpha = mid + step * (hi - lo);
        match measure(alpha) {
            Ok(c) => return Ok((alpha, c)),
            Err(e @ (Error::RankDeficient(_) | Error::NotConverged { .. })) => {
                log::debug!("calibration: alpha {alpha} unusable: {e}");
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one probe"))
}

/// Bisection on `α` so that `c_k` of the mixed subspace for `seed` is within
/// [`CALIBRATION_TOL`] of `target`.
pub fn calibrate_alpha(n: usize, k: usize, target: f64, seed: u64) -> Result<Calibration> {
    if !n.is_power_of_two() {
        return Err(Error::NonDyadic(n));
    }
    if k == 0 || k > n {
        return Err(Error::RankOutOfRange { k, lo: 1, hi: n });
    }
    let floor = (k as f64 / n as f64).sqrt();
    if !(target >= floor - CALIBRATION_TOL) {
        return Err(Error::InvalidParameter(format!("target {target} is below the Hadamard floor {floor:.4}")));
    }
    if target > 1.0 + CALIBRATION_TOL {
        return Err(Error::InvalidParameter(format!("target {target} exceeds 1")));
    }
    let measure = |alpha: f64| -> Result<f64> { Ok(coherence(&mixed_subspace_columns(n, alpha, k, seed)?)) };
    if target >= 1.0 - CALIBRATION_TOL {
        return Ok(Calibration { alpha: 1.0, coherence: measure(1.0)? });
    }
    if target <= floor + CALIBRATION_TOL {
        return Ok(Calibration { alpha: 0.0, coherence: measure(0.0)? });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let (mid, c) = measure_near(&measure, lo, hi)?;
        if (c - target).abs() <= CALIBRATION_TOL {
            return Ok(Calibration { alpha: mid, coherence: c });
        }
        if c < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NotConverged { what: "alpha calibration", iterations: 60 })
}
