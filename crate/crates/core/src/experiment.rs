//! Seeded Monte-Carlo sweeps over algorithms, ranks and test matrices,
//! the exhaustive best-subset oracle, and the projector-error experiment.
//!
//! Every random draw is keyed on `(seed, matrix, k, trial)`, records are
//! sorted by `(k, algorithm, trial)` before emission, and the CSV therefore
//! does not depend on the number of worker threads.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bounds::{BoundContext, BoundReport};
use crate::error::{Error, Result};
use crate::geometry::{angles_to_index_subspace, coherence, d_row_upper, principal_angles, projector_difference, projector_distance, spectrum_stats};
use crate::id::{id_from_columns, lss, rgks_traced, rid, select_from_basis, LowRankApprox, Pivoter};
use crate::kv::{self, Section};
use crate::linalg::Svd;
use crate::matrix::Matrix;
use crate::sketch::{rsvd, RsvdConfig};
use crate::testgen::{build_test_matrix, calibrate_alpha, SubspaceKind, TestMatrix, TestMatrixSpec};

pub const CSV_VERSION_LINE: &str = "# skelet-csv v1";
pub const CSV_COLUMNS: [&str; 25] = [
    "trial", "algorithm", "n", "k", "p", "q", "alpha", "c_k", "gamma_k", "r_k", "err_spec", "err_frob",
    "subopt_spec", "subopt_frob", "phi_max", "phi_hat_max", "theta_max", "mu", "bound_thm41", "bound_thm52",
    "bound_thm54", "bound_gks_spec", "bound_gks_frob", "applicable_flags", "seed",
];
const QUANTILE_NOTE: &str =
    "# quantiles: nearest-rank over trials, q10 = x[ceil(0.1*T)], q90 = x[ceil(0.9*T)] of the sorted values; nan entries skipped";
/// Errors below this multiple of the matching norm of `A` count as zero
/// when forming suboptimality ratios.
pub const SUBOPT_FLOOR: f64 = 1e-12;
/// Largest subset count the oracle will enumerate.
pub const ORACLE_LIMIT: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Gks,
    Lss,
    Rgks,
    Rid,
    Rsvd,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Gks => "gks",
            Algorithm::Lss => "lss",
            Algorithm::Rgks => "rgks",
            Algorithm::Rid => "rid",
            Algorithm::Rsvd => "rsvd",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gks" => Algorithm::Gks,
            "lss" => Algorithm::Lss,
            "rgks" => Algorithm::Rgks,
            "rid" => Algorithm::Rid,
            "rsvd" => Algorithm::Rsvd,
            other => return Err(Error::Parse(format!("unknown algorithm `{other}`"))),
        })
    }
}

/// Oversampling rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PRule {
    Fixed(usize),
    /// `p = ⌈k/10⌉`.
    CeilTenth,
}

impl PRule {
    pub fn p(&self, k: usize) -> usize {
        match self {
            PRule::Fixed(p) => *p,
            PRule::CeilTenth => k.div_ceil(10),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    Spectral,
    Frobenius,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Outputs {
    pub bounds: bool,
    pub angles: bool,
}

/// One `[matrix]` block.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixEntry {
    pub spec: TestMatrixSpec,
    /// Calibrate `α` to this coherence before building.
    pub coherence_target: Option<f64>,
    /// Rank used for calibration; defaults to the first swept `k`.
    pub calibrate_k: Option<usize>,
    /// Zero the spectrum past this rank.
    pub rank: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub matrices: Vec<MatrixEntry>,
    pub algorithms: Vec<Algorithm>,
    pub ks: Vec<usize>,
    pub p_rule: PRule,
    pub q: usize,
    pub trials: usize,
    pub seed: u64,
    pub norms: Vec<Norm>,
    pub outputs: Outputs,
    pub pivoter: Pivoter,
}

/// Documentation of every config key, shown by the CLI.
pub const CONFIG_HELP: &str = "\
Sweep config: `key = value` lines, `#` comments, one or more [matrix] blocks.
Top level:
  algorithms = rsvd, gks, rgks, rid, lss   (comma list)
  k          = 10, 20                      (ranks to sweep)
  p          = ceil-k-over-10 | <integer>  (oversampling, default ceil-k-over-10)
  q          = <integer>                   (power iterations, default 0)
  trials     = <integer >= 1>              (default 100)
  seed       = <integer>                   (default 0)
  norms      = spectral, frobenius         (default both)
  outputs    = errors, bounds, angles      (errors always on; default errors, angles;
               projector-stats is accepted and served by projector-exp)
  pivoter    = golub-businger | gu-eisenstat (GKS/RGKS column selection)
  f          = <real > 1>                  (Gu-Eisenstat parameter, default 2)
[matrix] block:
  n = <size>, seed = <integer>, alpha = <0..1>
  subspace = mixed-hadamard-permutation | random-orthogonal | noisy-permutation | noisy-hadamard
  delta = <real>                           (noise level, default 0.1/sqrt(n))
  spectrum = staircase | geometric | flat-then-geometric | custom
  shelf_lengths, drop_factors              (staircase lists, default 16 and 10)
  rho, k0, values                          (geometric ratio, flat length, custom list)
  coherence_target = <real>                (calibrate alpha first)
  calibrate_k = <integer>                  (rank for calibration, default first k)
  rank = <integer>                         (zero the spectrum past this rank)";

const TOP_KEYS: &[&str] = &["algorithms", "k", "p", "q", "trials", "seed", "norms", "outputs", "pivoter", "f"];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let sections = kv::parse(text)?;
        let top = &sections[0];
        top.check_keys(TOP_KEYS)?;
        let algorithms = top.list::<Algorithm>("algorithms")?.ok_or_else(|| top.error("algorithms", "missing key `algorithms`"))?;
        let ks = top.list::<usize>("k")?.ok_or_else(|| top.error("k", "missing key `k`"))?;
        let p_rule = match top.get("p").map(|e| e.value.as_str()) {
            None | Some("ceil-k-over-10") => PRule::CeilTenth,
            Some(v) => PRule::Fixed(v.parse().map_err(|_| top.error("p", format!("bad oversampling `{v}`")))?),
        };
        let norms = match top.list::<String>("norms")? {
            None => vec![Norm::Spectral, Norm::Frobenius],
            Some(v) => v
                .iter()
                .map(|s| match s.as_str() {
                    "spectral" => Ok(Norm::Spectral),
                    "frobenius" => Ok(Norm::Frobenius),
                    other => Err(top.error("norms", format!("unknown norm `{other}`"))),
                })
                .collect::<Result<_>>()?,
        };
        let outputs = match top.list::<String>("outputs")? {
            None => Outputs { bounds: false, angles: true },
            Some(v) => {
                let mut o = Outputs::default();
                for s in &v {
                    match s.as_str() {
                        // Projector statistics come from `projector_error_experiment`.
                        "errors" | "projector-stats" => {}
                        "bounds" => o.bounds = true,
                        "angles" => o.angles = true,
                        other => return Err(top.error("outputs", format!("unknown output `{other}`"))),
                    }
                }
                o
            }
        };
        let f: f64 = top.value("f")?.unwrap_or(2.0);
        let pivoter = match top.get("pivoter").map(|e| e.value.as_str()) {
            None | Some("golub-businger") => Pivoter::GolubBusinger,
            Some("gu-eisenstat") => Pivoter::GuEisenstat { f },
            Some(other) => return Err(top.error("pivoter", format!("unknown pivoter `{other}`"))),
        };
        let mut matrices = Vec::new();
        for sec in &sections[1..] {
            if sec.name.as_deref() != Some("matrix") {
                return Err(Error::Config { line: sec.line, msg: format!("unknown section `{}`", sec.name.as_deref().unwrap_or("")) });
            }
            matrices.push(parse_matrix(sec)?);
        }
        let cfg = ExperimentConfig {
            matrices,
            algorithms,
            ks,
            p_rule,
            q: top.value("q")?.unwrap_or(0),
            trials: top.value("trials")?.unwrap_or(100),
            seed: top.value("seed")?.unwrap_or(0),
            norms,
            outputs,
            pivoter,
        };
        cfg.validate().map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::Config { line: 0, msg: other.to_string() },
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.matrices.is_empty() || self.algorithms.is_empty() || self.ks.is_empty() {
            return Err(Error::InvalidParameter("need at least one matrix, algorithm and k".into()));
        }
        if let Pivoter::GuEisenstat { f } = self.pivoter {
            if !(f > 1.0) {
                return Err(Error::InvalidParameter(format!("f must exceed 1, got {f}")));
            }
        }
        for m in &self.matrices {
            let n = m.spec.n;
            for &k in &self.ks {
                if k == 0 || k >= n {
                    return Err(Error::RankOutOfRange { k, lo: 1, hi: n - 1 });
                }
                if k + self.p_rule.p(k) > n {
                    return Err(Error::InvalidParameter(format!("k + p = {} exceeds n = {n}", k + self.p_rule.p(k))));
                }
            }
        }
        Ok(())
    }
}

fn parse_matrix(sec: &Section) -> Result<MatrixEntry> {
    let mut known: Vec<&str> = TestMatrixSpec::KEYS.to_vec();
    known.extend(["coherence_target", "calibrate_k", "rank"]);
    sec.check_keys(&known)?;
    Ok(MatrixEntry {
        spec: TestMatrixSpec::from_section(sec)?,
        coherence_target: sec.value("coherence_target")?,
        calibrate_k: sec.value("calibrate_k")?,
        rank: sec.value("rank")?,
    })
}

/// A built matrix with everything the trials share.
pub struct PreparedMatrix {
    pub entry: MatrixEntry,
    pub alpha: f64,
    pub ctx: BoundContext,
    pub description: String,
}

impl PreparedMatrix {
    pub fn prepare(entry: &MatrixEntry, default_k: usize) -> Result<Self> {
        let mut spec = entry.spec.clone();
        if let Some(target) = entry.coherence_target {
            if spec.subspace != SubspaceKind::MixedHadamardPermutation {
                return Err(Error::InvalidParameter("coherence_target needs the mixed subspace".into()));
            }
            let cal = calibrate_alpha(spec.n, entry.calibrate_k.unwrap_or(default_k), target, spec.seed)?;
            spec.alpha = cal.alpha;
        }
        let TestMatrix { a, u, mut s, v, .. } = build_test_matrix(&spec)?;
        let a = match entry.rank {
            Some(r) if r < s.len() => {
                s[r..].iter_mut().for_each(|x| *x = 0.0);
                u.scale_columns(&s).matmul_t(&v)
            }
            _ => a,
        };
        let description = spec.to_kv().lines().collect::<Vec<_>>().join(" ");
        let description = match entry.rank {
            Some(r) => format!("{description} rank = {r}"),
            None => description,
        };
        Ok(PreparedMatrix { entry: entry.clone(), alpha: spec.alpha, ctx: BoundContext::with_svd(a, Svd { u, s, v }), description })
    }
}

/// One evaluated bound column: `None` when not evaluated.
pub type BoundCell = Option<(&'static str, BoundReport)>;

#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub trial: usize,
    pub algorithm: Algorithm,
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub q: usize,
    pub alpha: f64,
    pub c_k: f64,
    pub gamma_k: f64,
    pub r_k: f64,
    pub err_spec: f64,
    pub err_frob: f64,
    pub subopt_spec: f64,
    pub subopt_frob: f64,
    pub phi_max: f64,
    pub phi_hat_max: f64,
    pub theta_max: f64,
    pub mu: f64,
    /// Spectral secant, Frobenius stable-rank, condition-number, and the two
    /// GKS-family bounds (Gu-Eisenstat for GKS, perturbation for RGKS).
    pub bounds: [BoundCell; 5],
    pub seed: u64,
    /// Not serialized: it would break byte-identical output.
    pub wall_time: Duration,
}

const BOUND_SLOTS: [&str; 5] = ["thm41", "thm52", "thm54", "gks_spec", "gks_frob"];

impl TrialRecord {
    pub fn flags(&self) -> String {
        self.bounds
            .iter()
            .zip(BOUND_SLOTS)
            .map(|(b, slot)| match b {
                None => format!("{slot}:-"),
                Some((name, r)) => format!("{name}:{}", u8::from(r.applicable)),
            })
            .collect::<Vec<_>>()
            .join(";")
    }

    fn numeric(&self) -> [f64; 16] {
        let b = |i: usize| self.bounds[i].as_ref().map_or(f64::NAN, |(_, r)| r.value);
        [
            self.c_k,
            self.gamma_k,
            self.r_k,
            self.err_spec,
            self.err_frob,
            self.subopt_spec,
            self.subopt_frob,
            self.phi_max,
            self.phi_hat_max,
            self.theta_max,
            self.mu,
            b(0),
            b(1),
            b(2),
            b(3),
            b(4),
        ]
    }
}

/// Deterministic 64-bit mixing for per-trial seeds.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

fn suboptimality(err: f64, optimal: f64, scale: f64) -> f64 {
    let floor = SUBOPT_FLOOR * scale;
    err.max(floor) / optimal.max(floor)
}

struct Trial<'a> {
    cfg: &'a ExperimentConfig,
    m: &'a PreparedMatrix,
    m_idx: usize,
    k: usize,
    algorithm: Algorithm,
    trial: usize,
}

impl Trial<'_> {
    fn run(&self) -> Result<TrialRecord> {
        let start = Instant::now();
        let (cfg, ctx, k) = (self.cfg, &self.m.ctx, self.k);
        let a = &ctx.a;
        let n = ctx.n();
        let p = cfg.p_rule.p(k);
        let seed = derive_seed(cfg.seed, &[self.m_idx as u64, k as u64, self.trial as u64]);
        let (gamma_k, r_k, tail_spec, tail_frob) = match spectrum_stats(ctx.s(), k) {
            Ok(st) => (st.gap, st.stable_rank, st.tail_spectral, st.tail_frobenius),
            // Exact rank k: the optimal error is zero.
            Err(Error::UndefinedStableRank) => (ctx.s()[k] / ctx.s()[k - 1], f64::NAN, 0.0, 0.0),
            Err(e) => return Err(e),
        };
        let v_k = ctx.v_k(k);
        let want_spec = cfg.norms.contains(&Norm::Spectral);
        let want_frob = cfg.norms.contains(&Norm::Frobenius);
        let (angles, bounds) = (cfg.outputs.angles, cfg.outputs.bounds);
        let mut rec = TrialRecord {
            trial: self.trial,
            algorithm: self.algorithm,
            n,
            k,
            p,
            q: cfg.q,
            alpha: self.m.alpha,
            c_k: coherence(&v_k),
            gamma_k,
            r_k,
            err_spec: f64::NAN,
            err_frob: f64::NAN,
            subopt_spec: f64::NAN,
            subopt_frob: f64::NAN,
            phi_max: f64::NAN,
            phi_hat_max: f64::NAN,
            theta_max: f64::NAN,
            mu: f64::NAN,
            bounds: Default::default(),
            seed,
            wall_time: Duration::ZERO,
        };
        let rsvd_cfg = RsvdConfig::new(k, p, cfg.q, seed);
        let f = match cfg.pivoter {
            Pivoter::GuEisenstat { f } => Some(f),
            Pivoter::GolubBusinger => None,
        };
        let residual = match self.algorithm {
            Algorithm::Rsvd | Algorithm::Lss => {
                let (approx, v_hat) = if self.algorithm == Algorithm::Rsvd {
                    let r = rsvd(a, &rsvd_cfg)?;
                    let v = r.v.clone();
                    (LowRankApprox::new(r.u.scale_columns(&r.s), r.v, None)?, Some(v))
                } else {
                    (lss(a, k, p, seed)?, None)
                };
                if let (true, Some(v_hat)) = (angles, &v_hat) {
                    rec.theta_max = principal_angles(&v_k, v_hat)?.max_angle();
                    rec.mu = d_row_upper(&v_k, v_hat)?;
                }
                let e = approx.residual(a);
                if bounds {
                    rec.bounds[2] = Some(("thm54", ctx.condition_number_bound_for_residual(&e, k)?.0));
                }
                e
            }
            Algorithm::Gks | Algorithm::Rgks | Algorithm::Rid => {
                let (id, v_hat) = match self.algorithm {
                    Algorithm::Gks => (select_from_basis(a, &v_k, k, cfg.pivoter)?, None),
                    Algorithm::Rgks => {
                        let (id, trace) = rgks_traced(a, &rsvd_cfg, cfg.pivoter)?;
                        (id, Some(trace.v))
                    }
                    _ => (rid(a, k, p, seed)?, None),
                };
                if angles {
                    rec.phi_max = angles_to_index_subspace(&v_k, &id.skeleton)?.max_angle();
                    if let Some(v_hat) = &v_hat {
                        rec.phi_hat_max = angles_to_index_subspace(v_hat, &id.skeleton)?.max_angle();
                        rec.theta_max = principal_angles(&v_k, v_hat)?.max_angle();
                        rec.mu = d_row_upper(&v_k, v_hat)?;
                    }
                }
                let inst = ctx.instance_for(id);
                if bounds {
                    rec.bounds[0] = Some(("thm41", inst.spectral_secant()?));
                    rec.bounds[1] = Some(("thm52", inst.frobenius_stable_rank()?));
                    rec.bounds[2] = Some(("thm54", inst.condition_number()?.0));
                    match (self.algorithm, &v_hat, f) {
                        (Algorithm::Gks, _, Some(f)) => {
                            let [s, fr] = inst.gks_rrqr(f);
                            rec.bounds[3] = Some(("gks_spec", s));
                            rec.bounds[4] = Some(("gks_frob", fr));
                        }
                        (Algorithm::Rgks, Some(v_hat), _) => {
                            let r = inst.rgks_perturbation(v_hat)?;
                            rec.bounds[3] = Some(("rgks_spec", r.spectral));
                            rec.bounds[4] = Some(("rgks_frob", r.frobenius));
                        }
                        _ => {}
                    }
                }
                inst.residual
            }
        };
        if want_spec {
            rec.err_spec = residual.spectral_norm();
            rec.subopt_spec = suboptimality(rec.err_spec, tail_spec, ctx.s()[0]);
        }
        if want_frob {
            rec.err_frob = residual.frobenius_norm();
            rec.subopt_frob = suboptimality(rec.err_frob, tail_frob, a.frobenius_norm());
        }
        rec.wall_time = start.elapsed();
        Ok(rec)
    }
}

/// Records of one matrix, sorted by `(k, algorithm, trial)`.
pub struct MatrixBlock {
    pub description: String,
    pub alpha: f64,
    pub records: Vec<TrialRecord>,
}

pub struct SweepResult {
    pub seed: u64,
    pub blocks: Vec<MatrixBlock>,
}

/// Summary over the trials of one `(k, algorithm)` group.
#[derive(Clone, Debug)]
pub struct GroupSummary {
    pub k: usize,
    pub algorithm: Algorithm,
    pub mean: TrialRecord,
    pub q10: TrialRecord,
    pub q90: TrialRecord,
}

/// Nearest-rank quantile of the finite entries; NaN when there are none.
pub fn nearest_rank_quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

fn mean_skip_nan(values: &[f64]) -> f64 {
    let v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl MatrixBlock {
    pub fn group(&self, k: usize, algorithm: Algorithm) -> Vec<&TrialRecord> {
        self.records.iter().filter(|r| r.k == k && r.algorithm == algorithm).collect()
    }

    pub fn summaries(&self) -> Vec<GroupSummary> {
        let mut keys: Vec<(usize, Algorithm)> = self.records.iter().map(|r| (r.k, r.algorithm)).collect();
        keys.dedup();
        keys.into_iter()
            .map(|(k, algorithm)| {
                let group = self.group(k, algorithm);
                let cols: Vec<Vec<f64>> = (0..16).map(|c| group.iter().map(|r| r.numeric()[c]).collect()).collect();
                let make = |f: &dyn Fn(&[f64]) -> f64| {
                    let vals: Vec<f64> = cols.iter().map(|c| f(c)).collect();
                    let mut rec = group[0].clone();
                    rec.trial = usize::MAX;
                    [rec.c_k, rec.gamma_k, rec.r_k, rec.err_spec, rec.err_frob, rec.subopt_spec, rec.subopt_frob] =
                        [vals[0], vals[1], vals[2], vals[3], vals[4], vals[5], vals[6]];
                    [rec.phi_max, rec.phi_hat_max, rec.theta_max, rec.mu] = [vals[7], vals[8], vals[9], vals[10]];
                    for (i, slot) in rec.bounds.iter_mut().enumerate() {
                        if let Some((_, r)) = slot {
                            r.value = vals[11 + i];
                        }
                    }
                    rec.wall_time = Duration::ZERO;
                    rec
                };
                GroupSummary {
                    k,
                    algorithm,
                    mean: make(&mean_skip_nan),
                    q10: make(&|v| nearest_rank_quantile(v, 0.1)),
                    q90: make(&|v| nearest_rank_quantile(v, 0.9)),
                }
            })
            .collect()
    }

    /// Mean of `f` over the trials of a group.
    pub fn mean_of(&self, k: usize, algorithm: Algorithm, f: impl Fn(&TrialRecord) -> f64) -> f64 {
        let v: Vec<f64> = self.group(k, algorithm).into_iter().map(f).collect();
        mean_skip_nan(&v)
    }
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

fn write_row(out: &mut String, label: &str, r: &TrialRecord, flags: &str, seed: u64) {
    let b = |i: usize| r.bounds[i].as_ref().map_or(f64::NAN, |(_, x)| x.value);
    let cells = [
        label.to_string(),
        r.algorithm.name().to_string(),
        r.n.to_string(),
        r.k.to_string(),
        r.p.to_string(),
        r.q.to_string(),
        fmt_num(r.alpha),
        fmt_num(r.c_k),
        fmt_num(r.gamma_k),
        fmt_num(r.r_k),
        fmt_num(r.err_spec),
        fmt_num(r.err_frob),
        fmt_num(r.subopt_spec),
        fmt_num(r.subopt_frob),
        fmt_num(r.phi_max),
        fmt_num(r.phi_hat_max),
        fmt_num(r.theta_max),
        fmt_num(r.mu),
        fmt_num(b(0)),
        fmt_num(b(1)),
        fmt_num(b(2)),
        fmt_num(b(3)),
        fmt_num(b(4)),
        flags.to_string(),
        seed.to_string(),
    ];
    out.push_str(&cells.join(","));
    out.push('\n');
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_VERSION_LINE}");
        let _ = writeln!(out, "{QUANTILE_NOTE}");
        let _ = writeln!(out, "{}", CSV_COLUMNS.join(","));
        for (i, block) in self.blocks.iter().enumerate() {
            let _ = writeln!(out, "# matrix {i}: {}", block.description);
            let summaries = block.summaries();
            for s in &summaries {
                for r in block.group(s.k, s.algorithm) {
                    write_row(&mut out, &r.trial.to_string(), r, &r.flags(), r.seed);
                }
                for (label, r) in [("mean", &s.mean), ("q10", &s.q10), ("q90", &s.q90)] {
                    write_row(&mut out, label, r, "-", self.seed);
                }
            }
        }
        out
    }
}

/// Runs every `(matrix, k, algorithm, trial)` combination on `workers`
/// threads (rayon's default pool when `None`).
pub fn run_sweep(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<SweepResult> {
    cfg.validate()?;
    let work = || -> Result<SweepResult> {
        let prepared = cfg
            .matrices
            .par_iter()
            .map(|m| PreparedMatrix::prepare(m, cfg.ks[0]))
            .collect::<Result<Vec<_>>>()?;
        let mut algorithms = cfg.algorithms.clone();
        algorithms.sort();
        algorithms.dedup();
        let mut ks = cfg.ks.clone();
        ks.sort_unstable();
        ks.dedup();
        let mut blocks = Vec::with_capacity(prepared.len());
        for (m_idx, m) in prepared.iter().enumerate() {
            let mut tasks = Vec::new();
            for &k in &ks {
                for &algorithm in &algorithms {
                    for trial in 0..cfg.trials {
                        tasks.push(Trial { cfg, m, m_idx, k, algorithm, trial });
                    }
                }
            }
            let records = tasks.par_iter().map(Trial::run).collect::<Result<Vec<_>>>()?;
            log::info!("matrix {m_idx}: {} records", records.len());
            blocks.push(MatrixBlock { description: m.description.clone(), alpha: m.alpha, records });
        }
        Ok(SweepResult { seed: cfg.seed, blocks })
    };
    match workers {
        None => work(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work),
    }
}

/// Exhaustive optimum over skeleton sets for both norms.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub best_spectral: Vec<usize>,
    pub err_spectral: f64,
    pub best_frobenius: Vec<usize>,
    pub err_frobenius: f64,
    pub subsets: u64,
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Minimum ID error over all `k`-subsets of columns; ties keep the
/// lexicographically first subset.
pub fn oracle_best_subset(a: &Matrix, k: usize) -> Result<OracleResult> {
    a.ensure_finite()?;
    let n = a.cols();
    if k == 0 || k > n {
        return Err(Error::RankOutOfRange { k, lo: 1, hi: n });
    }
    let subsets = binomial(n as u64, k as u64);
    if subsets > ORACLE_LIMIT {
        return Err(Error::TooLarge(format!("C({n},{k}) = {subsets} subsets exceeds {ORACLE_LIMIT}")));
    }
    let mut c: Vec<usize> = (0..k).collect();
    let mut best = OracleResult {
        best_spectral: c.clone(),
        err_spectral: f64::INFINITY,
        best_frobenius: c.clone(),
        err_frobenius: f64::INFINITY,
        subsets,
    };
    loop {
        let e = id_from_columns(a, &c)?.residual(a);
        let (s, f) = (e.spectral_norm(), e.frobenius_norm());
        if s < best.err_spectral {
            best.err_spectral = s;
            best.best_spectral = c.clone();
        }
        if f < best.err_frobenius {
            best.err_frobenius = f;
            best.best_frobenius = c.clone();
        }
        if !next_combination(&mut c, n) {
            return Ok(best);
        }
    }
}

/// Subspace kinds of the projector experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectorKind {
    Random,
    NoisyHadamard,
    NoisyPermutation,
}

impl ProjectorKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProjectorKind::Random => "random",
            ProjectorKind::NoisyHadamard => "noisy-hadamard",
            ProjectorKind::NoisyPermutation => "noisy-permutation",
        }
    }

    fn subspace(&self, delta: Option<f64>) -> SubspaceKind {
        match self {
            ProjectorKind::Random => SubspaceKind::RandomOrthogonal,
            ProjectorKind::NoisyHadamard => SubspaceKind::NoisyHadamard { delta },
            ProjectorKind::NoisyPermutation => SubspaceKind::NoisyPermutation { delta },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorConfig {
    /// Spectrum, size and matrix seed; the subspace kind is overridden.
    pub matrix: TestMatrixSpec,
    pub kinds: Vec<ProjectorKind>,
    pub k: usize,
    pub p: usize,
    pub q: usize,
    pub trials: usize,
    pub seed: u64,
    pub delta: Option<f64>,
    /// Histogram bins over `log10|(P − P̂)_ij|` in `[−16, 0]`.
    pub bins: usize,
}

pub const PROJECTOR_HELP: &str = "\
Projector config: kinds = random, noisy-hadamard, noisy-permutation; k, p, q, trials, seed,
delta (noise level, default 0.1/sqrt(n)), bins (histogram bins, default 16) and the matrix
keys n, spectrum, rho, shelf_lengths, drop_factors, k0, values (matrix seed via matrix_seed).";

impl ProjectorConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let sections = kv::parse(text)?;
        if let Some(s) = sections.get(1) {
            return Err(Error::Config { line: s.line, msg: "projector configs take no sections".into() });
        }
        let top = &sections[0];
        top.check_keys(&[
            "kinds", "k", "p", "q", "trials", "seed", "delta", "bins", "n", "spectrum", "rho", "shelf_lengths",
            "drop_factors", "k0", "values", "matrix_seed",
        ])?;
        let kinds = top
            .list::<String>("kinds")?
            .unwrap_or_else(|| vec!["random".into(), "noisy-hadamard".into(), "noisy-permutation".into()])
            .iter()
            .map(|s| match s.as_str() {
                "random" => Ok(ProjectorKind::Random),
                "noisy-hadamard" => Ok(ProjectorKind::NoisyHadamard),
                "noisy-permutation" => Ok(ProjectorKind::NoisyPermutation),
                other => Err(top.error("kinds", format!("unknown kind `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let n: usize = top.require("n")?;
        let mut spec_text = format!("n = {n}\nsubspace = random-orthogonal\n");
        for key in ["spectrum", "rho", "shelf_lengths", "drop_factors", "k0", "values"] {
            if let Some(e) = top.get(key) {
                let _ = writeln!(spec_text, "{key} = {}", e.value);
            }
        }
        let _ = writeln!(spec_text, "seed = {}", top.value::<u64>("matrix_seed")?.unwrap_or(0));
        let matrix = TestMatrixSpec::from_kv(&spec_text)?;
        let cfg = ProjectorConfig {
            matrix,
            kinds,
            k: top.require("k")?,
            p: top.value("p")?.unwrap_or(5),
            q: top.value("q")?.unwrap_or(0),
            trials: top.value("trials")?.unwrap_or(100),
            seed: top.value("seed")?.unwrap_or(0),
            delta: top.value("delta")?,
            bins: top.value("bins")?.unwrap_or(16),
        };
        cfg.validate().map_err(|e| Error::Config { line: 0, msg: e.to_string() })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.matrix.n;
        if self.trials == 0 || self.bins == 0 {
            return Err(Error::InvalidParameter("trials and bins must be positive".into()));
        }
        if self.k == 0 || self.k + self.p > n {
            return Err(Error::InvalidParameter(format!("need 1 <= k and k + p <= n, got k = {}, p = {}", self.k, self.p)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorTrial {
    pub kind: ProjectorKind,
    pub trial: usize,
    pub sin_theta_max: f64,
    pub elementwise_max: f64,
    pub elementwise_median: f64,
    pub elementwise_mean: f64,
    pub histogram: Vec<u64>,
}

/// Bin edges of the element-wise error histogram.
pub fn histogram_edges(bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| -16.0 + 16.0 * i as f64 / bins as f64).collect()
}

fn histogram(diff: &Matrix, bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for &x in diff.as_slice() {
        let l = x.abs().log10();
        let pos = ((l + 16.0) / 16.0 * bins as f64).floor();
        let idx = if pos.is_nan() || pos < 0.0 { 0 } else { (pos as usize).min(bins - 1) };
        h[idx] += 1;
    }
    h
}

/// Runs RSVD trials on one matrix per kind and measures `P − P̂`.
pub fn projector_error_experiment(cfg: &ProjectorConfig) -> Result<Vec<ProjectorTrial>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (kind_idx, &kind) in cfg.kinds.iter().enumerate() {
        let spec = TestMatrixSpec { subspace: kind.subspace(cfg.delta), ..cfg.matrix.clone() };
        let t = build_test_matrix(&spec)?;
        let v_k = t.v.columns(0..cfg.k);
        let trials = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = derive_seed(cfg.seed, &[kind_idx as u64, trial as u64]);
                let r = rsvd(&t.a, &RsvdConfig::new(cfg.k, cfg.p, cfg.q, seed))?;
                let d = projector_distance(&v_k, &r.v)?;
                Ok(ProjectorTrial {
                    kind,
                    trial,
                    sin_theta_max: d.sin_theta_max,
                    elementwise_max: d.elementwise_max,
                    elementwise_median: d.elementwise_median,
                    elementwise_mean: d.elementwise_mean,
                    histogram: histogram(&projector_difference(&v_k, &r.v), cfg.bins),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(trials);
    }
    Ok(out)
}

pub fn projector_csv(cfg: &ProjectorConfig, trials: &[ProjectorTrial]) -> String {
    let mut out = String::new();
    let edges: Vec<String> = histogram_edges(cfg.bins).iter().map(|e| fmt_num(*e)).collect();
    let _ = writeln!(out, "{CSV_VERSION_LINE}");
    let _ = writeln!(out, "# projector error, n = {}, k = {}, p = {}, q = {}", cfg.matrix.n, cfg.k, cfg.p, cfg.q);
    let _ = writeln!(out, "# hist: counts of log10|(P - P_hat)_ij| per bin, edges {}", edges.join(" "));
    let _ = writeln!(out, "kind,trial,sin_theta_max,elem_max,elem_median,elem_mean,hist");
    for t in trials {
        let hist: Vec<String> = t.histogram.iter().map(u64::to_string).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t.kind.name(),
            t.trial,
            fmt_num(t.sin_theta_max),
            fmt_num(t.elementwise_max),
            fmt_num(t.elementwise_median),
            fmt_num(t.elementwise_mean),
            hist.join(";")
        );
    }
    for &kind in &cfg.kinds {
        let g: Vec<&ProjectorTrial> = trials.iter().filter(|t| t.kind == kind).collect();
        let mean = |f: fn(&ProjectorTrial) -> f64| mean_skip_nan(&g.iter().map(|t| f(t)).collect::<Vec<_>>());
        let _ = writeln!(
            out,
            "{},mean,{},{},{},{},-",
            kind.name(),
            fmt_num(mean(|t| t.sin_theta_max)),
            fmt_num(mean(|t| t.elementwise_max)),
            fmt_num(mean(|t| t.elementwise_median)),
            fmt_num(mean(|t| t.elementwise_mean)),
        );
    }
    out
}
