//! Coupled CPD through a joint eigenvalue decomposition.
//!
//! After compressing the shared second mode to `R` columns, each uniform
//! subarray of each receive array yields one `R×R` target matrix
//! `G = B·Z·B⁻¹`, where `Z` holds the subarray's Vandermonde generators.
//! All target matrices share the eigenbasis `B`. We find `B` from a generalized
//! eigenproblem on two random mixtures, polish it by minimizing the
//! off-diagonal energy of `B⁻¹·G·B`, and finally peel off `A^(m)` and `C^(m)`
//! column by column with rank-1 approximations.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{ArrayLayout, ReceiveArrayLayout, SubarrayId};
use crate::linalg::{eig, inverse, offdiag_energy, pinv_solve, rcond};
use crate::scene::ObservationSet;
use crate::tensor::{joint_compress_mode2, mode2_unfold, rank1_approx, subtensor_rows, Tensor3};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Shift blocks with a larger 2-norm condition number are treated as rank
/// deficient.
pub const MAX_CONDITION: f64 = 1e10;
pub const MAX_REFINE_ITERS: usize = 200;
pub const REFINE_REL_TOL: f64 = 1e-12;
const GEVD_RETRIES: usize = 10;
const PENCIL_RCOND: f64 = 1e-12;

/// Outcome of the identifiability check `min(T, J) ≥ R` and `(I′−1)·K ≥ R`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkingConditions {
    pub min_tj: usize,
    /// `(I′−1)·K`.
    pub shift_rows: usize,
    pub longest_subarray: usize,
    pub rank: usize,
    pub pass: bool,
}

impl std::fmt::Display for WorkingConditions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "min(T,J) = {} {} {}, (I'-1)K = {} {} {} -> {}",
            self.min_tj,
            if self.min_tj >= self.rank { ">=" } else { "<" },
            self.rank,
            self.shift_rows,
            if self.shift_rows >= self.rank { ">=" } else { "<" },
            self.rank,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

pub fn check_working_conditions(
    samples: usize,
    transmit_elements: usize,
    pulses: usize,
    rank: usize,
    subarray_lengths: &[usize],
) -> WorkingConditions {
    let longest = subarray_lengths.iter().copied().max().unwrap_or(0);
    let min_tj = samples.min(transmit_elements);
    let shift_rows = longest.saturating_sub(1) * pulses;
    WorkingConditions {
        min_tj,
        shift_rows,
        longest_subarray: longest,
        rank,
        pass: min_tj >= rank && shift_rows >= rank,
    }
}

/// Which array and subarray a target matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TargetTag {
    pub array: usize,
    pub subarray: SubarrayId,
}

impl std::fmt::Display for TargetTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "m{}:{}", self.array, self.subarray)
    }
}

#[derive(Debug, Clone)]
pub struct SkippedTarget {
    pub tag: TargetTag,
    pub reason: String,
}

/// The stacked target matrices `G'_w`, `w = 4m + v` for the usable ones.
#[derive(Debug, Clone, Default)]
pub struct TargetMatrixSet {
    pub mats: Vec<CMatrix>,
    pub tags: Vec<TargetTag>,
    /// Condition number of each matrix's pseudo-inverted shift block.
    pub conditioning: Vec<f64>,
    pub skipped: Vec<SkippedTarget>,
}

impl TargetMatrixSet {
    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.mats.first().map_or(0, |m| m.nrows())
    }

    /// `Σ_w ‖offdiag(B⁻¹ G_w B)‖² / Σ_w ‖G_w‖²`.
    pub fn offdiag_residual(&self, b: &CMatrix) -> Result<f64> {
        let b_inv = inverse(b)?;
        Ok(self.offdiag_residual_with(b, &b_inv))
    }

    fn offdiag_residual_with(&self, b: &CMatrix, b_inv: &CMatrix) -> f64 {
        let total: f64 = self.mats.iter().map(|g| g.norm_squared()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let off: f64 = self
            .mats
            .iter()
            .map(|g| offdiag_energy(&(b_inv * g * b)))
            .sum();
        off / total
    }
}

/// Result of the joint eigenvalue decomposition.
#[derive(Debug, Clone)]
pub struct JevdSolution {
    /// Common eigenbasis, unit-norm columns.
    pub b: CMatrix,
    /// Row `w` is `diag(B⁻¹ G_w B)`.
    pub f: CMatrix,
    pub offdiag_residual: f64,
    pub initial_residual: f64,
    pub iterations: usize,
}

/// Coupled factors `A^(m)`, shared `B`, `C^(m)`.
#[derive(Debug, Clone)]
pub struct CcpdFactors {
    pub a: Vec<CMatrix>,
    pub b: CMatrix,
    pub c: Vec<CMatrix>,
}

impl CcpdFactors {
    pub fn rank(&self) -> usize {
        self.b.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.rank();
        if self.a.len() != self.c.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} A factors vs {} C factors",
                self.a.len(),
                self.c.len()
            )));
        }
        if self.a.iter().chain(&self.c).any(|m| m.ncols() != r) {
            return Err(Error::ShapeMismatch("factor column counts differ".into()));
        }
        Ok(())
    }
}

/// `(M1† M2)ᵀ` where `M1`, `M2` drop the last and first sensor block of the
/// mode-2 unfolding. Returns the matrix and the condition number of `M1`.
pub fn build_target_matrix(t_sub: &Tensor3) -> Result<(CMatrix, f64)> {
    let (l, _, k) = t_sub.dims();
    if l < 2 {
        return Err(Error::InvalidArgument(format!(
            "shift invariance needs at least 2 sensors, got {l}"
        )));
    }
    let unfolded = mode2_unfold(t_sub);
    let rows = (l - 1) * k;
    let m1 = unfolded.rows(0, rows).into_owned();
    let m2 = unfolded.rows(k, rows).into_owned();
    if rows < unfolded.ncols() {
        return Err(Error::RankDeficient { cond: f64::INFINITY });
    }
    let (x, cond) = pinv_solve(&m1, &m2);
    // NaN fails the check as well
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(Error::RankDeficient { cond });
    }
    Ok((x.transpose(), cond))
}

/// One target matrix per (array, subarray) that passes the rank check.
pub fn build_all_targets(
    compressed: &[Tensor3],
    layouts: &[ReceiveArrayLayout],
    rank: usize,
) -> Result<TargetMatrixSet> {
    if compressed.len() != layouts.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} tensors for {} layouts",
            compressed.len(),
            layouts.len()
        )));
    }
    let mut set = TargetMatrixSet::default();
    for (m, (t, layout)) in compressed.iter().zip(layouts).enumerate() {
        let (i, j, k) = t.dims();
        if j != rank {
            return Err(Error::ShapeMismatch(format!(
                "compressed tensor {m} has second dimension {j}, expected {rank}"
            )));
        }
        if i != layout.len() {
            return Err(Error::ShapeMismatch(format!(
                "tensor {m} has {i} sensors, layout has {}",
                layout.len()
            )));
        }
        for id in SubarrayId::ALL {
            let tag = TargetTag { array: m, subarray: id };
            let idx = layout.indices(id);
            if idx.len() < 2 {
                set.skipped.push(SkippedTarget {
                    tag,
                    reason: format!("subarray has {} element(s)", idx.len()),
                });
                continue;
            }
            if (idx.len() - 1) * k < rank {
                set.skipped.push(SkippedTarget {
                    tag,
                    reason: format!("(L-1)K = {} < R = {rank}", (idx.len() - 1) * k),
                });
                continue;
            }
            let sub = subtensor_rows(t, idx)?;
            match build_target_matrix(&sub) {
                Ok((g, cond)) => {
                    set.mats.push(g);
                    set.tags.push(tag);
                    set.conditioning.push(cond);
                }
                Err(Error::RankDeficient { cond }) => set.skipped.push(SkippedTarget {
                    tag,
                    reason: format!("shift block condition {cond:.3e}"),
                }),
                Err(e) => return Err(e),
            }
        }
    }
    if set.len() < 2 {
        return Err(Error::Unidentifiable { usable: set.len() });
    }
    Ok(set)
}

fn random_unit_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let w: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let nrm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    w.into_iter().map(|z| z / nrm).collect()
}

fn mix(mats: &[CMatrix], weights: &[C64]) -> CMatrix {
    let r = mats[0].nrows();
    mats.iter()
        .zip(weights)
        .fold(CMatrix::zeros(r, r), |acc, (g, &w)| acc + g * w)
}

fn normalize_columns(b: &mut CMatrix) {
    for mut col in b.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col.unscale_mut(n);
        }
    }
}

/// Algebraic initializer: eigenvectors of the pencil `(H₁, H₂)` built from two
/// random unit-norm mixtures of all target matrices.
pub fn gevd_init(tm: &TargetMatrixSet, rng: &mut ChaCha8Rng) -> Result<CMatrix> {
    if tm.is_empty() {
        return Err(Error::Unidentifiable { usable: 0 });
    }
    let r = tm.rank();
    if r == 1 {
        return Ok(CMatrix::from_element(1, 1, C64::new(1.0, 0.0)));
    }
    if tm.len() == 1 {
        let (_, mut b) = eig(&tm.mats[0])?;
        normalize_columns(&mut b);
        return Ok(b);
    }
    for _ in 0..GEVD_RETRIES {
        let h1 = mix(&tm.mats, &random_unit_weights(rng, tm.len()));
        let h2 = mix(&tm.mats, &random_unit_weights(rng, tm.len()));
        if rcond(&h2) < PENCIL_RCOND {
            continue;
        }
        let Some(pencil) = h2.lu().solve(&h1) else {
            continue;
        };
        let (_, mut b) = eig(&pencil)?;
        normalize_columns(&mut b);
        if rcond(&b) < PENCIL_RCOND || b.iter().any(|z| !z.is_finite()) {
            // defective pencil for this mixture
            continue;
        }
        return Ok(b);
    }
    Err(Error::Gevd(format!(
        "no regular, diagonalizable pencil after {GEVD_RETRIES} mixtures"
    )))
}

/// Joint diagonalizer of all target matrices: first-order corrections
/// `B ← B(I + E)` with `E` solving the linearized off-diagonal least squares
/// problem, accepted only when the normalized off-diagonal energy drops.
pub fn refine_joint_diag(tm: &TargetMatrixSet, b0: &CMatrix) -> Result<JevdSolution> {
    let r = b0.nrows();
    let mut b = b0.clone();
    normalize_columns(&mut b);
    let mut b_inv = inverse(&b)?;
    let initial = tm.offdiag_residual_with(&b, &b_inv);
    let mut residual = initial;
    let mut iterations = 0;

    while iterations < MAX_REFINE_ITERS && residual > 0.0 {
        let diag: Vec<CMatrix> = tm.mats.iter().map(|g| &b_inv * g * &b).collect();
        let mut e = CMatrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                if i == j {
                    continue;
                }
                let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
                for d in &diag {
                    let gap = d[(i, i)] - d[(j, j)];
                    num += gap.conj() * d[(i, j)];
                    den += gap.norm_sqr();
                }
                if den > 0.0 {
                    e[(i, j)] = -num / den;
                }
            }
        }

        let mut accepted = None;
        let mut step = 1.0;
        for _ in 0..30 {
            let mut cand = &b * (CMatrix::identity(r, r) + &e * C64::new(step, 0.0));
            normalize_columns(&mut cand);
            if let Some(cand_inv) = cand.clone().try_inverse() {
                let res = tm.offdiag_residual_with(&cand, &cand_inv);
                if res.is_finite() && res < residual {
                    accepted = Some((cand, cand_inv, res));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((nb, nb_inv, res)) = accepted else {
            break;
        };
        iterations += 1;
        let rel = (residual - res) / residual;
        b = nb;
        b_inv = nb_inv;
        residual = res;
        if rel < REFINE_REL_TOL {
            break;
        }
    }

    let f = CMatrix::from_fn(tm.len(), r, |w, col| {
        let d = &b_inv * &tm.mats[w] * &b;
        d[(col, col)]
    });
    Ok(JevdSolution {
        b,
        f,
        offdiag_residual: residual,
        initial_residual: initial,
        iterations,
    })
}

/// `A^(m)`, `C^(m)` from `T₂^(m)·B⁻ᵀ`: column `r` reshaped to `I×K` is a
/// rank-1 matrix `a_r c_rᵀ`. Each `a_r` is scaled to 1 at the origin element.
pub fn recover_factors(
    compressed: &[Tensor3],
    layouts: &[ReceiveArrayLayout],
    b: &CMatrix,
) -> Result<CcpdFactors> {
    if compressed.len() != layouts.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} tensors for {} layouts",
            compressed.len(),
            layouts.len()
        )));
    }
    let r = b.ncols();
    let b_inv_t = inverse(b)?.transpose();
    let mut a_all = Vec::with_capacity(compressed.len());
    let mut c_all = Vec::with_capacity(compressed.len());
    for (m, (t, layout)) in compressed.iter().zip(layouts).enumerate() {
        let (i, j, k) = t.dims();
        if j != r {
            return Err(Error::ShapeMismatch(format!(
                "compressed tensor {m} has second dimension {j}, B has {r} columns"
            )));
        }
        let w = mode2_unfold(t) * &b_inv_t;
        let origin = layout.origin_index();
        let mut a = CMatrix::zeros(i, r);
        let mut c = CMatrix::zeros(k, r);
        for col in 0..r {
            let omega = CMatrix::from_fn(i, k, |ii, kk| w[(ii * k + kk, col)]);
            let (mut u, mut v): (CVector, CVector) = rank1_approx(&omega).map_err(|e| match e {
                Error::ZeroMatrix => Error::UnobservedTarget { array: m, target: col },
                other => other,
            })?;
            let s = u[origin];
            if s.norm() == 0.0 {
                return Err(Error::UnobservedTarget { array: m, target: col });
            }
            u /= s;
            v *= s;
            a.set_column(col, &u);
            c.set_column(col, &v);
        }
        a_all.push(a);
        c_all.push(c);
    }
    Ok(CcpdFactors {
        a: a_all,
        b: b.clone(),
        c: c_all,
    })
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub rank: usize,
    /// Seeds the random pencil mixtures.
    pub seed: u64,
    /// Transmit element count for the working-condition report; the sample
    /// count is used when unknown.
    pub transmit_elements: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimings {
    pub compress: Duration,
    pub targets: Duration,
    pub jevd: Duration,
    pub factors: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.compress + self.targets + self.jevd + self.factors
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub conditions: WorkingConditions,
    pub warnings: Vec<String>,
    pub timings: StageTimings,
    pub targets: TargetMatrixSet,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// `B` lifted back to the `T`-dimensional sample space.
    pub factors: CcpdFactors,
    pub jevd: JevdSolution,
    pub diagnostics: Diagnostics,
}

/// Full decomposition: compress, build target matrices, joint EVD, factors.
pub fn solve(obs: &ObservationSet, layouts: &[ReceiveArrayLayout], config: &SolverConfig) -> Result<Solution> {
    let rank = config.rank;
    let first = obs
        .tensors
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty observation set".into()))?;
    let (_, samples, pulses) = first.dims();
    let lengths: Vec<usize> = layouts
        .iter()
        .flat_map(|l| SubarrayId::ALL.map(|id| l.indices(id).len()))
        .collect();
    let conditions = check_working_conditions(
        samples,
        config.transmit_elements.unwrap_or(samples),
        pulses,
        rank,
        &lengths,
    );
    let mut warnings = Vec::new();
    if !conditions.pass {
        let msg = format!("working conditions not met: {conditions}");
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut timings = StageTimings::default();
    let clock = Instant::now();
    let (compressed, basis) = joint_compress_mode2(&obs.tensors, rank)?;
    timings.compress = clock.elapsed();

    let clock = Instant::now();
    let targets = build_all_targets(&compressed, layouts, rank)?;
    timings.targets = clock.elapsed();
    for s in &targets.skipped {
        warnings.push(format!("skipped target matrix {}: {}", s.tag, s.reason));
    }

    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let b0 = gevd_init(&targets, &mut rng)?;
    let jevd = refine_joint_diag(&targets, &b0)?;
    timings.jevd = clock.elapsed();

    let clock = Instant::now();
    let mut factors = recover_factors(&compressed, layouts, &jevd.b)?;
    factors.b = basis.expand(&jevd.b);
    timings.factors = clock.elapsed();

    Ok(Solution {
        factors,
        jevd,
        diagnostics: Diagnostics {
            conditions,
            warnings,
            timings,
            targets,
        },
    })
}
