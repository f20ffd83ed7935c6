//! Least-squares intersection of bearing lines, and target matching for
//! scoring.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::doa::DoaEstimate;
use crate::geometry::Direction;
use crate::{Error, Result, Vec3};

/// Smallest eigenvalue of the normal matrix below which the lines are
/// considered parallel.
pub const PARALLEL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingLine {
    pub anchor: Vec3,
    pub direction: Direction,
}

impl BearingLine {
    /// Squared distance from `p` to the line.
    pub fn distance_sqr(&self, p: &Vec3) -> f64 {
        let d = p - self.anchor;
        // the perpendicular component avoids cancellation at long range
        let v = self.direction.vector();
        (d - v * d.dot(v)).norm_squared()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationResult {
    pub position: Vec3,
    /// Sum of squared point-to-line distances at `position`.
    pub residual: f64,
    pub lines_used: usize,
}

/// Point minimizing the summed squared distance to all lines, from the normal
/// equations `Σ(I − v vᵀ) ξ = Σ(I − v vᵀ) p`.
pub fn fuse_lines(lines: &[BearingLine]) -> Result<LocalizationResult> {
    if lines.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 bearing lines, got {}",
            lines.len()
        )));
    }
    // work relative to the first anchor to keep the right-hand side small
    let origin = lines[0].anchor;
    let mut normal = Matrix3::zeros();
    let mut rhs = Vec3::zeros();
    for line in lines {
        let v = line.direction.vector();
        let proj = Matrix3::identity() - v * v.transpose();
        rhs += proj * (line.anchor - origin);
        normal += proj;
    }
    let eig = SymmetricEigen::new(normal);
    if eig.eigenvalues.min() < PARALLEL_TOLERANCE {
        return Err(Error::ParallelLines);
    }
    let inv = eig.eigenvectors
        * Matrix3::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x))
        * eig.eigenvectors.transpose();
    let position = origin + inv * rhs;
    let residual = lines.iter().map(|l| l.distance_sqr(&position)).sum();
    Ok(LocalizationResult {
        position,
        residual,
        lines_used: lines.len(),
    })
}

/// Fuses, for every target column `r`, the lines from all arrays.
/// `doas[m][r]` must refer to the same target for every `m`.
pub fn localize_all(doas: &[Vec<DoaEstimate>], centers: &[Vec3]) -> Result<Vec<LocalizationResult>> {
    if doas.len() != centers.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} DOA sets for {} arrays",
            doas.len(),
            centers.len()
        )));
    }
    let r = doas.first().map_or(0, Vec::len);
    if doas.iter().any(|d| d.len() != r) {
        return Err(Error::ShapeMismatch("arrays report different target counts".into()));
    }
    (0..r)
        .map(|t| {
            let lines: Vec<BearingLine> = doas
                .iter()
                .zip(centers)
                .map(|(d, &anchor)| BearingLine {
                    anchor,
                    direction: d[t].direction,
                })
                .collect();
            fuse_lines(&lines)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetMatching {
    /// `assignment[r]` is the truth index matched to estimate `r`.
    pub assignment: Vec<usize>,
    /// Euclidean error of each estimate against its match.
    pub errors: Vec<f64>,
}

/// Optimal assignment of estimates to true positions minimizing the total
/// squared distance.
pub fn match_targets(estimates: &[Vec3], truth: &[Vec3]) -> Result<TargetMatching> {
    if estimates.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} estimates vs {} true targets",
            estimates.len(),
            truth.len()
        )));
    }
    let cost: Vec<Vec<f64>> = estimates
        .iter()
        .map(|e| truth.iter().map(|t| (e - t).norm_squared()).collect())
        .collect();
    let assignment = hungarian(&cost);
    let errors = assignment
        .iter()
        .enumerate()
        .map(|(r, &t)| (estimates[r] - truth[t]).norm())
        .collect();
    Ok(TargetMatching { assignment, errors })
}

/// Minimum-cost perfect matching on a square cost matrix (shortest augmenting
/// paths with potentials). Returns the column assigned to each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based internally, column 0 is the virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        row_of[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let i0 = row_of[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = col0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if row_of[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            row_of[col0] = row_of[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    assignment
}
