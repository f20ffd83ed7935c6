//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::linalg::Schur;

use crate::{CMatrix, Error, Result, C64};

/// Thin SVD `a = u · diag(s) · vᴴ`, singular values in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    /// Right singular vectors as columns.
    pub v: CMatrix,
}

pub fn svd(a: &CMatrix) -> Svd {
    let dec = a.clone().svd(true, true);
    let u = dec.u.expect("requested u");
    let v = dec.v_t.expect("requested v_t").adjoint();
    let s: Vec<f64> = dec.singular_values.iter().copied().collect();

    let mut order: Vec<usize> = (0..s.len()).collect();
    // stable sort keeps the decomposition's order on ties
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    Svd {
        u: CMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]),
        s: order.iter().map(|&i| s[i]).collect(),
        v: CMatrix::from_fn(v.nrows(), order.len(), |i, j| v[(i, order[j])]),
    }
}

/// Least-squares solution `x = a† b` via SVD, with the 2-norm condition
/// number of `a`. Columns of `a` beyond its numerical rank are not rejected
/// here; callers decide from the condition number.
pub fn pinv_solve(a: &CMatrix, b: &CMatrix) -> (CMatrix, f64) {
    let Svd { u, s, v } = svd(a);
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let tol = smax * f64::EPSILON * a.nrows().max(a.ncols()) as f64;

    let mut uhb = u.adjoint() * b;
    for (i, &si) in s.iter().enumerate() {
        let inv = if si > tol { 1.0 / si } else { 0.0 };
        uhb.row_mut(i).scale_mut(inv);
    }
    (v * uhb, cond)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(format!("{}x{} matrix not invertible", a.nrows(), a.ncols())))
}

/// Reciprocal condition estimate from singular values.
pub fn rcond(a: &CMatrix) -> f64 {
    let s = svd(a).s;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

/// Eigen-decomposition of a general square complex matrix through the Schur
/// form `a = q t qᴴ`. Eigenvectors are unit-norm columns.
pub fn eig(a: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::ShapeMismatch(format!("eig of {}x{}", n, a.ncols())));
    }
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Gevd("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();

    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = scale * f64::EPSILON;

    // back substitution on the triangular factor
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        y[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for l in (j + 1)..=k {
                acc += t[(j, l)] * y[(l, k)];
            }
            let mut denom = t[(j, j)] - t[(k, k)];
            if denom.norm() < small {
                denom = C64::new(small, 0.0);
            }
            y[(j, k)] = -acc / denom;
        }
    }
    let mut vectors = q * y;
    for mut col in vectors.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col.unscale_mut(nrm);
        }
    }
    Ok((values, vectors))
}

/// Squared Frobenius norm of the off-diagonal part.
pub fn offdiag_energy(m: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc
}
