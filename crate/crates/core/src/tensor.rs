//! Dense third-order complex tensors and the handful of multilinear kernels
//! the solver needs.
//!
//! A [`Tensor3`] of size `I×J×K` stores element `(i, j, k)` at flat offset
//! `(i·K + k)·J + j`. With that layout the mode-2 unfolding (rows indexed by
//! `(i, k)`, row `i·K + k`, columns by `j`) is the data buffer read row-major.

use crate::linalg::{svd, Svd};
use crate::{CMatrix, CVector, Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    data: Vec<C64>,
}

impl Tensor3 {
    pub fn zeros(i: usize, j: usize, k: usize) -> Self {
        Self {
            dims: (i, j, k),
            data: vec![C64::new(0.0, 0.0); i * j * k],
        }
    }

    pub fn from_fn(i: usize, j: usize, k: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut t = Self::zeros(i, j, k);
        for ii in 0..i {
            for kk in 0..k {
                for jj in 0..j {
                    let off = t.offset(ii, jj, kk);
                    t.data[off] = f(ii, jj, kk);
                }
            }
        }
        t
    }

    /// Inverse of [`mode2_unfold`]: `m` has `i·k` rows.
    pub fn from_mode2(m: &CMatrix, i: usize, k: usize) -> Result<Self> {
        if m.nrows() != i * k {
            return Err(Error::ShapeMismatch(format!(
                "mode-2 matrix has {} rows, expected {i}·{k}",
                m.nrows()
            )));
        }
        let j = m.ncols();
        let mut data = Vec::with_capacity(i * j * k);
        for row in 0..m.nrows() {
            data.extend(m.row(row).iter().copied());
        }
        Ok(Self { dims: (i, j, k), data })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims.2 + k) * self.dims.1 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: C64) {
        let off = self.offset(i, j, k);
        self.data[off] = v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self − other`.
    pub fn distance(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.dims, other.dims);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `(I·K)×J` matrix with row `i·K + k` holding `T[i, :, k]`.
pub fn mode2_unfold(t: &Tensor3) -> CMatrix {
    let (i, j, k) = t.dims;
    CMatrix::from_row_slice(i * k, j, &t.data)
}

/// Column-wise Kronecker product, row `i·K + k` of column `r` is `A[i,r]·C[k,r]`.
pub fn khatri_rao(a: &CMatrix, c: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != c.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "khatri_rao column counts {} vs {}",
            a.ncols(),
            c.ncols()
        )));
    }
    let k = c.nrows();
    Ok(CMatrix::from_fn(a.nrows() * k, a.ncols(), |row, r| {
        a[(row / k, r)] * c[(row % k, r)]
    }))
}

/// `Σ_r a_r ∘ b_r ∘ c_r`.
pub fn cpd_eval(a: &CMatrix, b: &CMatrix, c: &CMatrix) -> Result<Tensor3> {
    if a.ncols() != b.ncols() || b.ncols() != c.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "cpd factors have {}, {}, {} columns",
            a.ncols(),
            b.ncols(),
            c.ncols()
        )));
    }
    let unfolded = khatri_rao(a, c)? * b.transpose();
    Tensor3::from_mode2(&unfolded, a.nrows(), c.nrows())
}

/// Orthonormal basis of the shared second-mode subspace.
#[derive(Debug, Clone)]
pub struct CompressionBasis {
    /// `T×R`, orthonormal columns.
    pub v: CMatrix,
    /// Singular values of the stacked unfolding, descending.
    pub singular_values: Vec<f64>,
}

impl CompressionBasis {
    /// Maps a compressed second-mode factor back to the original space.
    pub fn expand(&self, b_compressed: &CMatrix) -> CMatrix {
        &self.v * b_compressed
    }
}

/// Relative singular-value floor used to decide the numerical rank of the
/// stacked unfolding.
const RANK_TOL: f64 = 1e-10;

/// Projects every tensor onto the top-`rank` right singular subspace of the
/// row-stacked mode-2 unfoldings. The subspace is common to all tensors
/// because the second factor is shared.
pub fn joint_compress_mode2(obs: &[Tensor3], rank: usize) -> Result<(Vec<Tensor3>, CompressionBasis)> {
    let first = obs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no tensors to compress".into()))?;
    let t = first.dims.1;
    if obs.iter().any(|x| x.dims.1 != t) {
        return Err(Error::ShapeMismatch("tensors disagree on the second dimension".into()));
    }
    let rows: usize = obs.iter().map(|x| x.dims.0 * x.dims.2).sum();
    if rank == 0 || rank > t || rank > rows {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} incompatible with stacked unfolding {rows}x{t}"
        )));
    }

    let mut stacked = CMatrix::zeros(rows, t);
    let mut at = 0;
    for x in obs {
        let u = mode2_unfold(x);
        stacked.rows_mut(at, u.nrows()).copy_from(&u);
        at += u.nrows();
    }
    // the Gram matrix route would square the condition number
    let Svd { s, v, .. } = svd(&stacked);
    let found = s.iter().take_while(|&&x| x > s[0] * RANK_TOL).count();
    if found < rank {
        return Err(Error::RankTooLow { rank, found });
    }
    // X₂ = U Σ Vᴴ puts the columns of B in the span of conj(V)
    let proj = v.columns(0, rank).into_owned();
    let v = proj.map(|z| z.conj());
    let compressed = obs
        .iter()
        .map(|x| {
            let (i, _, k) = x.dims;
            Tensor3::from_mode2(&(mode2_unfold(x) * &proj), i, k)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        compressed,
        CompressionBasis {
            v,
            singular_values: s,
        },
    ))
}

/// `T(idx, :, :)`.
pub fn subtensor_rows(t: &Tensor3, idx: &[usize]) -> Result<Tensor3> {
    let (i, j, k) = t.dims;
    if let Some(&bad) = idx.iter().find(|&&x| x >= i) {
        return Err(Error::OutOfBounds { index: bad, size: i });
    }
    let block = j * k;
    let mut data = Vec::with_capacity(idx.len() * block);
    for &row in idx {
        data.extend_from_slice(&t.data[row * block..(row + 1) * block]);
    }
    Ok(Tensor3 {
        dims: (idx.len(), j, k),
        data,
    })
}

/// Best rank-1 approximation `m ≈ u·vᵀ`: `v` is unit-norm with its
/// largest-magnitude entry real positive, `u` carries the singular value.
pub fn rank1_approx(m: &CMatrix) -> Result<(CVector, CVector)> {
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Err(Error::ZeroMatrix);
    }
    let Svd { u, s, v } = svd(m);
    let mut right: CVector = v.column(0).map(|z| z.conj());
    let mut left: CVector = u.column(0) * C64::new(s[0], 0.0);

    let pivot = right
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best })
        .0;
    let phase = right[pivot] / right[pivot].norm();
    right /= phase;
    left *= phase;
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn triple_loop(a: &CMatrix, b: &CMatrix, c: &CMatrix) -> Tensor3 {
        Tensor3::from_fn(a.nrows(), b.nrows(), c.nrows(), |i, j, k| {
            (0..a.ncols()).map(|r| a[(i, r)] * b[(j, r)] * c[(k, r)]).sum()
        })
    }

    #[test]
    fn unfold_index_map() {
        let one = Tensor3::from_fn(1, 1, 1, |_, _, _| C64::new(3.0, -1.0));
        assert_eq!(mode2_unfold(&one)[(0, 0)], C64::new(3.0, -1.0));

        // 1-based value 100i + 10j + k
        let t = Tensor3::from_fn(2, 2, 2, |i, j, k| {
            C64::new((100 * (i + 1) + 10 * (j + 1) + (k + 1)) as f64, 0.0)
        });
        let u = mode2_unfold(&t);
        assert_eq!(u.shape(), (4, 2));
        assert_eq!(u[(2, 1)].re, 221.0);
        assert_eq!(u[(0, 0)].re, 111.0);
        assert_eq!(u[(1, 0)].re, 112.0);
        assert_eq!(u[(3, 1)].re, 222.0);
        assert_eq!(Tensor3::from_mode2(&u, 2, 2).unwrap(), t);
    }

    #[test]
    fn khatri_rao_small() {
        let a = CMatrix::from_column_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(2.0, 0.0)]);
        let c = CMatrix::from_column_slice(2, 1, &[C64::new(3.0, 0.0), C64::new(4.0, 0.0)]);
        let kr = khatri_rao(&a, &c).unwrap();
        let vals: Vec<f64> = kr.iter().map(|z| z.re).collect();
        assert_eq!(vals, vec![3.0, 4.0, 6.0, 8.0]);

        let id = CMatrix::identity(2, 2);
        let kr = khatri_rao(&id, &id).unwrap();
        let expect = [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 1.0]];
        for (r, row) in expect.iter().enumerate() {
            for (col, &x) in row.iter().enumerate() {
                assert_eq!(kr[(r, col)].re, x);
            }
        }
        assert!(khatri_rao(&CMatrix::zeros(2, 2), &CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn cpd_eval_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ones = CMatrix::from_element(3, 1, C64::new(1.0, 0.0));
        let t = cpd_eval(&ones, &ones.rows(0, 2).into_owned(), &ones).unwrap();
        assert!(t.data().iter().all(|z| *z == C64::new(1.0, 0.0)));

        let (a, b, c) = (random(&mut rng, 3, 2), random(&mut rng, 4, 2), random(&mut rng, 2, 2));
        let t = cpd_eval(&a, &b, &c).unwrap();
        assert!(t.distance(&triple_loop(&a, &b, &c)) < 1e-13);
        let lhs = mode2_unfold(&t);
        let rhs = khatri_rao(&a, &c).unwrap() * b.transpose();
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn cpd_eval_is_linear_in_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (a, b, c) = (random(&mut rng, 3, 2), random(&mut rng, 3, 2), random(&mut rng, 3, 2));
        let base = cpd_eval(&a, &b, &c).unwrap();
        let mut a2 = a.clone();
        a2.column_mut(1).scale_mut(3.0);
        let scaled = cpd_eval(&a2, &b, &c).unwrap();
        let term = cpd_eval(&a.columns(1, 1).into_owned(), &b.columns(1, 1).into_owned(), &c.columns(1, 1).into_owned()).unwrap();
        let expect = Tensor3::from_fn(3, 3, 3, |i, j, k| base.get(i, j, k) + term.get(i, j, k) * 2.0);
        assert!(scaled.distance(&expect) < 1e-13);
        assert!(cpd_eval(&a, &b.columns(0, 1).into_owned(), &c).is_err());
    }

    #[test]
    fn subtensor_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, b, c) = (random(&mut rng, 3, 2), random(&mut rng, 2, 2), random(&mut rng, 2, 2));
        let t = cpd_eval(&a, &b, &c).unwrap();
        assert_eq!(subtensor_rows(&t, &[0, 1, 2]).unwrap(), t);
        let first = subtensor_rows(&t, &[0]).unwrap();
        assert_eq!(first.dims(), (1, 2, 2));
        assert_eq!(first.get(0, 1, 1), t.get(0, 1, 1));
        let sel = subtensor_rows(&t, &[2, 0]).unwrap();
        let a_sel = CMatrix::from_fn(2, 2, |i, r| a[([2, 0][i], r)]);
        assert!(sel.distance(&cpd_eval(&a_sel, &b, &c).unwrap()) < 1e-14);
        assert!(matches!(subtensor_rows(&t, &[3]), Err(Error::OutOfBounds { index: 3, size: 3 })));
    }

    #[test]
    fn compression_noiseless() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let r = 3;
        let b = random(&mut rng, 10, r);
        let obs: Vec<Tensor3> = (0..2)
            .map(|_| cpd_eval(&random(&mut rng, 4, r), &b, &random(&mut rng, 5, r)).unwrap())
            .collect();
        let (comp, basis) = joint_compress_mode2(&obs, r).unwrap();
        let vhv = basis.v.adjoint() * &basis.v;
        assert!((vhv - CMatrix::identity(r, r)).norm() < 1e-10);
        for (x, t) in obs.iter().zip(&comp) {
            assert_eq!(t.dims(), (4, r, 5));
            let back = mode2_unfold(t) * basis.v.transpose();
            let rel = (back - mode2_unfold(x)).norm() / mode2_unfold(x).norm();
            assert!(rel < 1e-10, "{rel}");
        }
        assert!(matches!(joint_compress_mode2(&obs, 5), Err(Error::RankTooLow { rank: 5, found: 3 })));
    }

    #[test]
    fn compression_full_rank_is_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Tensor3::from_fn(3, 4, 3, |_, _, _| C64::new(rng.random::<f64>(), rng.random::<f64>()));
        let (comp, basis) = joint_compress_mode2(std::slice::from_ref(&x), 4).unwrap();
        assert!((basis.v.adjoint() * &basis.v - CMatrix::identity(4, 4)).norm() < 1e-12);
        let back = mode2_unfold(&comp[0]) * basis.v.transpose();
        assert!((back - mode2_unfold(&x)).norm() < 1e-12);
    }

    #[test]
    fn compression_rank_one_spans_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (a, b, c) = (random(&mut rng, 3, 1), random(&mut rng, 6, 1), random(&mut rng, 2, 1));
        let (_, basis) = joint_compress_mode2(&[cpd_eval(&a, &b, &c).unwrap()], 1).unwrap();
        let bn = b.column(0) / C64::new(b.norm(), 0.0);
        let overlap = (basis.v.column(0).adjoint() * bn)[(0, 0)].norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank1_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random(&mut rng, 4, 1);
        let c = random(&mut rng, 3, 1);
        let m = &a * c.transpose();
        let (u, v) = rank1_approx(&m).unwrap();
        assert!((&u * v.transpose() - &m).norm() < 1e-10);
        assert!((v.norm() - 1.0).abs() < 1e-12);
        // reciprocal scaling: u ∥ a, v ∥ c
        let ratio = u[0] / a[(0, 0)];
        assert!((u.clone() - a.column(0) * ratio).norm() < 1e-10);

        let id = CMatrix::identity(2, 2);
        let (u, v) = rank1_approx(&id).unwrap();
        let resid = (&u * v.transpose() - &id).norm();
        assert!((resid - 1.0).abs() < 1e-12);
        assert_eq!(rank1_approx(&id).unwrap(), (u, v));

        let noise = random(&mut rng, 4, 3) * C64::new(1e-6, 0.0);
        let pert = &m + noise;
        let (u, v) = rank1_approx(&pert).unwrap();
        assert!((&u * v.transpose() - &pert).norm() <= 1e-5);

        assert!(matches!(rank1_approx(&CMatrix::zeros(2, 2)), Err(Error::ZeroMatrix)));
    }
}
