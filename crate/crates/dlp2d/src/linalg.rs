//! Shared dense/sparse numerical kernels: dense LU solves, truncated SVD,
//! drop-tolerance incomplete LU, and Sherman-Morrison-Woodbury application.

use crate::{Error, Real, Result};
use ndarray::{Array1, Array2, OwnedRepr};
use ndarray_linalg::solve::LUFactorized;
use ndarray_linalg::{FactorizeInto, JobSvd, Solve, SVDDC};

/// Anything that can solve `A x = b` for vectors.
pub trait LinearSolve<T> {
    fn dim(&self) -> usize;
    fn solve_vec(&self, b: &Array1<T>) -> Array1<T>;
}

// ---------------------------------------------------------------------------
// dense LU

/// LAPACK LU factorization of a dense square matrix.
pub struct DenseLu<T: Real> {
    n: usize,
    fact: LUFactorized<OwnedRepr<T>>,
}

impl<T: Real> DenseLu<T> {
    pub fn new(a: Array2<T>) -> Result<Self> {
        let n = a.nrows();
        let fact = a
            .factorize_into()
            .map_err(|e| Error::Factorization(format!("dense LU: {e}")))?;
        Ok(Self { n, fact })
    }
}

impl<T: Real> LinearSolve<T> for DenseLu<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve_vec(&self, b: &Array1<T>) -> Array1<T> {
        self.fact.solve_into(b.clone()).expect("LU solve")
    }
}

// ---------------------------------------------------------------------------
// truncated SVD

/// Rank-`p` factorization `A ≈ left · right` with `left: n×p`, `right: p×m`,
/// produced by truncating a full SVD (best rank-`p` approximation in the
/// spectral and Frobenius norms).
#[derive(Debug, Clone)]
pub struct LowRankFactor<T> {
    pub left: Array2<T>,
    pub right: Array2<T>,
}

impl<T: Real> LowRankFactor<T> {
    pub fn rank(&self) -> usize {
        self.left.ncols()
    }

    /// `(left·right)·v`.
    pub fn apply(&self, v: &Array1<T>) -> Array1<T> {
        self.left.dot(&self.right.dot(v))
    }

    /// `(left·right)ᵀ·v`.
    pub fn apply_transpose(&self, v: &Array1<T>) -> Array1<T> {
        self.right.t().dot(&self.left.t().dot(v))
    }

    /// Dense reconstruction (test/assembly use).
    pub fn to_dense(&self) -> Array2<T> {
        self.left.dot(&self.right)
    }
}

// The divide-and-conquer SVD driver needs a workspace of about 4·min(n,m)²
// scalars; past this edge the truncation comes from the top eigenpairs of
// the Gram matrix instead (same answer, one n×n workspace, and the low-rank
// factors never divide by small singular values).
const DIVIDE_AND_CONQUER_MAX: usize = 8192;

/// Best rank-`p` approximation of `a` from a dense factorization: a full
/// divide-and-conquer SVD up to `min(n,m) = 8192`, the leading Gram-matrix
/// eigenpairs beyond. A requested rank larger than `min(n, m)` is clamped.
pub fn truncated_svd<T: Real>(a: &Array2<T>, p: usize) -> LowRankFactor<T> {
    let (n, m) = (a.nrows(), a.ncols());
    let p = p.min(n.min(m));
    if p == 0 {
        return LowRankFactor {
            left: Array2::zeros((n, 0)),
            right: Array2::zeros((0, m)),
        };
    }
    if n.min(m) > DIVIDE_AND_CONQUER_MAX {
        // A ≈ A·V·Vᵀ with V the top right singular vectors: left = A·V
        let vs = T::top_right_singular_vectors(
            a.as_slice().expect("contiguous matrix"),
            n,
            m,
            p,
        );
        let mut right = Array2::zeros((p, m));
        for (j, v) in vs.into_iter().enumerate() {
            right.row_mut(j).assign(&Array1::from_vec(v));
        }
        let left = a.dot(&right.t());
        return LowRankFactor { left, right };
    }
    let (u, s, vt) = a.svddc(JobSvd::Some).expect("svd (divide and conquer)");
    let u = u.expect("left singular vectors");
    let vt = vt.expect("right singular vectors");
    let mut left = Array2::zeros((n, p));
    let mut right = Array2::zeros((p, m));
    for k in 0..p {
        let sk = T::of(s[k].to_f64().unwrap_or(0.0));
        left.column_mut(k).assign(&u.column(k).mapv(|x| x * sk));
        right.row_mut(k).assign(&vt.row(k));
    }
    LowRankFactor { left, right }
}

// ---------------------------------------------------------------------------
// sparse matrices

/// Compressed-sparse-row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds from (row, col, value) triplets; duplicate positions are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Self {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n_rows];
        for (r, c, v) in triplets {
            rows[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in &mut rows {
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for &(c, v) in row.iter() {
                if last == Some(c) {
                    let i = values.len() - 1;
                    values[i] += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn matvec(&self, v: &Array1<T>) -> Array1<T> {
        let mut out = Array1::zeros(self.n_rows);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = T::zero();
            for (&c, &x) in cols.iter().zip(vals) {
                acc += x * v[c];
            }
            out[i] = acc;
        }
        out
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut a = Array2::zeros((self.n_rows, self.n_cols));
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &x) in cols.iter().zip(vals) {
                a[[i, c]] = x;
            }
        }
        a
    }

    /// `self + I` (square matrices).
    pub fn plus_identity(&self) -> CsrMatrix<T> {
        assert_eq!(self.n_rows, self.n_cols);
        let trip = (0..self.n_rows).map(|i| (i, i, T::one())).chain(
            (0..self.n_rows).flat_map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter()
                    .zip(vals)
                    .map(|(&c, &v)| (i, c, v))
                    .collect::<Vec<_>>()
            }),
        );
        CsrMatrix::from_triplets(self.n_rows, self.n_cols, trip)
    }
}

// ---------------------------------------------------------------------------
// threshold ILU

struct IluFactors<T> {
    // L strictly lower (unit diagonal implicit), U upper including diagonal
    l: CsrMatrix<T>,
    u: CsrMatrix<T>,
}

/// How the near-field matrix is factorized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorKind {
    /// Exact LU (dense LAPACK factorization of the sparsified matrix).
    ExactLu,
    /// Threshold incomplete LU; entries below `drop_tol`·(row 2-norm) are
    /// discarded.
    Ilu { drop_tol: f64 },
}

/// Exact or incomplete factorization of a sparse matrix with a uniform
/// solve contract.
pub struct SparseFactorization<T: Real> {
    pub kind: FactorKind,
    n: usize,
    backend: Backend<T>,
}

enum Backend<T: Real> {
    Dense(DenseLu<T>),
    Ilu(IluFactors<T>),
}

impl<T: Real> SparseFactorization<T> {
    pub fn new(a: &CsrMatrix<T>, kind: FactorKind) -> Result<Self> {
        assert_eq!(a.n_rows, a.n_cols);
        let n = a.n_rows;
        let backend = match kind {
            FactorKind::ExactLu => Backend::Dense(DenseLu::new(a.to_dense())?),
            FactorKind::Ilu { drop_tol } => Backend::Ilu(ilut(a, T::of(drop_tol))?),
        };
        Ok(Self { kind, n, backend })
    }
}

impl<T: Real> LinearSolve<T> for SparseFactorization<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve_vec(&self, b: &Array1<T>) -> Array1<T> {
        match &self.backend {
            Backend::Dense(lu) => lu.solve_vec(b),
            Backend::Ilu(f) => {
                // forward solve L y = b (unit diagonal), then back solve U x = y
                let n = self.n;
                let mut y = b.clone();
                for i in 0..n {
                    let (cols, vals) = f.l.row(i);
                    let mut acc = y[i];
                    for (&c, &v) in cols.iter().zip(vals) {
                        acc -= v * y[c];
                    }
                    y[i] = acc;
                }
                for i in (0..n).rev() {
                    let (cols, vals) = f.u.row(i);
                    let mut acc = y[i];
                    let mut diag = T::zero();
                    for (&c, &v) in cols.iter().zip(vals) {
                        if c == i {
                            diag = v;
                        } else {
                            acc -= v * y[c];
                        }
                    }
                    y[i] = acc / diag;
                }
                y
            }
        }
    }
}

/// Threshold incomplete LU (row-relative dropping, no fill cap).
pub fn ilu_drop<T: Real>(a: &CsrMatrix<T>, drop_tol: T) -> Result<SparseFactorization<T>> {
    let factors = ilut(a, drop_tol)?;
    Ok(SparseFactorization {
        kind: FactorKind::Ilu {
            drop_tol: drop_tol.to_f64().unwrap_or(0.0),
        },
        n: a.n_rows,
        backend: Backend::Ilu(factors),
    })
}

fn ilut<T: Real>(a: &CsrMatrix<T>, drop_tol: T) -> Result<IluFactors<T>> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let n = a.n_rows;
    // U rows built incrementally; dense workspace per row
    let mut u_rows: Vec<Vec<(usize, T)>> = Vec::with_capacity(n);
    let mut l_trip: Vec<(usize, usize, T)> = Vec::new();
    let mut w = vec![T::zero(); n];
    let mut in_row = vec![false; n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut row_norm = T::zero();
        for &v in vals {
            row_norm += v * v;
        }
        let tau = drop_tol * row_norm.sqrt();
        let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
        let mut upper: Vec<usize> = Vec::new();
        for (&c, &v) in cols.iter().zip(vals) {
            w[c] = v;
            in_row[c] = true;
            if c < i {
                heap.push(Reverse(c));
            } else {
                upper.push(c);
            }
        }
        let mut l_cols: Vec<usize> = Vec::new();
        while let Some(Reverse(k)) = heap.pop() {
            let pivot = u_rows[k]
                .first()
                .filter(|&&(c, _)| c == k)
                .map(|&(_, v)| v)
                .ok_or_else(|| {
                    Error::Factorization(format!("ILU: zero pivot at row {k} (structurally singular)"))
                })?;
            let factor = w[k] / pivot;
            w[k] = factor;
            if factor.abs() < tau {
                // dropped multiplier: forget the entry entirely
                w[k] = T::zero();
                in_row[k] = false;
                continue;
            }
            l_cols.push(k);
            for &(j, uv) in u_rows[k].iter().skip(1) {
                let upd = factor * uv;
                if in_row[j] {
                    w[j] -= upd;
                } else {
                    w[j] = -upd;
                    in_row[j] = true;
                    if j < i {
                        heap.push(Reverse(j));
                    } else {
                        upper.push(j);
                    }
                }
            }
        }
        for &k in &l_cols {
            l_trip.push((i, k, w[k]));
            w[k] = T::zero();
            in_row[k] = false;
        }
        upper.sort_unstable();
        let mut u_row: Vec<(usize, T)> = Vec::with_capacity(upper.len());
        for &j in &upper {
            let v = w[j];
            w[j] = T::zero();
            in_row[j] = false;
            if j == i || v.abs() >= tau {
                u_row.push((j, v));
            }
        }
        if u_row.first().map(|&(c, _)| c) != Some(i) || u_row[0].1 == T::zero() {
            return Err(Error::Factorization(format!(
                "ILU: zero pivot at row {i} (structurally singular)"
            )));
        }
        u_rows.push(u_row);
    }
    let l = CsrMatrix::from_triplets(n, n, l_trip);
    let u = CsrMatrix::from_triplets(
        n,
        n,
        u_rows
            .into_iter()
            .enumerate()
            .flat_map(|(i, row)| row.into_iter().map(move |(c, v)| (i, c, v))),
    );
    Ok(IluFactors { l, u })
}

// ---------------------------------------------------------------------------
// Sherman-Morrison-Woodbury

/// Precomputed application of `(B + U·V)⁻¹` given a solver for `B`:
/// `(B+UV)⁻¹ b = B⁻¹b − B⁻¹U · S⁻¹ · V · B⁻¹b` with `S = I + V B⁻¹ U`.
/// `B⁻¹U` and the LU of `S` are formed at build time, so each application
/// costs one `B`-solve plus small dense work.
pub struct SmwCorrection<T: Real> {
    b_inv_u: Array2<T>,
    v: Array2<T>,
    s_lu: DenseLu<T>,
}

impl<T: Real> SmwCorrection<T> {
    pub fn build<S: LinearSolve<T> + ?Sized>(
        b_solve: &S,
        u: &Array2<T>,
        v: &Array2<T>,
    ) -> Result<Self> {
        let n = u.nrows();
        let p = u.ncols();
        assert_eq!(v.nrows(), p);
        assert_eq!(v.ncols(), n);
        let mut b_inv_u = Array2::zeros((n, p));
        for k in 0..p {
            let col = u.column(k).to_owned();
            b_inv_u.column_mut(k).assign(&b_solve.solve_vec(&col));
        }
        let mut s = v.dot(&b_inv_u);
        let mut max_diag = T::zero();
        for k in 0..p {
            s[[k, k]] += T::one();
            max_diag = max_diag.maximum(s[[k, k]].abs());
        }
        let s_lu = DenseLu::new(s).map_err(|_| {
            Error::Factorization(format!(
                "SMW capacitance matrix singular (p = {p}, max diagonal {max_diag:e})"
            ))
        })?;
        Ok(Self {
            b_inv_u,
            v: v.clone(),
            s_lu,
        })
    }

    /// `(B + U·V)⁻¹ b`, given `y = B⁻¹ b` already computed.
    pub fn correct(&self, y: &Array1<T>) -> Array1<T> {
        let rhs = self.v.dot(y);
        let z = self.s_lu.solve_vec(&rhs);
        y - &self.b_inv_u.dot(&z)
    }

    pub fn apply<S: LinearSolve<T> + ?Sized>(&self, b_solve: &S, b: &Array1<T>) -> Array1<T> {
        self.correct(&b_solve.solve_vec(b))
    }
}

/// One-shot `(B + Uf·Vf)⁻¹ b`.
pub fn smw_apply<T: Real, S: LinearSolve<T> + ?Sized>(
    b_solve: &S,
    uf: &Array2<T>,
    vf: &Array2<T>,
    b: &Array1<T>,
) -> Result<Array1<T>> {
    let smw = SmwCorrection::build(b_solve, uf, vf)?;
    Ok(smw.apply(b_solve, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray_linalg::{Inverse, OperationNorm};
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn rand_mat(n: usize, m: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, m), |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn dense_lu_solves() {
        let a = rand_mat(12, 12, 1) + Array2::<f64>::eye(12) * 4.0;
        let lu = DenseLu::new(a.clone()).unwrap();
        let b = Array1::from_iter((0..12).map(|i| i as f64));
        let x = lu.solve_vec(&b);
        let r = &a.dot(&x) - &b;
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn truncated_svd_exact_rank() {
        let u = rand_mat(16, 3, 2);
        let v = rand_mat(3, 16, 3);
        let a = u.dot(&v);
        let f = truncated_svd(&a, 3);
        let err = (&a - &f.to_dense()).opnorm_fro().unwrap();
        assert!(err < 1e-12, "err {err:e}");
    }

    #[test]
    fn truncated_svd_matches_eckart_young() {
        use ndarray_linalg::SVD;
        let a = rand_mat(20, 20, 4);
        let (_, s, _) = a.svd(false, false).unwrap();
        for p in [1usize, 5, 12] {
            let f = truncated_svd(&a, p);
            let (_, sd, _) = (&a - &f.to_dense()).svd(false, false).unwrap();
            let err = sd[0];
            assert!((err - s[p]).abs() < 1e-10, "p={p}: {err} vs {}", s[p]);
        }
    }

    #[test]
    fn gram_path_matches_svd_truncation() {
        // the large-matrix fallback must reproduce the same projection
        let a = rand_mat(40, 40, 21);
        let p = 6;
        let via_svd = truncated_svd(&a, p).to_dense();
        let vs = f64::top_right_singular_vectors(a.as_slice().unwrap(), 40, 40, p);
        let mut right = Array2::zeros((p, 40));
        for (j, v) in vs.into_iter().enumerate() {
            right.row_mut(j).assign(&Array1::from_vec(v));
        }
        let via_gram = a.dot(&right.t()).dot(&right);
        let denom = via_svd.opnorm_fro().unwrap();
        let err = (&via_svd - &via_gram).opnorm_fro().unwrap() / denom;
        assert!(err < 1e-10, "relative difference {err:e}");
    }

    #[test]
    fn truncated_svd_rank_zero_and_clamp() {
        let a = rand_mat(6, 9, 5);
        let z = truncated_svd(&a, 0);
        assert_eq!(z.rank(), 0);
        let v = Array1::from_elem(9, 1.0);
        assert!(z.apply(&v).iter().all(|&x| x == 0.0));
        let full = truncated_svd(&a, 99);
        assert_eq!(full.rank(), 6);
        let err = (&a - &full.to_dense()).opnorm_fro().unwrap();
        assert!(err < 1e-12);
    }

    #[test]
    fn csr_roundtrip_and_matvec() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, 2.0), (0, 2, -1.0), (1, 1, 3.0), (2, 0, 1.0), (2, 2, 4.0), (0, 2, 0.5)],
        );
        assert_eq!(a.nnz(), 5);
        let d = a.to_dense();
        assert_eq!(d[[0, 2]], -0.5);
        let v = Array1::from_vec(vec![1.0, 2.0, 3.0]);
        let w = a.matvec(&v);
        assert_eq!(w[0], 2.0 - 1.5);
        assert_eq!(w[1], 6.0);
        assert_eq!(w[2], 13.0);
    }

    #[test]
    fn ilu_on_diagonal_matrix_is_exact() {
        let a = CsrMatrix::from_triplets(4, 4, (0..4).map(|i| (i, i, (i + 1) as f64)));
        for tol in [0.0, 0.5, 0.9] {
            let f = ilu_drop(&a, tol).unwrap();
            let b = Array1::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
            let x = f.solve_vec(&b);
            for i in 0..4 {
                assert!((x[i] - 1.0).abs() < 1e-14);
            }
        }
    }

    fn sparse_test_matrix(n: usize, seed: u64) -> CsrMatrix<f64> {
        // diagonally dominant band plus scattered off entries
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 4.0 + rng.gen_range(0.0..1.0)));
            if i + 1 < n {
                trip.push((i, i + 1, -1.0 + 0.1 * rng.gen_range(-1.0..1.0)));
                trip.push((i + 1, i, -1.0 + 0.1 * rng.gen_range(-1.0..1.0)));
            }
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                if j != i {
                    trip.push((i, j, rng.gen_range(-0.2..0.2)));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, trip)
    }

    #[test]
    fn ilu_zero_tolerance_matches_dense_lu() {
        let a = sparse_test_matrix(100, 6);
        let f = ilu_drop(&a, 0.0).unwrap();
        let dense = DenseLu::new(a.to_dense()).unwrap();
        let b = Array1::from_iter((0..100).map(|i| ((i * 7) % 13) as f64 - 6.0));
        let x_ilu = f.solve_vec(&b);
        let x_lu = dense.solve_vec(&b);
        let diff = (&x_ilu - &x_lu).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff < 1e-10, "diff {diff:e}");
    }

    #[test]
    fn ilu_structural_singularity_is_reported() {
        let mut trip = vec![(0usize, 1usize, 1.0f64), (1, 0, 1.0)];
        trip.push((2, 2, 1.0));
        let a = CsrMatrix::from_triplets(3, 3, trip);
        assert!(ilu_drop(&a, 1e-3).is_err());
    }

    #[test]
    fn exact_lu_kind_behaves() {
        let a = sparse_test_matrix(40, 8);
        let f = SparseFactorization::new(&a, FactorKind::ExactLu).unwrap();
        let b = Array1::from_elem(40, 1.0);
        let x = f.solve_vec(&b);
        let r = &a.matvec(&x) - &b;
        let rel = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(rel < 1e-12);
    }

    #[test]
    fn smw_zero_update_returns_base_solve() {
        let a = rand_mat(8, 8, 9) + Array2::<f64>::eye(8) * 3.0;
        let lu = DenseLu::new(a).unwrap();
        let u = Array2::zeros((8, 2));
        let v = Array2::zeros((2, 8));
        let b = Array1::from_iter((0..8).map(|i| i as f64 + 1.0));
        let x = smw_apply(&lu, &u, &v, &b).unwrap();
        let y = lu.solve_vec(&b);
        for i in 0..8 {
            assert!((x[i] - y[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn smw_matches_dense_inverse() {
        let b_mat = rand_mat(8, 8, 10) + Array2::<f64>::eye(8) * 4.0;
        let u = rand_mat(8, 2, 11);
        let v = rand_mat(2, 8, 12);
        let full = &b_mat + &u.dot(&v);
        let inv = full.inv().unwrap();
        let lu = DenseLu::new(b_mat).unwrap();
        let rhs = Array1::from_iter((0..8).map(|i| (i as f64).sin()));
        let x = smw_apply(&lu, &u, &v, &rhs).unwrap();
        let want = inv.dot(&rhs);
        for i in 0..8 {
            assert!((x[i] - want[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn smw_rank_one_closed_form() {
        // (I + e1 e1^T)^{-1} b = b - 0.5 b_1 e1
        let lu = DenseLu::new(Array2::<f64>::eye(4)).unwrap();
        let mut u = Array2::zeros((4, 1));
        u[[0, 0]] = 1.0;
        let mut v = Array2::zeros((1, 4));
        v[[0, 0]] = 1.0;
        let b = Array1::from_vec(vec![2.0, 1.0, -1.0, 3.0]);
        let x = smw_apply(&lu, &u, &v, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        for i in 1..4 {
            assert!((x[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn smw_random_instances_match_dense() {
        for seed in 0..6u64 {
            let n = 8 + (seed as usize % 3) * 8; // 8..=24
            let p = 1 + (seed as usize % 4) * 2; // 1..=7
            let b_mat = rand_mat(n, n, 100 + seed) + Array2::<f64>::eye(n) * 5.0;
            let u = rand_mat(n, p, 200 + seed);
            let v = rand_mat(p, n, 300 + seed);
            let full = &b_mat + &u.dot(&v);
            let inv = full.inv().unwrap();
            let lu = DenseLu::new(b_mat).unwrap();
            let rhs = Array1::from_iter((0..n).map(|i| ((i * 3) % 7) as f64 - 3.0));
            let x = smw_apply(&lu, &u, &v, &rhs).unwrap();
            let want = inv.dot(&rhs);
            let err = (&x - &want)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                / want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err < 1e-10, "seed {seed}: rel err {err:e}");
        }
    }

    #[test]
    fn smw_singular_capacitance_reported() {
        // B = I, U = e1, V = -e1^T  =>  S = 1 - 1 = 0
        let lu = DenseLu::new(Array2::<f64>::eye(3)).unwrap();
        let mut u = Array2::zeros((3, 1));
        u[[0, 0]] = 1.0;
        let mut v = Array2::zeros((1, 3));
        v[[0, 0]] = -1.0;
        let b = Array1::from_elem(3, 1.0);
        assert!(smw_apply(&lu, &u, &v, &b).is_err());
    }
}
