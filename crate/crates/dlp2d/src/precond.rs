//! Single-grid preconditioners for `(I + D)η = f`: Picard (identity),
//! cyclic-banded, block-diagonal, U-list, V-list, and the FMM-based
//! Schur/low-rank preconditioner.
//!
//! Every preconditioner applies a fixed linear map approximating
//! `(I + D_near)⁻¹` for some near-field split of `D`, carries a
//! scaled-matvec charge (1 per application for the sparse family, 2 for
//! the Schur preconditioner, 0 for Picard), and keeps a matvec with its
//! near part so it can act as the split smoother
//! `η⁺ = P(f − D_far·η)`.

use crate::fmmtree::{build_lists, build_tree, class_pairs, near_matrix, PairKind, QuadTree};
use crate::linalg::{
    truncated_svd, CsrMatrix, DenseLu, FactorKind, LinearSolve, SparseFactorization,
};
use crate::nystrom::DenseOperator;
use crate::solver::Precondition;
use crate::{Error, Real, Result};
use ndarray::{Array1, Array2};

/// Descriptive tag of a built preconditioner.
#[derive(Debug, Clone, PartialEq)]
pub enum PrecondKind {
    /// Picard / unpreconditioned.
    Identity,
    Banded { half_width: usize },
    BlockDiag,
    Ulist { factor: FactorKind },
    Vlist { level: u8, moments: usize, exact: bool },
    FmmSchur { factor: FactorKind, rank_d1: usize, rank_schur: usize, rank_z: usize },
}

/// Build-time description, including the leaf capacity of the quadtree the
/// preconditioner constructs for itself.
#[derive(Debug, Clone, PartialEq)]
pub enum PrecondSpec {
    Picard,
    Banded { half_width: usize },
    BlockDiag { leaf: usize },
    Ulist { leaf: usize, factor: FactorKind },
    Vlist { leaf: usize, level: u8, moments: usize, exact: bool },
    FmmSchur {
        leaf: usize,
        factor: FactorKind,
        rank_d1: usize,
        rank_schur: usize,
        /// Moment count for the level-1 factorization fed to the rank-5
        /// SVD; `None` uses the exact level-1 class.
        moments_d1: Option<usize>,
    },
}

impl PrecondSpec {
    pub fn build<T: Real>(&self, op: &DenseOperator<T>) -> Result<Preconditioner<T>> {
        let tree_for = |leaf: usize| -> Result<QuadTree<T>> {
            let pts: Vec<(T, T)> = (0..op.len()).map(|j| op.grid.point(j)).collect();
            Ok(build_lists(build_tree(&pts, leaf)?))
        };
        match *self {
            PrecondSpec::Picard => Ok(build_identity(op.len())),
            PrecondSpec::Banded { half_width } => build_banded(op, half_width),
            PrecondSpec::BlockDiag { leaf } => build_blockdiag(op, &tree_for(leaf)?),
            PrecondSpec::Ulist { leaf, factor } => build_ulist(op, &tree_for(leaf)?, factor),
            PrecondSpec::Vlist {
                leaf,
                level,
                moments,
                exact,
            } => build_vlist(op, &tree_for(leaf)?, level, moments, exact),
            PrecondSpec::FmmSchur {
                leaf,
                factor,
                rank_d1,
                rank_schur,
                moments_d1,
            } => {
                let tree = tree_for(leaf)?;
                build_fmmschur(op, &tree, factor, rank_d1, rank_schur, None, moments_d1)
            }
        }
    }
}

enum SolveBackend<T: Real> {
    Identity,
    Dense(DenseLu<T>),
    Sparse(SparseFactorization<T>),
    Blocks(Vec<(Vec<usize>, DenseLu<T>)>),
    Schur(Box<SchurApply<T>>),
}

struct SchurApply<T: Real> {
    p0: SparseFactorization<T>,
    /// Rank-`r` factors of the level-1 class.
    l1: Array2<T>,
    m1t: Array2<T>,
    /// Dense `r×r` approximate inverse of the capacitance matrix.
    s_tilde_inv: Array2<T>,
    /// Outer SMW layer folding in the remaining far field.
    z_layer: Option<ZLayer<T>>,
}

struct ZLayer<T: Real> {
    /// Precomputed inner-preconditioner image of the left factor.
    y: Array2<T>,
    vz: Array2<T>,
    g_lu: DenseLu<T>,
}

impl<T: Real> SchurApply<T> {
    fn apply_inner(&self, v: &Array1<T>) -> Array1<T> {
        let w = self.p0.solve_vec(v);
        let t = self.m1t.dot(&w);
        let u = self.s_tilde_inv.dot(&t);
        let corr = self.p0.solve_vec(&self.l1.dot(&u));
        &w - &corr
    }

    fn apply(&self, v: &Array1<T>) -> Array1<T> {
        let t = self.apply_inner(v);
        match &self.z_layer {
            None => t,
            Some(z) => {
                let rhs = z.vz.dot(&t);
                let c = z.g_lu.solve_vec(&rhs);
                &t - &z.y.dot(&c)
            }
        }
    }
}

enum NearOp<T: Real> {
    Zero,
    Csr(CsrMatrix<T>),
    Composite {
        csr: CsrMatrix<T>,
        factors: Vec<crate::fmmtree::LevelFactor<T>>,
    },
}

impl<T: Real> NearOp<T> {
    fn matvec(&self, v: &Array1<T>) -> Array1<T> {
        match self {
            NearOp::Zero => Array1::zeros(v.len()),
            NearOp::Csr(m) => m.matvec(v),
            NearOp::Composite { csr, factors } => {
                let mut out = csr.matvec(v);
                for f in factors {
                    out += &f.apply(v);
                }
                out
            }
        }
    }
}

/// A built preconditioner with the uniform apply contract.
pub struct Preconditioner<T: Real> {
    pub kind: PrecondKind,
    n: usize,
    cost: f64,
    solve: SolveBackend<T>,
    near: NearOp<T>,
}

impl<T: Real> Precondition<T> for Preconditioner<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, v: &Array1<T>) -> Array1<T> {
        match &self.solve {
            SolveBackend::Identity => v.clone(),
            SolveBackend::Dense(lu) => lu.solve_vec(v),
            SolveBackend::Sparse(f) => f.solve_vec(v),
            SolveBackend::Blocks(blocks) => {
                let mut out = Array1::zeros(self.n);
                for (pts, lu) in blocks {
                    let rhs = Array1::from_iter(pts.iter().map(|&i| v[i]));
                    let sol = lu.solve_vec(&rhs);
                    for (local, &i) in pts.iter().enumerate() {
                        out[i] = sol[local];
                    }
                }
                out
            }
            SolveBackend::Schur(s) => s.apply(v),
        }
    }

    fn cost(&self) -> f64 {
        self.cost
    }
}

impl<T: Real> Preconditioner<T> {
    /// Matvec with the near-field part this preconditioner inverts.
    pub fn near_matvec(&self, v: &Array1<T>) -> Array1<T> {
        self.near.matvec(v)
    }
}

/// Picard: the identity preconditioner (zero scaled-matvec charge).
pub fn build_identity<T: Real>(n: usize) -> Preconditioner<T> {
    Preconditioner {
        kind: PrecondKind::Identity,
        n,
        cost: 0.0,
        solve: SolveBackend::Identity,
        near: NearOp::Zero,
    }
}

/// Cyclic-banded approximation: factors `I + D` restricted to the periodic
/// band of half-width `s`.
pub fn build_banded<T: Real>(op: &DenseOperator<T>, s: usize) -> Result<Preconditioner<T>> {
    let n = op.len();
    let mut trip = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let d = (i as i64 - j as i64).unsigned_abs() as usize;
            if d.min(n - d) <= s {
                trip.push((i, j, op.matrix[[i, j]]));
            }
        }
    }
    let near = CsrMatrix::from_triplets(n, n, trip);
    let mut a = near.to_dense();
    for i in 0..n {
        a[[i, i]] += T::one();
    }
    Ok(Preconditioner {
        kind: PrecondKind::Banded { half_width: s },
        n,
        cost: 1.0,
        solve: SolveBackend::Dense(DenseLu::new(a)?),
        near: NearOp::Csr(near),
    })
}

/// Block-diagonal approximation: per-leaf dense factorization of
/// `I + D` restricted to same-leaf interactions.
pub fn build_blockdiag<T: Real>(
    op: &DenseOperator<T>,
    tree: &QuadTree<T>,
) -> Result<Preconditioner<T>> {
    let n = op.len();
    let mut blocks = Vec::new();
    let mut trip = Vec::new();
    for b in tree.leaves() {
        let pts = tree.boxes[b].points.clone();
        let k = pts.len();
        let mut a = Array2::zeros((k, k));
        for (li, &i) in pts.iter().enumerate() {
            for (lj, &j) in pts.iter().enumerate() {
                let v = op.matrix[[i, j]];
                a[[li, lj]] = v;
                trip.push((i, j, v));
                if li == lj {
                    a[[li, lj]] += T::one();
                }
            }
        }
        blocks.push((pts, DenseLu::new(a)?));
    }
    Ok(Preconditioner {
        kind: PrecondKind::BlockDiag,
        n,
        cost: 1.0,
        solve: SolveBackend::Blocks(blocks),
        near: NearOp::Csr(CsrMatrix::from_triplets(n, n, trip)),
    })
}

/// U-list approximation `P₀ ≈ (I + D₀)⁻¹` with an exact or incomplete
/// factorization of the sparse near-field matrix.
pub fn build_ulist<T: Real>(
    op: &DenseOperator<T>,
    tree: &QuadTree<T>,
    factor: FactorKind,
) -> Result<Preconditioner<T>> {
    let near = near_matrix(tree, op);
    let a0 = near.plus_identity();
    let fact = SparseFactorization::new(&a0, factor)?;
    Ok(Preconditioner {
        kind: PrecondKind::Ulist { factor },
        n: op.len(),
        cost: 1.0,
        solve: SolveBackend::Sparse(fact),
        near: NearOp::Csr(near),
    })
}

fn class_triplets<T: Real>(
    tree: &QuadTree<T>,
    op: &DenseOperator<T>,
    ell: usize,
    only_exact_kinds: bool,
) -> Vec<(usize, usize, T)> {
    let mut trip = Vec::new();
    for pair in class_pairs(tree, ell) {
        if only_exact_kinds && pair.kind == PairKind::VList {
            continue;
        }
        for &i in &tree.boxes[pair.target_leaf].points {
            for &j in &tree.boxes[pair.source_box].points {
                trip.push((i, j, op.matrix[[i, j]]));
            }
        }
    }
    trip
}

/// V-list approximation: factors the dense assembly of
/// `I + D₀ + D₁ [+ D₂]` with the far classes either exact or compressed at
/// `moments` multipole moments per box (the assembled matrix is formed
/// column by column and factored exactly).
pub fn build_vlist<T: Real>(
    op: &DenseOperator<T>,
    tree: &QuadTree<T>,
    level: u8,
    moments: usize,
    exact: bool,
) -> Result<Preconditioner<T>> {
    if !(level == 1 || level == 2) {
        return Err(Error::InvalidParameter("V-list level must be 1 or 2".into()));
    }
    let n = op.len();
    let near_csr = near_matrix(tree, op);
    let mut assembled = near_csr.to_dense();
    let mut factors = Vec::new();
    let mut exact_trip = Vec::new();
    for ell in 1..=level as usize {
        if exact {
            exact_trip.extend(class_triplets(tree, op, ell, false));
        } else {
            let lf = crate::fmmtree::compress_level(tree, op, ell, moments)?;
            assembled += &lf.left.dot(&lf.right.t());
            if let Some(e) = &lf.extra {
                assembled += &e.to_dense();
            }
            factors.push(lf);
        }
    }
    let near: NearOp<T>;
    if exact {
        let mut trip = exact_trip;
        for i in 0..n {
            let (cols, vals) = near_csr.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                trip.push((i, c, v));
            }
        }
        let all = CsrMatrix::from_triplets(n, n, trip);
        assembled = all.to_dense();
        near = NearOp::Csr(all);
    } else {
        near = NearOp::Composite {
            csr: near_csr,
            factors,
        };
    }
    for i in 0..n {
        assembled[[i, i]] += T::one();
    }
    Ok(Preconditioner {
        kind: PrecondKind::Vlist {
            level,
            moments,
            exact,
        },
        n,
        cost: 1.0,
        solve: SolveBackend::Dense(DenseLu::new(assembled)?),
        near,
    })
}

/// Rank used for the residual far field `Z`: `⌈5·log₂(N/s)⌉`.
pub fn default_rank_z(n: usize, leaf_capacity: usize) -> usize {
    let ratio = n as f64 / leaf_capacity as f64;
    if ratio <= 1.0 {
        0
    } else {
        (5.0 * ratio.log2()).ceil() as usize
    }
}

/// Near-field-independent pieces of the Schur preconditioner: the rank-
/// limited SVD factors of the level-1 class and of the remaining far field.
/// Building these dominates construction time, so they can be shared
/// between factorization variants of the same operator/tree.
pub struct FmmSchurParts<T: Real> {
    l1: Array2<T>,
    m1t: Array2<T>,
    z: Option<crate::linalg::LowRankFactor<T>>,
    rank_d1: usize,
    rank_z: usize,
}

fn clamp_rank(r: usize, n: usize, what: &str) -> usize {
    if r > n {
        eprintln!("warning: {what} rank {r} clamped to dimension {n}");
        n
    } else {
        r
    }
}

/// Computes the truncated-SVD factors `D₁ ≈ L₁M₁ᵀ` (rank `rank_d1`, from
/// the exact level-1 class or its `moments_d1`-moment compression) and
/// `Z = D − D₀ − D₁` at rank `rank_z` (default `⌈5·log₂(N/s)⌉`).
pub fn fmmschur_parts<T: Real>(
    op: &DenseOperator<T>,
    tree: &QuadTree<T>,
    rank_d1: usize,
    rank_z: Option<usize>,
    moments_d1: Option<usize>,
) -> Result<FmmSchurParts<T>> {
    let n = op.len();
    let rank_d1 = clamp_rank(rank_d1, n, "level-1");
    let d1 = match moments_d1 {
        None => crate::fmmtree::class_matrix_dense(tree, op, 1),
        Some(p) => crate::fmmtree::compress_level(tree, op, 1, p)?.to_dense(),
    };
    let lr1 = truncated_svd(&d1, rank_d1);
    drop(d1);

    let rank_z = clamp_rank(
        rank_z.unwrap_or_else(|| default_rank_z(n, tree.leaf_capacity)),
        n,
        "far-field",
    );
    let z = if rank_z > 0 {
        // the residual the first two terms leave behind:
        // Z = A − A₀ − L₁M₁ᵀ with the rank-limited factors actually used
        let near = near_matrix(tree, op);
        let mut z = op.matrix.clone();
        for i in 0..n {
            let (cols, vals) = near.row(i);
            for (&jc, &v) in cols.iter().zip(vals) {
                z[[i, jc]] -= v;
            }
        }
        z -= &lr1.left.dot(&lr1.right);
        let zf = truncated_svd(&z, rank_z);
        Some(zf)
    } else {
        None
    };
    Ok(FmmSchurParts {
        l1: lr1.left,
        m1t: lr1.right,
        z,
        rank_d1,
        rank_z,
    })
}

/// Assembles the Schur preconditioner from precomputed far-field parts and
/// a fresh `P₀` of the requested kind.
pub fn build_fmmschur_from_parts<T: Real>(
    op: &DenseOperator<T>,
    tree: &QuadTree<T>,
    parts: &FmmSchurParts<T>,
    factor: FactorKind,
    rank_schur: usize,
) -> Result<Preconditioner<T>> {
    let n = op.len();
    let rank_schur = clamp_rank(rank_schur, n, "capacitance");
    let near = near_matrix(tree, op);
    let p0 = SparseFactorization::new(&near.plus_identity(), factor)?;
    let l1 = parts.l1.clone();
    let m1t = parts.m1t.clone();

    // capacitance matrix M1ᵀ P0 L1 at rank rank_schur
    let r = l1.ncols();
    let mut p0l1 = Array2::zeros((n, r));
    for k in 0..r {
        let col = l1.column(k).to_owned();
        p0l1.column_mut(k).assign(&p0.solve_vec(&col));
    }
    let c = m1t.dot(&p0l1);
    let uv = truncated_svd(&c, rank_schur);
    let mut vu = uv.right.dot(&uv.left);
    for i in 0..vu.nrows() {
        vu[[i, i]] += T::one();
    }
    let inner = DenseLu::new(vu).map_err(|_| {
        Error::Factorization("FMMSCHUR: inner capacitance matrix I + VU is singular".into())
    })?;
    // materialize S̃⁻¹ = I − U (I+VU)⁻¹ V  (r×r, r is small)
    let mut s_tilde_inv = Array2::eye(r);
    for k in 0..r {
        let col = uv.right.column(k).to_owned();
        let w = inner.solve_vec(&col);
        let corr = uv.left.dot(&w);
        for i in 0..r {
            s_tilde_inv[[i, k]] -= corr[i];
        }
    }

    let mut schur = SchurApply {
        p0,
        l1,
        m1t,
        s_tilde_inv,
        z_layer: None,
    };

    if let Some(zf) = &parts.z {
        let rz = zf.left.ncols();
        let mut y = Array2::zeros((n, rz));
        for k in 0..rz {
            let col = zf.left.column(k).to_owned();
            y.column_mut(k).assign(&schur.apply_inner(&col));
        }
        let mut g = zf.right.dot(&y);
        for i in 0..rz {
            g[[i, i]] += T::one();
        }
        let g_lu = DenseLu::new(g).map_err(|_| {
            Error::Factorization("FMMSCHUR: far-field capacitance matrix is singular".into())
        })?;
        schur.z_layer = Some(ZLayer {
            y,
            vz: zf.right.clone(),
            g_lu,
        });
    }

    Ok(Preconditioner {
        kind: PrecondKind::FmmSchur {
            factor,
            rank_d1: parts.rank_d1,
            rank_schur,
            rank_z: parts.rank_z,
        },
        n,
        cost: 2.0,
        solve: SolveBackend::Schur(Box::new(schur)),
        near: NearOp::Csr(near),
    })
}

/// The FMM-based Schur/low-rank preconditioner.
///
/// Builds `P₀` from the U-list, compresses the level-1 class to rank
/// `rank_d1` by a truncated SVD (`D₁ ≈ L₁M₁ᵀ`), approximates the
/// capacitance matrix `M₁ᵀP₀L₁` at rank `rank_schur` to form
/// `S̃₁⁻¹ = I − U(I + VU)⁻¹V`, composes
/// `(I − P₀L₁S̃₁⁻¹M₁ᵀ)P₀` (two `P₀` applications), and folds in the
/// remaining far field `Z = D − D₀ − D₁` with one more SMW layer at rank
/// `⌈5·log₂(N/s)⌉`.
pub fn build_fmmschur<T: Real>(
    op: &DenseOperator<T>,
    tree: &QuadTree<T>,
    factor: FactorKind,
    rank_d1: usize,
    rank_schur: usize,
    rank_z: Option<usize>,
    moments_d1: Option<usize>,
) -> Result<Preconditioner<T>> {
    let parts = fmmschur_parts(op, tree, rank_d1, rank_z, moments_d1)?;
    build_fmmschur_from_parts(op, tree, &parts, factor, rank_schur)
}

/// One split smoothing step. For Picard: `η⁺ = f − D·η`. For near-field
/// preconditioners: `η⁺ = P(f − D_far·η)` with `D_far·η = D·η − D_near·η`.
pub fn split_smoother_step<T: Real>(
    pre: &Preconditioner<T>,
    op: &DenseOperator<T>,
    f: &Array1<T>,
    eta: &Array1<T>,
) -> Array1<T> {
    match pre.kind {
        PrecondKind::Identity => f - &op.matvec(eta),
        _ => {
            let far = &op.matvec(eta) - &pre.near_matvec(eta);
            pre.apply(&(f - &far))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, CurveSpec};
    use crate::nystrom::{assemble, boundary_data_harmonic};
    use crate::solver::gmres;
    use ndarray_linalg::Solve;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn randv(n: usize, seed: u64) -> Array1<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Array1::from_iter((0..n).map(|_| rng.gen_range(-1.0..1.0)))
    }

    fn flower_op(n: usize) -> DenseOperator<f64> {
        assemble(&build_grid(CurveSpec::Flower { lobes: 4 }, n).unwrap())
    }

    fn tree_of(op: &DenseOperator<f64>, s: usize) -> QuadTree<f64> {
        let pts: Vec<_> = (0..op.len()).map(|j| op.grid.point(j)).collect();
        build_lists(build_tree(&pts, s).unwrap())
    }

    #[test]
    fn identity_kind_is_identity() {
        let p = build_identity::<f64>(16);
        let v = randv(16, 1);
        assert_eq!(p.apply(&v), v);
        assert_eq!(p.cost(), 0.0);
    }

    #[test]
    fn all_kinds_apply_linearly() {
        let op = flower_op(128);
        let tree = tree_of(&op, 8);
        let pres: Vec<Preconditioner<f64>> = vec![
            build_identity(128),
            build_banded(&op, 6).unwrap(),
            build_blockdiag(&op, &tree).unwrap(),
            build_ulist(&op, &tree, FactorKind::ExactLu).unwrap(),
            build_ulist(&op, &tree, FactorKind::Ilu { drop_tol: 1e-3 }).unwrap(),
            build_vlist(&op, &tree, 1, 4, false).unwrap(),
            build_vlist(&op, &tree, 1, 4, true).unwrap(),
            build_fmmschur(&op, &tree, FactorKind::ExactLu, 5, 5, None, None).unwrap(),
        ];
        let x = randv(128, 2);
        let y = randv(128, 3);
        for p in &pres {
            let lhs = p.apply(&(&x * 2.0 + &y * 0.5));
            let rhs = &p.apply(&x) * 2.0 + &p.apply(&y) * 0.5;
            let err = (&lhs - &rhs).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err < 1e-10, "{:?}: {err:e}", p.kind);
        }
    }

    #[test]
    fn banded_full_width_is_exact_inverse() {
        let op = flower_op(64);
        let p = build_banded(&op, 32).unwrap();
        let f = boundary_data_harmonic(&op.grid);
        let rep = gmres(&op, &f.values, 1e-12, 50, Some(&p));
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn banded_zero_width_is_diagonal() {
        let op = flower_op(64);
        let p = build_banded(&op, 0).unwrap();
        let v = randv(64, 4);
        let w = p.apply(&v);
        for i in 0..64 {
            assert!((w[i] - v[i] / (1.0 + op.matrix[[i, i]])).abs() < 1e-13);
        }
    }

    #[test]
    fn blockdiag_single_leaf_is_exact() {
        let op = flower_op(64);
        let pts: Vec<_> = (0..64).map(|j| op.grid.point(j)).collect();
        let tree = build_lists(build_tree(&pts, 64).unwrap());
        let p = build_blockdiag(&op, &tree).unwrap();
        let x = randv(64, 5);
        let ax = op.apply_full(&x);
        let back = p.apply(&ax);
        let err = (&back - &x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-11, "{err:e}");
    }

    #[test]
    fn blockdiag_matches_permuted_block_solve() {
        let g = build_grid(CurveSpec::Ellipse { aspect: 1.0 }, 128).unwrap();
        let op = assemble(&g);
        let tree = tree_of(&op, 16);
        let p = build_blockdiag(&op, &tree).unwrap();
        // oracle: dense solve of I + blockdiag(D)
        let mut a = Array2::<f64>::eye(128);
        for b in tree.leaves() {
            for &i in &tree.boxes[b].points {
                for &j in &tree.boxes[b].points {
                    a[[i, j]] += op.matrix[[i, j]];
                }
            }
        }
        let v = randv(128, 6);
        let want = a.solve_into(v.clone()).unwrap();
        let got = p.apply(&v);
        let err = (&got - &want).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-12, "{err:e}");
    }

    #[test]
    fn ulist_whole_domain_is_exact_inverse() {
        let op = flower_op(64);
        let pts: Vec<_> = (0..64).map(|j| op.grid.point(j)).collect();
        let tree = build_lists(build_tree(&pts, 64).unwrap());
        let p = build_ulist(&op, &tree, FactorKind::ExactLu).unwrap();
        let x = randv(64, 7);
        let back = p.apply(&op.apply_full(&x));
        let err = (&back - &x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10, "{err:e}");
    }

    #[test]
    fn ulist_roundtrip_through_near_matrix() {
        let op = flower_op(128);
        let tree = tree_of(&op, 8);
        let p = build_ulist(&op, &tree, FactorKind::ExactLu).unwrap();
        let x = randv(128, 8);
        let ax = &x + &p.near_matvec(&x); // (I + D0) x
        let back = p.apply(&ax);
        let err = (&back - &x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10, "{err:e}");
    }

    #[test]
    fn vlist_exact_inverts_its_near_field() {
        let op = flower_op(128);
        let tree = tree_of(&op, 8);
        let p = build_vlist(&op, &tree, 1, 4, true).unwrap();
        let x = randv(128, 9);
        let ax = &x + &p.near_matvec(&x);
        let back = p.apply(&ax);
        let err = (&back - &x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10, "{err:e}");
    }

    #[test]
    fn vlist_compressed_inverts_its_near_field() {
        let op = flower_op(128);
        let tree = tree_of(&op, 8);
        let p = build_vlist(&op, &tree, 2, 4, false).unwrap();
        let x = randv(128, 10);
        let ax = &x + &p.near_matvec(&x);
        let back = p.apply(&ax);
        let err = (&back - &x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10, "{err:e}");
    }

    #[test]
    fn fmmschur_full_rank_is_exact() {
        // with full ranks and an exact P0 the SMW algebra is exact
        let op = flower_op(128);
        let tree = tree_of(&op, 8);
        let p = build_fmmschur(&op, &tree, FactorKind::ExactLu, 128, 128, Some(128), None).unwrap();
        let x = randv(128, 11);
        let ax = op.apply_full(&x);
        let back = p.apply(&ax);
        let denom = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = (&back - &x).iter().fold(0.0f64, |m, v| m.max(v.abs())) / denom;
        assert!(err < 1e-8, "relative error {err:e}");
    }

    #[test]
    fn fmmschur_single_leaf_reduces_to_p0() {
        let op = flower_op(64);
        let pts: Vec<_> = (0..64).map(|j| op.grid.point(j)).collect();
        let tree = build_lists(build_tree(&pts, 64).unwrap());
        let p = build_fmmschur(&op, &tree, FactorKind::ExactLu, 5, 5, None, None).unwrap();
        let x = randv(64, 12);
        let back = p.apply(&op.apply_full(&x));
        let err = (&back - &x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-10, "{err:e}");
        assert_eq!(p.cost(), 2.0);
    }

    #[test]
    fn picard_smoother_fixed_point() {
        let op = flower_op(64);
        let f = boundary_data_harmonic(&op.grid);
        let mut a = op.matrix.clone();
        for i in 0..64 {
            a[[i, i]] += 1.0;
        }
        let eta_star = a.solve_into(f.values.clone()).unwrap();
        let p = build_identity::<f64>(64);
        let next = split_smoother_step(&p, &op, &f.values, &eta_star);
        let err = (&next - &eta_star).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-11, "{err:e}");
        // from zero the Picard step returns f
        let z = Array1::zeros(64);
        let first = split_smoother_step(&p, &op, &f.values, &z);
        assert_eq!(first, f.values);
    }

    #[test]
    fn split_smoother_fixed_point_for_near_field_kinds() {
        let op = flower_op(128);
        let tree = tree_of(&op, 8);
        let f = boundary_data_harmonic(&op.grid);
        let mut a = op.matrix.clone();
        for i in 0..128 {
            a[[i, i]] += 1.0;
        }
        let eta_star = a.solve_into(f.values.clone()).unwrap();
        for p in [
            build_ulist(&op, &tree, FactorKind::ExactLu).unwrap(),
            build_blockdiag(&op, &tree).unwrap(),
            build_banded(&op, 10).unwrap(),
        ] {
            let next = split_smoother_step(&p, &op, &f.values, &eta_star);
            let err = (&next - &eta_star)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err < 1e-9, "{:?}: {err:e}", p.kind);
        }
    }

    #[test]
    fn costs_follow_the_charge_model() {
        let op = flower_op(128);
        let tree = tree_of(&op, 8);
        assert_eq!(build_identity::<f64>(128).cost(), 0.0);
        assert_eq!(build_banded(&op, 4).unwrap().cost(), 1.0);
        assert_eq!(build_blockdiag(&op, &tree).unwrap().cost(), 1.0);
        assert_eq!(
            build_ulist(&op, &tree, FactorKind::ExactLu).unwrap().cost(),
            1.0
        );
        assert_eq!(build_vlist(&op, &tree, 1, 4, false).unwrap().cost(), 1.0);
        assert_eq!(
            build_fmmschur(&op, &tree, FactorKind::ExactLu, 5, 5, None, None)
                .unwrap()
                .cost(),
            2.0
        );
    }

    #[test]
    fn gmres_cost_accounting_with_p0() {
        let op = flower_op(256);
        let tree = tree_of(&op, 8);
        let p = build_ulist(&op, &tree, FactorKind::ExactLu).unwrap();
        let f = boundary_data_harmonic(&op.grid);
        let rep = gmres(&op, &f.values, 1e-12, 300, Some(&p));
        assert!(rep.converged);
        assert!((rep.scaled_matvecs - rep.iterations as f64 * 2.0).abs() <= 1.0);
    }
}
