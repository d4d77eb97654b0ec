//! Solver and preconditioner study for the interior 2D Laplace Dirichlet
//! problem, formulated as the second-kind boundary integral equation
//! `(I + D)η = f` with the double-layer operator `D` discretized by the
//! periodic trapezoid (Nyström) rule.
//!
//! The crate provides:
//!
//! - parametric boundary geometries with analytic differential quantities
//!   ([`geometry`]),
//! - dense assembly of the scaled double-layer matrix and interior
//!   evaluation of the layer potential ([`nystrom`]),
//! - spectral restriction/prolongation and projected coarse operators
//!   ([`transfer`]),
//! - an adaptive quadtree with FMM interaction lists, the near-field
//!   sparse matrix and per-level multipole factorizations ([`fmmtree`]),
//! - shared dense/sparse kernels: truncated SVD, threshold ILU,
//!   Sherman-Morrison-Woodbury ([`linalg`]),
//! - the single-grid preconditioner family, including the FMM-based
//!   Schur/low-rank preconditioner ([`precond`]),
//! - two-grid and V-cycle hierarchies usable as GMRES preconditioners
//!   ([`multigrid`]),
//! - unrestarted right-preconditioned GMRES with residual history and a
//!   scaled-matvec cost model ([`solver`]).
//!
//! All numerics are generic over the scalar type through [`Real`];
//! concrete `f64` aliases are exported at the crate root.

use ndarray_linalg::{Lapack, Scalar};
use num_traits::{FloatConst, FromPrimitive, NumAssign};

pub mod fmmtree;
pub mod geometry;
pub mod linalg;
pub mod multigrid;
pub mod nystrom;
pub mod precond;
pub mod solver;
pub mod transfer;

/// Scalar type the whole crate is generic over.
///
/// Combines the `num-traits` arithmetic surface with the LAPACK scalar
/// bound for dense factorizations and the FFT scalar bound. Implemented
/// for `f32` and `f64`.
pub trait Real:
    Lapack
    + Scalar<Real = Self, Complex = num_complex::Complex<Self>>
    + FloatConst
    + NumAssign
    + FromPrimitive
    + PartialOrd
    + rustfft::FftNum
    + std::iter::Sum
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossy conversion from `f64` constants.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    fn maximum(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn minimum(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Top-`k` right singular vectors of the row-major `rows × cols`
    /// matrix, computed from its Gram matrix with LAPACK's `syrk` and the
    /// selected-eigenpair solver `syevr`. Backs the truncated SVD for
    /// matrices too large for the full-SVD drivers (the divide-and-conquer
    /// driver needs a `4n²` workspace and the QR driver is impractically
    /// slow); workspace here is one `cols × cols` matrix. Vectors are
    /// returned leading-first.
    #[doc(hidden)]
    fn top_right_singular_vectors(a: &[Self], rows: usize, cols: usize, k: usize)
        -> Vec<Vec<Self>>;
}

mod lapack_extra {
    use std::os::raw::c_char;
    extern "C" {
        pub fn dsyrk_(
            uplo: *const c_char, trans: *const c_char, n: *const i32, k: *const i32,
            alpha: *const f64, a: *const f64, lda: *const i32,
            beta: *const f64, c: *mut f64, ldc: *const i32,
        );
        pub fn ssyrk_(
            uplo: *const c_char, trans: *const c_char, n: *const i32, k: *const i32,
            alpha: *const f32, a: *const f32, lda: *const i32,
            beta: *const f32, c: *mut f32, ldc: *const i32,
        );
        #[allow(clippy::too_many_arguments)]
        pub fn dsyevr_(
            jobz: *const c_char, range: *const c_char, uplo: *const c_char,
            n: *const i32, a: *mut f64, lda: *const i32,
            vl: *const f64, vu: *const f64, il: *const i32, iu: *const i32,
            abstol: *const f64, m: *mut i32, w: *mut f64,
            z: *mut f64, ldz: *const i32, isuppz: *mut i32,
            work: *mut f64, lwork: *const i32, iwork: *mut i32, liwork: *const i32,
            info: *mut i32,
        );
        #[allow(clippy::too_many_arguments)]
        pub fn ssyevr_(
            jobz: *const c_char, range: *const c_char, uplo: *const c_char,
            n: *const i32, a: *mut f32, lda: *const i32,
            vl: *const f32, vu: *const f32, il: *const i32, iu: *const i32,
            abstol: *const f32, m: *mut i32, w: *mut f32,
            z: *mut f32, ldz: *const i32, isuppz: *mut i32,
            work: *mut f32, lwork: *const i32, iwork: *mut i32, liwork: *const i32,
            info: *mut i32,
        );
    }
}

macro_rules! impl_real {
    ($t:ty, $syrk:ident, $syevr:ident) => {
        impl Real for $t {
            fn top_right_singular_vectors(
                a: &[$t],
                rows: usize,
                cols: usize,
                k: usize,
            ) -> Vec<Vec<$t>> {
                assert_eq!(a.len(), rows * cols);
                let k = k.min(cols);
                if k == 0 {
                    return Vec::new();
                }
                let m = cols as i32;
                let n_inner = rows as i32;
                // row-major `a` viewed column-major is aᵀ (cols × rows), so
                // syrk with trans = 'N' forms the Gram matrix aᵀa
                let mut gram = vec![0 as $t; cols * cols];
                unsafe {
                    lapack_extra::$syrk(
                        &(b'L' as std::os::raw::c_char),
                        &(b'N' as std::os::raw::c_char),
                        &m, &n_inner, &1.0, a.as_ptr(), &m, &0.0,
                        gram.as_mut_ptr(), &m,
                    );
                }
                let il = (cols - k + 1) as i32;
                let iu = cols as i32;
                let mut found = 0i32;
                let mut w = vec![0 as $t; cols];
                let mut z = vec![0 as $t; cols * k];
                let mut isuppz = vec![0i32; 2 * k.max(1)];
                let mut info = 0i32;
                // workspace query, then the real call
                let work_len = -1i32;
                let iwork_len = -1i32;
                let mut work_probe = [0 as $t; 1];
                let mut iwork_probe = [0i32; 1];
                unsafe {
                    lapack_extra::$syevr(
                        &(b'V' as std::os::raw::c_char),
                        &(b'I' as std::os::raw::c_char),
                        &(b'L' as std::os::raw::c_char),
                        &m, gram.as_mut_ptr(), &m,
                        &0.0, &0.0, &il, &iu, &0.0,
                        &mut found, w.as_mut_ptr(), z.as_mut_ptr(), &m,
                        isuppz.as_mut_ptr(),
                        work_probe.as_mut_ptr(), &work_len,
                        iwork_probe.as_mut_ptr(), &iwork_len,
                        &mut info,
                    );
                }
                assert_eq!(info, 0, "syevr workspace query failed");
                let lwork = work_probe[0] as i32;
                let liwork = iwork_probe[0];
                let mut work = vec![0 as $t; lwork as usize];
                let mut iwork = vec![0i32; liwork as usize];
                unsafe {
                    lapack_extra::$syevr(
                        &(b'V' as std::os::raw::c_char),
                        &(b'I' as std::os::raw::c_char),
                        &(b'L' as std::os::raw::c_char),
                        &m, gram.as_mut_ptr(), &m,
                        &0.0, &0.0, &il, &iu, &0.0,
                        &mut found, w.as_mut_ptr(), z.as_mut_ptr(), &m,
                        isuppz.as_mut_ptr(),
                        work.as_mut_ptr(), &lwork,
                        iwork.as_mut_ptr(), &liwork,
                        &mut info,
                    );
                }
                assert_eq!(info, 0, "syevr failed with info {info}");
                assert_eq!(found as usize, k);
                // eigenvalues come ascending; return leading vectors first
                (0..k)
                    .rev()
                    .map(|j| z[j * cols..(j + 1) * cols].to_vec())
                    .collect()
            }
        }
    };
}

impl_real!(f32, ssyrk_, ssyevr_);
impl_real!(f64, dsyrk_, dsyevr_);

/// Errors produced by construction and factorization entry points.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid curve specification: {0}")]
    InvalidCurve(String),
    #[error("invalid grid size {n}: {reason}")]
    InvalidGridSize { n: usize, reason: String },
    #[error("invalid coarsening from {n} to {m}: {reason}")]
    InvalidCoarsening { n: usize, m: usize, reason: String },
    #[error("quadtree construction failed: {0}")]
    Tree(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Default-precision aliases.
pub type BoundaryGrid64 = geometry::BoundaryGrid<f64>;
pub type CurveSpec64 = geometry::CurveSpec<f64>;
pub type DenseOperator64 = nystrom::DenseOperator<f64>;
pub type QuadTree64 = fmmtree::QuadTree<f64>;
pub type Preconditioner64 = precond::Preconditioner<f64>;
pub type Hierarchy64 = multigrid::Hierarchy<f64>;
pub type SolveReport64 = solver::SolveReport<f64>;
