//! Unrestarted right-preconditioned GMRES with residual history and
//! scaled-matvec accounting.
//!
//! Right preconditioning solves `A·P(y) = f`, `x = P(y)`, so the recurrence
//! residual equals the true unpreconditioned relative residual and one
//! termination rule applies across all preconditioners. Orthogonalization is
//! modified Gram-Schmidt with one reorthogonalization pass when cancellation
//! is detected.

use crate::Real;
use ndarray::Array1;

/// A linear operator `v ↦ A·v`.
pub trait LinearOp<T> {
    fn dim(&self) -> usize;
    fn apply(&self, v: &Array1<T>) -> Array1<T>;
}

/// Closure-backed operator.
pub struct FnOp<T, F: Fn(&Array1<T>) -> Array1<T>> {
    pub n: usize,
    pub f: F,
    _marker: std::marker::PhantomData<T>,
}

impl<T, F: Fn(&Array1<T>) -> Array1<T>> FnOp<T, F> {
    pub fn new(n: usize, f: F) -> Self {
        Self {
            n,
            f,
            _marker: std::marker::PhantomData,
        }
    }
}

impl<T, F: Fn(&Array1<T>) -> Array1<T>> LinearOp<T> for FnOp<T, F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, v: &Array1<T>) -> Array1<T> {
        (self.f)(v)
    }
}

impl<T: Real> LinearOp<T> for crate::nystrom::DenseOperator<T> {
    fn dim(&self) -> usize {
        self.len()
    }
    /// The second-kind system operator `I + D`.
    fn apply(&self, v: &Array1<T>) -> Array1<T> {
        self.apply_full(v)
    }
}

/// Uniform application contract for preconditioners: a linear map together
/// with its scaled-matvec charge per application.
pub trait Precondition<T> {
    fn dim(&self) -> usize;
    fn apply(&self, v: &Array1<T>) -> Array1<T>;
    /// Cost of one application in units of one dense matvec with `D`.
    fn cost(&self) -> f64;
}

/// Outcome of a GMRES solve.
#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    /// Number of Krylov vectors built (= operator applications).
    pub iterations: usize,
    /// Relative residual after each iteration.
    pub residual_history: Vec<T>,
    /// `iterations · (1 + preconditioner cost)`.
    pub scaled_matvecs: f64,
    pub converged: bool,
    pub solution: Array1<T>,
}

impl<T: Real> SolveReport<T> {
    /// Writes the residual history as CSV `iter,relres`.
    pub fn write_residuals_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iter,relres")?;
        for (i, r) in self.residual_history.iter().enumerate() {
            writeln!(w, "{},{:.16e}", i + 1, r)?;
        }
        Ok(())
    }
}

fn dot<T: Real>(a: &Array1<T>, b: &Array1<T>) -> T {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Real>(a: &Array1<T>) -> T {
    dot(a, a).sqrt()
}

/// Solves `A x = f` to relative residual `tol` with unrestarted GMRES,
/// optionally right-preconditioned. `f` must be nonzero; the initial guess
/// is zero.
pub fn gmres<T: Real>(
    op: &dyn LinearOp<T>,
    f: &Array1<T>,
    tol: T,
    max_iter: usize,
    pre: Option<&dyn Precondition<T>>,
) -> SolveReport<T> {
    let n = op.dim();
    assert_eq!(f.len(), n, "rhs length mismatch");
    let pre_cost = pre.map_or(0.0, |p| p.cost());
    let beta = norm(f);
    assert!(beta > T::zero(), "gmres needs a nonzero right-hand side");

    let max_iter = max_iter.min(n);
    let mut basis: Vec<Array1<T>> = Vec::with_capacity(max_iter + 1);
    basis.push(f.mapv(|x| x / beta));
    // Hessenberg columns after Givens, plus rotation pairs and rhs g
    let mut h_cols: Vec<Vec<T>> = Vec::with_capacity(max_iter);
    let mut cs: Vec<T> = Vec::with_capacity(max_iter);
    let mut sn: Vec<T> = Vec::with_capacity(max_iter);
    let mut g: Vec<T> = vec![beta];
    let mut history: Vec<T> = Vec::new();
    let mut converged = false;

    let mut k = 0;
    while k < max_iter {
        let zk = match pre {
            Some(p) => p.apply(&basis[k]),
            None => basis[k].clone(),
        };
        let mut w = op.apply(&zk);
        let w_norm_before = norm(&w);
        let mut h = vec![T::zero(); k + 2];
        for (j, vj) in basis.iter().enumerate().take(k + 1) {
            let hjk = dot(&w, vj);
            h[j] = hjk;
            w.zip_mut_with(vj, |wi, &vi| *wi -= hjk * vi);
        }
        // one reorthogonalization pass when cancellation is detected
        if norm(&w) < T::of(std::f64::consts::FRAC_1_SQRT_2) * w_norm_before {
            for (j, vj) in basis.iter().enumerate().take(k + 1) {
                let corr = dot(&w, vj);
                h[j] += corr;
                w.zip_mut_with(vj, |wi, &vi| *wi -= corr * vi);
            }
        }
        let hk1 = norm(&w);
        h[k + 1] = hk1;
        let happy = hk1 <= T::of(1e-14) * w_norm_before.maximum(T::one());
        if !happy {
            basis.push(w.mapv(|x| x / hk1));
        }

        // apply accumulated rotations, then a new one
        for j in 0..k {
            let t = cs[j] * h[j] + sn[j] * h[j + 1];
            h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
            h[j] = t;
        }
        let (c, s) = givens(h[k], h[k + 1]);
        cs.push(c);
        sn.push(s);
        h[k] = c * h[k] + s * h[k + 1];
        h[k + 1] = T::zero();
        g.push(-s * g[k]);
        g[k] = c * g[k];
        h_cols.push(h);

        let rel = g[k + 1].abs() / beta;
        history.push(rel);
        k += 1;
        if rel <= tol || happy {
            converged = rel <= tol || happy;
            break;
        }
    }

    // back-substitute the k×k triangular system
    let m = k;
    let mut y = vec![T::zero(); m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for (j, yj) in y.iter().enumerate().take(m).skip(i + 1) {
            acc -= h_cols[j][i] * *yj;
        }
        y[i] = acc / h_cols[i][i];
    }
    let mut x = Array1::zeros(n);
    for (j, yj) in y.iter().enumerate() {
        x.zip_mut_with(&basis[j], |xi, &vi| *xi += *yj * vi);
    }
    let solution = match pre {
        Some(p) => p.apply(&x),
        None => x,
    };
    SolveReport {
        iterations: m,
        residual_history: history,
        scaled_matvecs: m as f64 * (1.0 + pre_cost),
        converged,
        solution,
    }
}

fn givens<T: Real>(a: T, b: T) -> (T, T) {
    if b == T::zero() {
        (T::one(), T::zero())
    } else if a.abs() > b.abs() {
        let t = b / a;
        let c = T::one() / (T::one() + t * t).sqrt();
        (c, c * t)
    } else {
        let t = a / b;
        let s = T::one() / (T::one() + t * t).sqrt();
        (s * t, s)
    }
}
